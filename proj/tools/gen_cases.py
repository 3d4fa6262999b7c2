"""Regenerates the shipped WSCC 9-bus case files in ../cases."""
import copy
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "cases"

BUSES = [
    {"index": 1, "name": "Bus 1", "base_kv": 16.5},
    {"index": 2, "name": "Bus 2", "base_kv": 18.0},
    {"index": 3, "name": "Bus 3", "base_kv": 13.8},
] + [{"index": k, "name": f"Bus {k}", "base_kv": 230.0} for k in range(4, 10)]

BRANCHES = [
    {"from": 1, "to": 4, "r": 0.0, "x": 0.0576, "b": 0.0},
    {"from": 2, "to": 7, "r": 0.0, "x": 0.0625, "b": 0.0},
    {"from": 3, "to": 9, "r": 0.0, "x": 0.0586, "b": 0.0},
    {"from": 4, "to": 5, "r": 0.010, "x": 0.085, "b": 0.176},
    {"from": 4, "to": 6, "r": 0.017, "x": 0.092, "b": 0.158},
    {"from": 5, "to": 7, "r": 0.032, "x": 0.161, "b": 0.306},
    {"from": 6, "to": 9, "r": 0.039, "x": 0.170, "b": 0.358},
    {"from": 7, "to": 8, "r": 0.0085, "x": 0.072, "b": 0.149},
    {"from": 8, "to": 9, "r": 0.0119, "x": 0.1008, "b": 0.209},
]

CONTROLS = {"D": 2.0, "droop": 0.05, "tg": 0.5, "ka": 20.0, "ta": 0.2}

MACHINES = [
    dict(name="G1", bus=1, order=4, H=23.64, ra=0.0, xd=0.146, xd_p=0.0608, xq=0.0969,
         xq_p=0.0969, td0_p=8.96, tq0_p=0.31, v=1.04, slack=True, **CONTROLS),
    dict(name="G2", bus=2, order=4, H=6.4, ra=0.0, xd=0.8958, xd_p=0.1198, xq=0.8645,
         xq_p=0.1969, td0_p=6.0, tq0_p=0.535, p=1.63, v=1.025, **CONTROLS),
    dict(name="G3", bus=3, order=4, H=3.01, ra=0.0, xd=1.3125, xd_p=0.1813, xq=1.2578,
         xq_p=0.25, td0_p=5.89, tq0_p=0.6, p=0.85, v=1.025, **CONTROLS),
]

LOADS = [
    {"name": "L5", "bus": 5, "model": "constant_admittance", "p": 1.25, "q": 0.50},
    {"name": "L6", "bus": 6, "model": "constant_admittance", "p": 0.90, "q": 0.30},
    {"name": "L8", "bus": 8, "model": "constant_admittance", "p": 1.00, "q": 0.35},
]

CIG = {"kp": 0.1, "kq": 5.0, "tp": 0.1, "tq": 0.1, "tc": 0.02, "i_max": 2.0,
       "pll_kp": 80.0, "pll_ki": 3200.0}


def base(name, description):
    return {
        "name": name,
        "description": description,
        "system": {"mva_base": 100.0, "f_nominal": 60.0},
        "buses": copy.deepcopy(BUSES),
        "branches": copy.deepcopy(BRANCHES),
        "machines": copy.deepcopy(MACHINES),
        "loads": copy.deepcopy(LOADS),
        "scenario": {"t_end": 10.0, "dt": 0.001, "events": [
            {"time": 1.0, "kind": "load_disconnect", "bus": 5, "label": "load 5 outage"}]},
        "output": {"seed": 1, "noise_sigma": 0.0},
    }


def cig_from(machine, control, kqf=0.0):
    c = {"name": machine["name"].replace("G", "C"), "bus": machine["bus"], "control": control}
    c.update(CIG)
    if control == "control2":
        c["kqf"] = kqf
    c["p"] = machine["p"]
    c["v"] = machine["v"]
    return c


def write(case):
    path = OUT / f"{case['name']}.case"
    path.write_text(json.dumps(case, indent=2) + "\n")


def main():
    OUT.mkdir(exist_ok=True)

    write(base("wscc9", "WSCC 9-bus, fourth-order machines, impedance loads; load 5 outage at t = 1 s"))

    fault = base("wscc9_fault", "WSCC 9-bus; fault at bus 7 at t = 1 s cleared by opening line 5-7")
    fault["scenario"]["events"] = [
        {"time": 1.0, "kind": "fault", "bus": 7, "g": 0.0, "b": -1000.0, "label": "fault at bus 7"},
        {"time": 1.083, "kind": "fault_clear", "bus": 7, "label": "fault cleared"},
        {"time": 1.083, "kind": "line_trip", "from": 5, "to": 7, "label": "line 5-7 opened"},
    ]
    write(fault)

    second = base("wscc9_2nd", "WSCC 9-bus, second-order machines (xq = xq' = xd'); load 5 outage")
    for m in second["machines"]:
        m["order"] = 2
        m["xq"] = m["xq_p"] = m["xd"] = m["xd_p"]
    write(second)

    cig = base("wscc9_cig", "WSCC 9-bus with the unit at bus 3 replaced by a converter; load 5 outage")
    cig["cigs"] = [cig_from(cig["machines"].pop(2), "control1")]
    write(cig)

    for control, kqf in (("control1", 0.0), ("control2", -0.05)):
        two = base(f"wscc9_2cig_{control[-1]}",
                   f"WSCC 9-bus with converters at buses 2 and 3 ({control}); +0.25 pu load at bus 5")
        gens = two["machines"]
        two["cigs"] = [cig_from(gens[1], control, kqf), cig_from(gens[2], control, kqf)]
        del gens[1:]
        two["scenario"]["events"] = [{"time": 1.0, "kind": "load_connect", "bus": 5, "p": 0.25,
                                      "q": 0.0, "model": "constant_power",
                                      "label": "load increase at bus 5"}]
        write(two)

    vdl = base("wscc9_vdl", "WSCC 9-bus with a voltage-dependent load at bus 8; 15% load 5 outage")
    vdl["loads"] = [l for l in vdl["loads"] if l["bus"] != 8]
    vdl["vdls"] = [{"name": "VDL8", "bus": 8, "p": 1.0, "q": 0.35, "gamma_p": 2.0, "gamma_q": 1.5}]
    vdl["scenario"]["events"] = [{"time": 1.0, "kind": "load_disconnect", "bus": 5, "fraction": 0.15,
                                  "label": "15% load 5 outage"}]
    write(vdl)

    highrx = copy.deepcopy(vdl)
    highrx["name"] = "wscc9_vdl_highrx"
    highrx["description"] = "As wscc9_vdl with line resistance equal to reactance (R/X = 1)"
    for br in highrx["branches"]:
        if br["r"] > 0.0:
            br["r"] = br["x"]
    write(highrx)


if __name__ == "__main__":
    main()
