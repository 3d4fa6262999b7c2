#include "cfreq/casefile.hpp"

#include "cfreq/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace cfreq {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
    throw InputError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) {
        fail(path, "expected an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!ok.contains(key)) {
            fail(path + "." + key, "unknown key");
        }
    }
}

double get_num(const json& obj, const std::string& path, const char* key, double fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        fail(path + "." + key, "expected a number");
    }
    return v.get<double>();
}

double req_num(const json& obj, const std::string& path, const char* key)
{
    if (!obj.contains(key)) {
        fail(path + "." + key, "missing required key");
    }
    return get_num(obj, path, key, 0.0);
}

int req_int(const json& obj, const std::string& path, const char* key)
{
    if (!obj.contains(key)) {
        fail(path + "." + key, "missing required key");
    }
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
        fail(path + "." + key, "expected an integer");
    }
    return v.get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_boolean()) {
        fail(path + "." + key, "expected true or false");
    }
    return obj.at(key).get<bool>();
}

std::string get_str(const json& obj, const std::string& path, const char* key,
                    const std::string& fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_string()) {
        fail(path + "." + key, "expected a string");
    }
    return obj.at(key).get<std::string>();
}

const json& get_array(const json& root, const char* key)
{
    static const json empty = json::array();
    if (!root.contains(key)) {
        return empty;
    }
    if (!root.at(key).is_array()) {
        fail(key, "expected an array");
    }
    return root.at(key);
}

LoadKind parse_load_kind(const std::string& s, const std::string& path)
{
    if (s == "constant_power") {
        return LoadKind::constant_power;
    }
    if (s == "constant_current") {
        return LoadKind::constant_current;
    }
    if (s == "constant_admittance") {
        return LoadKind::constant_admittance;
    }
    fail(path, "unknown load model '" + s + "'");
}

Event parse_event(const json& e, const std::string& path, int n_bus)
{
    if (!e.is_object()) {
        fail(path, "expected an object");
    }
    const std::string kind = get_str(e, path, "kind", "");
    Event ev;
    ev.label = get_str(e, path, "label", "");
    auto bus = [&](const char* key) {
        const int b = req_int(e, path, key);
        if (b < 1 || b > n_bus) {
            fail(path + "." + key, "bus " + std::to_string(b) + " does not exist");
        }
        return b;
    };
    if (kind == "load_disconnect") {
        check_keys(e, path, {"kind", "time", "label", "bus", "fraction"});
        ev.kind = EventKind::load_disconnect;
        ev.bus = bus("bus");
        ev.magnitude = get_num(e, path, "fraction", 1.0);
        if (!(ev.magnitude > 0.0 && ev.magnitude <= 1.0)) {
            fail(path + ".fraction", "must lie in (0, 1]");
        }
    } else if (kind == "load_connect") {
        check_keys(e, path, {"kind", "time", "label", "bus", "p", "q", "model"});
        ev.kind = EventKind::load_connect;
        ev.bus = bus("bus");
        ev.power = cplx(req_num(e, path, "p"), get_num(e, path, "q", 0.0));
        ev.load_kind = parse_load_kind(get_str(e, path, "model", "constant_power"), path + ".model");
    } else if (kind == "line_trip" || kind == "line_close") {
        check_keys(e, path, {"kind", "time", "label", "from", "to"});
        ev.kind = kind == "line_trip" ? EventKind::line_trip : EventKind::line_close;
        ev.bus = bus("from");
        ev.bus_to = bus("to");
    } else if (kind == "fault") {
        check_keys(e, path, {"kind", "time", "label", "bus", "g", "b"});
        ev.kind = EventKind::fault_apply;
        ev.bus = bus("bus");
        ev.admittance = cplx(get_num(e, path, "g", 0.0), get_num(e, path, "b", -1000.0));
    } else if (kind == "fault_clear") {
        check_keys(e, path, {"kind", "time", "label", "bus"});
        ev.kind = EventKind::fault_clear;
        ev.bus = bus("bus");
    } else if (kind == "setpoint_step") {
        check_keys(e, path, {"kind", "time", "label", "target", "field", "delta"});
        ev.kind = EventKind::setpoint_step;
        ev.target = get_str(e, path, "target", "");
        ev.field = get_str(e, path, "field", "");
        ev.magnitude = req_num(e, path, "delta");
    } else {
        fail(path + ".kind", "unknown event kind '" + kind + "'");
    }
    ev.time = req_num(e, path, "time");
    if (!(ev.time >= 0.0)) {
        fail(path + ".time", "must be non-negative");
    }
    return ev;
}

GenDispatch parse_dispatch(const json& o, const std::string& path)
{
    GenDispatch d;
    d.slack = get_bool(o, path, "slack", false);
    d.p = d.slack ? get_num(o, path, "p", 0.0) : req_num(o, path, "p");
    d.v = req_num(o, path, "v");
    d.angle = get_num(o, path, "angle", 0.0);
    if (!(d.v > 0.0)) {
        fail(path + ".v", "voltage setpoint must be positive");
    }
    return d;
}

}  // namespace

CaseFile parse_case(const std::string& text, const std::string& origin)
{
    json root;
    try {
        root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw InputError(origin + ": malformed JSON: " + e.what());
    }
    check_keys(root, "case",
               {"name", "description", "system", "buses", "branches", "machines", "loads", "vdls",
                "cigs", "scenario", "output"});

    CaseFile cf;
    cf.name = get_str(root, "case", "name", "case");
    double mva = 100.0;
    double fn = 60.0;
    if (root.contains("system")) {
        const auto& s = root.at("system");
        check_keys(s, "system", {"mva_base", "f_nominal"});
        mva = get_num(s, "system", "mva_base", 100.0);
        fn = get_num(s, "system", "f_nominal", 60.0);
    }

    std::vector<Bus> buses;
    const auto& jb = get_array(root, "buses");
    if (jb.empty()) {
        fail("buses", "at least one bus is required");
    }
    for (std::size_t i = 0; i < jb.size(); ++i) {
        const std::string p = "buses[" + std::to_string(i) + "]";
        check_keys(jb[i], p, {"index", "name", "base_kv", "v0", "theta0", "shunt_g", "shunt_b"});
        Bus b;
        b.index = req_int(jb[i], p, "index");
        b.name = get_str(jb[i], p, "name", "Bus " + std::to_string(b.index));
        b.base_kv = get_num(jb[i], p, "base_kv", 1.0);
        b.v0 = get_num(jb[i], p, "v0", 1.0);
        b.theta0 = get_num(jb[i], p, "theta0", 0.0);
        b.shunt_g = get_num(jb[i], p, "shunt_g", 0.0);
        b.shunt_b = get_num(jb[i], p, "shunt_b", 0.0);
        buses.push_back(b);
    }
    const int n = static_cast<int>(buses.size());
    auto bus_ref = [n](const json& o, const std::string& p, const char* key) {
        const int b = req_int(o, p, key);
        if (b < 1 || b > n) {
            fail(p + "." + key, "bus " + std::to_string(b) + " does not exist");
        }
        return b;
    };

    std::vector<Branch> branches;
    const auto& jbr = get_array(root, "branches");
    for (std::size_t i = 0; i < jbr.size(); ++i) {
        const std::string p = "branches[" + std::to_string(i) + "]";
        check_keys(jbr[i], p, {"from", "to", "r", "x", "b", "tap", "in_service"});
        Branch br;
        br.from = bus_ref(jbr[i], p, "from");
        br.to = bus_ref(jbr[i], p, "to");
        br.r = get_num(jbr[i], p, "r", 0.0);
        br.x = req_num(jbr[i], p, "x");
        br.b = get_num(jbr[i], p, "b", 0.0);
        br.tap = get_num(jbr[i], p, "tap", 1.0);
        br.in_service = get_bool(jbr[i], p, "in_service", true);
        branches.push_back(br);
    }
    try {
        cf.model.grid = Grid(std::move(buses), std::move(branches), mva, fn);
    } catch (const ModelError& e) {
        throw InputError(std::string("grid: ") + e.what());
    }

    std::set<std::string> names;
    auto unique_name = [&names](const std::string& name, const std::string& p) {
        if (!names.insert(name).second) {
            fail(p + ".name", "duplicate device name '" + name + "'");
        }
    };

    const auto& jm = get_array(root, "machines");
    for (std::size_t i = 0; i < jm.size(); ++i) {
        const std::string p = "machines[" + std::to_string(i) + "]";
        const auto& o = jm[i];
        check_keys(o, p,
                   {"name", "bus", "order", "H", "D", "ra", "xd", "xq", "xd_p", "xq_p", "td0_p",
                    "tq0_p", "droop", "tg", "ka", "ta", "p", "v", "slack", "angle"});
        SynMachine m;
        m.bus = bus_ref(o, p, "bus") - 1;
        m.name = get_str(o, p, "name", "G" + std::to_string(i + 1));
        unique_name(m.name, p);
        auto& mp = m.params;
        mp.order = o.contains("order") ? req_int(o, p, "order") : 4;
        if (mp.order != 2 && mp.order != 4) {
            fail(p + ".order", "must be 2 or 4");
        }
        mp.H = req_num(o, p, "H");
        mp.D = get_num(o, p, "D", 0.0);
        mp.ra = get_num(o, p, "ra", 0.0);
        mp.xd_p = req_num(o, p, "xd_p");
        mp.xq_p = get_num(o, p, "xq_p", mp.xd_p);
        mp.xd = get_num(o, p, "xd", mp.xd_p);
        mp.xq = get_num(o, p, "xq", mp.xq_p);
        mp.td0_p = get_num(o, p, "td0_p", 5.0);
        mp.tq0_p = get_num(o, p, "tq0_p", 0.5);
        mp.droop = get_num(o, p, "droop", 0.05);
        mp.tg = get_num(o, p, "tg", 0.5);
        mp.ka = get_num(o, p, "ka", 20.0);
        mp.ta = get_num(o, p, "ta", 0.2);
        if (!(mp.H > 0.0)) {
            fail(p + ".H", "must be positive");
        }
        if (mp.tg > 0.0 && !(mp.droop > 0.0)) {
            fail(p + ".droop", "must be positive when the governor is enabled");
        }
        m.dispatch = parse_dispatch(o, p);
        cf.model.machines.push_back(m);
    }

    const auto& jl = get_array(root, "loads");
    for (std::size_t i = 0; i < jl.size(); ++i) {
        const std::string p = "loads[" + std::to_string(i) + "]";
        const auto& o = jl[i];
        check_keys(o, p, {"name", "bus", "model", "p", "q", "fixed_angle"});
        StaticLoad l;
        l.bus = bus_ref(o, p, "bus") - 1;
        l.name = get_str(o, p, "name", "L" + std::to_string(i + 1));
        unique_name(l.name, p);
        l.kind = parse_load_kind(get_str(o, p, "model", "constant_power"), p + ".model");
        l.demand = cplx(req_num(o, p, "p"), get_num(o, p, "q", 0.0));
        l.fixed_angle = get_bool(o, p, "fixed_angle", false);
        cf.model.loads.push_back(l);
    }

    const auto& jv = get_array(root, "vdls");
    for (std::size_t i = 0; i < jv.size(); ++i) {
        const std::string p = "vdls[" + std::to_string(i) + "]";
        const auto& o = jv[i];
        check_keys(o, p, {"name", "bus", "p", "q", "gamma_p", "gamma_q"});
        Vdl l;
        l.bus = bus_ref(o, p, "bus") - 1;
        l.name = get_str(o, p, "name", "V" + std::to_string(i + 1));
        unique_name(l.name, p);
        l.demand = cplx(req_num(o, p, "p"), get_num(o, p, "q", 0.0));
        l.gamma_p = req_num(o, p, "gamma_p");
        l.gamma_q = req_num(o, p, "gamma_q");
        cf.model.vdls.push_back(l);
    }

    const auto& jc = get_array(root, "cigs");
    for (std::size_t i = 0; i < jc.size(); ++i) {
        const std::string p = "cigs[" + std::to_string(i) + "]";
        const auto& o = jc[i];
        check_keys(o, p,
                   {"name", "bus", "control", "kp", "kq", "kqf", "tp", "tq", "tc", "i_max", "pll_kp",
                    "pll_ki", "p", "v", "slack", "angle"});
        Cig c;
        c.bus = bus_ref(o, p, "bus") - 1;
        c.name = get_str(o, p, "name", "C" + std::to_string(i + 1));
        unique_name(c.name, p);
        const std::string ctl = get_str(o, p, "control", "control1");
        if (ctl == "control1") {
            c.params.control = CigControl::control1;
        } else if (ctl == "control2") {
            c.params.control = CigControl::control2;
        } else {
            fail(p + ".control", "must be control1 or control2");
        }
        auto& cp = c.params;
        cp.kp = get_num(o, p, "kp", cp.kp);
        cp.kq = get_num(o, p, "kq", cp.kq);
        cp.kqf = get_num(o, p, "kqf", cp.kqf);
        cp.tp = get_num(o, p, "tp", cp.tp);
        cp.tq = get_num(o, p, "tq", cp.tq);
        cp.tc = get_num(o, p, "tc", cp.tc);
        cp.i_max = get_num(o, p, "i_max", cp.i_max);
        cp.pll_kp = get_num(o, p, "pll_kp", cp.pll_kp);
        cp.pll_ki = get_num(o, p, "pll_ki", cp.pll_ki);
        c.dispatch = parse_dispatch(o, p);
        cf.model.cigs.push_back(c);
    }

    if (root.contains("scenario")) {
        const auto& s = root.at("scenario");
        check_keys(s, "scenario", {"t_end", "dt", "events"});
        cf.scenario.t_end = get_num(s, "scenario", "t_end", cf.scenario.t_end);
        cf.scenario.dt = get_num(s, "scenario", "dt", cf.scenario.dt);
        if (s.contains("events")) {
            if (!s.at("events").is_array()) {
                fail("scenario.events", "expected an array");
            }
            for (std::size_t i = 0; i < s.at("events").size(); ++i) {
                cf.scenario.events.push_back(parse_event(
                    s.at("events")[i], "scenario.events[" + std::to_string(i) + "]", n));
            }
        }
    }
    if (!(cf.scenario.dt > 0.0)) {
        fail("scenario.dt", "must be positive");
    }
    if (!(cf.scenario.t_end > 0.0)) {
        fail("scenario.t_end", "must be positive");
    }

    if (root.contains("output")) {
        const auto& o = root.at("output");
        check_keys(o, "output", {"record", "noise_sigma", "seed"});
        if (o.contains("record")) {
            if (!o.at("record").is_array()) {
                fail("output.record", "expected an array of bus indices");
            }
            for (const auto& b : o.at("record")) {
                if (!b.is_number_integer() || b.get<int>() < 1 || b.get<int>() > n) {
                    fail("output.record", "invalid bus reference " + b.dump());
                }
                cf.output.record.push_back(b.get<int>());
            }
        }
        cf.output.noise_sigma = get_num(o, "output", "noise_sigma", 0.0);
        if (cf.output.noise_sigma < 0.0) {
            fail("output.noise_sigma", "must be non-negative");
        }
        if (o.contains("seed")) {
            if (!o.at("seed").is_number_unsigned()) {
                fail("output.seed", "expected a non-negative integer");
            }
            cf.output.seed = o.at("seed").get<std::uint64_t>();
        }
    }

    try {
        cf.model.validate();
    } catch (const ModelError& e) {
        throw InputError(e.what());
    }
    return cf;
}

CaseFile load_case(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open case file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_case(buf.str(), path.string());
}

namespace {

double to_double(const std::string& s, const std::string& spec)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw InputError("event '" + spec + "': '" + s + "' is not a number");
    }
    return v;
}

}  // namespace

Event parse_event_spec(const std::string& spec)
{
    static const std::regex load_trip(R"(load(\d+)-trip(?::([^@]+))?@(.+))");
    static const std::regex load_conn(R"(load(\d+)-connect:([^:@]+)(?::([^@]+))?@(.+))");
    static const std::regex line(R"(line(\d+)-(\d+)-(trip|close)@(.+))");
    static const std::regex fault(R"(fault(\d+)(-clear)?@(.+))");
    std::smatch m;
    Event ev;
    ev.label = spec;
    if (std::regex_match(spec, m, load_trip)) {
        ev.kind = EventKind::load_disconnect;
        ev.bus = std::stoi(m[1]);
        ev.magnitude = m[2].matched ? to_double(m[2], spec) : 1.0;
        ev.time = to_double(m[3], spec);
        if (!(ev.magnitude > 0.0 && ev.magnitude <= 1.0)) {
            throw InputError("event '" + spec + "': fraction must lie in (0, 1]");
        }
    } else if (std::regex_match(spec, m, load_conn)) {
        ev.kind = EventKind::load_connect;
        ev.bus = std::stoi(m[1]);
        ev.power = cplx(to_double(m[2], spec), m[3].matched ? to_double(m[3], spec) : 0.0);
        ev.time = to_double(m[4], spec);
    } else if (std::regex_match(spec, m, line)) {
        ev.kind = m[3] == "trip" ? EventKind::line_trip : EventKind::line_close;
        ev.bus = std::stoi(m[1]);
        ev.bus_to = std::stoi(m[2]);
        ev.time = to_double(m[4], spec);
    } else if (std::regex_match(spec, m, fault)) {
        ev.kind = m[2].matched ? EventKind::fault_clear : EventKind::fault_apply;
        ev.bus = std::stoi(m[1]);
        ev.time = to_double(m[3], spec);
    } else {
        throw InputError("cannot parse event '" + spec + "'");
    }
    if (!(ev.time >= 0.0)) {
        throw InputError("event '" + spec + "': time must be non-negative");
    }
    return ev;
}

}  // namespace cfreq
