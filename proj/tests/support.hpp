#pragma once

// Shared fixtures for the unit tests: shipped cases, small hand-built
// networks and consistent mid-transient states.

#include "cfreq/casefile.hpp"
#include "cfreq/engine.hpp"

#include <complex>
#include <filesystem>
#include <random>
#include <string>

#ifndef CFREQ_CASES_DIR
#error "CFREQ_CASES_DIR must point at the shipped case files"
#endif

namespace cfreq::test {

inline CaseFile shipped_case(const std::string& name)
{
    return load_case(std::filesystem::path(CFREQ_CASES_DIR) / (name + ".case"));
}

inline Bus bus(int index)
{
    Bus b;
    b.index = index;
    b.name = "B" + std::to_string(index);
    return b;
}

inline Branch line(int from, int to, double r, double x, double b = 0.0, double tap = 1.0)
{
    Branch br;
    br.from = from;
    br.to = to;
    br.r = r;
    br.x = x;
    br.b = b;
    br.tap = tap;
    return br;
}

/// Classical (second-order, xq = xd') machine without governor or AVR.
inline SynMachine classical_machine(int bus0, double H, double xdp, double D = 0.0)
{
    SynMachine m;
    m.bus = bus0;
    m.name = "G" + std::to_string(bus0 + 1);
    m.params.order = 2;
    m.params.H = H;
    m.params.D = D;
    m.params.ra = 0.0;
    m.params.xd = xdp;
    m.params.xq = xdp;
    m.params.xd_p = xdp;
    m.params.xq_p = xdp;
    m.params.tg = 0.0;
    m.params.ta = 0.0;
    return m;
}

/// Single machine against a very stiff second machine acting as an infinite bus.
inline Model smib(double D = 0.0, double p = 0.5)
{
    Model m;
    m.grid = Grid({bus(1), bus(2)}, {line(1, 2, 0.0, 0.3)});
    m.rebuild_admittance();
    SynMachine g = classical_machine(0, 3.0, 0.2, D);
    g.dispatch.p = p;
    g.dispatch.v = 1.0;
    SynMachine inf = classical_machine(1, 1e6, 1e-3);
    inf.dispatch.slack = true;
    inf.dispatch.v = 1.0;
    m.machines = {g, inf};
    return m;
}

/// Algebraically consistent state with randomly perturbed machine states and fresh xdot.
inline SystemState perturbed_state(const Model& model, const SystemState& eq, std::uint64_t seed,
                                   double size = 0.02)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SystemState s = eq;
    for (std::size_t i = 0; i < model.machines.size(); ++i) {
        const auto o = static_cast<Eigen::Index>(model.machine_offset(i));
        s.x[o + MachineStates::delta] += size * u(rng);
        s.x[o + MachineStates::omega] += 10.0 * size * u(rng);
        s.x[o + MachineStates::eq_p] += size * u(rng);
        s.x[o + MachineStates::ed_p] += size * u(rng);
        s.x[o + MachineStates::pm] += size * u(rng);
        s.x[o + MachineStates::efd] += size * u(rng);
    }
    for (std::size_t i = 0; i < model.cigs.size(); ++i) {
        const auto o = static_cast<Eigen::Index>(model.cig_offset(i));
        for (int k = 0; k < CigStates::kCount; ++k) {
            s.x[o + k] += size * u(rng);
        }
    }
    s = reinitialize_algebraic(model, s);
    s.xdot = eval_f(model, s.x, s.y);
    return s;
}

}  // namespace cfreq::test
