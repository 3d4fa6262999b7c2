#include "cfreq/devices.hpp"
#include "cfreq/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

using namespace cfreq;

namespace {

constexpr double kOmegaO = 2.0 * std::numbers::pi * 60.0;

template <class States>
States advance(const States& s, const States& ds, double t)
{
    std::array<double, States::kCount> a{}, b{};
    s.write(a);
    ds.write(b);
    for (int i = 0; i < States::kCount; ++i) {
        a[i] += t * b[i];
    }
    return States::read(a);
}

cplx along(cplx vbar, double rho, double omega, double t)
{
    return vbar * std::exp(cplx(rho, omega) * t);
}

// Centered derivative of f(t) at t = 0.
template <class F>
cplx derivative(F f, double h = 1e-6)
{
    return (f(h) - f(-h)) / (2.0 * h);
}

SynMachine random_machine(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SynMachine m;
    m.name = "G";
    m.params.order = 4;
    m.params.ra = 0.01 * u(rng);
    m.params.xd_p = 0.1 + 0.3 * u(rng);
    m.params.xq_p = 0.1 + 0.3 * u(rng);
    m.params.xd = m.params.xd_p + u(rng);
    m.params.xq = m.params.xq_p + u(rng);
    m.params.td0_p = 5.0;
    m.params.tq0_p = 0.5;
    return m;
}

}  // namespace

TEST_CASE("stator currents vanish when the EMFs equal the stator voltages")
{
    SynMachine m = test::classical_machine(0, 3.0, 0.3);
    MachineStates s;
    s.v_delta = 0.7;
    const cplx vbar = std::polar(1.02, 0.1);
    const auto q0 = machine_currents(m, s, vbar);
    s.v_eq_p = q0.vq;
    s.v_ed_p = q0.vd;
    const auto q = machine_currents(m, s, vbar);
    CHECK(std::abs(q.id) < 1e-15);
    CHECK(std::abs(q.iq) < 1e-15);
}

TEST_CASE("single-axis drive gives id = (e'q - vq) / x'd")
{
    SynMachine m = test::classical_machine(0, 3.0, 0.3);
    MachineStates s;
    s.v_delta = 0.4;
    const cplx vbar = std::polar(1.0, 0.2);
    const auto q0 = machine_currents(m, s, vbar);
    s.v_eq_p = q0.vq + 0.3;
    s.v_ed_p = q0.vd;
    const auto q = machine_currents(m, s, vbar);
    CHECK(q.id == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(q.iq) < 1e-14);
}

TEST_CASE("stator currents equal the explicit 2x2 inverse for random parameters")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const SynMachine m = random_machine(rng);
        MachineStates s;
        s.v_delta = 3.0 * u(rng);
        s.v_eq_p = 1.0 + 0.2 * u(rng);
        s.v_ed_p = 0.2 * u(rng);
        const cplx vbar = std::polar(1.0 + 0.1 * u(rng), u(rng));
        const auto q = machine_currents(m, s, vbar);
        // [x'd ra; ra -x'q] [id; iq] = [e'q - vq; e'd - vd]
        const double a = m.params.xd_p, b = m.params.ra, c = m.params.ra, d = -m.params.xq_p;
        const double det = a * d - b * c;
        const double r1 = s.v_eq_p - q.vq, r2 = s.v_ed_p - q.vd;
        CHECK(q.id == doctest::Approx((d * r1 - b * r2) / det).epsilon(1e-12));
        CHECK(q.iq == doctest::Approx((-c * r1 + a * r2) / det).epsilon(1e-12));
    }
}

TEST_CASE("degenerate stator parameters are rejected")
{
    MachineParams p;
    p.ra = 0.0;
    p.xd_p = 0.0;
    CHECK_THROWS_AS(stator_coefficients(p), ParameterError);
}

TEST_CASE("machine rate terms match finite differences along an arbitrary trajectory")
{
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        SynMachine m = random_machine(rng);
        m.params.order = trial % 2 == 0 ? 4 : 2;
        const cplx vbar = std::polar(1.0 + 0.05 * u(rng), 0.3 * u(rng));
        MachineStates s = initialize_machine(m, vbar, cplx(0.8, 0.2), kOmegaO);
        s.v_delta += 0.05 * u(rng);
        s.v_omega = 0.5 * u(rng);
        s.v_eq_p += 0.05 * u(rng);
        s.v_ed_p += 0.05 * u(rng);
        std::array<double, MachineStates::kCount> dxa{};
        machine_derivatives(m, s, vbar, kOmegaO, dxa);
        const MachineStates ds = MachineStates::read(dxa);
        const double rho = 0.3 * u(rng), omega = 2.0 * u(rng);

        auto power = [&](double t) {
            return machine_injection_power(m, advance(s, ds, t), along(vbar, rho, omega, t));
        };
        auto current = [&](double t) {
            return machine_injection_current(m, advance(s, ds, t), along(vbar, rho, omega, t));
        };
        const cplx sdot = derivative(power);
        const cplx idot = derivative(current);
        INFO("order ", m.params.order);
        CHECK(std::abs(machine_power_rate(m, s, ds, vbar).eval(rho, omega) - sdot) <
              1e-6 * std::max(1.0, std::abs(sdot)));
        CHECK(std::abs(machine_current_rate(m, s, ds, vbar).eval(rho, omega) - idot) <
              1e-6 * std::max(1.0, std::abs(idot)));
        const cplx lhs = vbar * std::conj(idot);
        CHECK(std::abs(machine_lhs_terms(m, s, ds, vbar).eval(rho, omega) - lhs) <
              1e-6 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("back-initialized machine sits at equilibrium with consistent rate terms")
{
    auto c = test::shipped_case("wscc9");
    SynMachine m = c.model.machines[1];
    const cplx vbar = std::polar(1.025, 0.16);
    const MachineStates s = initialize_machine(m, vbar, cplx(1.63, 0.07), kOmegaO);
    std::array<double, MachineStates::kCount> dx{};
    machine_derivatives(m, s, vbar, kOmegaO, dx);
    for (double d : dx) {
        CHECK(std::abs(d) < 1e-12);
    }
    CHECK(std::abs(machine_injection_power(m, s, vbar) - cplx(1.63, 0.07)) < 1e-12);
    const RateTerms lhs = machine_lhs_terms(m, s, MachineStates{}, vbar);
    CHECK(std::abs(lhs.constant) < 1e-12);
}

TEST_CASE("second-order machine rates do not depend on flux derivatives")
{
    SynMachine m = test::classical_machine(0, 3.0, 0.25);
    const cplx vbar = std::polar(1.0, 0.1);
    const MachineStates s = initialize_machine(m, vbar, cplx(0.5, 0.1), kOmegaO);
    MachineStates ds;
    ds.v_delta = 0.3;
    const RateTerms a = machine_power_rate(m, s, ds, vbar);
    ds.v_eq_p = 5.0;  // ignored: fluxes are frozen in the second-order model
    std::array<double, MachineStates::kCount> dx{};
    machine_derivatives(m, s, vbar, kOmegaO, dx);
    CHECK(dx[MachineStates::eq_p] == 0.0);
    CHECK(dx[MachineStates::ed_p] == 0.0);
    CHECK(std::abs(a.eval(0.1, 0.2) - machine_power_rate(m, s, MachineStates{.v_delta = 0.3}, vbar).eval(0.1, 0.2)) < 1e-15);
}

TEST_CASE("static load rate terms match finite differences")
{
    const cplx vbar = std::polar(0.97, -0.2);
    const cplx s_inj(-0.9, -0.3);
    for (LoadKind kind : {LoadKind::constant_power, LoadKind::constant_current,
                          LoadKind::constant_admittance}) {
        for (bool fixed : {false, true}) {
            StaticLoad l;
            l.kind = kind;
            l.fixed_angle = fixed;
            initialize_load(l, vbar, s_inj);
            CHECK(std::abs(load_injection_power(l, vbar) - s_inj) < 1e-12);
            const double rho = 0.2, omega = -1.3;
            auto power = [&](double t) { return load_injection_power(l, along(vbar, rho, omega, t)); };
            auto current = [&](double t) { return load_injection_current(l, along(vbar, rho, omega, t)); };
            CHECK(std::abs(load_power_rate(l, vbar).eval(rho, omega) - derivative(power)) < 1e-7);
            CHECK(std::abs(load_current_rate(l, vbar).eval(rho, omega) - derivative(current)) < 1e-7);
            CHECK(std::abs(load_lhs_terms(l, vbar).eval(rho, omega) -
                           vbar * std::conj(derivative(current))) < 1e-7);
        }
    }
}

TEST_CASE("voltage-dependent load rates")
{
    const cplx vbar = std::polar(1.03, 0.05);
    const cplx s_inj(-1.0, -0.35);

    SUBCASE("finite-difference oracle")
    {
        Vdl l;
        l.gamma_p = 1.7;
        l.gamma_q = 0.6;
        initialize_vdl(l, vbar, s_inj);
        auto power = [&](double t) { return vdl_injection_power(l, along(vbar, 0.4, 2.0, t)); };
        auto current = [&](double t) { return vdl_injection_current(l, along(vbar, 0.4, 2.0, t)); };
        CHECK(std::abs(vdl_power_rate(l, vbar).eval(0.4, 2.0) - derivative(power)) < 1e-7);
        CHECK(std::abs(vdl_current_rate(l, vbar).eval(0.4, 2.0) - derivative(current)) < 1e-7);
        // d(s)/dt = (gp p + j gq q) rho
        const cplx expect(l.gamma_p * s_inj.real() * 0.4, l.gamma_q * s_inj.imag() * 0.4);
        CHECK(std::abs(vdl_power_rate(l, vbar).eval(0.4, 2.0) - expect) < 1e-12);
    }
    SUBCASE("equal exponents scale the injection")
    {
        Vdl l;
        l.gamma_p = l.gamma_q = 1.3;
        initialize_vdl(l, vbar, s_inj);
        CHECK(std::abs(vdl_power_rate(l, vbar).eval(0.25, 7.0) - 1.3 * s_inj * 0.25) < 1e-12);
    }
    SUBCASE("exponent two is the impedance load")
    {
        Vdl l;
        l.gamma_p = l.gamma_q = 2.0;
        initialize_vdl(l, vbar, s_inj);
        StaticLoad z;
        z.kind = LoadKind::constant_admittance;
        initialize_load(z, vbar, s_inj);
        for (auto [rho, omega] : {std::pair{0.1, 0.0}, std::pair{-0.3, 4.0}}) {
            CHECK(std::abs(vdl_power_rate(l, vbar).eval(rho, omega) -
                           load_power_rate(z, vbar).eval(rho, omega)) < 1e-12);
            CHECK(std::abs(load_lhs_terms(l, vbar).eval(rho, omega) -
                           load_lhs_terms(z, vbar).eval(rho, omega)) < 1e-12);
        }
    }
}

TEST_CASE("CIG rate terms match finite differences and vanish at equilibrium")
{
    const cplx vbar = std::polar(1.025, 0.08);
    for (CigControl ctl : {CigControl::control1, CigControl::control2}) {
        Cig c;
        c.params.control = ctl;
        c.params.kqf = -0.05;
        const CigStates s0 = initialize_cig(c, vbar, cplx(0.85, 0.1));
        std::array<double, CigStates::kCount> dx{};
        cig_derivatives(c, s0, vbar, dx);
        for (double d : dx) {
            CHECK(std::abs(d) < 1e-12);
        }
        CHECK(std::abs(vbar * std::conj(cig_injection_current(c, s0)) - cplx(0.85, 0.1)) < 1e-12);

        CigStates s = s0;
        s.v_id += 0.05;
        s.v_iq -= 0.03;
        s.v_x_pll += 0.2;
        cig_derivatives(c, s, vbar, dx);
        const CigStates ds = CigStates::read(dx);
        auto power = [&](double t) {
            const cplx v = along(vbar, 0.1, 0.7, t);
            return v * std::conj(cig_injection_current(c, advance(s, ds, t)));
        };
        auto current = [&](double t) { return cig_injection_current(c, advance(s, ds, t)); };
        CHECK(std::abs(cig_power_rate(c, s, ds, vbar).eval(0.1, 0.7) - derivative(power)) < 1e-7);
        CHECK(std::abs(cig_current_rate(c, s, ds).eval(0.1, 0.7) - derivative(current)) < 1e-7);
    }
}

TEST_CASE("measurement PLL")
{
    const double dt = 1e-3;
    SUBCASE("stationary input settles to zero frequency")
    {
        PllEstimator p;
        PllOutput out{};
        for (int i = 0; i < 2000; ++i) {
            out = pll_step(p, std::polar(1.01, 0.3), dt);
        }
        CHECK(std::abs(out.omega) < 1e-9);
        CHECK(std::abs(out.rho) < 1e-9);
    }
    SUBCASE("type-2 loop tracks an angle ramp without steady-state error")
    {
        PllEstimator p;
        PllOutput out{};
        for (int i = 0; i <= 3000; ++i) {
            out = pll_step(p, std::polar(1.0, 0.1 * i * dt), dt);
        }
        CHECK(out.omega == doctest::Approx(0.1).epsilon(1e-6));
    }
    SUBCASE("settles within about 100 ms after a frequency step")
    {
        PllEstimator p;
        double theta = 0.0;
        double at_150ms = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double w = i < 100 ? 0.0 : 1.0;
            theta += w * dt;
            const PllOutput out = pll_step(p, std::polar(1.0, theta), dt);
            if (i == 250) {
                at_150ms = out.omega;
            }
        }
        CHECK(std::abs(at_150ms - 1.0) < 0.05);
    }
    SUBCASE("magnitude ramp is seen as rho")
    {
        PllEstimator p;
        PllOutput out{};
        for (int i = 0; i <= 2000; ++i) {
            out = pll_step(p, std::polar(std::exp(0.02 * i * dt), 0.0), dt);
        }
        CHECK(out.rho == doctest::Approx(0.02).epsilon(1e-3));
    }
}
