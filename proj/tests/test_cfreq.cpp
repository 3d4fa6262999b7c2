#include "cfreq/cfreq.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cfreq;

namespace {

struct Prepared {
    Model model;
    SystemState state;
    CfSnapshot snap;
};

// Shipped case with every load switched to `kind`, moved off equilibrium.
Prepared prepare(const std::string& name, std::uint64_t seed,
                 std::optional<LoadKind> kind = std::nullopt)
{
    auto c = test::shipped_case(name);
    if (kind) {
        for (auto& l : c.model.loads) {
            l.kind = *kind;
        }
    }
    Prepared p{c.model, {}, {}};
    const SystemState eq = solve_power_flow(p.model);
    p.state = test::perturbed_state(p.model, eq, seed);
    p.snap = make_snapshot(p.model, p.state);
    return p;
}

double max_diff(const ComplexFrequency& a, const ComplexFrequency& b)
{
    return std::max((a.rho - b.rho).cwiseAbs().maxCoeff(), (a.omega - b.omega).cwiseAbs().maxCoeff());
}

double max_eta(const ComplexFrequency& cf)
{
    return std::max(cf.rho.cwiseAbs().maxCoeff(), cf.omega.cwiseAbs().maxCoeff());
}

std::vector<cplx> network_sdot(const InjectionMatrix& S, const ComplexFrequency& cf)
{
    std::vector<cplx> out(S.size());
    for (std::size_t h = 0; h < S.size(); ++h) {
        for (std::size_t k = 0; k < S.size(); ++k) {
            out[h] += S(h, k) * (cf.eta(h) + std::conj(cf.eta(k)));
        }
    }
    return out;
}

ComplexFrequency random_cf(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ComplexFrequency cf = ComplexFrequency::zeros(n);
    for (std::size_t h = 0; h < n; ++h) {
        cf.rho[static_cast<Eigen::Index>(h)] = 0.1 * u(rng);
        cf.omega[static_cast<Eigen::Index>(h)] = u(rng);
    }
    return cf;
}

}  // namespace

TEST_CASE("equilibrium has zero complex frequency in every form")
{
    for (const char* name : {"wscc9", "wscc9_cig", "wscc9_vdl", "wscc9_2cig_2"}) {
        auto c = test::shipped_case(name);
        const SystemState eq = solve_power_flow(c.model);
        const CfSnapshot snap = make_snapshot(c.model, eq);
        INFO(name);
        CHECK(max_eta(solve_cf_power_form(snap)) < 1e-10);
        CHECK(max_eta(solve_cf_compact_form(snap)) < 1e-10);
        CHECK(max_eta(solve_cf_current_form(snap)) < 1e-10);
    }
}

TEST_CASE("the three formulations agree on random consistent snapshots")
{
    const std::vector<std::pair<std::string, std::optional<LoadKind>>> variants = {
        {"wscc9", std::nullopt},
        {"wscc9", LoadKind::constant_power},
        {"wscc9", LoadKind::constant_current},
        {"wscc9_cig", std::nullopt},
        {"wscc9_vdl", std::nullopt},
        {"wscc9_2cig_2", std::nullopt},
    };
    for (const auto& [name, kind] : variants) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const Prepared p = prepare(name, seed, kind);
            const ComplexFrequency a = solve_cf_power_form(p.snap);
            const ComplexFrequency b = solve_cf_compact_form(p.snap);
            const ComplexFrequency c = solve_cf_current_form(p.snap);
            INFO(name, " seed ", seed);
            REQUIRE_FALSE(a.singular);
            CHECK(max_eta(a) > 1e-3);
            CHECK(max_diff(a, b) < 1e-10);
            CHECK(max_diff(a, c) < 1e-10);
            for (double r : sdot_residual(p.snap, a)) {
                CHECK(r < 1e-10);
            }
        }
    }
}

TEST_CASE("solved frequencies match finite differences of the bus voltages")
{
    auto c = test::shipped_case("wscc9");
    const SystemState eq = solve_power_flow(c.model);
    SystemState s = test::perturbed_state(c.model, eq, 3, 0.01);
    const double dt = 1e-4;
    const SystemState prev = s;
    s = step(c.model, s, dt);
    const SystemState next = step(c.model, s, dt);
    const ComplexFrequency cf = solve_cf_power_form(make_snapshot(c.model, s));
    const auto v0 = prev.phasors(), v1 = s.phasors(), v2 = next.phasors();
    double worst = 0.0, scale = 0.0;
    for (std::size_t h = 0; h < v1.size(); ++h) {
        const cplx fd = (v2[h] - v0[h]) / (2.0 * dt);
        const cplx an = v1[h] * cf.eta(h);
        worst = std::max(worst, std::abs(fd - an));
        scale = std::max(scale, std::abs(an));
    }
    CHECK(worst / scale < 1e-3);
}

TEST_CASE("singular systems are flagged")
{
    CfLinearSystem sys{Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Ones(4)};
    sys.A(0, 0) = 1.0;
    CHECK(solve_linear_system(sys).singular);
    sys.A = Eigen::MatrixXd::Identity(4, 4);
    const ComplexFrequency ok = solve_linear_system(sys);
    CHECK_FALSE(ok.singular);
    CHECK(ok.rho[1] == doctest::Approx(1.0));
    CHECK(ok.omega[1] == doctest::Approx(1.0));
}

TEST_CASE("special-case identities hold at the matching buses")
{
    SUBCASE("impedance loads, machine buses are not applicable")
    {
        const Prepared p = prepare("wscc9", 7);
        const ComplexFrequency cf = solve_cf_power_form(p.snap);
        const auto rep = special_case_residuals(p.model, p.snap, cf);
        const auto cci = current_complex_frequency(p.snap, cf);
        for (std::size_t h : {0u, 1u, 2u}) {
            CHECK(rep[h].kind == SpecialCase::not_applicable);
        }
        for (std::size_t h : {4u, 5u, 7u}) {
            CHECK(rep[h].kind == SpecialCase::constant_admittance);
            CHECK(std::abs(rep[h].residual) < 1e-8);
            REQUIRE(cci.defined[h]);
            CHECK(std::abs(cci.xi[h] - cf.eta(h)) < 1e-8);
        }
        for (std::size_t h : {3u, 6u, 8u}) {
            CHECK(rep[h].kind == SpecialCase::constant_current);
            CHECK(std::abs(rep[h].residual) < 1e-8);
        }
    }
    SUBCASE("constant power loads")
    {
        const Prepared p = prepare("wscc9", 8, LoadKind::constant_power);
        const ComplexFrequency cf = solve_cf_power_form(p.snap);
        const auto rep = special_case_residuals(p.model, p.snap, cf);
        for (std::size_t h : {4u, 5u, 7u}) {
            CHECK(rep[h].kind == SpecialCase::constant_power);
            CHECK(std::abs(rep[h].residual) < 1e-8);
        }
    }
    SUBCASE("constant current magnitude and power factor")
    {
        const Prepared p = prepare("wscc9", 9, LoadKind::constant_current);
        const ComplexFrequency cf = solve_cf_power_form(p.snap);
        const auto rep = special_case_residuals(p.model, p.snap, cf);
        for (std::size_t h : {4u, 5u, 7u}) {
            CHECK(rep[h].kind == SpecialCase::current_power_factor);
            CHECK(std::abs(rep[h].residual) < 1e-8);
        }
    }
    SUBCASE("voltage-dependent load")
    {
        const Prepared p = prepare("wscc9_vdl", 10);
        const ComplexFrequency cf = solve_cf_power_form(p.snap);
        const auto rep = special_case_residuals(p.model, p.snap, cf);
        CHECK(rep[7].kind == SpecialCase::voltage_dependent);
        CHECK(std::abs(rep[7].residual) < 1e-8);
    }
    CHECK(to_string(SpecialCase::constant_admittance) == "constant admittance");
}

TEST_CASE("network-side split of the power rate")
{
    std::mt19937_64 rng(41);
    const Prepared p = prepare("wscc9", 11);
    SUBCASE("parts add up to the full network kernel")
    {
        const ComplexFrequency cf = random_cf(rng, 9);
        const SdotSplit split = split_sdot_components(p.snap.S, cf);
        const auto full = network_sdot(p.snap.S, cf);
        for (std::size_t h = 0; h < 9; ++h) {
            CHECK(std::abs(split.angle_part[h] + split.magnitude_part[h] - full[h]) < 1e-12);
        }
    }
    SUBCASE("uniform omega with zero rho has no angle part")
    {
        ComplexFrequency cf = ComplexFrequency::zeros(9);
        cf.omega.setConstant(2.5);
        const SdotSplit split = split_sdot_components(p.snap.S, cf);
        for (std::size_t h = 0; h < 9; ++h) {
            CHECK(std::abs(split.angle_part[h]) < 1e-12);
            CHECK(std::abs(split.magnitude_part[h]) < 1e-12);
        }
    }
}

TEST_CASE("frequency divider returns the common speed when all machines agree")
{
    auto c = test::shipped_case("wscc9");
    const SystemState eq = solve_power_flow(c.model);
    Eigen::VectorXd x = eq.x;
    for (std::size_t i = 0; i < c.model.machines.size(); ++i) {
        x[static_cast<Eigen::Index>(c.model.machine_offset(i)) + MachineStates::omega] = 0.37;
    }
    const Eigen::VectorXd w = fdf_estimate(c.model, x);
    REQUIRE(w.size() == 9);
    CHECK((w.array() - 0.37).abs().maxCoeff() < 1e-12);
}

TEST_CASE("approximate forms are exact on a flat lossless-consistent snapshot")
{
    // Flat profile: s_hk = conj(Y_hk) and Y diag(v) = Y, so app1 and idot app1 are exact.
    std::mt19937_64 rng(42);
    auto c = test::shipped_case("wscc9");
    c.model.rebuild_admittance();
    const Admittance& y = c.model.ybus;
    CfSnapshot snap;
    snap.vbar.assign(9, cplx(1.0, 0.0));
    snap.S = build_injection_matrix(y, BusVoltages(9));
    snap.Ibar = current_matrix(y, snap.vbar);
    const ComplexFrequency cf = random_cf(rng, 9);
    const auto sdot = network_sdot(snap.S, cf);
    snap.rates.resize(9);
    for (Eigen::Index h = 0; h < 9; ++h) {
        snap.rates[h].power.constant = sdot[h];
        cplx idot{};
        for (Eigen::Index k = 0; k < 9; ++k) {
            idot += snap.Ibar(h, k) * cf.eta(k);
        }
        snap.rates[h].current.constant = idot;
    }
    const ApproxReport r = approx_forms(y, snap, cf);
    CHECK(r.exact < 1e-12);
    CHECK(r.app1 < 1e-12);
    CHECK(r.idot_exact < 1e-12);
    CHECK(r.idot_app1 < 1e-12);
    CHECK(r.app2 > 1e-6);  // conductances are dropped
}

TEST_CASE("approximation residuals along a WSCC trajectory are ranked")
{
    const Prepared p = prepare("wscc9", 12, std::nullopt);
    const ComplexFrequency cf = solve_cf_power_form(p.snap);
    const ApproxReport r = approx_forms(p.model.ybus, p.snap, cf);
    CHECK(r.exact < 1e-10);
    CHECK(r.idot_exact < 1e-10);
    CHECK(r.exact < r.app1);
    MESSAGE("app1 ", r.app1, " app2 ", r.app2, " s1 angle ", r.s1_angle, " s1 magnitude ", r.s1_magnitude);
}

TEST_CASE("impedance-only network: load-bus frequencies follow from their neighbours")
{
    // One machine behind a line feeding two impedance loads.
    Model m;
    m.grid = Grid({test::bus(1), test::bus(2), test::bus(3)},
                  {test::line(1, 2, 0.01, 0.1, 0.02), test::line(2, 3, 0.02, 0.15, 0.02),
                   test::line(1, 3, 0.015, 0.12)});
    m.rebuild_admittance();
    SynMachine g = test::classical_machine(0, 4.0, 0.2);
    g.params.order = 4;
    g.params.xd = 1.0;
    g.params.xq = 0.8;
    g.params.xq_p = 0.3;
    g.dispatch.slack = true;
    g.dispatch.v = 1.02;
    m.machines = {g};
    for (int b : {1, 2}) {
        StaticLoad l;
        l.bus = b;
        l.kind = LoadKind::constant_admittance;
        l.demand = cplx(0.4, 0.15);
        m.loads.push_back(l);
    }
    const SystemState eq = solve_power_flow(m);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SystemState s = test::perturbed_state(m, eq, seed, 0.05);
        const CfSnapshot snap = make_snapshot(m, s);
        const ComplexFrequency cf = solve_cf_power_form(snap);
        const auto rep = special_case_residuals(m, snap, cf);
        for (std::size_t h : {1u, 2u}) {
            CHECK(rep[h].kind == SpecialCase::constant_admittance);
            CHECK(std::abs(rep[h].residual) < 1e-8);
        }
    }
}
