#include "cfreq/errors.hpp"
#include "cfreq/estimators.hpp"
#include "cfreq/runner.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace cfreq;

namespace {

TrajectoryWindow window_from(const RunResult& r)
{
    const std::size_t n = r.samples.front().v.size();
    std::vector<double> time;
    std::vector<bool> event;
    std::vector<std::vector<double>> v(n), theta(n);
    for (const auto& s : r.samples) {
        time.push_back(s.t);
        event.push_back(s.is_event());
        for (std::size_t h = 0; h < n; ++h) {
            v[h].push_back(s.v[h]);
            theta[h].push_back(s.theta[h]);
        }
    }
    return make_window(time, v, theta, event);
}

TrajectoryWindow synthetic(std::size_t samples, double dt, double (*u)(double), double (*th)(double))
{
    TrajectoryWindow w;
    w.dt = dt;
    w.u.resize(1);
    w.theta.resize(1);
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) * dt;
        w.time.push_back(t);
        w.u[0].push_back(u(t));
        w.theta[0].push_back(th(t));
        w.event.push_back(false);
    }
    return w;
}

// Short load-5 disconnection run with the load at bus 8 replaced.
RunResult bus8_run(const std::string& name, std::function<void(Model&)> edit)
{
    auto c = test::shipped_case(name);
    edit(c.model);
    RunOptions o = default_options(c);
    o.t_end = 2.5;
    return run_scenario(c, o);
}

}  // namespace

TEST_CASE("finite-difference eta is exact for linear trajectories")
{
    const auto w = synthetic(50, 1e-3, [](double t) { return 0.1 - 0.3 * t; },
                             [](double t) { return 0.2 + 1.7 * t; });
    const EtaSamples e = eta_finite_difference(w);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(e.valid[i]);
        CHECK(e.rho[0][i] == doctest::Approx(-0.3).epsilon(1e-10));
        CHECK(e.omega[0][i] == doctest::Approx(1.7).epsilon(1e-10));
    }
}

TEST_CASE("finite-difference eta error is second order for smooth trajectories")
{
    auto err = [](double dt) {
        const auto w = synthetic(static_cast<std::size_t>(std::lround(1.0 / dt)) + 1, dt,
                                 [](double t) { return 0.05 * std::sin(3.0 * t); },
                                 [](double t) { return 0.4 * std::cos(5.0 * t); });
        const EtaSamples e = eta_finite_difference(w);
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < w.n_samples(); ++i) {
            const double t = w.time[i];
            worst = std::max({worst, std::abs(e.rho[0][i] - 0.15 * std::cos(3.0 * t)),
                              std::abs(e.omega[0][i] + 2.0 * std::sin(5.0 * t))});
        }
        return worst;
    };
    const double e1 = err(2e-3), e2 = err(1e-3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("finite differences never straddle an event")
{
    auto w = synthetic(20, 1e-3, [](double t) { return t < 0.0095 ? 0.0 : 1.0; },
                       [](double) { return 0.0; });
    w.event[10] = true;
    const EtaSamples e = eta_finite_difference(w);
    CHECK_FALSE(e.valid[10]);
    for (std::size_t i = 0; i < 20; ++i) {
        if (e.valid[i]) {
            CHECK(std::abs(e.rho[0][i]) < 1e-12);
        }
    }
}

TEST_CASE("trajectory windows reject malformed input")
{
    CHECK_THROWS_AS(eta_finite_difference(synthetic(2, 1e-3, [](double) { return 0.0; },
                                                    [](double) { return 0.0; })),
                    InputError);
    auto w = synthetic(10, 1e-3, [](double) { return 0.0; }, [](double) { return 0.0; });
    w.time[5] += 1e-4;
    CHECK_THROWS_AS(w.validate(), InputError);
    auto w2 = synthetic(10, 1e-3, [](double) { return 0.0; }, [](double) { return 0.0; });
    w2.u[0].pop_back();
    CHECK_THROWS_AS(w2.validate(), InputError);
}

TEST_CASE("VDL exponent estimation on simulated trajectories")
{
    SUBCASE("impedance load gives exponent two")
    {
        const RunResult r = bus8_run("wscc9", [](Model&) {});
        const VdlSeries s = estimate_vdl_exponents(window_from(r), r.model.ybus, 7, VdlMethod::exact);
        CHECK(s.median_gamma_p == doctest::Approx(2.0).epsilon(1e-4));
        CHECK(s.median_gamma_q == doctest::Approx(2.0).epsilon(1e-4));
    }
    SUBCASE("constant power load gives exponent zero")
    {
        const RunResult r = bus8_run("wscc9", [](Model& m) {
            m.loads[2].kind = LoadKind::constant_power;
        });
        const VdlSeries s = estimate_vdl_exponents(window_from(r), r.model.ybus, 7, VdlMethod::exact);
        CHECK(std::abs(s.median_gamma_p) < 1e-4);
        CHECK(std::abs(s.median_gamma_q) < 1e-4);
    }
    SUBCASE("arbitrary exponents are recovered and setpoint scaling cancels")
    {
        for (double scale : {1.0, 0.6}) {
            const RunResult r = bus8_run("wscc9_vdl", [scale](Model& m) {
                m.vdls[0].gamma_p = 0.7;
                m.vdls[0].gamma_q = 2.4;
                m.vdls[0].demand *= scale;
            });
            const VdlSeries s =
                estimate_vdl_exponents(window_from(r), r.model.ybus, 7, VdlMethod::exact);
            INFO("scale ", scale);
            CHECK(s.median_gamma_p == doctest::Approx(0.7).epsilon(1e-4));
            CHECK(s.median_gamma_q == doctest::Approx(2.4).epsilon(1e-4));
            CHECK(s.windows.size() > 5);
        }
    }
}

TEST_CASE("VDL estimation without excitation is an explicit error")
{
    auto c = test::shipped_case("wscc9_vdl");
    RunOptions o = default_options(c);
    o.events.clear();
    o.t_end = 0.5;
    const RunResult r = run_scenario(c, o);
    const TrajectoryWindow w = window_from(r);
    CHECK_THROWS_AS(estimate_vdl_window(w, r.model.ybus, 7, 0, 100, VdlMethod::exact, 1e-6),
                    EstimationError);
    CHECK_THROWS_AS(estimate_vdl_exponents(w, r.model.ybus, 7, VdlMethod::exact), EstimationError);
    CHECK_THROWS_AS(estimate_vdl_window(w, r.model.ybus, 7, 100, 50, VdlMethod::exact, 1e-6),
                    InputError);
}

TEST_CASE("window estimators match a hand-evaluated oracle")
{
    const Admittance y = build_admittance(Grid(
        {test::bus(1), test::bus(2), test::bus(3)},
        {test::line(1, 2, 0.01, 0.1), test::line(2, 3, 0.02, 0.2, 0.05), test::line(1, 3, 0.0, 0.15)}));
    TrajectoryWindow w;
    w.dt = 1e-3;
    w.u.resize(3);
    w.theta.resize(3);
    for (int i = 0; i <= 100; ++i) {
        const double t = i * 1e-3;
        w.time.push_back(t);
        w.event.push_back(false);
        w.u[0].push_back(0.0);
        w.theta[0].push_back(0.0);
        w.u[1].push_back(-0.02 - 0.01 * t);
        w.theta[1].push_back(-0.1 - 0.3 * t);
        w.u[2].push_back(-0.01 + 0.005 * t);
        w.theta[2].push_back(-0.05 - 0.1 * t);
    }
    // measured injection at the window ends, averaged
    auto row = [&](std::size_t i) {
        BusVoltages v(3);
        for (std::size_t h = 0; h < 3; ++h) {
            v.v[h] = std::exp(w.u[h][i]);
            v.theta[h] = w.theta[h][i];
        }
        return build_injection_matrix(y, v);
    };
    const InjectionMatrix s0 = row(0), s1 = row(100);
    const std::size_t h = 1;
    auto dz = [&](std::size_t k) {
        return cplx(w.u[k][100] - w.u[k][0], w.theta[k][100] - w.theta[k][0]);
    };
    cplx s_h{}, num_exact{}, num_approx{};
    for (std::size_t k = 0; k < 3; ++k) {
        const cplx s_hk = 0.5 * (s0(h, k) + s1(h, k));
        s_h += s_hk;
        num_exact += s_hk * (dz(h) + std::conj(dz(k)));
        num_approx += cplx(0.0, -y.B(h, k)) * (dz(h) + std::conj(dz(k)));
    }
    const double du = dz(h).real();
    const VdlEstimate ex = estimate_vdl_window(w, y, h, 0, 100, VdlMethod::exact, 1e-6);
    const VdlEstimate ap = estimate_vdl_window(w, y, h, 0, 100, VdlMethod::approximate, 1e-6);
    CHECK(ex.gamma_p == doctest::Approx(num_exact.real() / (s_h.real() * du)).epsilon(1e-12));
    CHECK(ex.gamma_q == doctest::Approx(num_exact.imag() / (s_h.imag() * du)).epsilon(1e-12));
    CHECK(ap.gamma_p == doctest::Approx(num_approx.real() / (s_h.real() * du)).epsilon(1e-12));
    CHECK(ap.gamma_q == doctest::Approx(num_approx.imag() / (s_h.imag() * du)).epsilon(1e-12));
    CHECK(ex.t_start == 0.0);
}
