#include "cfreq/errors.hpp"
#include "cfreq/park.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace cfreq;

namespace {

std::vector<double> times(std::size_t n, double dt)
{
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = static_cast<double>(i) * dt;
    }
    return t;
}

}  // namespace

TEST_CASE("round trip abc -> dq0 -> abc on random balanced signals")
{
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> a(0.1, 2.0), ph(-3.0, 3.0), f(40.0, 70.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const auto t = times(40, 2e-4);
        const double amp = a(rng), phi = ph(rng), freq = f(rng);
        AbcSamples abc;
        for (double ti : t) {
            const double w = 2.0 * std::numbers::pi * freq * ti + phi;
            abc.a.push_back(amp * std::cos(w));
            abc.b.push_back(amp * std::cos(w - 2.0 * std::numbers::pi / 3.0));
            abc.c.push_back(amp * std::cos(w + 2.0 * std::numbers::pi / 3.0));
        }
        const auto frame = frame_angles(t, 60.0, ph(rng));
        const AbcSamples back = dq0_to_abc(abc_to_dq0(abc, frame), frame);
        for (std::size_t i = 0; i < t.size(); ++i) {
            worst = std::max({worst, std::abs(back.a[i] - abc.a[i]), std::abs(back.b[i] - abc.b[i]),
                              std::abs(back.c[i] - abc.c[i])});
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("a cosine at the frame frequency has a constant Park vector and no zero sequence")
{
    const auto t = times(500, 1e-4);
    const std::vector<double> u(t.size(), 0.0), th(t.size(), 0.3);
    const AbcSamples abc = abc_synthesize(t, u, th, 60.0);
    const Dq0Samples dq = abc_to_dq0(abc, frame_angles(t, 60.0));
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(dq.d[i] == doctest::Approx(std::cos(0.3)).epsilon(1e-12));
        CHECK(dq.q[i] == doctest::Approx(std::sin(0.3)).epsilon(1e-12));
        CHECK(std::abs(dq.o[i]) < 1e-12);
    }
}

TEST_CASE("the Park vector magnitude tracks amplitude modulation")
{
    const auto t = times(2000, 1e-4);
    std::vector<double> u(t.size()), th(t.size(), -0.2);
    for (std::size_t i = 0; i < t.size(); ++i) {
        u[i] = 0.1 * std::sin(2.0 * std::numbers::pi * 2.0 * t[i]);
    }
    const Dq0Samples dq = abc_to_dq0(abc_synthesize(t, u, th, 50.0, 0.4), frame_angles(t, 50.0, 0.4));
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(std::hypot(dq.d[i], dq.q[i]) == doctest::Approx(std::exp(u[i])).epsilon(1e-12));
        CHECK(std::atan2(dq.q[i], dq.d[i]) == doctest::Approx(-0.2).epsilon(1e-12));
    }
}

TEST_CASE("the transform is power invariant")
{
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    AbcSamples v, i;
    for (int k = 0; k < 10; ++k) {
        v.a.push_back(u(rng)); v.b.push_back(u(rng)); v.c.push_back(u(rng));
        i.a.push_back(u(rng)); i.b.push_back(u(rng)); i.c.push_back(u(rng));
    }
    std::vector<double> frame(10);
    for (auto& f : frame) {
        f = 3.0 * u(rng);
    }
    const Dq0Samples vd = abc_to_dq0(v, frame), id = abc_to_dq0(i, frame);
    for (std::size_t k = 0; k < 10; ++k) {
        const double p_abc = v.a[k] * i.a[k] + v.b[k] * i.b[k] + v.c[k] * i.c[k];
        const double p_dq0 = vd.d[k] * id.d[k] + vd.q[k] * id.q[k] + vd.o[k] * id.o[k];
        CHECK(p_dq0 == doctest::Approx(p_abc).epsilon(1e-12));
    }
}

TEST_CASE("length mismatches are rejected")
{
    AbcSamples abc{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
    CHECK_THROWS_AS(abc_to_dq0(abc, {0.0}), InputError);
    abc.c.pop_back();
    CHECK_THROWS_AS(abc_to_dq0(abc, {0.0, 0.1}), InputError);
}
