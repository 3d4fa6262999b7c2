#include "cfreq/park.hpp"

#include "cfreq/errors.hpp"
#include "cfreq/kernels.hpp"

#include <cmath>
#include <numbers>

namespace cfreq {

namespace {

void trig(const std::vector<double>& angle, std::vector<double>& c, std::vector<double>& s)
{
    c.resize(angle.size());
    s.resize(angle.size());
    for (std::size_t i = 0; i < angle.size(); ++i) {
        c[i] = std::cos(angle[i]);
        s[i] = std::sin(angle[i]);
    }
}

}  // namespace

std::vector<double> frame_angles(const std::vector<double>& time, double f_o, double theta0)
{
    std::vector<double> out(time.size());
    const double w = 2.0 * std::numbers::pi * f_o;
    for (std::size_t i = 0; i < time.size(); ++i) {
        out[i] = w * time[i] + theta0;
    }
    return out;
}

AbcSamples abc_synthesize(const std::vector<double>& time, const std::vector<double>& u,
                          const std::vector<double>& theta, double f_o, double theta0)
{
    if (u.size() != time.size() || theta.size() != time.size()) {
        throw InputError("abc_synthesize: trajectory lengths differ");
    }
    Dq0Samples dq0;
    dq0.d.resize(time.size());
    dq0.q.resize(time.size());
    dq0.o.assign(time.size(), 0.0);
    for (std::size_t i = 0; i < time.size(); ++i) {
        const double v = std::exp(u[i]);
        dq0.d[i] = v * std::cos(theta[i]);
        dq0.q[i] = v * std::sin(theta[i]);
    }
    return dq0_to_abc(dq0, frame_angles(time, f_o, theta0));
}

Dq0Samples abc_to_dq0(const AbcSamples& abc, const std::vector<double>& theta_o)
{
    const std::size_t n = abc.size();
    if (abc.b.size() != n || abc.c.size() != n || theta_o.size() != n) {
        throw InputError("abc_to_dq0: sample lengths differ");
    }
    std::vector<double> c, s;
    trig(theta_o, c, s);
    Dq0Samples out;
    out.d.resize(n);
    out.q.resize(n);
    out.o.resize(n);
    simd::active_kernels().park_forward(abc.a.data(), abc.b.data(), abc.c.data(), c.data(),
                                        s.data(), out.d.data(), out.q.data(), out.o.data(), n);
    return out;
}

AbcSamples dq0_to_abc(const Dq0Samples& dq0, const std::vector<double>& theta_o)
{
    const std::size_t n = dq0.size();
    if (dq0.q.size() != n || dq0.o.size() != n || theta_o.size() != n) {
        throw InputError("dq0_to_abc: sample lengths differ");
    }
    std::vector<double> c, s;
    trig(theta_o, c, s);
    AbcSamples out;
    out.a.resize(n);
    out.b.resize(n);
    out.c.resize(n);
    simd::active_kernels().park_inverse(dq0.d.data(), dq0.q.data(), dq0.o.data(), c.data(),
                                        s.data(), out.a.data(), out.b.data(), out.c.data(), n);
    return out;
}

}  // namespace cfreq
