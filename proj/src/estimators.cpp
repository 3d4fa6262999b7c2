#include "cfreq/estimators.hpp"

#include "cfreq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cfreq {

void TrajectoryWindow::validate() const
{
    const std::size_t m = time.size();
    if (theta.size() != u.size()) {
        throw InputError("trajectory window: magnitude and angle bus counts differ");
    }
    for (std::size_t h = 0; h < u.size(); ++h) {
        if (u[h].size() != m || theta[h].size() != m) {
            throw InputError("trajectory window: bus " + std::to_string(h + 1) +
                             " has a different number of samples");
        }
    }
    if (!event.empty() && event.size() != m) {
        throw InputError("trajectory window: event flags do not match the sample count");
    }
    if (!(dt > 0.0)) {
        throw InputError("trajectory window: sample period must be positive");
    }
    for (std::size_t i = 1; i < m; ++i) {
        if (std::abs(time[i] - time[i - 1] - dt) > 1e-6 * dt) {
            throw InputError("trajectory window: non-uniform sampling at t=" +
                             std::to_string(time[i]));
        }
    }
}

TrajectoryWindow make_window(std::vector<double> time, const std::vector<std::vector<double>>& v,
                             std::vector<std::vector<double>> theta, std::vector<bool> event)
{
    TrajectoryWindow w;
    w.dt = time.size() > 1 ? time[1] - time[0] : 0.0;
    w.time = std::move(time);
    w.theta = std::move(theta);
    w.event = std::move(event);
    w.u.resize(v.size());
    for (std::size_t h = 0; h < v.size(); ++h) {
        w.u[h].resize(v[h].size());
        for (std::size_t i = 0; i < v[h].size(); ++i) {
            if (!(v[h][i] > 0.0)) {
                throw NumericError("non-positive voltage magnitude in trajectory");
            }
            w.u[h][i] = std::log(v[h][i]);
        }
    }
    return w;
}

namespace {

bool is_event(const TrajectoryWindow& w, std::size_t i)
{
    return !w.event.empty() && w.event[i];
}

}  // namespace

EtaSamples eta_finite_difference(const TrajectoryWindow& w)
{
    w.validate();
    const std::size_t m = w.n_samples();
    if (m < 3) {
        throw InputError("finite-difference complex frequency needs at least three samples");
    }
    const std::size_t n = w.n_bus();
    EtaSamples out;
    out.rho.assign(n, std::vector<double>(m, 0.0));
    out.omega.assign(n, std::vector<double>(m, 0.0));
    out.valid.assign(m, false);
    for (std::size_t i = 0; i < m; ++i) {
        if (is_event(w, i)) {
            continue;
        }
        const bool has_prev = i > 0 && !is_event(w, i - 1);
        const bool has_next = i + 1 < m && !is_event(w, i + 1);
        std::size_t lo = i;
        std::size_t hi = i;
        if (has_prev && has_next) {
            lo = i - 1;
            hi = i + 1;
        } else if (has_next) {
            hi = i + 1;
        } else if (has_prev) {
            lo = i - 1;
        } else {
            continue;
        }
        const double span = w.time[hi] - w.time[lo];
        for (std::size_t h = 0; h < n; ++h) {
            out.rho[h][i] = (w.u[h][hi] - w.u[h][lo]) / span;
            out.omega[h][i] = (w.theta[h][hi] - w.theta[h][lo]) / span;
        }
        out.valid[i] = true;
    }
    return out;
}

namespace {

// Row h of the injection matrix from measured polar voltages at sample i.
std::vector<cplx> injection_row(const TrajectoryWindow& w, const Admittance& y, std::size_t h,
                                std::size_t i)
{
    const std::size_t n = w.n_bus();
    std::vector<cplx> row(n);
    const cplx vh = std::polar(std::exp(w.u[h][i]), w.theta[h][i]);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx vk = std::polar(std::exp(w.u[k][i]), w.theta[k][i]);
        row[k] = vh * std::conj(y(h, k) * vk);
    }
    return row;
}

double median(std::vector<double> v)
{
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

}  // namespace

VdlEstimate estimate_vdl_window(const TrajectoryWindow& w, const Admittance& y, std::size_t bus,
                                std::size_t i0, std::size_t i1, VdlMethod method,
                                double excitation_floor)
{
    const std::size_t n = w.n_bus();
    if (bus >= n || y.size() != n) {
        throw InputError("vdl estimation: bus or admittance size does not match the trajectory");
    }
    if (!(i0 < i1) || i1 >= w.n_samples()) {
        throw InputError("vdl estimation: invalid window bounds");
    }
    for (std::size_t i = i0; i <= i1; ++i) {
        if (is_event(w, i)) {
            throw EstimationError("window contains an event sample");
        }
    }
    const double du = w.u[bus][i1] - w.u[bus][i0];
    if (!(std::abs(du) >= excitation_floor)) {
        throw EstimationError("insufficient excitation: |delta u| below the floor");
    }

    const auto row0 = injection_row(w, y, bus, i0);
    const auto row1 = injection_row(w, y, bus, i1);
    std::vector<cplx> s_row(n);
    cplx s_h{};
    for (std::size_t k = 0; k < n; ++k) {
        s_row[k] = 0.5 * (row0[k] + row1[k]);
        s_h += s_row[k];
    }
    if (method == VdlMethod::approximate) {
        for (std::size_t k = 0; k < n; ++k) {
            s_row[k] = cplx(0.0, -y.B(static_cast<Eigen::Index>(bus), static_cast<Eigen::Index>(k)));
        }
    }
    const cplx dz_h(du, w.theta[bus][i1] - w.theta[bus][i0]);
    cplx num{};
    for (std::size_t k = 0; k < n; ++k) {
        const cplx dz_k(w.u[k][i1] - w.u[k][i0], w.theta[k][i1] - w.theta[k][i0]);
        num += s_row[k] * (dz_h + std::conj(dz_k));
    }
    if (s_h.real() == 0.0 || s_h.imag() == 0.0) {
        throw EstimationError("vdl estimation: zero active or reactive injection");
    }
    VdlEstimate est;
    est.t_start = w.time[i0];
    est.gamma_p = num.real() / (s_h.real() * du);
    est.gamma_q = num.imag() / (s_h.imag() * du);
    return est;
}

VdlSeries estimate_vdl_exponents(const TrajectoryWindow& w, const Admittance& y, std::size_t bus,
                                 VdlMethod method, const VdlEstimatorOptions& opts)
{
    w.validate();
    if (!(opts.window > 0.0)) {
        throw InputError("vdl estimation: window length must be positive");
    }
    const auto len = static_cast<std::size_t>(std::llround(opts.window / w.dt));
    if (len < 1) {
        throw InputError("vdl estimation: window shorter than one sample");
    }
    VdlSeries out;
    for (std::size_t i0 = 0; i0 + len < w.n_samples(); i0 += len) {
        const std::size_t i1 = i0 + len;
        if (w.time[i0] < opts.t_from - 1e-9 || w.time[i1] > opts.t_to + 1e-9) {
            continue;
        }
        try {
            out.windows.push_back(
                estimate_vdl_window(w, y, bus, i0, i1, method, opts.excitation_floor));
        } catch (const EstimationError&) {
            ++out.skipped;
        }
    }
    if (out.windows.empty()) {
        throw EstimationError("no window with sufficient excitation");
    }
    std::vector<double> gp, gq;
    for (const auto& e : out.windows) {
        gp.push_back(e.gamma_p);
        gq.push_back(e.gamma_q);
    }
    out.median_gamma_p = median(gp);
    out.median_gamma_q = median(gq);
    return out;
}

}  // namespace cfreq
