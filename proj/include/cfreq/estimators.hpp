#pragma once

// Measurement-side post-processing of bus trajectories: finite-difference
// complex frequency and voltage-dependent-load exponent estimation.

#include "cfreq/netmodel.hpp"

#include <vector>

namespace cfreq {

/// Uniformly sampled complex-log trajectories zeta_h = u_h + j theta_h of every bus.
struct TrajectoryWindow {
    double dt = 0.0;
    std::vector<double> time;
    std::vector<std::vector<double>> u;      // [bus][sample], u = ln v
    std::vector<std::vector<double>> theta;  // [bus][sample]
    std::vector<bool> event;                 // [sample], discontinuity instants

    std::size_t n_bus() const { return u.size(); }
    std::size_t n_samples() const { return time.size(); }

    /// Throws InputError on inconsistent sizes or non-uniform sampling.
    void validate() const;
};

/// Builds a window from voltage magnitudes and angles.
TrajectoryWindow make_window(std::vector<double> time, const std::vector<std::vector<double>>& v,
                             std::vector<std::vector<double>> theta, std::vector<bool> event);

struct EtaSamples {
    std::vector<std::vector<double>> rho;    // [bus][sample]
    std::vector<std::vector<double>> omega;  // [bus][sample]
    std::vector<bool> valid;                 // false at event samples and isolated points
};

/// Centered differences of zeta; one-sided at the ends of every event-free
/// segment. Needs at least three samples.
EtaSamples eta_finite_difference(const TrajectoryWindow& w);

enum class VdlMethod { exact, approximate };

struct VdlEstimate {
    double t_start = 0.0;
    double gamma_p = 0.0;
    double gamma_q = 0.0;
};

struct VdlEstimatorOptions {
    double window = 0.1;             // s
    double excitation_floor = 1e-6;  // minimum |delta u| over a window
    double t_from = -1e300;          // only windows starting at or after this time
    double t_to = 1e300;             // only windows ending at or before this time
};

/// Exponents from a single window [i0, i1] of bus `bus` (0-based).
/// The exact method uses the injection-matrix entries evaluated from the
/// measured voltages and the admittance matrix; the approximate method
/// replaces them with -j B_hk. Throws EstimationError when |delta u| is below
/// the floor, when p_h or q_h vanish, or when the window contains an event.
VdlEstimate estimate_vdl_window(const TrajectoryWindow& w, const Admittance& y, std::size_t bus,
                                std::size_t i0, std::size_t i1, VdlMethod method,
                                double excitation_floor = 1e-6);

struct VdlSeries {
    std::vector<VdlEstimate> windows;
    std::size_t skipped = 0;  // windows rejected for events or insufficient excitation
    double median_gamma_p = 0.0;
    double median_gamma_q = 0.0;
};

/// Non-overlapping windows across the trajectory, median-aggregated.
/// Throws EstimationError if no window qualifies.
VdlSeries estimate_vdl_exponents(const TrajectoryWindow& w, const Admittance& y, std::size_t bus,
                                 VdlMethod method, const VdlEstimatorOptions& opts = {});

}  // namespace cfreq
