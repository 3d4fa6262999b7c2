#pragma once

// Three-phase signal utility: balanced abc synthesis from a complex-log
// trajectory and the power-invariant Park transform in both directions.
// The frame angle is measured between phase a and the q-axis.

#include <vector>

namespace cfreq {

struct AbcSamples {
    std::vector<double> a, b, c;
    std::size_t size() const { return a.size(); }
};

struct Dq0Samples {
    std::vector<double> d, q, o;
    std::size_t size() const { return d.size(); }
};

/// theta_o(t) = 2 pi f_o t + theta0 for every sample time.
std::vector<double> frame_angles(const std::vector<double>& time, double f_o, double theta0 = 0.0);

/// Balanced waveforms whose Park vector in the rotating frame is exp(u + j theta).
AbcSamples abc_synthesize(const std::vector<double>& time, const std::vector<double>& u,
                          const std::vector<double>& theta, double f_o, double theta0 = 0.0);

/// Throws InputError on length mismatch.
Dq0Samples abc_to_dq0(const AbcSamples& abc, const std::vector<double>& theta_o);
AbcSamples dq0_to_abc(const Dq0Samples& dq0, const std::vector<double>& theta_o);

}  // namespace cfreq
