#pragma once

// Complex frequency eta = rho + j omega at every bus, obtained from the
// linear relation between device-side rates of change of the injections and
// the network-side kernel s_hk (eta_h + conj(eta_k)).
//
// Three algebraically equivalent formulations are provided:
//   power form    d(s_h)/dt            = sum_k s_hk (eta_h + conj(eta_k))
//   compact form  v_h conj(d(i_h)/dt)  = sum_k s_hk conj(eta_k)
//   current form  d(i_h)/dt            = sum_k Y_hk v_k eta_k
// plus the frequency-divider estimate, analytic special-case identities and
// the approximate (fast-decoupled) forms used for accuracy studies.

#include "cfreq/devices.hpp"
#include "cfreq/engine.hpp"
#include "cfreq/netmodel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace cfreq {

/// Device-side rate terms aggregated per bus.
struct BusRates {
    RateTerms power;    // d(s_h)/dt
    RateTerms current;  // d(i_h)/dt
};

/// Everything the complex-frequency solvers need from one accepted step.
struct CfSnapshot {
    std::vector<cplx> vbar;
    InjectionMatrix S;
    Eigen::MatrixXcd Ibar;  // Y diag(v)
    std::vector<BusRates> rates;

    std::size_t size() const { return vbar.size(); }
};

/// Builds the snapshot from a converged state with fresh xdot.
CfSnapshot make_snapshot(const Model& model, const SystemState& state);

/// Sums the device rate terms at every bus (machines, CIGs, loads, VDLs).
std::vector<BusRates> collect_device_rates(const Model& model, const SystemState& state);

struct ComplexFrequency {
    Eigen::VectorXd rho;
    Eigen::VectorXd omega;
    bool singular = false;  // A was numerically singular; values are not trustworthy
    double rcond = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(rho.size()); }
    cplx eta(std::size_t h) const
    {
        return {rho[static_cast<Eigen::Index>(h)], omega[static_cast<Eigen::Index>(h)]};
    }
    static ComplexFrequency zeros(std::size_t n);
};

/// A chi = b with chi = [rho; omega].
struct CfLinearSystem {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
};

CfLinearSystem assemble_power_form(const CfSnapshot& snap);
CfLinearSystem assemble_compact_form(const CfSnapshot& snap);
CfLinearSystem assemble_current_form(const CfSnapshot& snap);

/// Dense LU solve; flags the result as singular when the reciprocal condition
/// estimate falls below `rcond_floor`.
ComplexFrequency solve_linear_system(const CfLinearSystem& sys, double rcond_floor = 1e-13);

ComplexFrequency solve_cf_power_form(const CfSnapshot& snap);
ComplexFrequency solve_cf_compact_form(const CfSnapshot& snap);
ComplexFrequency solve_cf_current_form(const CfSnapshot& snap);

/// |d(s_h)/dt - s_h eta_h - sum_k s_hk conj(eta_k)| per bus (pu/s).
std::vector<double> sdot_residual(const CfSnapshot& snap, const ComplexFrequency& cf);

/// Frequency-divider estimate: B' augmented with the machine transient reactances,
/// with rotor speeds as boundary conditions. CIG buses are treated as network buses.
Eigen::VectorXd fdf_estimate(const Model& model, const Eigen::VectorXd& x);

enum class SpecialCase {
    not_applicable,       // a dynamic device is connected
    mixed_static,         // more than one static load model at the bus
    constant_power,       // d(s_h)/dt = 0
    constant_admittance,  // eta_h is a linear map of neighbouring eta_k
    constant_current,     // d(i_h)/dt = 0 (fixed angle, or no device at all)
    current_power_factor, // constant current magnitude and power factor
    voltage_dependent     // d(s_h)/dt = (gp p + j gq q) rho_h
};

std::string to_string(SpecialCase c);

struct SpecialCaseReport {
    SpecialCase kind = SpecialCase::not_applicable;
    cplx residual{};
    // Current complex frequency against j omega_h, reported without assertion
    // for constant magnitude / power factor buses.
    cplx xi{};
    cplx xi_reference{};
};

std::vector<SpecialCaseReport> special_case_residuals(const Model& model, const CfSnapshot& snap,
                                                      const ComplexFrequency& cf);

/// Classification only.
std::vector<SpecialCase> classify_buses(const Model& model);

/// Network-side split of d(s)/dt into the angle-difference and magnitude-sum parts.
struct SdotSplit {
    std::vector<cplx> angle_part;      // j sum_k s_hk (omega_h - omega_k)
    std::vector<cplx> magnitude_part;  // sum_k s_hk (rho_h + rho_k)
};

SdotSplit split_sdot_components(const InjectionMatrix& S, const ComplexFrequency& cf);

/// Worst-case (over buses) residual of each approximate relation against the
/// device-side rates at the solved eta.
struct ApproxReport {
    double exact = 0.0;       // power form with the exact kernel
    double app1 = 0.0;        // s_hk ~ conj(Y_hk)
    double app2 = 0.0;        // s_hk ~ -j B_hk
    double idot_exact = 0.0;  // current form with the exact kernel
    double idot_app1 = 0.0;   // Y v ~ Y
    double idot_app2 = 0.0;   // Y v ~ j B
    double s1_angle = 0.0;    // angle part vs j conj(Y') omega
    double s1_magnitude = 0.0;// magnitude part vs Y'' rho
};

ApproxReport approx_forms(const Admittance& y, const CfSnapshot& snap, const ComplexFrequency& cf);

/// Complex frequency of the current injection, xi_h = (d(i_h)/dt) / i_h.
struct CurrentComplexFrequency {
    std::vector<cplx> xi;
    std::vector<bool> defined;  // false where |i_h| is negligible
};

CurrentComplexFrequency current_complex_frequency(const CfSnapshot& snap,
                                                  const ComplexFrequency& cf,
                                                  double min_current = 1e-9);

}  // namespace cfreq
