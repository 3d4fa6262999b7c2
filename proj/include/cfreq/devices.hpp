#pragma once

// Dynamic and static devices. Each device supplies
//   * its complex power / current injection at its bus,
//   * state derivatives (dynamic devices),
//   * linear "rate terms" giving d(s)/dt and d(i)/dt at its bus as affine
//     functions of the bus complex frequency (rho, omega).

#include "cfreq/netmodel.hpp"

#include <array>
#include <span>
#include <string>

namespace cfreq {

/// a_rho * rho + a_omega * omega + constant, with complex coefficients and real unknowns.
struct RateTerms {
    cplx rho{};
    cplx omega{};
    cplx constant{};

    cplx eval(double r, double w) const { return rho * r + omega * w + constant; }
    RateTerms conj() const { return {std::conj(rho), std::conj(omega), std::conj(constant)}; }
    RateTerms operator*(cplx c) const { return {rho * c, omega * c, constant * c}; }
    RateTerms& operator+=(const RateTerms& o)
    {
        rho += o.rho;
        omega += o.omega;
        constant += o.constant;
        return *this;
    }
};

/// Rate terms of v_h * conj(di_h/dt) given the rate terms of di_h/dt.
RateTerms alt2_from_current(cplx vbar, const RateTerms& current_rate);

// ---------------------------------------------------------------------------
// Synchronous machine (two-axis model; order 2 freezes the rotor fluxes)

struct MachineParams {
    int order = 4;
    double H = 3.0;      // inertia constant (s)
    double D = 0.0;      // damping (pu power per pu speed)
    double ra = 0.0;
    double xd = 1.0;
    double xq = 1.0;
    double xd_p = 0.2;
    double xq_p = 0.2;
    double td0_p = 5.0;
    double tq0_p = 0.5;
    // first-order droop governor; disabled when tg <= 0
    double droop = 0.05;
    double tg = 0.5;
    // first-order AVR; disabled when ta <= 0 or order == 2
    double ka = 20.0;
    double ta = 0.2;
};

/// Slot layout of a machine's states inside the global state vector.
struct MachineStates {
    static constexpr int kCount = 6;
    enum Slot { delta = 0, omega, eq_p, ed_p, pm, efd };

    double v_delta = 0.0;
    double v_omega = 0.0;  // rad/s deviation from the frame
    double v_eq_p = 0.0;
    double v_ed_p = 0.0;
    double v_pm = 0.0;
    double v_efd = 0.0;

    static MachineStates read(std::span<const double> x);
    void write(std::span<double> x) const;
};

/// Power-flow dispatch of a generating unit.
struct GenDispatch {
    double p = 0.0;  // active injection (pu)
    double v = 1.0;  // voltage setpoint (pu)
    bool slack = false;
    double angle = 0.0;  // slack angle (rad)
};

struct SynMachine {
    int bus = 0;  // 0-based
    std::string name;
    MachineParams params;
    GenDispatch dispatch;
    double pref = 0.0;  // governor reference
    double vref = 1.0;  // AVR reference

    /// M in pu*s^2/rad for the given frame speed.
    double inertia(double omega_o) const { return 2.0 * params.H / omega_o; }
};

/// Constant k-coefficients mapping stator voltages and transient EMFs to currents.
struct StatorCoefficients {
    double kv_dd, kv_dq, kv_qd, kv_qq;
    double ke_dd, ke_dq, ke_qd, ke_qq;
};

/// Throws ParameterError when ra^2 + xd' xq' == 0.
StatorCoefficients stator_coefficients(const MachineParams& p);

struct StatorQuantities {
    double vd, vq, id, iq;
};

/// Stator voltages (machine frame) and currents for bus voltage vbar.
StatorQuantities machine_currents(const SynMachine& m, const MachineStates& s, cplx vbar);

/// Current injection into the network, expressed in the network frame.
cplx machine_injection_current(const SynMachine& m, const MachineStates& s, cplx vbar);
cplx machine_injection_power(const SynMachine& m, const MachineStates& s, cplx vbar);

void machine_derivatives(const SynMachine& m, const MachineStates& s, cplx vbar,
                         double omega_o, std::span<double> dx);

/// Back-initializes states and references from a power-flow injection so that all derivatives vanish.
MachineStates initialize_machine(SynMachine& m, cplx vbar, cplx s_injection, double omega_o);

/// d/dt of the complex power injection, computed in the machine frame.
RateTerms machine_power_rate(const SynMachine& m, const MachineStates& s,
                             const MachineStates& ds, cplx vbar);

/// d/dt of the network-frame current injection.
RateTerms machine_current_rate(const SynMachine& m, const MachineStates& s,
                               const MachineStates& ds, cplx vbar);

/// Rate terms of v_h conj(di_h/dt), the machine's left-hand side in the compact current form.
RateTerms machine_lhs_terms(const SynMachine& m, const MachineStates& s,
                            const MachineStates& ds, cplx vbar);

// ---------------------------------------------------------------------------
// Static loads

enum class LoadKind { constant_power, constant_current, constant_admittance };

struct StaticLoad {
    int bus = 0;
    std::string name;
    LoadKind kind = LoadKind::constant_power;
    cplx demand{};  // consumption p + jq at the power-flow point
    // constant_power: injected power (negative for consumption)
    cplx s_o{};
    // constant_current: magnitude and angle offset from the bus voltage angle,
    // or an absolute angle when fixed_angle is set
    double i_mag = 0.0;
    double phi_o = 0.0;
    bool fixed_angle = false;
    // constant_admittance: current drawn is Y_o v
    cplx y_o{};
    double scale = 1.0;
    bool in_service = true;
};

/// Sets the kind-specific setpoint so the load injects `s_injection` at `vbar`.
void initialize_load(StaticLoad& l, cplx vbar, cplx s_injection);

cplx load_injection_current(const StaticLoad& l, cplx vbar);
cplx load_injection_power(const StaticLoad& l, cplx vbar);
RateTerms load_power_rate(const StaticLoad& l, cplx vbar);
RateTerms load_current_rate(const StaticLoad& l, cplx vbar);

/// Voltage-dependent load p = -p_o v^gamma_p, q = -q_o v^gamma_q.
struct Vdl {
    int bus = 0;
    std::string name;
    cplx demand{};
    double p_o = 0.0;
    double q_o = 0.0;
    double gamma_p = 2.0;
    double gamma_q = 2.0;
    double scale = 1.0;
    bool in_service = true;
};

void initialize_vdl(Vdl& l, cplx vbar, cplx s_injection);
cplx vdl_injection_power(const Vdl& l, cplx vbar);
cplx vdl_injection_current(const Vdl& l, cplx vbar);
RateTerms vdl_power_rate(const Vdl& l, cplx vbar);
RateTerms vdl_current_rate(const Vdl& l, cplx vbar);

/// Left-hand side v_h conj(di_h/dt) of a static device. Throws NumericError for v_h = 0.
RateTerms load_lhs_terms(const StaticLoad& l, cplx vbar);
RateTerms load_lhs_terms(const Vdl& l, cplx vbar);

// ---------------------------------------------------------------------------
// Converter-interfaced generation

enum class CigControl { control1, control2 };

struct CigParams {
    CigControl control = CigControl::control1;
    double kp = 20.0;   // active-power frequency droop (pu per rad/s)
    double kq = 5.0;    // reactive-power voltage droop (pu per pu)
    double kqf = 0.0;   // Control-2 frequency gain on the q channel (pu per rad/s)
    double tp = 0.1;
    double tq = 0.1;
    double tc = 0.02;   // converter current-loop lag
    double i_max = 2.0;
    double pll_kp = 80.0;
    double pll_ki = 3200.0;
};

struct CigStates {
    static constexpr int kCount = 6;
    enum Slot { dp = 0, dq, id, iq, theta_pll, x_pll };

    double v_dp = 0.0;
    double v_dq = 0.0;
    double v_id = 0.0;
    double v_iq = 0.0;
    double v_theta_pll = 0.0;
    double v_x_pll = 0.0;

    static CigStates read(std::span<const double> x);
    void write(std::span<double> x) const;
};

struct Cig {
    int bus = 0;
    std::string name;
    CigParams params;
    GenDispatch dispatch;
    double p_ref = 0.0;
    double q_ref = 0.0;
    double v_ref = 1.0;
    double omega_ref = 0.0;
};

double cig_pll_frequency(const Cig& c, const CigStates& s, cplx vbar);
cplx cig_injection_current(const Cig& c, const CigStates& s);
void cig_derivatives(const Cig& c, const CigStates& s, cplx vbar, std::span<double> dx);
CigStates initialize_cig(Cig& c, cplx vbar, cplx s_injection);
RateTerms cig_current_rate(const Cig& c, const CigStates& s, const CigStates& ds);
RateTerms cig_power_rate(const Cig& c, const CigStates& s, const CigStates& ds, cplx vbar);

// ---------------------------------------------------------------------------
// Measurement-side SRF-PLL with a washout on ln v

struct PllParams {
    double kp = 80.0;
    double ki = 3200.0;
    double washout = 0.02;     // s
    double omega_limit = 50.0;  // rad/s saturation of the estimate
};

struct PllEstimator {
    int bus = 0;
    PllParams params;
    bool started = false;
    double theta_hat = 0.0;
    double integrator = 0.0;
    double u_filter = 0.0;
    double omega_hat = 0.0;
    double rho_hat = 0.0;
};

struct PllOutput {
    double omega;
    double rho;
};

/// Advances the estimator by dt with the measured bus voltage.
PllOutput pll_step(PllEstimator& p, cplx vbar, double dt);

}  // namespace cfreq
