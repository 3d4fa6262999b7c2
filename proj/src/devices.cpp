#include "cfreq/devices.hpp"

#include "cfreq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cfreq {

namespace {

constexpr cplx kJ{0.0, 1.0};

// e^{j(delta - pi/2)}: machine dq frame -> network frame.
cplx machine_rotation(double delta) { return std::polar(1.0, delta - std::numbers::pi / 2.0); }

void require_voltage(cplx vbar, const std::string& who)
{
    if (!std::isfinite(vbar.real()) || !std::isfinite(vbar.imag())) {
        throw NumericError(who + ": non-finite bus voltage");
    }
    if (std::abs(vbar) == 0.0) {
        throw NumericError(who + ": zero bus voltage (log-magnitude undefined)");
    }
}

}  // namespace

RateTerms alt2_from_current(cplx vbar, const RateTerms& current_rate)
{
    return current_rate.conj() * vbar;
}

// ---------------------------------------------------------------------------

MachineStates MachineStates::read(std::span<const double> x)
{
    return {x[delta], x[omega], x[eq_p], x[ed_p], x[pm], x[efd]};
}

void MachineStates::write(std::span<double> x) const
{
    x[delta] = v_delta;
    x[omega] = v_omega;
    x[eq_p] = v_eq_p;
    x[ed_p] = v_ed_p;
    x[pm] = v_pm;
    x[efd] = v_efd;
}

StatorCoefficients stator_coefficients(const MachineParams& p)
{
    const double den = p.xd_p * p.xq_p + p.ra * p.ra;
    if (den == 0.0 || !std::isfinite(den)) {
        throw ParameterError("singular stator matrix (ra^2 + xd' xq' = 0)");
    }
    StatorCoefficients k{};
    k.kv_dd = -p.ra / den;
    k.kv_dq = -p.xq_p / den;
    k.ke_dd = p.ra / den;
    k.ke_dq = p.xq_p / den;
    k.kv_qd = p.xd_p / den;
    k.kv_qq = -p.ra / den;
    k.ke_qd = -p.xd_p / den;
    k.ke_qq = p.ra / den;
    return k;
}

StatorQuantities machine_currents(const SynMachine& m, const MachineStates& s, cplx vbar)
{
    const StatorCoefficients k = stator_coefficients(m.params);
    const cplx vs = vbar * std::conj(machine_rotation(s.v_delta));
    StatorQuantities q{};
    q.vd = vs.real();
    q.vq = vs.imag();
    q.id = k.kv_dd * q.vd + k.kv_dq * q.vq + k.ke_dd * s.v_ed_p + k.ke_dq * s.v_eq_p;
    q.iq = k.kv_qd * q.vd + k.kv_qq * q.vq + k.ke_qd * s.v_ed_p + k.ke_qq * s.v_eq_p;
    return q;
}

cplx machine_injection_current(const SynMachine& m, const MachineStates& s, cplx vbar)
{
    const auto q = machine_currents(m, s, vbar);
    return cplx(q.id, q.iq) * machine_rotation(s.v_delta);
}

cplx machine_injection_power(const SynMachine& m, const MachineStates& s, cplx vbar)
{
    const auto q = machine_currents(m, s, vbar);
    return {q.vd * q.id + q.vq * q.iq, q.vq * q.id - q.vd * q.iq};
}

void machine_derivatives(const SynMachine& m, const MachineStates& s, cplx vbar,
                         double omega_o, std::span<double> dx)
{
    const auto& p = m.params;
    const auto q = machine_currents(m, s, vbar);
    const double p_airgap = q.vd * q.id + q.vq * q.iq + p.ra * (q.id * q.id + q.iq * q.iq);
    const double M = m.inertia(omega_o);

    dx[MachineStates::delta] = s.v_omega;
    dx[MachineStates::omega] = (s.v_pm - p_airgap - p.D * s.v_omega / omega_o) / M;
    if (p.order == 4) {
        dx[MachineStates::eq_p] = (-s.v_eq_p - (p.xd - p.xd_p) * q.id + s.v_efd) / p.td0_p;
        dx[MachineStates::ed_p] = (-s.v_ed_p + (p.xq - p.xq_p) * q.iq) / p.tq0_p;
    } else {
        dx[MachineStates::eq_p] = 0.0;
        dx[MachineStates::ed_p] = 0.0;
    }
    dx[MachineStates::pm] =
        p.tg > 0.0 ? (m.pref - s.v_omega / (p.droop * omega_o) - s.v_pm) / p.tg : 0.0;
    dx[MachineStates::efd] = (p.order == 4 && p.ta > 0.0)
                                 ? (p.ka * (m.vref - std::abs(vbar)) - s.v_efd) / p.ta
                                 : 0.0;
}

MachineStates initialize_machine(SynMachine& m, cplx vbar, cplx s_injection, double omega_o)
{
    (void)omega_o;
    const auto& p = m.params;
    stator_coefficients(p);  // validates
    if (p.order != 2 && p.order != 4) {
        throw ParameterError("machine '" + m.name + "': order must be 2 or 4");
    }
    if (p.order == 4 && (!(p.td0_p > 0.0) || !(p.tq0_p > 0.0))) {
        throw ParameterError("machine '" + m.name + "': open-circuit time constants must be positive");
    }
    if (!(p.H > 0.0)) {
        throw ParameterError("machine '" + m.name + "': inertia must be positive");
    }
    const cplx ibar = std::conj(s_injection / vbar);
    const cplx e_q_axis = vbar + cplx(p.ra, p.xq) * ibar;
    MachineStates st{};
    st.v_delta = std::arg(e_q_axis);
    st.v_omega = 0.0;
    const cplx rot = std::conj(machine_rotation(st.v_delta));
    const cplx vs = vbar * rot;
    const cplx is = ibar * rot;
    st.v_ed_p = vs.real() + p.ra * is.real() - p.xq_p * is.imag();
    st.v_eq_p = vs.imag() + p.ra * is.imag() + p.xd_p * is.real();
    st.v_efd = st.v_eq_p + (p.xd - p.xd_p) * is.real();
    const double p_airgap = vs.real() * is.real() + vs.imag() * is.imag() +
                            p.ra * std::norm(is);
    st.v_pm = p_airgap;
    m.pref = p_airgap;
    m.vref = std::abs(vbar) + (p.ka > 0.0 ? st.v_efd / p.ka : 0.0);
    return st;
}

namespace {

struct MachineRates {
    cplx vs;
    cplx is;
    RateTerms vs_dot;
    RateTerms is_dot;
};

MachineRates machine_rates(const SynMachine& m, const MachineStates& s, const MachineStates& ds,
                           cplx vbar)
{
    const StatorCoefficients k = stator_coefficients(m.params);
    const auto q = machine_currents(m, s, vbar);
    MachineRates r;
    r.vs = cplx(q.vd, q.vq);
    r.is = cplx(q.id, q.iq);
    // vs = vbar * e^{-j(delta - pi/2)}  =>  d vs/dt = vs (eta - j omega_r)
    r.vs_dot = {r.vs, kJ * r.vs, -kJ * s.v_omega * r.vs};
    auto stator = [&](cplx c) {
        return cplx(k.kv_dd * c.real() + k.kv_dq * c.imag(), k.kv_qd * c.real() + k.kv_qq * c.imag());
    };
    r.is_dot.rho = stator(r.vs_dot.rho);
    r.is_dot.omega = stator(r.vs_dot.omega);
    r.is_dot.constant = stator(r.vs_dot.constant) +
                        cplx(k.ke_dd * ds.v_ed_p + k.ke_dq * ds.v_eq_p,
                             k.ke_qd * ds.v_ed_p + k.ke_qq * ds.v_eq_p);
    return r;
}

}  // namespace

RateTerms machine_power_rate(const SynMachine& m, const MachineStates& s, const MachineStates& ds,
                             cplx vbar)
{
    const auto r = machine_rates(m, s, ds, vbar);
    // s = vs conj(is) is frame invariant, so differentiate in the machine frame.
    RateTerms out = r.vs_dot * std::conj(r.is);
    out += r.is_dot.conj() * r.vs;
    return out;
}

RateTerms machine_current_rate(const SynMachine& m, const MachineStates& s,
                               const MachineStates& ds, cplx vbar)
{
    const auto r = machine_rates(m, s, ds, vbar);
    // i_h = is e^{j(delta - pi/2)}  =>  d i_h/dt = (d is/dt + j omega_r is) e^{j(delta - pi/2)}
    RateTerms out = r.is_dot;
    out.constant += kJ * ds.v_delta * r.is;
    return out * machine_rotation(s.v_delta);
}

RateTerms machine_lhs_terms(const SynMachine& m, const MachineStates& s, const MachineStates& ds,
                            cplx vbar)
{
    return alt2_from_current(vbar, machine_current_rate(m, s, ds, vbar));
}

// ---------------------------------------------------------------------------

void initialize_load(StaticLoad& l, cplx vbar, cplx s_injection)
{
    require_voltage(vbar, "load '" + l.name + "'");
    const double v2 = std::norm(vbar);
    switch (l.kind) {
    case LoadKind::constant_power: l.s_o = s_injection; break;
    case LoadKind::constant_admittance: l.y_o = -std::conj(s_injection) / v2; break;
    case LoadKind::constant_current: {
        const cplx ibar = std::conj(s_injection / vbar);
        l.i_mag = std::abs(ibar);
        l.phi_o = l.fixed_angle ? std::arg(ibar) : std::arg(ibar) - std::arg(vbar);
        break;
    }
    }
    l.scale = 1.0;
}

cplx load_injection_current(const StaticLoad& l, cplx vbar)
{
    if (!l.in_service) {
        return {};
    }
    switch (l.kind) {
    case LoadKind::constant_power: return std::conj(l.scale * l.s_o / vbar);
    case LoadKind::constant_admittance: return -l.scale * l.y_o * vbar;
    case LoadKind::constant_current: {
        const double angle = l.fixed_angle ? l.phi_o : std::arg(vbar) + l.phi_o;
        return std::polar(l.scale * l.i_mag, angle);
    }
    }
    return {};
}

cplx load_injection_power(const StaticLoad& l, cplx vbar)
{
    if (!l.in_service) {
        return {};
    }
    if (l.kind == LoadKind::constant_power) {
        return l.scale * l.s_o;
    }
    if (l.kind == LoadKind::constant_admittance) {
        return -l.scale * std::conj(l.y_o) * std::norm(vbar);
    }
    return vbar * std::conj(load_injection_current(l, vbar));
}

RateTerms load_power_rate(const StaticLoad& l, cplx vbar)
{
    if (!l.in_service) {
        return {};
    }
    const cplx s = load_injection_power(l, vbar);
    switch (l.kind) {
    case LoadKind::constant_power: return {};
    case LoadKind::constant_admittance: return {2.0 * s, 0.0, 0.0};
    case LoadKind::constant_current:
        if (l.fixed_angle) {
            return {s, kJ * s, 0.0};
        }
        return {s, 0.0, 0.0};
    }
    return {};
}

RateTerms load_current_rate(const StaticLoad& l, cplx vbar)
{
    if (!l.in_service) {
        return {};
    }
    const cplx i = load_injection_current(l, vbar);
    switch (l.kind) {
    case LoadKind::constant_power: return {-i, kJ * i, 0.0};
    case LoadKind::constant_admittance: return {i, kJ * i, 0.0};
    case LoadKind::constant_current:
        if (l.fixed_angle) {
            return {};
        }
        return {0.0, kJ * i, 0.0};
    }
    return {};
}

RateTerms load_lhs_terms(const StaticLoad& l, cplx vbar)
{
    require_voltage(vbar, "load '" + l.name + "'");
    return alt2_from_current(vbar, load_current_rate(l, vbar));
}

// ---------------------------------------------------------------------------

void initialize_vdl(Vdl& l, cplx vbar, cplx s_injection)
{
    require_voltage(vbar, "vdl '" + l.name + "'");
    const double v = std::abs(vbar);
    l.p_o = -s_injection.real() / std::pow(v, l.gamma_p);
    l.q_o = -s_injection.imag() / std::pow(v, l.gamma_q);
    l.scale = 1.0;
}

cplx vdl_injection_power(const Vdl& l, cplx vbar)
{
    if (!l.in_service) {
        return {};
    }
    const double v = std::abs(vbar);
    return {-l.scale * l.p_o * std::pow(v, l.gamma_p), -l.scale * l.q_o * std::pow(v, l.gamma_q)};
}

cplx vdl_injection_current(const Vdl& l, cplx vbar)
{
    if (!l.in_service) {
        return {};
    }
    return std::conj(vdl_injection_power(l, vbar) / vbar);
}

RateTerms vdl_power_rate(const Vdl& l, cplx vbar)
{
    const cplx s = vdl_injection_power(l, vbar);
    return {cplx(l.gamma_p * s.real(), l.gamma_q * s.imag()), 0.0, 0.0};
}

RateTerms vdl_current_rate(const Vdl& l, cplx vbar)
{
    if (!l.in_service) {
        return {};
    }
    // i = m(v) e^{j theta} with m(v) = -p_o v^(gp-1) + j q_o v^(gq-1)
    const double v = std::abs(vbar);
    const cplx unit = vbar / v;
    const cplx v_dm_dv(-l.scale * l.p_o * (l.gamma_p - 1.0) * std::pow(v, l.gamma_p - 1.0),
                       l.scale * l.q_o * (l.gamma_q - 1.0) * std::pow(v, l.gamma_q - 1.0));
    const cplx i = vdl_injection_current(l, vbar);
    return {v_dm_dv * unit, kJ * i, 0.0};
}

RateTerms load_lhs_terms(const Vdl& l, cplx vbar)
{
    require_voltage(vbar, "vdl '" + l.name + "'");
    return alt2_from_current(vbar, vdl_current_rate(l, vbar));
}

// ---------------------------------------------------------------------------

CigStates CigStates::read(std::span<const double> x)
{
    return {x[dp], x[dq], x[id], x[iq], x[theta_pll], x[x_pll]};
}

void CigStates::write(std::span<double> x) const
{
    x[dp] = v_dp;
    x[dq] = v_dq;
    x[id] = v_id;
    x[iq] = v_iq;
    x[theta_pll] = v_theta_pll;
    x[x_pll] = v_x_pll;
}

namespace {

double pll_error(cplx vbar, double theta_hat)
{
    const cplx aligned = vbar * std::polar(1.0, -theta_hat);
    return aligned.imag() / std::abs(vbar);
}

}  // namespace

double cig_pll_frequency(const Cig& c, const CigStates& s, cplx vbar)
{
    return c.params.pll_kp * pll_error(vbar, s.v_theta_pll) + s.v_x_pll;
}

cplx cig_injection_current(const Cig& c, const CigStates& s)
{
    (void)c;
    return cplx(s.v_id, s.v_iq) * std::polar(1.0, s.v_theta_pll);
}

void cig_derivatives(const Cig& c, const CigStates& s, cplx vbar, std::span<double> dx)
{
    const auto& p = c.params;
    const double v = std::abs(vbar);
    const double err = pll_error(vbar, s.v_theta_pll);
    const double w_hat = p.pll_kp * err + s.v_x_pll;
    const double w_err = c.omega_ref - w_hat;

    dx[CigStates::dp] = (p.kp * w_err - s.v_dp) / p.tp;
    double q_drive = p.kq * (c.v_ref - v);
    if (p.control == CigControl::control2) {
        q_drive += p.kqf * w_err;
    }
    dx[CigStates::dq] = (q_drive - s.v_dq) / p.tq;

    double id_ord = (c.p_ref + s.v_dp) / v;
    double iq_ord = -(c.q_ref + s.v_dq) / v;
    const double mag = std::hypot(id_ord, iq_ord);
    if (mag > p.i_max) {
        id_ord *= p.i_max / mag;
        iq_ord *= p.i_max / mag;
    }
    dx[CigStates::id] = (id_ord - s.v_id) / p.tc;
    dx[CigStates::iq] = (iq_ord - s.v_iq) / p.tc;
    dx[CigStates::theta_pll] = w_hat;
    dx[CigStates::x_pll] = p.pll_ki * err;
}

CigStates initialize_cig(Cig& c, cplx vbar, cplx s_injection)
{
    require_voltage(vbar, "cig '" + c.name + "'");
    const auto& p = c.params;
    if (!(p.tp > 0.0) || !(p.tq > 0.0) || !(p.tc > 0.0)) {
        throw ParameterError("cig '" + c.name + "': time constants must be positive");
    }
    const double v = std::abs(vbar);
    c.p_ref = s_injection.real();
    c.q_ref = s_injection.imag();
    c.v_ref = v;
    c.omega_ref = 0.0;
    CigStates s{};
    s.v_theta_pll = std::arg(vbar);
    s.v_id = c.p_ref / v;
    s.v_iq = -c.q_ref / v;
    if (std::hypot(s.v_id, s.v_iq) > p.i_max) {
        throw ParameterError("cig '" + c.name + "': initial current exceeds its limit");
    }
    return s;
}

RateTerms cig_current_rate(const Cig& c, const CigStates& s, const CigStates& ds)
{
    // i = (id + j iq) e^{j theta_pll}; depends on states only.
    const cplx i = cig_injection_current(c, s);
    const cplx di = cplx(ds.v_id, ds.v_iq) * std::polar(1.0, s.v_theta_pll) +
                    kJ * ds.v_theta_pll * i;
    return {0.0, 0.0, di};
}

RateTerms cig_power_rate(const Cig& c, const CigStates& s, const CigStates& ds, cplx vbar)
{
    const cplx i = cig_injection_current(c, s);
    const cplx sbar = vbar * std::conj(i);
    const RateTerms di = cig_current_rate(c, s, ds);
    return {sbar, kJ * sbar, vbar * std::conj(di.constant)};
}

// ---------------------------------------------------------------------------

PllOutput pll_step(PllEstimator& p, cplx vbar, double dt)
{
    if (!(dt > 0.0)) {
        throw InputError("pll_step: dt must be positive");
    }
    const double v = std::abs(vbar);
    const double u = std::log(v);
    if (!p.started) {
        p.started = true;
        p.theta_hat = std::arg(vbar);
        p.integrator = 0.0;
        p.u_filter = u;
    }
    const auto& g = p.params;
    const double err = v > 0.0 ? pll_error(vbar, p.theta_hat) : 0.0;
    p.integrator = std::clamp(p.integrator + g.ki * err * dt, -g.omega_limit, g.omega_limit);
    p.omega_hat = std::clamp(g.kp * err + p.integrator, -g.omega_limit, g.omega_limit);
    p.theta_hat += p.omega_hat * dt;

    // backward-Euler washout on u
    const double a = dt / g.washout;
    p.u_filter = (p.u_filter + a * u) / (1.0 + a);
    p.rho_hat = (u - p.u_filter) / g.washout;
    return {p.omega_hat, p.rho_hat};
}

}  // namespace cfreq
