#include "cfreq/cfreq.hpp"

#include "cfreq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cfreq {

namespace {

constexpr cplx kJ{0.0, 1.0};

template <class States>
States read_slots(const Eigen::VectorXd& v, std::size_t offset)
{
    return States::read(std::span<const double>(v.data() + offset, States::kCount));
}

// Writes a complex equation row: sum_k (cr_k rho_k + cw_k omega_k) = rhs
// into rows h (real part) and n + h (imaginary part).
struct RowWriter {
    Eigen::MatrixXd& A;
    Eigen::Index n;

    void add(Eigen::Index h, Eigen::Index k, cplx c_rho, cplx c_omega) const
    {
        A(h, k) += c_rho.real();
        A(n + h, k) += c_rho.imag();
        A(h, n + k) += c_omega.real();
        A(n + h, n + k) += c_omega.imag();
    }
};

}  // namespace

ComplexFrequency ComplexFrequency::zeros(std::size_t n)
{
    ComplexFrequency cf;
    cf.rho = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    cf.omega = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    cf.rcond = 1.0;
    return cf;
}

std::vector<BusRates> collect_device_rates(const Model& model, const SystemState& state)
{
    const auto vbar = state.phasors();
    std::vector<BusRates> rates(model.n_bus());
    const Eigen::VectorXd& x = state.x;
    const Eigen::VectorXd xdot =
        state.xdot.size() == x.size() ? state.xdot : eval_f(model, state.x, state.y);

    for (std::size_t i = 0; i < model.machines.size(); ++i) {
        const auto& m = model.machines[i];
        const auto off = model.machine_offset(i);
        const auto s = read_slots<MachineStates>(x, off);
        const auto ds = read_slots<MachineStates>(xdot, off);
        rates[m.bus].power += machine_power_rate(m, s, ds, vbar[m.bus]);
        rates[m.bus].current += machine_current_rate(m, s, ds, vbar[m.bus]);
    }
    for (std::size_t i = 0; i < model.cigs.size(); ++i) {
        const auto& c = model.cigs[i];
        const auto off = model.cig_offset(i);
        const auto s = read_slots<CigStates>(x, off);
        const auto ds = read_slots<CigStates>(xdot, off);
        rates[c.bus].power += cig_power_rate(c, s, ds, vbar[c.bus]);
        rates[c.bus].current += cig_current_rate(c, s, ds);
    }
    for (const auto& l : model.loads) {
        rates[l.bus].power += load_power_rate(l, vbar[l.bus]);
        rates[l.bus].current += load_current_rate(l, vbar[l.bus]);
    }
    for (const auto& l : model.vdls) {
        rates[l.bus].power += vdl_power_rate(l, vbar[l.bus]);
        rates[l.bus].current += vdl_current_rate(l, vbar[l.bus]);
    }
    return rates;
}

CfSnapshot make_snapshot(const Model& model, const SystemState& state)
{
    CfSnapshot snap;
    snap.vbar = state.phasors();
    snap.S = build_injection_matrix(model.ybus, state.voltages());
    snap.Ibar = current_matrix(model.ybus, snap.vbar);
    snap.rates = collect_device_rates(model, state);
    return snap;
}

CfLinearSystem assemble_power_form(const CfSnapshot& snap)
{
    const auto n = static_cast<Eigen::Index>(snap.size());
    CfLinearSystem sys{Eigen::MatrixXd::Zero(2 * n, 2 * n), Eigen::VectorXd::Zero(2 * n)};
    const RowWriter w{sys.A, n};
    for (Eigen::Index h = 0; h < n; ++h) {
        const auto hh = static_cast<std::size_t>(h);
        const cplx s_h = snap.S.row_sum(hh);
        const RateTerms& dev = snap.rates[hh].power;
        for (Eigen::Index k = 0; k < n; ++k) {
            const cplx shk = snap.S(hh, static_cast<std::size_t>(k));
            // s_hk conj(eta_k) = s_hk rho_k - j s_hk omega_k
            w.add(h, k, shk, -kJ * shk);
        }
        // s_h eta_h - device rate terms
        w.add(h, h, s_h - dev.rho, kJ * s_h - dev.omega);
        sys.b[h] = dev.constant.real();
        sys.b[n + h] = dev.constant.imag();
    }
    return sys;
}

CfLinearSystem assemble_compact_form(const CfSnapshot& snap)
{
    const auto n = static_cast<Eigen::Index>(snap.size());
    CfLinearSystem sys{Eigen::MatrixXd::Zero(2 * n, 2 * n), Eigen::VectorXd::Zero(2 * n)};
    const RowWriter w{sys.A, n};
    for (Eigen::Index h = 0; h < n; ++h) {
        const auto hh = static_cast<std::size_t>(h);
        const RateTerms lhs = alt2_from_current(snap.vbar[hh], snap.rates[hh].current);
        for (Eigen::Index k = 0; k < n; ++k) {
            const cplx shk = snap.S(hh, static_cast<std::size_t>(k));
            w.add(h, k, shk, -kJ * shk);
        }
        w.add(h, h, -lhs.rho, -lhs.omega);
        sys.b[h] = lhs.constant.real();
        sys.b[n + h] = lhs.constant.imag();
    }
    return sys;
}

CfLinearSystem assemble_current_form(const CfSnapshot& snap)
{
    const auto n = static_cast<Eigen::Index>(snap.size());
    CfLinearSystem sys{Eigen::MatrixXd::Zero(2 * n, 2 * n), Eigen::VectorXd::Zero(2 * n)};
    const RowWriter w{sys.A, n};
    for (Eigen::Index h = 0; h < n; ++h) {
        const auto hh = static_cast<std::size_t>(h);
        const RateTerms& dev = snap.rates[hh].current;
        for (Eigen::Index k = 0; k < n; ++k) {
            const cplx ihk = snap.Ibar(h, k);
            w.add(h, k, ihk, kJ * ihk);
        }
        w.add(h, h, -dev.rho, -dev.omega);
        sys.b[h] = dev.constant.real();
        sys.b[n + h] = dev.constant.imag();
    }
    return sys;
}

ComplexFrequency solve_linear_system(const CfLinearSystem& sys, double rcond_floor)
{
    const Eigen::Index n = sys.A.rows() / 2;
    ComplexFrequency cf;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.A);
    cf.rcond = lu.rcond();
    const Eigen::VectorXd chi = lu.solve(sys.b);
    cf.singular = !(cf.rcond > rcond_floor) || !chi.allFinite();
    cf.rho = chi.head(n);
    cf.omega = chi.tail(n);
    return cf;
}

ComplexFrequency solve_cf_power_form(const CfSnapshot& snap)
{
    return solve_linear_system(assemble_power_form(snap));
}

ComplexFrequency solve_cf_compact_form(const CfSnapshot& snap)
{
    return solve_linear_system(assemble_compact_form(snap));
}

ComplexFrequency solve_cf_current_form(const CfSnapshot& snap)
{
    return solve_linear_system(assemble_current_form(snap));
}

std::vector<double> sdot_residual(const CfSnapshot& snap, const ComplexFrequency& cf)
{
    const std::size_t n = snap.size();
    std::vector<double> out(n);
    for (std::size_t h = 0; h < n; ++h) {
        const cplx eta_h = cf.eta(h);
        cplx net{};
        for (std::size_t k = 0; k < n; ++k) {
            net += snap.S(h, k) * (eta_h + std::conj(cf.eta(k)));
        }
        const cplx dev = snap.rates[h].power.eval(cf.rho[static_cast<Eigen::Index>(h)],
                                                  cf.omega[static_cast<Eigen::Index>(h)]);
        out[h] = std::abs(dev - net);
    }
    return out;
}

Eigen::VectorXd fdf_estimate(const Model& model, const Eigen::VectorXd& x)
{
    const auto n = static_cast<Eigen::Index>(model.n_bus());
    const ApproxMatrices am = build_approx_matrices(model.ybus);
    Eigen::MatrixXd L = am.Bp;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < model.machines.size(); ++i) {
        const auto& m = model.machines[i];
        const double b = 1.0 / m.params.xd_p;
        const double w =
            x[static_cast<Eigen::Index>(model.machine_offset(i) + MachineStates::omega)];
        L(m.bus, m.bus) += b;
        rhs[m.bus] += b * w;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
    Eigen::VectorXd out = lu.solve(rhs);
    if (!out.allFinite()) {
        throw NumericError("frequency divider matrix is singular (no machine connected?)");
    }
    return out;
}

std::string to_string(SpecialCase c)
{
    switch (c) {
    case SpecialCase::not_applicable: return "no static identity applies";
    case SpecialCase::mixed_static: return "mixed static devices";
    case SpecialCase::constant_power: return "constant power";
    case SpecialCase::constant_admittance: return "constant admittance";
    case SpecialCase::constant_current: return "constant current";
    case SpecialCase::current_power_factor: return "constant current magnitude and power factor";
    case SpecialCase::voltage_dependent: return "voltage dependent load";
    }
    return "?";
}

std::vector<SpecialCase> classify_buses(const Model& model)
{
    const std::size_t n = model.n_bus();
    std::vector<bool> dynamic(n, false);
    std::vector<std::vector<SpecialCase>> kinds(n);
    for (const auto& m : model.machines) {
        dynamic[m.bus] = true;
    }
    for (const auto& c : model.cigs) {
        dynamic[c.bus] = true;
    }
    for (const auto& l : model.loads) {
        if (!l.in_service) {
            continue;
        }
        SpecialCase k = SpecialCase::constant_power;
        if (l.kind == LoadKind::constant_admittance) {
            k = SpecialCase::constant_admittance;
        } else if (l.kind == LoadKind::constant_current) {
            k = l.fixed_angle ? SpecialCase::constant_current : SpecialCase::current_power_factor;
        }
        kinds[l.bus].push_back(k);
    }
    for (const auto& l : model.vdls) {
        if (l.in_service) {
            kinds[l.bus].push_back(SpecialCase::voltage_dependent);
        }
    }
    std::vector<SpecialCase> out(n, SpecialCase::constant_current);
    for (std::size_t h = 0; h < n; ++h) {
        if (dynamic[h]) {
            out[h] = SpecialCase::not_applicable;
            continue;
        }
        if (kinds[h].empty()) {
            continue;  // no injection: d(i_h)/dt = 0
        }
        const SpecialCase first = kinds[h].front();
        const bool uniform = std::all_of(kinds[h].begin(), kinds[h].end(),
                                         [first](SpecialCase k) { return k == first; });
        // several VDLs with different exponents do not share a single identity
        out[h] = uniform && !(first == SpecialCase::voltage_dependent && kinds[h].size() > 1)
                     ? first
                     : SpecialCase::mixed_static;
    }
    return out;
}

std::vector<SpecialCaseReport> special_case_residuals(const Model& model, const CfSnapshot& snap,
                                                      const ComplexFrequency& cf)
{
    const std::size_t n = snap.size();
    const auto kinds = classify_buses(model);
    const auto xi = current_complex_frequency(snap, cf);
    std::vector<SpecialCaseReport> out(n);
    for (std::size_t h = 0; h < n; ++h) {
        auto& r = out[h];
        r.kind = kinds[h];
        const cplx eta_h = cf.eta(h);
        cplx net_conj{};  // sum_k s_hk conj(eta_k)
        for (std::size_t k = 0; k < n; ++k) {
            net_conj += snap.S(h, k) * std::conj(cf.eta(k));
        }
        const cplx s_h = snap.S.row_sum(h);
        switch (r.kind) {
        case SpecialCase::not_applicable:
        case SpecialCase::mixed_static: break;
        case SpecialCase::constant_power: r.residual = s_h * eta_h + net_conj; break;
        case SpecialCase::constant_admittance: {
            cplx y_load{};
            for (const auto& l : model.loads) {
                if (l.bus == static_cast<int>(h) && l.in_service) {
                    y_load += l.scale * l.y_o;
                }
            }
            const cplx y_tot = y_load + model.ybus(h, h);
            cplx coupling{};
            for (std::size_t k = 0; k < n; ++k) {
                if (k != h) {
                    coupling += model.ybus(h, k) * snap.vbar[k] * cf.eta(k);
                }
            }
            r.residual = eta_h + coupling / (y_tot * snap.vbar[h]);
            break;
        }
        case SpecialCase::constant_current: {
            cplx sum{};
            for (std::size_t k = 0; k < n; ++k) {
                sum += snap.Ibar(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(k)) *
                       cf.eta(k);
            }
            r.residual = sum;
            break;
        }
        case SpecialCase::current_power_factor:
            r.residual = -kJ * cf.omega[static_cast<Eigen::Index>(h)] * s_h - net_conj;
            r.xi = xi.xi[h];
            r.xi_reference = kJ * cf.omega[static_cast<Eigen::Index>(h)];
            break;
        case SpecialCase::voltage_dependent: {
            const Vdl* vdl = nullptr;
            for (const auto& l : model.vdls) {
                if (l.bus == static_cast<int>(h) && l.in_service) {
                    vdl = &l;
                }
            }
            const double rho_h = cf.rho[static_cast<Eigen::Index>(h)];
            const cplx lhs(vdl->gamma_p * s_h.real() * rho_h, vdl->gamma_q * s_h.imag() * rho_h);
            r.residual = lhs - s_h * eta_h - net_conj;
            break;
        }
        }
    }
    return out;
}

SdotSplit split_sdot_components(const InjectionMatrix& S, const ComplexFrequency& cf)
{
    const std::size_t n = S.size();
    SdotSplit out{std::vector<cplx>(n), std::vector<cplx>(n)};
    for (std::size_t h = 0; h < n; ++h) {
        const auto hi = static_cast<Eigen::Index>(h);
        for (std::size_t k = 0; k < n; ++k) {
            const auto ki = static_cast<Eigen::Index>(k);
            out.angle_part[h] += kJ * S(h, k) * (cf.omega[hi] - cf.omega[ki]);
            out.magnitude_part[h] += S(h, k) * (cf.rho[hi] + cf.rho[ki]);
        }
    }
    return out;
}

ApproxReport approx_forms(const Admittance& y, const CfSnapshot& snap, const ComplexFrequency& cf)
{
    const std::size_t n = snap.size();
    const ApproxMatrices am = build_approx_matrices(y);
    const SdotSplit split = split_sdot_components(snap.S, cf);
    ApproxReport rep;
    for (std::size_t h = 0; h < n; ++h) {
        const auto hi = static_cast<Eigen::Index>(h);
        const cplx eta_h = cf.eta(h);
        const cplx s_h = snap.S.row_sum(h);
        const cplx sdot = snap.rates[h].power.eval(cf.rho[hi], cf.omega[hi]);
        const cplx idot = snap.rates[h].current.eval(cf.rho[hi], cf.omega[hi]);
        cplx k_exact{}, k_app1{}, k_app2{};
        cplx i_exact{}, i_app1{}, i_app2{};
        cplx s1_angle{}, s1_mag{};
        for (std::size_t k = 0; k < n; ++k) {
            const auto ki = static_cast<Eigen::Index>(k);
            const cplx ec = std::conj(cf.eta(k));
            const cplx yhk = y(h, k);
            k_exact += snap.S(h, k) * ec;
            k_app1 += std::conj(yhk) * ec;
            k_app2 += cplx(0.0, -y.B(hi, ki)) * ec;
            i_exact += snap.Ibar(hi, ki) * cf.eta(k);
            i_app1 += yhk * cf.eta(k);
            i_app2 += cplx(0.0, y.B(hi, ki)) * cf.eta(k);
            const cplx yp(am.Gp(hi, ki), am.Bp(hi, ki));
            const cplx ypp(am.Gpp(hi, ki), am.Bpp(hi, ki));
            s1_angle += kJ * std::conj(yp) * cf.omega[ki];
            s1_mag += ypp * cf.rho[ki];
        }
        const cplx lhs = sdot - s_h * eta_h;
        rep.exact = std::max(rep.exact, std::abs(lhs - k_exact));
        rep.app1 = std::max(rep.app1, std::abs(lhs - k_app1));
        rep.app2 = std::max(rep.app2, std::abs(lhs - k_app2));
        rep.idot_exact = std::max(rep.idot_exact, std::abs(idot - i_exact));
        rep.idot_app1 = std::max(rep.idot_app1, std::abs(idot - i_app1));
        rep.idot_app2 = std::max(rep.idot_app2, std::abs(idot - i_app2));
        rep.s1_angle = std::max(rep.s1_angle, std::abs(split.angle_part[h] - s1_angle));
        rep.s1_magnitude = std::max(rep.s1_magnitude, std::abs(split.magnitude_part[h] - s1_mag));
    }
    return rep;
}

CurrentComplexFrequency current_complex_frequency(const CfSnapshot& snap,
                                                  const ComplexFrequency& cf, double min_current)
{
    const std::size_t n = snap.size();
    CurrentComplexFrequency out{std::vector<cplx>(n), std::vector<bool>(n, false)};
    for (std::size_t h = 0; h < n; ++h) {
        cplx i{};
        cplx di{};
        for (std::size_t k = 0; k < n; ++k) {
            const cplx ihk = snap.Ibar(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(k));
            i += ihk;
            di += ihk * cf.eta(k);
        }
        if (std::abs(i) > min_current) {
            out.xi[h] = di / i;
            out.defined[h] = true;
        }
    }
    return out;
}

}  // namespace cfreq
