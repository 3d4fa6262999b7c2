#include "cfreq/engine.hpp"

#include "cfreq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace cfreq {

std::size_t Model::n_x() const
{
    return MachineStates::kCount * machines.size() + CigStates::kCount * cigs.size();
}

std::size_t Model::cig_offset(std::size_t i) const
{
    return MachineStates::kCount * machines.size() + CigStates::kCount * i;
}

void Model::validate() const
{
    grid.validate();
    const auto n = static_cast<int>(n_bus());
    auto check = [n](int bus, const std::string& who) {
        if (bus < 0 || bus >= n) {
            throw ModelError(who + " references bus " + std::to_string(bus + 1) +
                             " which does not exist");
        }
    };
    for (const auto& m : machines) {
        check(m.bus, "machine '" + m.name + "'");
    }
    for (const auto& l : loads) {
        check(l.bus, "load '" + l.name + "'");
    }
    for (const auto& l : vdls) {
        check(l.bus, "vdl '" + l.name + "'");
    }
    for (const auto& c : cigs) {
        check(c.bus, "cig '" + c.name + "'");
    }
}

std::string describe(const Event& e)
{
    std::ostringstream os;
    os << "t=" << e.time << " ";
    switch (e.kind) {
    case EventKind::load_disconnect:
        os << "load-disconnect bus " << e.bus << " fraction " << e.magnitude;
        break;
    case EventKind::load_connect:
        os << "load-connect bus " << e.bus << " p=" << e.power.real() << " q=" << e.power.imag();
        break;
    case EventKind::line_trip: os << "line-trip " << e.bus << "-" << e.bus_to; break;
    case EventKind::line_close: os << "line-close " << e.bus << "-" << e.bus_to; break;
    case EventKind::fault_apply: os << "fault-apply bus " << e.bus; break;
    case EventKind::fault_clear: os << "fault-clear bus " << e.bus; break;
    case EventKind::setpoint_step:
        os << "setpoint-step " << e.target << "." << e.field << " += " << e.magnitude;
        break;
    }
    if (!e.label.empty()) {
        os << " (" << e.label << ")";
    }
    return os.str();
}

BusVoltages SystemState::voltages() const
{
    const auto n = static_cast<std::size_t>(y.size() / 2);
    BusVoltages out(n);
    for (std::size_t h = 0; h < n; ++h) {
        out.theta[h] = y[static_cast<Eigen::Index>(h)];
        out.v[h] = y[static_cast<Eigen::Index>(n + h)];
    }
    return out;
}

std::vector<cplx> SystemState::phasors() const { return voltages().phasors(); }

namespace {

std::vector<cplx> phasors_of(const Eigen::VectorXd& y)
{
    const auto n = y.size() / 2;
    std::vector<cplx> out(static_cast<std::size_t>(n));
    for (Eigen::Index h = 0; h < n; ++h) {
        out[static_cast<std::size_t>(h)] = std::polar(y[n + h], y[h]);
    }
    return out;
}

std::span<const double> slice(const Eigen::VectorXd& v, std::size_t offset, std::size_t count)
{
    return {v.data() + offset, count};
}

std::span<double> slice(Eigen::VectorXd& v, std::size_t offset, std::size_t count)
{
    return {v.data() + offset, count};
}

}  // namespace

std::vector<cplx> device_injections(const Model& model, const Eigen::VectorXd& x,
                                    const std::vector<cplx>& vbar)
{
    std::vector<cplx> s(model.n_bus(), cplx{});
    for (std::size_t i = 0; i < model.machines.size(); ++i) {
        const auto& m = model.machines[i];
        const auto st = MachineStates::read(slice(x, model.machine_offset(i), MachineStates::kCount));
        s[m.bus] += machine_injection_power(m, st, vbar[m.bus]);
    }
    for (std::size_t i = 0; i < model.cigs.size(); ++i) {
        const auto& c = model.cigs[i];
        const auto st = CigStates::read(slice(x, model.cig_offset(i), CigStates::kCount));
        s[c.bus] += vbar[c.bus] * std::conj(cig_injection_current(c, st));
    }
    for (const auto& l : model.loads) {
        s[l.bus] += load_injection_power(l, vbar[l.bus]);
    }
    for (const auto& l : model.vdls) {
        s[l.bus] += vdl_injection_power(l, vbar[l.bus]);
    }
    return s;
}

Eigen::VectorXd eval_f(const Model& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.n_x()));
    const auto n = static_cast<Eigen::Index>(model.n_bus());
    for (std::size_t i = 0; i < model.machines.size(); ++i) {
        const auto& m = model.machines[i];
        const auto off = model.machine_offset(i);
        const auto st = MachineStates::read(slice(x, off, MachineStates::kCount));
        const cplx vbar = std::polar(y[n + m.bus], y[m.bus]);
        machine_derivatives(m, st, vbar, model.omega_o(), slice(dx, off, MachineStates::kCount));
    }
    for (std::size_t i = 0; i < model.cigs.size(); ++i) {
        const auto& c = model.cigs[i];
        const auto off = model.cig_offset(i);
        const auto st = CigStates::read(slice(x, off, CigStates::kCount));
        const cplx vbar = std::polar(y[n + c.bus], y[c.bus]);
        cig_derivatives(c, st, vbar, slice(dx, off, CigStates::kCount));
    }
    return dx;
}

std::vector<cplx> device_currents(const Model& model, const Eigen::VectorXd& x,
                                  const std::vector<cplx>& vbar)
{
    std::vector<cplx> i(model.n_bus(), cplx{});
    for (std::size_t k = 0; k < model.machines.size(); ++k) {
        const auto& m = model.machines[k];
        const auto st = MachineStates::read(slice(x, model.machine_offset(k), MachineStates::kCount));
        i[m.bus] += machine_injection_current(m, st, vbar[m.bus]);
    }
    for (std::size_t k = 0; k < model.cigs.size(); ++k) {
        const auto& c = model.cigs[k];
        const auto st = CigStates::read(slice(x, model.cig_offset(k), CigStates::kCount));
        i[c.bus] += cig_injection_current(c, st);
    }
    for (const auto& l : model.loads) {
        i[l.bus] += load_injection_current(l, vbar[l.bus]);
    }
    for (const auto& l : model.vdls) {
        i[l.bus] += vdl_injection_current(l, vbar[l.bus]);
    }
    return i;
}

Eigen::VectorXd eval_g(const Model& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
    const auto vbar = phasors_of(y);
    const auto i_dev = device_currents(model, x, vbar);
    const auto i_net = network_currents(model.ybus, vbar);
    const auto n = static_cast<Eigen::Index>(model.n_bus());
    Eigen::VectorXd g(2 * n);
    for (Eigen::Index h = 0; h < n; ++h) {
        const cplx mis = i_dev[static_cast<std::size_t>(h)] - i_net[static_cast<std::size_t>(h)];
        g[h] = mis.real();
        g[n + h] = mis.imag();
    }
    return g;
}

// ---------------------------------------------------------------------------
// Power flow

namespace {

enum class BusType { pq, pv, slack };

}  // namespace

SystemState solve_power_flow(Model& model, const PowerFlowOptions& opts, PowerFlowReport* report)
{
    model.validate();
    model.rebuild_admittance();
    const std::size_t n = model.n_bus();

    std::vector<BusType> type(n, BusType::pq);
    std::vector<double> p_spec(n, 0.0);
    std::vector<double> q_spec(n, 0.0);
    BusVoltages vol(n);
    for (const auto& bus : model.grid.buses()) {
        vol.v[bus.index - 1] = bus.v0;
        vol.theta[bus.index - 1] = bus.theta0;
    }

    int n_slack = 0;
    auto add_gen = [&](int bus, const GenDispatch& d) {
        if (d.slack) {
            if (type[bus] == BusType::slack) {
                throw InitError("more than one slack unit at bus " + std::to_string(bus + 1));
            }
            type[bus] = BusType::slack;
            vol.theta[bus] = d.angle;
            ++n_slack;
        } else {
            if (type[bus] == BusType::pq) {
                type[bus] = BusType::pv;
            }
            p_spec[bus] += d.p;
        }
        vol.v[bus] = d.v;
    };
    for (const auto& m : model.machines) {
        add_gen(m.bus, m.dispatch);
    }
    for (const auto& c : model.cigs) {
        add_gen(c.bus, c.dispatch);
    }
    if (n_slack != 1) {
        throw InitError("power flow needs exactly one slack unit, found " + std::to_string(n_slack));
    }
    for (const auto& l : model.loads) {
        if (l.in_service) {
            p_spec[l.bus] -= l.demand.real();
            q_spec[l.bus] -= l.demand.imag();
        }
    }
    for (const auto& l : model.vdls) {
        if (l.in_service) {
            p_spec[l.bus] -= l.demand.real();
            q_spec[l.bus] -= l.demand.imag();
        }
    }

    // unknown ordering: theta of non-slack buses, then v of PQ buses
    std::vector<std::size_t> ang_idx;
    std::vector<std::size_t> mag_idx;
    for (std::size_t h = 0; h < n; ++h) {
        if (type[h] != BusType::slack) {
            ang_idx.push_back(h);
        }
        if (type[h] == BusType::pq) {
            mag_idx.push_back(h);
        }
    }
    const auto na = static_cast<Eigen::Index>(ang_idx.size());
    const auto nm = static_cast<Eigen::Index>(mag_idx.size());
    const Eigen::Index nu = na + nm;

    auto mismatch = [&](const InjectionMatrix& S, Eigen::VectorXd& out) {
        out.resize(nu);
        for (Eigen::Index i = 0; i < na; ++i) {
            out[i] = p_spec[ang_idx[i]] - S.H.row(ang_idx[i]).sum();
        }
        for (Eigen::Index i = 0; i < nm; ++i) {
            out[na + i] = q_spec[mag_idx[i]] - S.K.row(mag_idx[i]).sum();
        }
        return nu == 0 ? 0.0 : out.cwiseAbs().maxCoeff();
    };

    Eigen::VectorXd mis;
    InjectionMatrix S = build_injection_matrix(model.ybus, vol);
    double norm = mismatch(S, mis);
    int iterations = 0;
    int iterations_to_tol = norm < opts.tolerance ? 0 : -1;
    // Polish past the requested tolerance so that the dynamic start is an
    // equilibrium to rounding.
    const double polish = opts.tolerance * 1e-3;
    double prev = std::numeric_limits<double>::infinity();
    while (norm > polish && iterations < opts.max_iterations) {
        if (norm >= prev && norm < opts.tolerance) {
            break;  // stagnated at rounding level
        }
        prev = norm;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nu, nu);
        std::vector<Eigen::Index> col_ang(n, -1);
        std::vector<Eigen::Index> col_mag(n, -1);
        for (Eigen::Index i = 0; i < na; ++i) {
            col_ang[ang_idx[i]] = i;
        }
        for (Eigen::Index i = 0; i < nm; ++i) {
            col_mag[mag_idx[i]] = na + i;
        }
        auto fill_row = [&](Eigen::Index row, std::size_t h, bool active) {
            const double sh_p = S.H.row(h).sum();
            const double sh_q = S.K.row(h).sum();
            for (std::size_t k = 0; k < n; ++k) {
                const double phk = S.H(h, k);
                const double qhk = S.K(h, k);
                if (col_ang[k] >= 0) {
                    double d;
                    if (k == h) {
                        d = active ? -(sh_q - qhk) : (sh_p - phk);
                    } else {
                        d = active ? qhk : -phk;
                    }
                    J(row, col_ang[k]) = d;
                }
                if (col_mag[k] >= 0) {
                    double d;
                    if (k == h) {
                        d = active ? (sh_p + phk) / vol.v[h] : (sh_q + qhk) / vol.v[h];
                    } else {
                        d = active ? phk / vol.v[k] : qhk / vol.v[k];
                    }
                    J(row, col_mag[k]) = d;
                }
            }
        };
        for (Eigen::Index i = 0; i < na; ++i) {
            fill_row(i, ang_idx[i], true);
        }
        for (Eigen::Index i = 0; i < nm; ++i) {
            fill_row(na + i, mag_idx[i], false);
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        const Eigen::VectorXd dz = lu.solve(mis);
        if (!dz.allFinite()) {
            throw InitError("power flow Jacobian is singular");
        }
        for (Eigen::Index i = 0; i < na; ++i) {
            vol.theta[ang_idx[i]] += dz[i];
        }
        for (Eigen::Index i = 0; i < nm; ++i) {
            vol.v[mag_idx[i]] += dz[na + i];
            if (!(vol.v[mag_idx[i]] > 0.0)) {
                throw InitError("power flow diverged (non-positive voltage at bus " +
                                std::to_string(mag_idx[i] + 1) + ")");
            }
        }
        ++iterations;
        S = build_injection_matrix(model.ybus, vol);
        norm = mismatch(S, mis);
        if (iterations_to_tol < 0 && norm < opts.tolerance) {
            iterations_to_tol = iterations;
        }
    }
    if (!(norm < opts.tolerance)) {
        std::ostringstream os;
        os << "power flow did not converge after " << iterations
           << " iterations; final mismatch " << norm << " pu";
        throw InitError(os.str());
    }
    if (report != nullptr) {
        report->iterations = iterations_to_tol;
        report->mismatch = norm;
    }

    // Back-initialize devices from the solved operating point.
    const auto vbar = vol.phasors();
    const auto s_net = S.injections();
    for (auto& l : model.loads) {
        if (l.in_service) {
            initialize_load(l, vbar[l.bus], -l.demand);
        }
    }
    for (auto& l : model.vdls) {
        if (l.in_service) {
            initialize_vdl(l, vbar[l.bus], -l.demand);
        }
    }
    std::vector<cplx> gen_share(n, cplx{});
    std::vector<int> gen_count(n, 0);
    for (const auto& m : model.machines) {
        ++gen_count[m.bus];
    }
    for (const auto& c : model.cigs) {
        ++gen_count[c.bus];
    }
    for (std::size_t h = 0; h < n; ++h) {
        if (gen_count[h] == 0) {
            continue;
        }
        cplx load_s{};
        for (const auto& l : model.loads) {
            if (l.bus == static_cast<int>(h) && l.in_service) {
                load_s += load_injection_power(l, vbar[h]);
            }
        }
        for (const auto& l : model.vdls) {
            if (l.bus == static_cast<int>(h) && l.in_service) {
                load_s += vdl_injection_power(l, vbar[h]);
            }
        }
        gen_share[h] = (s_net[h] - load_s) / static_cast<double>(gen_count[h]);
    }

    SystemState state;
    state.t = 0.0;
    state.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.n_x()));
    state.y.resize(static_cast<Eigen::Index>(2 * n));
    for (std::size_t h = 0; h < n; ++h) {
        state.y[static_cast<Eigen::Index>(h)] = vol.theta[h];
        state.y[static_cast<Eigen::Index>(n + h)] = vol.v[h];
    }
    for (std::size_t i = 0; i < model.machines.size(); ++i) {
        auto& m = model.machines[i];
        const auto st = initialize_machine(m, vbar[m.bus], gen_share[m.bus], model.omega_o());
        st.write(slice(state.x, model.machine_offset(i), MachineStates::kCount));
    }
    for (std::size_t i = 0; i < model.cigs.size(); ++i) {
        auto& c = model.cigs[i];
        const auto st = initialize_cig(c, vbar[c.bus], gen_share[c.bus]);
        st.write(slice(state.x, model.cig_offset(i), CigStates::kCount));
    }
    try {
        state = reinitialize_algebraic(model, state);
    } catch (const EventError& e) {
        throw InitError(std::string("initial algebraic solve failed: ") + e.what());
    }
    return state;
}

// ---------------------------------------------------------------------------
// Newton helpers

namespace {

template <class Residual>
Eigen::MatrixXd fd_jacobian(Residual&& residual, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& f0)
{
    const Eigen::Index m = f0.size();
    const Eigen::Index nz = z.size();
    Eigen::MatrixXd J(m, nz);
    Eigen::VectorXd zp = z;
    for (Eigen::Index j = 0; j < nz; ++j) {
        const double h = 1.5e-8 * std::max(1.0, std::abs(z[j]));
        zp[j] = z[j] + h;
        J.col(j) = (residual(zp) - f0) / (zp[j] - z[j]);
        zp[j] = z[j];
    }
    return J;
}

// Newton with a finite-difference Jacobian, refreshed when contraction is poor.
// Damping factor that keeps the voltage magnitudes z[v_begin, v_begin + v_count)
// positive: a full step that would cross zero is shortened to halve the distance.
double positive_step(const Eigen::VectorXd& z, const Eigen::VectorXd& dz, Eigen::Index v_begin,
                     Eigen::Index v_count)
{
    double alpha = 1.0;
    for (Eigen::Index i = v_begin; i < v_begin + v_count; ++i) {
        if (z[i] + dz[i] <= 0.0) {
            alpha = std::min(alpha, 0.5 * z[i] / -dz[i]);
        }
    }
    return alpha;
}

template <class Residual>
bool newton_solve(Residual&& residual, Eigen::VectorXd& z, const NewtonOptions& opts, int& iters,
                  double& final_norm, Eigen::Index v_begin, Eigen::Index v_count)
{
    Eigen::VectorXd F = residual(z);
    double norm = F.cwiseAbs().maxCoeff();
    iters = 0;
    if (!std::isfinite(norm)) {
        final_norm = norm;
        return false;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    bool fresh = false;
    bool stagnated = false;
    while (norm > opts.tolerance) {
        if (iters >= opts.max_iterations) {
            break;
        }
        if (!fresh) {
            lu.compute(fd_jacobian(residual, z, F));
            fresh = true;
        }
        Eigen::VectorXd dz = lu.solve(-F);
        if (!dz.allFinite()) {
            break;
        }
        const double alpha = positive_step(z, dz, v_begin, v_count);
        if (alpha < 1.0) {
            dz *= alpha;
            fresh = false;
        }
        Eigen::VectorXd z_new = z + dz;
        Eigen::VectorXd F_new = residual(z_new);
        const double norm_new = F_new.cwiseAbs().maxCoeff();
        ++iters;
        if (!std::isfinite(norm_new)) {
            break;
        }
        if (norm_new > 0.1 * norm) {
            fresh = false;
        }
        const double step_size = dz.cwiseAbs().maxCoeff();
        const bool no_progress = norm_new > 0.5 * norm;

        z = std::move(z_new);
        F = std::move(F_new);
        norm = norm_new;
        // Rounding floor: with stiff entries (e.g. a fault shunt) the residual
        // cannot drop below ~eps*|Y|; accept once Newton stops making progress
        // with a negligible update.
        if ((no_progress || step_size < 1e-12) && step_size < 1e-9 &&
            norm < opts.floor_tolerance) {
            stagnated = true;
            break;
        }
    }
    final_norm = norm;
    return norm <= opts.tolerance || stagnated;
}

}  // namespace

SystemState reinitialize_algebraic(const Model& model, const SystemState& state,
                                   const NewtonOptions& opts)
{
    const Eigen::VectorXd& x = state.x;
    auto residual = [&](const Eigen::VectorXd& y) { return eval_g(model, x, y); };
    Eigen::VectorXd y = state.y;
    int iters = 0;
    double norm = 0.0;
    // No positivity limiter here: after a deep fault the angle of a collapsed
    // bus is meaningless and the solution may be reached through v < 0.
    if (!newton_solve(residual, y, opts, iters, norm, 0, 0)) {
        std::ostringstream os;
        os << "algebraic re-initialization failed at t=" << state.t << " (residual " << norm
           << " after " << iters << " iterations)";
        throw EventError(os.str());
    }
    // (-v, theta) and (v, theta + pi) are the same phasor; keep v > 0 and the
    // angle on the branch nearest to the previous one.
    const auto n = static_cast<Eigen::Index>(model.n_bus());
    for (Eigen::Index h = 0; h < n; ++h) {
        if (y[n + h] < 0.0) {
            y[n + h] = -y[n + h];
            y[h] += std::numbers::pi;
        }
        const double turns = std::round((y[h] - state.y[h]) / (2.0 * std::numbers::pi));
        y[h] -= 2.0 * std::numbers::pi * turns;
    }
    SystemState out = state;
    out.y = y;
    out.xdot = eval_f(model, out.x, out.y);
    out.newton_iterations = iters;
    return out;
}

SystemState trapezoidal_step(const Model& model, const SystemState& state, double h,
                             const NewtonOptions& opts)
{
    const auto nx = static_cast<Eigen::Index>(model.n_x());
    const auto ny = static_cast<Eigen::Index>(model.n_y());
    const Eigen::VectorXd f_n = state.xdot.size() == nx ? state.xdot : eval_f(model, state.x, state.y);

    auto residual = [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd x = z.head(nx);
        const Eigen::VectorXd y = z.tail(ny);
        Eigen::VectorXd F(nx + ny);
        F.head(nx) = x - state.x - 0.5 * h * (f_n + eval_f(model, x, y));
        F.tail(ny) = eval_g(model, x, y);
        return F;
    };

    Eigen::VectorXd z(nx + ny);
    z.head(nx) = state.x + h * f_n;
    z.tail(ny) = state.y;
    int iters = 0;
    double norm = 0.0;
    const auto n = static_cast<Eigen::Index>(model.n_bus());
    if (!newton_solve(residual, z, opts, iters, norm, nx + n, n)) {
        std::ostringstream os;
        os << "Newton failed in step from t=" << state.t << " (residual " << norm << " after "
           << iters << " iterations)";
        throw StepError(os.str());
    }
    SystemState out;
    out.t = state.t + h;
    out.x = z.head(nx);
    out.y = z.tail(ny);
    out.xdot = eval_f(model, out.x, out.y);
    out.log = state.log;
    out.event_step = false;
    out.newton_iterations = iters;
    return out;
}

SystemState step(const Model& model, const SystemState& state, double dt, const NewtonOptions& opts)
{
    if (!(dt > 0.0)) {
        throw InputError("step: dt must be positive");
    }
    return trapezoidal_step(model, state, dt, opts);
}

// ---------------------------------------------------------------------------
// Events

namespace {

std::string fault_name(int bus) { return "fault@" + std::to_string(bus); }

bool is_fault(const StaticLoad& l) { return l.name.rfind("fault@", 0) == 0; }

}  // namespace

SystemState apply_event(Model& model, const SystemState& state, const Event& event,
                        const NewtonOptions& opts)
{
    const int n = static_cast<int>(model.n_bus());
    auto check_bus = [n](int bus) {
        if (bus < 1 || bus > n) {
            throw EventError("event references bus " + std::to_string(bus) +
                             " which does not exist");
        }
    };
    bool changed = true;
    switch (event.kind) {
    case EventKind::load_disconnect: {
        check_bus(event.bus);
        const double frac = std::clamp(event.magnitude, 0.0, 1.0);
        int touched = 0;
        for (auto& l : model.loads) {
            if (l.bus == event.bus - 1 && l.in_service && !is_fault(l)) {
                if (frac >= 1.0) {
                    l.in_service = false;
                } else {
                    l.scale *= 1.0 - frac;
                }
                ++touched;
            }
        }
        for (auto& l : model.vdls) {
            if (l.bus == event.bus - 1 && l.in_service) {
                if (frac >= 1.0) {
                    l.in_service = false;
                } else {
                    l.scale *= 1.0 - frac;
                }
                ++touched;
            }
        }
        if (touched == 0) {
            throw EventError("no in-service load at bus " + std::to_string(event.bus));
        }
        break;
    }
    case EventKind::load_connect: {
        check_bus(event.bus);
        StaticLoad l;
        l.bus = event.bus - 1;
        l.name = "connect@" + std::to_string(event.bus);
        l.kind = event.load_kind;
        l.demand = event.power;
        initialize_load(l, cplx(1.0, 0.0), -event.power);
        if (l.kind == LoadKind::constant_current) {
            // angle offset relative to a unit voltage at zero angle
            l.phi_o = std::arg(std::conj(-event.power));
        }
        model.loads.push_back(l);
        break;
    }
    case EventKind::line_trip:
    case EventKind::line_close: {
        check_bus(event.bus);
        check_bus(event.bus_to);
        const auto idx = model.grid.find_branch(event.bus, event.bus_to);
        if (!idx) {
            throw EventError("no branch between buses " + std::to_string(event.bus) + " and " +
                             std::to_string(event.bus_to));
        }
        const bool want = event.kind == EventKind::line_close;
        if (model.grid.branches()[*idx].in_service == want) {
            changed = false;
        } else {
            model.grid.set_in_service(*idx, want);
            try {
                model.rebuild_admittance();
            } catch (const ModelError& e) {
                model.grid.set_in_service(*idx, !want);
                model.rebuild_admittance();
                throw EventError(std::string("topology change rejected: ") + e.what());
            }
        }
        break;
    }
    case EventKind::fault_apply: {
        check_bus(event.bus);
        StaticLoad l;
        l.bus = event.bus - 1;
        l.name = fault_name(event.bus);
        l.kind = LoadKind::constant_admittance;
        l.y_o = event.admittance;
        model.loads.push_back(l);
        break;
    }
    case EventKind::fault_clear: {
        check_bus(event.bus);
        const auto before = model.loads.size();
        const std::string name = fault_name(event.bus);
        std::erase_if(model.loads, [&](const StaticLoad& l) { return l.name == name; });
        changed = model.loads.size() != before;
        break;
    }
    case EventKind::setpoint_step: {
        bool found = false;
        for (auto& m : model.machines) {
            if (m.name == event.target) {
                if (event.field == "pref") {
                    m.pref += event.magnitude;
                } else if (event.field == "vref") {
                    m.vref += event.magnitude;
                } else {
                    throw EventError("machine setpoint '" + event.field + "' is not steppable");
                }
                found = true;
            }
        }
        for (auto& c : model.cigs) {
            if (c.name == event.target) {
                if (event.field == "p_ref") {
                    c.p_ref += event.magnitude;
                } else if (event.field == "q_ref") {
                    c.q_ref += event.magnitude;
                } else if (event.field == "v_ref") {
                    c.v_ref += event.magnitude;
                } else if (event.field == "omega_ref") {
                    c.omega_ref += event.magnitude;
                } else {
                    throw EventError("cig setpoint '" + event.field + "' is not steppable");
                }
                found = true;
            }
        }
        if (!found) {
            throw EventError("setpoint target '" + event.target + "' not found");
        }
        break;
    }
    }

    SystemState out = changed ? reinitialize_algebraic(model, state, opts) : state;
    out.log.push_back({event.time, state.t, describe(event) + (changed ? "" : " [no-op]")});
    out.event_step = changed || state.event_step;
    return out;
}

// ---------------------------------------------------------------------------

double coi_speed(const Model& model, const Eigen::VectorXd& x)
{
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < model.machines.size(); ++i) {
        const double M = model.machines[i].inertia(model.omega_o());
        num += M * x[static_cast<Eigen::Index>(model.machine_offset(i) + MachineStates::omega)];
        den += M;
    }
    return den > 0.0 ? num / den : 0.0;
}

double active_power_balance(const Model& model, const SystemState& state)
{
    const auto vbar = state.phasors();
    const auto s_dev = device_injections(model, state.x, vbar);
    double injected = 0.0;
    for (const auto& s : s_dev) {
        injected += s.real();
    }
    // Losses branch by branch from the pi-model terminal flows.
    double losses = 0.0;
    for (const auto& br : model.grid.branches()) {
        if (!br.in_service) {
            continue;
        }
        const cplx ys = 1.0 / cplx(br.r, br.x);
        const cplx ysh(0.0, 0.5 * br.b);
        const cplx vf = vbar[br.from - 1];
        const cplx vt = vbar[br.to - 1];
        const cplx i_f = (ys + ysh) / (br.tap * br.tap) * vf - ys / br.tap * vt;
        const cplx i_t = (ys + ysh) * vt - ys / br.tap * vf;
        losses += (vf * std::conj(i_f) + vt * std::conj(i_t)).real();
    }
    for (const auto& bus : model.grid.buses()) {
        losses += bus.shunt_g * std::norm(vbar[bus.index - 1]);
    }
    return injected - losses;
}

}  // namespace cfreq
