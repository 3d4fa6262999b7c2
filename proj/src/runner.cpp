#include "cfreq/runner.hpp"

#include "cfreq/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace cfreq {

RunOptions default_options(const CaseFile& c)
{
    RunOptions o;
    o.t_end = c.scenario.t_end;
    o.dt = c.scenario.dt;
    o.events = c.scenario.events;
    o.record = c.output.record;
    o.seed = c.output.seed;
    o.noise_sigma = c.output.noise_sigma;
    return o;
}

std::vector<int> resolve_record(const RunOptions& opts, std::size_t n_bus)
{
    if (!opts.record.empty()) {
        return opts.record;
    }
    std::vector<int> all(n_bus);
    for (std::size_t h = 0; h < n_bus; ++h) {
        all[h] = static_cast<int>(h) + 1;
    }
    return all;
}

namespace {

struct ScheduledEvent {
    long step;
    Event event;
};

void update_max(double& slot, double value) { slot = std::max(slot, value); }

}  // namespace

RunResult run_scenario(const CaseFile& c, const RunOptions& opts)
{
    if (!(opts.dt > 0.0) || !(opts.t_end > 0.0)) {
        throw InputError("t_end and dt must be positive");
    }
    const auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    res.name = c.name;
    res.model = c.model;
    Model& model = res.model;
    const std::size_t n = model.n_bus();
    for (int b : opts.record) {
        if (b < 1 || b > static_cast<int>(n)) {
            throw InputError("recorded bus " + std::to_string(b) + " does not exist");
        }
    }

    SystemState state = solve_power_flow(model, {}, &res.power_flow);

    const long n_steps = std::lround(opts.t_end / opts.dt);
    std::vector<ScheduledEvent> schedule;
    for (const auto& e : opts.events) {
        const long k = std::lround(e.time / opts.dt);
        schedule.push_back({k, e});
    }
    std::stable_sort(schedule.begin(), schedule.end(),
                     [](const ScheduledEvent& a, const ScheduledEvent& b) { return a.step < b.step; });

    std::vector<PllEstimator> plls(n);
    for (std::size_t h = 0; h < n; ++h) {
        plls[h].bus = static_cast<int>(h);
        plls[h].params = opts.pll;
    }
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    ComplexFrequency last_cf = ComplexFrequency::zeros(n);
    std::size_t next_event = 0;
    res.samples.reserve(static_cast<std::size_t>(n_steps) + 1);
    auto& st = res.stats;

    for (long i = 0; i <= n_steps; ++i) {
        if (i > 0) {
            state = step(model, state, opts.dt);
        }
        state.t = static_cast<double>(i) * opts.dt;
        while (next_event < schedule.size() && schedule[next_event].step <= i) {
            const auto& se = schedule[next_event];
            state = apply_event(model, state, se.event);
            ++next_event;
        }

        Sample smp;
        smp.t = state.t;
        if (state.event_step) {
            smp.flags |= kFlagEvent;
        }
        smp.coi_omega = coi_speed(model, state.x);
        const auto volt = state.voltages();
        smp.v = volt.v;
        smp.theta = volt.theta;

        const CfSnapshot snap = make_snapshot(model, state);
        ComplexFrequency cf = solve_cf_power_form(snap);
        if (cf.singular) {
            smp.flags |= kFlagSingular;
            ++st.singular_samples;
            cf = last_cf;  // carry forward
        } else {
            last_cf = cf;
        }
        smp.rho.assign(cf.rho.data(), cf.rho.data() + n);
        smp.omega.assign(cf.omega.data(), cf.omega.data() + n);
        const Eigen::VectorXd fdf = fdf_estimate(model, state.x);
        smp.omega_fdf.assign(fdf.data(), fdf.data() + n);

        smp.omega_pll.resize(n);
        smp.rho_pll.resize(n);
        const auto vbar = snap.vbar;
        for (std::size_t h = 0; h < n; ++h) {
            cplx meas = vbar[h];
            if (opts.noise_sigma > 0.0) {
                const double nr = noise(rng);
                const double ni = noise(rng);
                meas += opts.noise_sigma * cplx(nr, ni);
            }
            const auto out = pll_step(plls[h], meas, opts.dt);
            smp.omega_pll[h] = out.omega;
            smp.rho_pll[h] = out.rho;
        }

        ++st.steps;
        if (smp.is_event()) {
            ++st.event_samples;
        } else if ((smp.flags & kFlagSingular) == 0u) {
            st.max_newton_iterations = std::max(st.max_newton_iterations, state.newton_iterations);
            update_max(st.max_g, eval_g(model, state.x, state.y).cwiseAbs().maxCoeff());
            update_max(st.max_power_balance, std::abs(active_power_balance(model, state)));
            for (double r : sdot_residual(snap, cf)) {
                update_max(st.max_sdot_residual, r);
            }
            const ComplexFrequency cur = solve_cf_current_form(snap);
            const ComplexFrequency cmp = solve_cf_compact_form(snap);
            for (std::size_t h = 0; h < n; ++h) {
                update_max(st.max_current_vs_power, std::abs(cur.eta(h) - cf.eta(h)));
                update_max(st.max_compact_vs_power, std::abs(cmp.eta(h) - cf.eta(h)));
                update_max(st.max_eta, std::abs(cf.eta(h)));
            }
            const auto special = special_case_residuals(model, snap, cf);
            const auto xi = current_complex_frequency(snap, cf);
            for (std::size_t h = 0; h < n; ++h) {
                const double r = std::abs(special[h].residual);
                switch (special[h].kind) {
                case SpecialCase::constant_admittance:
                    update_max(st.max_constant_admittance, r);
                    if (xi.defined[h]) {
                        update_max(st.max_xi_minus_eta, std::abs(xi.xi[h] - cf.eta(h)));
                    }
                    break;
                case SpecialCase::constant_power: update_max(st.max_constant_power, r); break;
                case SpecialCase::constant_current: update_max(st.max_constant_current, r); break;
                case SpecialCase::current_power_factor:
                    update_max(st.max_current_power_factor, r);
                    break;
                case SpecialCase::voltage_dependent: update_max(st.max_voltage_dependent, r); break;
                default: break;
                }
            }
            const ApproxReport ap = approx_forms(model.ybus, snap, cf);
            update_max(st.approx.exact, ap.exact);
            update_max(st.approx.app1, ap.app1);
            update_max(st.approx.app2, ap.app2);
            update_max(st.approx.idot_exact, ap.idot_exact);
            update_max(st.approx.idot_app1, ap.idot_app1);
            update_max(st.approx.idot_app2, ap.idot_app2);
            update_max(st.approx.s1_angle, ap.s1_angle);
            update_max(st.approx.s1_magnitude, ap.s1_magnitude);
        }
        res.samples.push_back(std::move(smp));
    }
    res.log = state.log;
    for (const auto& se : schedule) {
        if (std::abs(static_cast<double>(se.step) * opts.dt - se.event.time) > 1e-12) {
            res.log.push_back({se.event.time, static_cast<double>(se.step) * opts.dt,
                               "event time snapped to the step grid"});
        }
    }
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

std::vector<std::string> csv_columns(const std::vector<int>& record)
{
    std::vector<std::string> cols{"time", "event", "coi.omega"};
    for (int b : record) {
        for (const char* q : {"v", "theta", "rho", "omega", "omega_pll", "rho_pll", "omega_fdf", "flag"}) {
            cols.push_back(fmt::format("bus{}.{}", b, q));
        }
    }
    return cols;
}

std::string format_csv(const RunResult& r, const std::vector<int>& record)
{
    fmt::memory_buffer out;
    const auto cols = csv_columns(record);
    fmt::format_to(std::back_inserter(out), "{}\n", fmt::join(cols, ","));
    for (const auto& s : r.samples) {
        fmt::format_to(std::back_inserter(out), "{:.17g},{},{:.17g}", s.t, s.is_event() ? 1 : 0,
                       s.coi_omega);
        for (int b : record) {
            const auto h = static_cast<std::size_t>(b - 1);
            fmt::format_to(std::back_inserter(out), ",{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}",
                           s.v[h], s.theta[h], s.rho[h], s.omega[h], s.omega_pll[h], s.rho_pll[h],
                           s.omega_fdf[h], s.flags);
        }
        out.push_back('\n');
    }
    return fmt::to_string(out);
}

std::string format_summary(const RunResult& r, const RunOptions& opts)
{
    using nlohmann::json;
    const auto& s = r.stats;
    json j;
    j["name"] = r.name;
    j["t_end"] = opts.t_end;
    j["dt"] = opts.dt;
    j["seed"] = opts.seed;
    j["noise_sigma"] = opts.noise_sigma;
    j["power_flow"] = {{"iterations", r.power_flow.iterations}, {"mismatch", r.power_flow.mismatch}};
    j["steps"] = s.steps;
    j["event_samples"] = s.event_samples;
    j["singular_samples"] = s.singular_samples;
    j["max_newton_iterations"] = s.max_newton_iterations;
    j["residuals"] = {
        {"algebraic", s.max_g},
        {"power_balance", s.max_power_balance},
        {"sdot_back_substitution", s.max_sdot_residual},
        {"current_vs_power_form", s.max_current_vs_power},
        {"compact_vs_power_form", s.max_compact_vs_power},
        {"constant_admittance_identity", s.max_constant_admittance},
        {"constant_power_identity", s.max_constant_power},
        {"constant_current_identity", s.max_constant_current},
        {"current_power_factor_identity", s.max_current_power_factor},
        {"voltage_dependent_identity", s.max_voltage_dependent},
        {"current_cf_minus_eta_at_impedances", s.max_xi_minus_eta},
    };
    j["approximations"] = {
        {"power_exact", s.approx.exact},     {"power_app1", s.approx.app1},
        {"power_app2", s.approx.app2},       {"current_exact", s.approx.idot_exact},
        {"current_app1", s.approx.idot_app1}, {"current_app2", s.approx.idot_app2},
        {"split_angle", s.approx.s1_angle},  {"split_magnitude", s.approx.s1_magnitude},
    };
    j["max_abs_eta"] = s.max_eta;
    json log = json::array();
    for (const auto& e : r.log) {
        log.push_back({{"requested", e.requested_time}, {"applied", e.applied_time},
                       {"description", e.description}});
    }
    j["events"] = log;
    return j.dump(2) + "\n";
}

std::string format_plot_script(const std::string& csv_name, const std::vector<int>& record)
{
    fmt::memory_buffer out;
    auto w = [&out](std::string_view s) { out.append(s); };
    w("import sys\n"
      "import pandas as pd\n"
      "import matplotlib\n"
      "matplotlib.use('Agg')\n"
      "import matplotlib.pyplot as plt\n\n");
    fmt::format_to(std::back_inserter(out), "CSV = sys.argv[1] if len(sys.argv) > 1 else '{}'\n", csv_name);
    fmt::format_to(std::back_inserter(out), "BUSES = [{}]\n", fmt::join(record, ", "));
    w("df = pd.read_csv(CSV)\n"
      "t = df['time']\n"
      "stem = CSV.rsplit('.', 1)[0]\n\n"
      "# bus frequency deviation: complex frequency vs PLL vs frequency divider\n"
      "fig, axes = plt.subplots(len(BUSES), 1, sharex=True, figsize=(7, 2.2 * len(BUSES)), squeeze=False)\n"
      "for ax, b in zip(axes[:, 0], BUSES):\n"
      "    ax.plot(t, df[f'bus{b}.omega'], label='omega (CF)')\n"
      "    ax.plot(t, df[f'bus{b}.omega_pll'], '--', label='omega (PLL)')\n"
      "    ax.plot(t, df[f'bus{b}.omega_fdf'], ':', label='omega (FDF)')\n"
      "    ax.set_ylabel(f'bus {b} [rad/s]')\n"
      "axes[0, 0].legend(loc='best')\n"
      "axes[-1, 0].set_xlabel('time [s]')\n"
      "fig.tight_layout()\n"
      "fig.savefig(stem + '_omega.png', dpi=150)\n\n"
      "# real part of the complex frequency\n"
      "fig, ax = plt.subplots(figsize=(7, 3))\n"
      "for b in BUSES:\n"
      "    ax.plot(t, df[f'bus{b}.rho'], label=f'rho bus {b}')\n"
      "ax.set_xlabel('time [s]')\n"
      "ax.set_ylabel('rho [1/s]')\n"
      "ax.legend(loc='best')\n"
      "fig.tight_layout()\n"
      "fig.savefig(stem + '_rho.png', dpi=150)\n\n"
      "# centre-of-inertia frequency deviation\n"
      "fig, ax = plt.subplots(figsize=(7, 3))\n"
      "ax.plot(t, df['coi.omega'] / (2 * 3.141592653589793))\n"
      "ax.set_xlabel('time [s]')\n"
      "ax.set_ylabel('COI deviation [Hz]')\n"
      "fig.tight_layout()\n"
      "fig.savefig(stem + '_coi.png', dpi=150)\n");
    return fmt::to_string(out);
}

}  // namespace cfreq
