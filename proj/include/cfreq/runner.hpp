#pragma once

// Scenario orchestration: power flow, time stepping with scheduled events, and
// at every accepted step the complex frequency (three forms), the measurement
// PLL, the frequency-divider estimate and the residual diagnostics.

#include "cfreq/casefile.hpp"
#include "cfreq/cfreq.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cfreq {

struct RunOptions {
    double t_end = 10.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    double noise_sigma = 0.0;
    std::vector<int> record;  // 1-based; empty = every bus
    std::vector<Event> events;
    PllParams pll;
};

/// Options from the case file's scenario and output sections.
RunOptions default_options(const CaseFile& c);

enum SampleFlag : unsigned { kFlagEvent = 1u, kFlagSingular = 2u };

struct Sample {
    double t = 0.0;
    unsigned flags = 0;
    double coi_omega = 0.0;
    std::vector<double> v, theta;
    std::vector<double> rho, omega;
    std::vector<double> omega_pll, rho_pll;
    std::vector<double> omega_fdf;

    bool is_event() const { return (flags & kFlagEvent) != 0u; }
};

/// Worst cases over every non-event sample.
struct RunStats {
    std::size_t steps = 0;
    std::size_t event_samples = 0;
    std::size_t singular_samples = 0;
    int max_newton_iterations = 0;
    double max_g = 0.0;               // algebraic residual
    double max_power_balance = 0.0;   // injections minus losses
    double max_sdot_residual = 0.0;   // back-substitution of the power form
    double max_current_vs_power = 0.0;
    double max_compact_vs_power = 0.0;
    double max_eta = 0.0;
    double max_constant_admittance = 0.0;
    double max_constant_power = 0.0;
    double max_constant_current = 0.0;
    double max_current_power_factor = 0.0;
    double max_voltage_dependent = 0.0;
    double max_xi_minus_eta = 0.0;  // at constant-admittance buses
    ApproxReport approx;            // componentwise maxima
};

struct RunResult {
    std::string name;
    Model model;  // post-run model (topology and devices after all events)
    std::vector<Sample> samples;
    RunStats stats;
    std::vector<EventRecord> log;
    PowerFlowReport power_flow;
    double wall_seconds = 0.0;
};

/// Runs one scenario. Throws the library error types.
RunResult run_scenario(const CaseFile& c, const RunOptions& opts);

/// CSV text: time, event, coi.omega, then bus<k>.{v,theta,rho,omega,omega_pll,rho_pll,omega_fdf,flag}.
std::string format_csv(const RunResult& r, const std::vector<int>& record);

std::vector<std::string> csv_columns(const std::vector<int>& record);

/// JSON summary with residual statistics and the event log.
std::string format_summary(const RunResult& r, const RunOptions& opts);

/// Python/matplotlib script plotting the emitted CSV.
std::string format_plot_script(const std::string& csv_name, const std::vector<int>& record);

/// Record list with the "all buses" default resolved.
std::vector<int> resolve_record(const RunOptions& opts, std::size_t n_bus);

}  // namespace cfreq
