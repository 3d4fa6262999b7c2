#pragma once

// Power-flow initialization, fixed-step implicit-trapezoidal integration of
//   x' = f(x, y),  0 = g(x, y)
// and scripted discrete events that switch the structure of f and g.
//
// Algebraic vector layout: y = [theta_1..theta_n, v_1..v_n].
// State vector layout: 6 slots per machine, then 6 slots per CIG.

#include "cfreq/devices.hpp"
#include "cfreq/netmodel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace cfreq {

struct Model {
    Grid grid;
    Admittance ybus;
    std::vector<SynMachine> machines;
    std::vector<StaticLoad> loads;
    std::vector<Vdl> vdls;
    std::vector<Cig> cigs;

    std::size_t n_bus() const { return grid.n_bus(); }
    std::size_t n_x() const;
    std::size_t n_y() const { return 2 * n_bus(); }
    std::size_t machine_offset(std::size_t i) const { return i * MachineStates::kCount; }
    std::size_t cig_offset(std::size_t i) const;
    double omega_o() const { return grid.omega_o(); }

    void rebuild_admittance() { ybus = build_admittance(grid); }
    /// Checks device bus references; throws ModelError.
    void validate() const;
};

enum class EventKind {
    load_disconnect,  // magnitude = fraction removed (1 = full outage)
    load_connect,     // power = consumption p + jq, load_kind selects the model
    line_trip,
    line_close,
    fault_apply,      // admittance = fault shunt (current drawn = Y v)
    fault_clear,
    setpoint_step     // target device name, field, magnitude = increment
};

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::load_disconnect;
    int bus = 0;     // 1-based
    int bus_to = 0;  // 1-based, line events
    double magnitude = 1.0;
    cplx power{};
    cplx admittance{0.0, -1000.0};
    LoadKind load_kind = LoadKind::constant_power;
    std::string target;
    std::string field;
    std::string label;
};

std::string describe(const Event& e);

struct EventRecord {
    double requested_time;
    double applied_time;
    std::string description;
};

struct SystemState {
    double t = 0.0;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd xdot;
    std::vector<EventRecord> log;
    bool event_step = false;  // state is the post-event right limit at an event instant
    int newton_iterations = 0;

    BusVoltages voltages() const;
    std::vector<cplx> phasors() const;
};

struct PowerFlowOptions {
    double tolerance = 1e-10;
    int max_iterations = 20;
};

struct PowerFlowReport {
    int iterations = 0;
    double mismatch = 0.0;
};

struct NewtonOptions {
    double tolerance = 1e-11;
    int max_iterations = 20;
    // Accepted residual when the Newton update has reached rounding level.
    double floor_tolerance = 1e-8;
};

/// f(x, y)
Eigen::VectorXd eval_f(const Model& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y);
/// g(x, y) = device currents - network currents Y v, [Re; Im] per bus.
/// The current balance is used instead of the power balance because the
/// latter is also satisfied by v_h = 0 at buses without devices.
Eigen::VectorXd eval_g(const Model& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Device-side current injection at every bus.
std::vector<cplx> device_currents(const Model& model, const Eigen::VectorXd& x,
                                  const std::vector<cplx>& vbar);

/// Device-side complex injection at every bus.
std::vector<cplx> device_injections(const Model& model, const Eigen::VectorXd& x,
                                    const std::vector<cplx>& vbar);

/// Newton power flow, then device back-initialization so that every derivative vanishes.
/// Throws InitError on non-convergence.
SystemState solve_power_flow(Model& model, const PowerFlowOptions& opts = {},
                             PowerFlowReport* report = nullptr);

/// One implicit-trapezoidal step of signed size h (negative steps run backwards).
/// Throws StepError on Newton failure.
SystemState trapezoidal_step(const Model& model, const SystemState& state, double h,
                             const NewtonOptions& opts = {});

/// Forward step; requires dt > 0.
SystemState step(const Model& model, const SystemState& state, double dt,
                 const NewtonOptions& opts = {});

/// Re-solves y at fixed x so that g = 0. Throws EventError on failure.
SystemState reinitialize_algebraic(const Model& model, const SystemState& state,
                                   const NewtonOptions& opts = {});

/// Switches f/g structure and re-solves the algebraic variables at fixed x.
SystemState apply_event(Model& model, const SystemState& state, const Event& event,
                        const NewtonOptions& opts = {});

/// Inertia-weighted mean machine speed deviation (rad/s); zero without machines.
double coi_speed(const Model& model, const Eigen::VectorXd& x);

/// Sum over buses of injections minus total series/shunt losses; zero when g = 0.
double active_power_balance(const Model& model, const SystemState& state);

}  // namespace cfreq
