#pragma once

// JSON case files: grid, devices, scenario and output sections.
// The schema is described in README.md. Unknown keys are rejected.

#include "cfreq/engine.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cfreq {

struct ScenarioSpec {
    double t_end = 10.0;
    double dt = 1e-3;
    std::vector<Event> events;
};

struct OutputSpec {
    std::vector<int> record;  // 1-based bus indices; empty = every bus
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
};

struct CaseFile {
    std::string name;
    Model model;  // devices hold power-flow data; states are created by solve_power_flow
    ScenarioSpec scenario;
    OutputSpec output;
};

/// Parses and validates a case document. Throws InputError naming the first violation.
CaseFile parse_case(const std::string& text, const std::string& origin = "<case>");
CaseFile load_case(const std::filesystem::path& path);

/// Command-line event grammar:
///   load5-trip[:fraction]@t     load5-connect:p[:q]@t
///   line5-7-trip@t              line5-7-close@t
///   fault7@t                    fault7-clear@t
/// Throws InputError.
Event parse_event_spec(const std::string& spec);

}  // namespace cfreq
