#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvi/agent.hpp"
#include "nvi/mdp.hpp"

namespace nvi {

struct MdpSection {
    std::string generator = "tabular_random";
    int d_s = 1;
    int H = 3;
    int A = 2;
    double alpha = 1.0;
    double p = std::numeric_limits<double>::infinity();
    double norm_radius = 1.0;
    int levels = 3;
    std::uint64_t seed = 0;
};

struct AgentSection {
    std::string family = "barron_shallow";
    long long T = 100;
    bool epsilon_scheduled = true;
    double epsilon_value = 0.1;  // used when not scheduled
    double rho = 0.5;
    int K = 1;
    double c = 1.0;      // architecture constant
    double eps_c = 1.0;  // schedule constant
    double norm_bound = 0.0;
    int width_override = 0;  // 0 = planner value (sweepable)
    int depth_override = 0;
    int refit_every = 1;
    bool warm_start = false;
    bool baseline = false;
    std::string exploration = "step";
    // fit options
    double fit_learning_rate = 1.0;
    int fit_max_epochs = 200;
    double fit_stop_tolerance = 0.0;  // 0 = H/sqrt(t_tilde)
    int fit_projection_cadence = 1;
    int fit_restarts = 1;
    std::uint64_t seed = 1;
};

struct DiagnosticsSection {
    int cadence = 0;  // 0 = ceil(T/50)
    int oracle_resolution = 16;
    int oracle_mc_samples = 10000;
    int mc_next_samples = 200;
    bool approx_probe = false;
};

struct OutputSection {
    std::string dir = "out";
    std::vector<std::string> formats = {"csv", "json"};
};

/// Whole-experiment configuration. Parsing rejects unknown keys anywhere in
/// the document and validates every field against the owning module's
/// preconditions before a run starts.
struct ExperimentConfig {
    MdpSection mdp;
    AgentSection agent;
    DiagnosticsSection diagnostics;
    OutputSection output;

    static ExperimentConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    void validate() const;  // throws config_error naming the offending field

    MdpSpec build_mdp() const;
    AgentConfig agent_config() const;
    Family family() const;
};

/// Reads and validates a config file. Throws std::runtime_error when the file
/// cannot be read and config_error on parse/validation failures.
ExperimentConfig load_config(const std::string& path);

/// FNV-1a hash of the canonical serialization, hex-encoded; stored in the
/// run manifest.
std::string config_hash(const ExperimentConfig& config);

}  // namespace nvi
