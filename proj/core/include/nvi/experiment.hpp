#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvi/config.hpp"
#include "nvi/oracle.hpp"
#include "nvi/regret.hpp"

namespace nvi {

struct RunHooks {
    // Test hook: use this stack for every episode and skip fitting.
    const QStack* fixed_stack = nullptr;
};

struct RunResult {
    RegretLedger ledger;
    QStack final_stack;
    TabularMdp oracle_mdp;
    ValueTables stars;
    nlohmann::json diagnostics = nlohmann::json::array();
};

/// Algorithm-1 episode loop with full instrumentation: per-episode backward
/// fitting on replay mini-batches, epsilon-greedy rollout, exact oracle
/// regret accounting and cadence diagnostics. Deterministic given the config.
RunResult run_experiment(const MdpSpec& mdp, const ExperimentConfig& config,
                         const RunHooks& hooks = {});

/// Runs one experiment and writes ledger.csv, diagnostics.json, qstack.json
/// and manifest.json (plus probe.csv when the config asks for the
/// approximation probe) into `dir`.
RunResult run_to_directory(const ExperimentConfig& config, const std::filesystem::path& dir);

bool sweepable_axis(const std::string& axis);

/// One experiment per value along `axis` (parallel up to `jobs`); cell output
/// in dir/cell_<i>; summary.csv gains one row per cell plus a pooled
/// exponent-fit row.
void sweep(const ExperimentConfig& base, const std::string& axis,
           const std::vector<double>& values, int jobs, const std::filesystem::path& dir);

/// Emits the SVG plot set and summary.txt for a completed run or sweep
/// directory. Throws std::runtime_error listing the expected files when the
/// directory holds neither.
void report(const std::filesystem::path& run_dir);

}  // namespace nvi
