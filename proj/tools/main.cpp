#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nvi/config.hpp"
#include "nvi/errors.hpp"
#include "nvi/experiment.hpp"

namespace {

// exit codes: 0 ok, 1 I/O or runtime failure, 2 validation error
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

void print_error(const std::string& kind, const std::string& what) {
    std::cerr << "{\"error\": \"" << kind << "\", \"detail\": \"" << what << "\"}" << std::endl;
}

std::string output_dir_override(const std::string& configured) {
    if (const char* env = std::getenv("NVI_OUTPUT_DIR"); env && *env) return env;
    return configured;
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) values.push_back(std::stod(item));
    }
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"value-iteration experiment lab"};
    app.require_subcommand(1);

    std::string config_path;
    std::string axis;
    std::string values_csv;
    std::string report_dir;
    int jobs = 1;

    auto* run_cmd = app.add_subcommand("run", "run one experiment from a config file");
    run_cmd->add_option("config", config_path, "config file (JSON)")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "run one experiment per value along an axis");
    sweep_cmd->add_option("config", config_path, "config file (JSON)")->required();
    sweep_cmd->add_option("--axis", axis, "parameter to sweep (T, alpha, epsilon, m, L, seed)")
        ->required();
    sweep_cmd->add_option("--values", values_csv, "comma-separated value list")->required();
    sweep_cmd->add_option("--jobs", jobs, "parallel cells");

    auto* report_cmd = app.add_subcommand("report", "emit plots and a text summary for a run/sweep");
    report_cmd->add_option("dir", report_dir, "completed run or sweep directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const nvi::ExperimentConfig config = nvi::load_config(config_path);
            const std::string dir = output_dir_override(config.output.dir);
            nvi::run_to_directory(config, dir);
            std::cout << "run complete: " << dir << std::endl;
            return kExitOk;
        }
        if (sweep_cmd->parsed()) {
            const nvi::ExperimentConfig config = nvi::load_config(config_path);
            if (!nvi::sweepable_axis(axis)) {
                print_error("validation", "unsupported sweep axis '" + axis + "'");
                return kExitValidation;
            }
            const auto values = parse_values(values_csv);
            const std::string dir = output_dir_override(config.output.dir);
            nvi::sweep(config, axis, values, jobs, dir);
            std::cout << "sweep complete: " << dir << std::endl;
            return kExitOk;
        }
        if (report_cmd->parsed()) {
            nvi::report(report_dir);
            std::cout << "report written to " << report_dir << std::endl;
            return kExitOk;
        }
    } catch (const nvi::config_error& e) {
        print_error("validation", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        print_error("runtime", e.what());
        return kExitRuntime;
    }
    return kExitRuntime;
}
