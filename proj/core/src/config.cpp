#include "nvi/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "nvi/errors.hpp"

namespace nvi {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key))
            throw config_error("unknown key '" + where + "." + key + "'");
    }
}

template <class T>
void read_field(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) obj.at(key).get_to(out);
}

void read_seed(const json& obj, const char* key, std::uint64_t& out) {
    if (obj.contains(key)) out = obj.at(key).get<std::uint64_t>();
}

double read_p(const json& obj, const std::string& where) {
    if (!obj.contains("p")) return std::numeric_limits<double>::infinity();
    const auto& v = obj.at("p");
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw config_error(where + ".p must be 2 or \"inf\"");
    }
    return v.get<double>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw config_error("config root must be an object");
    reject_unknown_keys(doc, {"mdp", "agent", "diagnostics", "output"}, "config");

    ExperimentConfig cfg;
    if (doc.contains("mdp")) {
        const auto& m = doc.at("mdp");
        reject_unknown_keys(m, {"generator", "d_s", "H", "A", "alpha", "p", "norm_radius", "levels", "seed"},
                            "mdp");
        read_field(m, "generator", cfg.mdp.generator);
        read_field(m, "d_s", cfg.mdp.d_s);
        read_field(m, "H", cfg.mdp.H);
        read_field(m, "A", cfg.mdp.A);
        read_field(m, "alpha", cfg.mdp.alpha);
        cfg.mdp.p = read_p(m, "mdp");
        read_field(m, "norm_radius", cfg.mdp.norm_radius);
        read_field(m, "levels", cfg.mdp.levels);
        read_seed(m, "seed", cfg.mdp.seed);
    }
    if (doc.contains("agent")) {
        const auto& a = doc.at("agent");
        reject_unknown_keys(a,
                            {"family", "T", "epsilon", "rho", "K", "c", "eps_c", "norm_bound", "m", "L",
                             "refit_every", "warm_start", "baseline", "exploration", "fit", "seed"},
                            "agent");
        read_field(a, "family", cfg.agent.family);
        read_field(a, "T", cfg.agent.T);
        if (a.contains("epsilon")) {
            const auto& e = a.at("epsilon");
            if (e.is_string()) {
                if (e.get<std::string>() != "scheduled")
                    throw config_error("agent.epsilon must be a number in (0,1) or \"scheduled\"");
                cfg.agent.epsilon_scheduled = true;
            } else {
                cfg.agent.epsilon_scheduled = false;
                cfg.agent.epsilon_value = e.get<double>();
            }
        }
        read_field(a, "rho", cfg.agent.rho);
        read_field(a, "K", cfg.agent.K);
        read_field(a, "c", cfg.agent.c);
        read_field(a, "eps_c", cfg.agent.eps_c);
        read_field(a, "norm_bound", cfg.agent.norm_bound);
        read_field(a, "m", cfg.agent.width_override);
        read_field(a, "L", cfg.agent.depth_override);
        read_field(a, "refit_every", cfg.agent.refit_every);
        read_field(a, "warm_start", cfg.agent.warm_start);
        read_field(a, "baseline", cfg.agent.baseline);
        read_field(a, "exploration", cfg.agent.exploration);
        if (a.contains("fit")) {
            const auto& f = a.at("fit");
            reject_unknown_keys(
                f, {"learning_rate", "max_epochs", "stop_tolerance", "projection_cadence", "restarts"},
                "agent.fit");
            read_field(f, "learning_rate", cfg.agent.fit_learning_rate);
            read_field(f, "max_epochs", cfg.agent.fit_max_epochs);
            read_field(f, "stop_tolerance", cfg.agent.fit_stop_tolerance);
            read_field(f, "projection_cadence", cfg.agent.fit_projection_cadence);
            read_field(f, "restarts", cfg.agent.fit_restarts);
        }
        read_seed(a, "seed", cfg.agent.seed);
    }
    if (doc.contains("diagnostics")) {
        const auto& d = doc.at("diagnostics");
        reject_unknown_keys(
            d, {"cadence", "oracle_resolution", "oracle_mc_samples", "mc_next_samples", "approx_probe"},
            "diagnostics");
        read_field(d, "cadence", cfg.diagnostics.cadence);
        read_field(d, "oracle_resolution", cfg.diagnostics.oracle_resolution);
        read_field(d, "oracle_mc_samples", cfg.diagnostics.oracle_mc_samples);
        read_field(d, "mc_next_samples", cfg.diagnostics.mc_next_samples);
        read_field(d, "approx_probe", cfg.diagnostics.approx_probe);
    }
    if (doc.contains("output")) {
        const auto& o = doc.at("output");
        reject_unknown_keys(o, {"dir", "formats"}, "output");
        read_field(o, "dir", cfg.output.dir);
        read_field(o, "formats", cfg.output.formats);
    }
    cfg.validate();
    return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
    json m{{"generator", mdp.generator}, {"d_s", mdp.d_s},     {"H", mdp.H},
           {"A", mdp.A},                 {"alpha", mdp.alpha}, {"norm_radius", mdp.norm_radius},
           {"levels", mdp.levels},       {"seed", mdp.seed}};
    if (std::isinf(mdp.p)) {
        m["p"] = "inf";
    } else {
        m["p"] = mdp.p;
    }
    json a{{"family", agent.family},
           {"T", agent.T},
           {"rho", agent.rho},
           {"K", agent.K},
           {"c", agent.c},
           {"eps_c", agent.eps_c},
           {"norm_bound", agent.norm_bound},
           {"m", agent.width_override},
           {"L", agent.depth_override},
           {"refit_every", agent.refit_every},
           {"warm_start", agent.warm_start},
           {"baseline", agent.baseline},
           {"exploration", agent.exploration},
           {"fit",
            {{"learning_rate", agent.fit_learning_rate},
             {"max_epochs", agent.fit_max_epochs},
             {"stop_tolerance", agent.fit_stop_tolerance},
             {"projection_cadence", agent.fit_projection_cadence},
             {"restarts", agent.fit_restarts}}},
           {"seed", agent.seed}};
    if (agent.epsilon_scheduled) {
        a["epsilon"] = "scheduled";
    } else {
        a["epsilon"] = agent.epsilon_value;
    }
    json d{{"cadence", diagnostics.cadence},
           {"oracle_resolution", diagnostics.oracle_resolution},
           {"oracle_mc_samples", diagnostics.oracle_mc_samples},
           {"mc_next_samples", diagnostics.mc_next_samples},
           {"approx_probe", diagnostics.approx_probe}};
    json o{{"dir", output.dir}, {"formats", output.formats}};
    return json{{"mdp", m}, {"agent", a}, {"diagnostics", d}, {"output", o}};
}

void ExperimentConfig::validate() const {
    if (mdp.generator != "tabular_random" && mdp.generator != "bump_superposition" &&
        mdp.generator != "barron_random_features")
        throw config_error("mdp.generator: unsupported generator '" + mdp.generator + "'");
    if (mdp.d_s < 1) throw config_error("mdp.d_s must be >= 1");
    if (mdp.H < 1) throw config_error("mdp.H must be >= 1");
    if (mdp.A < 2) throw config_error("mdp.A must be >= 2");
    if (!(mdp.alpha > 0.0)) throw config_error("mdp.alpha must be > 0");
    if (!(mdp.p == 2.0 || std::isinf(mdp.p))) throw config_error("mdp.p must be 2 or \"inf\"");
    if (!(mdp.norm_radius > 0.0)) throw config_error("mdp.norm_radius must be > 0");
    if (mdp.levels < 0) throw config_error("mdp.levels must be >= 0");

    if (agent.family != "barron_shallow" && agent.family != "besov_deep")
        throw config_error("agent.family must be barron_shallow or besov_deep");
    if (agent.T < 1) throw config_error("agent.T must be >= 1");
    if (!agent.epsilon_scheduled && !(agent.epsilon_value > 0.0 && agent.epsilon_value < 1.0))
        throw config_error("agent.epsilon must lie in (0,1)");
    if (!(agent.rho > 0.0 && agent.rho < 1.0)) throw config_error("agent.rho must lie in (0,1)");
    if (agent.K < 1 || agent.K > mdp.H) throw config_error("agent.K must lie in [1, H]");
    if (!(agent.c > 0.0)) throw config_error("agent.c must be > 0");
    if (!(agent.eps_c > 0.0)) throw config_error("agent.eps_c must be > 0");
    if (agent.norm_bound < 0.0) throw config_error("agent.norm_bound must be >= 0");
    if (agent.width_override < 0) throw config_error("agent.m must be >= 1 when set");
    if (agent.depth_override < 0) throw config_error("agent.L must be >= 2 when set");
    if (agent.depth_override == 1) throw config_error("agent.L must be >= 2 when set");
    if (agent.refit_every < 1) throw config_error("agent.refit_every must be >= 1");
    if (agent.exploration != "step" && agent.exploration != "episode")
        throw config_error("agent.exploration must be step or episode");
    if (!(agent.fit_learning_rate > 0.0)) throw config_error("agent.fit.learning_rate must be > 0");
    if (agent.fit_max_epochs < 1) throw config_error("agent.fit.max_epochs must be >= 1");
    if (agent.fit_stop_tolerance < 0.0)
        throw config_error("agent.fit.stop_tolerance must be >= 0");
    if (agent.fit_projection_cadence < 1)
        throw config_error("agent.fit.projection_cadence must be >= 1");
    if (agent.fit_restarts < 1) throw config_error("agent.fit.restarts must be >= 1");

    if (diagnostics.cadence < 0) throw config_error("diagnostics.cadence must be >= 0");
    if (diagnostics.oracle_resolution < 1)
        throw config_error("diagnostics.oracle_resolution must be >= 1");
    if (diagnostics.oracle_mc_samples < 1)
        throw config_error("diagnostics.oracle_mc_samples must be >= 1");
    if (diagnostics.mc_next_samples < 1)
        throw config_error("diagnostics.mc_next_samples must be >= 1");

    if (output.dir.empty()) throw config_error("output.dir must not be empty");
    for (const auto& f : output.formats) {
        if (f != "csv" && f != "json") throw config_error("output.formats: unsupported format '" + f + "'");
    }
}

MdpSpec ExperimentConfig::build_mdp() const {
    TargetSpec spec;
    spec.alpha = mdp.alpha;
    spec.p = mdp.p;
    spec.norm_radius = mdp.norm_radius;
    spec.level_count = mdp.levels;
    spec.seed = mdp.seed;
    if (mdp.generator == "tabular_random") {
        spec.construction = Construction::tabular_random;
    } else if (mdp.generator == "bump_superposition") {
        spec.construction = Construction::bump_superposition;
    } else {
        spec.construction = Construction::barron_random_features;
    }
    return make_synthetic_mdp(spec, mdp.H, mdp.A, mdp.d_s, mdp.seed);
}

Family ExperimentConfig::family() const {
    return agent.family == "besov_deep" ? Family::besov_deep : Family::barron_shallow;
}

AgentConfig ExperimentConfig::agent_config() const {
    AgentConfig a;
    a.episodes = static_cast<int>(agent.T);
    a.epsilon_mode = agent.epsilon_scheduled ? EpsilonMode::scheduled : EpsilonMode::fixed;
    a.epsilon_fixed = agent.epsilon_value;
    a.rho = agent.rho;
    a.myopia = agent.K;
    a.family = family();
    a.fit.learning_rate = agent.fit_learning_rate;
    a.fit.max_epochs = agent.fit_max_epochs;
    a.fit.stop_tolerance = agent.fit_stop_tolerance;
    a.fit.projection_cadence = agent.fit_projection_cadence;
    a.fit.restarts = agent.fit_restarts;
    a.seed = agent.seed;
    a.alpha = mdp.alpha;
    a.arch_c = agent.c;
    a.eps_c = agent.eps_c;
    a.norm_bound = agent.norm_bound;
    a.refit_every = agent.refit_every;
    a.warm_start = agent.warm_start;
    a.baseline_uniform = agent.baseline;
    a.exploration = agent.exploration == "episode" ? ExplorationGranularity::episode
                                                   : ExplorationGranularity::step;
    return a;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config parse error in " + path + ": " + e.what());
    }
    return ExperimentConfig::from_json(doc);
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string text = config.to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : text) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace nvi
