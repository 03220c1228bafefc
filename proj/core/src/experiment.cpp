#include "nvi/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "nvi/errors.hpp"
#include "nvi/probes.hpp"
#include "nvi/serialize.hpp"
#include "nvi/svg.hpp"

namespace nvi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ArchitecturePlan resolve_plan(const ExperimentConfig& config, int feature_dim) {
    const AgentConfig a = config.agent_config();
    ArchitecturePlan plan;
    if (a.family == Family::barron_shallow) {
        const double budget = a.norm_bound > 0.0
                                  ? a.norm_bound
                                  : 4.0 * config.mdp.H * std::sqrt(static_cast<double>(feature_dim));
        plan = plan_architecture_barron(config.agent.T, a.arch_c, budget);
    } else {
        BesovPlanOptions opt;
        opt.c = a.arch_c;
        opt.p = config.mdp.p;
        opt.h_cap = config.mdp.H;
        plan = plan_architecture_besov(std::max<long long>(config.agent.T, 2), feature_dim, a.alpha,
                                       opt);
        if (a.norm_bound > 0.0) plan.norm_bound = a.norm_bound;
    }
    if (config.agent.width_override > 0) plan.width = config.agent.width_override;
    if (config.agent.depth_override > 0) plan.depth = config.agent.depth_override;
    return plan;
}

PolicyMatrix uniform_policy(const TabularMdp& tab) {
    PolicyMatrix pi(static_cast<std::size_t>(tab.horizon) * tab.state_count() * tab.action_count,
                    1.0 / tab.action_count);
    return pi;
}

PolicyMatrix mixture_policy(const TabularMdp& tab, const LearnedTables& learned, double epsilon) {
    const int S = tab.state_count();
    const int A = tab.action_count;
    PolicyMatrix pi(static_cast<std::size_t>(tab.horizon) * S * A, epsilon / A);
    for (int h = 1; h <= tab.horizon; ++h) {
        for (int s = 0; s < S; ++s) {
            const int a = learned.greedy_at(h, s);
            pi[(static_cast<std::size_t>(h - 1) * S + static_cast<std::size_t>(s)) * A +
               static_cast<std::size_t>(a)] += 1.0 - epsilon;
        }
    }
    return pi;
}

}  // namespace

RunResult run_experiment(const MdpSpec& mdp, const ExperimentConfig& config,
                         const RunHooks& hooks) {
    mdp.validate();
    config.validate();
    const AgentConfig agent_cfg = config.agent_config();
    const int H = mdp.horizon;
    const int A = mdp.action_count;
    const long long T = config.agent.T;
    const int feature_dim = mdp.feature_dim();

    Rng rollout_rng(hash64(agent_cfg.seed, "rollout"));
    Rng oracle_rng(hash64(agent_cfg.seed, "oracle"));
    Rng diag_rng(hash64(agent_cfg.seed, "diag"));

    RunResult result;
    result.oracle_mdp = discretize(mdp, config.diagnostics.oracle_resolution,
                                   config.diagnostics.oracle_mc_samples, oracle_rng);
    const TabularMdp& tab = result.oracle_mdp;
    result.stars = solve_optimal(tab);
    const ValueTables& stars = result.stars;
    const PolicyTables uniform_tables = policy_value(tab, uniform_policy(tab));

    const ArchitecturePlan plan = resolve_plan(config, feature_dim);
    ReplayMemory memory(H, A);
    VisitHistogram hist(H, tab.state_count(), A);

    QStack stack;
    LearnedTables learned;
    bool learned_fresh = false;
    if (hooks.fixed_stack) {
        stack = *hooks.fixed_stack;
        learned = learned_tables(tab, stack);
        learned_fresh = true;
    }

    const int cadence = config.diagnostics.cadence > 0
                            ? config.diagnostics.cadence
                            : static_cast<int>((T + 49) / 50);
    int last_fit_t = 0;
    int last_t_tilde = 0;

    for (int t = 1; t <= static_cast<int>(T); ++t) {
        const int stored = memory.size();

        // refit per cadence (Alg. 1 refits every episode; refit_every is the speed knob)
        if (!agent_cfg.baseline_uniform && !hooks.fixed_stack && stored >= 1 &&
            (!stack.trained() || (t - 2) % agent_cfg.refit_every == 0)) {
            stack = backward_fit(memory, stored, agent_cfg, plan, &stack);
            learned = learned_tables(tab, stack);
            learned_fresh = true;
            last_fit_t = stored;
            last_t_tilde = minibatch_size(stored, agent_cfg.rho);
        }

        const bool acting_greedy = stack.trained() && !agent_cfg.baseline_uniform;
        double epsilon = 1.0;
        if (acting_greedy) {
            epsilon = agent_cfg.epsilon_mode == EpsilonMode::scheduled
                          ? epsilon_schedule(t, agent_cfg.alpha, feature_dim, agent_cfg.myopia, H, A,
                                             agent_cfg.family, agent_cfg.eps_c)
                          : agent_cfg.epsilon_fixed;
        }

        // rollout
        State s = mdp.initial_state(rollout_rng);
        const State s1 = s;
        bool episode_explore = false;
        if (acting_greedy && agent_cfg.exploration == ExplorationGranularity::episode)
            episode_explore = rollout_rng.uniform() < epsilon;

        std::vector<Transition> episode;
        episode.reserve(static_cast<std::size_t>(H));
        double realized = 0.0;
        for (int h = 1; h <= H; ++h) {
            int a = 0;
            if (!acting_greedy) {
                a = rollout_rng.uniform_int(A);
            } else if (agent_cfg.exploration == ExplorationGranularity::episode) {
                a = episode_explore ? rollout_rng.uniform_int(A) : stack.greedy_action(h, s);
            } else {
                a = epsilon_greedy_action(stack.at(h), s, epsilon, A, rollout_rng);
            }
            auto [r, next] = step(mdp, h, s, a, rollout_rng);
            hist.record(h, tab.nearest_state(s), a);
            Transition tr;
            tr.h = h;
            tr.state = s;
            tr.action = a;
            tr.reward = r;
            tr.next_state = next;
            episode.push_back(std::move(tr));
            realized += r;
            s = std::move(next);
        }
        hist.episodes += 1;
        memory.store(episode);

        // exact value of the executed policy
        const int s1_cell = tab.nearest_state(s1);
        double v_exec = 0.0;
        if (!acting_greedy) {
            v_exec = uniform_tables.v_at(1, s1_cell);
        } else if (agent_cfg.exploration == ExplorationGranularity::episode) {
            const PolicyTables greedy_tabs = policy_value(tab, greedy_policy(tab, learned.q));
            v_exec = (1.0 - epsilon) * greedy_tabs.v_at(1, s1_cell) +
                     epsilon * uniform_tables.v_at(1, s1_cell);
        } else {
            const PolicyTables mix = policy_value(tab, mixture_policy(tab, learned, epsilon));
            v_exec = mix.v_at(1, s1_cell);
        }

        EpisodeRow row;
        row.t = t;
        row.initial_state = s1;
        row.v_star = stars.v_at(1, s1_cell);
        row.v_realized = realized;
        row.regret = row.v_star - v_exec;
        row.epsilon = epsilon;
        row.t_tilde = last_t_tilde;

        // cadence diagnostics: decomposition of a fresh greedy rollout plus
        // TD-error and generalization-gap snapshots under the fit mini-batch
        if (acting_greedy && t % cadence == 0 && learned_fresh && last_fit_t >= 1) {
            const auto traj = greedy_rollout(tab, learned, s1_cell, diag_rng);
            const auto rec = decompose_episode(tab, stars, learned, traj);
            row.term_i = rec.term_i;
            row.term_ii = rec.term_ii;

            Rng batch_rng(hash64(agent_cfg.seed, "minibatch", static_cast<std::uint64_t>(last_fit_t)));
            const auto indices = memory.sample_indices(
                std::min(last_t_tilde, memory.size()), batch_rng);
            double max_l2 = 0.0;
            json td_norms = json::array();
            for (int h = 1; h <= H; ++h) {
                const auto batch = memory.gather(h, indices);
                const auto field = make_td_field(tab, learned, h, batch);
                max_l2 = std::max(max_l2, field.l2_norm);
                td_norms.push_back(field.l2_norm);
            }
            row.td_l2_max_h = max_l2;

            const auto occ = occupancy_diagnostic(hist, epsilon, A, H, agent_cfg.myopia);
            row.min_occ = occ.min_frequency;

            const auto batch_h1 = memory.gather(1, indices);
            const auto gap = generalization_gap_estimate(tab, learned, 1, batch_h1,
                                                         config.diagnostics.mc_next_samples, diag_rng);
            row.gap_h1 = gap.exp_risk - gap.emp_risk;

            result.diagnostics.push_back(
                json{{"t", t},
                     {"epsilon", epsilon},
                     {"term_i", rec.term_i},
                     {"term_ii", rec.term_ii},
                     {"term_iii", rec.term_iii},
                     {"eps_charge", epsilon * H},
                     {"identity_residual", rec.identity_residual},
                     {"td_l2_per_h", td_norms},
                     {"min_occ", occ.min_frequency},
                     {"occ_bound", occ.reference_bound},
                     {"occ_flagged", occ.flagged},
                     {"gap", {{"emp_risk", gap.emp_risk},
                              {"exp_risk", gap.exp_risk},
                              {"bias_term", gap.bias_term},
                              {"variance_term", gap.variance_term}}}});
        }
        result.ledger.append(std::move(row));
    }

    result.final_stack = std::move(stack);
    return result;
}

RunResult run_to_directory(const ExperimentConfig& config, const fs::path& dir) {
    fs::create_directories(dir);
    const MdpSpec mdp = config.build_mdp();
    RunResult result = run_experiment(mdp, config);

    {
        std::ofstream out(dir / "ledger.csv");
        if (!out) throw std::runtime_error("cannot write " + (dir / "ledger.csv").string());
        result.ledger.write_csv(out);
    }
    {
        std::ofstream out(dir / "diagnostics.json");
        out << result.diagnostics.dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "qstack.json");
        out << qstack_to_json(result.final_stack).dump() << '\n';
    }
    {
        json manifest{{"config", config.to_json()},
                      {"config_hash", config_hash(config)},
                      {"seed", config.agent.seed},
                      {"build_version", "nvi 0.1.0"}};
        std::ofstream out(dir / "manifest.json");
        out << manifest.dump(2) << '\n';
    }
    if (config.diagnostics.approx_probe) {
        const BumpTarget target(1, config.mdp.alpha, std::max(1, config.mdp.levels), 0.0, 1.0,
                                hash64(config.mdp.seed, "probe-target"));
        const std::vector<long long> ns{8, 16, 32, 64};
        ApproximationProbeConfig pc;
        pc.fit.seed = config.agent.seed;
        const auto pts = approximation_probe(
            [&](std::span<const double> x) { return target(x); }, 1, config.family(), ns, pc);
        std::ofstream out(dir / "probe.csv");
        out << "N,l4_error,train_risk\n";
        for (const auto& p : pts)
            out << p.capacity << ',' << p.l4_error << ',' << p.train_risk << '\n';
    }
    return result;
}

bool sweepable_axis(const std::string& axis) {
    return axis == "T" || axis == "alpha" || axis == "epsilon" || axis == "m" || axis == "L" ||
           axis == "seed";
}

namespace {

ExperimentConfig cell_config(const ExperimentConfig& base, const std::string& axis, double value,
                             std::size_t index) {
    ExperimentConfig cfg = base;
    if (axis == "T") {
        cfg.agent.T = static_cast<long long>(value);
    } else if (axis == "alpha") {
        cfg.mdp.alpha = value;
    } else if (axis == "epsilon") {
        cfg.agent.epsilon_scheduled = false;
        cfg.agent.epsilon_value = value;
    } else if (axis == "m") {
        cfg.agent.width_override = static_cast<int>(value);
    } else if (axis == "L") {
        cfg.agent.depth_override = static_cast<int>(value);
    } else if (axis == "seed") {
        cfg.agent.seed = static_cast<std::uint64_t>(value);
    } else {
        throw config_error("sweep: unsupported axis '" + axis + "'");
    }
    if (axis != "seed") {
        cfg.agent.seed = hash64(base.agent.seed, axis, static_cast<std::uint64_t>(index));
    }
    cfg.validate();
    return cfg;
}

struct CellSummary {
    double value = 0.0;
    std::uint64_t seed = 0;
    double final_cum_regret = 0.0;
    double slope = 0.0;
    double slope_stderr = 0.0;
};

}  // namespace

void sweep(const ExperimentConfig& base, const std::string& axis,
           const std::vector<double>& values, int jobs, const fs::path& dir) {
    if (!sweepable_axis(axis)) throw config_error("sweep: unsupported axis '" + axis + "'");
    if (values.empty()) throw config_error("sweep: empty value list");
    fs::create_directories(dir);

    std::vector<CellSummary> summaries(values.size());
    std::vector<ExperimentConfig> configs;
    configs.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        configs.push_back(cell_config(base, axis, values[i], i));

    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr failure;

    auto worker = [&]() {
        for (;;) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (failure || next >= values.size()) return;
                idx = next++;
            }
            try {
                const auto cell_dir = dir / ("cell_" + std::to_string(idx));
                const RunResult res = run_to_directory(configs[idx], cell_dir);
                const auto series = res.ledger.cumulative_series();
                const auto fit = exponent_fit(series, static_cast<int>(series.size()) / 2);
                CellSummary s;
                s.value = values[idx];
                s.seed = configs[idx].agent.seed;
                s.final_cum_regret = res.ledger.final_cumulative();
                s.slope = fit.slope;
                s.slope_stderr = fit.stderr_;
                std::lock_guard<std::mutex> lock(mu);
                summaries[idx] = s;
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
    if (failure) std::rethrow_exception(failure);

    std::ofstream out(dir / "summary.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "summary.csv").string());
    out << "row,axis,value,seed,final_cum_regret,tail_slope,tail_slope_stderr\n";
    std::vector<double> xs, ys;
    char buf[64];
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        const auto& s = summaries[i];
        std::snprintf(buf, sizeof(buf), "%.17g", s.value);
        out << "cell," << axis << ',' << buf << ',' << s.seed << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", s.final_cum_regret);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.6g", s.slope);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.6g", s.slope_stderr);
        out << buf << '\n';
        if (s.value > 0.0 && s.final_cum_regret > 0.0) {
            xs.push_back(s.value);
            ys.push_back(s.final_cum_regret);
        }
    }
    const SlopeFit pooled = fit_loglog_slope(xs, ys);
    std::snprintf(buf, sizeof(buf), "%.6g", pooled.slope);
    out << "pooled," << axis << ",,," << "," << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.6g", pooled.slope_stderr);
    out << buf << '\n';

    // per-seed spread of final regrets (populated for every sweep)
    double mean_final = 0.0;
    for (const auto& s : summaries) mean_final += s.final_cum_regret;
    mean_final /= static_cast<double>(summaries.size());
    double var = 0.0;
    for (const auto& s : summaries)
        var += (s.final_cum_regret - mean_final) * (s.final_cum_regret - mean_final);
    const double sd = summaries.size() > 1 ? std::sqrt(var / (summaries.size() - 1)) : 0.0;
    std::snprintf(buf, sizeof(buf), "%.6g", sd);
    out << "spread," << axis << ",,," << buf << ",,\n";
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

int column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

void report_single_run(const fs::path& dir) {
    const auto rows = read_csv(dir / "ledger.csv");
    if (rows.size() < 2) throw std::runtime_error("ledger.csv is empty in " + dir.string());
    const auto& header = rows.front();
    const int col_t = column_index(header, "t");
    const int col_cum = column_index(header, "cum_regret");
    const int col_eps = column_index(header, "epsilon");
    const int col_occ = column_index(header, "min_occ");

    std::vector<double> ts, cum, occ_t, occ_v;
    double last_eps = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        ts.push_back(std::stod(r[static_cast<std::size_t>(col_t)]));
        cum.push_back(std::stod(r[static_cast<std::size_t>(col_cum)]));
        last_eps = std::stod(r[static_cast<std::size_t>(col_eps)]);
        if (col_occ >= 0 && static_cast<std::size_t>(col_occ) < r.size() &&
            !r[static_cast<std::size_t>(col_occ)].empty()) {
            occ_t.push_back(ts.back());
            occ_v.push_back(std::stod(r[static_cast<std::size_t>(col_occ)]));
        }
    }

    int A = 2, K = 1;
    double alpha = 1.0;
    {
        std::ifstream in(dir / "manifest.json");
        if (in) {
            json manifest;
            in >> manifest;
            A = manifest["config"]["mdp"]["A"].get<int>();
            K = manifest["config"]["agent"]["K"].get<int>();
            alpha = manifest["config"]["mdp"]["alpha"].get<double>();
        }
    }

    const auto fit = exponent_fit(cum, static_cast<int>(cum.size()) / 2);
    {
        SvgPlot plot("Cumulative regret", "episode t", "cumulative regret", true, true);
        plot.add_series("regret", ts, cum);
        char ann[128];
        std::snprintf(ann, sizeof(ann), "tail slope %.3f +- %.3f (2se)", fit.slope,
                      2.0 * fit.stderr_);
        plot.annotate(ann);
        std::ofstream out(dir / "regret_loglog.svg");
        out << plot.render();
    }
    {
        SvgPlot plot("Occupancy diagnostic", "episode t", "min cell frequency", false, false);
        if (!occ_t.empty()) plot.add_series("min_occ", occ_t, occ_v);
        const double bound = std::pow(last_eps / A, K);
        const double t_hi = ts.empty() ? 1.0 : ts.back();
        plot.add_reference("(eps/A)^K", 1.0, bound, t_hi, bound);
        std::ofstream out(dir / "occupancy.svg");
        out << plot.render();
    }
    {
        SvgPlot plot("Approximation probe", "capacity N", "L4 error", true, true);
        const fs::path probe = dir / "probe.csv";
        if (fs::exists(probe)) {
            const auto prows = read_csv(probe);
            std::vector<double> ns, errs;
            for (std::size_t i = 1; i < prows.size(); ++i) {
                ns.push_back(std::stod(prows[i][0]));
                errs.push_back(std::stod(prows[i][1]));
            }
            plot.add_series("probe", ns, errs);
            if (!ns.empty() && errs.front() > 0.0) {
                // reference slope -alpha/d anchored at the first point (d = 1 probe)
                const double e1 = errs.front() * std::pow(ns.back() / ns.front(), -alpha);
                plot.add_reference("N^-alpha", ns.front(), errs.front(), ns.back(), e1);
            }
        } else {
            plot.annotate("probe.csv not present (diagnostics.approx_probe = false)");
            plot.add_series("", {1.0, 2.0}, {1.0, 1.0});
        }
        std::ofstream out(dir / "approx_probe.svg");
        out << plot.render();
    }
    {
        std::ofstream out(dir / "summary.txt");
        out << "episodes: " << ts.size() << '\n';
        out << "final cumulative regret: " << (cum.empty() ? 0.0 : cum.back()) << '\n';
        out << "tail log-log slope: " << fit.slope << " +- " << 2.0 * fit.stderr_ << " (2se band ["
            << fit.band_lo << ", " << fit.band_hi << "])\n";
        out << "last epsilon: " << last_eps << '\n';
        if (!occ_v.empty()) {
            out << "last min cell frequency: " << occ_v.back() << " vs (eps/A)^K = "
                << std::pow(last_eps / A, K) << '\n';
        }
    }
}

void report_sweep(const fs::path& dir) {
    const auto rows = read_csv(dir / "summary.csv");
    if (rows.size() < 2) throw std::runtime_error("summary.csv is empty in " + dir.string());
    std::string axis = "axis";
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() >= 2 && rows[i][0] == "cell") {
            axis = rows[i][1];
            break;
        }
    }

    SvgPlot plot("Sweep over " + axis, "episode t", "cumulative regret", true, true);
    int idx = 0;
    for (fs::directory_iterator it(dir), end; it != end; ++it) {
        if (!it->is_directory()) continue;
        const auto name = it->path().filename().string();
        if (name.rfind("cell_", 0) != 0) continue;
        const fs::path ledger = it->path() / "ledger.csv";
        if (!fs::exists(ledger)) continue;
        const auto lrows = read_csv(ledger);
        if (lrows.size() < 2) continue;
        const int col_t = column_index(lrows.front(), "t");
        const int col_cum = column_index(lrows.front(), "cum_regret");
        std::vector<double> ts, cum;
        for (std::size_t i = 1; i < lrows.size(); ++i) {
            ts.push_back(std::stod(lrows[i][static_cast<std::size_t>(col_t)]));
            cum.push_back(std::stod(lrows[i][static_cast<std::size_t>(col_cum)]));
        }
        plot.add_series(name, ts, cum);
        ++idx;
    }
    {
        std::ofstream out(dir / ("sweep_" + axis + ".svg"));
        out << plot.render();
    }
    {
        std::ofstream out(dir / "summary.txt");
        out << "sweep axis: " << axis << "\ncells: " << idx << '\n';
        for (std::size_t i = 1; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < rows[i].size(); ++j) {
                if (j) out << ' ';
                out << rows[i][j];
            }
            out << '\n';
        }
    }
}

}  // namespace

void report(const fs::path& run_dir) {
    if (fs::exists(run_dir / "summary.csv")) {
        report_sweep(run_dir);
    } else if (fs::exists(run_dir / "ledger.csv")) {
        report_single_run(run_dir);
    } else {
        throw std::runtime_error("report: " + run_dir.string() +
                                 " holds neither ledger.csv (run) nor summary.csv (sweep)");
    }
}

}  // namespace nvi
