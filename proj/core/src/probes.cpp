#include "nvi/probes.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nvi/errors.hpp"

namespace nvi {

namespace {

Dataset grid_dataset(const std::function<double(std::span<const double>)>& target, int dim,
                     int per_axis) {
    if (per_axis < 2) throw std::invalid_argument("approximation_probe: sample_grid must be >= 2");
    long long total = 1;
    for (int i = 0; i < dim; ++i) {
        total *= per_axis;
        if (total > 200000) throw capacity_error("approximation_probe: sample grid too large");
    }
    Dataset data;
    data.d = dim;
    std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (long long c = 0; c < total; ++c) {
        long long rem = c;
        for (int i = 0; i < dim; ++i) {
            idx[static_cast<std::size_t>(i)] = static_cast<int>(rem % per_axis);
            rem /= per_axis;
            x[static_cast<std::size_t>(i)] =
                static_cast<double>(idx[static_cast<std::size_t>(i)]) / (per_axis - 1);
        }
        const double y = target(x);
        if (!std::isfinite(y)) throw numeric_error("approximation_probe: non-finite target value");
        data.push(x, y);
    }
    return data;
}

double grid_l4_error(const Dataset& data, const std::function<double(std::span<const double>)>& f) {
    double s = 0.0;
    for (int i = 0; i < data.n; ++i) {
        const double e = f(data.row(i)) - data.y[static_cast<std::size_t>(i)];
        s += e * e * e * e;
    }
    return std::pow(s / data.n, 0.25);
}

}  // namespace

std::vector<ApproximationPoint> approximation_probe(
    const std::function<double(std::span<const double>)>& target, int dim, Family family,
    std::span<const long long> N_list, const ApproximationProbeConfig& cfg) {
    if (N_list.empty()) throw std::invalid_argument("approximation_probe: empty N list");
    for (std::size_t i = 1; i < N_list.size(); ++i) {
        if (N_list[i] <= N_list[i - 1])
            throw std::invalid_argument("approximation_probe: N list must be strictly increasing");
    }

    const Dataset data = grid_dataset(target, dim, cfg.sample_grid);
    std::vector<ApproximationPoint> out;
    out.reserve(N_list.size());

    for (long long N : N_list) {
        ApproximationPoint pt;
        pt.capacity = N;
        FitConfig fit = cfg.fit;
        fit.seed = hash64(cfg.fit.seed, "probe", static_cast<std::uint64_t>(N));
        try {
            if (family == Family::besov_deep) {
                const double logN = std::log(static_cast<double>(std::max<long long>(N, 2)));
                const int L = std::max(2, static_cast<int>(std::ceil(cfg.c * logN)));
                const int m = std::max(2, static_cast<int>(std::ceil(cfg.c * N * logN)));
                const int S = std::max(L + 2, static_cast<int>(std::ceil(cfg.c * N)));
                const double B = cfg.norm_bound > 0.0
                                     ? cfg.norm_bound
                                     : 10.0 * cfg.h_cap * std::sqrt(static_cast<double>(dim));
                DeepReluNet net(L, m, dim, cfg.h_cap, S, B, hash64(fit.seed, "probe-mask"));
                pt.train_risk = fit_least_squares(net, data, fit).final_risk;
                pt.l4_error = grid_l4_error(data, [&](std::span<const double> x) { return net.eval(x); });
            } else {
                const int m = static_cast<int>(std::max<long long>(1, N));
                const double B = cfg.norm_bound > 0.0
                                     ? cfg.norm_bound
                                     : 4.0 * cfg.h_cap * std::sqrt(static_cast<double>(dim));
                TwoLayerNet net(m, dim, cfg.h_cap, B);
                pt.train_risk = fit_least_squares(net, data, fit).final_risk;
                pt.l4_error = grid_l4_error(data, [&](std::span<const double> x) { return net.eval(x); });
            }
        } catch (const numeric_error& e) {
            throw numeric_error("approximation_probe: fit diverged at N=" + std::to_string(N) +
                                ": " + e.what());
        }
        out.push_back(pt);
    }
    return out;
}

RademacherProbeResult rademacher_probe(int n, int d, double B, int mc_rounds, Rng& rng) {
    if (n < 1 || d < 1 || mc_rounds < 1)
        throw std::invalid_argument("rademacher_probe: n, d, mc_rounds must be >= 1");

    RademacherProbeResult res;
    res.rounds = mc_rounds;
    res.analytic_bound = 2.0 * B * std::sqrt(2.0 * std::log(2.0 * d) / n);

    // augmented features (x, 1)
    const int da = d + 1;
    std::vector<double> feats(static_cast<std::size_t>(n) * static_cast<std::size_t>(da));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j)
            feats[static_cast<std::size_t>(i) * da + static_cast<std::size_t>(j)] = rng.uniform();
        feats[static_cast<std::size_t>(i) * da + static_cast<std::size_t>(d)] = 1.0;
    }

    std::vector<double> acc(static_cast<std::size_t>(da));
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < mc_rounds; ++r) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            const double s = rng.sign();
            const double* row = feats.data() + static_cast<std::size_t>(i) * da;
            for (int j = 0; j < da; ++j) acc[static_cast<std::size_t>(j)] += s * row[j];
        }
        double mx = 0.0;
        for (double v : acc) mx = std::max(mx, std::abs(v) / n);
        const double val = 2.0 * B * mx;
        sum += val;
        sumsq += val * val;
    }
    res.mc_estimate = sum / mc_rounds;
    if (mc_rounds > 1) {
        const double var = std::max(0.0, (sumsq - sum * sum / mc_rounds) / (mc_rounds - 1));
        res.mc_std_error = std::sqrt(var / mc_rounds);
    }
    return res;
}

}  // namespace nvi
