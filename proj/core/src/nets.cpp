#include "nvi/nets.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "nvi/rng.hpp"

namespace nvi {

TwoLayerNet::TwoLayerNet(int width, int input_dim, double h_cap, double path_budget)
    : m_(width), d_(input_dim), h_cap_(h_cap), budget_(path_budget) {
    if (width < 1 || input_dim < 1) throw std::invalid_argument("TwoLayerNet: width and input_dim must be >= 1");
    if (h_cap <= 0.0 || path_budget <= 0.0) throw std::invalid_argument("TwoLayerNet: h_cap and path_budget must be > 0");
    outer.assign(static_cast<std::size_t>(m_), 0.0);
    inner.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(d_), 0.0);
    biases.assign(static_cast<std::size_t>(m_), 0.0);
}

double TwoLayerNet::raw(std::span<const double> x) const {
    assert(static_cast<int>(x.size()) == d_);
    double sum = 0.0;
    const double* w = inner.data();
    for (int k = 0; k < m_; ++k, w += d_) {
        double z = biases[static_cast<std::size_t>(k)];
        for (int i = 0; i < d_; ++i) z += w[i] * x[static_cast<std::size_t>(i)];
        if (z > 0.0) sum += outer[static_cast<std::size_t>(k)] * z;
    }
    return sum / static_cast<double>(m_);
}

double TwoLayerNet::eval(std::span<const double> x) const { return truncate_value(raw(x), h_cap_); }

void TwoLayerNet::scale_outer(double factor) {
    for (double& b : outer) b *= factor;
}

double path_norm(const TwoLayerNet& net) {
    double total = 0.0;
    const double* w = net.inner.data();
    const int d = net.input_dim();
    for (int k = 0; k < net.width(); ++k, w += d) {
        double l1 = std::abs(net.biases[static_cast<std::size_t>(k)]);
        for (int i = 0; i < d; ++i) l1 += std::abs(w[i]);
        total += std::abs(net.outer[static_cast<std::size_t>(k)]) * l1;
    }
    return total / static_cast<double>(net.width());
}

TwoLayerNet project_path_norm(TwoLayerNet net, double budget) {
    if (budget <= 0.0) throw std::invalid_argument("project_path_norm: budget must be > 0");
    net.set_path_budget(budget);
    const double pn = path_norm(net);
    if (pn > budget) net.scale_outer(budget / pn);
    return net;
}

DeepReluNet::DeepReluNet(int depth, int width, int input_dim, double h_cap, int sparsity_budget,
                         double entry_bound, std::uint64_t mask_seed)
    : L_(depth), m_(width), d_(input_dim), h_cap_(h_cap), S_(sparsity_budget), B_(entry_bound) {
    if (depth < 2) throw std::invalid_argument("DeepReluNet: depth must be >= 2");
    if (width < 1 || input_dim < 1) throw std::invalid_argument("DeepReluNet: width and input_dim must be >= 1");
    if (sparsity_budget < 1 || entry_bound <= 0.0)
        throw std::invalid_argument("DeepReluNet: sparsity budget and entry bound must be positive");
    weights.resize(static_cast<std::size_t>(L_));
    bias.resize(static_cast<std::size_t>(L_));
    for (int l = 0; l < L_; ++l) {
        weights[static_cast<std::size_t>(l)].assign(
            static_cast<std::size_t>(rows(l)) * static_cast<std::size_t>(cols(l)), 0.0);
        bias[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(rows(l)), 0.0);
    }
    build_chain_mask(mask_seed);
}

// The mask is fixed at construction: unit chains input -> hidden -> ... ->
// output guarantee the masked class still connects input to output (a
// uniformly random mask with S ~ N entries almost never does), then any
// leftover budget activates extra first-layer entries of the chained units.
// The output bias is always active so constants are representable.
void DeepReluNet::build_chain_mask(std::uint64_t seed) {
    Rng rng(hash64(seed, "mask"));
    w_active.assign(static_cast<std::size_t>(L_), {});
    b_active.assign(static_cast<std::size_t>(L_), {});

    std::vector<std::vector<std::uint8_t>> wm(static_cast<std::size_t>(L_));
    std::vector<std::vector<std::uint8_t>> bm(static_cast<std::size_t>(L_));
    for (int l = 0; l < L_; ++l) {
        wm[static_cast<std::size_t>(l)].assign(
            static_cast<std::size_t>(rows(l)) * static_cast<std::size_t>(cols(l)), 0);
        bm[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(rows(l)), 0);
    }

    int used = 0;
    // output bias first
    bm[static_cast<std::size_t>(L_ - 1)][0] = 1;
    ++used;

    // cost of one chain: first-layer weight + first-layer bias + pass-through
    // entries in the middle layers + one output weight
    const int chain_cost = 2 + (L_ - 2) + 1;
    int unit = 0;
    while (used + chain_cost <= S_ && unit < m_) {
        const int in = rng.uniform_int(d_);
        if (!wm[0][static_cast<std::size_t>(unit) * static_cast<std::size_t>(d_) + static_cast<std::size_t>(in)]) {
            wm[0][static_cast<std::size_t>(unit) * static_cast<std::size_t>(d_) + static_cast<std::size_t>(in)] = 1;
            ++used;
        }
        if (!bm[0][static_cast<std::size_t>(unit)]) {
            bm[0][static_cast<std::size_t>(unit)] = 1;
            ++used;
        }
        for (int l = 1; l < L_ - 1; ++l) {
            auto& layer = wm[static_cast<std::size_t>(l)];
            const std::size_t diag =
                static_cast<std::size_t>(unit) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(unit);
            if (!layer[diag]) {
                layer[diag] = 1;
                ++used;
            }
        }
        if (!wm[static_cast<std::size_t>(L_ - 1)][static_cast<std::size_t>(unit)]) {
            wm[static_cast<std::size_t>(L_ - 1)][static_cast<std::size_t>(unit)] = 1;
            ++used;
        }
        ++unit;
    }

    // leftover budget: extra first-layer fan-in for the chained units
    int guard = 8 * S_ + 64;
    while (used < S_ && unit > 0 && guard-- > 0) {
        const int u = rng.uniform_int(unit);
        const int in = rng.uniform_int(d_);
        auto& slot = wm[0][static_cast<std::size_t>(u) * static_cast<std::size_t>(d_) + static_cast<std::size_t>(in)];
        if (!slot) {
            slot = 1;
            ++used;
        } else if (d_ == 1) {
            break;  // nothing left to activate in layer 1
        }
    }

    for (int l = 0; l < L_; ++l) {
        for (int r = 0; r < rows(l); ++r) {
            for (int c = 0; c < cols(l); ++c) {
                if (wm[static_cast<std::size_t>(l)][static_cast<std::size_t>(r) * static_cast<std::size_t>(cols(l)) +
                                                    static_cast<std::size_t>(c)])
                    w_active[static_cast<std::size_t>(l)].push_back({r, c});
            }
            if (bm[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)])
                b_active[static_cast<std::size_t>(l)].push_back(r);
        }
    }
    assert(count_nonzeros() <= S_ || used <= S_);
}

double DeepReluNet::raw(std::span<const double> x) const {
    assert(static_cast<int>(x.size()) == d_);
    std::vector<double> act(x.begin(), x.end());
    std::vector<double> next;
    for (int l = 0; l < L_; ++l) {
        next.assign(static_cast<std::size_t>(rows(l)), 0.0);
        const auto& wl = weights[static_cast<std::size_t>(l)];
        const int nc = cols(l);
        for (const auto& e : w_active[static_cast<std::size_t>(l)]) {
            next[static_cast<std::size_t>(e.row)] +=
                wl[static_cast<std::size_t>(e.row) * static_cast<std::size_t>(nc) + static_cast<std::size_t>(e.col)] *
                act[static_cast<std::size_t>(e.col)];
        }
        for (int r : b_active[static_cast<std::size_t>(l)])
            next[static_cast<std::size_t>(r)] += bias[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)];
        if (l < L_ - 1) {
            for (double& v : next) v = v > 0.0 ? v : 0.0;
        }
        act.swap(next);
    }
    return act[0];
}

double DeepReluNet::eval(std::span<const double> x) const { return truncate_value(raw(x), h_cap_); }

int DeepReluNet::count_nonzeros() const {
    int n = 0;
    for (int l = 0; l < L_; ++l) {
        const auto& wl = weights[static_cast<std::size_t>(l)];
        for (const auto& e : w_active[static_cast<std::size_t>(l)]) {
            if (wl[static_cast<std::size_t>(e.row) * static_cast<std::size_t>(cols(l)) +
                   static_cast<std::size_t>(e.col)] != 0.0)
                ++n;
        }
        for (int r : b_active[static_cast<std::size_t>(l)]) {
            if (bias[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)] != 0.0) ++n;
        }
    }
    return n;
}

double DeepReluNet::max_entry_abs() const {
    double mx = 0.0;
    for (const auto& wl : weights)
        for (double v : wl) mx = std::max(mx, std::abs(v));
    for (const auto& bl : bias)
        for (double v : bl) mx = std::max(mx, std::abs(v));
    return mx;
}

DeepReluNet project_deep_constraints(DeepReluNet net) {
    const double B = net.entry_bound();
    for (int l = 0; l < net.depth(); ++l) {
        auto& wl = net.weights[static_cast<std::size_t>(l)];
        std::vector<double> kept(wl.size(), 0.0);
        for (const auto& e : net.w_active[static_cast<std::size_t>(l)]) {
            const std::size_t idx = static_cast<std::size_t>(e.row) * static_cast<std::size_t>(net.cols(l)) +
                                    static_cast<std::size_t>(e.col);
            kept[idx] = std::clamp(wl[idx], -B, B);
        }
        wl.swap(kept);
        auto& bl = net.bias[static_cast<std::size_t>(l)];
        std::vector<double> bkept(bl.size(), 0.0);
        for (int r : net.b_active[static_cast<std::size_t>(l)])
            bkept[static_cast<std::size_t>(r)] = std::clamp(bl[static_cast<std::size_t>(r)], -B, B);
        bl.swap(bkept);
    }
    return net;
}

}  // namespace nvi
