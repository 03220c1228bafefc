#include "nvi/fit.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nvi/errors.hpp"
#include "nvi/rng.hpp"

namespace nvi {

namespace {

double target_mean(const Dataset& data) {
    double s = 0.0;
    for (double v : data.y) s += v;
    return data.n > 0 ? s / data.n : 0.0;
}

void validate_dataset(const Dataset& data, double h_cap) {
    if (data.n < 1) throw std::domain_error("fit_least_squares: empty dataset");
    if (static_cast<int>(data.y.size()) != data.n ||
        static_cast<int>(data.x.size()) != data.n * data.d)
        throw std::domain_error("fit_least_squares: inconsistent dataset shape");
    for (double v : data.y) {
        if (!std::isfinite(v)) throw numeric_error("fit_least_squares: non-finite target");
        if (v < 0.0 || v > h_cap + 1.0 + 1e-9)
            throw std::domain_error("fit_least_squares: target outside [0, h_cap + 1]");
    }
}

}  // namespace

double empirical_risk(const TwoLayerNet& net, const Dataset& data) {
    double s = 0.0;
    for (int i = 0; i < data.n; ++i) {
        const double e = net.eval(data.row(i)) - data.y[static_cast<std::size_t>(i)];
        s += e * e;
    }
    return s / data.n;
}

double empirical_risk(const DeepReluNet& net, const Dataset& data) {
    double s = 0.0;
    for (int i = 0; i < data.n; ++i) {
        const double e = net.eval(data.row(i)) - data.y[static_cast<std::size_t>(i)];
        s += e * e;
    }
    return s / data.n;
}

std::vector<double> flatten_params(const TwoLayerNet& net) {
    std::vector<double> p;
    p.reserve(net.outer.size() + net.inner.size() + net.biases.size());
    p.insert(p.end(), net.outer.begin(), net.outer.end());
    p.insert(p.end(), net.inner.begin(), net.inner.end());
    p.insert(p.end(), net.biases.begin(), net.biases.end());
    return p;
}

void unflatten_params(TwoLayerNet& net, std::span<const double> p) {
    const std::size_t m = net.outer.size();
    const std::size_t md = net.inner.size();
    assert(p.size() == m + md + m);
    std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(m), net.outer.begin());
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(m),
              p.begin() + static_cast<std::ptrdiff_t>(m + md), net.inner.begin());
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(m + md), p.end(), net.biases.begin());
}

std::vector<double> flatten_params(const DeepReluNet& net) {
    std::vector<double> p;
    for (int l = 0; l < net.depth(); ++l) {
        const auto& wl = net.weights[static_cast<std::size_t>(l)];
        const auto& bl = net.bias[static_cast<std::size_t>(l)];
        p.insert(p.end(), wl.begin(), wl.end());
        p.insert(p.end(), bl.begin(), bl.end());
    }
    return p;
}

void unflatten_params(DeepReluNet& net, std::span<const double> p) {
    std::size_t off = 0;
    for (int l = 0; l < net.depth(); ++l) {
        auto& wl = net.weights[static_cast<std::size_t>(l)];
        auto& bl = net.bias[static_cast<std::size_t>(l)];
        std::copy(p.begin() + static_cast<std::ptrdiff_t>(off),
                  p.begin() + static_cast<std::ptrdiff_t>(off + wl.size()), wl.begin());
        off += wl.size();
        std::copy(p.begin() + static_cast<std::ptrdiff_t>(off),
                  p.begin() + static_cast<std::ptrdiff_t>(off + bl.size()), bl.begin());
        off += bl.size();
    }
    assert(off == p.size());
}

std::vector<double> preactivations(const TwoLayerNet& net, std::span<const double> x) {
    std::vector<double> z(static_cast<std::size_t>(net.width()));
    const double* w = net.inner.data();
    for (int k = 0; k < net.width(); ++k, w += net.input_dim()) {
        double zk = net.biases[static_cast<std::size_t>(k)];
        for (int i = 0; i < net.input_dim(); ++i) zk += w[i] * x[static_cast<std::size_t>(i)];
        z[static_cast<std::size_t>(k)] = zk;
    }
    return z;
}

std::vector<double> preactivations(const DeepReluNet& net, std::span<const double> x) {
    std::vector<double> all;
    std::vector<double> act(x.begin(), x.end());
    std::vector<double> next;
    for (int l = 0; l < net.depth(); ++l) {
        next.assign(static_cast<std::size_t>(net.rows(l)), 0.0);
        const auto& wl = net.weights[static_cast<std::size_t>(l)];
        for (const auto& e : net.w_active[static_cast<std::size_t>(l)]) {
            next[static_cast<std::size_t>(e.row)] +=
                wl[static_cast<std::size_t>(e.row) * static_cast<std::size_t>(net.cols(l)) +
                   static_cast<std::size_t>(e.col)] *
                act[static_cast<std::size_t>(e.col)];
        }
        for (int r : net.b_active[static_cast<std::size_t>(l)])
            next[static_cast<std::size_t>(r)] +=
                net.bias[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)];
        if (l < net.depth() - 1) {
            all.insert(all.end(), next.begin(), next.end());
            for (double& v : next) v = v > 0.0 ? v : 0.0;
        }
        act.swap(next);
    }
    return all;
}

std::vector<double> loss_gradient(const TwoLayerNet& net, std::span<const double> x, double y) {
    const int m = net.width();
    const int d = net.input_dim();
    std::vector<double> grad(static_cast<std::size_t>(m) * static_cast<std::size_t>(d + 2), 0.0);

    const double* w = net.inner.data();
    std::vector<double> z(static_cast<std::size_t>(m));
    double raw = 0.0;
    for (int k = 0; k < m; ++k) {
        double zk = net.biases[static_cast<std::size_t>(k)];
        for (int i = 0; i < d; ++i)
            zk += w[static_cast<std::size_t>(k) * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] *
                  x[static_cast<std::size_t>(i)];
        z[static_cast<std::size_t>(k)] = zk;
        if (zk > 0.0) raw += net.outer[static_cast<std::size_t>(k)] * zk;
    }
    raw /= m;
    const double pred = truncate_value(raw, net.h_cap());
    const double pass = (raw >= 0.0 && raw <= net.h_cap()) ? 1.0 : 0.0;
    const double g = 2.0 * (pred - y) * pass / m;

    double* g_outer = grad.data();
    double* g_inner = grad.data() + m;
    double* g_bias = grad.data() + m + m * d;
    for (int k = 0; k < m; ++k) {
        const double zk = z[static_cast<std::size_t>(k)];
        if (zk > 0.0) {
            g_outer[k] = g * zk;
            const double gb = g * net.outer[static_cast<std::size_t>(k)];
            for (int i = 0; i < d; ++i)
                g_inner[k * d + i] = gb * x[static_cast<std::size_t>(i)];
            g_bias[k] = gb;
        }
    }
    return grad;
}

namespace {

struct DeepWorkspace {
    std::vector<std::vector<double>> act;    // act[l]: input to layer l
    std::vector<std::vector<double>> delta;  // per-layer back-propagated signal
};

// Forward pass storing layer inputs; returns the raw output.
double deep_forward(const DeepReluNet& net, std::span<const double> x, DeepWorkspace& ws) {
    const int L = net.depth();
    ws.act.resize(static_cast<std::size_t>(L) + 1);
    ws.act[0].assign(x.begin(), x.end());
    for (int l = 0; l < L; ++l) {
        auto& out = ws.act[static_cast<std::size_t>(l) + 1];
        out.assign(static_cast<std::size_t>(net.rows(l)), 0.0);
        const auto& wl = net.weights[static_cast<std::size_t>(l)];
        const auto& in = ws.act[static_cast<std::size_t>(l)];
        for (const auto& e : net.w_active[static_cast<std::size_t>(l)]) {
            out[static_cast<std::size_t>(e.row)] +=
                wl[static_cast<std::size_t>(e.row) * static_cast<std::size_t>(net.cols(l)) +
                   static_cast<std::size_t>(e.col)] *
                in[static_cast<std::size_t>(e.col)];
        }
        for (int r : net.b_active[static_cast<std::size_t>(l)])
            out[static_cast<std::size_t>(r)] +=
                net.bias[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)];
        if (l < L - 1) {
            for (double& v : out) v = v > 0.0 ? v : 0.0;  // act stores post-relu; relu'(v)=1 iff v>0
        }
    }
    return ws.act[static_cast<std::size_t>(L)][0];
}

// Accumulates the single-sample squared-loss gradient into flat (dense deep
// layout). Only mask-active coordinates receive mass: off-mask entries are
// structural zeros of the class, not parameters.
void deep_accumulate_gradient(const DeepReluNet& net, std::span<const double> x, double y,
                              DeepWorkspace& ws, std::vector<double>& flat) {
    const int L = net.depth();
    const double raw = deep_forward(net, x, ws);
    const double pred = truncate_value(raw, net.h_cap());
    const double pass = (raw >= 0.0 && raw <= net.h_cap()) ? 1.0 : 0.0;
    const double g0 = 2.0 * (pred - y) * pass;
    if (g0 == 0.0) return;

    ws.delta.resize(static_cast<std::size_t>(L));
    ws.delta[static_cast<std::size_t>(L - 1)].assign(1, g0);
    for (int l = L - 1; l >= 1; --l) {
        auto& below = ws.delta[static_cast<std::size_t>(l - 1)];
        below.assign(static_cast<std::size_t>(net.rows(l - 1)), 0.0);
        const auto& wl = net.weights[static_cast<std::size_t>(l)];
        const auto& dl = ws.delta[static_cast<std::size_t>(l)];
        const auto& in = ws.act[static_cast<std::size_t>(l)];  // post-relu input of layer l
        for (const auto& e : net.w_active[static_cast<std::size_t>(l)]) {
            if (in[static_cast<std::size_t>(e.col)] > 0.0) {
                below[static_cast<std::size_t>(e.col)] +=
                    wl[static_cast<std::size_t>(e.row) * static_cast<std::size_t>(net.cols(l)) +
                       static_cast<std::size_t>(e.col)] *
                    dl[static_cast<std::size_t>(e.row)];
            }
        }
    }

    std::size_t off = 0;
    for (int l = 0; l < L; ++l) {
        const auto& in = ws.act[static_cast<std::size_t>(l)];
        const auto& dl = ws.delta[static_cast<std::size_t>(l)];
        const std::size_t wsize = net.weights[static_cast<std::size_t>(l)].size();
        for (const auto& e : net.w_active[static_cast<std::size_t>(l)]) {
            flat[off + static_cast<std::size_t>(e.row) * static_cast<std::size_t>(net.cols(l)) +
                 static_cast<std::size_t>(e.col)] +=
                dl[static_cast<std::size_t>(e.row)] * in[static_cast<std::size_t>(e.col)];
        }
        off += wsize;
        for (int r : net.b_active[static_cast<std::size_t>(l)])
            flat[off + static_cast<std::size_t>(r)] += dl[static_cast<std::size_t>(r)];
        off += net.bias[static_cast<std::size_t>(l)].size();
    }
}

}  // namespace

std::vector<double> loss_gradient(const DeepReluNet& net, std::span<const double> x, double y) {
    std::vector<double> flat(flatten_params(net).size(), 0.0);
    DeepWorkspace ws;
    deep_accumulate_gradient(net, x, y, ws, flat);
    return flat;
}

namespace {

void batch_gradient(const TwoLayerNet& net, const Dataset& data, std::vector<double>& grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int i = 0; i < data.n; ++i) {
        const auto gi = loss_gradient(net, data.row(i), data.y[static_cast<std::size_t>(i)]);
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += gi[j];
    }
    const double inv = 1.0 / data.n;
    for (double& v : grad) v *= inv;
}

void batch_gradient(const DeepReluNet& net, const Dataset& data, std::vector<double>& grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    DeepWorkspace ws;
    for (int i = 0; i < data.n; ++i)
        deep_accumulate_gradient(net, data.row(i), data.y[static_cast<std::size_t>(i)], ws, grad);
    const double inv = 1.0 / data.n;
    for (double& v : grad) v *= inv;
}

void project_inplace(TwoLayerNet& net) {
    const double pn = path_norm(net);
    if (pn > net.path_budget()) net.scale_outer(net.path_budget() / pn);
}

void project_inplace(DeepReluNet& net) { net = project_deep_constraints(std::move(net)); }

// Random initialization that starts the raw output at the target mean, so the
// truncation never kills the gradient at epoch zero.
void init_for_fit(TwoLayerNet& net, const Dataset& data, Rng& rng) {
    const int m = net.width();
    const int d = net.input_dim();
    for (int k = 0; k < m; ++k) {
        net.outer[static_cast<std::size_t>(k)] = rng.uniform(-1.0, 1.0) * net.h_cap();
        for (int i = 0; i < d; ++i)
            net.inner[static_cast<std::size_t>(k) * static_cast<std::size_t>(d) +
                      static_cast<std::size_t>(i)] = rng.uniform(-1.0, 1.0);
        net.biases[static_cast<std::size_t>(k)] = rng.uniform(-0.5, 1.0);
    }
    // neuron 0 carries the constant offset: relu(0.x + 1) = 1
    net.outer[0] = 0.0;
    for (int i = 0; i < d; ++i) net.inner[static_cast<std::size_t>(i)] = 0.0;
    net.biases[0] = 1.0;
    double mean_raw = 0.0;
    for (int i = 0; i < data.n; ++i) mean_raw += net.raw(data.row(i));
    mean_raw /= data.n;
    net.outer[0] = static_cast<double>(m) * (target_mean(data) - mean_raw);
    project_inplace(net);
}

void init_for_fit(DeepReluNet& net, const Dataset& data, Rng& rng) {
    const int L = net.depth();
    const double B = net.entry_bound();
    for (int l = 0; l < L; ++l) {
        auto& wl = net.weights[static_cast<std::size_t>(l)];
        std::fill(wl.begin(), wl.end(), 0.0);
        auto& bl = net.bias[static_cast<std::size_t>(l)];
        std::fill(bl.begin(), bl.end(), 0.0);
        for (const auto& e : net.w_active[static_cast<std::size_t>(l)]) {
            double v = 0.0;
            if (l == 0) {
                v = rng.uniform(-1.5, 1.5);
            } else if (l < L - 1) {
                v = rng.uniform(0.9, 1.1);  // near pass-through
            } else {
                v = rng.uniform(-0.5, 0.5) * net.h_cap();
            }
            wl[static_cast<std::size_t>(e.row) * static_cast<std::size_t>(net.cols(l)) +
               static_cast<std::size_t>(e.col)] = std::clamp(v, -B, B);
        }
        for (int r : net.b_active[static_cast<std::size_t>(l)]) {
            if (l == L - 1) continue;  // output bias set below
            bl[static_cast<std::size_t>(r)] = std::clamp(rng.uniform(-0.75, 0.75), -B, B);
        }
    }
    double mean_raw = 0.0;
    for (int i = 0; i < data.n; ++i) mean_raw += net.raw(data.row(i));
    mean_raw /= data.n;
    bool has_out_bias = false;
    for (int r : net.b_active[static_cast<std::size_t>(L - 1)]) has_out_bias = has_out_bias || r == 0;
    if (has_out_bias)
        net.bias[static_cast<std::size_t>(L - 1)][0] =
            std::clamp(target_mean(data) - mean_raw, -B, B);
    project_inplace(net);
}

template <class Net>
FitResult descend_once(Net& net, const Dataset& data, const FitConfig& cfg) {
    const double tol = cfg.stop_tolerance > 0.0 ? cfg.stop_tolerance : 1e-4;
    const double tol2 = tol * tol;
    const int cadence = std::max(1, cfg.projection_cadence);

    std::vector<double> flat = flatten_params(net);
    std::vector<double> grad(flat.size(), 0.0);
    std::vector<double> trial(flat.size(), 0.0);
    Net trial_net = net;

    double risk = empirical_risk(net, data);
    if (!std::isfinite(risk)) throw numeric_error("fit_least_squares: non-finite initial risk");
    double lr = cfg.learning_rate;
    const double lr_max = cfg.learning_rate * 64.0;
    int epoch = 0;
    for (; epoch < cfg.max_epochs; ++epoch) {
        batch_gradient(net, data, grad);
        bool accepted = false;
        double new_risk = risk;
        while (lr >= 1e-13) {
            for (std::size_t j = 0; j < flat.size(); ++j) trial[j] = flat[j] - lr * grad[j];
            unflatten_params(trial_net, trial);
            if ((epoch + 1) % cadence == 0) project_inplace(trial_net);
            new_risk = empirical_risk(trial_net, data);
            if (std::isfinite(new_risk) && new_risk <= risk) {
                accepted = true;
                break;
            }
            if (!std::isfinite(new_risk) && lr < 1e-12)
                throw numeric_error("fit_least_squares: divergent loss at epoch " + std::to_string(epoch));
            lr *= 0.5;
        }
        if (!accepted) break;
        const double improvement = risk - new_risk;
        net = trial_net;
        flat = flatten_params(net);
        risk = new_risk;
        lr = std::min(lr * 1.25, lr_max);
        if (improvement < tol2) {
            ++epoch;
            break;
        }
    }
    project_inplace(net);
    return {empirical_risk(net, data), epoch};
}

template <class Net>
FitResult fit_impl(Net& net, const Dataset& data, const FitConfig& cfg) {
    validate_dataset(data, net.h_cap());
    if (data.d != net.input_dim())
        throw std::domain_error("fit_least_squares: feature dimension mismatch");

    if (!cfg.reinit) return descend_once(net, data, cfg);

    const int restarts = std::max(1, cfg.restarts);
    Net best = net;
    FitResult best_result;
    bool have_best = false;
    for (int r = 0; r < restarts; ++r) {
        Net candidate = net;
        Rng rng(hash64(cfg.seed, "fit-restart", static_cast<std::uint64_t>(r)));
        init_for_fit(candidate, data, rng);
        FitResult res = descend_once(candidate, data, cfg);
        if (!have_best || res.final_risk < best_result.final_risk) {
            best = std::move(candidate);
            best_result = res;
            have_best = true;
        }
    }
    net = std::move(best);
    return best_result;
}

}  // namespace

FitResult fit_least_squares(TwoLayerNet& net, const Dataset& data, const FitConfig& cfg) {
    return fit_impl(net, data, cfg);
}

FitResult fit_least_squares(DeepReluNet& net, const Dataset& data, const FitConfig& cfg) {
    return fit_impl(net, data, cfg);
}

}  // namespace nvi
