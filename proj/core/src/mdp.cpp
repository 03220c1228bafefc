#include "nvi/mdp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nvi/errors.hpp"

namespace nvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

bool in_unit_box(std::span<const double> x) {
    for (double v : x) {
        if (!(v >= 0.0 && v <= 1.0)) return false;
    }
    return true;
}

// C-infinity mollifier bump on (-1,1), peak value 1 at 0.
double bump1(double u) {
    const double u2 = u * u;
    if (u2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u2));
}

}  // namespace

void TargetSpec::validate() const {
    if (!(alpha > 0.0)) throw config_error("TargetSpec: alpha must be > 0");
    if (!(norm_radius > 0.0)) throw config_error("TargetSpec: norm_radius must be > 0");
    if (!(p == 2.0 || p == kInf)) throw config_error("TargetSpec: p must be 2 or inf");
    if (!(q > 0.0)) throw config_error("TargetSpec: q must be > 0");
    if (level_count < 0) throw config_error("TargetSpec: level_count must be >= 0");
}

BumpTarget::BumpTarget(int dim, double alpha, int levels, double lo, double hi, std::uint64_t seed)
    : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("BumpTarget: dim must be >= 1");
    if (!(alpha > 0.0) || levels < 0 || !(hi > lo))
        throw std::invalid_argument("BumpTarget: bad parameters");
    double decay_sum = 0.0;
    for (int j = 0; j <= levels; ++j) decay_sum += std::pow(2.0, -j * alpha);
    base_ = 0.5 * (hi - lo) / decay_sum;
    mid_ = 0.5 * (lo + hi);

    Rng rng(hash64(seed, "bump-target"));
    levels_.resize(static_cast<std::size_t>(levels) + 1);
    for (int j = 0; j <= levels; ++j) {
        auto& level = levels_[static_cast<std::size_t>(j)];
        level.cells_per_axis = 1 << j;
        long long cells = 1;
        for (int i = 0; i < dim; ++i) {
            cells *= level.cells_per_axis;
            if (cells > 2000000) throw capacity_error("BumpTarget: level grid too large");
        }
        const double magnitude = base_ * std::pow(2.0, -j * alpha);
        level.coeff.resize(static_cast<std::size_t>(cells));
        for (auto& c : level.coeff) c = rng.sign() * magnitude;
    }
}

double BumpTarget::operator()(std::span<const double> x) const {
    assert(static_cast<int>(x.size()) == dim_);
    double value = mid_;
    for (const auto& level : levels_) {
        const int n = level.cells_per_axis;
        const double spacing = 1.0 / n;
        long long cell = 0;
        double shape = 1.0;
        for (int i = 0; i < dim_; ++i) {
            int idx = static_cast<int>(x[static_cast<std::size_t>(i)] * n);
            idx = std::clamp(idx, 0, n - 1);
            cell = cell * n + idx;
            const double center = (idx + 0.5) * spacing;
            const double u = (x[static_cast<std::size_t>(i)] - center) / (0.5 * spacing);
            shape *= bump1(u);
            if (shape == 0.0) break;
        }
        if (shape != 0.0) value += level.coeff[static_cast<std::size_t>(cell)] * shape;
    }
    return value;
}

double TabularPayload::reward_at(int h, int s, int a) const {
    const int S = state_count();
    return reward[(static_cast<std::size_t>(h - 1) * S + static_cast<std::size_t>(s)) * action_count +
                  static_cast<std::size_t>(a)];
}

std::span<const double> TabularPayload::row(int h, int s, int a) const {
    const std::size_t S = static_cast<std::size_t>(state_count());
    const std::size_t off =
        ((static_cast<std::size_t>(h - 1) * S + static_cast<std::size_t>(s)) *
             static_cast<std::size_t>(action_count) +
         static_cast<std::size_t>(a)) *
        S;
    return {transition.data() + off, S};
}

int TabularPayload::nearest_state(std::span<const double> x) const {
    int best = 0;
    double best_d = kInf;
    for (int s = 0; s < state_count(); ++s) {
        const auto& c = states[static_cast<std::size_t>(s)];
        double d2 = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double diff = c[i] - x[i];
            d2 += diff * diff;
        }
        if (d2 < best_d) {
            best_d = d2;
            best = s;
        }
    }
    return best;
}

void MdpSpec::validate() const {
    if (horizon < 1) throw config_error("MdpSpec: horizon must be >= 1");
    if (action_count < 2) throw config_error("MdpSpec: action_count must be >= 2");
    if (state_dim < 1) throw config_error("MdpSpec: state_dim must be >= 1");
    if (!reward || !transition || !initial_state)
        throw config_error("MdpSpec: reward/transition/initial_state must all be set");
}

std::vector<double> featurize(std::span<const double> state, int action, int action_count) {
    if (action < 0 || action >= action_count)
        throw std::domain_error("featurize: action " + std::to_string(action) + " out of [0," +
                                std::to_string(action_count) + ")");
    assert(in_unit_box(state));
    std::vector<double> f;
    f.reserve(state.size() + static_cast<std::size_t>(action_count));
    f.insert(f.end(), state.begin(), state.end());
    for (int a = 0; a < action_count; ++a) f.push_back(a == action ? 1.0 : 0.0);
    return f;
}

namespace {

State uniform_box_state(int dim, Rng& rng) {
    State s(static_cast<std::size_t>(dim));
    for (double& v : s) v = rng.uniform();
    return s;
}

// Shared random-drift transition kernel for the continuous generators:
// next = clamp(s + drift(h, a) + width * (u - 1/2)) per coordinate.
struct DriftKernel {
    int horizon, action_count, state_dim;
    double width;
    std::vector<double> drift;  // [H][A][d_s]

    static DriftKernel make(int H, int A, int d, std::uint64_t seed) {
        DriftKernel k{H, A, d, 0.3, {}};
        Rng rng(hash64(seed, "drift"));
        k.drift.resize(static_cast<std::size_t>(H) * A * d);
        for (auto& v : k.drift) v = rng.uniform(-0.25, 0.25);
        return k;
    }

    State operator()(int h, std::span<const double> s, int a, Rng& rng) const {
        State next(static_cast<std::size_t>(state_dim));
        const std::size_t off =
            (static_cast<std::size_t>(h - 1) * action_count + static_cast<std::size_t>(a)) *
            static_cast<std::size_t>(state_dim);
        for (int i = 0; i < state_dim; ++i) {
            next[static_cast<std::size_t>(i)] =
                clamp01(s[static_cast<std::size_t>(i)] + drift[off + static_cast<std::size_t>(i)] +
                        width * (rng.uniform() - 0.5));
        }
        return next;
    }
};

MdpSpec make_bump_mdp(const TargetSpec& spec, int H, int A, int d, std::uint64_t seed) {
    auto targets = std::make_shared<std::vector<BumpTarget>>();
    targets->reserve(static_cast<std::size_t>(H) * A);
    for (int h = 1; h <= H; ++h) {
        for (int a = 0; a < A; ++a) {
            targets->emplace_back(d, spec.alpha, spec.level_count, 0.0, 1.0,
                                  hash64(seed, "bump-reward", static_cast<std::uint64_t>(h * A + a)));
        }
    }
    const DriftKernel kernel = DriftKernel::make(H, A, d, seed);

    MdpSpec mdp;
    mdp.horizon = H;
    mdp.action_count = A;
    mdp.state_dim = d;
    mdp.target_meta = spec;
    mdp.bump_targets = targets;
    mdp.reward = [targets, A](int h, std::span<const double> s, int a) {
        return (*targets)[static_cast<std::size_t>((h - 1) * A + a)](s);
    };
    mdp.transition = [kernel](int h, std::span<const double> s, int a, Rng& rng) {
        return kernel(h, s, a, rng);
    };
    mdp.initial_state = [d](Rng& rng) { return uniform_box_state(d, rng); };
    return mdp;
}

MdpSpec make_barron_mdp(const TargetSpec& spec, int H, int A, int d, std::uint64_t seed) {
    const int gen_width = 16;
    auto nets = std::make_shared<std::vector<TwoLayerNet>>();
    nets->reserve(static_cast<std::size_t>(H) * A);
    const double R = spec.norm_radius;
    for (int h = 1; h <= H; ++h) {
        for (int a = 0; a < A; ++a) {
            Rng rng(hash64(seed, "barron-reward", static_cast<std::uint64_t>(h * A + a)));
            TwoLayerNet net(gen_width, d, 1.0, R);
            for (int k = 0; k < gen_width; ++k) {
                net.outer[static_cast<std::size_t>(k)] = rng.uniform(-1.0, 1.0);
                net.biases[static_cast<std::size_t>(k)] = rng.uniform(-1.0, 1.0);
                for (int i = 0; i < d; ++i)
                    net.inner[static_cast<std::size_t>(k) * d + static_cast<std::size_t>(i)] =
                        rng.uniform(-1.0, 1.0);
            }
            // scale the path norm to exactly R; |raw| <= R then holds on the box
            const double pn = path_norm(net);
            if (pn > 0.0) net.scale_outer(R / pn);
            nets->push_back(std::move(net));
        }
    }
    const DriftKernel kernel = DriftKernel::make(H, A, d, seed);

    MdpSpec mdp;
    mdp.horizon = H;
    mdp.action_count = A;
    mdp.state_dim = d;
    mdp.target_meta = spec;
    mdp.generator_nets = nets;
    mdp.reward = [nets, A, R](int h, std::span<const double> s, int a) {
        const double raw = (*nets)[static_cast<std::size_t>((h - 1) * A + a)].raw(s);
        return clamp01((raw + R) / (2.0 * R));
    };
    mdp.transition = [kernel](int h, std::span<const double> s, int a, Rng& rng) {
        return kernel(h, s, a, rng);
    };
    mdp.initial_state = [d](Rng& rng) { return uniform_box_state(d, rng); };
    return mdp;
}

MdpSpec make_tabular_mdp(const TargetSpec& spec, int H, int A, int d, std::uint64_t seed) {
    const int res = std::max(1, spec.level_count);
    long long count = 1;
    for (int i = 0; i < d; ++i) {
        count *= res;
        if (count > 100000) throw capacity_error("make_synthetic_mdp: tabular cell cap exceeded");
    }
    const int S = static_cast<int>(count);

    auto payload = std::make_shared<TabularPayload>();
    payload->action_count = A;
    payload->horizon = H;
    payload->states.resize(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
        State center(static_cast<std::size_t>(d));
        int rem = s;
        for (int i = 0; i < d; ++i) {
            center[static_cast<std::size_t>(i)] = (rem % res + 0.5) / res;
            rem /= res;
        }
        payload->states[static_cast<std::size_t>(s)] = std::move(center);
    }

    Rng rng(hash64(seed, "tabular"));
    payload->reward.resize(static_cast<std::size_t>(H) * S * A);
    for (auto& r : payload->reward) r = rng.uniform();
    payload->transition.resize(static_cast<std::size_t>(H) * S * A * S);
    for (std::size_t row = 0; row < static_cast<std::size_t>(H) * S * A; ++row) {
        double total = 0.0;
        double* p = payload->transition.data() + row * S;
        for (int s = 0; s < S; ++s) {
            p[s] = -std::log(1.0 - rng.uniform());  // Exp(1): Dirichlet(1,...,1) row
            total += p[s];
        }
        for (int s = 0; s < S; ++s) p[s] /= total;
    }

    MdpSpec mdp;
    mdp.horizon = H;
    mdp.action_count = A;
    mdp.state_dim = d;
    mdp.target_meta = spec;
    mdp.tabular = payload;
    mdp.reward = [payload](int h, std::span<const double> s, int a) {
        return payload->reward_at(h, payload->nearest_state(s), a);
    };
    mdp.transition = [payload](int h, std::span<const double> s, int a, Rng& rng) {
        const auto row = payload->row(h, payload->nearest_state(s), a);
        const double u = rng.uniform();
        double acc = 0.0;
        int pick = payload->state_count() - 1;
        for (int sp = 0; sp < payload->state_count(); ++sp) {
            acc += row[static_cast<std::size_t>(sp)];
            if (u < acc) {
                pick = sp;
                break;
            }
        }
        return payload->states[static_cast<std::size_t>(pick)];
    };
    mdp.initial_state = [payload](Rng& rng) {
        return payload->states[static_cast<std::size_t>(rng.uniform_int(payload->state_count()))];
    };
    return mdp;
}

}  // namespace

MdpSpec make_synthetic_mdp(const TargetSpec& spec, int horizon, int action_count, int state_dim,
                           std::uint64_t seed) {
    spec.validate();
    if (horizon < 1 || action_count < 2 || state_dim < 1)
        throw config_error("make_synthetic_mdp: need horizon >= 1, action_count >= 2, state_dim >= 1");
    const std::uint64_t ctor_seed = hash64(hash64(spec.seed, "synthetic-mdp"), seed);
    switch (spec.construction) {
        case Construction::bump_superposition:
            return make_bump_mdp(spec, horizon, action_count, state_dim, ctor_seed);
        case Construction::barron_random_features:
            return make_barron_mdp(spec, horizon, action_count, state_dim, ctor_seed);
        case Construction::tabular_random:
            return make_tabular_mdp(spec, horizon, action_count, state_dim, ctor_seed);
    }
    throw config_error("make_synthetic_mdp: unsupported construction");
}

std::pair<double, State> step(const MdpSpec& mdp, int h, std::span<const double> state, int action,
                              Rng& rng) {
    if (h < 1 || h > mdp.horizon) throw std::domain_error("step: h out of [1, H]");
    const double r = mdp.reward(h, state, action);
    State next = mdp.transition(h, state, action, rng);
    if (!(r >= 0.0 && r <= 1.0)) throw std::logic_error("step: reward outside [0,1]");
    if (!in_unit_box(next)) throw std::logic_error("step: next state outside the state box");
    return {r, std::move(next)};
}

double modulus_of_smoothness(const std::function<double(std::span<const double>)>& f, int dim,
                             int k, double p, double t, int grid_resolution) {
    if (k < 1) throw std::invalid_argument("modulus_of_smoothness: k must be >= 1");
    if (!(t > 0.0)) throw std::invalid_argument("modulus_of_smoothness: t must be > 0");
    if (grid_resolution < 2)
        throw std::invalid_argument("modulus_of_smoothness: grid_resolution must be >= 2");

    // binomial coefficients C(k, j)
    std::vector<double> binom(static_cast<std::size_t>(k) + 1, 1.0);
    for (int j = 1; j <= k; ++j)
        binom[static_cast<std::size_t>(j)] =
            binom[static_cast<std::size_t>(j - 1)] * (k - j + 1) / j;

    // direction set: axis-aligned plus full diagonals (unit l2 norm)
    std::vector<std::vector<double>> dirs;
    for (int i = 0; i < dim; ++i) {
        std::vector<double> e(static_cast<std::size_t>(dim), 0.0);
        e[static_cast<std::size_t>(i)] = 1.0;
        dirs.push_back(std::move(e));
    }
    if (dim > 1) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(dim));
        for (int pattern = 0; pattern < (1 << (dim - 1)); ++pattern) {
            std::vector<double> u(static_cast<std::size_t>(dim), inv);
            for (int i = 1; i < dim; ++i) {
                if (pattern & (1 << (i - 1))) u[static_cast<std::size_t>(i)] = -inv;
            }
            dirs.push_back(std::move(u));
        }
    }

    long long total = 1;
    for (int i = 0; i < dim; ++i) {
        total *= grid_resolution;
        if (total > 2000000) throw capacity_error("modulus_of_smoothness: grid too large");
    }

    const int magnitudes = 8;
    double sup = 0.0;
    std::vector<double> x(static_cast<std::size_t>(dim));
    std::vector<double> xq(static_cast<std::size_t>(dim));
    for (const auto& u : dirs) {
        for (int mstep = 1; mstep <= magnitudes; ++mstep) {
            const double tau = t * mstep / magnitudes;
            double norm_acc = 0.0;  // max for p=inf, sum of |.|^p otherwise
            for (long long c = 0; c < total; ++c) {
                long long rem = c;
                for (int i = 0; i < dim; ++i) {
                    x[static_cast<std::size_t>(i)] =
                        static_cast<double>(rem % grid_resolution) / (grid_resolution - 1);
                    rem /= grid_resolution;
                }
                // out-of-domain convention: difference is 0 unless x + k*shift stays inside
                bool inside = true;
                for (int i = 0; i < dim && inside; ++i) {
                    const double endpoint =
                        x[static_cast<std::size_t>(i)] + k * tau * u[static_cast<std::size_t>(i)];
                    inside = endpoint >= 0.0 && endpoint <= 1.0;
                }
                double delta = 0.0;
                if (inside) {
                    for (int j = 0; j <= k; ++j) {
                        for (int i = 0; i < dim; ++i)
                            xq[static_cast<std::size_t>(i)] =
                                x[static_cast<std::size_t>(i)] + j * tau * u[static_cast<std::size_t>(i)];
                        const double fv = f(xq);
                        if (!std::isfinite(fv))
                            throw numeric_error("modulus_of_smoothness: non-finite function value");
                        const double sign = ((k - j) % 2 == 0) ? 1.0 : -1.0;
                        delta += binom[static_cast<std::size_t>(j)] * sign * fv;
                    }
                }
                if (p == kInf) {
                    norm_acc = std::max(norm_acc, std::abs(delta));
                } else {
                    norm_acc += std::pow(std::abs(delta), p);
                }
            }
            const double lp = (p == kInf) ? norm_acc : std::pow(norm_acc / total, 1.0 / p);
            sup = std::max(sup, lp);
        }
    }
    return sup;
}

}  // namespace nvi
