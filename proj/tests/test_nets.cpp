#include <doctest.h>

#include <cmath>

#include "nvi/errors.hpp"
#include "nvi/fit.hpp"
#include "nvi/nets.hpp"
#include "nvi/rng.hpp"

using namespace nvi;

namespace {

TwoLayerNet example_net() {
    // m=2: (b,w,c) = (2,(1,0),0.5) and (-1,(0,3),0)
    TwoLayerNet net(2, 2, 5.0, 100.0);
    net.outer = {2.0, -1.0};
    net.inner = {1.0, 0.0, 0.0, 3.0};
    net.biases = {0.5, 0.0};
    return net;
}

}  // namespace

TEST_CASE("path_norm") {
    SUBCASE("direct formula") { CHECK(path_norm(example_net()) == doctest::Approx(3.0)); }
    SUBCASE("all-zero net") {
        TwoLayerNet net(4, 3, 1.0, 1.0);
        CHECK(path_norm(net) == doctest::Approx(0.0));
    }
    SUBCASE("homogeneous in the outer layer") {
        TwoLayerNet net = example_net();
        net.scale_outer(2.5);
        CHECK(path_norm(net) == doctest::Approx(7.5));
    }
}

TEST_CASE("project_path_norm") {
    SUBCASE("identity when feasible") {
        const TwoLayerNet net = project_path_norm(example_net(), 6.0);
        CHECK(path_norm(net) == doctest::Approx(3.0));
        CHECK(net.outer[0] == doctest::Approx(2.0));
    }
    SUBCASE("rescale to the budget") {
        const TwoLayerNet net = project_path_norm(example_net(), 2.0);
        CHECK(path_norm(net) == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(net.outer[0] == doctest::Approx(2.0 * 2.0 / 3.0));
        CHECK(net.outer[1] == doctest::Approx(-1.0 * 2.0 / 3.0));
    }
    SUBCASE("zero net unchanged") {
        TwoLayerNet net(3, 2, 1.0, 1.0);
        const TwoLayerNet out = project_path_norm(net, 0.5);
        CHECK(path_norm(out) == doctest::Approx(0.0));
    }
}

TEST_CASE("truncated evaluation") {
    TwoLayerNet net(1, 1, 5.0, 1000.0);
    net.inner = {0.0};
    SUBCASE("upper clamp") {
        net.outer = {12.0};
        net.biases = {1.0};  // raw = 12
        CHECK(net.raw(State{0.3}) == doctest::Approx(12.0));
        CHECK(net.eval(State{0.3}) == doctest::Approx(5.0));
    }
    SUBCASE("positive part") {
        net.outer = {-3.0};
        net.biases = {1.0};  // raw = -3
        CHECK(net.eval(State{0.3}) == doctest::Approx(0.0));
    }
    SUBCASE("interior pass-through") {
        net.outer = {2.5};
        net.biases = {1.0};
        CHECK(net.eval(State{0.3}) == doctest::Approx(2.5));
    }
    SUBCASE("idempotent clamp") {
        for (double raw : {-2.0, 0.0, 2.5, 5.0, 9.0}) {
            const double once = truncate_value(raw, 5.0);
            CHECK(truncate_value(once, 5.0) == doctest::Approx(once));
        }
    }
}

TEST_CASE("deep net constraints") {
    DeepReluNet net(3, 8, 2, 4.0, 20, 1.5, 42);
    SUBCASE("mask stays within the sparsity budget") {
        int mask_slots = 0;
        for (const auto& layer : net.w_active) mask_slots += static_cast<int>(layer.size());
        for (const auto& layer : net.b_active) mask_slots += static_cast<int>(layer.size());
        CHECK(mask_slots <= 20);
        CHECK(mask_slots >= 4);  // at least one full input->output chain plus output bias
    }
    SUBCASE("projection clamps entries and zeroes off-mask weights") {
        for (auto& wl : net.weights)
            for (auto& v : wl) v = 3.0;  // includes off-mask entries
        for (auto& bl : net.bias)
            for (auto& v : bl) v = -2.9;
        const DeepReluNet proj = project_deep_constraints(net);
        CHECK(proj.max_entry_abs() == doctest::Approx(1.5));
        CHECK(proj.count_nonzeros() <= 20);
        // off-mask entries are exactly zero
        int nonzero_total = 0;
        for (const auto& wl : proj.weights)
            for (double v : wl)
                if (v != 0.0) ++nonzero_total;
        for (const auto& bl : proj.bias)
            for (double v : bl)
                if (v != 0.0) ++nonzero_total;
        CHECK(nonzero_total == proj.count_nonzeros());
    }
    SUBCASE("feasible net passes through projection unchanged") {
        DeepReluNet small(2, 4, 1, 2.0, 10, 1.0, 7);
        for (const auto& e : small.w_active[0])
            small.weights[0][static_cast<std::size_t>(e.row) * small.cols(0) + e.col] = 0.5;
        const DeepReluNet proj = project_deep_constraints(small);
        CHECK(proj.weights == small.weights);
        CHECK(proj.bias == small.bias);
    }
    SUBCASE("same seed reproduces the same mask") {
        DeepReluNet again(3, 8, 2, 4.0, 20, 1.5, 42);
        CHECK(again.w_active.size() == net.w_active.size());
        for (std::size_t l = 0; l < net.w_active.size(); ++l) {
            REQUIRE(again.w_active[l].size() == net.w_active[l].size());
            for (std::size_t i = 0; i < net.w_active[l].size(); ++i) {
                CHECK(again.w_active[l][i].row == net.w_active[l][i].row);
                CHECK(again.w_active[l][i].col == net.w_active[l][i].col);
            }
        }
    }
    SUBCASE("eval is clamped to [0, h_cap]") {
        Rng rng(3);
        DeepReluNet wide(3, 6, 2, 1.0, 30, 5.0, 11);
        for (auto& wl : wide.weights)
            for (auto& v : wl) v = rng.uniform(-5.0, 5.0);
        for (auto& bl : wide.bias)
            for (auto& v : bl) v = rng.uniform(-5.0, 5.0);
        for (int i = 0; i < 50; ++i) {
            const State x{rng.uniform(), rng.uniform()};
            const double v = wide.eval(x);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

namespace {

// Central-difference check of loss_gradient away from relu/truncation kinks.
template <class Net>
int gradient_check(Net make_net(Rng&), int trials, std::uint64_t seed) {
    int checked = 0;
    Rng rng(seed);
    int guard = trials * 50;
    while (checked < trials && guard-- > 0) {
        Rng net_rng(rng.next());
        Net net = make_net(net_rng);
        State x(static_cast<std::size_t>(net.input_dim()));
        for (auto& c : x) c = rng.uniform();
        const double y = rng.uniform() * net.h_cap();

        // resample near kinks: hidden pre-activations and truncation edges
        bool near_kink = false;
        for (double z : preactivations(net, x))
            near_kink = near_kink || std::abs(z) < 1e-3;
        const double raw = net.raw(x);
        near_kink = near_kink || std::abs(raw) < 1e-3 || std::abs(raw - net.h_cap()) < 1e-3;
        if (near_kink) continue;

        const auto analytic = loss_gradient(net, x, y);
        auto params = flatten_params(net);
        const double fd_step = 1e-5;
        double max_rel = 0.0;
        for (std::size_t j = 0; j < params.size(); ++j) {
            const double saved = params[j];
            params[j] = saved + fd_step;
            unflatten_params(net, params);
            const double e_hi = net.eval(x) - y;
            params[j] = saved - fd_step;
            unflatten_params(net, params);
            const double e_lo = net.eval(x) - y;
            params[j] = saved;
            unflatten_params(net, params);
            const double fd = (e_hi * e_hi - e_lo * e_lo) / (2.0 * fd_step);
            const double denom = std::max({std::abs(fd), std::abs(analytic[j]), 1e-6});
            max_rel = std::max(max_rel, std::abs(fd - analytic[j]) / denom);
        }
        CHECK(max_rel < 1e-4);
        ++checked;
    }
    return checked;
}

TwoLayerNet random_two_layer(Rng& rng) {
    TwoLayerNet net(5, 3, 2.0, 1000.0);
    for (auto& v : net.outer) v = rng.uniform(-2.0, 2.0);
    for (auto& v : net.inner) v = rng.uniform(-1.0, 1.0);
    for (auto& v : net.biases) v = rng.uniform(-0.5, 0.5);
    return net;
}

DeepReluNet random_deep(Rng& rng) {
    DeepReluNet net(3, 6, 3, 2.0, 25, 10.0, rng.next());
    for (int l = 0; l < net.depth(); ++l) {
        for (const auto& e : net.w_active[static_cast<std::size_t>(l)])
            net.weights[static_cast<std::size_t>(l)][static_cast<std::size_t>(e.row) * net.cols(l) + e.col] =
                rng.uniform(-1.0, 1.0);
        for (int r : net.b_active[static_cast<std::size_t>(l)])
            net.bias[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)] = rng.uniform(-0.5, 0.5);
    }
    return net;
}

}  // namespace

TEST_CASE("analytic gradients match central differences") {
    SUBCASE("two-layer family") { CHECK(gradient_check<TwoLayerNet>(random_two_layer, 25, 101) == 25); }
    SUBCASE("deep family") { CHECK(gradient_check<DeepReluNet>(random_deep, 25, 202) == 25); }
}

TEST_CASE("fit_least_squares on the two-layer family") {
    SUBCASE("constant target reaches near-zero risk") {
        Dataset data;
        for (int i = 0; i < 32; ++i) data.push(State{i / 31.0}, 1.7);
        TwoLayerNet net(6, 1, 3.0, 50.0);
        FitConfig cfg;
        cfg.seed = 5;
        cfg.stop_tolerance = 1e-5;
        const auto res = fit_least_squares(net, data, cfg);
        CHECK(res.final_risk < 1e-4);
    }
    SUBCASE("single point interpolates") {
        Dataset data;
        data.push(State{0.4, 0.6}, 0.9);
        TwoLayerNet net(4, 2, 2.0, 50.0);
        FitConfig cfg;
        cfg.seed = 6;
        cfg.stop_tolerance = 1e-6;
        cfg.max_epochs = 2000;
        const auto res = fit_least_squares(net, data, cfg);
        CHECK(res.final_risk < 1e-6);
    }
    SUBCASE("realizable single-neuron target") {
        TwoLayerNet teacher(1, 1, 2.0, 50.0);
        teacher.outer = {1.5};
        teacher.inner = {1.0};
        teacher.biases = {-0.2};
        Dataset data;
        for (int i = 0; i < 64; ++i) {
            const State x{i / 63.0};
            data.push(x, teacher.eval(x));
        }
        TwoLayerNet net(8, 1, 2.0, 50.0);
        FitConfig cfg;
        cfg.seed = 7;
        cfg.stop_tolerance = 1e-5;
        cfg.max_epochs = 4000;
        cfg.restarts = 3;
        const auto res = fit_least_squares(net, data, cfg);
        CHECK(res.final_risk < 1e-3);
    }
    SUBCASE("constraints hold exactly after fitting") {
        Dataset data;
        Rng rng(9);
        for (int i = 0; i < 40; ++i) data.push(State{rng.uniform(), rng.uniform()}, 2.0 * rng.uniform());
        TwoLayerNet net(8, 2, 2.0, 1.5);  // tight budget forces projection
        FitConfig cfg;
        cfg.seed = 10;
        const auto res = fit_least_squares(net, data, cfg);
        CHECK(res.final_risk >= 0.0);
        CHECK(path_norm(net) <= 1.5 + 1e-9);
    }
    SUBCASE("empty dataset throws") {
        Dataset data;
        TwoLayerNet net(4, 2, 1.0, 1.0);
        CHECK_THROWS_AS(fit_least_squares(net, data, FitConfig{}), std::domain_error);
    }
    SUBCASE("deterministic given the seed") {
        Dataset data;
        Rng rng(12);
        for (int i = 0; i < 16; ++i) data.push(State{rng.uniform()}, rng.uniform());
        TwoLayerNet a(5, 1, 1.0, 20.0), b(5, 1, 1.0, 20.0);
        FitConfig cfg;
        cfg.seed = 21;
        fit_least_squares(a, data, cfg);
        fit_least_squares(b, data, cfg);
        CHECK(a.outer == b.outer);
        CHECK(a.inner == b.inner);
        CHECK(a.biases == b.biases);
    }
}

TEST_CASE("fit_least_squares on the deep family") {
    SUBCASE("constant target is exact via the output bias") {
        Dataset data;
        for (int i = 0; i < 32; ++i) data.push(State{i / 31.0}, 0.6);
        DeepReluNet net(3, 8, 1, 1.0, 16, 10.0, 77);
        FitConfig cfg;
        cfg.seed = 8;
        cfg.stop_tolerance = 1e-5;
        const auto res = fit_least_squares(net, data, cfg);
        CHECK(res.final_risk < 1e-4);
    }
    SUBCASE("sparsity and entry bounds hold after fitting") {
        Dataset data;
        Rng rng(14);
        for (int i = 0; i < 48; ++i) data.push(State{rng.uniform()}, rng.uniform());
        DeepReluNet net(3, 10, 1, 1.0, 18, 0.8, 31);
        FitConfig cfg;
        cfg.seed = 15;
        cfg.max_epochs = 300;
        fit_least_squares(net, data, cfg);
        CHECK(net.count_nonzeros() <= 18);
        CHECK(net.max_entry_abs() <= 0.8 + 1e-12);
    }
}
