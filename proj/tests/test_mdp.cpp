#include <doctest.h>

#include <cmath>

#include "nvi/errors.hpp"
#include "nvi/mdp.hpp"
#include "nvi/nets.hpp"
#include "nvi/stats.hpp"
#include "support/fixtures.hpp"

using namespace nvi;

TEST_CASE("featurize") {
    SUBCASE("concatenates state with one-hot action") {
        const auto f = featurize(State{0.2, 0.7}, 1, 3);
        CHECK(f == std::vector<double>{0.2, 0.7, 0.0, 1.0, 0.0});
    }
    SUBCASE("boundary state") {
        const auto f = featurize(State{0.0}, 0, 2);
        CHECK(f == std::vector<double>{0.0, 1.0, 0.0});
    }
    SUBCASE("out-of-range action") {
        CHECK_THROWS_AS(featurize(State{0.5, 0.5}, 5, 3), std::domain_error);
        CHECK_THROWS_AS(featurize(State{0.5}, -1, 2), std::domain_error);
    }
}

TEST_CASE("tabular_random generator") {
    TargetSpec spec;
    spec.construction = Construction::tabular_random;
    spec.level_count = 3;  // |S| = 3 for d_s = 1
    spec.seed = 7;
    const MdpSpec mdp = make_synthetic_mdp(spec, 2, 2, 1, 7);
    REQUIRE(mdp.tabular);
    CHECK(mdp.tabular->state_count() == 3);

    SUBCASE("rows are stochastic within 1e-12") {
        for (int h = 1; h <= 2; ++h) {
            for (int s = 0; s < 3; ++s) {
                for (int a = 0; a < 2; ++a) {
                    double sum = 0.0;
                    for (double p : mdp.tabular->row(h, s, a)) {
                        CHECK(p >= 0.0);
                        sum += p;
                    }
                    CHECK(std::abs(sum - 1.0) < 1e-12);
                }
            }
        }
    }
    SUBCASE("bit-reproducible for a fixed seed") {
        const MdpSpec again = make_synthetic_mdp(spec, 2, 2, 1, 7);
        CHECK(again.tabular->reward == mdp.tabular->reward);
        CHECK(again.tabular->transition == mdp.tabular->transition);
        const MdpSpec other = make_synthetic_mdp(spec, 2, 2, 1, 8);
        CHECK(other.tabular->reward != mdp.tabular->reward);
    }
}

TEST_CASE("barron_random_features generator") {
    TargetSpec spec;
    spec.construction = Construction::barron_random_features;
    spec.norm_radius = 2.0;
    spec.seed = 3;
    const MdpSpec mdp = make_synthetic_mdp(spec, 2, 2, 2, 3);
    REQUIRE(mdp.generator_nets);
    REQUIRE(mdp.generator_nets->size() == 4);

    SUBCASE("generator path norms stay within the radius") {
        for (const auto& net : *mdp.generator_nets) {
            // independent recomputation of (1/m) sum |b|(||w||_1 + |c|)
            double pn = 0.0;
            for (int k = 0; k < net.width(); ++k) {
                double l1 = std::abs(net.biases[static_cast<std::size_t>(k)]);
                for (int i = 0; i < net.input_dim(); ++i)
                    l1 += std::abs(net.inner[static_cast<std::size_t>(k) * net.input_dim() + i]);
                pn += std::abs(net.outer[static_cast<std::size_t>(k)]) * l1;
            }
            pn /= net.width();
            CHECK(pn <= 2.0 + 1e-9);
            CHECK(pn == doctest::Approx(path_norm(net)).epsilon(1e-12));
        }
    }
}

TEST_CASE("bump_superposition generator") {
    TargetSpec spec;
    spec.construction = Construction::bump_superposition;
    spec.alpha = 1.0;
    spec.level_count = 3;
    spec.seed = 11;
    const MdpSpec mdp = make_synthetic_mdp(spec, 2, 2, 1, 11);
    REQUIRE(mdp.bump_targets);

    SUBCASE("level-j coefficient magnitudes decay exactly as 2^{-j alpha}") {
        for (const auto& target : *mdp.bump_targets) {
            const double base = target.base_magnitude();
            for (int j = 0; j <= target.levels(); ++j) {
                const double expected = base * std::pow(2.0, -j * spec.alpha);
                for (double c : target.coefficients(j))
                    CHECK(std::abs(std::abs(c) - expected) < 1e-15);
            }
        }
    }
}

TEST_CASE("sampled trajectories stay inside the box with rewards in [0,1]") {
    const std::uint64_t seeds[] = {1, 2, 3};
    Construction ctors[] = {Construction::bump_superposition, Construction::barron_random_features,
                            Construction::tabular_random};
    for (auto construction : ctors) {
        TargetSpec spec;
        spec.construction = construction;
        spec.level_count = construction == Construction::tabular_random ? 4 : 2;
        spec.norm_radius = 1.5;
        for (auto s : seeds) {
            spec.seed = s;
            const MdpSpec mdp = make_synthetic_mdp(spec, 3, 2, 1, s);
            Rng rng(hash64(s, "rollout-check"));
            for (int ep = 0; ep < 340; ++ep) {  // ~1000 rollouts across the three seeds
                State state = mdp.initial_state(rng);
                for (int h = 1; h <= 3; ++h) {
                    const int a = rng.uniform_int(2);
                    auto [r, next] = step(mdp, h, state, a, rng);
                    CHECK(r >= 0.0);
                    CHECK(r <= 1.0);
                    for (double c : next) {
                        CHECK(c >= 0.0);
                        CHECK(c <= 1.0);
                    }
                    state = next;
                }
            }
        }
    }
}

TEST_CASE("step on the chain fixture") {
    const MdpSpec mdp = fixtures::chain_mdp_spec();
    Rng rng(5);
    SUBCASE("deterministic dynamics match the chain") {
        auto [r, next] = step(mdp, 1, State{0.25}, 0, rng);
        CHECK(r == doctest::Approx(0.0));
        CHECK(next[0] == doctest::Approx(0.75));  // state 1
        auto [r2, next2] = step(mdp, 1, State{0.25}, 1, rng);
        CHECK(r2 == doctest::Approx(0.4));
        CHECK(next2[0] == doctest::Approx(0.25));
    }
    SUBCASE("terminal step still returns a state") {
        auto [r, next] = step(mdp, 2, State{0.75}, 0, rng);
        CHECK(r == doctest::Approx(1.0));
        CHECK(next.size() == 1);
    }
    SUBCASE("h out of range") { CHECK_THROWS_AS(step(mdp, 3, State{0.25}, 0, rng), std::domain_error); }
}

TEST_CASE("modulus_of_smoothness") {
    SUBCASE("constant function has zero modulus") {
        const auto f = [](std::span<const double>) { return 3.0; };
        CHECK(modulus_of_smoothness(f, 1, 1, std::numeric_limits<double>::infinity(), 0.3, 33) ==
              doctest::Approx(0.0));
        CHECK(modulus_of_smoothness(f, 2, 2, 2.0, 0.2, 9) == doctest::Approx(0.0));
    }
    SUBCASE("first difference of identity attains t") {
        const auto f = [](std::span<const double> x) { return x[0]; };
        const double w =
            modulus_of_smoothness(f, 1, 1, std::numeric_limits<double>::infinity(), 0.25, 65);
        CHECK(w == doctest::Approx(0.25).epsilon(1e-9));
    }
    SUBCASE("second difference of an affine function vanishes") {
        const auto f = [](std::span<const double> x) { return 2.0 * x[0] + 0.1; };
        const double w =
            modulus_of_smoothness(f, 1, 2, std::numeric_limits<double>::infinity(), 0.3, 65);
        CHECK(w == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("monotone non-decreasing in t") {
        const BumpTarget target(1, 1.0, 3, 0.0, 1.0, 99);
        const auto f = [&](std::span<const double> x) { return target(x); };
        double prev = 0.0;
        for (double t : {0.05, 0.1, 0.2, 0.4}) {
            const double w = modulus_of_smoothness(f, 1, 2, std::numeric_limits<double>::infinity(), t, 129);
            CHECK(w >= prev - 1e-12);
            prev = w;
        }
    }
    SUBCASE("bad arguments") {
        const auto f = [](std::span<const double>) { return 0.0; };
        CHECK_THROWS_AS(modulus_of_smoothness(f, 1, 0, 2.0, 0.1, 8), std::invalid_argument);
        CHECK_THROWS_AS(modulus_of_smoothness(f, 1, 1, 2.0, -0.1, 8), std::invalid_argument);
        CHECK_THROWS_AS(modulus_of_smoothness(f, 1, 1, 2.0, 0.1, 1), std::invalid_argument);
        const auto bad = [](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); };
        CHECK_THROWS_AS(modulus_of_smoothness(bad, 1, 1, 2.0, 0.1, 8), numeric_error);
    }
}

TEST_CASE("bump targets show the prescribed smoothness exponent") {
    // log-log slope of w_k(f, t) vs t should sit within +-0.5 of alpha
    for (double alpha : {0.5, 1.0, 2.0}) {
        const int k = static_cast<int>(std::floor(alpha)) + 1;
        const BumpTarget target(1, alpha, 5, 0.0, 1.0, hash64(17, "slope", static_cast<uint64_t>(alpha * 2)));
        const auto f = [&](std::span<const double> x) { return target(x); };
        std::vector<double> ts, ws;
        for (double t = 0.04; t <= 0.7; t *= 1.9) {
            ts.push_back(t);
            ws.push_back(
                modulus_of_smoothness(f, 1, k, std::numeric_limits<double>::infinity(), t, 257));
        }
        const SlopeFit fit = fit_loglog_slope(ts, ws);
        INFO("alpha=", alpha, " slope=", fit.slope);
        CHECK(fit.slope > alpha - 0.5);
        CHECK(fit.slope < alpha + 0.5);
    }
}

TEST_CASE("TargetSpec validation") {
    TargetSpec spec;
    spec.alpha = -1.0;
    CHECK_THROWS_AS(spec.validate(), config_error);
    spec.alpha = 1.0;
    spec.p = 3.0;
    CHECK_THROWS_AS(spec.validate(), config_error);
    spec.p = 2.0;
    CHECK_NOTHROW(spec.validate());
}
