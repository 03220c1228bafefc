#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nvi/errors.hpp"
#include "nvi/oracle.hpp"
#include "support/fixtures.hpp"

using namespace nvi;

TEST_CASE("chain MDP optimal values match exhaustive policy enumeration") {
    const TabularMdp tab = fixtures::chain_mdp();
    const ValueTables solved = solve_optimal(tab);
    const ValueTables brute = fixtures::enumerate_optimal(tab);

    CHECK(solved.q_at(1, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(solved.q_at(1, 0, 1) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(solved.v_at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    for (int h = 1; h <= tab.horizon; ++h) {
        for (int s = 0; s < tab.state_count(); ++s) {
            CHECK(std::abs(solved.v_at(h, s) - brute.v_at(h, s)) < 1e-12);
            for (int a = 0; a < tab.action_count; ++a)
                CHECK(std::abs(solved.q_at(h, s, a) - brute.q_at(h, s, a)) < 1e-12);
        }
    }
}

TEST_CASE("solve_optimal equals enumeration on random tiny instances") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng pick(hash64(seed, "shape"));
        const int S = 2 + pick.uniform_int(3);
        const int H = 1 + pick.uniform_int(3);
        const TabularMdp tab = fixtures::random_tabular(S, 2, H, seed);
        const ValueTables solved = solve_optimal(tab);
        const ValueTables brute = fixtures::enumerate_optimal(tab);
        for (int h = 1; h <= H; ++h) {
            for (int s = 0; s < S; ++s) {
                REQUIRE(std::abs(solved.v_at(h, s) - brute.v_at(h, s)) < 1e-12);
            }
        }
    }
}

TEST_CASE("bellman_backup basics") {
    const TabularMdp tab = fixtures::chain_mdp();
    const int S = tab.state_count();

    SUBCASE("zero continuation returns raw rewards") {
        std::vector<double> zeros(S, 0.0);
        const auto q1 = bellman_backup(tab, zeros, 1);
        CHECK(q1[0 * 2 + 0] == doctest::Approx(0.0));
        CHECK(q1[0 * 2 + 1] == doctest::Approx(0.4));
    }
    SUBCASE("constant continuation shifts everything by c") {
        std::vector<double> c(S, 0.7);
        const auto q = bellman_backup(tab, c, 2);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < 2; ++a)
                CHECK(q[s * 2 + a] == doctest::Approx(tab.reward_at(2, s, a) + 0.7));
        }
    }
    SUBCASE("shape mismatch throws") {
        std::vector<double> bad(S + 1, 0.0);
        CHECK_THROWS_AS(bellman_backup(tab, bad, 1), std::invalid_argument);
    }
    SUBCASE("monotone in v_next") {
        const TabularMdp rnd = fixtures::random_tabular(4, 2, 2, 9);
        Rng rng(4);
        std::vector<double> lo(4), hi(4);
        for (int i = 0; i < 4; ++i) {
            lo[i] = rng.uniform();
            hi[i] = lo[i] + rng.uniform();
        }
        const auto qlo = bellman_backup(rnd, lo, 1);
        const auto qhi = bellman_backup(rnd, hi, 1);
        for (std::size_t i = 0; i < qlo.size(); ++i) CHECK(qlo[i] <= qhi[i] + 1e-12);
    }
}

TEST_CASE("solve_optimal degenerate reward maps") {
    TabularMdp tab = fixtures::random_tabular(3, 2, 3, 1);
    SUBCASE("all rewards zero") {
        std::fill(tab.reward.begin(), tab.reward.end(), 0.0);
        const auto vt = solve_optimal(tab);
        for (double q : vt.q) CHECK(q == doctest::Approx(0.0));
        for (double v : vt.v) CHECK(v == doctest::Approx(0.0));
    }
    SUBCASE("reward identically one telescopes") {
        std::fill(tab.reward.begin(), tab.reward.end(), 1.0);
        const auto vt = solve_optimal(tab);
        for (int h = 1; h <= 3; ++h) {
            for (int s = 0; s < 3; ++s)
                CHECK(vt.v_at(h, s) == doctest::Approx(3.0 - h + 1.0).epsilon(1e-12));
        }
    }
    SUBCASE("values stay inside [0, H]") {
        const auto vt = solve_optimal(tab);
        for (double q : vt.q) {
            CHECK(q >= 0.0);
            CHECK(q <= 3.0);
        }
    }
}

TEST_CASE("policy_value") {
    const TabularMdp tab = fixtures::chain_mdp();
    const ValueTables stars = solve_optimal(tab);

    SUBCASE("greedy policy w.r.t. Q* attains V*") {
        const auto pi = greedy_policy(tab, stars.q);
        const auto pol = policy_value(tab, pi);
        for (int h = 1; h <= tab.horizon; ++h) {
            for (int s = 0; s < tab.state_count(); ++s)
                CHECK(pol.v_at(h, s) == doctest::Approx(stars.v_at(h, s)).epsilon(1e-12));
        }
    }
    SUBCASE("always taking action 1 yields 0.4 from state 0") {
        PolicyMatrix pi(2 * 2 * 2, 0.0);
        for (int h = 1; h <= 2; ++h)
            for (int s = 0; s < 2; ++s) pi[((h - 1) * 2 + s) * 2 + 1] = 1.0;
        const auto pol = policy_value(tab, pi);
        CHECK(pol.v_at(1, 0) == doctest::Approx(0.4).epsilon(1e-12));
    }
    SUBCASE("any policy is dominated by V*") {
        const TabularMdp rnd = fixtures::random_tabular(4, 2, 3, 3);
        const ValueTables vt = solve_optimal(rnd);
        Rng rng(77);
        for (int trial = 0; trial < 20; ++trial) {
            PolicyMatrix pi(static_cast<std::size_t>(3) * 4 * 2, 0.0);
            for (int h = 1; h <= 3; ++h) {
                for (int s = 0; s < 4; ++s) {
                    const double u = rng.uniform();
                    pi[((h - 1) * 4 + s) * 2 + 0] = u;
                    pi[((h - 1) * 4 + s) * 2 + 1] = 1.0 - u;
                }
            }
            const auto pol = policy_value(rnd, pi);
            for (int h = 1; h <= 3; ++h)
                for (int s = 0; s < 4; ++s) CHECK(pol.v_at(h, s) <= vt.v_at(h, s) + 1e-9);
        }
    }
    SUBCASE("non-stochastic policy row throws") {
        PolicyMatrix pi(2 * 2 * 2, 0.3);
        CHECK_THROWS_AS(policy_value(tab, pi), std::domain_error);
    }
}

TEST_CASE("apply_bellman_to_learned") {
    const TabularMdp tab = fixtures::random_tabular(4, 2, 2, 5);
    const ValueTables stars = solve_optimal(tab);
    const int S = tab.state_count();

    SUBCASE("zero value returns rewards") {
        std::vector<double> zeros(S, 0.0);
        const auto img = apply_bellman_to_learned(tab, zeros, 1);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < 2; ++a) CHECK(img[s * 2 + a] == doctest::Approx(tab.reward_at(1, s, a)));
    }
    SUBCASE("V*_{h+1} reproduces Q*_h (Bellman fixed point)") {
        std::vector<double> v2(S);
        for (int s = 0; s < S; ++s) v2[s] = stars.v_at(2, s);
        const auto img = apply_bellman_to_learned(tab, v2, 1);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < 2; ++a)
                CHECK(img[s * 2 + a] == doctest::Approx(stars.q_at(1, s, a)).epsilon(1e-12));
    }
    SUBCASE("constant offset is linear") {
        std::vector<double> v2(S), v2c(S);
        for (int s = 0; s < S; ++s) {
            v2[s] = stars.v_at(2, s);
            v2c[s] = v2[s] + 0.37;
        }
        const auto img = apply_bellman_to_learned(tab, v2, 1);
        const auto imgc = apply_bellman_to_learned(tab, v2c, 1);
        for (std::size_t i = 0; i < img.size(); ++i)
            CHECK(imgc[i] == doctest::Approx(img[i] + 0.37).epsilon(1e-12));
    }
}

TEST_CASE("discretize") {
    SUBCASE("tabular payload copied bit-exactly") {
        const MdpSpec mdp = fixtures::chain_mdp_spec();
        Rng rng(1);
        const TabularMdp tab = discretize(mdp, 64, 10, rng);
        const TabularMdp direct = fixtures::chain_mdp();
        CHECK(tab.reward == direct.reward);
        CHECK(tab.transition == direct.transition);
    }
    SUBCASE("deterministic transitions give one-hot rows") {
        MdpSpec mdp;
        mdp.horizon = 1;
        mdp.action_count = 2;
        mdp.state_dim = 1;
        mdp.reward = [](int, std::span<const double>, int) { return 0.5; };
        mdp.transition = [](int, std::span<const double>, int, Rng&) { return State{0.9}; };
        mdp.initial_state = [](Rng&) { return State{0.1}; };
        Rng rng(2);
        const TabularMdp tab = discretize(mdp, 4, 100, rng);
        for (int s = 0; s < 4; ++s) {
            for (int a = 0; a < 2; ++a) {
                const auto row = tab.row(1, s, a);
                CHECK(row[3] == doctest::Approx(1.0));
            }
        }
    }
    SUBCASE("uniform kernel row frequencies near 1/S") {
        MdpSpec mdp;
        mdp.horizon = 1;
        mdp.action_count = 2;
        mdp.state_dim = 1;
        mdp.reward = [](int, std::span<const double>, int) { return 0.0; };
        mdp.transition = [](int, std::span<const double>, int, Rng& rng) { return State{rng.uniform()}; };
        mdp.initial_state = [](Rng&) { return State{0.5}; };
        Rng rng(3);
        const TabularMdp tab = discretize(mdp, 4, 10000, rng);
        for (int s = 0; s < 4; ++s) {
            const auto row = tab.row(1, s, 0);
            for (int sp = 0; sp < 4; ++sp) CHECK(std::abs(row[sp] - 0.25) < 0.02);
        }
        tab.validate();
    }
    SUBCASE("cell cap raises capacity_error") {
        MdpSpec mdp;
        mdp.horizon = 1;
        mdp.action_count = 2;
        mdp.state_dim = 3;
        mdp.reward = [](int, std::span<const double>, int) { return 0.0; };
        mdp.transition = [](int, std::span<const double>, int, Rng&) { return State{0.5, 0.5, 0.5}; };
        mdp.initial_state = [](Rng&) { return State{0.5, 0.5, 0.5}; };
        Rng rng(4);
        CHECK_THROWS_AS(discretize(mdp, 64, 1, rng), capacity_error);
    }
}

TEST_CASE("value tables CSV dump") {
    const TabularMdp tab = fixtures::chain_mdp();
    const ValueTables vt = solve_optimal(tab);
    std::ostringstream os;
    dump_value_tables_csv(os, tab, vt);
    const std::string text = os.str();
    CHECK(text.rfind("h,state_index,action,Q,V\n", 0) == 0);
    // H*S*A data rows plus header
    int lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + 2 * 2 * 2);
}
