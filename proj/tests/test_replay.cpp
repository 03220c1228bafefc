#include <doctest.h>

#include <cmath>
#include <set>

#include "nvi/errors.hpp"
#include "nvi/replay.hpp"

using namespace nvi;

namespace {

std::vector<Transition> make_episode(int H, int tag) {
    std::vector<Transition> ep;
    for (int h = 1; h <= H; ++h) {
        Transition tr;
        tr.h = h;
        tr.state = {0.1 * tag};
        tr.action = tag % 2;
        tr.reward = 0.5;
        tr.next_state = {0.2};
        ep.push_back(tr);
    }
    return ep;
}

}  // namespace

TEST_CASE("store") {
    SUBCASE("one episode grows every D_h by one") {
        ReplayMemory mem(3, 2);
        mem.store(make_episode(3, 0));
        CHECK(mem.size() == 1);
        for (int h = 1; h <= 3; ++h) CHECK(mem.at(h, 0).h == h);
    }
    SUBCASE("FIFO eviction at capacity") {
        ReplayMemory mem(2, 2, 2);
        for (int tag = 0; tag < 3; ++tag) mem.store(make_episode(2, tag));
        CHECK(mem.size() == 2);
        CHECK(mem.at(1, 0).state[0] == doctest::Approx(0.1));  // tag 1 survived, tag 0 evicted
        CHECK(mem.at(1, 1).state[0] == doctest::Approx(0.2));
    }
    SUBCASE("missing step index is rejected") {
        ReplayMemory mem(3, 2);
        auto ep = make_episode(3, 0);
        ep[2].h = 2;  // duplicate h=2, missing h=3
        CHECK_THROWS_AS(mem.store(ep), std::domain_error);
        auto short_ep = make_episode(2, 0);
        CHECK_THROWS_AS(mem.store(short_ep), std::domain_error);
    }
}

TEST_CASE("minibatch_size") {
    CHECK(minibatch_size(10, 0.5) == 5);
    CHECK(minibatch_size(7, 0.3) == 3);
    CHECK(minibatch_size(1, 0.99) == 1);
    CHECK(minibatch_size(4, 0.25) == 1);
    CHECK_THROWS_AS(minibatch_size(0, 0.5), std::domain_error);
    CHECK_THROWS_AS(minibatch_size(5, 1.5), std::domain_error);
}

TEST_CASE("sample_minibatch") {
    ReplayMemory mem(2, 2);
    for (int tag = 0; tag < 8; ++tag) mem.store(make_episode(2, tag));

    SUBCASE("exhaustive draw returns the whole store") {
        Rng rng(1);
        const auto batch = mem.sample_minibatch(1, 8, rng);
        std::set<double> seen;
        for (const auto& tr : batch) seen.insert(tr.state[0]);
        CHECK(seen.size() == 8);
    }
    SUBCASE("indices are distinct (without replacement)") {
        Rng rng(2);
        for (int trial = 0; trial < 50; ++trial) {
            const auto idx = mem.sample_indices(5, rng);
            std::set<int> s(idx.begin(), idx.end());
            CHECK(s.size() == idx.size());
        }
    }
    SUBCASE("requesting more than stored raises insufficient-data") {
        Rng rng(3);
        CHECK_THROWS_AS(mem.sample_minibatch(1, 9, rng), insufficient_data_error);
    }
    SUBCASE("identical seeds give identical index sequences") {
        Rng a(17), b(17);
        for (int trial = 0; trial < 10; ++trial) CHECK(mem.sample_indices(4, a) == mem.sample_indices(4, b));
    }
}

TEST_CASE("single-draw frequencies are uniform") {
    const int n = 8;
    ReplayMemory mem(1, 2);
    for (int tag = 0; tag < n; ++tag) mem.store(make_episode(1, tag));
    Rng rng(23);
    const int draws = 10000;
    std::vector<int> counts(n, 0);
    for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(mem.sample_indices(1, rng)[0])];

    // binomial 3-sigma window around 1/n per index
    const double p = 1.0 / n;
    const double sigma = std::sqrt(p * (1 - p) * draws);
    double chi2 = 0.0;
    for (int c : counts) {
        CHECK(std::abs(c - draws * p) < 3.0 * sigma);
        chi2 += (c - draws * p) * (c - draws * p) / (draws * p);
    }
    // chi-square(7) upper 0.01 quantile
    CHECK(chi2 < 18.48);
}
