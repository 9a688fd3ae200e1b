#include <algorithm>
#include <random>

#include "doctest.h"
#include "sps/metrics.hpp"

using namespace sps;
using namespace sps::metrics;

namespace {

sim::TrialResult road_trial(std::vector<double> positions, std::vector<sim::PairRecord> pairs) {
    sim::TrialResult t{.scenario = sim::PartiallyConnected{5.0, 200.0, 0.4}, .cfg = SpsConfig::make(0.0, 5)};
    t.counted_duration_s = 290.0;
    t.positions_m = std::move(positions);
    t.pairs = std::move(pairs);
    return t;
}

TrialGroups one_group(std::uint64_t received, std::optional<double> bin = std::nullopt) {
    // 1000 exposed packets per pair, one pair, 100 s counted.
    PairTally t;
    t.n_pairs = 1;
    t.sent = 1000;
    t.hd_lost = 0;
    t.received = received;
    t.counted_duration_s = 100.0;
    return {{{"g", bin}, t}};
}

}  // namespace

TEST_CASE("pair_throughput") {
    CHECK(pair_throughput(2871, 290.0) == doctest::Approx(9.9));
    CHECK(pair_throughput(0, 290.0) == 0.0);
    CHECK(pair_throughput(2320, 290.0) == doctest::Approx(8.0));
    CHECK_THROWS_AS(pair_throughput(10, 0.0), ConfigError);
}

TEST_CASE("PairTally separates half-duplex loss from PRR") {
    PairTally t;
    t.counted_duration_s = 10.0;
    t.add({0, 1, 5.0, 100, 90, 10});
    t.add({1, 0, 5.0, 100, 80, 0});
    CHECK(t.n_pairs == 2);
    CHECK(*t.prr() == doctest::Approx(170.0 / 190.0));
    CHECK(*t.throughput() == doctest::Approx(8.5));
    CHECK_FALSE(PairTally{}.prr());
    CHECK_FALSE(PairTally{}.throughput());
}

TEST_CASE("bin_by_distance") {
    // tx 0 sits in the edge-free region [800, 4200] m, tx 2 does not.
    const auto trial = road_trial({1000.0, 1005.0, 100.0, 1400.0},
                                  {{0, 1, 5.0, 10, 10, 0},
                                   {0, 1, 20.0, 10, 9, 0},
                                   {0, 3, 400.0, 10, 7, 0},
                                   {2, 1, 12.0, 10, 1, 0}});
    const auto groups = bin_by_distance(trial, 25.0);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].center_m == 12.5);
    CHECK(groups[0].pair_indices == std::vector<std::uint32_t>{0, 1});
    CHECK(groups[0].tally.received == 19);
    CHECK(groups[1].bin == 15);
    CHECK(groups[1].center_m == 387.5);
    CHECK(groups[1].pair_indices == std::vector<std::uint32_t>{2});

    CHECK(bin_by_distance(road_trial({}, {}), 25.0).empty());
    CHECK_THROWS_AS(bin_by_distance(trial, 0.0), ConfigError);

    sim::TrialResult fcn{.scenario = sim::FullyConnected{2}, .cfg = SpsConfig::make(0.0, 5)};
    CHECK_THROWS_AS(bin_by_distance(fcn, 25.0), ConfigError);
}

TEST_CASE("edge-free region") {
    const sim::PartiallyConnected road{5.0, 200.0, 0.4};
    CHECK(in_edge_free_region(road, 800.0));
    CHECK(in_edge_free_region(road, 4200.0));
    CHECK_FALSE(in_edge_free_region(road, 795.0));
    CHECK_FALSE(in_edge_free_region(road, 4205.0));
    CHECK(bin_count(400.0, 25.0) == 16);
}

TEST_CASE("mean_ci95") {
    const std::vector<double> two{0.9, 1.0};
    const auto r = mean_ci95(two);
    CHECK(r.mean == doctest::Approx(0.95));
    // 1.96 * 0.0707107 / sqrt(2)
    CHECK(r.ci95 == doctest::Approx(0.098).epsilon(1e-9));
    const std::vector<double> same(40, 0.7);
    CHECK(mean_ci95(same).mean == doctest::Approx(0.7));
    CHECK(mean_ci95(same).ci95 == doctest::Approx(0.0));
}

TEST_CASE("aggregate") {
    std::vector<TrialGroups> trials(40, one_group(700));
    auto out = aggregate(trials);
    REQUIRE(out.size() == 1);
    CHECK(out[0].prr_mean == doctest::Approx(0.7));
    CHECK(out[0].prr_ci95 == doctest::Approx(0.0));
    CHECK(out[0].throughput_mean == doctest::Approx(7.0));
    CHECK(out[0].n_trials == 40);
    CHECK(out[0].n_pairs == 40);
    CHECK(out[0].ci_defined);

    const std::vector<TrialGroups> pair{one_group(900), one_group(1000)};
    out = aggregate(pair);
    CHECK(out[0].prr_mean == doctest::Approx(0.95));
    CHECK(out[0].prr_ci95 == doctest::Approx(0.098).epsilon(1e-9));

    const std::vector<TrialGroups> single{one_group(900)};
    out = aggregate(single);
    CHECK(out[0].prr_ci95 == 0.0);
    CHECK_FALSE(out[0].ci_defined);

    // A group without pairs is omitted.
    TrialGroups empty_group{{{"empty", std::nullopt}, PairTally{}}};
    CHECK(aggregate(std::vector<TrialGroups>{empty_group}).empty());
}

TEST_CASE("aggregate is permutation invariant and stays within the trial means") {
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> rec(500, 1000);
    for (int round = 0; round < 50; ++round) {
        std::vector<TrialGroups> trials;
        std::vector<double> means;
        for (int t = 0; t < 2 + round % 9; ++t) {
            TrialGroups g;
            for (const double bin : {12.5, 37.5}) {
                const int r = rec(gen);
                g.push_back(one_group(static_cast<std::uint64_t>(r), bin).front());
                if (bin == 12.5) means.push_back(r / 1000.0);
            }
            trials.push_back(std::move(g));
        }
        const auto base = aggregate(trials);
        std::shuffle(trials.begin(), trials.end(), gen);
        for (auto& g : trials) std::reverse(g.begin(), g.end());
        const auto shuffled = aggregate(trials);
        REQUIRE(base.size() == 2);
        REQUIRE(shuffled.size() == 2);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(shuffled[i].key == base[i].key);
            CHECK(shuffled[i].prr_mean == doctest::Approx(base[i].prr_mean).epsilon(1e-14));
            CHECK(shuffled[i].prr_ci95 == doctest::Approx(base[i].prr_ci95).epsilon(1e-12));
        }
        const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
        CHECK(base[0].prr_mean >= *lo - 1e-15);
        CHECK(base[0].prr_mean <= *hi + 1e-15);
    }
}

TEST_CASE("network_throughput") {
    std::vector<AggregateResult> flat(16);
    for (auto& r : flat) r.throughput_mean = 9.9;
    CHECK(network_throughput(flat) == doctest::Approx(9.9));

    std::vector<AggregateResult> two(2);
    two[0].throughput_mean = 9.0;
    two[1].throughput_mean = 8.0;
    CHECK(network_throughput(two) == doctest::Approx(8.5));

    CHECK_THROWS_AS(network_throughput(std::vector<AggregateResult>{}), ConfigError);

    // Analytic curve at the 25 m bin centers, averaged directly.
    const auto cfg = SpsConfig::make(0.0, 5);
    const PcnParams road{200.0, 0.4};
    std::vector<double> centers;
    double expected = 0.0;
    for (int b = 0; b < 16; ++b) {
        centers.push_back(12.5 + 25.0 * b);
        expected += throughput(cfg, prr_pcn(cfg, road, centers.back())) / 16.0;
    }
    const auto curve = sweep({cfg, 0, road}, SweepKind::Distance, centers);
    CHECK(network_throughput(curve) == doctest::Approx(expected).epsilon(1e-14));
}
