#pragma once

// Reduction of raw trial counts to plotted quantities: PRR, throughput,
// distance-binned curves, network averages and 95% confidence intervals.
//
// Simulated PRR is MAC-only, matching the analytical definition: packets
// lost to the half-duplex effect are removed from the denominator, so
// PRR = received / (sent - hd_lost). Throughput counts every delivered
// packet, i.e. it already carries the half-duplex loss.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sps/analytic.hpp"
#include "sps/simcore.hpp"

namespace sps::metrics {

/// Received packets per second of counted simulation time.
double pair_throughput(std::uint64_t received, double counted_duration_s);

/// Summed counts of a set of pairs within one trial.
struct PairTally {
    std::size_t n_pairs = 0;
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
    std::uint64_t hd_lost = 0;
    double counted_duration_s = 0.0;

    void add(const sim::PairRecord& p);
    /// MAC-only PRR; nullopt if no packet escaped the half-duplex effect.
    std::optional<double> prr() const;
    /// Mean per-pair throughput in packets/sec; nullopt without pairs.
    std::optional<double> throughput() const;
};

/// All pairs of a trial pooled (the fully connected measurement).
PairTally pool(const sim::TrialResult& trial);

struct DistanceGroup {
    std::size_t bin = 0;
    double center_m = 0.0;
    std::vector<std::uint32_t> pair_indices;  // into TrialResult::pairs
    PairTally tally;
};

/// True when vehicle position x is at least 2 R_sen away from both road ends.
bool in_edge_free_region(const sim::PartiallyConnected& road, double x_m);

/// Groups the pairs of a partially connected trial into bins of width
/// `bin_width_m` by tx-rx distance, keeping only transmitters in the
/// edge-free region. A pair at exactly R_sen falls in the last bin.
/// Bins without pairs are omitted; output is ordered by bin.
std::vector<DistanceGroup> bin_by_distance(const sim::TrialResult& trial, double bin_width_m);

/// Number of distance bins covering [0, R_sen].
std::size_t bin_count(double sensing_range_m, double bin_width_m);
double bin_center(std::size_t bin, double bin_width_m);

struct GroupKey {
    std::string label;
    std::optional<double> bin_center_m;
    friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

struct KeyedTally {
    GroupKey key;
    PairTally tally;
};

/// Groups observed in one trial.
using TrialGroups = std::vector<KeyedTally>;

struct AggregateResult {
    GroupKey key;
    double prr_mean = 0.0;
    double prr_ci95 = 0.0;
    double throughput_mean = 0.0;
    double throughput_ci95 = 0.0;
    std::size_t n_trials = 0;
    std::size_t n_pairs = 0;
    /// False for a single trial: the interval is reported as 0 but undefined.
    bool ci_defined = false;
};

struct MeanCi {
    double mean = 0.0;
    double ci95 = 0.0;
};

/// Mean and normal-approximation 95% half-width 1.96 s / sqrt(n) of
/// independent replicate values (s is the n-1 sample deviation).
MeanCi mean_ci95(std::span<const double> values);

/// Reduces per-trial groups to one result per key, ordered by key. Each
/// trial contributes its group mean; groups never observed are omitted.
std::vector<AggregateResult> aggregate(std::span<const TrialGroups> trials);

/// Unweighted mean of throughput_mean over a distance curve.
double network_throughput(std::span<const AggregateResult> curve);
double network_throughput(std::span<const AnalyticCurvePoint> curve);

}  // namespace sps::metrics
