#include "sps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sps::metrics {

double pair_throughput(std::uint64_t received, double counted_duration_s) {
    if (!(counted_duration_s > 0.0)) throw ConfigError("counted duration must be > 0 s");
    return static_cast<double>(received) / counted_duration_s;
}

void PairTally::add(const sim::PairRecord& p) {
    ++n_pairs;
    sent += p.sent;
    received += p.received;
    hd_lost += p.hd_lost;
}

std::optional<double> PairTally::prr() const {
    const std::uint64_t exposed = sent - hd_lost;
    if (exposed == 0) return std::nullopt;
    return static_cast<double>(received) / static_cast<double>(exposed);
}

std::optional<double> PairTally::throughput() const {
    if (n_pairs == 0 || !(counted_duration_s > 0.0)) return std::nullopt;
    return pair_throughput(received, counted_duration_s) / static_cast<double>(n_pairs);
}

PairTally pool(const sim::TrialResult& trial) {
    PairTally t;
    t.counted_duration_s = trial.counted_duration_s;
    for (const auto& p : trial.pairs) t.add(p);
    return t;
}

bool in_edge_free_region(const sim::PartiallyConnected& road, double x_m) {
    constexpr double eps = 1e-9;
    const double margin = 2.0 * road.sensing_range_km * 1000.0;
    return x_m >= margin - eps && x_m <= road.road_length_km * 1000.0 - margin + eps;
}

std::size_t bin_count(double sensing_range_m, double bin_width_m) {
    if (!(bin_width_m > 0.0)) throw ConfigError("bin width must be > 0 m");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(sensing_range_m / bin_width_m - 1e-9)));
}

double bin_center(std::size_t bin, double bin_width_m) {
    return (static_cast<double>(bin) + 0.5) * bin_width_m;
}

std::vector<DistanceGroup> bin_by_distance(const sim::TrialResult& trial, double bin_width_m) {
    const auto* road = std::get_if<sim::PartiallyConnected>(&trial.scenario);
    if (!road) throw ConfigError("distance binning needs a partially connected trial");
    const std::size_t bins = bin_count(road->sensing_range_km * 1000.0, bin_width_m);

    std::vector<DistanceGroup> groups(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        groups[b].bin = b;
        groups[b].center_m = bin_center(b, bin_width_m);
        groups[b].tally.counted_duration_s = trial.counted_duration_s;
    }
    for (std::size_t k = 0; k < trial.pairs.size(); ++k) {
        const auto& p = trial.pairs[k];
        if (!in_edge_free_region(*road, trial.positions_m[p.tx])) continue;
        const auto raw = static_cast<std::size_t>(std::floor(p.distance_m / bin_width_m));
        auto& g = groups[std::min(raw, bins - 1)];
        g.pair_indices.push_back(static_cast<std::uint32_t>(k));
        g.tally.add(p);
    }
    std::erase_if(groups, [](const DistanceGroup& g) { return g.pair_indices.empty(); });
    return groups;
}

MeanCi mean_ci95(std::span<const double> values) {
    MeanCi out;
    if (values.empty()) return out;
    double sum = 0.0;
    for (const double v : values) sum += v;
    const double n = static_cast<double>(values.size());
    out.mean = sum / n;
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (const double v : values) ss += (v - out.mean) * (v - out.mean);
    out.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return out;
}

std::vector<AggregateResult> aggregate(std::span<const TrialGroups> trials) {
    struct Acc {
        std::vector<double> prr;
        std::vector<double> thr;
        std::size_t n_pairs = 0;
        std::size_t n_trials = 0;
    };
    std::map<GroupKey, Acc> by_key;
    for (const auto& groups : trials) {
        for (const auto& [key, tally] : groups) {
            const auto thr = tally.throughput();
            if (!thr) continue;
            Acc& acc = by_key[key];
            ++acc.n_trials;
            acc.n_pairs += tally.n_pairs;
            acc.thr.push_back(*thr);
            if (const auto prr = tally.prr()) acc.prr.push_back(*prr);
        }
    }

    std::vector<AggregateResult> out;
    out.reserve(by_key.size());
    for (const auto& [key, acc] : by_key) {
        AggregateResult r;
        r.key = key;
        const MeanCi prr = mean_ci95(acc.prr);
        const MeanCi thr = mean_ci95(acc.thr);
        r.prr_mean = prr.mean;
        r.prr_ci95 = prr.ci95;
        r.throughput_mean = thr.mean;
        r.throughput_ci95 = thr.ci95;
        r.n_trials = acc.n_trials;
        r.n_pairs = acc.n_pairs;
        r.ci_defined = acc.n_trials >= 2;
        out.push_back(std::move(r));
    }
    return out;
}

double network_throughput(std::span<const AggregateResult> curve) {
    if (curve.empty()) throw ConfigError("network throughput of an empty distance curve");
    double sum = 0.0;
    for (const auto& r : curve) sum += r.throughput_mean;
    return sum / static_cast<double>(curve.size());
}

double network_throughput(std::span<const AnalyticCurvePoint> curve) {
    if (curve.empty()) throw ConfigError("network throughput of an empty distance curve");
    double sum = 0.0;
    for (const auto& p : curve) sum += p.throughput;
    return sum / static_cast<double>(curve.size());
}

}  // namespace sps::metrics
