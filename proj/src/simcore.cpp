#include "sps/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sps::sim {

namespace {

constexpr double kGeomTolerance = 1e-9;

// Marks every cell vehicle `self` cannot use with `token`; returns how many
// distinct cells got marked.
std::size_t mark_busy(const Population& pop, const ResourceGrid& grid, std::size_t self,
                      const SimOptions& opts, std::vector<std::uint32_t>& stamp,
                      std::uint32_t token) {
    std::size_t busy = 0;
    const auto mark = [&](std::uint32_t cell) {
        if (stamp[cell] != token) {
            stamp[cell] = token;
            ++busy;
        }
    };
    const NeighborRange range = pop.neighbors(self);
    for (std::uint32_t u = range.first; u <= range.last; ++u)
        if (u != self) mark(grid.cell_of(u));
    if (opts.sensing_deafness) {
        const auto ns = static_cast<std::uint32_t>(grid.n_subchannels());
        const std::uint32_t first = grid.slot_of(self) * ns;
        for (std::uint32_t c = first; c < first + ns; ++c) mark(c);
    }
    return busy;
}

std::size_t periods_in(double seconds, double tau) {
    return static_cast<std::size_t>(std::floor(seconds * tau + 1e-9));
}

}  // namespace

void validate(const Scenario& scn) {
    if (const auto* fc = std::get_if<FullyConnected>(&scn)) {
        if (fc->n_vehicles < 2)
            throw ConfigError("fully connected scenario needs at least 2 vehicles");
        return;
    }
    const auto& pc = std::get<PartiallyConnected>(scn);
    if (!(pc.rho_per_km > 0.0) || !(pc.sensing_range_km > 0.0) || !(pc.road_length_km > 0.0))
        throw ConfigError("road length, density and sensing range must be positive");
    if (pc.road_length_km + kGeomTolerance < 4.0 * pc.sensing_range_km)
        throw ConfigError("road length must be at least 4 R_sen to leave an edge-free region");
    const double count = pc.rho_per_km * pc.road_length_km;
    if (std::abs(count - std::round(count)) > 1e-6)
        throw ConfigError("rho * road_length = " + std::to_string(count) +
                          " is not an integer vehicle count");
    if (std::round(count) < 2.0) throw ConfigError("road must hold at least 2 vehicles");
}

std::size_t vehicle_count(const Scenario& scn) {
    if (const auto* fc = std::get_if<FullyConnected>(&scn)) return fc->n_vehicles;
    const auto& pc = std::get<PartiallyConnected>(scn);
    return static_cast<std::size_t>(std::round(pc.rho_per_km * pc.road_length_km));
}

double sensing_range_m(const Scenario& scn) {
    if (std::holds_alternative<FullyConnected>(scn)) return std::numeric_limits<double>::infinity();
    return std::get<PartiallyConnected>(scn).sensing_range_km * 1000.0;
}

Population::Population(Scenario scn, SpsConfig cfg, std::vector<VehicleState> vehicles)
    : scenario_(std::move(scn)), cfg_(cfg), slots_(0), vehicles_(std::move(vehicles)) {
    validate(scenario_);
    const auto slots = cfg_.slots_per_period_exact();
    if (!slots)
        throw ConfigError("slots per period 1000/(tau t_s) must be a positive integer");
    slots_ = *slots;
    if (vehicles_.size() != vehicle_count(scenario_))
        throw ConfigError("vehicle count does not match the scenario");

    const std::size_t cells = cfg_.num_rbgs();
    const auto ns = static_cast<std::uint32_t>(cfg_.n_subchannels());
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        const auto& v = vehicles_[i];
        if (v.id != i) throw ConfigError("vehicle ids must equal their index");
        if (i > 0 && v.position_m < vehicles_[i - 1].position_m)
            throw ConfigError("vehicles must be ordered by position");
        if (v.reserved.subchannel >= ns || v.reserved.slot >= slots_ ||
            cell_index(v.reserved) >= cells)
            throw ConfigError("reserved RBG out of range");
        if (v.rc < 0 || v.rc > cfg_.rc_init()) throw ConfigError("re-selection counter out of range");
    }

    neighbors_.resize(vehicles_.size());
    const double range = sensing_range_m(scenario_);
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;
    const auto n = static_cast<std::uint32_t>(vehicles_.size());
    for (std::uint32_t i = 0; i < n; ++i) {
        const double x = vehicles_[i].position_m;
        while (x - vehicles_[lo].position_m > range + kGeomTolerance) ++lo;
        if (hi < i) hi = i;
        while (hi + 1 < n && vehicles_[hi + 1].position_m - x <= range + kGeomTolerance) ++hi;
        neighbors_[i] = {lo, hi};
    }
}

void ResourceGrid::rebuild(const Population& pop) {
    n_subchannels_ = pop.config().n_subchannels();
    const std::size_t cells = pop.num_cells();
    const std::size_t n = pop.size();
    cell_of_.resize(n);
    cell_start_.assign(cells + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        cell_of_[i] = pop.cell_index(pop[i].reserved);
        ++cell_start_[cell_of_[i] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) cell_start_[c + 1] += cell_start_[c];
    occupants_.resize(n);
    std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) occupants_[fill[cell_of_[i]]++] = static_cast<std::uint32_t>(i);
}

Population build_scenario(const Scenario& scn, const SpsConfig& cfg, std::uint64_t seed) {
    validate(scn);
    const std::size_t n = vehicle_count(scn);
    double spacing_m = 0.0;
    if (const auto* pc = std::get_if<PartiallyConnected>(&scn)) spacing_m = 1000.0 / pc->rho_per_km;

    Rng rng(seed);
    std::uniform_int_distribution<std::uint32_t> cell_dist(
        0, static_cast<std::uint32_t>(cfg.num_rbgs() - 1));
    std::uniform_int_distribution<int> rc_dist(1, cfg.rc_init());
    const auto ns = static_cast<std::uint32_t>(cfg.n_subchannels());

    std::vector<VehicleState> vehicles(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = vehicles[i];
        v.id = static_cast<std::uint32_t>(i);
        v.position_m = static_cast<double>(i) * spacing_m;
        const std::uint32_t cell = cell_dist(rng);
        v.reserved = {cell / ns, cell % ns};
        v.rc = rc_dist(rng);
    }
    return Population(scn, cfg, std::move(vehicles));
}

std::vector<bool> sensing_record(const Population& pop, const ResourceGrid& grid, std::size_t i,
                                 const SimOptions& opts) {
    std::vector<std::uint32_t> stamp(pop.num_cells(), 0);
    mark_busy(pop, grid, i, opts, stamp, 1);
    std::vector<bool> busy(pop.num_cells());
    for (std::size_t c = 0; c < busy.size(); ++c) busy[c] = stamp[c] == 1;
    return busy;
}

PeriodStats advance_period(Population& pop, const ResourceGrid& grid, Rng& rng,
                           const SimOptions& opts) {
    PeriodStats stats;
    const std::size_t cells = pop.num_cells();
    const int rc_init = pop.config().rc_init();
    std::bernoulli_distribution keep(pop.config().p_keep());
    std::uniform_int_distribution<std::uint32_t> any_cell(0, static_cast<std::uint32_t>(cells - 1));

    std::vector<std::uint32_t> stamp(cells, 0);
    std::vector<std::uint32_t> idle;
    std::uint32_t token = 0;

    for (std::size_t i = 0; i < pop.size(); ++i) {
        VehicleState& v = pop[i];
        if (--v.rc > 0) continue;
        v.rc = rc_init;
        ++stats.expirations;
        if (keep(rng)) continue;
        ++stats.reselections;

        ++token;
        const std::size_t available = cells - mark_busy(pop, grid, i, opts, stamp, token);
        std::uint32_t choice = 0;
        if (available == 0) {
            ++stats.starvations;
            choice = any_cell(rng);
        } else if (available * 8 >= cells) {
            do {
                choice = any_cell(rng);
            } while (stamp[choice] == token);
        } else {
            idle.clear();
            for (std::uint32_t c = 0; c < cells; ++c)
                if (stamp[c] != token) idle.push_back(c);
            std::uniform_int_distribution<std::size_t> pick(0, idle.size() - 1);
            choice = idle[pick(rng)];
        }
        v.reserved = pop.rbg_of(choice);
    }
    return stats;
}

PeriodTransmissions run_period(Population& pop, Rng& rng, const SimOptions& opts) {
    PeriodTransmissions out;
    out.grid.rebuild(pop);
    out.stats = advance_period(pop, out.grid, rng, opts);
    return out;
}

PairCounters::PairCounters(const Population& pop) {
    const std::size_t n = pop.size();
    offset_.resize(n);
    first_.resize(n);
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        offset_[i] = total;
        first_[i] = pop.neighbors(i).first;
        total += pop.sensed_count(i);
    }
    hd_lost_.assign(total, 0);
    collided_.assign(total, 0);
}

void tally_receptions(const ResourceGrid& grid, const Population& pop, PairCounters& counters) {
    const auto ns = static_cast<std::uint32_t>(grid.n_subchannels());
    struct Span {
        std::uint32_t first, last;
    };
    std::vector<Span> spans;

    for (std::uint32_t tx = 0; tx < pop.size(); ++tx) {
        const NeighborRange audience = pop.neighbors(tx);
        const std::uint32_t cell = grid.cell_of(tx);
        const std::uint32_t slot = cell / ns;

        // Receivers transmitting in the same slot are deaf to tx.
        for (std::uint32_t c = slot * ns; c < (slot + 1) * ns; ++c)
            for (const std::uint32_t rx : grid.occupants(c))
                if (rx != tx && rx >= audience.first && rx <= audience.last)
                    counters.add_hd(counters.index(tx, rx));

        // Any other user of tx's cell jams every receiver within its range.
        spans.clear();
        for (const std::uint32_t other : grid.occupants(cell)) {
            if (other == tx) continue;
            const NeighborRange jammed = pop.neighbors(other);
            const std::uint32_t first = std::max(jammed.first, audience.first);
            const std::uint32_t last = std::min(jammed.last, audience.last);
            if (first <= last) spans.push_back({first, last});
        }
        if (spans.empty()) continue;
        std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.first < b.first; });

        std::uint32_t next = 0;  // first receiver not yet visited
        for (const Span& s : spans) {
            for (std::uint32_t rx = std::max(s.first, next); rx <= s.last; ++rx) {
                if (rx == tx || grid.slot_of(rx) == slot) continue;
                counters.add_collision(counters.index(tx, rx));
            }
            next = std::max(next, s.last + 1);
        }
    }
}

PairCounters detect_receptions(const ResourceGrid& grid, const Population& pop) {
    PairCounters counters(pop);
    tally_receptions(grid, pop, counters);
    return counters;
}

bool operator==(const TrialResult& a, const TrialResult& b) {
    return a.scenario == b.scenario && a.cfg == b.cfg && a.options == b.options &&
           a.seed == b.seed && a.periods_simulated == b.periods_simulated &&
           a.periods_counted == b.periods_counted && a.counted_duration_s == b.counted_duration_s &&
           a.positions_m == b.positions_m && a.pairs == b.pairs &&
           a.reselections == b.reselections && a.starvations == b.starvations &&
           a.overload_flagged == b.overload_flagged;
}

TrialResult run_trial(const Scenario& scn, const SpsConfig& cfg, std::uint64_t seed,
                      double duration_s, double warmup_s, const SimOptions& opts) {
    if (!(warmup_s >= 0.0) || !(duration_s >= warmup_s))
        throw ConfigError("need duration_s >= warmup_s >= 0");

    TrialResult result{.scenario = scn, .cfg = cfg, .options = opts, .seed = seed};
    result.periods_simulated = periods_in(duration_s, cfg.tau());
    const std::size_t warmup = std::min(periods_in(warmup_s, cfg.tau()), result.periods_simulated);
    result.periods_counted = result.periods_simulated - warmup;
    result.counted_duration_s = static_cast<double>(result.periods_counted) / cfg.tau();

    Population pop = build_scenario(scn, cfg, seed);
    // Stream for the SPS process, distinct from the one that drew the
    // initial population.
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    PairCounters counters(pop);
    ResourceGrid grid;

    for (std::size_t period = 0; period < result.periods_simulated; ++period) {
        grid.rebuild(pop);
        if (period >= warmup) tally_receptions(grid, pop, counters);
        const PeriodStats stats = advance_period(pop, grid, rng, opts);
        result.reselections += stats.reselections;
        result.starvations += stats.starvations;
    }
    result.overload_flagged = result.reselections > 0 && 2 * result.starvations > result.reselections;

    result.positions_m.reserve(pop.size());
    for (const auto& v : pop.vehicles()) result.positions_m.push_back(v.position_m);

    const auto sent = static_cast<std::uint32_t>(result.periods_counted);
    result.pairs.reserve(counters.num_pairs());
    for (std::uint32_t tx = 0; tx < pop.size(); ++tx) {
        const NeighborRange r = pop.neighbors(tx);
        for (std::uint32_t rx = r.first; rx <= r.last; ++rx) {
            if (rx == tx) continue;
            const std::size_t k = counters.index(tx, rx);
            const std::uint32_t hd = counters.hd_lost()[k];
            const std::uint32_t col = counters.collided()[k];
            result.pairs.push_back({tx, rx, std::abs(pop[rx].position_m - pop[tx].position_m), sent,
                                    sent - hd - col, hd});
        }
    }
    return result;
}

}  // namespace sps::sim
