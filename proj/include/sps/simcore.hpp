#pragma once

// Slot-level Monte Carlo simulator of the simplified SPS MAC.
//
// One selection period is 1/tau seconds = slots_per_period slots of n_s
// subchannels each; a (slot, subchannel) cell is one RBG and carries one
// packet. Every vehicle transmits exactly once per period in its reserved
// RBG. Reception is MAC-only: a packet is lost to the half-duplex effect if
// the receiver transmits in the same slot, and to a collision if any other
// vehicle within the receiver's sensing range uses the same RBG.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "sps/analytic.hpp"

namespace sps::sim {

struct FullyConnected {
    std::size_t n_vehicles = 2;  // N_sen + 1
    friend bool operator==(const FullyConnected&, const FullyConnected&) = default;
};

struct PartiallyConnected {
    double road_length_km = 5.0;
    double rho_per_km = 200.0;
    double sensing_range_km = 0.4;
    friend bool operator==(const PartiallyConnected&, const PartiallyConnected&) = default;
};

using Scenario = std::variant<FullyConnected, PartiallyConnected>;

/// Throws ConfigError when the scenario invariants do not hold.
void validate(const Scenario& scn);
std::size_t vehicle_count(const Scenario& scn);
/// Sensing range in meters; infinite for the fully connected scenario.
double sensing_range_m(const Scenario& scn);

struct SimOptions {
    /// A vehicle cannot sense any subchannel of the slot it transmits in.
    /// Cells it could not observe are never offered for reselection.
    bool sensing_deafness = true;
    friend bool operator==(const SimOptions&, const SimOptions&) = default;
};

struct Rbg {
    std::uint32_t slot = 0;
    std::uint32_t subchannel = 0;
    friend bool operator==(const Rbg&, const Rbg&) = default;
};

struct VehicleState {
    std::uint32_t id = 0;
    double position_m = 0.0;
    Rbg reserved;
    int rc = 0;
    friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Inclusive index range [first, last] of vehicles within sensing range of
/// a vehicle (itself included). Vehicles are stored in position order, so
/// the range is contiguous.
struct NeighborRange {
    std::uint32_t first = 0;
    std::uint32_t last = 0;
    friend bool operator==(const NeighborRange&, const NeighborRange&) = default;
};

class Population {
public:
    Population(Scenario scn, SpsConfig cfg, std::vector<VehicleState> vehicles);

    const Scenario& scenario() const noexcept { return scenario_; }
    const SpsConfig& config() const noexcept { return cfg_; }
    std::size_t slots_per_period() const noexcept { return slots_; }
    std::size_t num_cells() const noexcept { return cfg_.num_rbgs(); }
    std::size_t size() const noexcept { return vehicles_.size(); }

    std::span<const VehicleState> vehicles() const noexcept { return vehicles_; }
    std::span<VehicleState> vehicles() noexcept { return vehicles_; }
    const VehicleState& operator[](std::size_t i) const { return vehicles_[i]; }
    VehicleState& operator[](std::size_t i) { return vehicles_[i]; }

    const NeighborRange& neighbors(std::size_t i) const { return neighbors_[i]; }
    /// Number of other vehicles vehicle i senses.
    std::size_t sensed_count(std::size_t i) const {
        return neighbors_[i].last - neighbors_[i].first;
    }

    std::uint32_t cell_index(const Rbg& rbg) const noexcept {
        return rbg.slot * static_cast<std::uint32_t>(cfg_.n_subchannels()) + rbg.subchannel;
    }
    Rbg rbg_of(std::uint32_t cell) const noexcept {
        const auto ns = static_cast<std::uint32_t>(cfg_.n_subchannels());
        return {cell / ns, cell % ns};
    }

    friend bool operator==(const Population&, const Population&) = default;

private:
    Scenario scenario_;
    SpsConfig cfg_;
    std::size_t slots_;
    std::vector<VehicleState> vehicles_;
    std::vector<NeighborRange> neighbors_;
};

/// Who transmitted in which cell during one period (a counting-sorted
/// snapshot of every vehicle's reserved RBG).
class ResourceGrid {
public:
    ResourceGrid() = default;
    explicit ResourceGrid(const Population& pop) { rebuild(pop); }

    void rebuild(const Population& pop);

    std::size_t num_cells() const noexcept { return cell_start_.empty() ? 0 : cell_start_.size() - 1; }
    int n_subchannels() const noexcept { return n_subchannels_; }
    std::uint32_t cell_of(std::size_t vehicle) const { return cell_of_[vehicle]; }
    std::uint32_t slot_of(std::size_t vehicle) const {
        return cell_of_[vehicle] / static_cast<std::uint32_t>(n_subchannels_);
    }
    std::span<const std::uint32_t> occupants(std::uint32_t cell) const {
        return std::span(occupants_).subspan(cell_start_[cell], cell_start_[cell + 1] - cell_start_[cell]);
    }
    std::size_t transmissions() const noexcept { return occupants_.size(); }

private:
    int n_subchannels_ = 1;
    std::vector<std::uint32_t> cell_of_;
    std::vector<std::uint32_t> cell_start_;
    std::vector<std::uint32_t> occupants_;
};

using Rng = std::mt19937_64;

/// Places vehicles (all at 0 m, or at uniform spacing 1/rho along the road)
/// and draws each one's initial RBG and residual counter from the RNG.
Population build_scenario(const Scenario& scn, const SpsConfig& cfg, std::uint64_t seed);

/// Cells vehicle i would consider busy if it reselected after `grid`'s period:
/// RBGs used by sensed vehicles, plus its own transmit slot when deaf.
std::vector<bool> sensing_record(const Population& pop, const ResourceGrid& grid, std::size_t i,
                                 const SimOptions& opts);

struct PeriodStats {
    std::size_t expirations = 0;
    std::size_t reselections = 0;
    std::size_t starvations = 0;
};

struct PeriodTransmissions {
    ResourceGrid grid;
    PeriodStats stats;
};

/// Counter update and reselection after the transmissions in `grid`.
/// Reselecting vehicles pick uniformly among cells idle in their sensing
/// record for that period; with no idle cell they fall back to all cells
/// and count a starvation.
PeriodStats advance_period(Population& pop, const ResourceGrid& grid, Rng& rng,
                           const SimOptions& opts);

/// One full period: every vehicle transmits in its reserved RBG, then
/// advance_period() runs against those transmissions.
PeriodTransmissions run_period(Population& pop, Rng& rng, const SimOptions& opts = {});

/// Failure counters for every ordered (tx, rx) pair within sensing range,
/// laid out tx-major in neighbor-index order.
class PairCounters {
public:
    explicit PairCounters(const Population& pop);

    std::size_t num_pairs() const noexcept { return hd_lost_.size(); }
    std::size_t index(std::uint32_t tx, std::uint32_t rx) const {
        return offset_[tx] + (rx - first_[tx]) - (rx > tx ? 1 : 0);
    }
    std::uint32_t hd_lost(std::uint32_t tx, std::uint32_t rx) const { return hd_lost_[index(tx, rx)]; }
    std::uint32_t collided(std::uint32_t tx, std::uint32_t rx) const { return collided_[index(tx, rx)]; }

    std::span<const std::uint32_t> hd_lost() const noexcept { return hd_lost_; }
    std::span<const std::uint32_t> collided() const noexcept { return collided_; }

    void add_hd(std::size_t pair) { ++hd_lost_[pair]; }
    void add_collision(std::size_t pair) { ++collided_[pair]; }

private:
    std::vector<std::size_t> offset_;
    std::vector<std::uint32_t> first_;
    std::vector<std::uint32_t> hd_lost_;
    std::vector<std::uint32_t> collided_;
};

/// Adds this period's reception failures to `counters`. A lost packet is
/// attributed to the half-duplex effect when the receiver transmitted in
/// the same slot, otherwise to a MAC collision.
void tally_receptions(const ResourceGrid& grid, const Population& pop, PairCounters& counters);

/// Reception outcomes of a single period (counters are 0 or 1).
PairCounters detect_receptions(const ResourceGrid& grid, const Population& pop);

struct PairRecord {
    std::uint32_t tx = 0;
    std::uint32_t rx = 0;
    double distance_m = 0.0;
    std::uint32_t sent = 0;
    std::uint32_t received = 0;
    std::uint32_t hd_lost = 0;
    friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

struct TrialResult {
    Scenario scenario;
    SpsConfig cfg;
    SimOptions options{};
    std::uint64_t seed = 0;
    std::size_t periods_simulated = 0;
    std::size_t periods_counted = 0;
    double counted_duration_s = 0.0;
    std::vector<double> positions_m{};
    std::vector<PairRecord> pairs{};
    std::size_t reselections = 0;
    std::size_t starvations = 0;
    /// Starvation hit more than half of all reselections.
    bool overload_flagged = false;
};

bool operator==(const TrialResult& a, const TrialResult& b);

/// Simulates floor(duration_s * tau) periods and counts receptions after
/// the first floor(warmup_s * tau). Deterministic in (scn, cfg, seed, opts).
TrialResult run_trial(const Scenario& scn, const SpsConfig& cfg, std::uint64_t seed,
                      double duration_s, double warmup_s, const SimOptions& opts = {});

}  // namespace sps::sim
