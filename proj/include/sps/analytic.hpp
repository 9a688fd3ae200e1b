#pragma once

// Closed-form throughput model of sensing-based semi-persistent scheduling
// (SPS) on the NR-V2X sidelink, for fully and partially connected networks.
//
// Units: time in ms (slot duration) or seconds, rates in packets/sec,
// density in vehicles/km, sensing range in km, receiver distance in meters.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sps/errors.hpp"

namespace sps {

/// Scheduler parameters plus the quantities derived from them.
/// Only constructible through make(), which enforces every invariant.
class SpsConfig {
public:
    static SpsConfig make(double p_keep, int n_subchannels, double slot_ms = 1.0,
                          double tau = 10.0);

    double p_keep() const noexcept { return p_keep_; }
    int n_subchannels() const noexcept { return n_subchannels_; }
    double slot_ms() const noexcept { return slot_ms_; }
    /// Packet generation rate, packets/sec.
    double tau() const noexcept { return tau_; }

    /// RC scale: 100 / max(20, 1000/tau).
    double alpha() const noexcept { return alpha_; }
    /// Initial (and reset) re-selection counter, 10 * alpha.
    int rc_init() const noexcept { return rc_init_; }
    /// RBGs in one selection window, 1000 n_s / (tau t_s).
    std::size_t num_rbgs() const noexcept { return num_rbgs_; }
    /// 1000 / (tau t_s). Not necessarily integral; see slots_per_period_exact().
    double slots_per_period() const noexcept { return slots_per_period_; }
    std::optional<std::size_t> slots_per_period_exact() const noexcept;

    SpsConfig with_p_keep(double p) const { return make(p, n_subchannels_, slot_ms_, tau_); }
    SpsConfig with_subchannels(int n) const { return make(p_keep_, n, slot_ms_, tau_); }

    friend bool operator==(const SpsConfig&, const SpsConfig&) = default;

private:
    SpsConfig() = default;

    double p_keep_ = 0.0;
    int n_subchannels_ = 1;
    double slot_ms_ = 1.0;
    double tau_ = 10.0;
    double alpha_ = 1.0;
    int rc_init_ = 10;
    std::size_t num_rbgs_ = 0;
    double slots_per_period_ = 0.0;
};

/// Fully connected network: every vehicle senses the n_sensed others.
struct FcnParams {
    std::size_t n_sensed = 0;
};

/// Partially connected linear road.
struct PcnParams {
    double rho_per_km = 200.0;
    double sensing_range_km = 0.4;

    /// Vehicles in the sensing range of a tagged vehicle, 2 R_sen rho - 1.
    /// Throws ConfigError if 2 R_sen rho < 1 or not integral.
    std::size_t n_sensed() const;
    double sensing_range_m() const noexcept { return sensing_range_km * 1000.0; }
};

enum class SweepKind { NSensed, PKeep, Subchannels, Distance };

const char* to_string(SweepKind kind);

struct AnalyticCurvePoint {
    /// N_sen, p_k, n_s, or receiver distance in meters, per sweep kind.
    double abscissa = 0.0;
    double prr = 0.0;
    double throughput = 0.0;
};

/// Half-duplex loss probability, tau / 1000.
double hd_probability(const SpsConfig& cfg);

/// Number of RBGs per selection window (validated integral in SpsConfig).
std::size_t num_rbgs(const SpsConfig& cfg);

/// Expected available RBGs, N_r - (1 + prr) N_sen / 2. Throws Overload if <= 0.
double available_rbgs(double n_rbgs, double n_sensed, double prr);

/// Reselection collision probability in closed form,
/// 1 - [1 - (1 - p_k) / (10 alpha N_a)]^N_sen.
double p_rs_closed_form(const SpsConfig& cfg, std::size_t n_sensed, double n_available);

/// Same quantity summed term by term over the number n of co-reselecting
/// vehicles (binomial weights evaluated in log space).
double p_rs_binomial_sum(const SpsConfig& cfg, std::size_t n_sensed, double n_available);

/// Right-hand side of the fully connected PRR fixed-point equation.
double prr_fcn_rhs(const SpsConfig& cfg, std::size_t n_sensed, double prr);

struct FixedPointOptions {
    double damping = 0.5;
    double tolerance = 1e-10;
    int max_iterations = 10'000;
};

struct FixedPointResult {
    double prr = 1.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Solves prr = rhs(prr) by damped iteration from prr = 1.
FixedPointResult solve_prr_fcn(const SpsConfig& cfg, std::size_t n_sensed,
                               const FixedPointOptions& opts = {});

/// PRR of the fully connected network.
double prr_fcn(const SpsConfig& cfg, std::size_t n_sensed);

/// PRR from resource-selection collisions only, at distance d in [0, R_sen].
double prr_rsc(double distance_m, double sensing_range_m, double prr_fully_connected);

/// Expected hidden vehicles for a receiver at distance d: d * rho (real-valued).
double hidden_vehicles(const PcnParams& p, double distance_m);

/// PRR of the partially connected network at distance d, including hidden terminals.
double prr_pcn(const SpsConfig& cfg, const PcnParams& p, double distance_m);

/// Average per-vehicle throughput, tau * prr * (1 - tau/1000), packets/sec.
double throughput(const SpsConfig& cfg, double prr);

/// Fixed context a sweep varies one parameter of.
struct SweepTemplate {
    SpsConfig cfg;
    /// Used by the fully connected sweeps (NSensed overrides it).
    std::size_t n_sensed = 0;
    /// Required for SweepKind::Distance.
    std::optional<PcnParams> pcn;
};

/// One curve point per grid value. Model errors are rethrown with the
/// offending grid value in the message.
std::vector<AnalyticCurvePoint> sweep(const SweepTemplate& tmpl, SweepKind kind,
                                      std::span<const double> grid);

}  // namespace sps
