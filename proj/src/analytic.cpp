#include "sps/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace sps {

namespace {

constexpr double kIntegralTolerance = 1e-9;

bool near_integer(double x) {
    return std::abs(x - std::round(x)) <= kIntegralTolerance * std::max(1.0, std::abs(x));
}

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

// (1-p_k) / (10 alpha): chance a sensed vehicle reselects in the same window.
double co_reselection_probability(const SpsConfig& cfg) {
    return (1.0 - cfg.p_keep()) / (10.0 * cfg.alpha());
}

}  // namespace

SpsConfig SpsConfig::make(double p_keep, int n_subchannels, double slot_ms, double tau) {
    if (!std::isfinite(p_keep) || p_keep < 0.0 || p_keep > 1.0)
        throw ConfigError("p_k must lie in [0, 1], got " + fmt_num(p_keep));
    if (n_subchannels < 1)
        throw ConfigError("n_s must be >= 1, got " + std::to_string(n_subchannels));
    if (!std::isfinite(slot_ms) || slot_ms <= 0.0)
        throw ConfigError("t_s must be > 0 ms, got " + fmt_num(slot_ms));
    if (!std::isfinite(tau) || tau <= 0.0)
        throw ConfigError("tau must be > 0 packets/sec, got " + fmt_num(tau));

    SpsConfig cfg;
    cfg.p_keep_ = p_keep;
    cfg.n_subchannels_ = n_subchannels;
    cfg.slot_ms_ = slot_ms;
    cfg.tau_ = tau;
    cfg.alpha_ = 100.0 / std::max(20.0, 1000.0 / tau);

    const double rc = std::round(10.0 * cfg.alpha_);
    if (rc < 1.0)
        throw ConfigError("initial re-selection counter 10*alpha = " + fmt_num(10.0 * cfg.alpha_) +
                          " does not round to a positive integer");
    cfg.rc_init_ = static_cast<int>(rc);

    cfg.slots_per_period_ = 1000.0 / (tau * slot_ms);
    const double n_r = n_subchannels * cfg.slots_per_period_;
    if (!near_integer(n_r) || std::round(n_r) < 1.0)
        throw ConfigError("N_r = 1000 n_s / (tau t_s) = " + fmt_num(n_r) +
                          " is not a positive integer");
    cfg.num_rbgs_ = static_cast<std::size_t>(std::round(n_r));
    return cfg;
}

std::optional<std::size_t> SpsConfig::slots_per_period_exact() const noexcept {
    if (!near_integer(slots_per_period_) || std::round(slots_per_period_) < 1.0)
        return std::nullopt;
    return static_cast<std::size_t>(std::round(slots_per_period_));
}

std::size_t PcnParams::n_sensed() const {
    if (!std::isfinite(rho_per_km) || rho_per_km <= 0.0)
        throw ConfigError("rho must be > 0 vehicles/km");
    if (!std::isfinite(sensing_range_km) || sensing_range_km <= 0.0)
        throw ConfigError("R_sen must be > 0 km");
    const double in_range = 2.0 * sensing_range_km * rho_per_km;
    if (in_range < 1.0)
        throw ConfigError("2 R_sen rho must be >= 1, got " + fmt_num(in_range));
    if (!near_integer(in_range))
        throw ConfigError("2 R_sen rho = " + fmt_num(in_range) + " is not an integer vehicle count");
    return static_cast<std::size_t>(std::round(in_range)) - 1;
}

const char* to_string(SweepKind kind) {
    switch (kind) {
    case SweepKind::NSensed: return "N_sen";
    case SweepKind::PKeep: return "p_k";
    case SweepKind::Subchannels: return "n_s";
    case SweepKind::Distance: return "d";
    }
    return "unknown";
}

double hd_probability(const SpsConfig& cfg) { return cfg.tau() / 1000.0; }

std::size_t num_rbgs(const SpsConfig& cfg) { return cfg.num_rbgs(); }

double available_rbgs(double n_rbgs, double n_sensed, double prr) {
    if (!(prr >= 0.0 && prr <= 1.0))
        throw ModelError(ModelError::Kind::Domain, "PRR must lie in [0, 1], got " + fmt_num(prr));
    const double n_a = n_rbgs - (1.0 + prr) * n_sensed / 2.0;
    if (n_a <= 0.0)
        throw ModelError(ModelError::Kind::Overload,
                         "expected available RBGs N_a = " + fmt_num(n_a) + " <= 0 (N_r = " +
                             fmt_num(n_rbgs) + ", N_sen = " + fmt_num(n_sensed) + ")");
    return n_a;
}

double p_rs_closed_form(const SpsConfig& cfg, std::size_t n_sensed, double n_available) {
    if (!(n_available > 0.0))
        throw ModelError(ModelError::Kind::Overload, "N_a must be > 0, got " + fmt_num(n_available));
    const double per_vehicle = co_reselection_probability(cfg) / n_available;
    if (per_vehicle > 1.0)
        throw ModelError(ModelError::Kind::Domain,
                         "(1-p_k)/(10 alpha N_a) = " + fmt_num(per_vehicle) + " exceeds 1");
    return 1.0 - std::pow(1.0 - per_vehicle, static_cast<double>(n_sensed));
}

double p_rs_binomial_sum(const SpsConfig& cfg, std::size_t n_sensed, double n_available) {
    if (!(n_available >= 1.0))
        throw ModelError(ModelError::Kind::Domain, "N_a must be >= 1, got " + fmt_num(n_available));
    const double q = co_reselection_probability(cfg);
    if (q > 1.0)
        throw ModelError(ModelError::Kind::Domain,
                         "(1-p_k)/(10 alpha) = " + fmt_num(q) + " exceeds 1");
    if (n_sensed == 0 || q == 0.0) return 0.0;

    const double big_n = static_cast<double>(n_sensed);
    const double log_q = std::log(q);
    const double log_not_q = std::log1p(-q);  // -inf when q == 1
    const double lgamma_total = std::lgamma(big_n + 1.0);
    const double miss_one = 1.0 - 1.0 / n_available;

    double sum = 0.0;
    for (std::size_t n = 1; n <= n_sensed; ++n) {
        const double k = static_cast<double>(n);
        const double rest = big_n - k;
        double log_weight = lgamma_total - std::lgamma(k + 1.0) - std::lgamma(rest + 1.0) +
                            k * log_q;
        if (rest > 0.0) log_weight += rest * log_not_q;
        if (log_weight == -INFINITY) continue;
        // 1 - (1 - 1/N_a)^n, computed without cancellation for large N_a.
        const double collide = -std::expm1(k * std::log1p(-1.0 / n_available));
        sum += std::exp(log_weight) * (miss_one == 0.0 ? 1.0 : collide);
    }
    return sum;
}

double prr_fcn_rhs(const SpsConfig& cfg, std::size_t n_sensed, double prr) {
    const double n_a =
        available_rbgs(static_cast<double>(cfg.num_rbgs()), static_cast<double>(n_sensed), prr);
    const double base = 1.0 - co_reselection_probability(cfg) / n_a;
    if (base < 0.0)
        throw ModelError(ModelError::Kind::Domain,
                         "(1-p_k)/(10 alpha N_a) exceeds 1 at N_a = " + fmt_num(n_a));
    const double p = cfg.p_keep();
    return (p + std::pow(base, static_cast<double>(n_sensed))) / (1.0 + p);
}

FixedPointResult solve_prr_fcn(const SpsConfig& cfg, std::size_t n_sensed,
                               const FixedPointOptions& opts) {
    FixedPointResult out;
    double x = 1.0;
    double residual = 0.0;
    for (int it = 0; it < opts.max_iterations; ++it) {
        const double next = prr_fcn_rhs(cfg, n_sensed, x);
        residual = std::abs(next - x);
        if (residual <= opts.tolerance) {
            out.prr = x;
            out.residual = residual;
            out.iterations = it;
            return out;
        }
        x += opts.damping * (next - x);
    }
    throw ModelError(ModelError::Kind::Iteration,
                     "PRR fixed point did not converge in " + std::to_string(opts.max_iterations) +
                         " iterations (residual " + fmt_num(residual) + ")",
                     residual);
}

double prr_fcn(const SpsConfig& cfg, std::size_t n_sensed) {
    return solve_prr_fcn(cfg, n_sensed).prr;
}

double prr_rsc(double distance_m, double sensing_range_m, double prr_fully_connected) {
    if (!(sensing_range_m > 0.0))
        throw ModelError(ModelError::Kind::Domain, "R_sen must be > 0");
    if (!(distance_m >= 0.0 && distance_m <= sensing_range_m))
        throw ModelError(ModelError::Kind::Domain, "distance " + fmt_num(distance_m) +
                                                       " m outside [0, " +
                                                       fmt_num(sensing_range_m) + "] m");
    const double share = (2.0 * sensing_range_m - distance_m) / (2.0 * sensing_range_m);
    return 1.0 - share * (1.0 - prr_fully_connected);
}

double hidden_vehicles(const PcnParams& p, double distance_m) {
    return distance_m / 1000.0 * p.rho_per_km;
}

double prr_pcn(const SpsConfig& cfg, const PcnParams& p, double distance_m) {
    const std::size_t n_sensed = p.n_sensed();
    const double range_m = p.sensing_range_m();
    if (!(distance_m >= 0.0 && distance_m <= range_m))
        throw ModelError(ModelError::Kind::Domain, "distance " + fmt_num(distance_m) +
                                                       " m outside [0, " + fmt_num(range_m) +
                                                       "] m");
    // Each hidden vehicle avoids the N_sen/2 RBGs it can see in use.
    const double hidden_pool = static_cast<double>(cfg.num_rbgs()) - n_sensed / 2.0;
    if (hidden_pool <= 1.0)
        throw ModelError(ModelError::Kind::Overload,
                         "N_r - N_sen/2 = " + fmt_num(hidden_pool) + " <= 1");
    const double rsc = prr_rsc(distance_m, range_m, prr_fcn(cfg, n_sensed));
    return rsc * std::pow(1.0 - 1.0 / hidden_pool, hidden_vehicles(p, distance_m));
}

double throughput(const SpsConfig& cfg, double prr) {
    if (!(prr >= 0.0 && prr <= 1.0))
        throw ModelError(ModelError::Kind::Domain, "PRR must lie in [0, 1], got " + fmt_num(prr));
    return cfg.tau() * prr * (1.0 - hd_probability(cfg));
}

std::vector<AnalyticCurvePoint> sweep(const SweepTemplate& tmpl, SweepKind kind,
                                      std::span<const double> grid) {
    std::vector<AnalyticCurvePoint> points;
    points.reserve(grid.size());
    for (const double value : grid) {
        const auto tag = [&](const std::string& msg) {
            return std::string("sweep ") + to_string(kind) + "=" + fmt_num(value) + ": " + msg;
        };
        try {
            SpsConfig cfg = tmpl.cfg;
            double prr = 0.0;
            switch (kind) {
            case SweepKind::NSensed:
                if (value < 0.0 || !near_integer(value))
                    throw ConfigError("N_sen must be a non-negative integer");
                prr = prr_fcn(cfg, static_cast<std::size_t>(std::round(value)));
                break;
            case SweepKind::PKeep:
                cfg = cfg.with_p_keep(value);
                prr = prr_fcn(cfg, tmpl.n_sensed);
                break;
            case SweepKind::Subchannels:
                if (!near_integer(value)) throw ConfigError("n_s must be an integer");
                cfg = cfg.with_subchannels(static_cast<int>(std::round(value)));
                prr = prr_fcn(cfg, tmpl.n_sensed);
                break;
            case SweepKind::Distance:
                if (!tmpl.pcn) throw ConfigError("distance sweep needs partially connected parameters");
                prr = prr_pcn(cfg, *tmpl.pcn, value);
                break;
            }
            points.push_back({value, prr, throughput(cfg, prr)});
        } catch (const ModelError& e) {
            throw ModelError(e.kind(), tag(e.what()), e.residual());
        } catch (const ConfigError& e) {
            throw ConfigError(tag(e.what()));
        }
    }
    return points;
}

}  // namespace sps
