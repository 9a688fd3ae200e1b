#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "sps/harness.hpp"

namespace sps::harness {

namespace {

const char* metric_name(Metric m) { return m == Metric::Prr ? "prr" : "throughput"; }

const char* scenario_name(ScenarioKind k) {
    return k == ScenarioKind::FullyConnected ? "fully_connected" : "partially_connected";
}

// Grid point coordinates shared by the analytic and simulated rows.
struct Point {
    SpsConfig cfg;
    std::optional<std::size_t> n_sensed;
    std::optional<PcnParams> pcn;
    std::optional<double> road_length_km;
};

CsvRow key_row(const ExperimentSpec& spec, const Point& pt) {
    CsvRow r;
    r.figure = spec.figure;
    r.scenario = scenario_name(spec.scenario);
    r.p_k = pt.cfg.p_keep();
    r.n_s = pt.cfg.n_subchannels();
    r.tau = pt.cfg.tau();
    if (pt.pcn) {
        r.n_sensed = pt.pcn->n_sensed();
        r.rho = pt.pcn->rho_per_km;
        r.r_sen_km = pt.pcn->sensing_range_km;
    } else {
        r.n_sensed = pt.n_sensed;
    }
    return r;
}

std::vector<Point> grid_points(const ExperimentSpec& spec) {
    std::vector<Point> pts;
    for (const double p : spec.p_keep)
        for (const int ns : spec.n_subchannels) {
            const SpsConfig cfg = SpsConfig::make(p, ns, spec.slot_ms, spec.tau);
            if (spec.scenario == ScenarioKind::FullyConnected) {
                for (const auto n : spec.n_sensed) pts.push_back({cfg, n, std::nullopt, std::nullopt});
            } else {
                for (const double rho : spec.rho_per_km)
                    for (const double r : spec.sensing_range_km)
                        for (const double len : spec.road_length_km)
                            pts.push_back({cfg, std::nullopt, PcnParams{rho, r}, len});
            }
        }
    return pts;
}

sim::Scenario scenario_of(const Point& pt) {
    if (pt.pcn) return sim::PartiallyConnected{*pt.road_length_km, pt.pcn->rho_per_km, pt.pcn->sensing_range_km};
    return sim::FullyConnected{*pt.n_sensed + 1};
}

double pick(Metric m, double prr, double thr) { return m == Metric::Prr ? prr : thr; }

void emit_error_rows(std::vector<CsvRow>& rows, const ExperimentSpec& spec, CsvRow base,
                     const char* source, const std::string& message) {
    for (const Metric m : spec.metrics) {
        CsvRow r = base;
        r.source = source;
        r.metric = metric_name(m);
        r.error = message;
        rows.push_back(std::move(r));
    }
}

std::vector<double> bin_centers(const ExperimentSpec& spec, const PcnParams& pcn) {
    std::vector<double> centers;
    const std::size_t bins = metrics::bin_count(pcn.sensing_range_m(), spec.bin_width_m);
    for (std::size_t b = 0; b < bins; ++b) centers.push_back(metrics::bin_center(b, spec.bin_width_m));
    return centers;
}

void analytic_rows(const ExperimentSpec& spec, const Point& pt, std::vector<CsvRow>& rows,
                   std::size_t& errors) {
    const CsvRow base = key_row(spec, pt);
    try {
        if (!pt.pcn) {
            const double prr = prr_fcn(pt.cfg, *pt.n_sensed);
            const double thr = throughput(pt.cfg, prr);
            for (const Metric m : spec.metrics) {
                CsvRow r = base;
                r.source = "analytic";
                r.metric = metric_name(m);
                r.mean = pick(m, prr, thr);
                rows.push_back(std::move(r));
            }
            return;
        }
        const auto centers = bin_centers(spec, *pt.pcn);
        const auto curve = sweep({pt.cfg, 0, pt.pcn}, SweepKind::Distance, centers);
        if (spec.curve == CurveKind::Network) {
            double prr_sum = 0.0;
            for (const auto& c : curve) prr_sum += c.prr;
            const double prr = prr_sum / static_cast<double>(curve.size());
            const double thr = metrics::network_throughput(curve);
            for (const Metric m : spec.metrics) {
                CsvRow r = base;
                r.source = "analytic";
                r.metric = metric_name(m);
                r.mean = pick(m, prr, thr);
                rows.push_back(std::move(r));
            }
            return;
        }
        for (const Metric m : spec.metrics)
            for (const auto& c : curve) {
                CsvRow r = base;
                r.d_bin_m = c.abscissa;
                r.source = "analytic";
                r.metric = metric_name(m);
                r.mean = pick(m, c.prr, c.throughput);
                rows.push_back(std::move(r));
            }
    } catch (const ModelError& e) {
        ++errors;
        emit_error_rows(rows, spec, base, "analytic", e.what());
    }
}

void simulated_rows(const ExperimentSpec& spec, const Point& pt, std::size_t jobs,
                    std::vector<CsvRow>& rows, std::size_t& errors, std::size_t& overloaded) {
    const CsvRow base = key_row(spec, pt);
    std::vector<metrics::TrialGroups> trials;
    try {
        trials = simulate_point(scenario_of(pt), pt.cfg, spec, jobs, &overloaded);
    } catch (const std::exception& e) {
        ++errors;
        emit_error_rows(rows, spec, base, "sim", e.what());
        return;
    }

    const auto sim_row = [&](Metric m, std::optional<double> d_bin, double mean, double ci,
                             std::size_t n_trials) {
        CsvRow r = base;
        r.d_bin_m = d_bin;
        r.source = "sim";
        r.metric = metric_name(m);
        r.mean = mean;
        r.ci95 = ci;
        r.trials = n_trials;
        rows.push_back(std::move(r));
    };

    if (pt.pcn && spec.curve == CurveKind::Network) {
        // Network average per trial, then across trials.
        std::vector<double> prr, thr;
        for (const auto& groups : trials) {
            const auto curve = metrics::aggregate(std::span(&groups, 1));
            if (curve.empty()) continue;
            double p = 0.0;
            for (const auto& c : curve) p += c.prr_mean;
            prr.push_back(p / static_cast<double>(curve.size()));
            thr.push_back(metrics::network_throughput(curve));
        }
        if (thr.empty()) {
            ++errors;
            emit_error_rows(rows, spec, base, "sim", "no pairs in the edge-free region");
            return;
        }
        const auto p = metrics::mean_ci95(prr);
        const auto t = metrics::mean_ci95(thr);
        for (const Metric m : spec.metrics)
            sim_row(m, std::nullopt, pick(m, p.mean, t.mean), pick(m, p.ci95, t.ci95), thr.size());
        return;
    }

    const auto agg = metrics::aggregate(trials);
    if (!pt.pcn) {
        if (agg.empty()) {
            ++errors;
            emit_error_rows(rows, spec, base, "sim", "no counted packets");
            return;
        }
        const auto& a = agg.front();
        for (const Metric m : spec.metrics)
            sim_row(m, std::nullopt, pick(m, a.prr_mean, a.throughput_mean),
                    pick(m, a.prr_ci95, a.throughput_ci95), a.n_trials);
        return;
    }

    const auto centers = bin_centers(spec, *pt.pcn);
    for (const Metric m : spec.metrics)
        for (const double c : centers) {
            const auto it = std::find_if(agg.begin(), agg.end(), [&](const metrics::AggregateResult& a) {
                return a.key.bin_center_m && std::abs(*a.key.bin_center_m - c) < 1e-9;
            });
            if (it == agg.end()) {
                ++errors;
                CsvRow r = base;
                r.d_bin_m = c;
                r.source = "sim";
                r.metric = metric_name(m);
                r.error = "no pairs in distance bin";
                rows.push_back(std::move(r));
                continue;
            }
            sim_row(m, c, pick(m, it->prr_mean, it->throughput_mean),
                    pick(m, it->prr_ci95, it->throughput_ci95), it->n_trials);
        }
}

}  // namespace

std::vector<metrics::TrialGroups> simulate_point(const sim::Scenario& scn, const SpsConfig& cfg,
                                                 const ExperimentSpec& spec, std::size_t jobs,
                                                 std::size_t* overloaded) {
    const std::size_t n = spec.trials;
    std::vector<metrics::TrialGroups> out(n);
    std::vector<char> flagged(n, 0);
    const sim::SimOptions opts{spec.sensing_deafness};

    const auto run_one = [&](std::size_t t) {
        const auto trial = sim::run_trial(scn, cfg, spec.base_seed + t, spec.duration_s, spec.warmup_s, opts);
        flagged[t] = trial.overload_flagged;
        metrics::TrialGroups groups;
        if (std::holds_alternative<sim::FullyConnected>(scn)) {
            groups.push_back({{"", std::nullopt}, metrics::pool(trial)});
        } else {
            for (auto& g : metrics::bin_by_distance(trial, spec.bin_width_m))
                groups.push_back({{"", g.center_m}, g.tally});
        }
        out[t] = std::move(groups);
    };

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, n);
    if (jobs <= 1) {
        for (std::size_t t = 0; t < n; ++t) run_one(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < jobs; ++w)
            workers.emplace_back([&] {
                for (std::size_t t; (t = next.fetch_add(1)) < n;) {
                    try {
                        run_one(t);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        for (auto& w : workers) w.join();
        if (failure) std::rethrow_exception(failure);
    }

    if (overloaded)
        for (const char f : flagged) *overloaded += f ? 1 : 0;
    return out;
}

ExperimentSpec with_overrides(ExperimentSpec spec, const RunOptions& opts) {
    if (opts.seed) spec.base_seed = *opts.seed;
    if (opts.trials) spec.trials = *opts.trials;
    if (opts.duration_s) spec.duration_s = *opts.duration_s;
    if (opts.strict_paper_mode) spec.sensing_deafness = false;
    // A shortened run keeps its warmup inside the duration.
    if (spec.warmup_s > spec.duration_s) spec.warmup_s = 0.0;
    validate(spec);
    return spec;
}

ExperimentOutput run_experiment(const ExperimentSpec& spec_in, const RunOptions& opts) {
    const ExperimentSpec spec = with_overrides(spec_in, opts);
    ExperimentOutput out;
    for (const Point& pt : grid_points(spec)) {
        analytic_rows(spec, pt, out.rows, out.errored_rows);
        if (!opts.simulate) continue;
        if (opts.verbose) {
            const CsvRow k = key_row(spec, pt);
            std::fprintf(stderr, "[%s] simulating p_k=%g n_s=%d N_sen=%zu (%zu trials x %g s)\n",
                         spec.name.c_str(), *k.p_k, *k.n_s, k.n_sensed.value_or(0), spec.trials,
                         spec.duration_s);
        }
        simulated_rows(spec, pt, opts.jobs, out.rows, out.errored_rows, out.overloaded_trials);
    }
    return out;
}

std::filesystem::path resolve_out_dir(const std::optional<std::string>& flag,
                                      const ExperimentSpec& spec) {
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv("SPS_OUT_DIR"); env && *env) return env;
    if (!spec.output.empty()) return spec.output;
    return "results";
}

}  // namespace sps::harness
