#pragma once

// Experiment orchestration: analytic sweeps and Monte Carlo batches over a
// parameter grid, reduced to CSV rows.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sps/metrics.hpp"
#include "sps/simcore.hpp"

namespace sps::harness {

enum class ScenarioKind { FullyConnected, PartiallyConnected };
enum class Metric { Prr, Throughput };
/// Partially connected output: one row per distance bin, or one network
/// average (unweighted mean over bins) per grid point.
enum class CurveKind { Distance, Network };

struct ExperimentSpec {
    std::string name = "experiment";
    std::string figure;
    ScenarioKind scenario = ScenarioKind::FullyConnected;

    std::vector<double> p_keep{0.0};
    std::vector<int> n_subchannels{5};
    double tau = 10.0;
    double slot_ms = 1.0;

    // Fully connected grid.
    std::vector<std::size_t> n_sensed{100};
    // Partially connected grid.
    std::vector<double> rho_per_km{200.0};
    std::vector<double> sensing_range_km{0.4};
    std::vector<double> road_length_km{5.0};
    CurveKind curve = CurveKind::Distance;

    std::vector<Metric> metrics{Metric::Prr, Metric::Throughput};
    std::size_t trials = 40;
    double duration_s = 300.0;
    double warmup_s = 10.0;
    std::uint64_t base_seed = 1;
    double bin_width_m = 25.0;
    bool sensing_deafness = true;
    std::string output;  // directory; empty means default
};

/// Throws ConfigError unless every grid combination is a valid config and
/// scenario, trials >= 1 and duration >= warmup >= 0.
void validate(const ExperimentSpec& spec);

/// Parses the flat `key = value` format (lists comma separated, `#`
/// comments). Unknown keys and malformed values are ConfigErrors.
ExperimentSpec parse_spec(std::string_view text);
ExperimentSpec load_spec(const std::filesystem::path& path);

const std::vector<std::string>& figure_ids();
/// Built-in spec reproducing one figure; throws ConfigError for unknown ids.
ExperimentSpec figure_spec(std::string_view figure_id);

/// One CSV line. Optional numeric fields are written empty when absent.
struct CsvRow {
    std::string figure;
    std::string scenario;
    std::optional<double> p_k;
    std::optional<int> n_s;
    std::optional<double> tau;
    std::optional<std::size_t> n_sensed;
    std::optional<double> rho;
    std::optional<double> r_sen_km;
    std::optional<double> d_bin_m;
    std::string source;  // analytic | sim
    std::string metric;  // prr | throughput
    std::optional<double> mean;
    std::optional<double> ci95;
    std::optional<std::size_t> trials;
    std::string error;

    friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

extern const char* const kCsvHeader;

/// Numbers use 6 significant digits (printf %.6g); text fields are quoted
/// when they contain a comma, quote or newline.
std::string format_row(const CsvRow& row);
void write_csv(std::ostream& os, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(std::istream& is);
/// Value as it reads back after a round trip through the CSV.
double csv_rounded(double v);

struct RunOptions {
    bool simulate = true;  // false: analytic rows only
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<double> duration_s;
    bool strict_paper_mode = false;
    bool verbose = false;
};

/// Applies the overrides in `opts` to a spec.
ExperimentSpec with_overrides(ExperimentSpec spec, const RunOptions& opts);

struct ExperimentOutput {
    std::vector<CsvRow> rows;
    std::size_t errored_rows = 0;
    std::size_t overloaded_trials = 0;
};

/// Runs the grid: for each point, analytic rows then (if simulating) the
/// matching simulated rows. Model errors become rows with the error column
/// set rather than exceptions.
ExperimentOutput run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {});

/// Simulates `trials` trials of one grid point in parallel; results are
/// returned in trial-index order.
std::vector<metrics::TrialGroups> simulate_point(const sim::Scenario& scn, const SpsConfig& cfg,
                                                 const ExperimentSpec& spec, std::size_t jobs,
                                                 std::size_t* overloaded = nullptr);

/// Output directory: explicit flag, else $SPS_OUT_DIR, else spec.output,
/// else "results".
std::filesystem::path resolve_out_dir(const std::optional<std::string>& flag,
                                      const ExperimentSpec& spec);

}  // namespace sps::harness
