// spsbench: analytic curves, Monte Carlo batches and figure reproduction for
// NR-V2X Mode 2 SPS throughput.
//
// Exit codes: 0 success, 1 config error, 2 runtime/model error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sps/harness.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int write_and_report(const sps::harness::ExperimentSpec& spec,
                     const sps::harness::RunOptions& opts,
                     const std::optional<std::string>& out_flag) {
    const auto out = sps::harness::run_experiment(spec, opts);
    const auto dir = sps::harness::resolve_out_dir(out_flag, spec);
    std::filesystem::create_directories(dir);
    const auto path = dir / (spec.name + ".csv");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    sps::harness::write_csv(os, out.rows);
    os.close();
    if (!os) throw std::runtime_error("write failed: " + path.string());

    std::fprintf(stderr, "wrote %zu rows to %s\n", out.rows.size(), path.string().c_str());
    if (out.overloaded_trials > 0)
        std::fprintf(stderr, "warning: %zu trial(s) starved in more than half of their reselections\n",
                     out.overloaded_trials);
    if (out.errored_rows > 0) {
        std::fprintf(stderr, "error: %zu grid point(s) failed; see the error column\n", out.errored_rows);
        return kExitRuntime;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NR-V2X Mode 2 SPS throughput workbench"};
    app.require_subcommand(1);

    std::optional<std::string> out_dir;
    sps::harness::RunOptions opts;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<double> duration;
    app.add_option("--out", out_dir, "Output directory (overrides $SPS_OUT_DIR)");
    app.add_option("--seed", seed, "Base seed; trial i uses seed + i");
    app.add_option("--jobs", opts.jobs, "Parallel trials (0 = all cores)")->capture_default_str();
    app.add_option("--trials", trials, "Override the number of trials");
    app.add_option("--duration", duration, "Override the simulated duration (s)");
    app.add_flag("--strict-paper-mode", opts.strict_paper_mode,
                 "Let vehicles sense their own transmit slot");
    app.add_flag("-v,--verbose", opts.verbose, "Progress on stderr");

    std::string spec_path;
    auto* analytic = app.add_subcommand("analytic", "Analytic rows only");
    analytic->add_option("spec", spec_path, "Experiment spec file")->required();
    auto* simulate = app.add_subcommand("simulate", "Analytic and simulated rows");
    simulate->add_option("spec", spec_path, "Experiment spec file")->required();
    std::string figure;
    auto* reproduce = app.add_subcommand("reproduce", "Run the built-in spec of one figure");
    reproduce->add_option("figure", figure, "4a, 4b, 4c, 5a, 5b or 5c")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    opts.seed = seed;
    opts.trials = trials;
    opts.duration_s = duration;

    try {
        sps::harness::ExperimentSpec spec;
        if (*analytic) {
            spec = sps::harness::load_spec(spec_path);
            opts.simulate = false;
        } else if (*simulate) {
            spec = sps::harness::load_spec(spec_path);
        } else {
            spec = sps::harness::figure_spec(figure);
        }
        return write_and_report(spec, opts, out_dir);
    } catch (const sps::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
