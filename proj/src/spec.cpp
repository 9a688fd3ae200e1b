#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sps/harness.hpp"

namespace sps::harness {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

double to_double(const std::string& key, const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw ConfigError("'" + key + "': not a number: '" + s + "'");
    return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& s) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || s.front() == '-' || end != s.c_str() + s.size())
        throw ConfigError("'" + key + "': not a non-negative integer: '" + s + "'");
    return v;
}

template <class T, class F>
std::vector<T> parse_list(const std::string& key, const std::string& value, F convert) {
    std::vector<T> out;
    for (const auto& item : split_list(value)) out.push_back(convert(key, item));
    if (out.empty()) throw ConfigError("'" + key + "': empty list");
    return out;
}

bool to_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("'" + key + "': expected true or false, got '" + s + "'");
}

}  // namespace

void validate(const ExperimentSpec& spec) {
    if (spec.trials < 1) throw ConfigError("trials must be >= 1");
    if (!(spec.warmup_s >= 0.0) || !(spec.duration_s >= spec.warmup_s))
        throw ConfigError("need duration_s >= warmup_s >= 0");
    if (!(spec.bin_width_m > 0.0)) throw ConfigError("bin_width_m must be > 0");
    if (spec.p_keep.empty() || spec.n_subchannels.empty() || spec.metrics.empty())
        throw ConfigError("p_k, n_s and metrics need at least one value");

    for (const double p : spec.p_keep)
        for (const int ns : spec.n_subchannels) SpsConfig::make(p, ns, spec.slot_ms, spec.tau);

    if (spec.scenario == ScenarioKind::FullyConnected) {
        if (spec.n_sensed.empty()) throw ConfigError("n_sen needs at least one value");
        for (const auto n : spec.n_sensed) sim::validate(sim::FullyConnected{n + 1});
        return;
    }
    if (spec.rho_per_km.empty() || spec.sensing_range_km.empty() || spec.road_length_km.empty())
        throw ConfigError("rho, r_sen_km and road_length_km need at least one value");
    for (const double rho : spec.rho_per_km)
        for (const double r : spec.sensing_range_km) {
            PcnParams{rho, r}.n_sensed();
            for (const double len : spec.road_length_km)
                sim::validate(sim::PartiallyConnected{len, rho, r});
        }
}

ExperimentSpec parse_spec(std::string_view text) {
    ExperimentSpec spec;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));

        if (key == "name") spec.name = value;
        else if (key == "figure") spec.figure = value;
        else if (key == "scenario") {
            if (value == "fully_connected") spec.scenario = ScenarioKind::FullyConnected;
            else if (value == "partially_connected") spec.scenario = ScenarioKind::PartiallyConnected;
            else throw ConfigError("scenario must be fully_connected or partially_connected");
        } else if (key == "p_k") spec.p_keep = parse_list<double>(key, value, to_double);
        else if (key == "n_s")
            spec.n_subchannels = parse_list<int>(key, value, [](const std::string& k, const std::string& s) {
                return static_cast<int>(to_unsigned(k, s));
            });
        else if (key == "tau") spec.tau = to_double(key, value);
        else if (key == "t_s") spec.slot_ms = to_double(key, value);
        else if (key == "n_sen")
            spec.n_sensed = parse_list<std::size_t>(key, value, [](const std::string& k, const std::string& s) {
                return static_cast<std::size_t>(to_unsigned(k, s));
            });
        else if (key == "rho") spec.rho_per_km = parse_list<double>(key, value, to_double);
        else if (key == "r_sen_km") spec.sensing_range_km = parse_list<double>(key, value, to_double);
        else if (key == "road_length_km") spec.road_length_km = parse_list<double>(key, value, to_double);
        else if (key == "curve") {
            if (value == "distance") spec.curve = CurveKind::Distance;
            else if (value == "network") spec.curve = CurveKind::Network;
            else throw ConfigError("curve must be distance or network");
        } else if (key == "metrics") {
            spec.metrics = parse_list<Metric>(key, value, [](const std::string& k, const std::string& s) {
                if (s == "prr") return Metric::Prr;
                if (s == "throughput") return Metric::Throughput;
                throw ConfigError("'" + k + "': unknown metric '" + s + "'");
            });
        } else if (key == "trials") spec.trials = to_unsigned(key, value);
        else if (key == "duration_s") spec.duration_s = to_double(key, value);
        else if (key == "warmup_s") spec.warmup_s = to_double(key, value);
        else if (key == "base_seed") spec.base_seed = to_unsigned(key, value);
        else if (key == "bin_width_m") spec.bin_width_m = to_double(key, value);
        else if (key == "sensing_deafness") spec.sensing_deafness = to_bool(key, value);
        else if (key == "output") spec.output = value;
        else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    validate(spec);
    return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read spec file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"4a", "4b", "4c", "5a", "5b", "5c"};
    return ids;
}

ExperimentSpec figure_spec(std::string_view id) {
    ExperimentSpec s;
    s.figure = std::string(id);
    s.name = "fig" + s.figure;
    s.tau = 10.0;
    s.slot_ms = 1.0;
    s.trials = 40;
    s.warmup_s = 10.0;
    s.bin_width_m = 25.0;

    if (id == "4a" || id == "4b" || id == "4c") {
        s.scenario = ScenarioKind::FullyConnected;
        s.duration_s = 300.0;
        s.n_subchannels = {5};
        s.p_keep = {0.0, 0.8};
        s.n_sensed = {100, 200, 300, 400};
        s.metrics = {Metric::Throughput};
        if (id == "4b") {
            s.p_keep = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
            s.metrics = {Metric::Prr};
        } else if (id == "4c") {
            s.n_subchannels = {5, 10, 15};
            s.n_sensed = {50, 100, 200, 400};
        }
    } else if (id == "5a" || id == "5b" || id == "5c") {
        s.scenario = ScenarioKind::PartiallyConnected;
        s.duration_s = 500.0;
        s.rho_per_km = {200.0};
        s.sensing_range_km = {0.4};
        s.road_length_km = {5.0};
        s.metrics = {Metric::Throughput};
        s.curve = CurveKind::Distance;
        s.p_keep = {0.0, 0.8};
        s.n_subchannels = {5};
        if (id == "5b") {
            s.p_keep = {0.0};
            s.n_subchannels = {5, 10, 15};
        } else if (id == "5c") {
            s.n_subchannels = {5, 10, 15};
            s.curve = CurveKind::Network;
        }
    } else {
        std::string valid;
        for (const auto& f : figure_ids()) valid += (valid.empty() ? "" : ", ") + f;
        throw ConfigError("unknown figure id '" + std::string(id) + "'; valid ids: " + valid);
    }
    return s;
}

}  // namespace sps::harness
