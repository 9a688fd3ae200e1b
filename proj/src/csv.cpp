#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "sps/harness.hpp"

namespace sps::harness {

const char* const kCsvHeader =
    "figure,scenario,p_k,n_s,tau,N_sen,rho,R_sen,d_bin_m,source,metric,mean,ci95,trials,error";

namespace {

constexpr std::size_t kColumns = 15;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

template <class T>
std::string opt(const std::optional<T>& v) {
    if (!v) return {};
    if constexpr (std::is_floating_point_v<T>) return num(*v);
    else return std::to_string(*v);
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

// Splits one record; handles quoted fields with doubled quotes. Reads
// further lines from `is` when a quoted field spans a newline.
std::vector<std::string> split_record(std::string line, std::istream& is) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0;; ++i) {
        if (i == line.size()) {
            if (quoted) {
                std::string more;
                if (!std::getline(is, more)) throw ConfigError("unterminated quoted CSV field");
                field += '\n';
                line = more;
                i = static_cast<std::size_t>(-1);
                continue;
            }
            break;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::optional<double> read_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw ConfigError("bad CSV number '" + s + "'");
    return v;
}

template <class T>
std::optional<T> read_integer(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size()) throw ConfigError("bad CSV integer '" + s + "'");
    return static_cast<T>(v);
}

}  // namespace

double csv_rounded(double v) { return std::strtod(num(v).c_str(), nullptr); }

std::string format_row(const CsvRow& r) {
    const std::string fields[kColumns] = {
        quote(r.figure), quote(r.scenario), opt(r.p_k),      opt(r.n_s),       opt(r.tau),
        opt(r.n_sensed), opt(r.rho),        opt(r.r_sen_km), opt(r.d_bin_m),   quote(r.source),
        quote(r.metric), opt(r.mean),       opt(r.ci95),     opt(r.trials),    quote(r.error)};
    std::string line;
    for (std::size_t i = 0; i < kColumns; ++i) {
        if (i) line += ',';
        line += fields[i];
    }
    return line;
}

void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) os << format_row(r) << '\n';
}

std::vector<CsvRow> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw ConfigError("unexpected CSV header: " + line);

    std::vector<CsvRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_record(line, is);
        if (f.size() != kColumns)
            throw ConfigError("CSV record has " + std::to_string(f.size()) + " fields, expected " +
                              std::to_string(kColumns));
        CsvRow r;
        r.figure = f[0];
        r.scenario = f[1];
        r.p_k = read_double(f[2]);
        r.n_s = read_integer<int>(f[3]);
        r.tau = read_double(f[4]);
        r.n_sensed = read_integer<std::size_t>(f[5]);
        r.rho = read_double(f[6]);
        r.r_sen_km = read_double(f[7]);
        r.d_bin_m = read_double(f[8]);
        r.source = f[9];
        r.metric = f[10];
        r.mean = read_double(f[11]);
        r.ci95 = read_double(f[12]);
        r.trials = read_integer<std::size_t>(f[13]);
        r.error = f[14];
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace sps::harness
