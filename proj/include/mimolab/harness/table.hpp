#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "../errors.hpp"

namespace mimolab::harness {

inline constexpr const char* csv_header = "x,method,y,stderr,n,seed,k,l,rho,snr_db,sigma2_convention";

struct result_row {
    double x = 0.0;
    std::string method;
    double y = 0.0;
    double stderr_ = 0.0;
    long long n = 0;
    std::uint64_t seed = 0;
    int k = 0;
    int l = 0;
    double rho = 0.0;
    double snr_db = 0.0;
    std::string sigma2_convention;
    std::map<std::string, std::string> meta;  // goes to the sidecar, not the CSV
    bool failed = false;
};

using result_table = std::vector<result_row>;

inline void sort_rows(result_table& t) {
    std::stable_sort(t.begin(), t.end(), [](const result_row& a, const result_row& b) {
        return std::tie(a.x, a.method, a.rho, a.snr_db) < std::tie(b.x, b.method, b.rho, b.snr_db);
    });
}

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string to_csv(const result_table& t) {
    std::ostringstream os;
    os << csv_header << '\n';
    for (const auto& r : t) {
        os << format_number(r.x) << ',' << r.method << ',' << format_number(r.y) << ',' << format_number(r.stderr_) << ','
           << r.n << ',' << r.seed << ',' << r.k << ',' << r.l << ',' << format_number(r.rho) << ','
           << format_number(r.snr_db) << ',' << r.sigma2_convention << '\n';
    }
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw config_error("write failed for '" + path + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            f.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    f.push_back(cur);
    return f;
}

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
}

}  // namespace detail

// Reads a table written by to_csv. Sidecar metadata is not restored.
inline result_table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw config_error("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != csv_header) throw config_error("'" + path + "' does not have the expected header");
    result_table t;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 11) throw config_error("'" + path + "' line " + std::to_string(lineno) + ": expected 11 fields");
        try {
            result_row r;
            r.x = detail::parse_double(f[0]);
            r.method = f[1];
            r.y = detail::parse_double(f[2]);
            r.stderr_ = detail::parse_double(f[3]);
            r.n = std::stoll(f[4]);
            r.seed = std::stoull(f[5]);
            r.k = std::stoi(f[6]);
            r.l = std::stoi(f[7]);
            r.rho = detail::parse_double(f[8]);
            r.snr_db = detail::parse_double(f[9]);
            r.sigma2_convention = f[10];
            r.failed = std::isnan(r.y);
            t.push_back(std::move(r));
        } catch (const std::exception&) {
            throw config_error("'" + path + "' line " + std::to_string(lineno) + ": malformed field");
        }
    }
    return t;
}

}  // namespace mimolab::harness
