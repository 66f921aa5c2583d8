#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../errors.hpp"

namespace mimolab::harness {

enum class experiment_kind { entropy_vs_snr, entropy_vs_rho, ber_vs_snr, ber_vs_rho, selftest };

inline const std::vector<std::pair<experiment_kind, std::string>>& experiment_names() {
    static const std::vector<std::pair<experiment_kind, std::string>> names = {
        {experiment_kind::entropy_vs_snr, "entropy_vs_snr"},
        {experiment_kind::entropy_vs_rho, "entropy_vs_rho"},
        {experiment_kind::ber_vs_snr, "ber_vs_snr"},
        {experiment_kind::ber_vs_rho, "ber_vs_rho"},
        {experiment_kind::selftest, "selftest"}};
    return names;
}

inline std::string to_string(experiment_kind e) {
    for (const auto& [k, v] : experiment_names())
        if (k == e) return v;
    return "unknown";
}

inline experiment_kind parse_experiment(const std::string& s) {
    for (const auto& [k, v] : experiment_names())
        if (v == s) return k;
    throw config_error("unknown experiment '" + s + "'");
}

inline bool is_entropy(experiment_kind e) { return e == experiment_kind::entropy_vs_snr || e == experiment_kind::entropy_vs_rho; }
inline bool is_ber(experiment_kind e) { return e == experiment_kind::ber_vs_snr || e == experiment_kind::ber_vs_rho; }
inline bool sweeps_snr(experiment_kind e) { return e == experiment_kind::entropy_vs_snr || e == experiment_kind::ber_vs_snr; }

inline const std::vector<std::string>& entropy_methods() {
    static const std::vector<std::string> m = {"exact_mc", "matrix_integration", "perturbative", "identity"};
    return m;
}

inline const std::vector<std::string>& ber_methods() {
    static const std::vector<std::string> m = {"population_dynamics", "matrix_integration", "identity", "demod_sim"};
    return m;
}

// Grid written either as "a:b:step" (inclusive), a single number, or a list.
inline std::vector<double> parse_sweep(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == ':') {
            parts.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    std::vector<double> v;
    try {
        for (const auto& p : parts) {
            std::size_t used = 0;
            v.push_back(std::stod(p, &used));
            if (used != p.size()) throw config_error("trailing characters");
        }
    } catch (const std::exception&) {
        throw config_error("malformed sweep '" + text + "', expected a:b:step");
    }
    if (v.size() == 1) return v;
    if (v.size() != 3) throw config_error("malformed sweep '" + text + "', expected a:b:step");
    const double a = v[0], b = v[1], step = v[2];
    if (!(step > 0.0) || !(b >= a)) throw config_error("sweep '" + text + "' must have a <= b and step > 0");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    if (n > 100000) throw config_error("sweep '" + text + "' has too many points");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::round((a + static_cast<double>(i) * step) * 1e12) / 1e12;
    return out;
}

inline void check_monotone(const std::vector<double>& v, const std::string& key) {
    if (v.empty()) throw config_error(key + ": empty grid");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) throw config_error(key + ": grid must be strictly increasing");
    for (double x : v)
        if (!std::isfinite(x)) throw config_error(key + ": non-finite value");
}

struct experiment_config {
    experiment_kind experiment = experiment_kind::ber_vs_snr;
    int K = 440;
    int L = 400;
    std::vector<double> rho{0.2};
    std::vector<double> snr_db{0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
    int trials = 128;
    std::uint64_t seed = 1;
    std::vector<std::string> methods;  // empty: every method of the experiment
    std::string output_dir = "out";

    double beta() const { return static_cast<double>(K) / static_cast<double>(L); }
    const std::vector<double>& x_grid() const { return sweeps_snr(experiment) ? snr_db : rho; }
    const std::vector<double>& curve_grid() const { return sweeps_snr(experiment) ? rho : snr_db; }

    std::vector<std::string> effective_methods() const {
        if (!methods.empty()) return methods;
        return is_entropy(experiment) ? entropy_methods() : ber_methods();
    }
};

namespace detail {

inline std::vector<double> grid_from_json(const nlohmann::json& j, const std::string& key) {
    if (j.is_number()) return {j.get<double>()};
    if (j.is_string()) return parse_sweep(j.get<std::string>());
    if (j.is_array()) {
        std::vector<double> v;
        for (const auto& e : j) {
            if (!e.is_number()) throw config_error(key + ": list entries must be numbers");
            v.push_back(e.get<double>());
        }
        return v;
    }
    throw config_error(key + ": expected a number, a list or \"a:b:step\"");
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error(key + ": wrong type");
    }
}

}  // namespace detail

inline void validate(const experiment_config& c) {
    if (c.K < 2) throw config_error("K must be >= 2");
    if (c.L < 1) throw config_error("L must be >= 1");
    if (c.trials < 1) throw config_error("trials must be >= 1");
    check_monotone(c.rho, "rho");
    check_monotone(c.snr_db, "snr_db");
    for (double r : c.rho)
        if (std::abs(r) > 0.5) throw config_error("rho must satisfy |rho| <= 0.5");
    if (c.experiment == experiment_kind::selftest) return;
    const auto& allowed = is_entropy(c.experiment) ? entropy_methods() : ber_methods();
    std::vector<std::string> seen;
    for (const auto& m : c.effective_methods()) {
        if (std::find(allowed.begin(), allowed.end(), m) == allowed.end())
            throw config_error("method '" + m + "' is not available for " + to_string(c.experiment));
        if (std::find(seen.begin(), seen.end(), m) != seen.end()) throw config_error("method '" + m + "' listed twice");
        seen.push_back(m);
    }
    const auto em = c.effective_methods();
    if (is_entropy(c.experiment) && std::find(em.begin(), em.end(), "exact_mc") != em.end() && c.trials < 100)
        throw config_error("exact_mc needs trials >= 100 disorder samples");
    if (c.output_dir.empty()) throw config_error("output_dir must not be empty");
}

// Flat JSON object whose keys are the experiment_config field names.
inline experiment_config config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("config must be a JSON object");
    experiment_config c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const auto& v = it.value();
        if (k == "experiment") c.experiment = parse_experiment(detail::get_as<std::string>(v, k));
        else if (k == "K") c.K = detail::get_as<int>(v, k);
        else if (k == "L") c.L = detail::get_as<int>(v, k);
        else if (k == "rho") c.rho = detail::grid_from_json(v, k);
        else if (k == "snr_db") c.snr_db = detail::grid_from_json(v, k);
        else if (k == "trials") c.trials = detail::get_as<int>(v, k);
        else if (k == "seed") c.seed = detail::get_as<std::uint64_t>(v, k);
        else if (k == "methods") c.methods = detail::get_as<std::vector<std::string>>(v, k);
        else if (k == "output_dir") c.output_dir = detail::get_as<std::string>(v, k);
        else throw config_error("unknown config key '" + k + "'");
    }
    return c;
}

inline experiment_config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

inline nlohmann::json to_json(const experiment_config& c) {
    nlohmann::json j;
    j["experiment"] = to_string(c.experiment);
    j["K"] = c.K;
    j["L"] = c.L;
    j["rho"] = c.rho;
    j["snr_db"] = c.snr_db;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["methods"] = c.effective_methods();
    j["output_dir"] = c.output_dir;
    return j;
}

}  // namespace mimolab::harness
