#pragma once

// Plain-text run configuration: one `key = value` per line, `#` starts a
// comment. Unknown keys are rejected. Precedence is command line > file >
// built-in default; every key and its default is listed by config_keys().

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sethash/error.hpp"
#include "sethash/eval.hpp"
#include "sethash/trainer.hpp"

namespace sethash {

struct RunConfig {
    TrainerConfig trainer;
    double split_fraction = 0.5;
    bool stratified = true;
    int threads = 0;
    std::string kernel_cache;
    EvalConfig eval;
};

namespace detail {

inline std::string trim(std::string s) {
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && ws(s[i])) ++i;
    return s.substr(i);
}

template <class T>
T parse_value(const std::string& key, const std::string& v) {
    T out{};
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    require(res.ec == std::errc() && res.ptr == v.data() + v.size(), ErrorCode::invalid_argument,
            "config key '" + key + "': cannot parse '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorCode::invalid_argument, "config key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_value<int>(key, item));
    }
    return out;
}

inline std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

inline std::string num(double v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
}

} // namespace detail

struct ConfigKey {
    const char* name;
    const char* doc;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<ConfigKey>& config_keys() {
    using detail::num;
    using detail::parse_value;
    static const std::vector<ConfigKey> keys = {
        {"bits", "code length R", [](RunConfig& c, const std::string& v) { c.trainer.bits = parse_value<int>("bits", v); },
         [](const RunConfig& c) { return std::to_string(c.trainer.bits); }},
        {"rounds", "boosting rounds T per split",
         [](RunConfig& c, const std::string& v) { c.trainer.rounds = parse_value<int>("rounds", v); },
         [](const RunConfig& c) { return std::to_string(c.trainer.rounds); }},
        {"alpha", "weight of D_s in the joint refinement",
         [](RunConfig& c, const std::string& v) { c.trainer.alpha = parse_value<double>("alpha", v); },
         [](const RunConfig& c) { return num(c.trainer.alpha); }},
        {"beta", "weight of D_c in the joint refinement",
         [](RunConfig& c, const std::string& v) { c.trainer.beta = parse_value<double>("beta", v); },
         [](const RunConfig& c) { return num(c.trainer.beta); }},
        {"nu1", "L1 penalty on learner weights during selection (0 = off)",
         [](RunConfig& c, const std::string& v) { c.trainer.nu1 = parse_value<double>("nu1", v); },
         [](const RunConfig& c) { return num(c.trainer.nu1); }},
        {"nu2", "relative penalty of database-side learners",
         [](RunConfig& c, const std::string& v) { c.trainer.nu2 = parse_value<double>("nu2", v); },
         [](const RunConfig& c) { return num(c.trainer.nu2); }},
        {"nu3", "inter-label weight in D_s, or auto (pair-count ratio)",
         [](RunConfig& c, const std::string& v) {
             if (v == "auto") c.trainer.nu3.reset();
             else c.trainer.nu3 = parse_value<double>("nu3", v);
         },
         [](const RunConfig& c) { return c.trainer.nu3 ? num(*c.trainer.nu3) : std::string("auto"); }},
        {"nu4", "inter-label weight in D_c, or auto (pair-count ratio)",
         [](RunConfig& c, const std::string& v) {
             if (v == "auto") c.trainer.nu4.reset();
             else c.trainer.nu4 = parse_value<double>("nu4", v);
         },
         [](const RunConfig& c) { return c.trainer.nu4 ? num(*c.trainer.nu4) : std::string("auto"); }},
        {"max_outer", "outer iteration cap",
         [](RunConfig& c, const std::string& v) { c.trainer.max_outer = parse_value<int>("max_outer", v); },
         [](const RunConfig& c) { return std::to_string(c.trainer.max_outer); }},
        {"conv_tol", "stop when this fraction of training bits or fewer change",
         [](RunConfig& c, const std::string& v) { c.trainer.conv_tol = parse_value<double>("conv_tol", v); },
         [](const RunConfig& c) { return num(c.trainer.conv_tol); }},
        {"balance_tol", "allowed deviation of bit/sample balance from 0.5",
         [](RunConfig& c, const std::string& v) { c.trainer.balance_tol = parse_value<double>("balance_tol", v); },
         [](const RunConfig& c) { return num(c.trainer.balance_tol); }},
        {"max_sweeps", "bit-flip sweeps per descent call",
         [](RunConfig& c, const std::string& v) { c.trainer.max_sweeps = parse_value<int>("max_sweeps", v); },
         [](const RunConfig& c) { return std::to_string(c.trainer.max_sweeps); }},
        {"pool_cap", "maximum weak-learner pool size",
         [](RunConfig& c, const std::string& v) { c.trainer.pool_cap = parse_value<std::size_t>("pool_cap", v); },
         [](const RunConfig& c) { return std::to_string(c.trainer.pool_cap); }},
        {"seed", "master random seed",
         [](RunConfig& c, const std::string& v) { c.trainer.seed = parse_value<std::uint64_t>("seed", v); },
         [](const RunConfig& c) { return std::to_string(c.trainer.seed); }},
        {"mu", "affinity threshold (0 = per-set median distance)",
         [](RunConfig& c, const std::string& v) { c.trainer.kernel.mu = parse_value<double>("mu", v); },
         [](const RunConfig& c) { return num(c.trainer.kernel.mu); }},
        {"gamma_g", "structural bandwidth (0 = 1/(2 m^2) from data)",
         [](RunConfig& c, const std::string& v) { c.trainer.kernel.gamma_g = parse_value<double>("gamma_g", v); },
         [](const RunConfig& c) { return num(c.trainer.kernel.gamma_g); }},
        {"gamma_s", "statistical bandwidth (0 = mean log-Euclidean distance)",
         [](RunConfig& c, const std::string& v) { c.trainer.kernel.gamma_s = parse_value<double>("gamma_s", v); },
         [](const RunConfig& c) { return num(c.trainer.kernel.gamma_s); }},
        {"cov_ridge", "covariance ridge, relative to trace/d",
         [](RunConfig& c, const std::string& v) { c.trainer.kernel.cov_ridge = parse_value<double>("cov_ridge", v); },
         [](const RunConfig& c) { return num(c.trainer.kernel.cov_ridge); }},
        {"split_fraction", "share of training sets on the query side",
         [](RunConfig& c, const std::string& v) { c.split_fraction = parse_value<double>("split_fraction", v); },
         [](const RunConfig& c) { return num(c.split_fraction); }},
        {"stratified", "stratify the q/r split by label",
         [](RunConfig& c, const std::string& v) { c.stratified = detail::parse_bool("stratified", v); },
         [](const RunConfig& c) { return std::string(c.stratified ? "true" : "false"); }},
        {"threads", "worker threads (0 = SETHASH_THREADS or hardware)",
         [](RunConfig& c, const std::string& v) { c.threads = parse_value<int>("threads", v); },
         [](const RunConfig& c) { return std::to_string(c.threads); }},
        {"kernel_cache", "directory for cached kernel matrices (empty = off)",
         [](RunConfig& c, const std::string& v) { c.kernel_cache = v; },
         [](const RunConfig& c) { return c.kernel_cache; }},
        {"cutoffs", "precision/recall cutoffs",
         [](RunConfig& c, const std::string& v) { c.eval.cutoffs = detail::parse_int_list("cutoffs", v); },
         [](const RunConfig& c) { return detail::join(c.eval.cutoffs); }},
        {"radii", "Hamming radii for lookup precision",
         [](RunConfig& c, const std::string& v) { c.eval.radii = detail::parse_int_list("radii", v); },
         [](const RunConfig& c) { return detail::join(c.eval.radii); }},
        {"skip_empty_buckets", "leave queries with empty radius buckets out instead of scoring 0",
         [](RunConfig& c, const std::string& v) { c.eval.skip_empty_buckets = detail::parse_bool("skip_empty_buckets", v); },
         [](const RunConfig& c) { return std::string(c.eval.skip_empty_buckets ? "true" : "false"); }},
    };
    return keys;
}

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : config_keys())
        if (key == k.name) {
            k.set(cfg, detail::trim(value));
            return;
        }
    fail(ErrorCode::invalid_argument, "unknown config key '" + key + "'");
}

/// Applies a `key=value` assignment.
inline void apply_assignment(RunConfig& cfg, const std::string& assignment) {
    auto eq = assignment.find('=');
    require(eq != std::string::npos, ErrorCode::invalid_argument, "expected key=value, got '" + assignment + "'");
    apply_setting(cfg, detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

inline void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& origin = "<config>") {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        try {
            apply_assignment(cfg, line);
        } catch (const Error& e) {
            fail(e.code(), origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::missing_file, "cannot open config " + path);
    apply_config_text(cfg, in, path);
}

/// Defaults, then the file (if any), then command-line assignments in order.
inline RunConfig resolve_config(const std::string& file, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!file.empty()) apply_config_file(cfg, file);
    for (const auto& o : overrides) apply_assignment(cfg, o);
    cfg.trainer.validate();
    require(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0, ErrorCode::invalid_argument,
            "split_fraction must lie in (0,1)");
    return cfg;
}

inline std::string describe_config(const RunConfig& cfg) {
    std::ostringstream out;
    for (const auto& k : config_keys()) out << "# " << k.doc << '\n' << k.name << " = " << k.get(cfg) << '\n';
    return out.str();
}

} // namespace sethash
