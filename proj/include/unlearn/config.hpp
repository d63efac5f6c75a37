#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "unlearn/attacks.hpp"
#include "unlearn/dataset.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/train.hpp"
#include "unlearn/unlearn.hpp"

namespace unlearn {

// Sectioned key-value text, '#' or ';' comments, '=' separator.
using IniData = std::map<std::string, std::map<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

inline IniData parse_ini(std::istream& in) {
    IniData data;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("unterminated section header at line " + std::to_string(lineno));
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key = value at line " + std::to_string(lineno));
        }
        data[section][detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return data;
}

inline IniData parse_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_ini(in);
}

struct DataSpec {
    std::string kind = "synthetic"; // synthetic | idx
    // synthetic
    int classes = 10;
    int per_class = 400;
    int dim = 196;
    double separation = 6.0;
    int test_per_class = 100;
    // idx
    std::string train_images, train_labels, test_images, test_labels;
};

struct TriggerConfig {
    bool enabled = false;
    std::size_t patch = 3;
    double value = 1.0;
    int target_label = 0;
};

struct ShadowSection {
    bool enabled = false;
    int n_shadow = 1;
    double in_fraction = 0.5;
    int feature_k = 3;
    TrainParams train;
};

struct SweepSection {
    std::string kind = "lambda"; // lambda | refsize
    std::vector<double> lambdas = {1.0, 0.1, 0.01, 0.001, 0.0001};
    std::vector<std::size_t> ref_sizes;
};

// Everything one experiment run needs; defaults mirror the library's
// documented defaults so a minimal config runs out of the box.
struct RunConfig {
    std::string out_dir = "runs/out";
    std::uint64_t master_seed = 42;
    std::string arch = "196-128-64-10";
    int jobs = 1;

    DataSpec data;
    SplitSpec split_spec;             // seed filled from master
    TrainParams target_train;         // M_initial
    TrainParams reference_train;      // reference model
    UnlearnConfig unlearn_cfg;        // seed filled from master
    TriggerConfig trigger;
    ShadowSection shadow;
    SweepSection sweep;

    std::uint64_t phase_seed(std::string_view phase) const {
        return derive_seed(master_seed, phase);
    }
};

namespace detail {

inline double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("value of '" + key + "' is not a number: '" + v + "'");
    }
}

inline long long to_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("value of '" + key + "' is not an integer: '" + v + "'");
    }
}

inline bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("value of '" + key + "' is not a boolean: '" + v + "'");
}

template <typename T, typename Fn>
void maybe(const IniData& ini, const std::string& section, const std::string& key, T& out, Fn conv) {
    const auto sit = ini.find(section);
    if (sit == ini.end()) return;
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return;
    out = conv(kit->second, section + "." + key);
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

inline void load_train_section(const IniData& ini, const std::string& section, TrainParams& p) {
    maybe(ini, section, "epochs", p.epochs,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
    maybe(ini, section, "learning_rate", p.learning_rate, to_double);
    maybe(ini, section, "momentum", p.momentum, to_double);
    maybe(ini, section, "batch", p.batch_size,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
}

} // namespace detail

inline RunConfig load_run_config(const IniData& ini) {
    using detail::maybe;
    using detail::to_bool;
    using detail::to_double;
    using detail::to_int;
    RunConfig cfg;

    maybe(ini, "run", "out_dir", cfg.out_dir, [](const std::string& v, const std::string&) { return v; });
    maybe(ini, "run", "master_seed", cfg.master_seed, [](const std::string& v, const std::string& k) {
        return static_cast<std::uint64_t>(to_int(v, k));
    });
    maybe(ini, "run", "arch", cfg.arch, [](const std::string& v, const std::string&) { return v; });
    maybe(ini, "run", "jobs", cfg.jobs,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });

    maybe(ini, "data", "kind", cfg.data.kind, [](const std::string& v, const std::string&) { return v; });
    maybe(ini, "data", "classes", cfg.data.classes,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
    maybe(ini, "data", "per_class", cfg.data.per_class,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
    maybe(ini, "data", "dim", cfg.data.dim,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
    maybe(ini, "data", "separation", cfg.data.separation, to_double);
    maybe(ini, "data", "test_per_class", cfg.data.test_per_class,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
    for (auto [key, field] : {std::pair{"train_images", &cfg.data.train_images},
                              {"train_labels", &cfg.data.train_labels},
                              {"test_images", &cfg.data.test_images},
                              {"test_labels", &cfg.data.test_labels}}) {
        maybe(ini, "data", key, *field, [](const std::string& v, const std::string&) { return v; });
    }

    maybe(ini, "split", "forget_fraction", cfg.split_spec.forget_fraction, to_double);
    maybe(ini, "split", "reference_fraction", cfg.split_spec.reference_fraction, to_double);
    maybe(ini, "split", "stratified", cfg.split_spec.stratified, to_bool);

    detail::load_train_section(ini, "train", cfg.target_train);
    detail::load_train_section(ini, "reference", cfg.reference_train);

    maybe(ini, "unlearn", "lambda", cfg.unlearn_cfg.lambda, to_double);
    maybe(ini, "unlearn", "max_iterations", cfg.unlearn_cfg.max_iterations,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
    maybe(ini, "unlearn", "learning_rate", cfg.unlearn_cfg.learning_rate, to_double);
    maybe(ini, "unlearn", "momentum", cfg.unlearn_cfg.momentum, to_double);
    maybe(ini, "unlearn", "forget_batch", cfg.unlearn_cfg.forget_batch,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
    maybe(ini, "unlearn", "remain_batch", cfg.unlearn_cfg.remain_batch,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
    maybe(ini, "unlearn", "stop_kl", cfg.unlearn_cfg.stop_kl, to_double);
    std::string pool = "reference_subset";
    maybe(ini, "unlearn", "ce_pool", pool, [](const std::string& v, const std::string&) { return v; });
    if (pool == "reference_subset") {
        cfg.unlearn_cfg.ce_pool = CePool::reference_subset;
    } else if (pool == "remain") {
        cfg.unlearn_cfg.ce_pool = CePool::remain;
    } else {
        throw ConfigError("unlearn.ce_pool must be 'reference_subset' or 'remain'");
    }

    maybe(ini, "trigger", "enabled", cfg.trigger.enabled, to_bool);
    maybe(ini, "trigger", "patch", cfg.trigger.patch, [](const std::string& v, const std::string& k) {
        return static_cast<std::size_t>(to_int(v, k));
    });
    maybe(ini, "trigger", "value", cfg.trigger.value, to_double);
    maybe(ini, "trigger", "target_label", cfg.trigger.target_label,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });

    maybe(ini, "shadow", "enabled", cfg.shadow.enabled, to_bool);
    maybe(ini, "shadow", "n_shadow", cfg.shadow.n_shadow,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
    maybe(ini, "shadow", "in_fraction", cfg.shadow.in_fraction, to_double);
    maybe(ini, "shadow", "feature_k", cfg.shadow.feature_k,
          [](const std::string& v, const std::string& k) { return static_cast<int>(to_int(v, k)); });
    detail::load_train_section(ini, "shadow", cfg.shadow.train);

    maybe(ini, "sweep", "kind", cfg.sweep.kind, [](const std::string& v, const std::string&) { return v; });
    const auto parse_doubles = [](const std::string& v, const std::string& k) {
        std::vector<double> out;
        for (const auto& item : detail::split_list(v)) out.push_back(detail::to_double(item, k));
        return out;
    };
    const auto parse_sizes = [](const std::string& v, const std::string& k) {
        std::vector<std::size_t> out;
        for (const auto& item : detail::split_list(v)) {
            out.push_back(static_cast<std::size_t>(detail::to_int(item, k)));
        }
        return out;
    };
    maybe(ini, "sweep", "lambdas", cfg.sweep.lambdas, parse_doubles);
    maybe(ini, "sweep", "ref_sizes", cfg.sweep.ref_sizes, parse_sizes);

    return cfg;
}

inline RunConfig load_run_config_file(const std::string& path) {
    return load_run_config(parse_ini_file(path));
}

// Semantic checks beyond parsing; referenced files must exist now.
inline void validate_run_config(const RunConfig& cfg) {
    parse_arch(cfg.arch);
    cfg.unlearn_cfg.validate();
    if (cfg.data.kind == "idx") {
        for (const auto& p : {cfg.data.train_images, cfg.data.train_labels, cfg.data.test_images,
                              cfg.data.test_labels}) {
            if (p.empty()) throw ConfigError("idx data requires all four file paths");
            if (!std::filesystem::exists(p)) throw ConfigError("data file does not exist: " + p);
        }
    } else if (cfg.data.kind == "synthetic") {
        if (cfg.data.classes < 2 || cfg.data.per_class < 1 || cfg.data.dim < 1) {
            throw ConfigError("synthetic data needs classes >= 2, per_class >= 1, dim >= 1");
        }
    } else {
        throw ConfigError("data.kind must be 'synthetic' or 'idx'");
    }
    if (cfg.split_spec.forget_fraction <= 0.0 || cfg.split_spec.forget_fraction >= 1.0 ||
        cfg.split_spec.reference_fraction <= 0.0 || cfg.split_spec.reference_fraction >= 1.0) {
        throw ConfigError("split fractions must lie in (0,1)");
    }
    if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
    if (cfg.sweep.kind != "lambda" && cfg.sweep.kind != "refsize") {
        throw ConfigError("sweep.kind must be 'lambda' or 'refsize'");
    }
}

// Canonical serialization of every non-derived field, hashed. Identical
// configs produce identical hashes regardless of the source file's layout.
inline std::string config_hash(const RunConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << cfg.master_seed << '|' << cfg.arch << '|' << cfg.data.kind << '|' << cfg.data.classes
       << '|' << cfg.data.per_class << '|' << cfg.data.dim << '|' << cfg.data.separation << '|'
       << cfg.data.test_per_class << '|' << cfg.data.train_images << '|' << cfg.data.train_labels
       << '|' << cfg.data.test_images << '|' << cfg.data.test_labels << '|'
       << cfg.split_spec.forget_fraction << '|' << cfg.split_spec.reference_fraction << '|'
       << cfg.split_spec.stratified << '|' << cfg.target_train.epochs << '|'
       << cfg.target_train.learning_rate << '|' << cfg.target_train.momentum << '|'
       << cfg.target_train.batch_size << '|' << cfg.reference_train.epochs << '|'
       << cfg.reference_train.learning_rate << '|' << cfg.reference_train.momentum << '|'
       << cfg.reference_train.batch_size << '|' << cfg.unlearn_cfg.lambda << '|'
       << cfg.unlearn_cfg.max_iterations << '|' << cfg.unlearn_cfg.learning_rate << '|'
       << cfg.unlearn_cfg.momentum << '|' << cfg.unlearn_cfg.forget_batch << '|'
       << cfg.unlearn_cfg.remain_batch << '|' << cfg.unlearn_cfg.stop_kl << '|'
       << static_cast<int>(cfg.unlearn_cfg.ce_pool) << '|' << cfg.trigger.enabled << '|'
       << cfg.trigger.patch << '|' << cfg.trigger.value << '|' << cfg.trigger.target_label << '|'
       << cfg.shadow.enabled << '|' << cfg.shadow.n_shadow << '|' << cfg.shadow.in_fraction << '|'
       << cfg.shadow.feature_k << '|' << cfg.shadow.train.epochs << '|'
       << cfg.shadow.train.learning_rate << '|' << cfg.shadow.train.momentum << '|'
       << cfg.shadow.train.batch_size << '|' << cfg.sweep.kind;
    for (double l : cfg.sweep.lambdas) os << '|' << l;
    for (std::size_t s : cfg.sweep.ref_sizes) os << '|' << s;
    const std::string canon = os.str();
    std::ostringstream hex;
    hex << std::hex << fnv1a(canon.data(), canon.size());
    return hex.str();
}

} // namespace unlearn
