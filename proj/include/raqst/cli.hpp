// cli.hpp: run configuration (key = value files plus flag overrides) and the
// orchestration behind the raqst command-line tool.

#pragma once

#include "raqst/errors.hpp"
#include "raqst/reporting.hpp"
#include "raqst/serialization.hpp"
#include "raqst/simulator.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace raqst {

inline constexpr const char* kVersion = "0.1.0";

enum class Experiment { Single, SweepN, SweepPurity, Histogram };

inline std::string to_string(Experiment e) {
    switch (e) {
    case Experiment::Single: return "single";
    case Experiment::SweepN: return "sweep_n";
    case Experiment::SweepPurity: return "sweep_purity";
    case Experiment::Histogram: return "histogram";
    }
    return "?";
}

struct StateSpec {
    enum class Kind { Singlet, MaximallyMixed, Werner, RandomPure, RandomMes };
    Kind kind = Kind::Singlet;
    double werner_p = 1.0;
};

inline std::string to_string(const StateSpec& s) {
    switch (s.kind) {
    case StateSpec::Kind::Singlet: return "singlet";
    case StateSpec::Kind::MaximallyMixed: return "maximally_mixed";
    case StateSpec::Kind::Werner: return "werner(" + format_double(s.werner_p) + ")";
    case StateSpec::Kind::RandomPure: return "random_pure";
    case StateSpec::Kind::RandomMes: return "random_mes";
    }
    return "?";
}

enum class StateClass { Mes, Pure };

inline std::string to_string(StateClass c) { return c == StateClass::Mes ? "mes" : "pure"; }

// Half-decade points 10^2.5 ... 10^4.5.
inline std::vector<std::int64_t> default_n_grid() { return {316, 1000, 3162, 10000, 31623}; }

inline std::vector<double> default_werner_grid() { return {0.2, 0.3, 0.4, 0.6, 0.8, 0.9, 0.95, 0.98, 1.0}; }

struct RunConfig {
    Experiment experiment = Experiment::Single;
    std::vector<ProtocolKind> protocols;
    std::vector<std::int64_t> n_list;
    int reps = 0;
    StateSpec state;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "raqst_out";
    int workers = 1;
    std::vector<double> werner_p;      // sweep_purity
    int n_states = 20;                 // histogram, per state class
    std::vector<StateClass> state_classes = {StateClass::Mes, StateClass::Pure};
    ProtocolKind adaptive_protocol = ProtocolKind::Raqst2; // histogram
};

// Key = value pairs in file order; `line` is 0 for flag overrides.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(std::string v) {
    v = trim(v);
    if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
    std::vector<std::string> items;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

inline double to_number(const std::string& v, const ConfigEntry& e) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(e.key + ": '" + v + "' is not a number", e.line);
    }
    if (used != v.size() || !std::isfinite(x)) throw ConfigError(e.key + ": '" + v + "' is not a number", e.line);
    return x;
}

// Accepts 1000, 1e4, ...; rejects fractional values.
inline std::int64_t to_integer(const std::string& v, const ConfigEntry& e) {
    const double x = to_number(v, e);
    if (x != std::floor(x) || std::abs(x) > 9.0e15) throw ConfigError(e.key + ": '" + v + "' is not an integer", e.line);
    return static_cast<std::int64_t>(x);
}

inline StateSpec parse_state(const std::string& v, const ConfigEntry& e) {
    StateSpec s;
    if (v == "singlet") s.kind = StateSpec::Kind::Singlet;
    else if (v == "maximally_mixed") s.kind = StateSpec::Kind::MaximallyMixed;
    else if (v == "random_pure") s.kind = StateSpec::Kind::RandomPure;
    else if (v == "random_mes") s.kind = StateSpec::Kind::RandomMes;
    else if (v.rfind("werner(", 0) == 0 && v.back() == ')') {
        s.kind = StateSpec::Kind::Werner;
        s.werner_p = to_number(trim(v.substr(7, v.size() - 8)), e);
        if (!(s.werner_p >= 0.0 && s.werner_p <= 1.0)) throw ConfigError("state: werner p must lie in [0, 1]", e.line);
    } else {
        throw ConfigError("state: unknown state '" + v +
                              "' (singlet, maximally_mixed, werner(p), random_pure, random_mes)",
                          e.line);
    }
    return s;
}

} // namespace detail

// Splits "key = value" lines; '#' starts a comment.
inline std::vector<ConfigEntry> parse_config_text(const std::string& text) {
    std::vector<ConfigEntry> entries;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
        ConfigEntry e{detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), lineno};
        if (e.key.empty()) throw ConfigError("empty key", lineno);
        if (e.value.empty()) throw ConfigError(e.key + ": empty value", lineno);
        entries.push_back(std::move(e));
    }
    return entries;
}

inline std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

// Applies entries in order (later wins), fills experiment-specific defaults
// and validates. Flag overrides are simply appended after the file entries.
inline RunConfig build_config(const std::vector<ConfigEntry>& entries) {
    RunConfig cfg;
    std::set<std::string> seen_in_file;
    std::optional<int> reps;
    bool have_protocols = false;
    bool have_n_list = false;
    bool have_werner = false;

    for (const auto& e : entries) {
        std::string key = e.key;
        if (key == "protocol") key = "protocols";
        if (key == "n") key = "n_list";
        if (e.line > 0 && !seen_in_file.insert(key).second) throw ConfigError("duplicate key " + e.key, e.line);
        const std::string& v = e.value;

        if (key == "experiment") {
            if (v == "single") cfg.experiment = Experiment::Single;
            else if (v == "sweep_n") cfg.experiment = Experiment::SweepN;
            else if (v == "sweep_purity") cfg.experiment = Experiment::SweepPurity;
            else if (v == "histogram") cfg.experiment = Experiment::Histogram;
            else throw ConfigError("experiment: unknown value '" + v + "'", e.line);
        } else if (key == "protocols") {
            cfg.protocols.clear();
            for (const auto& name : detail::split_list(v)) {
                try {
                    cfg.protocols.push_back(parse_protocol(name));
                } catch (const std::invalid_argument& ex) {
                    throw ConfigError(std::string("protocols: ") + ex.what(), e.line);
                }
            }
            have_protocols = true;
        } else if (key == "n_list") {
            cfg.n_list.clear();
            for (const auto& item : detail::split_list(v)) cfg.n_list.push_back(detail::to_integer(item, e));
            have_n_list = true;
        } else if (key == "reps") {
            reps = static_cast<int>(detail::to_integer(v, e));
        } else if (key == "state") {
            cfg.state = detail::parse_state(v, e);
        } else if (key == "seed") {
            const auto s = detail::to_integer(v, e);
            if (s < 0) throw ConfigError("seed must be non-negative", e.line);
            cfg.seed = static_cast<std::uint64_t>(s);
        } else if (key == "out_dir") {
            cfg.out_dir = v;
        } else if (key == "workers") {
            cfg.workers = static_cast<int>(detail::to_integer(v, e));
        } else if (key == "werner_p") {
            cfg.werner_p.clear();
            for (const auto& item : detail::split_list(v)) cfg.werner_p.push_back(detail::to_number(item, e));
            have_werner = true;
        } else if (key == "n_states") {
            cfg.n_states = static_cast<int>(detail::to_integer(v, e));
        } else if (key == "state_classes") {
            cfg.state_classes.clear();
            for (const auto& item : detail::split_list(v)) {
                if (item == "mes") cfg.state_classes.push_back(StateClass::Mes);
                else if (item == "pure") cfg.state_classes.push_back(StateClass::Pure);
                else throw ConfigError("state_classes: unknown class '" + item + "' (mes, pure)", e.line);
            }
        } else if (key == "adaptive_protocol") {
            try {
                cfg.adaptive_protocol = parse_protocol(v);
            } catch (const std::invalid_argument& ex) {
                throw ConfigError(std::string("adaptive_protocol: ") + ex.what(), e.line);
            }
        } else {
            throw ConfigError("unknown key '" + e.key + "'", e.line);
        }
    }

    const bool sweep = cfg.experiment != Experiment::Single;
    if (!have_protocols) {
        if (cfg.experiment == Experiment::Single) cfg.protocols = {ProtocolKind::Cube};
        else cfg.protocols = all_protocols();
    }
    if (!have_n_list) {
        if (cfg.experiment == Experiment::SweepN) cfg.n_list = default_n_grid();
        else if (cfg.experiment == Experiment::Single) cfg.n_list = {1000};
        else cfg.n_list = {10000};
    }
    if (!have_werner) cfg.werner_p = default_werner_grid();
    cfg.reps = reps.value_or(sweep ? 20 : 1);

    if (cfg.protocols.empty()) throw ConfigError("protocols: empty list");
    if (cfg.n_list.empty()) throw ConfigError("n_list: empty list");
    for (auto n : cfg.n_list)
        if (n < 100) throw ConfigError("n_list: every N must be >= 100 (got " + std::to_string(n) + ")");
    if (cfg.reps < 1) throw ConfigError("reps must be >= 1");
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    if (cfg.experiment == Experiment::SweepPurity) {
        if (cfg.werner_p.empty()) throw ConfigError("werner_p: empty list");
        for (double p : cfg.werner_p)
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("werner_p: values must lie in [0, 1]");
    }
    if (cfg.experiment == Experiment::Histogram) {
        if (cfg.n_states < 1) throw ConfigError("n_states must be >= 1");
        if (cfg.state_classes.empty()) throw ConfigError("state_classes: empty list");
        if (cfg.n_list.size() != 1) throw ConfigError("histogram: n_list must hold exactly one N");
    }
    return cfg;
}

// Key = value text that rebuilds `cfg` exactly through build_config.
inline std::string config_text(const RunConfig& cfg) {
    auto join = [](const auto& items, auto&& fmt) {
        std::string s;
        for (const auto& x : items) s += (s.empty() ? "" : ",") + fmt(x);
        return s;
    };
    std::ostringstream out;
    out << "experiment = " << to_string(cfg.experiment) << "\n"
        << "protocols = " << join(cfg.protocols, [](ProtocolKind p) { return to_string(p); }) << "\n"
        << "n_list = " << join(cfg.n_list, [](std::int64_t n) { return std::to_string(n); }) << "\n"
        << "reps = " << cfg.reps << "\n"
        << "state = " << to_string(cfg.state) << "\n"
        << "seed = " << cfg.seed << "\n"
        << "out_dir = " << cfg.out_dir.string() << "\n"
        << "workers = " << cfg.workers << "\n"
        << "werner_p = " << join(cfg.werner_p, [](double p) { return format_double(p); }) << "\n"
        << "n_states = " << cfg.n_states << "\n"
        << "state_classes = " << join(cfg.state_classes, [](StateClass c) { return to_string(c); }) << "\n"
        << "adaptive_protocol = " << to_string(cfg.adaptive_protocol) << "\n";
    return out.str();
}

// --------------------------- execution --------------------------------------

// Random states are drawn from streams derived from the run seed, separate
// from the trial seeds.
inline Rng state_rng(std::uint64_t seed, StateClass c, int index) {
    const std::uint64_t tag = c == StateClass::Mes ? 0x4d45530000000000ULL : 0x5055520000000000ULL;
    return make_rng(splitmix64(seed ^ tag) + static_cast<std::uint64_t>(index));
}

inline DensityMatrix make_state(const StateSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
    case StateSpec::Kind::Singlet: return singlet();
    case StateSpec::Kind::MaximallyMixed: return DensityMatrix::maximally_mixed(4);
    case StateSpec::Kind::Werner: return werner_state(spec.werner_p);
    case StateSpec::Kind::RandomPure: {
        Rng rng = state_rng(seed, StateClass::Pure, 0);
        return random_pure_state(rng);
    }
    case StateSpec::Kind::RandomMes: {
        Rng rng = state_rng(seed, StateClass::Mes, 0);
        return random_mes(rng);
    }
    }
    throw std::logic_error("make_state: unhandled kind");
}

inline DensityMatrix random_state_of_class(StateClass c, std::uint64_t seed, int index) {
    Rng rng = state_rng(seed, c, index);
    return c == StateClass::Mes ? random_mes(rng) : random_pure_state(rng);
}

struct UpsilonStudy {
    std::vector<UpsilonRow> rows;
    std::vector<TrialRecord> trials;
};

// For each state: `reps` cube trials and `reps` adaptive trials on the same
// seeds, then Upsilon from the two mean infidelities.
inline UpsilonStudy upsilon_study(StateClass c, int n_states, ProtocolKind adaptive, std::int64_t n, int reps,
                                  std::uint64_t seed, int workers) {
    UpsilonStudy study;
    for (int i = 0; i < n_states; ++i) {
        const DensityMatrix rho = random_state_of_class(c, seed, i);
        const std::uint64_t base = seed + static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(reps);
        auto cube = monte_carlo(ProtocolKind::Cube, rho, {n}, reps, base, workers).front();
        auto adapt = monte_carlo(adaptive, rho, {n}, reps, base, workers).front();
        study.rows.push_back(make_upsilon_row(to_string(c), i, to_string(adaptive), n, reps, cube.mean_infidelity,
                                              adapt.mean_infidelity));
        for (auto* pt : {&cube, &adapt})
            for (auto& t : pt->trials) study.trials.push_back(std::move(t));
    }
    return study;
}

struct RunOutputs {
    std::vector<SweepRow> rows;          // sweep_n, sweep_purity, single
    std::vector<UpsilonRow> upsilon;     // histogram
    std::vector<TrialRecord> trials;
};

inline RunOutputs run_experiment(const RunConfig& cfg) {
    RunOutputs out;
    auto collect = [&](const std::vector<MonteCarloPoint>& points) {
        for (const auto& pt : points)
            for (const auto& t : pt.trials) out.trials.push_back(t);
    };
    switch (cfg.experiment) {
    case Experiment::Single:
    case Experiment::SweepN: {
        const DensityMatrix rho = make_state(cfg.state, cfg.seed);
        for (auto p : cfg.protocols) collect(monte_carlo(p, rho, cfg.n_list, cfg.reps, cfg.seed, cfg.workers));
        out.rows = aggregate(out.trials);
        break;
    }
    case Experiment::SweepPurity: {
        for (double wp : cfg.werner_p) {
            const DensityMatrix rho = werner_state(wp);
            for (auto p : cfg.protocols) collect(monte_carlo(p, rho, cfg.n_list, cfg.reps, cfg.seed, cfg.workers));
        }
        out.rows = aggregate(out.trials);
        break;
    }
    case Experiment::Histogram: {
        for (auto c : cfg.state_classes) {
            auto study = upsilon_study(c, cfg.n_states, cfg.adaptive_protocol, cfg.n_list.front(), cfg.reps,
                                       cfg.seed, cfg.workers);
            out.upsilon.insert(out.upsilon.end(), study.rows.begin(), study.rows.end());
            for (auto& t : study.trials) out.trials.push_back(std::move(t));
        }
        break;
    }
    }
    return out;
}

// One line per adaptive step: {protocol, seed, n, step, label, gain, p_pred, copies, copies_before}.
inline std::string decisions_jsonl(const std::vector<TrialRecord>& trials) {
    std::string out;
    for (const auto& t : trials) {
        for (const auto& d : t.decisions) {
            json line = to_json(d);
            line["protocol"] = to_string(t.protocol);
            line["seed"] = t.seed;
            line["n"] = t.n;
            out += line.dump() + "\n";
        }
    }
    return out;
}

inline json run_manifest(const RunConfig& cfg, const std::vector<std::string>& files) {
    return json{{"tool", "raqst"},
                {"version", kVersion},
                {"experiment", to_string(cfg.experiment)},
                {"seed", cfg.seed},
                {"config", config_text(cfg)},
                {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                      "." + std::to_string(EIGEN_MINOR_VERSION)},
                {"compiler", __VERSION__},
                {"files", files}};
}

// Writes the result CSV, trials.jsonl, decisions.jsonl and manifest.json into
// cfg.out_dir; returns the file names written.
inline std::vector<std::string> write_outputs(const RunConfig& cfg, const RunOutputs& out) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + cfg.out_dir.string() + ": " + ec.message());
    std::vector<std::string> files;
    if (cfg.experiment == Experiment::Histogram) {
        write_upsilon(out.upsilon, cfg.out_dir / "upsilon.csv");
        files.push_back("upsilon.csv");
    } else {
        write_results(out.rows, cfg.out_dir / "results.csv");
        files.push_back("results.csv");
    }
    write_file_atomically(cfg.out_dir / "trials.jsonl", json_lines(out.trials));
    write_file_atomically(cfg.out_dir / "decisions.jsonl", decisions_jsonl(out.trials));
    files.push_back("trials.jsonl");
    files.push_back("decisions.jsonl");
    files.push_back("manifest.json");
    write_file_atomically(cfg.out_dir / "manifest.json", run_manifest(cfg, files).dump(2) + "\n");
    return files;
}

// 0 on success, 2 on any runtime failure (diagnostic on `err`).
inline int execute(const RunConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    try {
        const RunOutputs out = run_experiment(cfg);
        const auto files = write_outputs(cfg, out);
        log << "raqst " << to_string(cfg.experiment) << ": " << out.trials.size() << " trials, wrote";
        for (const auto& f : files) log << " " << (cfg.out_dir / f).string();
        log << "\n";
        return 0;
    } catch (const std::exception& ex) {
        err << "raqst: error: " << ex.what() << "\n";
        return 2;
    }
}

} // namespace raqst
