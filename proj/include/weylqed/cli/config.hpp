// config.hpp — strict key = value experiment configs with line-located errors
//
//   experiment = dynamics
//   [lattice]
//   offset = 0
//   [emitter.1]
//   x = 0
//   detuning = critical
//   [numerics]
//   t_max = 40
//
// Unknown sections and keys, duplicates and keys that the chosen experiment does
// not use are all rejected.

#pragma once

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "weylqed/greens.hpp"
#include "weylqed/dynamics.hpp"

namespace weylqed::cli {

class ConfigError : public InvalidInput {
  public:
    ConfigError(int line, const std::string& msg)
        : InvalidInput(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    [[nodiscard]] int line() const { return line_; }

  private:
    int line_;
};

struct Entry {
    std::string value;
    int line{0};
};

struct Section {
    std::string name; // "" for keys before the first header
    int line{0};
    std::map<std::string, Entry> keys;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool valid_name(const std::string& s, bool allow_dot) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_' ||
              (allow_dot && c == '.')))
            return false;
    return true;
}

} // namespace detail

inline std::vector<Section> parse_sections(const std::string& text) {
    std::vector<Section> out;
    out.push_back({"", 0, {}});
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    std::set<std::string> seen{""};
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        if (const auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty() || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(line, "unterminated section header");
            const std::string name = detail::trim(s.substr(1, s.size() - 2));
            if (!detail::valid_name(name, true)) throw ConfigError(line, "invalid section name '" + name + "'");
            if (!seen.insert(name).second) throw ConfigError(line, "duplicate section [" + name + "]");
            out.push_back({name, line, {}});
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
        const std::string key = detail::trim(s.substr(0, eq));
        std::string value = detail::trim(s.substr(eq + 1));
        if (!detail::valid_name(key, false)) throw ConfigError(line, "invalid key '" + key + "'");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (value.empty()) throw ConfigError(line, "empty value for '" + key + "'");
        auto& keys = out.back().keys;
        if (keys.count(key)) throw ConfigError(line, "duplicate key '" + key + "'");
        keys[key] = {value, line};
    }
    return out;
}

enum class ExperimentKind { bands, dos, dynamics, boundstate, spinbands, berry, nodes };

inline const std::vector<std::pair<std::string, ExperimentKind>>& experiment_kinds() {
    static const std::vector<std::pair<std::string, ExperimentKind>> k{
        {"bands", ExperimentKind::bands},         {"dos", ExperimentKind::dos},
        {"dynamics", ExperimentKind::dynamics},   {"boundstate", ExperimentKind::boundstate},
        {"spinbands", ExperimentKind::spinbands}, {"berry", ExperimentKind::berry},
        {"nodes", ExperimentKind::nodes}};
    return k;
}

inline std::optional<ExperimentKind> parse_kind(const std::string& s) {
    for (const auto& [name, kind] : experiment_kinds())
        if (name == s) return kind;
    return std::nullopt;
}

inline std::string kind_name(ExperimentKind k) {
    for (const auto& [name, kind] : experiment_kinds())
        if (kind == k) return name;
    return "?";
}

struct EmitterConfig {
    EmitterSpec spec;
    bool critical{false}; // detuning resolved to Delta_c at run time
};

/// Fully resolved numerical knobs. Only the fields used by the experiment kind are
/// meaningful; `resolved` echoes exactly those.
struct Numerics {
    int points{101};
    double ky{0.0};
    double tol{1e-8};
    int scan_grid{24};
    int grid{0};
    double eta{0.02};
    double bin_width{0.0};
    double fit_min{0.0};
    double fit_max{0.0};
    double t_max{40.0};
    double dt_out{0.05};
    double plateau_from{-1.0};
    double plateau_to{-1.0};
    bool markov{true};
    int dos_grid{62}; // 64 would put the Weyl momenta of M = 0 on the grid
    double prominence{0.02};
    std::string mode{"field"};
    int size{126};
    int window{10};
    bool fit{true};
    std::vector<double> offsets;
    std::vector<double> ranges;
    double range{9.0};
    double kx_over_pi{0.5};
    double coupling{0.5};
    int mesh{64};
};

struct ExperimentConfig {
    ExperimentKind kind{ExperimentKind::bands};
    std::string name;
    LatticeParams lattice;
    std::vector<EmitterConfig> emitters;
    Numerics numerics;
    std::string output;
    nlohmann::ordered_json resolved; // config echo with defaults filled in
};

namespace detail {

inline double to_double(const Entry& e, const std::string& key) {
    double v = 0.0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [ptr, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError(e.line, "'" + key + "' expects a number, got '" + e.value + "'");
    return v;
}

inline int to_int(const Entry& e, const std::string& key) {
    int v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [ptr, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(e.line, "'" + key + "' expects an integer, got '" + e.value + "'");
    return v;
}

inline bool to_bool(const Entry& e, const std::string& key) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ConfigError(e.line, "'" + key + "' expects true or false, got '" + e.value + "'");
}

inline std::vector<double> to_list(const Entry& e, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double({trim(item), e.line}, key));
    if (out.empty()) throw ConfigError(e.line, "'" + key + "' expects a comma-separated list");
    return out;
}

/// Reads typed values out of one section, remembering which keys were consumed.
class Reader {
  public:
    Reader(const Section* s, nlohmann::ordered_json& echo) : s_(s), echo_(echo) {}

    template <class T, class Conv>
    void read(const std::string& key, T& target, Conv conv) {
        allowed_.insert(key);
        if (s_) {
            const auto it = s_->keys.find(key);
            if (it != s_->keys.end()) {
                target = conv(it->second, key);
                lines_[key] = it->second.line;
            }
        }
        echo_[key] = target;
    }
    void number(const std::string& key, double& t) { read(key, t, to_double); }
    void integer(const std::string& key, int& t) { read(key, t, to_int); }
    void boolean(const std::string& key, bool& t) { read(key, t, to_bool); }
    void list(const std::string& key, std::vector<double>& t) { read(key, t, to_list); }
    void text(const std::string& key, std::string& t) {
        read(key, t, [](const Entry& e, const std::string&) { return e.value; });
    }

    [[nodiscard]] int line(const std::string& key) const {
        const auto it = lines_.find(key);
        return it == lines_.end() ? (s_ ? s_->line : 0) : it->second;
    }
    [[nodiscard]] bool given(const std::string& key) const { return lines_.count(key) != 0; }

    /// Rejects every key of the section that was not read.
    void finish(const std::string& context) const {
        if (!s_) return;
        for (const auto& [k, e] : s_->keys)
            if (!allowed_.count(k)) throw ConfigError(e.line, "unknown key '" + k + "' " + context);
    }

  private:
    const Section* s_;
    nlohmann::ordered_json& echo_;
    std::set<std::string> allowed_;
    std::map<std::string, int> lines_;
};

} // namespace detail

/// Parses and validates a config. `forced_kind` comes from the command line and
/// must agree with the file's `experiment` key when both are present.
inline ExperimentConfig parse_config(const std::string& text, std::optional<ExperimentKind> forced_kind = std::nullopt) {
    const auto sections = parse_sections(text);
    const Section& top = sections.front();
    ExperimentConfig cfg;

    const auto exp = top.keys.find("experiment");
    if (exp == top.keys.end() && !forced_kind) throw ConfigError(0, "no experiment specified");
    if (exp != top.keys.end()) {
        const auto k = parse_kind(exp->second.value);
        if (!k) throw ConfigError(exp->second.line, "unknown experiment '" + exp->second.value + "'");
        if (forced_kind && *forced_kind != *k)
            throw ConfigError(exp->second.line, "config declares experiment '" + exp->second.value +
                                                    "' but '" + kind_name(*forced_kind) + "' was requested");
        cfg.kind = *k;
    } else {
        cfg.kind = *forced_kind;
    }
    const std::string kind = kind_name(cfg.kind);
    auto& echo = cfg.resolved;
    echo["experiment"] = kind;

    for (const auto& [k, e] : top.keys)
        if (k != "experiment" && k != "name" && k != "output") throw ConfigError(e.line, "unknown top-level key '" + k + "'");
    if (auto it = top.keys.find("name"); it != top.keys.end()) cfg.name = it->second.value;
    if (auto it = top.keys.find("output"); it != top.keys.end()) cfg.output = it->second.value;
    echo["name"] = cfg.name.empty() ? kind : cfg.name;

    const Section* lattice = nullptr;
    const Section* numerics = nullptr;
    std::vector<const Section*> emitter_sections;
    for (std::size_t i = 1; i < sections.size(); ++i) {
        const Section& s = sections[i];
        if (s.name == "lattice")
            lattice = &s;
        else if (s.name == "numerics")
            numerics = &s;
        else if (s.name == "emitter" || s.name.rfind("emitter.", 0) == 0)
            emitter_sections.push_back(&s);
        else
            throw ConfigError(s.line, "unknown section [" + s.name + "]");
    }

    {
        detail::Reader r(lattice, echo["lattice"]);
        r.number("hopping", cfg.lattice.hopping);
        r.number("offset", cfg.lattice.offset);
        r.number("lattice_constant", cfg.lattice.lattice_constant);
        r.integer("size", cfg.lattice.size);
        r.finish("in [lattice]");
        try {
            cfg.lattice.validate();
        } catch (const InvalidInput& e) {
            throw ConfigError(lattice ? lattice->line : 0, e.what());
        }
    }

    const bool wants_emitters = cfg.kind == ExperimentKind::dynamics || cfg.kind == ExperimentKind::boundstate;
    if (!wants_emitters && !emitter_sections.empty())
        throw ConfigError(emitter_sections.front()->line, "experiment '" + kind + "' takes no emitters");
    echo["emitters"] = nlohmann::ordered_json::array();
    for (const Section* s : emitter_sections) {
        nlohmann::ordered_json e;
        detail::Reader r(s, e);
        EmitterConfig ec;
        r.integer("x", ec.spec.site.x);
        r.integer("y", ec.spec.site.y);
        r.integer("z", ec.spec.site.z);
        std::string detuning = "0";
        r.text("detuning", detuning);
        if (detuning == "critical") {
            ec.critical = true;
        } else {
            ec.spec.detuning = detail::to_double({detuning, r.line("detuning")}, "detuning");
            e["detuning"] = ec.spec.detuning;
        }
        r.number("coupling", ec.spec.coupling);
        if (!r.given("coupling")) throw ConfigError(s->line, "[" + s->name + "] requires 'coupling'");
        r.finish("in [" + s->name + "]");
        echo["emitters"].push_back(e);
        cfg.emitters.push_back(ec);
    }
    if (wants_emitters) {
        if (cfg.emitters.empty()) throw ConfigError(0, "experiment '" + kind + "' requires an [emitter] section");
        try {
            std::vector<EmitterSpec> specs;
            for (const auto& e : cfg.emitters) specs.push_back(e.spec);
            validate_emitters(cfg.lattice, specs);
        } catch (const InvalidInput& e) {
            throw ConfigError(emitter_sections.front()->line, e.what());
        }
    }

    Numerics& n = cfg.numerics;
    detail::Reader r(numerics, echo["numerics"]);
    auto require = [&](bool ok, const std::string& key, const std::string& msg) {
        if (!ok) throw ConfigError(r.line(key), "'" + key + "' " + msg);
    };
    switch (cfg.kind) {
    case ExperimentKind::bands:
        r.integer("points", n.points);
        r.number("ky", n.ky);
        r.number("tol", n.tol);
        require(n.points >= 2, "points", "must be >= 2");
        break;
    case ExperimentKind::nodes:
        r.number("tol", n.tol);
        r.integer("scan_grid", n.scan_grid);
        require(n.scan_grid >= 8, "scan_grid", "must be >= 8");
        break;
    case ExperimentKind::dos:
        n.grid = 64;
        n.fit_min = 0.1;
        n.fit_max = 0.5;
        r.integer("grid", n.grid);
        r.number("eta", n.eta);
        n.bin_width = 0.5 * n.eta;
        r.number("bin_width", n.bin_width);
        r.number("fit_min", n.fit_min);
        r.number("fit_max", n.fit_max);
        require(n.grid >= 16 && n.grid % 2 == 0, "grid", "must be even and >= 16");
        require(n.eta > 0.0, "eta", "must be positive");
        require(n.bin_width > 0.0, "bin_width", "must be positive");
        require(n.fit_min > 0.0 && n.fit_max > n.fit_min, "fit_max", "must exceed fit_min > 0");
        break;
    case ExperimentKind::dynamics:
        n.grid = cfg.lattice.size;
        r.number("t_max", n.t_max);
        r.number("dt_out", n.dt_out);
        n.plateau_from = 0.75 * n.t_max;
        n.plateau_to = n.t_max;
        r.number("plateau_from", n.plateau_from);
        r.number("plateau_to", n.plateau_to);
        r.boolean("markov", n.markov);
        r.integer("dos_grid", n.dos_grid);
        r.number("eta", n.eta);
        r.integer("grid", n.grid);
        r.number("prominence", n.prominence);
        r.list("offsets", n.offsets);
        require(n.t_max > 0.0 && n.t_max * cfg.lattice.hopping <= 1e4, "t_max", "must lie in (0, 1e4/J]");
        require(n.dt_out > 0.0 && n.dt_out <= n.t_max, "dt_out", "must lie in (0, t_max]");
        require(n.plateau_from >= 0.0 && n.plateau_to <= n.t_max && n.plateau_from < n.plateau_to, "plateau_to",
                "window must lie inside [0, t_max]");
        require(n.grid >= 2 && n.grid % 2 == 0, "grid", "must be even");
        require(n.dos_grid >= 16 && n.dos_grid % 2 == 0, "dos_grid", "must be even and >= 16");
        require(n.eta > 0.0, "eta", "must be positive");
        if (cfg.emitters.size() > 2) throw ConfigError(0, "dynamics supports one or two emitters");
        if (r.given("offsets"))
            for (const auto& e : cfg.emitters)
                require(e.critical, "offsets", "sweeps need every emitter at detuning = critical");
        break;
    case ExperimentKind::boundstate:
        n.grid = 0;
        n.fit_min = 2.0;
        n.fit_max = 8.0;
        r.text("mode", n.mode);
        require(n.mode == "field" || n.mode == "residue_sweep", "mode", "must be 'field' or 'residue_sweep'");
        if (n.mode == "field") {
            r.integer("size", n.size);
            n.grid = n.size; // every sum on the lattice's own grid: the state is an exact eigenvector
            r.integer("window", n.window);
            r.boolean("fit", n.fit);
            r.number("fit_min", n.fit_min);
            r.number("fit_max", n.fit_max);
            require(n.size >= 4 && n.size % 2 == 0, "size", "must be even and >= 4");
            require(n.window >= 1 && 2 * n.window <= n.size, "window", "must lie in [1, size/2]");
            require(n.fit_min >= 2.0 && n.fit_max <= n.size / 2.0 - 2.0 && n.fit_min < n.fit_max, "fit_max",
                    "fit range must lie within [2, size/2 - 2]");
        } else {
            n.grid = default_green_grid;
            n.offsets = {0.0, 0.5, 1.0, 1.5, 2.0};
            r.integer("grid", n.grid);
            r.list("offsets", n.offsets);
            for (double m : n.offsets)
                require(std::abs(m) <= 2.0 * cfg.lattice.hopping, "offsets", "entries must satisfy |M| <= 2J");
        }
        require(n.grid >= 2 && n.grid % 2 == 0, "grid", "must be even");
        if (cfg.emitters.size() != 1) throw ConfigError(0, "boundstate takes exactly one emitter");
        break;
    case ExperimentKind::spinbands:
        n.grid = default_green_grid;
        n.ranges = {1, 3, 5, 7, 9};
        n.points = 401;
        r.number("coupling", n.coupling);
        r.list("ranges", n.ranges);
        r.integer("points", n.points);
        r.number("kx_over_pi", n.kx_over_pi);
        r.number("ky", n.ky);
        r.integer("grid", n.grid);
        require(n.points >= 2, "points", "must be >= 2");
        for (double s : n.ranges) require(s >= 0.0 && s < n.grid / 2.0, "ranges", "entries must lie in [0, grid/2)");
        break;
    case ExperimentKind::berry:
        n.grid = default_green_grid;
        r.number("coupling", n.coupling);
        r.number("range", n.range);
        r.integer("mesh", n.mesh);
        r.integer("grid", n.grid);
        r.number("tol", n.tol);
        require(n.mesh >= 4 && n.mesh % 4 == 0, "mesh", "must be a positive multiple of 4");
        require(n.range >= 0.0 && n.range < n.grid / 2.0, "range", "must lie in [0, grid/2)");
        break;
    }
    if ((cfg.kind == ExperimentKind::spinbands || cfg.kind == ExperimentKind::berry) &&
        std::abs(cfg.lattice.offset) > 2.0 * cfg.lattice.hopping)
        throw ConfigError(lattice ? lattice->line : 0, "spin model requires |M| <= 2J");
    r.finish("for experiment '" + kind + "'");
    return cfg;
}

} // namespace weylqed::cli
