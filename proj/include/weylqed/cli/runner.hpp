// runner.hpp — executes one experiment config and writes CSV, JSON and a hashed manifest

#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "weylqed/bound_states.hpp"
#include "weylqed/cli/config.hpp"
#include "weylqed/dynamics.hpp"
#include "weylqed/greens.hpp"
#include "weylqed/lattice.hpp"
#include "weylqed/parallel.hpp"
#include "weylqed/spin_model.hpp"

namespace weylqed::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

inline constexpr const char* units_header = "# units: energies in J, lengths in a, times in 1/J, momenta in 1/a (hbar = 1)";

/// Tracks every file a run writes so a failed run can be rolled back.
class OutputSet {
  public:
    OutputSet(fs::path dir, bool deterministic) : dir_(std::move(dir)), deterministic_(deterministic) {
        if (!fs::exists(dir_)) {
            fs::create_directories(dir_);
            created_dir_ = true;
        }
    }

    [[nodiscard]] std::string number(double v) const {
        char buf[40];
        std::snprintf(buf, sizeof buf, deterministic_ ? "%.17g" : "%.10g", v);
        return buf;
    }

    /// Writes a CSV: units comment, description comment, column line, then rows.
    void csv(const std::string& name, const std::string& description, const std::vector<std::string>& columns,
             const std::function<void(std::ostream&)>& rows) {
        const fs::path path = dir_ / name;
        files_.push_back(path);
        std::ofstream out(path, std::ios::binary);
        out << units_header << '\n' << "# " << description << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
        out << '\n';
        rows(out);
        if (!out) throw std::runtime_error("failed writing " + path.string());
    }

    void write_json(const std::string& name, const json& j) {
        const fs::path path = dir_ / name;
        files_.push_back(path);
        std::ofstream out(path, std::ios::binary);
        out << j.dump(2) << '\n';
        if (!out) throw std::runtime_error("failed writing " + path.string());
    }

    [[nodiscard]] json listing() const {
        json files = json::array();
        for (const auto& f : files_)
            files.push_back({{"path", f.filename().string()}, {"sha256", sha256_file(f)}, {"bytes", fs::file_size(f)}});
        return files;
    }

    void rollback() {
        std::error_code ec;
        for (const auto& f : files_) fs::remove(f, ec);
        files_.clear();
        if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
    }

    [[nodiscard]] const fs::path& dir() const { return dir_; }
    [[nodiscard]] const std::vector<fs::path>& files() const { return files_; }

  private:
    fs::path dir_;
    bool deterministic_;
    bool created_dir_{false};
    std::vector<fs::path> files_;
};

namespace detail {

inline json node_json(const WeylNode& n) {
    return {{"kx", n.momentum.x()},       {"ky", n.momentum.y()},   {"kz", n.momentum.z()},
            {"frequency", n.frequency},   {"chirality", n.chirality}, {"flux", n.flux},
            {"splitting", n.splitting},   {"linearity", n.linearity}};
}

inline std::string row(const OutputSet& o, std::initializer_list<double> v) {
    std::string s;
    bool first = true;
    for (double x : v) {
        if (!first) s += ',';
        s += o.number(x);
        first = false;
    }
    return s;
}

/// Emitter list with critical detunings resolved on `grid`.
inline std::vector<EmitterSpec> resolve_emitters(const ExperimentConfig& cfg, const LatticeParams& p, int grid,
                                                 json& summary) {
    std::vector<EmitterSpec> out;
    json list = json::array();
    for (const auto& ec : cfg.emitters) {
        EmitterSpec e = ec.spec;
        json item{{"x", e.site.x}, {"y", e.site.y}, {"z", e.site.z}, {"sublattice", std::string(1, to_char(e.sublattice()))},
                  {"coupling", e.coupling}};
        if (ec.critical) {
            const CriticalDetuning c = critical_detuning(p, e.coupling, e.sublattice(), grid);
            e.detuning = c.detuning;
            item["critical_detuning_error"] = c.extrapolation_error;
            if (c.flagged) summary["warnings"].push_back("critical detuning extrapolation error above 1e-4 J");
        }
        item["detuning"] = e.detuning;
        list.push_back(item);
        out.push_back(e);
    }
    summary["emitters"] = list;
    return out;
}

inline void run_bands(const ExperimentConfig& cfg, OutputSet& o, json& s) {
    const auto& p = cfg.lattice;
    const int n = cfg.numerics.points;
    o.csv("bands.csv", "bath bands on the (k_x, k_y, k_z) mesh at fixed k_y = " + o.number(cfg.numerics.ky),
          {"kx", "kz", "omega_minus", "omega_plus"}, [&](std::ostream& out) {
              for (int i = 0; i < n; ++i)
                  for (int j = 0; j < n; ++j) {
                      const double kx = -pi + 2.0 * pi * i / (n - 1);
                      const double kz = -pi + 2.0 * pi * j / (n - 1);
                      const auto b = bands(p, Vec3(kx, cfg.numerics.ky, kz));
                      out << row(o, {kx, kz, b.omega_minus, b.omega_plus}) << '\n';
                  }
          });
    const auto nodes = find_weyl_nodes(p, cfg.numerics.tol);
    s["gapped"] = nodes.gapped;
    s["gap"] = gap(p, 32);
    s["nodes"] = json::array();
    for (const auto& nd : nodes.nodes) s["nodes"].push_back(node_json(nd));
}

inline void run_nodes(const ExperimentConfig& cfg, OutputSet& o, json& s) {
    const auto nodes = find_weyl_nodes(cfg.lattice, cfg.numerics.tol, cfg.numerics.scan_grid);
    o.csv("nodes.csv", "band-touching points of the bath in the reduced zone",
          {"kx", "ky", "kz", "frequency", "chirality", "flux"}, [&](std::ostream& out) {
              for (const auto& n : nodes.nodes)
                  out << row(o, {n.momentum.x(), n.momentum.y(), n.momentum.z(), n.frequency}) << ','
                      << n.chirality << ',' << o.number(n.flux) << '\n';
          });
    s["gapped"] = nodes.gapped;
    int sum = 0;
    s["nodes"] = json::array();
    for (const auto& n : nodes.nodes) {
        s["nodes"].push_back(node_json(n));
        sum += n.chirality;
    }
    s["chirality_sum"] = sum;
}

inline void run_dos(const ExperimentConfig& cfg, OutputSet& o, json& s) {
    const auto& n = cfg.numerics;
    const DosHistogram h = dos(cfg.lattice, n.grid, n.eta, n.bin_width);
    o.csv("dos.csv", "Gaussian-broadened density of states per site", {"omega", "density"}, [&](std::ostream& out) {
        for (std::size_t i = 0; i < h.density.size(); ++i) out << row(o, {h.center(i), h.density[i]}) << '\n';
    });
    const PowerFit f = dos_exponent(h, n.fit_min, n.fit_max);
    s["exponent"] = f.exponent;
    s["r_squared"] = f.r_squared;
    s["fit_points"] = f.points;
    s["integral"] = h.integral();
    for (const auto& w : h.warnings) s["warnings"].push_back(w);
}

inline void run_dynamics(const ExperimentConfig& cfg, OutputSet& o, json& s) {
    const auto& n = cfg.numerics;
    const bool sweep = !n.offsets.empty();
    const std::vector<double> offsets = sweep ? n.offsets : std::vector<double>{cfg.lattice.offset};
    const bool two = cfg.emitters.size() == 2;

    struct Run {
        double offset;
        PopulationTrace trace;
        PopulationTrace markov;
    };
    std::vector<Run> runs;
    s["runs"] = json::array();
    for (double m : offsets) {
        LatticeParams p = cfg.lattice;
        p.offset = m;
        json r{{"offset", m}};
        const auto em = resolve_emitters(cfg, p, n.grid, r);
        Run run{m, {}, {}};
        if (two) {
            const auto ex = two_emitter_exchange(p, em[0], em[1], n.t_max, n.dt_out);
            run.trace = ex.trace;
            r["first_maximum"] = {{"found", ex.first_maximum.found},
                                  {"time", ex.first_maximum.time},
                                  {"height", ex.first_maximum.height}};
        } else {
            run.trace = evolve(p, em, ExcitationState::excited(p.site_count(), 1, 0), n.t_max, n.dt_out);
            const Plateau pl = plateau(run.trace, 0, n.plateau_from, n.plateau_to);
            r["plateau"] = pl.mean;
            r["plateau_oscillation"] = pl.oscillation;
            r["plateau_window"] = {n.plateau_from, n.plateau_to};
            if (n.markov) {
                const DosHistogram h = dos(p, n.dos_grid, n.eta);
                r["markov_rate"] = markov_rate(p, em[0], h);
                run.markov = markov_prediction(p, em[0], h, n.t_max, n.dt_out);
            }
        }
        // residue of a single emitter on this lattice, the long-time reference
        const EmitterSpec& e0 = em[0];
        if (const auto E = find_bound_state_energy(p, e0, n.grid)) {
            const double z = residue(p, e0, *E, n.grid);
            r["bound_state_energy"] = *E;
            r["residue"] = z;
            r["residue_squared"] = z * z;
        } else {
            r["residue"] = nullptr;
            s["warnings"].push_back("no bound state on the " + std::to_string(n.grid) + "^3 grid at M = " + o.number(m));
        }
        s["runs"].push_back(r);
        runs.push_back(std::move(run));
    }

    std::vector<std::string> cols;
    if (sweep) cols.push_back("M");
    cols.push_back("t");
    if (two) {
        cols.insert(cols.end(), {"pop_1", "pop_2", "pop_photon"});
    } else {
        cols.insert(cols.end(), {"pop_e", "pop_photon"});
    }
    o.csv("dynamics.csv", "exact single-excitation populations", cols, [&](std::ostream& out) {
        for (const Run& r : runs)
            for (std::size_t i = 0; i < r.trace.samples(); ++i) {
                if (sweep) out << o.number(r.offset) << ',';
                out << o.number(r.trace.times[i]);
                for (const auto& pop : r.trace.populations) out << ',' << o.number(pop[i]);
                out << ',' << o.number(r.trace.photon_total[i]) << '\n';
            }
    });
    if (!two && n.markov)
        o.csv("markov.csv", "Markovian reference exp(-Gamma t), Gamma = 2 pi g^2 D(Delta)",
              sweep ? std::vector<std::string>{"M", "t", "pop_markov"} : std::vector<std::string>{"t", "pop_markov"},
              [&](std::ostream& out) {
                  for (const Run& r : runs)
                      for (std::size_t i = 0; i < r.markov.samples(); ++i) {
                          if (sweep) out << o.number(r.offset) << ',';
                          out << row(o, {r.markov.times[i], r.markov.populations[0][i]}) << '\n';
                      }
              });
    if (!sweep) {
        const json r = s["runs"][0]; // a copy: inserting into s invalidates references
        for (const char* k : {"plateau", "plateau_oscillation", "residue_squared", "first_maximum", "markov_rate"})
            if (r.contains(k)) s[k] = r[k];
    }
}

inline json fit_json(const PowerLawFit& f) {
    return {{"direction", to_string(f.direction)},
            {"sublattice", std::string(1, to_char(f.sublattice))},
            {"gamma", f.exponent},
            {"prefactor", f.prefactor},
            {"fit_range", {f.d_min, f.d_max}},
            {"r_squared", f.r_squared},
            {"points", f.points},
            {"flagged", f.flagged}};
}

inline void run_boundstate(const ExperimentConfig& cfg, OutputSet& o, json& s) {
    const auto& n = cfg.numerics;
    if (n.mode == "residue_sweep") {
        struct Point {
            double m, delta, energy, z;
        };
        std::vector<Point> pts;
        s["points"] = json::array();
        for (double m : n.offsets) {
            LatticeParams p = cfg.lattice;
            p.offset = m;
            json r{{"offset", m}};
            const EmitterSpec e = resolve_emitters(cfg, p, n.grid, r)[0];
            const auto E = find_bound_state_energy(p, e, n.grid);
            if (!E) throw NumericalFailure("no bound state at M = " + o.number(m));
            const double z = residue(p, e, *E, n.grid);
            pts.push_back({m, e.detuning, *E, z});
            r["bound_state_energy"] = *E;
            r["residue"] = z;
            r["residue_squared"] = z * z;
            s["points"].push_back(r);
        }
        o.csv("plateau_inset.csv", "long-time emitter population Z^2 against the sublattice offset",
              {"M", "delta", "E_BS", "Z", "Z2"}, [&](std::ostream& out) {
                  for (const auto& q : pts) out << row(o, {q.m, q.delta, q.energy, q.z, q.z * q.z}) << '\n';
              });
        double dev = 0.0;
        for (const auto& q : pts) dev = std::max(dev, std::abs(q.z * q.z - pts.front().z * pts.front().z));
        s["max_deviation_from_first"] = dev;
        return;
    }

    LatticeParams p = cfg.lattice;
    p.size = n.size;
    const EmitterSpec e = resolve_emitters(cfg, p, n.size, s)[0];
    const auto E = find_bound_state_energy(p, e, n.size);
    if (!E) throw NumericalFailure("no bound state for these parameters on the " + std::to_string(n.size) + "^3 lattice");
    const BoundState bs = bound_state_wavefunction(p, e, *E, n.size);
    s["bound_state_energy"] = bs.energy;
    s["secular_residual"] = bs.energy - e.detuning - self_energy(p, e.coupling, {bs.energy, 0.0}, e.sublattice(), n.size).real();
    s["emitter_amplitude"] = bs.emitter_amplitude;
    s["residue"] = bs.residue;
    s["residue_squared"] = bs.residue * bs.residue;
    s["norm"] = bs.emitter_amplitude * bs.emitter_amplitude + bs.photon_weight();
    s["display_scale"] = e.coupling / p.hopping * bs.residue;

    const int w = n.window;
    o.csv("boundstate_field.csv",
          "bound-state photon amplitude around the emitter at the origin; abs_C = |C_r| / ((g/J) Z)",
          {"x", "y", "z", "sublattice", "abs_C"}, [&](std::ostream& out) {
              for (int x = -w; x < w; ++x)
                  for (int y = -w; y < w; ++y)
                      for (int z = -w; z < w; ++z) {
                          const SiteIndex r{e.site.x + x, e.site.y + y, e.site.z + z};
                          out << x << ',' << y << ',' << z << ',' << to_char(r.sublattice()) << ','
                              << o.number(bs.display(r, p.hopping)) << '\n';
                      }
          });
    if (!n.fit) return;
    const auto fits = fit_all_power_laws(bs, n.fit_min, n.fit_max);
    json pl{{"fits", json::array()}};
    for (const auto& f : fits) pl["fits"].push_back(fit_json(f));
    for (Axis a : {Axis::xy, Axis::z}) {
        const auto g = direction_exponent(fits, a);
        pl[std::string("gamma_") + to_string(a)] = g ? json(*g) : json(nullptr);
    }
    o.write_json("powerlaw.json", pl);
    s["gamma_xy"] = pl["gamma_xy"];
    s["gamma_z"] = pl["gamma_z"];
}

inline void run_spinbands(const ExperimentConfig& cfg, OutputSet& o, json& s) {
    const auto& n = cfg.numerics;
    const double s_max = *std::max_element(n.ranges.begin(), n.ranges.end());
    const CouplingMap full = effective_couplings(cfg.lattice, n.coupling, s_max, n.grid);
    const double kx = n.kx_over_pi * pi;
    for (const auto& w : full.warnings) s["warnings"].push_back(w);
    s["max_imag_ratio"] = full.max_imag_ratio;
    s["detunings"] = {full.detuning_a, full.detuning_b};
    s["cuts"] = json::array();
    std::vector<std::pair<double, std::vector<SpinBandSample>>> cuts;
    std::vector<double> stars;
    for (double range : n.ranges) {
        const CouplingMap c = truncate(full, range);
        cuts.emplace_back(range, spin_band_cut(c, kx, n.ky, n.points));
        const BandCrossing bc = find_band_crossings(c, kx, n.ky);
        s["cuts"].push_back({{"range", range}, {"crossings", bc.crossings}, {"min_gap", bc.min_gap},
                             {"min_gap_kz", bc.min_gap_kz}, {"entries", c.entries.size()}});
        stars.push_back(bc.found() ? bc.first() : std::numeric_limits<double>::quiet_NaN());
    }
    if (stars.size() >= 2 && std::isfinite(stars.back()) && std::isfinite(stars[stars.size() - 2]))
        s["crossing_convergence"] = std::abs(stars.back() - stars[stars.size() - 2]);
    o.csv("spinbands.csv", "spin-model bands along k_z at k_x = " + o.number(kx) + ", k_y = " + o.number(n.ky),
          {"s", "kz", "omega_minus", "omega_plus"}, [&](std::ostream& out) {
              for (const auto& [range, cut] : cuts)
                  for (const auto& b : cut) out << row(o, {range, b.kz, b.lower, b.upper}) << '\n';
          });
}

inline void run_berry(const ExperimentConfig& cfg, OutputSet& o, json& s) {
    const auto& n = cfg.numerics;
    const CouplingMap c = effective_couplings(cfg.lattice, n.coupling, n.range, n.grid);
    for (const auto& w : c.warnings) s["warnings"].push_back(w);
    s["max_imag_ratio"] = c.max_imag_ratio;
    const BerryField f = berry_curvature_plane(c, n.mesh);
    const double step = 2.0 * pi / f.n;
    o.csv("berry.csv", "lower-band link flux per plaquette on the k_y = 0 plane, at plaquette centres",
          {"kx", "kz", "flux", "curvature", "flagged"}, [&](std::ostream& out) {
              for (int i = 0; i < f.n; ++i)
                  for (int j = 0; j < f.n; ++j) {
                      const auto idx = static_cast<std::size_t>(i * f.n + j);
                      out << row(o, {f.axis[static_cast<std::size_t>(i)] + 0.5 * step,
                                     f.axis[static_cast<std::size_t>(j)] + 0.5 * step, f.flux[idx], f.curvature[idx]})
                          << ',' << static_cast<int>(f.flagged[idx]) << '\n';
                  }
          });
    s["total_flux"] = f.total_flux;
    s["flagged_plaquettes"] = f.flagged_count;
    s["displaced_points"] = f.displaced_points;
    const SpinNodeSearch nodes = find_spin_weyl_nodes(c, n.tol);
    int sum = 0;
    s["nodes"] = json::array();
    for (const auto& nd : nodes.nodes) {
        s["nodes"].push_back(node_json(nd));
        sum += nd.chirality;
    }
    s["non_weyl"] = json::array();
    for (const auto& nd : nodes.non_weyl) s["non_weyl"].push_back(node_json(nd));
    s["chirality_sum"] = sum;
}

} // namespace detail

struct RunResult {
    fs::path directory;
    json manifest;
    json summary;
};

/// Runs the experiment into `out_dir`. On any exception every file written so far
/// is removed before rethrowing.
inline RunResult run(const ExperimentConfig& cfg, const fs::path& out_dir, bool deterministic) {
    const auto start = std::chrono::steady_clock::now();
    OutputSet o(out_dir, deterministic);
    RunResult result;
    result.directory = out_dir;
    try {
        json s;
        s["experiment"] = kind_name(cfg.kind);
        s["warnings"] = json::array();
        switch (cfg.kind) {
        case ExperimentKind::bands: detail::run_bands(cfg, o, s); break;
        case ExperimentKind::nodes: detail::run_nodes(cfg, o, s); break;
        case ExperimentKind::dos: detail::run_dos(cfg, o, s); break;
        case ExperimentKind::dynamics: detail::run_dynamics(cfg, o, s); break;
        case ExperimentKind::boundstate: detail::run_boundstate(cfg, o, s); break;
        case ExperimentKind::spinbands: detail::run_spinbands(cfg, o, s); break;
        case ExperimentKind::berry: detail::run_berry(cfg, o, s); break;
        }
        o.write_json("summary.json", s);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json m;
        m["tool"] = "weylqed";
        m["version"] = version;
        m["experiment"] = kind_name(cfg.kind);
        m["config"] = cfg.resolved;
        m["deterministic"] = deterministic;
        m["jobs"] = parallel::jobs();
        m["files"] = o.listing();
        m["wall_time_seconds"] = wall;
        std::ofstream(o.dir() / "manifest.json", std::ios::binary) << m.dump(2) << '\n';
        result.manifest = m;
        result.summary = s;
    } catch (...) {
        o.rollback();
        throw;
    }
    return result;
}

} // namespace weylqed::cli
