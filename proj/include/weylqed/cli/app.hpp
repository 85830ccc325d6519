// app.hpp — command-line front end; run_app is what the weylqed binary calls

#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "weylqed/cli/config.hpp"
#include "weylqed/cli/recipes.hpp"
#include "weylqed/cli/runner.hpp"

namespace weylqed::cli {

enum ExitCode : int { ok = 0, invalid_input = 2, numerical_failure = 3, io_failure = 4 };

inline void print_catalog(std::ostream& out) {
    out << "weylqed " << version << "\n\nexperiments:\n";
    for (const auto& [name, kind] : experiment_kinds()) out << "  " << name << '\n';
    out << "\nrecipes:\n";
    for (const auto& r : recipes()) {
        out << "  " << r.name;
        for (std::size_t i = r.name.size(); i < 13; ++i) out << ' ';
        out << r.description << '\n';
    }
    out << "\nusage: weylqed <experiment|recipe> [--config FILE] [--out DIR] [--jobs N] [--deterministic]\n";
}

inline int run_app(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Weyl photonic bath: band structure, emitter dynamics, bound states and spin models"};
    std::string target;
    std::string config_path;
    std::string out_dir;
    int jobs = 0;
    bool deterministic = false;
    app.add_option("target", target, "experiment kind, recipe name, or 'list'");
    app.add_option("-c,--config", config_path, "INI config file");
    app.add_option("-o,--out", out_dir, "output directory (default: runs/<name>)");
    app.add_option("-j,--jobs", jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_flag("--deterministic", deterministic, "full-precision output and fixed reduction order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return invalid_input;
    }

    if (target == "list" || (target.empty() && config_path.empty())) {
        print_catalog(out);
        return ok;
    }

    try {
        ExperimentConfig cfg;
        if (const Recipe* r = find_recipe(target)) {
            if (!config_path.empty()) throw InvalidInput("a recipe cannot be combined with --config");
            cfg = parse_config(r->config);
        } else {
            std::optional<ExperimentKind> kind;
            if (!target.empty()) {
                kind = parse_kind(target);
                if (!kind) throw InvalidInput("unknown experiment or recipe '" + target + "'");
            }
            std::string text;
            if (!config_path.empty()) {
                std::ifstream in(config_path, std::ios::binary);
                if (!in) throw InvalidInput("cannot read config " + config_path);
                std::ostringstream buf;
                buf << in.rdbuf();
                text = buf.str();
            } else if (kind == ExperimentKind::dynamics || kind == ExperimentKind::boundstate) {
                text = "[emitter]\nx = 0\ny = 0\nz = 0\ndetuning = 0\ncoupling = 0.5\n"; // bare run: one emitter at the origin
            }
            cfg = parse_config(text, kind);
        }
        parallel::set_jobs(jobs);
        if (cfg.name.empty()) cfg.name = kind_name(cfg.kind);

        fs::path dir = out_dir.empty() ? fs::path(cfg.output.empty() ? "runs/" + cfg.name : cfg.output) : fs::path(out_dir);
        const RunResult res = run(cfg, dir, deterministic);
        out << kind_name(cfg.kind) << " '" << cfg.name << "' -> " << res.directory.string() << '\n';
        for (const auto& f : res.manifest["files"]) out << "  " << f["path"].get<std::string>() << '\n';
        out << "  manifest.json\n";
        return ok;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_failure;
    } catch (const InvalidInput& e) {
        err << "invalid input: " << e.what() << '\n';
        return invalid_input;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return io_failure;
    }
}

} // namespace weylqed::cli
