#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "weylqed/cli/app.hpp"

using namespace weylqed;
using namespace weylqed::cli;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "weylqed");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_app(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("weylqed_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = scratch(name + ".cfg");
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

} // namespace

TEST(Catalog, NoArgumentsListsEveryRecipe) {
    const auto r = invoke({});
    EXPECT_EQ(r.code, 0);
    EXPECT_GE(recipes().size(), 14u);
    for (const char* name : {"fig1b", "fig1c", "fig1d", "fig1d_inset", "fig2a", "fig2b", "fig2c", "fig2d", "fig2e",
                             "fig2f", "fig3", "fig4a", "fig4b", "fig4c", "fig4d", "fig4e", "fig4f"}) {
        EXPECT_NE(find_recipe(name), nullptr) << name;
        EXPECT_NE(r.out.find(std::string("  ") + name + " "), std::string::npos) << name;
    }
    EXPECT_EQ(invoke({"list"}).out, r.out);
}

TEST(Catalog, EveryRecipeParsesStrictly) {
    for (const auto& rec : recipes()) {
        EXPECT_NO_THROW(parse_config(rec.config)) << rec.name;
        EXPECT_FALSE(rec.description.empty());
    }
}

TEST(Catalog, BerryRecipeDeclaresRangeNineAtZeroOffset) {
    const auto cfg = parse_config(find_recipe("fig4d")->config);
    EXPECT_EQ(cfg.kind, ExperimentKind::berry);
    EXPECT_EQ(cfg.numerics.range, 9.0);
    EXPECT_EQ(cfg.lattice.offset, 0.0);
}

TEST(Config, EmptyConfigHasNoExperiment) {
    const fs::path cfg = write_config("empty", "# nothing here\n");
    const auto r = invoke({"--config", cfg.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("no experiment specified"), std::string::npos);
    try {
        parse_config("");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()), "no experiment specified");
    }
}

TEST(Config, UnknownKeysAreRejectedWithLine) {
    const fs::path cfg = write_config("unknown", "experiment = bands\n[lattice]\noffset = 0\nofset = 1\n");
    const auto r = invoke({"--config", cfg.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("ofset"), std::string::npos);
}

TEST(Config, StructuralErrorsCarryLineNumbers) {
    auto line_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.line();
        }
        return -1;
    };
    EXPECT_EQ(line_of("experiment = bands\n[lattice]\noffset = 0\noffset = 1\n"), 4);
    EXPECT_EQ(line_of("experiment = bands\n[lattice]\n[lattice]\n"), 3);
    EXPECT_EQ(line_of("experiment = bands\n[optics]\n"), 2);
    EXPECT_EQ(line_of("experiment = bands\n[lattice]\nsize = 5\n"), 2);
    EXPECT_EQ(line_of("experiment = bands\nthis line has no equals sign\n"), 2);
    EXPECT_EQ(line_of("experiment = warp\n"), 1);
    EXPECT_EQ(line_of("experiment = bands\n[numerics]\npoints = many\n"), 3);
    EXPECT_EQ(line_of("experiment = bands\n[emitter]\nx = 0\ncoupling = 0.1\n"), 2);
}

TEST(Config, ResolvedEchoFillsDefaults) {
    const auto cfg = parse_config("experiment = dos\n");
    EXPECT_EQ(cfg.resolved["lattice"]["size"], 22);
    EXPECT_EQ(cfg.resolved["numerics"]["grid"], 64);
    EXPECT_EQ(cfg.resolved["numerics"]["eta"], 0.02);
}

TEST(Config, CommandLineKindMustAgreeWithFile) {
    const fs::path cfg = write_config("mismatch", "experiment = bands\n");
    EXPECT_EQ(invoke({"dos", "--config", cfg.string()}).code, 2);
    EXPECT_EQ(invoke({"fig1b", "--config", cfg.string()}).code, 2);
    EXPECT_EQ(invoke({"nonsense"}).code, 2);
    EXPECT_EQ(invoke({"bands", "--bogus-flag"}).code, 2);
}

TEST(Run, CsvSchemaAndManifestHashes) {
    const fs::path dir = scratch("bands");
    const fs::path cfg = write_config("bands_cfg", "experiment = bands\n[numerics]\npoints = 21\n");
    const auto r = invoke({"--config", cfg.string(), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const json m = read_json(dir / "manifest.json");
    EXPECT_EQ(m["version"], version);
    EXPECT_EQ(m["experiment"], "bands");
    EXPECT_EQ(m["config"]["numerics"]["points"], 21);
    EXPECT_TRUE(m.contains("wall_time_seconds"));
    std::set<std::string> listed;
    for (const auto& f : m["files"]) {
        const fs::path p = dir / f["path"].get<std::string>();
        listed.insert(f["path"].get<std::string>());
        EXPECT_EQ(f["sha256"], sha256_file(p));
        EXPECT_EQ(f["bytes"], fs::file_size(p));
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name != "manifest.json") EXPECT_TRUE(listed.count(name)) << name;
    }
    const std::string csv = slurp(dir / "bands.csv");
    EXPECT_EQ(csv.rfind("# units: energies in J, lengths in a, times in 1/J", 0), 0u);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    EXPECT_NE(csv.find("\nkx,kz,omega_minus,omega_plus\n"), std::string::npos);
    const json s = read_json(dir / "summary.json");
    EXPECT_EQ(s["nodes"].size(), 4u);
}

TEST(Run, Sha256KnownVector) {
    const fs::path p = scratch("abc.txt");
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << "abc";
    EXPECT_EQ(sha256_file(p), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Run, DeterministicRecipesReproduceBytes) {
    for (const char* recipe : {"fig1b", "fig1c", "fig2a", "fig4f"}) {
        const fs::path a = scratch(std::string(recipe) + "_a"), b = scratch(std::string(recipe) + "_b");
        ASSERT_EQ(invoke({recipe, "--out", a.string(), "--deterministic"}).code, 0) << recipe;
        ASSERT_EQ(invoke({recipe, "--out", b.string(), "--deterministic", "--jobs", "2"}).code, 0) << recipe;
        for (const auto& entry : fs::directory_iterator(a))
            if (entry.path().extension() == ".csv") {
                const std::string x = slurp(entry.path()), y = slurp(b / entry.path().filename());
                EXPECT_FALSE(x.empty());
                EXPECT_TRUE(x == y) << recipe << ' ' << entry.path().filename();
            }
    }
}

TEST(Run, NumericalFailureExitsThreeAndLeavesNothing) {
    const fs::path dir = scratch("nobound");
    const fs::path cfg = write_config(
        "nobound_cfg", "experiment = boundstate\n[lattice]\nsize = 22\n[emitter]\nx = 0\ny = 0\nz = 0\n"
                       "detuning = 3\ncoupling = 0.5\n[numerics]\nmode = residue_sweep\noffsets = 0, 1\n");
    const auto r = invoke({"--config", cfg.string(), "--out", dir.string()});
    EXPECT_EQ(r.code, 3) << r.err;
    EXPECT_NE(r.err.find("no bound state"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir));
}

TEST(Run, RollbackRemovesPartialOutputs) {
    const fs::path dir = scratch("partial");
    OutputSet o(dir, true);
    o.csv("a.csv", "first", {"x"}, [](std::ostream& out) { out << "1\n"; });
    o.write_json("b.json", json{{"k", 1}});
    ASSERT_TRUE(fs::exists(dir / "a.csv"));
    o.rollback();
    EXPECT_FALSE(fs::exists(dir / "a.csv"));
    EXPECT_FALSE(fs::exists(dir / "b.json"));
    EXPECT_FALSE(fs::exists(dir));
}

TEST(Run, FractionalDecayRecipeReportsPlateau) {
    const fs::path dir = scratch("fig1d");
    ASSERT_EQ(invoke({"fig1d", "--out", dir.string()}).code, 0);
    const std::string csv = slurp(dir / "dynamics.csv");
    EXPECT_NE(csv.find("\nt,pop_e,pop_photon\n"), std::string::npos);
    const json s = read_json(dir / "summary.json");
    EXPECT_NEAR(s["plateau"].get<double>(), 0.886, 0.03);
    EXPECT_NEAR(s["plateau"].get<double>(), s["residue_squared"].get<double>(), 0.03);
    EXPECT_LT(s["markov_rate"].get<double>(), 1e-10);
    EXPECT_TRUE(fs::exists(dir / "markov.csv"));
}

TEST(Run, BoundStateFitRecipeReportsInverseSquare) {
    const fs::path dir = scratch("fig2d");
    ASSERT_EQ(invoke({"fig2d", "--out", dir.string()}).code, 0);
    const std::string csv = slurp(dir / "boundstate_field.csv");
    EXPECT_NE(csv.find("\nx,y,z,sublattice,abs_C\n"), std::string::npos);
    const json pl = read_json(dir / "powerlaw.json");
    EXPECT_NEAR(pl["gamma_xy"].get<double>(), 2.0, 0.2);
    EXPECT_NEAR(pl["gamma_z"].get<double>(), 2.0, 0.2);
    EXPECT_FALSE(pl["fits"].empty());
}

TEST(Run, RemainingExperimentKindsProduceOutputs) {
    struct Case {
        std::string config, file;
    };
    const std::vector<Case> cases{
        {"experiment = nodes\n[lattice]\noffset = 1\n", "nodes.csv"},
        {"experiment = spinbands\n[numerics]\nranges = 1, 3\npoints = 41\ngrid = 32\n", "spinbands.csv"},
        {"experiment = berry\n[numerics]\nrange = 3\nmesh = 16\ngrid = 32\n", "berry.csv"},
        {"experiment = dynamics\n[lattice]\nsize = 10\n[emitter.1]\nx = 0\ny = 0\nz = 0\ndetuning = critical\n"
         "coupling = 0.5\n[emitter.2]\nx = 0\ny = 0\nz = 1\ndetuning = critical\ncoupling = 0.5\n"
         "[numerics]\nt_max = 5\ndt_out = 0.5\nmarkov = false\noffsets = 0, 1\n",
         "dynamics.csv"},
        {"experiment = boundstate\n[emitter]\nx = 0\ny = 0\nz = 0\ndetuning = critical\ncoupling = 0.5\n"
         "[numerics]\nmode = residue_sweep\noffsets = 0, 1\ngrid = 22\n",
         "plateau_inset.csv"},
    };
    int i = 0;
    for (const auto& c : cases) {
        const fs::path dir = scratch("kind" + std::to_string(i));
        const fs::path cfg = write_config("kind_cfg" + std::to_string(i++), c.config);
        const auto r = invoke({"--config", cfg.string(), "--out", dir.string()});
        ASSERT_EQ(r.code, 0) << c.config << r.err;
        EXPECT_TRUE(fs::exists(dir / c.file)) << c.file;
        EXPECT_TRUE(fs::exists(dir / "summary.json"));
    }
}

TEST(Run, BareKindTargetsRunWithDefaults) {
    for (const std::string kind : {"dynamics", "boundstate"}) {
        const fs::path dir = scratch("bare_" + kind);
        const auto r = invoke({kind, "--out", dir.string()});
        ASSERT_EQ(r.code, 0) << r.err;
        const json m = read_json(dir / "manifest.json");
        EXPECT_EQ(m["config"]["emitters"].size(), 1u);
    }
}
