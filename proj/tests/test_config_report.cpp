#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eiglab/config.hpp"
#include "eiglab/errors.hpp"
#include "eiglab/report.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("eiglab_test_" + tag);
    fs::remove_all(dir);
    return dir;
}

template <typename F> std::string config_error_of(F&& f) {
    try {
        f();
    } catch (const eiglab::ConfigError& e) {
        return e.what();
    }
    return {};
}

bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

const char* tie_config = R"({
  "field": {
    "components": [
      {"kind": "point", "label": "node", "anchor": [0.25], "transverse_b": [[-1.0]], "c": 0.5},
      {"kind": "cycle", "label": "loop", "anchor": [0.0, 0.0], "transverse_b": [[-1.0]],
       "period": 1.0, "cycle_modes": [[0.5, 0.0]]}
    ]
  }
})";

} // namespace

TEST_CASE("minimal config fills defaults") {
    const auto cfg = eiglab::parse_config(R"({"field": {"catalog": "torus_irrational_flow"}})");
    CHECK(cfg.field.catalog == "torus_irrational_flow");
    CHECK(cfg.field.components.empty());
    REQUIRE(cfg.task.epsilons.size() == 3);
    CHECK(cfg.task.epsilons.front() == 1e-2);
    CHECK(cfg.task.grid == 0);
    CHECK(cfg.task.seed == 1);
    CHECK(cfg.output.directory == "out");
    CHECK(cfg.output.csv);
    CHECK(cfg.output.json);
}

TEST_CASE("config round-trips through serialization byte for byte") {
    const char* text = R"({
      "field": {"catalog": "circle_sink_source", "c_const": 0.3, "c_cos1": 0.125},
      "task": {"epsilons": [0.05, 0.01], "grid": 64, "tolerance": 1e-9, "seed": 42,
               "pi_weight": 3.5, "convention": "unstable", "time": 0.4, "horizon": 0.2,
               "paths": 5000, "minimize_nodes": 48, "points": [[0.25], [0.75]],
               "matrix": [[-2.0]], "t_small": 0.002, "t_large": 40.0,
               "benchmarks": ["circle_sink_source"], "match_tol": 0.05},
      "output": {"directory": "scratch", "csv": true, "json": false}
    })";
    const auto cfg = eiglab::parse_config(text);
    CHECK(cfg.task.convention == "unstable");
    CHECK(cfg.task.seed == 42);
    CHECK(cfg.task.points.size() == 2);
    CHECK_FALSE(cfg.output.json);
    const std::string once = eiglab::serialize_config(cfg);
    const auto reparsed = eiglab::parse_config(once);
    const std::string twice = eiglab::serialize_config(reparsed);
    CHECK(once == twice);
    CHECK(reparsed.task.tolerance == cfg.task.tolerance);
    CHECK(reparsed.field.params.c_cos1 == 0.125);
}

TEST_CASE("explicit component list round-trips with its Fourier tables") {
    const auto cfg = eiglab::parse_config(tie_config);
    REQUIRE(cfg.field.catalog.empty());
    REQUIRE(cfg.field.components.size() == 2);
    const std::string once = eiglab::serialize_config(cfg);
    const auto reparsed = eiglab::parse_config(once);
    CHECK(eiglab::serialize_config(reparsed) == once);
    CHECK(reparsed.field.components[1].cycle_modes.size() == 1);
    CHECK(reparsed.field.components[1].cycle_modes[0][0] == 0.5);

    const auto comps = eiglab::build_components(cfg.field);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].kind == eiglab::RecurrentComponent::Kind::Point);
    CHECK(comps[1].kind == eiglab::RecurrentComponent::Kind::Cycle);
    CHECK(comps[1].cycle_c(0.37) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("unknown keys are rejected with a path and a suggestion") {
    const auto msg = config_error_of([] {
        eiglab::parse_config(R"({"task": {"epsillon": [0.01]}})");
    });
    CHECK(contains(msg, "task.epsillon"));
    CHECK(contains(msg, "epsilons"));

    const auto root_msg = config_error_of([] { eiglab::parse_config(R"({"feild": {}})"); });
    CHECK(contains(root_msg, "feild"));
    CHECK(contains(root_msg, "field"));

    const auto far_msg = config_error_of([] {
        eiglab::parse_config(R"({"output": {"zzzz": 1}})");
    });
    CHECK(contains(far_msg, "output.zzzz"));
    CHECK(contains(far_msg, "allowed keys"));
}

TEST_CASE("type and range validation") {
    CHECK(contains(config_error_of([] { eiglab::parse_config("{"); }), "not valid JSON"));
    CHECK(contains(config_error_of([] { eiglab::parse_config("3"); }), "must be an object"));
    CHECK(contains(config_error_of([] {
              eiglab::parse_config(R"({"task": {"grid": "large"}})");
          }),
          "task.grid"));
    CHECK(contains(config_error_of([] {
              eiglab::parse_config(R"({"task": {"epsilons": [0.001, 0.01]}})");
          }),
          "strictly decreasing"));
    CHECK(contains(config_error_of([] {
              eiglab::parse_config(R"({"task": {"pi_weight": 2.0}})");
          }),
          "pi_weight"));
    CHECK(contains(config_error_of([] {
              eiglab::parse_config(R"({"task": {"convention": "sideways"}})");
          }),
          "convention"));
    CHECK(contains(config_error_of([] {
              eiglab::parse_config(R"({"field": {"catalog": "border_flow"}})");
          }),
          "known catalogs"));
    CHECK(contains(config_error_of([] {
              eiglab::parse_config(
                  R"({"field": {"catalog": "circle_sink_source", "components": []}})");
          }),
          "mutually exclusive"));
    CHECK(contains(config_error_of([] {
              eiglab::parse_config(R"({"task": {"benchmarks": ["nowhere"]}})");
          }),
          "nowhere"));
}

TEST_CASE("component validation names the offending component") {
    const auto msg = config_error_of([] {
        eiglab::parse_config(R"({"field": {"components": [
            {"kind": "point", "label": "spiral", "anchor": [0.0],
             "transverse_b": [[0.0, 1.0], [-1.0, 0.0]], "c": 1.0}
        ]}})");
    });
    CHECK(contains(msg, "spiral"));

    const auto even_msg = config_error_of([] {
        eiglab::parse_config(R"({"field": {"components": [
            {"kind": "cycle", "label": "loop", "period": 1.0, "transverse_b": [[-1.0]],
             "cycle_modes": [[0.5, 0.0], [0.1, 0.0]]}
        ]}})");
    });
    CHECK(contains(even_msg, "cycle_modes"));

    const auto scope_msg = config_error_of([] {
        eiglab::parse_config(R"({"field": {"components": [
            {"kind": "cycle", "label": "loop", "period": 1.0, "transverse_b": [[-1.0]],
             "cycle_modes": [[0.5, 0.0]], "c": 1.0}
        ]}})");
    });
    CHECK(contains(scope_msg, "does not apply"));
}

TEST_CASE("build_field requires a catalog entry") {
    const auto cfg = eiglab::parse_config(tie_config);
    CHECK_THROWS_AS(eiglab::build_field(cfg.field), eiglab::ConfigError);
    eiglab::FieldConfig catalog;
    catalog.catalog = "torus_shear_cycles";
    CHECK(eiglab::build_field(catalog).components.size() == 2);
}

TEST_CASE("load_config reads files and reports unreadable paths") {
    const fs::path dir = fresh_dir("load");
    fs::create_directories(dir);
    const fs::path file = dir / "run.json";
    std::ofstream(file) << R"({"field": {"catalog": "circle_sink_source"}})";
    CHECK(eiglab::load_config(file.string()).field.catalog == "circle_sink_source");
    CHECK(contains(config_error_of([&] { eiglab::load_config((dir / "nope.json").string()); }),
                   "cannot read"));
}

TEST_CASE("numeric formatting and content hashing are stable") {
    CHECK(eiglab::format_g17(1.0) == "1");
    CHECK(eiglab::format_g17(0.1) == "0.10000000000000001");
    CHECK(eiglab::format_g17(6.2831853071795862) == "6.2831853071795862");
    CHECK(eiglab::content_hash_hex("") == "cbf29ce484222325");
    CHECK(eiglab::content_hash_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("artifact writer honors format flags and records entries") {
    const fs::path dir = fresh_dir("writer");
    eiglab::ArtifactWriter writer(dir.string(), false, true);
    writer.write_csv("table.csv", {"a", "b"}, {{"1", "2"}});
    writer.write_json("doc.json", "{}\n");
    writer.write_text("note.txt", "hello\n");
    CHECK_FALSE(fs::exists(dir / "table.csv"));
    CHECK(fs::exists(dir / "doc.json"));
    REQUIRE(writer.entries().size() == 2);
    writer.write_manifest("none", "(defaults)", "0", 7, 2);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["outputs"].size() == 2);
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["outputs"][0]["name"] == "doc.json");
    CHECK(manifest["outputs"][0]["hash"] == eiglab::content_hash_hex("{}\n"));
}

TEST_CASE("thread budget honors the environment variable") {
    setenv("EIGLAB_THREADS", "3", 1);
    CHECK(eiglab::resolve_threads() == 3);
    unsetenv("EIGLAB_THREADS");
    CHECK(eiglab::resolve_threads() >= 1);
}

TEST_CASE("pressure command reports the dimension rule on ties") {
    auto cfg = eiglab::parse_config(tie_config);
    const fs::path dir = fresh_dir("pressure");
    cfg.output.directory = dir.string();
    CHECK(eiglab::run_task("pressure", cfg, "(test)") == 0);

    const auto rows = read_csv(dir / "pressure.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0][0] == "label");
    // Both components sit at pressure 1.5, but only the cycle keeps weight.
    CHECK(rows[1][0] == "node");
    CHECK(rows[1][4] == "1.5");
    CHECK(rows[1][6] == "1");
    CHECK(rows[1][7] == "0");
    CHECK(rows[2][0] == "loop");
    CHECK(rows[2][4] == "1.5");
    CHECK(rows[2][7] == "1");

    const auto doc = nlohmann::json::parse(slurp(dir / "pressure.json"));
    REQUIRE(doc["eligible"].size() == 1);
    CHECK(doc["eligible"][0] == "loop");
    CHECK(doc["argmax"].size() == 2);

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    bool listed = false;
    for (const auto& entry : manifest["outputs"])
        if (entry["name"] == "pressure.csv") {
            listed = true;
            CHECK(entry["hash"] == eiglab::content_hash_hex(slurp(dir / "pressure.csv")));
        }
    CHECK(listed);
}

TEST_CASE("profile command writes atoms and longitudinal densities") {
    eiglab::RunConfig cfg;
    cfg.field.catalog = "torus_shear_cycles";
    const fs::path dir = fresh_dir("profile");
    cfg.output.directory = dir.string();
    CHECK(eiglab::run_task("profile", cfg, "(test)") == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "profile.json"));
    REQUIRE(doc["atoms"].size() == 1);
    CHECK(doc["atoms"][0]["label"] == "stable_cycle");
    CHECK(std::abs(doc["weight_sum"].get<double>() - 1.0) <= 1e-12);
    const auto rows = read_csv(dir / "density_stable_cycle.csv");
    CHECK(rows.size() == 513); // header plus the default cycle grid
}

TEST_CASE("eigen command reproduces a constant-killing eigenvalue") {
    eiglab::RunConfig cfg;
    cfg.field.catalog = "circle_sink_source";
    cfg.field.params.c_const = 0.3;
    cfg.task.epsilons = {0.05};
    cfg.task.grid = 64;
    const fs::path dir = fresh_dir("eigen");
    cfg.output.directory = dir.string();
    CHECK(eiglab::run_task("eigen", cfg, "(test)") == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "eigen.json"));
    CHECK(std::abs(doc["lambda"].get<double>() - 0.3) <= 1e-10);
    CHECK(doc["n"] == 64);
    CHECK(doc["components"].size() == 2);
    CHECK(read_csv(dir / "measure.csv").size() == 65);
}

TEST_CASE("study command emits the pinned table schema deterministically") {
    eiglab::RunConfig cfg;
    cfg.field.catalog = "circle_sink_source";
    cfg.field.params.c_const = 0.2;
    cfg.field.params.c_cos1 = 0.3;
    cfg.task.epsilons = {5e-2, 2e-2};
    cfg.task.grid = 64;
    const fs::path dir_a = fresh_dir("study_a");
    const fs::path dir_b = fresh_dir("study_b");
    cfg.output.directory = dir_a.string();
    CHECK(eiglab::run_task("study", cfg, "(test)") == 0);
    cfg.output.directory = dir_b.string();
    CHECK(eiglab::run_task("study", cfg, "(test)") == 0);

    const auto rows = read_csv(dir_a / "study.csv");
    REQUIRE(rows.size() == 3);
    const auto comps = eiglab::build_components(cfg.field);
    std::vector<std::string> expected = {"epsilon", "lambda", "dmax"};
    for (const auto& c : comps) expected.push_back("mass_" + c.label);
    for (const auto& c : comps) expected.push_back("gamma_" + c.label);
    CHECK(rows[0] == expected);

    // config.json embeds the (different) output directory, so only the
    // numerical artifacts are expected to repeat byte for byte.
    CHECK(slurp(dir_a / "study.csv") == slurp(dir_b / "study.csv"));
    CHECK(slurp(dir_a / "study.json") == slurp(dir_b / "study.json"));
}

TEST_CASE("mc command matches the reference within noise and repeats exactly") {
    eiglab::RunConfig cfg;
    cfg.field.catalog = "circle_sink_source";
    cfg.field.params.c_const = 0.3;
    cfg.field.params.c_cos1 = 0.2;
    cfg.task.epsilons = {0.05};
    cfg.task.grid = 64;
    cfg.task.time = 0.2;
    cfg.task.paths = 2000;
    cfg.task.points = {{0.25}};
    const fs::path dir_a = fresh_dir("mc_a");
    const fs::path dir_b = fresh_dir("mc_b");
    cfg.output.directory = dir_a.string();
    CHECK(eiglab::run_task("mc", cfg, "(test)") == 0);
    cfg.output.directory = dir_b.string();
    CHECK(eiglab::run_task("mc", cfg, "(test)") == 0);
    CHECK(slurp(dir_a / "mc.csv") == slurp(dir_b / "mc.csv"));

    const auto rows = read_csv(dir_a / "mc.csv");
    REQUIRE(rows.size() == 2);
    const double z = std::stod(rows[1][4]);
    CHECK(std::abs(z) <= 5.0);
}

TEST_CASE("rate command agrees between shooting and minimization") {
    eiglab::RunConfig cfg;
    cfg.field.catalog = "circle_sink_source";
    cfg.task.horizon = 0.2;
    cfg.task.minimize_nodes = 48;
    cfg.task.points = {{0.3}};
    const fs::path dir = fresh_dir("rate");
    cfg.output.directory = dir.string();
    CHECK(eiglab::run_task("rate", cfg, "(test)") == 0);
    const auto rows = read_csv(dir / "rate.csv");
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(rows[1][3]) <= 1e-3);       // relative gap
    CHECK(std::stod(rows[1][5]) <= 1e-8 * 0.2); // Hamiltonian drift
    CHECK(rows[1][7] == "1");                   // certified
}

TEST_CASE("task failures keep partial artifacts and exit 1") {
    eiglab::RunConfig cfg;
    cfg.field.catalog = "circle_sink_source";
    cfg.task.points = {{0.3, 0.4}}; // wrong dimension for the circle
    const fs::path dir = fresh_dir("fail");
    cfg.output.directory = dir.string();
    CHECK(eiglab::run_task("rate", cfg, "(test)") == 1);
    CHECK(fs::exists(dir / "config.json"));
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("ou command meets the advertised tolerances on the default block") {
    eiglab::RunConfig cfg;
    const fs::path dir = fresh_dir("ou");
    cfg.output.directory = dir.string();
    CHECK(eiglab::run_task("ou", cfg, "(test)") == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "ou.json"));
    for (const auto& item : doc["small_time"])
        CHECK(item["deviation"].get<double>() <= 0.01);
    for (const auto& item : doc["large_time"])
        CHECK(item["deviation"].get<double>() <= 1e-6);
}

TEST_CASE("discriminate command emits one verdict row per benchmark") {
    eiglab::RunConfig cfg;
    cfg.field.params.c_const = 0.5;
    cfg.field.params.c_cos1 = 0.02;
    cfg.task.benchmarks = {"circle_sink_source"};
    cfg.task.epsilons = {3e-3, 1e-3};
    const fs::path dir_a = fresh_dir("disc_a");
    const fs::path dir_b = fresh_dir("disc_b");
    cfg.output.directory = dir_a.string();
    CHECK(eiglab::run_task("discriminate", cfg, "(test)") == 0);
    cfg.output.directory = dir_b.string();
    CHECK(eiglab::run_task("discriminate", cfg, "(test)") == 0);
    CHECK(slurp(dir_a / "discriminate.csv") == slurp(dir_b / "discriminate.csv"));

    const auto rows = read_csv(dir_a / "discriminate.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][0] == "circle_sink_source");
    // Records the measured outcome for this configuration: the extrapolated
    // eigenvalue tracks the source's unstable-convention value.
    CHECK(rows[1][6] == "unstable");
    const double gap_u = std::stod(rows[1][5]);
    CHECK(gap_u <= 0.1);
}

TEST_CASE("unknown commands are configuration errors") {
    eiglab::RunConfig cfg;
    const fs::path dir = fresh_dir("unknown");
    cfg.output.directory = dir.string();
    CHECK(eiglab::run_task("bogus", cfg, "(test)") == 2);
}

TEST_CASE("check command passes on the default configuration") {
    eiglab::RunConfig cfg;
    const fs::path dir = fresh_dir("check");
    cfg.output.directory = dir.string();
    CHECK(eiglab::run_task("check", cfg, "(defaults)") == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "check.json"));
    CHECK(doc["passed"] == true);
    CHECK(doc["results"].size() == 12);
}
