#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cocycle/experiment.hpp"

using namespace cocycle;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cocycle_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

json base(const std::string& task, json params, json model = {{"kind", "free"}, {"width", 1}}) {
    return {{"version", "1"}, {"seed", 7}, {"task", task}, {"model", model}, {"params", params}};
}

}  // namespace

TEST_CASE("lyapunov task reproduces the free exponent at z = 3") {
    const auto cfg = parse_config(base("lyapunov", {{"z", 3.0}, {"n", 100000}}));
    const auto dir = scratch("lyap");
    const auto manifest = run_experiment(cfg, dir);
    const auto rows = read_csv(dir / "lyapunov.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][1] == "gamma");
    CHECK(std::abs(std::stod(rows[1][1]) - 0.96242) <= 1e-3);
    CHECK(manifest.task == "lyapunov");
    CHECK(manifest.library_version == std::string(kLibraryVersion));
}

TEST_CASE("strict parsing: unknown keys are listed together") {
    json doc = base("lyapunov", {{"z", 3.0}, {"n", 1000}, {"bogus", 1}});
    doc["modle"] = doc["model"];
    try {
        parse_config(doc);
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        const auto& keys = e.keys();
        CHECK(std::find(keys.begin(), keys.end(), "modle") != keys.end());
        CHECK(std::find(keys.begin(), keys.end(), "params.bogus") != keys.end());
        CHECK(std::string(e.what()).find("modle") != std::string::npos);
        CHECK(error_report(e)["kind"] == "schema");
    }
    json nested = base("field", {{"grid", {{"x0", 0}, {"x1", 1}, {"y0", 0}, {"y1", 1}, {"h", 0.1}, {"dx", 1}}}});
    CHECK_THROWS_AS(parse_config(nested), SchemaError);
    json model_key = base("lyapunov", {{"z", 3.0}}, {{"kind", "anderson"}, {"width", 1}, {"amp", 2}});
    CHECK_THROWS_AS(parse_config(model_key), SchemaError);
}

TEST_CASE("seed, version and task rules") {
    json doc = base("lyapunov", {{"z", 3.0}});
    doc.erase("seed");
    CHECK_THROWS_AS(parse_config(doc), SchemaError);
    CHECK(parse_config(doc, {std::uint64_t{11}, std::nullopt, std::nullopt}).seed == 11);

    json v2 = base("lyapunov", {{"z", 3.0}});
    v2["version"] = "2";
    CHECK_THROWS_AS(parse_config(v2), SchemaError);

    json t = base("lyapunov", {{"z", 3.0}});
    CHECK_THROWS_AS(parse_config(t, {std::nullopt, std::nullopt, std::string("green")}), SchemaError);
    t.erase("task");
    CHECK(parse_config(t, {std::nullopt, std::nullopt, std::string("lyapunov")}).task == "lyapunov");
    json unknown = base("spectrum", {});
    CHECK_THROWS_AS(parse_config(unknown), SchemaError);
    CHECK(task_names().size() == 13);
}

TEST_CASE("invalid model values surface as validation errors") {
    json asym = base("lyapunov", {{"z", 3.0}}, {{"kind", "constant"}, {"width", 2}, {"value", {{0, 1}, {0, 0}}}});
    CHECK_THROWS_AS(parse_config(asym), ValidationError);
    json kind = base("lyapunov", {{"z", 3.0}}, {{"kind", "nonsense"}});
    CHECK_THROWS_AS(parse_config(kind), SchemaError);
}

TEST_CASE("same config twice gives identical output hashes") {
    const auto cfg = parse_config(base("lyapunov", {{"z", json::array({0.5, 0.2})}, {"n", 2000}, {"samples", 6}},
                                       {{"kind", "anderson"}, {"width", 2}}));
    auto cfg_threads = cfg;
    cfg_threads.threads = 3;
    const auto a = run_experiment(cfg, scratch("det_a"));
    const auto b = run_experiment(cfg, scratch("det_b"));
    const auto c = run_experiment(cfg_threads, scratch("det_c"));
    CHECK(a.config_hash == b.config_hash);
    REQUIRE(a.outputs.size() == b.outputs.size());
    for (std::size_t i = 0; i < a.outputs.size(); ++i) {
        CHECK(a.outputs[i].sha256 == b.outputs[i].sha256);
        CHECK(a.outputs[i].sha256 == c.outputs[i].sha256);
    }
}

TEST_CASE("manifest hashes match the files and CSV agrees with the JSON summary") {
    const auto cfg = parse_config(base("lyapunov", {{"z", json::array({0.1, 1.0})}, {"n", 1000}, {"samples", 3}},
                                       {{"kind", "anderson"}, {"width", 3}}));
    const auto dir = scratch("consistency");
    const auto manifest = run_experiment(cfg, dir);
    const json on_disk = json::parse(slurp(dir / "manifest.json"));
    CHECK(on_disk["config_hash"] == manifest.config_hash);
    CHECK(on_disk["seed"] == 7);
    for (const auto& f : manifest.outputs) CHECK(sha256_hex(slurp(dir / f.name)) == f.sha256);

    const auto rows = read_csv(dir / "lyapunov.csv");
    const json summary = json::parse(slurp(dir / "lyapunov.json"));
    REQUIRE(rows.size() == 4);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::stod(rows[j + 1][1]) == summary["exponents"][j]["gamma"].get<double>());
        CHECK(std::stod(rows[j + 1][3]) == summary["exponents"][j]["partial_sum"].get<double>());
    }
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("every task runs on a small configuration") {
    const json anderson = {{"kind", "anderson"}, {"width", 1}};
    const std::vector<json> configs = {
        base("field", {{"grid", {{"x0", -1}, {"x1", 1}, {"y0", 0.5}, {"y1", 2}, {"h", 0.1}}}, {"n", 100}, {"samples", 1}}, anderson),
        base("riesz", {{"grid", {{"x0", -4}, {"x1", 4}, {"y0", -2}, {"y1", 2}, {"h", 0.1}}}, {"analytic", true},
                       {"strips", json::array({json::array({-1, 1})})}}),
        base("circular", {{"radius", 5.0}, {"ntheta", 64}, {"n", 200}}),
        base("ids", {{"L", 200}, {"samples", 2}, {"points", 51}}, anderson),
        base("thouless", {{"L", 200}, {"samples", 2}, {"n", 500}, {"gamma_samples", 1}, {"per_line", 3}}, anderson),
        base("scan-liminf", {{"e_min", -1}, {"e_max", 1}, {"points", 5}, {"i_max", 8}, {"ref_n", 500}, {"ref_samples", 2}}, anderson),
        base("scan-pn", {{"e_min", -1}, {"e_max", 1}, {"points", 5}, {"weight", {{"name", "power"}, {"parameter", 1.0}}}, {"n_max", 200}}, anderson),
        base("cover", {{"a", 0}, {"b", 1}, {"eps", 0.2}, {"levels", {20, 30}}, {"ref_n", 500}, {"ref_samples", 2},
                       {"gauges", json::array({{{"name", "power"}, {"parameter", 0.5}}})}}, anderson),
        base("subseq", {{"energy", 0.5}, {"n_max", 500}, {"ref_n", 500}, {"ref_samples", 2}}, anderson),
        base("restricted", {{"n", 300}, {"frames", 3}, {"ref_n", 500}, {"ref_samples", 2}}, anderson),
        base("green", {{"z", json::array({0.5, 1.0})}, {"n_max", 20}, {"L", 40}}, anderson),
        base("ldp", {{"energy", 0.5}, {"epsilon", 0.2}, {"n_list", {20, 40}}, {"ensemble", 1000}, {"ref_n", 500}, {"ref_samples", 2}}, anderson),
    };
    for (const auto& doc : configs) {
        const auto cfg = parse_config(doc);
        std::string stem = cfg.task;
        std::replace(stem.begin(), stem.end(), '-', '_');
        const auto dir = scratch("task_" + stem);
        const auto manifest = run_experiment(cfg, dir);
        CHECK_MESSAGE(fs::exists(dir / (stem + ".csv")), cfg.task);
        CHECK_MESSAGE(fs::exists(dir / (stem + ".json")), cfg.task);
        CHECK(fs::exists(dir / "manifest.json"));
        const json summary = json::parse(slurp(dir / (stem + ".json")));
        CHECK(summary["task"] == cfg.task);
        CHECK(manifest.outputs.size() == 2);
        CHECK_FALSE(manifest.outputs[0].columns.empty());
    }
}

#ifdef COCYCLE_LAB_PATH
TEST_CASE("command line: exit codes, error report and output-directory precedence") {
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    const auto good = dir / "good.json";
    const auto bad = dir / "bad.json";
    std::ofstream(good) << base("lyapunov", {{"z", 3.0}, {"n", 500}}).dump();
    json malformed = base("lyapunov", {{"z", 3.0}});
    malformed["modle"] = 1;
    std::ofstream(bad) << malformed.dump();
    const std::string lab = COCYCLE_LAB_PATH;
    const auto run = [&](const std::string& args) {
        const int status = std::system((lab + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                                        (dir / "stderr.txt").string()).c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("lyapunov --config " + good.string() + " --out " + (dir / "a").string() + " --seed 3") == 0);
    CHECK(json::parse(slurp(dir / "a" / "manifest.json"))["seed"] == 3);
    CHECK(run("lyapunov --config " + bad.string() + " --out " + (dir / "b").string()) == 2);
    const json report = json::parse(slurp(dir / "b" / "error.json"));
    CHECK(report["kind"] == "schema");
    CHECK(report["keys"][0] == "modle");
    CHECK(run("green --config " + good.string() + " --out " + (dir / "c").string()) == 2);

    setenv("COCYCLE_OUT_DIR", (dir / "env").string().c_str(), 1);
    CHECK(run("lyapunov --config " + good.string()) == 0);
    CHECK(fs::exists(dir / "env" / "manifest.json"));
    CHECK(run("lyapunov --config " + good.string() + " --out " + (dir / "flag").string()) == 0);
    CHECK(fs::exists(dir / "flag" / "manifest.json"));
    unsetenv("COCYCLE_OUT_DIR");
}
#endif
