// cocycle-lab <task> --config <path> [--seed <u64>] [--out <dir>] [--threads <k>]
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cocycle/experiment.hpp"

namespace {

std::filesystem::path resolve_out(const std::optional<std::string>& flag, const cocycle::ExperimentConfig* cfg) {
    if (flag) return *flag;
    if (const char* env = std::getenv("COCYCLE_OUT_DIR"); env && *env) return env;
    if (cfg && !cfg->output.empty()) return cfg->output;
    return "out";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matrix Schrodinger cocycle laboratory"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    for (const auto& name : cocycle::task_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " task");
        sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "root seed (overrides the config)");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--threads", threads, "worker threads (0 = machine)")->check(CLI::NonNegativeNumber);
    }
    CLI11_PARSE(app, argc, argv);
    const std::string task = app.get_subcommands().front()->get_name();

    std::optional<cocycle::ExperimentConfig> cfg;
    try {
        cfg = cocycle::load_config(config_path, {seed, threads, task});
        const auto dir = resolve_out(out, &*cfg);
        const auto manifest = cocycle::run_experiment(*cfg, dir);
        std::cout << manifest.to_json().dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        const auto report = cocycle::error_report(e, cfg ? &*cfg : nullptr);
        std::cerr << report.dump(2) << "\n";
        std::error_code ec;
        const auto dir = resolve_out(out, cfg ? &*cfg : nullptr);
        if (std::filesystem::create_directories(dir, ec), !ec) std::ofstream(dir / "error.json") << report.dump(2) << "\n";
        const bool input_error = dynamic_cast<const cocycle::ValidationError*>(&e) != nullptr;
        return input_error ? 2 : 3;
    }
}
