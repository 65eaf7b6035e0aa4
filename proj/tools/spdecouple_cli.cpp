#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "spdecouple/config.hpp"
#include "spdecouple/errors.hpp"
#include "spdecouple/experiments.hpp"

namespace {

using spdecouple::ExperimentConfig;
using spdecouple::ExperimentKind;

struct RunFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::string out = "out";
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config_path, "Config file (key = value)");
    cmd->add_option("--seed", f.seed, "Master seed (overrides the config)");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--threads", f.threads, "Worker threads (HARNESS_THREADS overrides)");
}

int run(ExperimentKind kind, const RunFlags& f) {
    ExperimentConfig c = f.config_path.empty() ? spdecouple::default_config(kind)
                                                : spdecouple::load_config(f.config_path);
    if (c.experiment != kind) {
        throw spdecouple::ConfigError("config experiment '" + spdecouple::to_string(c.experiment) +
                                      "' does not match subcommand");
    }
    if (f.seed) c.seed = *f.seed;
    if (f.threads) c.threads = *f.threads;
    const auto rb = spdecouple::run_experiment(c, f.out);
    std::cout << rb.summary.dump(2) << '\n';
    return 0;
}

// Prints every check of summary.json files under `dir`; exit status 1 if any failed.
int report(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw spdecouple::ConfigError("report: '" + dir + "' is not a directory");
    std::vector<fs::path> summaries;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "summary.json") summaries.push_back(entry.path());
    }
    std::sort(summaries.begin(), summaries.end());
    if (summaries.empty()) throw spdecouple::ConfigError("report: no summary.json under '" + dir + "'");
    bool all_ok = true;
    for (const auto& p : summaries) {
        std::ifstream in(p);
        const auto js = nlohmann::json::parse(in);
        std::cout << p.parent_path().string() << " (" << js.value("experiment", "?") << ")\n";
        if (!js.contains("checks")) continue;
        for (const auto& [name, ok] : js["checks"].items()) {
            const bool pass = ok.get<bool>();
            all_ok = all_ok && pass;
            std::cout << "  " << (pass ? "PASS " : "FAIL ") << name << '\n';
        }
    }
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupling experiments for stochastic reaction-diffusion and Burgers equations"};
    app.require_subcommand(1);

    const std::pair<const char*, ExperimentKind> kinds[] = {
        {"lyapunov", ExperimentKind::LyapunovBuild},
        {"rd-couple", ExperimentKind::RdCouple},
        {"burgers-staged", ExperimentKind::BurgersStaged},
        {"calibrate", ExperimentKind::Calibrate},
        {"ou-validate", ExperimentKind::OuValidate},
        {"generator-check", ExperimentKind::GeneratorCheck},
    };
    RunFlags flags;
    std::optional<ExperimentKind> chosen;
    for (const auto& [name, kind] : kinds) {
        auto* cmd = app.add_subcommand(name, "Run the " + spdecouple::to_string(kind) + " experiment");
        add_run_flags(cmd, flags);
        cmd->callback([&chosen, k = kind] { chosen = k; });
    }
    std::string report_dir = "out";
    auto* rep = app.add_subcommand("report", "Summarize pass/fail checks of finished runs");
    rep->add_option("--out", report_dir, "Directory holding run outputs");

    CLI11_PARSE(app, argc, argv);
    try {
        if (chosen) return run(*chosen, flags);
        return report(report_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
