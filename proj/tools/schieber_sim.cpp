// Monte-Carlo runner for the baseline and SCHIEBER receivers.
//
//   schieber_sim run --config configs/fig5_jammer.json --out out/fig5 [--trials N] [--seed S]
//                    [--mode baseline|schieber|both] [--workers W]
//   schieber_sim caf --config <path> --trial T --prn P --out <dir>
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "schieber/harness.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kIoError = 3;

using namespace schieber;

int run(const std::string& config_path, const std::string& out_dir, std::optional<int> trials,
        std::optional<std::uint64_t> seed, const std::string& mode, int workers) {
    ScenarioConfig cfg = load_scenario(config_path);
    if (trials) cfg.trial_count = *trials;
    if (seed) cfg.master_seed = *seed;
    if (mode == "both") {
        cfg.modes = {Mode::Baseline, Mode::Schieber};
    } else if (!mode.empty()) {
        cfg.modes = {parse_mode(mode)};
    }
    cfg.validate();

    std::cerr << cfg.name << ": " << cfg.trial_count << " trials, " << workers << " worker(s)\n";
    const auto result = run_scenario(cfg, workers, [](std::size_t done, std::size_t total) {
        std::cerr << "\r  " << done << "/" << total << std::flush;
    });
    std::cerr << "\n";
    emit(result, out_dir);
    for (std::size_t m = 0; m < result.modes.size(); ++m) {
        const auto rate = success_rate(result.trials[m]);
        const auto cdf = make_cdf(result.trials[m], result.modes[m]);
        std::cout << to_string(result.modes[m]) << ": success " << rate.successes << "/" << rate.trials
                  << " (95% CI " << rate.lower << ".." << rate.upper << "), median error "
                  << cdf.quantile(0.5) << " m\n";
    }
    return 0;
}

int dump_caf(const std::string& config_path, const std::string& out_dir, int trial, int prn) {
    const ScenarioConfig cfg = load_scenario(config_path);
    const Scene scene = draw_scene(cfg, static_cast<std::size_t>(trial));
    const ReceiveStream stream = synthesize(scene);
    const AcquisitionEngine engine(stream, cfg.receiver.acquisition);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir);
    for (const auto& [name, grid] : {std::pair{"baseline", engine.baseline_grid(prn)},
                                     std::pair{"jass", engine.jass_grid(prn)}}) {
        const auto path = std::filesystem::path(out_dir) / ("caf_" + std::string(name) + "_prn" + std::to_string(prn) + ".csv");
        std::ofstream out(path);
        if (!out) throw IoError("cannot open " + path.string());
        write_caf_csv(out, grid);
        if (!out) throw IoError("failed writing " + path.string());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GNSS receiver simulation under jamming and spoofing"};
    app.require_subcommand(1);

    std::string config_path, out_dir, mode;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    auto* run_cmd = app.add_subcommand("run", "run a Monte-Carlo scenario");
    run_cmd->add_option("--config", config_path, "scenario JSON")->required();
    run_cmd->add_option("--out", out_dir, "output directory")->required();
    run_cmd->add_option("--trials", trials, "override trial_count")->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed", seed, "override master_seed");
    run_cmd->add_option("--mode", mode, "baseline, schieber or both")
        ->check(CLI::IsMember({"baseline", "schieber", "both"}));
    run_cmd->add_option("--workers", workers, "parallel trials")->check(CLI::PositiveNumber);

    int trial = 0, prn = 1;
    auto* caf_cmd = app.add_subcommand("caf", "dump baseline and projected CAF grids of one trial");
    caf_cmd->add_option("--config", config_path, "scenario JSON")->required();
    caf_cmd->add_option("--out", out_dir, "output directory")->required();
    caf_cmd->add_option("--trial", trial, "trial index")->check(CLI::NonNegativeNumber);
    caf_cmd->add_option("--prn", prn, "PRN")->check(CLI::Range(1, 32));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kConfigError;
    }

    try {
        if (run_cmd->parsed()) return run(config_path, out_dir, trials, seed, mode, workers);
        return dump_caf(config_path, out_dir, trial, prn);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return kIoError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
