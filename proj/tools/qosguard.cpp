// qosguard <mode> --config <file> [--seed S] [--out DIR] [--arrivals K] [--policy dynamic|sharing]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "qosguard.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic guard-channel admission: analysis, simulation and VLC link budgets"};
    app.set_help_flag("-h,--help");

    std::string mode_name;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::optional<std::uint64_t> arrivals;
    std::optional<std::string> policy;
    unsigned jobs = 1;

    app.add_option("mode", mode_name, "analyze | simulate | compare | sweep | vlc-link")
        ->required()
        ->check(CLI::IsMember({"analyze", "simulate", "compare", "sweep", "vlc-link"}));
    app.add_option("--config", config_path, "experiment config file")->required();
    app.add_option("--seed", seed, "override experiment.seed");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--arrivals", arrivals, "override simulation.arrivals")->check(CLI::PositiveNumber);
    app.add_option("--policy", policy, "override simulation.policy")->check(CLI::IsMember({"dynamic", "sharing"}));
    app.add_option("-j,--jobs", jobs, "parallel simulation runs")->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    qosguard::ExperimentSpec spec;
    try {
        std::ifstream in(config_path);
        if (!in) throw qosguard::ConfigError("", 0, "cannot read config file '" + config_path + "'");
        std::ostringstream text;
        text << in.rdbuf();
        spec = qosguard::parse_config(text.str());
        spec.mode = *qosguard::parse_mode(mode_name);
        if (seed) spec.seed = *seed;
        if (arrivals) spec.simulation.arrivals = *arrivals;
        if (policy)
            spec.simulation.policy =
                *policy == "dynamic" ? qosguard::Policy::dynamic_reservation : qosguard::Policy::complete_sharing;
        qosguard::validate(spec);
    } catch (const qosguard::ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return kConfigError;
    }
    for (const auto& w : spec.warnings) std::cerr << "warning: " << w << "\n";

    try {
        const auto result = qosguard::run_experiment(spec, out_dir, {jobs});
        for (const auto& f : result.files) std::cout << f.string() << "\n";
        if (spec.mode == qosguard::Mode::vlc_link) {
            std::ifstream budget(std::filesystem::path(out_dir) / "link_budget.csv");
            std::cout << budget.rdbuf();
        }
    } catch (const qosguard::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return 0;
}
