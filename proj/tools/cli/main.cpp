// smallscat: run or validate a scattering scenario described by a YAML config.
//
// Exit codes: 0 success, 1 invalid input (config, arguments, output path),
// 2 numerical failure.

#include "config.hpp"
#include "report.hpp"
#include "run.hpp"

#include "smallscat/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitNumerical = 2;

} // namespace

int main(int argc, char** argv)
{
    using namespace smallscat;
    CLI::App app{"Small-particle electromagnetic scattering"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string format;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;

    CLI::App* run_cmd = app.add_subcommand("run", "run the configured scenario and write a report");
    run_cmd->add_option("--config", config_path, "YAML config file")->required();
    run_cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
    run_cmd->add_option("--format", format, "json or csv (overrides output.format)")
        ->check(CLI::IsMember({"json", "csv"}));
    run_cmd->add_option("--seed", seed, "random seed (overrides seed)");
    run_cmd->add_option("--threads", threads,
                        std::string("worker threads (default: ") + kThreadsEnv +
                            " or the hardware concurrency)")
        ->check(CLI::PositiveNumber);

    CLI::App* validate_cmd =
        app.add_subcommand("validate", "check a config and print it with defaults filled in");
    validate_cmd->add_option("--config", config_path, "YAML config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalid;
    }

    try {
        cli::RunConfig config = cli::load_config(config_path);
        if (*validate_cmd) {
            std::cout << cli::to_json(config).dump(2) << '\n';
            return 0;
        }
        if (!out_dir.empty()) {
            config.output.dir = out_dir;
        }
        if (!format.empty()) {
            config.output.format = format == "csv" ? cli::OutputFormat::csv : cli::OutputFormat::json;
        }
        if (seed) {
            config.seed = *seed;
        }
        if (threads) {
            set_thread_count(*threads);
        }
        const cli::RunReport report = cli::run(config);
        for (const auto& w : report.warnings) {
            std::cerr << "warning: " << w << '\n';
        }
        for (const auto& f : cli::emit(report, config.output.format, config.output.dir,
                                       config.output.name)) {
            std::cout << f.string() << '\n';
        }
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
}
