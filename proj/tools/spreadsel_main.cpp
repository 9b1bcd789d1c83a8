#include "spreadsel/error.hpp"
#include "spreadsel/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum ExitCode { kOk = 0, kValidationError = 1, kComputationError = 2 };

// Problems with the config or the input files are the caller's to fix; the
// rest come from fitting and scoring.
int exit_code_for(spreadsel::ErrorKind kind) {
    using spreadsel::ErrorKind;
    switch (kind) {
        case ErrorKind::InvalidConfig:
        case ErrorKind::MissingSeries:
        case ErrorKind::GapInDates:
        case ErrorKind::MalformedRow:
        case ErrorKind::EmptyInput:
        case ErrorKind::DomainError:
        case ErrorKind::HorizonTooLong:
        case ErrorKind::CoverageError:
        case ErrorKind::InvalidSplit:
            return kValidationError;
        default:
            return kComputationError;
    }
}

int run(const std::string& config_path, const std::string& out_override, const std::string& format_name) {
    auto config = spreadsel::ExperimentConfig::load(config_path);
    if (!out_override.empty()) config.output_dir = out_override;
    const auto format = format_name == "markdown" ? spreadsel::TableFormat::Markdown : spreadsel::TableFormat::Csv;

    const auto result = spreadsel::run_experiment(config);
    const auto tables = spreadsel::emit_tables(result.panels, format, config.output_dir);
    const auto plots = spreadsel::emit_plot_data(result, config.output_dir);
    const auto reports = spreadsel::emit_reports(result, config.output_dir);

    for (const auto& hr : result.horizons) {
        std::cout << "h=" << hr.horizon << " pair=";
        for (std::size_t i = 0; i < hr.selection.survivor_names.size(); ++i)
            std::cout << (i ? "," : "") << hr.selection.survivor_names[i];
        std::cout << " lambda=" << hr.selection.lambda_selected << '\n';
    }
    std::cout << "wrote " << tables.size() + plots.size() + reports.size() << " files to "
              << config.output_dir.string() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Yield-spread recession forecasting: pair selection, nested logit fits, evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string format = "csv";
    auto* run_cmd = app.add_subcommand("run", "Run an experiment described by a JSON config");
    run_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out", out_dir, "Output directory (overrides the config)");
    run_cmd->add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "markdown"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidationError;
    }

    try {
        return run(config_path, out_dir, format);
    } catch (const spreadsel::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kComputationError;
    }
}
