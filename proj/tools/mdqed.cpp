// Command-line front end: run, validate, converge and sweep scenario files.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdqed/mdqed.hpp"

namespace {

struct Common {
    std::string config;
    std::string out_dir;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("config", c.config, "Scenario file (JSON)")->required();
    cmd->add_option("--out-dir", c.out_dir, "Directory for report files (overrides run.output.directory)");
    cmd->add_flag("-q,--quiet", c.quiet, "Do not print the summary block");
}

int finish(const mdqed::RunReport& rep, mdqed::Scenario& sc, const Common& c, const mdqed::Trajectory* tr) {
    if (!c.out_dir.empty()) sc.run.output.directory = c.out_dir;
    mdqed::write_report(rep, sc.run.output, tr);
    if (!c.quiet) std::cout << mdqed::report_summary(rep);
    std::cout << "report: " << mdqed::output_path(sc.run.output, sc.run.output.csv).string() << '\n';
    return rep.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Atomic emission in a medium-filled cavity: spectral rates, time-domain checks and sweeps"};
    app.require_subcommand(1);

    Common run_opt, val_opt, conv_opt, sweep_opt;
    std::string mode_text;
    std::vector<std::string> params, values;

    auto* run_cmd = app.add_subcommand("run", "Run the scenario in its configured mode");
    add_common(run_cmd, run_opt);
    run_cmd->add_option("--mode", mode_text, "Override run.mode")->check(CLI::IsMember({"spectral", "dynamics", "both"}));

    auto* val_cmd = app.add_subcommand("validate", "Check a scenario and print it with defaults filled in");
    val_cmd->add_option("config", val_opt.config, "Scenario file (JSON)")->required();

    auto* conv_cmd = app.add_subcommand("converge", "Spectral convergence ladder only");
    add_common(conv_cmd, conv_opt);

    auto* sweep_cmd = app.add_subcommand("sweep", "Cartesian sweep over numeric scenario fields");
    add_common(sweep_cmd, sweep_opt);
    sweep_cmd->add_option("--param", params, "Field as JSON pointer (/atom/position/2) or dotted path; repeatable")
        ->required();
    sweep_cmd->add_option("--values", values, "Comma list or start:stop:count, one per --param")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? mdqed::exit_ok : mdqed::exit_usage;
    }

    try {
        if (*val_cmd) {
            const auto sc = mdqed::load_scenario(val_opt.config);
            std::cout << sc.canonical.dump(2) << '\n';
            std::cerr << "valid: " << sc.id << " (sha256 " << mdqed::config_hash(sc.canonical) << ")\n";
            return mdqed::exit_ok;
        }
        if (*run_cmd) {
            auto sc = mdqed::load_scenario(run_opt.config);
            std::optional<mdqed::RunMode> mode;
            if (mode_text == "spectral") mode = mdqed::RunMode::spectral;
            if (mode_text == "dynamics") mode = mdqed::RunMode::dynamics;
            if (mode_text == "both") mode = mdqed::RunMode::both;
            mdqed::Trajectory tr;
            const auto rep = mdqed::run_scenario(sc, mode, {}, &tr);
            return finish(rep, sc, run_opt, &tr);
        }
        if (*conv_cmd) {
            auto sc = mdqed::load_scenario(conv_opt.config);
            const auto rep = mdqed::run_scenario(sc, mdqed::RunMode::spectral);
            return finish(rep, sc, conv_opt, nullptr);
        }
        if (*sweep_cmd) {
            if (params.size() != values.size()) {
                std::cerr << "error: every --param needs one --values list\n";
                return mdqed::exit_usage;
            }
            auto sc = mdqed::load_scenario(sweep_opt.config);
            std::vector<mdqed::SweepAxis> axes;
            for (std::size_t i = 0; i < params.size(); ++i) axes.push_back({params[i], mdqed::parse_values(values[i])});
            const auto rep = mdqed::run_scenario(sc, std::nullopt, axes);
            return finish(rep, sc, sweep_opt, nullptr);
        }
    } catch (const mdqed::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return mdqed::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error [io]: " << e.what() << '\n';
        return mdqed::exit_usage;
    }
    return mdqed::exit_usage;
}
