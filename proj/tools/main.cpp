#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taskweave/scenario.hpp"

namespace {

using tw::cli::ScenarioConfig;

struct ConfigFlags {
    std::string config_path;
    std::map<std::string, std::string> staged;
    std::vector<std::pair<std::string, CLI::Option*>> options;
};

// Every config key becomes a flag; precedence is flag > environment > file,
// so flags are applied last and only when actually given.
void add_config_flags(CLI::App* cmd, ConfigFlags& fl) {
    cmd->add_option("--config", fl.config_path, "scenario config file (key=value lines)");
    for (const std::string& key : tw::cli::config_keys()) {
        CLI::Option* opt =
            cmd->add_option("--" + key, fl.staged[key], "config key " + key);
        fl.options.emplace_back(key, opt);
    }
}

ScenarioConfig assemble(const ConfigFlags& fl) {
    ScenarioConfig cfg;
    if (!fl.config_path.empty())
        tw::cli::apply_config_file(cfg, fl.config_path);
    tw::cli::apply_env(cfg);
    for (const auto& [key, opt] : fl.options)
        if (opt->count() > 0)
            tw::cli::apply_key(cfg, key, fl.staged.at(key));
    cfg.validate();
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw tw::ConfigError("cannot write '" + path + "'");
    os << text;
}

// Sweeps write one artifact per tile; a single-point run keeps the exact
// path.
std::string point_path(const std::string& base, int tile, bool multi) {
    if (!multi || base == "-")
        return base;
    return base + ".t" + std::to_string(tile);
}

void emit_points(const std::vector<tw::cli::PointResult>& points, const std::string& csv_path,
                 const std::string& log_path, const std::string& dot_path) {
    std::string csv = tw::cli::metrics_to_csv(points);
    if (csv_path.empty() || csv_path == "-")
        std::cout << csv;
    else
        write_text(csv_path, csv);
    bool multi = points.size() > 1;
    for (const auto& p : points) {
        if (!log_path.empty())
            write_text(point_path(log_path, p.tile, multi), p.run_log);
        if (!dot_path.empty())
            write_text(point_path(dot_path, p.tile, multi), p.dot);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"taskweave benchmark harness"};
    app.require_subcommand(1);

    ConfigFlags run_fl, sweep_fl, dag_fl;
    std::string run_csv, run_log, run_dot;
    std::string sweep_csv, sweep_log, sweep_dot;
    std::string trace_input = "-";
    std::string dag_out = "-";
    int dag_iteration = -1;

    CLI::App* run = app.add_subcommand("run", "run the first sweep point, emit metrics CSV");
    add_config_flags(run, run_fl);
    run->add_option("--csv", run_csv, "metrics CSV path ('-' = stdout, the default)");
    run->add_option("--run-log", run_log, "write the run-log TSV here");
    run->add_option("--dot", run_dot, "write the dependency DAG (Graphviz) here");

    CLI::App* sweep = app.add_subcommand("sweep", "run every sweep point in the tiles list");
    add_config_flags(sweep, sweep_fl);
    sweep->add_option("--csv", sweep_csv, "metrics CSV path ('-' = stdout, the default)");
    sweep->add_option("--run-log", sweep_log, "run-log TSV path (per-tile suffix on sweeps)");
    sweep->add_option("--dot", sweep_dot, "DAG path (per-tile suffix on sweeps)");

    CLI::App* trace = app.add_subcommand("trace", "per-worker blocked/suspended report");
    trace->add_option("--input", trace_input, "run-log TSV path ('-' = stdin)");

    CLI::App* dag = app.add_subcommand("dag", "export the dependency DAG as Graphviz text");
    add_config_flags(dag, dag_fl);
    dag->add_option("--iteration", dag_iteration,
                    "restrict to one iteration's tasks (-1 = whole DAG)");
    dag->add_option("--out", dag_out, "output path ('-' = stdout)");

    try {
        app.parse(argc, argv);

        if (run->parsed()) {
            ScenarioConfig cfg = assemble(run_fl);
            auto point = tw::cli::run_point(cfg, cfg.tiles.front());
            emit_points({point}, run_csv, run_log, run_dot);
        } else if (sweep->parsed()) {
            ScenarioConfig cfg = assemble(sweep_fl);
            auto points = tw::cli::run_sweep(cfg);
            emit_points(points, sweep_csv, sweep_log, sweep_dot);
        } else if (trace->parsed()) {
            tw::cli::TraceReport rep;
            if (trace_input == "-") {
                rep = tw::cli::summarize_trace(std::cin);
            } else {
                std::ifstream is(trace_input);
                if (!is)
                    throw tw::ConfigError("cannot open '" + trace_input + "'");
                rep = tw::cli::summarize_trace(is);
            }
            std::cout << tw::cli::render_trace_report(rep);
        } else if (dag->parsed()) {
            ScenarioConfig cfg = assemble(dag_fl);
            write_text(dag_out, tw::cli::export_dag(cfg, cfg.tiles.front(), dag_iteration));
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const tw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const tw::ContractViolation& e) {
        std::cerr << "contract violation: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
