// Command line front end: design/evaluate a single link, run Monte Carlo
// sweeps, validate the closed forms against the sample-level simulator, dump
// optimizer convergence traces, print complexity tables, and plot sweep CSVs.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fdrelay/experiment.hpp"

namespace fs = std::filesystem;
using namespace fdrelay;

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    bool full_scale = false;
};

FileConfig resolve_config(const CommonArgs& args) {
    FileConfig cfg;
    cfg.system = args.full_scale ? default_config() : desk_config();
    if (!args.config_path.empty()) {
        cfg = load_config_file(args.config_path);
    }
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key = value configuration file");
    cmd->add_option("--seed", args.seed, "master seed (64-bit)");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_flag("--full-scale", args.full_scale,
                  "4x4 antennas / d=2 defaults instead of the reduced 2x2 setup");
}

std::ofstream open_out(const CommonArgs& args, const std::string& name) {
    fs::create_directories(args.out_dir);
    const fs::path p = fs::path(args.out_dir) / name;
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot open " + p.string());
    std::cout << "writing " << p.string() << "\n";
    return os;
}

std::vector<Method> parse_methods(const std::string& list) {
    std::vector<Method> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(method_from_name(item));
    }
    if (out.empty()) throw CLI::ValidationError("--method", "no methods given");
    return out;
}

std::vector<double> default_sweep_values(const std::string& param) {
    if (param == "kappa") {
        return {db_to_linear(-50), db_to_linear(-40), db_to_linear(-30), db_to_linear(-20),
                db_to_linear(-10)};
    }
    if (param == "sigma_n2") {
        return {dbm_to_mw(-60), dbm_to_mw(-50), dbm_to_mw(-40), dbm_to_mw(-30), dbm_to_mw(-20)};
    }
    if (param == "T") return {1, 10, 100, 1000};
    if (param == "dims") return {2, 3, 4};
    if (param == "rho_rr") return {db_to_linear(-20), db_to_linear(0), db_to_linear(20)};
    throw CLI::ValidationError("--param", "unknown sweep parameter " + param);
}

int cmd_run(const CommonArgs& args, const std::string& method_list) {
    const FileConfig cfg = resolve_config(args);
    RandomStream rng(args.seed);
    const ChannelSet ch = draw_channels(cfg.system, rng);
    std::cout << "method,mse,rate,status\n";
    for (Method m : parse_methods(method_list)) {
        ExperimentSpec spec;
        spec.base = cfg.system;
        spec.sweep_param = "rho_rr";
        spec.sweep_values = {cfg.system.rho_rr};
        spec.methods = {m};
        spec.trials = 1;
        spec.master_seed = args.seed;
        spec.pdd = cfg.pdd;
        const auto records = run_sweep(spec);
        const auto& r = records.front();
        std::cout << r.method << ',' << r.mse << ',' << r.rate << ',' << r.status << "\n";
    }
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& param, std::vector<double> values,
              const std::string& method_list, int trials, int jobs, bool no_timing) {
    const FileConfig cfg = resolve_config(args);
    ExperimentSpec spec;
    spec.base = cfg.system;
    spec.sweep_param = param;
    spec.sweep_values = values.empty() ? default_sweep_values(param) : values;
    spec.methods = parse_methods(method_list);
    spec.trials = trials;
    spec.master_seed = args.seed;
    spec.pdd = cfg.pdd;
    spec.jobs = jobs;
    spec.record_timing = !no_timing;

    const auto records = run_sweep(spec);
    auto os = open_out(args, "records.csv");
    write_records_csv(records, os);
    const auto rows = summarize(records);
    auto os2 = open_out(args, "summary.csv");
    write_summary_csv(rows, os2);
    int failures = 0;
    for (const auto& r : records) {
        if (r.status != "ok") ++failures;
    }
    std::cout << records.size() << " records, " << failures << " failures\n";
    return 0;
}

int cmd_validate(const CommonArgs& args, int n_sym) {
    const FileConfig cfg = resolve_config(args);
    RandomStream rng(args.seed);
    const ChannelSet ch = draw_channels(cfg.system, rng);
    const auto res = pdd::run_algorithm1(cfg.system, ch, cfg.pdd, rng);
    RandomStream sim_rng(RandomStream::derive_seed(args.seed, 7));
    const auto rep = validate(cfg.system, ch, res.design, n_sym, sim_rng);
    std::cout << "relative Frobenius errors over " << rep.n_sym << " symbols\n";
    std::cout << "  relay output covariance: " << rep.rout_cov_err << "\n";
    std::cout << "  destination covariance:  " << rep.y_cov_err << "\n";
    std::cout << "  MSE matrix:              " << rep.mse_err << "\n";
    return 0;
}

int cmd_converge(const CommonArgs& args) {
    const FileConfig cfg = resolve_config(args);
    RandomStream rng(args.seed);
    const ChannelSet ch = draw_channels(cfg.system, rng);
    const auto trace = convergence_report(cfg.system, ch, cfg.pdd, rng);
    auto os = open_out(args, "trace_outer.csv");
    trace.write_outer_csv(os);
    auto os2 = open_out(args, "trace_inner.csv");
    trace.write_inner_csv(os2);
    std::cout << (trace.converged ? "converged" : "NOT converged") << " after "
              << trace.outer.size() << " outer / " << trace.total_inner
              << " inner iterations\n";
    if (!trace.outer.empty()) {
        std::cout << "final zeta " << trace.outer.back().zeta << ", final mse "
                  << trace.outer.back().mse << "\n";
    }
    return trace.converged ? 0 : 1;
}

int cmd_complexity(const CommonArgs& args) {
    const FileConfig cfg = resolve_config(args);
    std::cout << complexity_report(cfg.system);
    return 0;
}

int cmd_plot(const CommonArgs& args, const std::string& csv_path, bool log_x, bool log_y) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open " + csv_path);
    std::string header;
    std::getline(in, header);
    if (header.rfind("sweep_param,", 0) != 0) {
        throw std::runtime_error("plot expects a summary.csv file");
    }
    std::vector<SummaryRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        SummaryRow row;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, row.sweep_param, ',');
        std::getline(ss, field, ',');
        row.sweep_value = std::stod(field);
        std::getline(ss, row.method, ',');
        std::getline(ss, field, ',');
        row.n_ok = std::stoi(field);
        std::getline(ss, field, ',');
        row.mse_q1 = std::stod(field);
        std::getline(ss, field, ',');
        row.mse_median = std::stod(field);
        std::getline(ss, field, ',');
        row.mse_q3 = std::stod(field);
        std::getline(ss, field, ',');
        row.rate_median = std::stod(field);
        rows.push_back(row);
    }
    auto os = open_out(args, "summary.svg");
    write_summary_svg(rows, os, log_x, log_y);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Impairment-aware full-duplex AF MIMO relay design and analysis"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string method_list = "aware";
    std::string sweep_param = "kappa";
    std::vector<double> sweep_values;
    int trials = 20;
    int jobs = 0;
    int n_sym = 100000;
    bool no_timing = false;
    std::string csv_path;
    bool log_x = false, log_y = true;

    auto* c_run = app.add_subcommand("run", "design and evaluate one channel realization");
    add_common(c_run, args);
    c_run->add_option("--method", method_list, "comma separated method list");

    auto* c_sweep = app.add_subcommand("sweep", "Monte Carlo parameter sweep to CSV");
    add_common(c_sweep, args);
    c_sweep->add_option("--param", sweep_param, "kappa|sigma_n2|T|dims|rho_rr");
    c_sweep->add_option("--values", sweep_values, "sweep values (linear units)");
    c_sweep->add_option("--method", method_list, "comma separated method list");
    c_sweep->add_option("--trials", trials, "channel realizations");
    c_sweep->add_option("--jobs", jobs, "worker threads (0 = all cores)");
    c_sweep->add_flag("--no-timing", no_timing, "zero the wall_ms column for stable output");

    auto* c_validate = app.add_subcommand("validate", "closed forms vs sample-level simulation");
    add_common(c_validate, args);
    c_validate->add_option("--symbols", n_sym, "simulated symbols");

    auto* c_converge = app.add_subcommand("converge", "optimizer convergence trace to CSV");
    add_common(c_converge, args);

    auto* c_complexity = app.add_subcommand("complexity", "canonical subproblem dimension table");
    add_common(c_complexity, args);

    auto* c_plot = app.add_subcommand("plot", "render a summary.csv as an SVG line plot");
    add_common(c_plot, args);
    c_plot->add_option("csv", csv_path, "summary.csv path")->required();
    c_plot->add_flag("--log-x,!--linear-x", log_x, "log10 x axis");
    c_plot->add_flag("--log-y,!--linear-y", log_y, "log10 y axis (default)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_run->parsed()) return cmd_run(args, method_list);
        if (c_sweep->parsed()) {
            return cmd_sweep(args, sweep_param, sweep_values, method_list, trials, jobs,
                             no_timing);
        }
        if (c_validate->parsed()) return cmd_validate(args, n_sym);
        if (c_converge->parsed()) return cmd_converge(args);
        if (c_complexity->parsed()) return cmd_complexity(args);
        if (c_plot->parsed()) return cmd_plot(args, csv_path, log_x, log_y);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
