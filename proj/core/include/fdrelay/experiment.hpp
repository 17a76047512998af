#ifndef FDRELAY_EXPERIMENT_HPP
#define FDRELAY_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fdrelay/baselines.hpp"
#include "fdrelay/simulate.hpp"

namespace fdrelay {

/// Methods the harness can run. rxopt variants re-derive the destination
/// equalizer under the true model after the simplified design.
enum class Method {
    Aware,
    Unaware,
    UnawareRxopt,
    DrHigh,
    DrMed,
    DrLow,
    DrHighRxopt,
    DrMedRxopt,
    DrLowRxopt,
    Hd,
    RateAware,
};

std::string method_name(Method m);
Method method_from_name(const std::string& name);
std::vector<Method> all_methods();

struct ExperimentSpec {
    SystemConfig base;
    std::string sweep_param;          // kappa | sigma_n2 | T | dims | rho_rr
    std::vector<double> sweep_values; // nonempty
    std::vector<Method> methods;
    int trials = 20;
    std::uint64_t master_seed = 1;
    PddConfig pdd;
    int jobs = 0;                     // worker threads; 0 = hardware concurrency
    bool record_timing = true;        // false zeroes wall_ms for bit-stable output

    void validate() const;
};

struct ExperimentRecord {
    int trial = 0;
    std::string sweep_param;
    double sweep_value = 0.0;
    std::string method;
    double mse = 0.0;
    double rate = 0.0;  // bits/s
    int outer_iters = 0;
    int total_inner_iters = 0;
    double final_zeta = 0.0;
    double wall_ms = 0.0;
    std::string status = "ok";  // ok | no_convergence | loop_unstable | error
};

/// One (trial, sweep value, method) cell: the trial's stream draws the channel
/// realization at the swept config, the method designs on it (deterministically),
/// and the true-model MSE and rate are recorded. Failures become status rows.
/// Every method within a trial sees the identical channel realization.
std::vector<ExperimentRecord> run_sweep(const ExperimentSpec& spec);

void write_records_csv(const std::vector<ExperimentRecord>& records, std::ostream& os);

struct SummaryRow {
    std::string sweep_param;
    double sweep_value = 0.0;
    std::string method;
    int n_ok = 0;
    double mse_q1 = 0.0, mse_median = 0.0, mse_q3 = 0.0;
    double rate_median = 0.0;
};
std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records);
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os);

/// Relative Frobenius errors of the closed forms against the sample-level
/// simulator for one design.
struct ValidationReport {
    double rout_cov_err = 0.0;
    double y_cov_err = 0.0;
    double mse_err = 0.0;
    int n_sym = 0;
};
ValidationReport validate(const SystemConfig& cfg, const ChannelSet& ch,
                          const DesignVariables& design, int n_sym, RandomStream& rng);

/// Runs the optimizer once and returns its trace (converged or not) for the
/// convergence figures; outer and inner CSV writers live on the trace itself.
pdd::ConvergenceTrace convergence_report(const SystemConfig& cfg, const ChannelSet& ch,
                                         const PddConfig& opts, RandomStream& rng);

/// Canonical-form dimensions and interior-point complexity bounds of both
/// block subproblems, formatted as a small table.
std::string complexity_report(const SystemConfig& cfg, double eps_digits = 1.0);

/// Minimal SVG polyline plot of per-method median curves from summary rows.
void write_summary_svg(const std::vector<SummaryRow>& rows, std::ostream& os, bool log_x,
                       bool log_y);

}  // namespace fdrelay

#endif
