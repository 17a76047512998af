#include "fdrelay/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

namespace fdrelay {

namespace {

const std::map<std::string, Method>& method_table() {
    static const std::map<std::string, Method> table = {
        {"aware", Method::Aware},
        {"unaware", Method::Unaware},
        {"unaware_rxopt", Method::UnawareRxopt},
        {"dr_high", Method::DrHigh},
        {"dr_med", Method::DrMed},
        {"dr_low", Method::DrLow},
        {"dr_high_rxopt", Method::DrHighRxopt},
        {"dr_med_rxopt", Method::DrMedRxopt},
        {"dr_low_rxopt", Method::DrLowRxopt},
        {"hd", Method::Hd},
        {"rate_aware", Method::RateAware},
    };
    return table;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// RFC 4180: quote fields containing commas, quotes or newlines.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double w = pos - std::floor(pos);
    return (1.0 - w) * v[lo] + w * v[hi];
}

}  // namespace

std::string method_name(Method m) {
    for (const auto& [name, method] : method_table()) {
        if (method == m) return name;
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    auto it = method_table().find(name);
    if (it == method_table().end()) {
        throw std::invalid_argument("unknown method '" + name + "'");
    }
    return it->second;
}

std::vector<Method> all_methods() {
    std::vector<Method> out;
    for (const auto& [name, method] : method_table()) out.push_back(method);
    return out;
}

void ExperimentSpec::validate() const {
    base.validate();
    pdd.validate();
    if (sweep_values.empty()) throw std::invalid_argument("ExperimentSpec: empty sweep values");
    if (methods.empty()) throw std::invalid_argument("ExperimentSpec: no methods selected");
    if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
}

namespace {

struct CellResult {
    DesignVariables design;
    ChannelSet eval_channels;  // hd evaluates on the SI-free channels
    int outer_iters = 0;
    int total_inner = 0;
    double final_zeta = 0.0;
    double reported_mse = std::numeric_limits<double>::quiet_NaN();  // hd only
};

CellResult run_method(Method m, const SystemConfig& cfg, const ChannelSet& ch,
                      const PddConfig& opts, RandomStream& rng) {
    CellResult out;
    out.eval_channels = ch;
    auto note_trace = [&out](const pdd::ConvergenceTrace& t) {
        out.outer_iters = static_cast<int>(t.outer.size());
        out.total_inner = t.total_inner;
        out.final_zeta = t.outer.empty() ? 0.0 : t.outer.back().zeta;
    };
    switch (m) {
        case Method::Aware: {
            auto res = pdd::run_algorithm1(cfg, ch, opts, rng);
            note_trace(res.trace);
            out.design = res.design;
            break;
        }
        case Method::RateAware: {
            auto res = pdd::run_rate_maximization(cfg, ch, opts, rng);
            note_trace(res.trace);
            out.design = res.design;
            break;
        }
        case Method::Unaware:
        case Method::UnawareRxopt: {
            out.design = design_unaware(cfg, ch, opts, rng);
            if (m == Method::UnawareRxopt) out.design = apply_rxopt(cfg, ch, out.design);
            break;
        }
        case Method::DrHigh:
        case Method::DrMed:
        case Method::DrLow:
        case Method::DrHighRxopt:
        case Method::DrMedRxopt:
        case Method::DrLowRxopt: {
            DrGrade grade = DrGrade::High;
            if (m == Method::DrMed || m == Method::DrMedRxopt) grade = DrGrade::Med;
            if (m == Method::DrLow || m == Method::DrLowRxopt) grade = DrGrade::Low;
            out.design = design_dr(cfg, ch, grade, opts, rng);
            const bool rxopt = (m == Method::DrHighRxopt || m == Method::DrMedRxopt ||
                                m == Method::DrLowRxopt);
            if (rxopt) out.design = apply_rxopt(cfg, ch, out.design);
            break;
        }
        case Method::Hd: {
            auto res = design_hd(cfg, ch, opts, rng);
            out.design = res.design;
            out.eval_channels = remove_self_interference(ch);
            out.reported_mse = res.mse;
            break;
        }
    }
    return out;
}

}  // namespace

std::vector<ExperimentRecord> run_sweep(const ExperimentSpec& spec) {
    spec.validate();
    const auto n_values = spec.sweep_values.size();
    const auto n_methods = spec.methods.size();
    const std::size_t n_cells = static_cast<std::size_t>(spec.trials) * n_values * n_methods;
    std::vector<ExperimentRecord> records(n_cells);

    auto run_cell = [&](std::size_t cell) {
        const int trial = static_cast<int>(cell / (n_values * n_methods));
        const std::size_t rest = cell % (n_values * n_methods);
        const std::size_t vi = rest / n_methods;
        const Method method = spec.methods[rest % n_methods];

        ExperimentRecord rec;
        rec.trial = trial;
        rec.sweep_param = spec.sweep_param;
        rec.sweep_value = spec.sweep_values[vi];
        rec.method = method_name(method);

        const auto t0 = std::chrono::steady_clock::now();
        try {
            const SystemConfig cfg =
                apply_sweep_value(spec.base, spec.sweep_param, spec.sweep_values[vi]);
            // One stream per trial: every method sees the same realization.
            RandomStream rng(RandomStream::derive_seed(spec.master_seed,
                                                       static_cast<std::uint64_t>(trial)));
            const ChannelSet ch = draw_channels(cfg, rng);
            CellResult cell_res = run_method(method, cfg, ch, spec.pdd, rng);
            const CMat e = mse_matrix(cfg, cell_res.eval_channels, cell_res.design.F,
                                      cell_res.design.G, cell_res.design.C);
            rec.mse = e.trace().real();
            rec.rate = achievable_rate(cfg, cell_res.eval_channels, cell_res.design.F,
                                       cell_res.design.G);
            rec.outer_iters = cell_res.outer_iters;
            rec.total_inner_iters = cell_res.total_inner;
            rec.final_zeta = cell_res.final_zeta;
        } catch (const NoConvergenceError& e) {
            rec.status = "no_convergence";
            rec.final_zeta = e.final_violation();
        } catch (const RelayLoopUnstableError&) {
            rec.status = "loop_unstable";
        } catch (const std::exception&) {
            rec.status = "error";
        }
        if (spec.record_timing) {
            const auto t1 = std::chrono::steady_clock::now();
            rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        records[cell] = std::move(rec);
    };

    int jobs = spec.jobs > 0 ? spec.jobs
                             : static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(n_cells)));
    if (jobs == 1) {
        for (std::size_t c = 0; c < n_cells; ++c) run_cell(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back([&] {
                for (std::size_t c = next.fetch_add(1); c < n_cells; c = next.fetch_add(1)) {
                    run_cell(c);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return records;  // slot order is (trial, sweep value, method): deterministic
}

void write_records_csv(const std::vector<ExperimentRecord>& records, std::ostream& os) {
    os << "trial,sweep_param,sweep_value,method,mse,rate,outer_iters,total_inner_iters,"
          "final_zeta,wall_ms,status\n";
    for (const auto& r : records) {
        os << r.trial << ',' << csv_field(r.sweep_param) << ',' << format_double(r.sweep_value)
           << ',' << csv_field(r.method) << ',' << format_double(r.mse) << ','
           << format_double(r.rate) << ',' << r.outer_iters << ',' << r.total_inner_iters << ','
           << format_double(r.final_zeta) << ',' << format_double(r.wall_ms) << ','
           << csv_field(r.status) << '\n';
    }
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
    std::map<std::pair<double, std::string>, std::vector<const ExperimentRecord*>> cells;
    for (const auto& r : records) {
        cells[{r.sweep_value, r.method}].push_back(&r);
    }
    std::vector<SummaryRow> rows;
    for (const auto& [key, recs] : cells) {
        SummaryRow row;
        row.sweep_param = recs.front()->sweep_param;
        row.sweep_value = key.first;
        row.method = key.second;
        std::vector<double> mses, rates;
        for (const auto* r : recs) {
            if (r->status != "ok") continue;
            mses.push_back(r->mse);
            rates.push_back(r->rate);
        }
        row.n_ok = static_cast<int>(mses.size());
        row.mse_q1 = quantile(mses, 0.25);
        row.mse_median = quantile(mses, 0.5);
        row.mse_q3 = quantile(mses, 0.75);
        row.rate_median = quantile(rates, 0.5);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
    os << "sweep_param,sweep_value,method,n_ok,mse_q1,mse_median,mse_q3,rate_median\n";
    for (const auto& r : rows) {
        os << csv_field(r.sweep_param) << ',' << format_double(r.sweep_value) << ','
           << csv_field(r.method) << ',' << r.n_ok << ',' << format_double(r.mse_q1) << ','
           << format_double(r.mse_median) << ',' << format_double(r.mse_q3) << ','
           << format_double(r.rate_median) << '\n';
    }
}

ValidationReport validate(const SystemConfig& cfg, const ChannelSet& ch,
                          const DesignVariables& design, int n_sym, RandomStream& rng) {
    const CMat m_out = relay_output_cov(cfg, ch, design.F, design.G);
    const CMat rout_closed = m_out + cfg.kappa_r * diag_part(m_out);
    const CMat y_closed = dest_input_cov(cfg, ch, design.F, m_out);
    const CMat mse_closed = mse_matrix(cfg, ch, design.F, design.G, design.C);

    SimOptions opts;
    opts.n_sym = n_sym;
    const SimResult sim = simulate_chain(cfg, ch, design.F, design.G, design.C, opts, rng);

    ValidationReport rep;
    rep.n_sym = n_sym;
    rep.rout_cov_err = (sim.stats.rout_cov - rout_closed).norm() / rout_closed.norm();
    rep.y_cov_err = (sim.stats.y_cov - y_closed).norm() / y_closed.norm();
    rep.mse_err = (sim.stats.mse - mse_closed).norm() / mse_closed.norm();
    return rep;
}

pdd::ConvergenceTrace convergence_report(const SystemConfig& cfg, const ChannelSet& ch,
                                         const PddConfig& opts, RandomStream& rng) {
    pdd::PddSolver solver({cfg, {ch}, false, std::nullopt, std::nullopt, opts});
    return solver.run(rng);
}

std::string complexity_report(const SystemConfig& cfg, double eps_digits) {
    std::ostringstream os;
    auto line = [&os, eps_digits](const char* name, const qcqp::CanonicalDims& dims) {
        os << name << ": N=" << dims.n_tilde << " M=" << dims.m_tilde << " l=[";
        for (std::size_t i = 0; i < dims.l.size(); ++i) {
            os << (i ? "," : "") << dims.l[i];
        }
        os << "] bound=" << qcqp::complexity_bound(dims.n_tilde, dims.m_tilde, dims.l, eps_digits)
           << "\n";
    };
    line("B1 update", qcqp::b1_canonical_dims(cfg));
    line("B2 update", qcqp::b2_canonical_dims(cfg));
    return os.str();
}

void write_summary_svg(const std::vector<SummaryRow>& rows, std::ostream& os, bool log_x,
                       bool log_y) {
    const int width = 640, height = 420, margin = 50;
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& r : rows) {
        if (r.n_ok == 0) continue;
        double x = r.sweep_value, y = r.mse_median;
        if (log_x) x = std::log10(std::max(x, 1e-300));
        if (log_y) y = std::log10(std::max(y, 1e-300));
        series[r.method].emplace_back(x, y);
        x_min = std::min(x_min, x); x_max = std::max(x_max, x);
        y_min = std::min(y_min, y); y_max = std::max(y_max, y);
    }
    if (x_max <= x_min) { x_max = x_min + 1.0; }
    if (y_max <= y_min) { y_max = y_min + 1.0; }
    auto sx = [&](double x) {
        return margin + (x - x_min) / (x_max - x_min) * (width - 2 * margin);
    };
    auto sy = [&](double y) {
        return height - margin - (y - y_min) / (y_max - y_min) * (height - 2 * margin);
    };
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                   "#bcbd22", "#17becf", "#333333"};
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin
       << "\" height=\"" << height - 2 * margin
       << "\" fill=\"none\" stroke=\"#888\" stroke-width=\"1\"/>\n";
    int ci = 0, li = 0;
    for (const auto& [name, pts] : series) {
        auto sorted = pts;
        std::sort(sorted.begin(), sorted.end());
        os << "<polyline fill=\"none\" stroke=\"" << colors[ci % 11] << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : sorted) {
            os << sx(x) << ',' << sy(y) << ' ';
        }
        os << "\"/>\n";
        os << "<text x=\"" << width - margin + 4 << "\" y=\"" << margin + 14 * li
           << "\" font-size=\"10\" fill=\"" << colors[ci % 11] << "\">" << name << "</text>\n";
        ++ci;
        ++li;
    }
    os << "</svg>\n";
}

}  // namespace fdrelay
