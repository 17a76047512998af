#include "fdrelay/baselines.hpp"

#include <cmath>

namespace fdrelay {

namespace {

SystemConfig ideal_hardware(SystemConfig cfg) {
    cfg.kappa_s = cfg.kappa_r = cfg.beta_r = cfg.beta_d = 0.0;
    return cfg;
}

bool relay_power_ok(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F, const CMat& G,
                    double budget) {
    try {
        return relay_tx_power(cfg, ch, F, G) <= budget;
    } catch (const RelayLoopUnstableError&) {
        return false;
    }
}

}  // namespace

DesignVariables rescale_to_feasible(const SystemConfig& cfg, const ChannelSet& ch,
                                    DesignVariables design) {
    const double p_f = source_tx_power(cfg, design.F);
    if (p_f > cfg.p_s_max) {
        design.F *= std::sqrt(cfg.p_s_max / p_f);
    }
    if (!relay_power_ok(cfg, ch, design.F, design.G, cfg.p_r_max)) {
        // Relay output power is monotone in the gain, so bisect a scale factor.
        double lo = 0.0, hi = 1.0;
        while (!relay_power_ok(cfg, ch, design.F, hi * design.G, cfg.p_r_max)) {
            hi *= 0.5;
            if (hi < 1e-12) break;
        }
        lo = hi;
        double top = std::min(1.0, 2.0 * hi);
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + top);
            if (relay_power_ok(cfg, ch, design.F, mid * design.G, cfg.p_r_max)) {
                lo = mid;
            } else {
                top = mid;
            }
        }
        design.G *= lo;
    }
    return design;
}

DesignVariables design_unaware(const SystemConfig& cfg, const ChannelSet& ch,
                               const PddConfig& opts, RandomStream& rng) {
    const SystemConfig model_cfg = ideal_hardware(cfg);
    const ChannelSet model_ch = strip_csi_error(ch);
    pdd::PddResult res = pdd::run_algorithm1(model_cfg, model_ch, opts, rng);
    return rescale_to_feasible(cfg, ch, res.design);
}

DesignVariables design_dr(const SystemConfig& cfg, const ChannelSet& ch, DrGrade grade,
                          const PddConfig& opts, RandomStream& rng) {
    double p_th_factor = 0.0, sigma_si_factor = 0.0;
    switch (grade) {
        case DrGrade::High: p_th_factor = 1e2; sigma_si_factor = 0.1; break;
        case DrGrade::Med: p_th_factor = 1e4; sigma_si_factor = 1.0; break;
        case DrGrade::Low: p_th_factor = 1e6; sigma_si_factor = 10.0; break;
    }
    SystemConfig model_cfg = ideal_hardware(cfg);
    model_cfg.sigma2_nr += sigma_si_factor * cfg.sigma2_nr;  // residual-SI noise proxy
    ChannelSet model_ch = strip_csi_error(ch);

    pdd::PddSolver solver({model_cfg,
                           {model_ch},
                           false,
                           p_th_factor * cfg.sigma2_nr,
                           std::nullopt,
                           opts});
    pdd::ConvergenceTrace trace = solver.run(rng);
    if (!trace.converged) {
        const double z = trace.outer.empty() ? 0.0 : trace.outer.back().zeta;
        throw NoConvergenceError("design_dr: outer iteration cap reached", z);
    }
    return rescale_to_feasible(cfg, ch, solver.design());
}

DesignVariables apply_rxopt(const SystemConfig& cfg, const ChannelSet& ch,
                            DesignVariables design) {
    design.C = mmse_receiver(cfg, ch, design.F, design.G);
    return design;
}

HdResult design_hd(const SystemConfig& cfg, const ChannelSet& ch, const PddConfig& opts,
                   RandomStream& rng) {
    const ChannelSet hd_ch = remove_self_interference(ch);
    pdd::PddResult res = pdd::run_algorithm1(cfg, hd_ch, opts, rng);
    const CMat e = mse_matrix(cfg, hd_ch, res.design.F, res.design.G, res.design.C);
    return {res.design, e.trace().real()};
}

}  // namespace fdrelay
