#ifndef FDRELAY_BASELINES_HPP
#define FDRELAY_BASELINES_HPP

#include "fdrelay/pdd.hpp"

namespace fdrelay {

/// Comparison designs. Each returns only (F, G, C); evaluation of any design
/// always goes through the covariance engine with the true configuration and
/// channel set, so a simplified design model can never leak into the metric.

/// Design that ignores every impairment: distortion coefficients and CSI error
/// covariances are zeroed in the design model (so the residual self-interference
/// vanishes there), then the result is rescaled to satisfy the true power
/// constraints (F by direct scaling, G by bisection on the true relay power).
DesignVariables design_unaware(const SystemConfig& cfg, const ChannelSet& ch,
                               const PddConfig& opts, RandomStream& rng);

enum class DrGrade { High, Med, Low };

/// Dynamic-range benchmark: impairment-unaware model plus (a) a cap P_th on the
/// received self-interference power tr(H_rr M_out H_rr^H) and (b) relay noise
/// inflated by sigma_si^2. Grades map to
///   High: P_th = 1e2 sigma_n^2, sigma_si^2 = sigma_n^2/10
///   Med:  P_th = 1e4 sigma_n^2, sigma_si^2 = sigma_n^2
///   Low:  P_th = 1e6 sigma_n^2, sigma_si^2 = 10 sigma_n^2.
DesignVariables design_dr(const SystemConfig& cfg, const ChannelSet& ch, DrGrade grade,
                          const PddConfig& opts, RandomStream& rng);

/// Replaces C with the MMSE receiver computed under the true impairment model;
/// F and G are untouched. Never increases the true MSE.
DesignVariables apply_rxopt(const SystemConfig& cfg, const ChannelSet& ch, DesignVariables design);

/// Half-duplex comparison: the same MSE minimization with the self-interference
/// channel removed from both design and evaluation, transmit/receive distortions
/// retained. Returns the design and its MSE under the SI-free model.
struct HdResult {
    DesignVariables design;
    double mse = 0.0;
};
HdResult design_hd(const SystemConfig& cfg, const ChannelSet& ch, const PddConfig& opts,
                   RandomStream& rng);

/// Scales a design into the true power budgets: F directly, G by bisection on
/// the (nonlinear) true relay output power. Shared by the simplified designs.
DesignVariables rescale_to_feasible(const SystemConfig& cfg, const ChannelSet& ch,
                                    DesignVariables design);

}  // namespace fdrelay

#endif
