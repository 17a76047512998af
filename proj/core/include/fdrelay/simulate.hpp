#ifndef FDRELAY_SIMULATE_HPP
#define FDRELAY_SIMULATE_HPP

#include <vector>

#include "fdrelay/covariance.hpp"

namespace fdrelay {

enum class DistortionMode {
    ClosedForm,  // distortion variances from the model covariances (default)
    Empirical,   // running per-entry average of the undistorted signal power
};

struct SimOptions {
    int n_sym = 100000;            // simulated symbols, >= 1000
    double burn_in = 0.1;          // fraction of symbols discarded before statistics
    DistortionMode mode = DistortionMode::ClosedForm;
    bool keep_series = false;      // retain the per-symbol signal vectors
};

/// Per-stream sanity statistics of one distortion process, all normalized
/// correlation magnitudes (so ~3/sqrt(N) under the model's independence).
struct DistortionStats {
    double max_signal_corr = 0.0;   // vs the stream's conditioning signal
    double max_offdiag_corr = 0.0;  // between chain entries at equal time
    double max_lag1_corr = 0.0;     // per-entry lag-1 autocorrelation
};

struct ChainStats {
    CMat rout_cov;  // empirical E{r_out r_out^H}
    CMat y_cov;     // empirical E{y y^H}
    CMat mse;       // empirical E{(s - s_hat)(s - s_hat)^H}, delay aligned
    DistortionStats tx_source, rx_relay, tx_relay, rx_dest;
    double rout_power = 0.0;  // empirical mean ||r_out||^2
    int n_used = 0;           // symbols counted after burn-in
};

struct ChainSample {
    std::vector<CVec> x, r_in, r_in_supp, r_out, y;
};

struct SimResult {
    ChainStats stats;
    ChainSample series;  // filled only with keep_series
};

/// Symbol-level simulation of the full relay chain with a one-symbol relay
/// delay: fresh s(t) ~ CN(0, I_d), the relay amplifies the previous suppressed
/// input, distortion terms are drawn per chain with diagonal covariance
/// proportional to the intended signal power (ClosedForm mode takes those
/// powers from the covariance engine, Empirical from running averages), and
/// CSI-error leakage enters through the true-vs-estimated channel difference.
/// RNG draw order per symbol: s, e_tx_source, e_tx_relay, relay noise,
/// e_rx_relay, destination noise, e_rx_dest.
///
/// Throws RelayLoopUnstableError when the running output power exceeds
/// 1e6 * P_r_max (the loop diverges for this G).
SimResult simulate_chain(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                         const CMat& G, const CMat& C, const SimOptions& opts, RandomStream& rng);

}  // namespace fdrelay

#endif
