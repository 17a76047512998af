#include "fdrelay/simulate.hpp"

#include <cmath>

namespace fdrelay {

namespace {

/// Draws a zero-mean complex Gaussian vector with diagonal covariance.
CVec draw_diag_gaussian(const RVec& variances, RandomStream& rng) {
    CVec out(variances.size());
    for (Eigen::Index i = 0; i < variances.size(); ++i) {
        out(i) = rng.complex_gaussian(std::max(variances(i), 0.0));
    }
    return out;
}

/// Accumulates the independence/diagonality/whiteness diagnostics of one
/// distortion stream against its conditioning signal.
class StreamProbe {
  public:
    void init(Eigen::Index dim_e, Eigen::Index dim_u) {
        cross_ = CMat::Zero(dim_e, dim_u);
        cov_ = CMat::Zero(dim_e, dim_e);
        lag1_ = CVec::Zero(dim_e);
        e_power_ = RVec::Zero(dim_e);
        u_power_ = RVec::Zero(dim_u);
        prev_ = CVec::Zero(dim_e);
        have_prev_ = false;
        n_ = 0;
    }

    void add(const CVec& e, const CVec& u) {
        cross_ += e * u.adjoint();
        cov_ += e * e.adjoint();
        e_power_ += e.cwiseAbs2();
        u_power_ += u.cwiseAbs2();
        if (have_prev_) {
            lag1_ += e.cwiseProduct(prev_.conjugate());
        }
        prev_ = e;
        have_prev_ = true;
        ++n_;
    }

    DistortionStats finish() const {
        DistortionStats out;
        if (n_ < 2) return out;
        const double n = static_cast<double>(n_);
        const RVec var_e = (e_power_ / n).cwiseMax(1e-300);
        const RVec var_u = (u_power_ / n).cwiseMax(1e-300);
        for (Eigen::Index i = 0; i < cross_.rows(); ++i) {
            for (Eigen::Index j = 0; j < cross_.cols(); ++j) {
                const double c = std::abs(cross_(i, j)) / n / std::sqrt(var_e(i) * var_u(j));
                out.max_signal_corr = std::max(out.max_signal_corr, c);
            }
            for (Eigen::Index j = 0; j < cov_.cols(); ++j) {
                if (i == j) continue;
                const double c = std::abs(cov_(i, j)) / n / std::sqrt(var_e(i) * var_e(j));
                out.max_offdiag_corr = std::max(out.max_offdiag_corr, c);
            }
            const double a = std::abs(lag1_(i)) / (n - 1) / var_e(i);
            out.max_lag1_corr = std::max(out.max_lag1_corr, a);
        }
        return out;
    }

  private:
    CMat cross_, cov_;
    CVec lag1_, prev_;
    RVec e_power_, u_power_;
    bool have_prev_ = false;
    long n_ = 0;
};

/// Running per-entry mean power used by the empirical distortion mode. Seeded
/// with the model value so the first symbols are not drawn with zero variance.
struct RunningPower {
    RVec model;
    RVec sum;
    long n = 0;

    RVec current() const {
        if (n < 10) return model;
        return sum / static_cast<double>(n);
    }
    void add(const CVec& v) {
        sum += v.cwiseAbs2();
        ++n;
    }
};

}  // namespace

SimResult simulate_chain(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                         const CMat& G, const CMat& C, const SimOptions& opts,
                         RandomStream& rng) {
    cfg.validate();
    if (opts.n_sym < 1000) {
        throw std::invalid_argument("simulate_chain: need at least 1000 symbols");
    }
    // Model covariances fix the distortion variances (and check loop stability).
    const CMat m_out_model = relay_output_cov(cfg, ch, F, G);
    const CMat m_in_model = relay_input_cov_full(cfg, ch, F, m_out_model);
    const CMat ud_model = dest_undistorted_cov(cfg, ch, F, m_out_model);
    const CMat ff = F * F.adjoint();

    RunningPower pw_us{ff.diagonal().real(), RVec::Zero(cfg.n_s)};
    RunningPower pw_min{m_in_model.diagonal().real(), RVec::Zero(cfg.m_r)};
    RunningPower pw_mout{m_out_model.diagonal().real(), RVec::Zero(cfg.n_r)};
    RunningPower pw_ud{ud_model.diagonal().real(), RVec::Zero(cfg.m_d)};
    const bool empirical = opts.mode == DistortionMode::Empirical;

    const int burn = std::max(1, static_cast<int>(opts.n_sym * opts.burn_in));
    const double power_cap = 1e6 * cfg.p_r_max;

    SimResult result;
    ChainStats& st = result.stats;
    st.rout_cov = CMat::Zero(cfg.n_r, cfg.n_r);
    st.y_cov = CMat::Zero(cfg.m_d, cfg.m_d);
    st.mse = CMat::Zero(cfg.d, cfg.d);

    StreamProbe probe_txs, probe_rxr, probe_txr, probe_rxd;
    probe_txs.init(cfg.n_s, cfg.n_s);
    probe_rxr.init(cfg.m_r, cfg.m_r);
    probe_txr.init(cfg.n_r, cfg.n_r);
    probe_rxd.init(cfg.m_d, cfg.m_d);

    CVec r_in_supp_prev = CVec::Zero(cfg.m_r);  // relay buffer (one symbol delay)
    CVec s_prev = CVec::Zero(cfg.d);
    double run_power = 0.0;
    long run_count = 0;

    if (opts.keep_series) {
        result.series.x.reserve(opts.n_sym);
        result.series.r_in.reserve(opts.n_sym);
        result.series.r_in_supp.reserve(opts.n_sym);
        result.series.r_out.reserve(opts.n_sym);
        result.series.y.reserve(opts.n_sym);
    }

    for (int t = 0; t < opts.n_sym; ++t) {
        const CVec s = rng.complex_gaussian_matrix(cfg.d, 1, 1.0);
        const CVec u_s = F * s;
        const CVec e_tx_s =
            draw_diag_gaussian(cfg.kappa_s * (empirical ? pw_us.current() : pw_us.model), rng);
        const CVec x = u_s + e_tx_s;

        const CVec m_out = G * r_in_supp_prev;
        const CVec e_tx_r =
            draw_diag_gaussian(cfg.kappa_r * (empirical ? pw_mout.current() : pw_mout.model), rng);
        const CVec r_out = m_out + e_tx_r;

        const CVec n_r = rng.complex_gaussian_matrix(cfg.m_r, 1, cfg.sigma2_nr);
        const CVec m_in = ch.sr.h_true * x + ch.rr.h_true * r_out + n_r;
        const CVec e_rx_r =
            draw_diag_gaussian(cfg.beta_r * (empirical ? pw_min.current() : pw_min.model), rng);
        const CVec r_in = m_in + e_rx_r;
        const CVec r_in_supp = r_in - ch.rr.h_est * m_out;

        const CVec n_d = rng.complex_gaussian_matrix(cfg.m_d, 1, cfg.sigma2_nd);
        const CVec u_d = ch.rd.h_true * r_out + ch.sd.h_true * x + n_d;
        const CVec e_rx_d =
            draw_diag_gaussian(cfg.beta_d * (empirical ? pw_ud.current() : pw_ud.model), rng);
        const CVec y = u_d + e_rx_d;

        run_power += r_out.squaredNorm();
        ++run_count;
        if (run_count >= 16 && run_power / run_count > power_cap) {
            throw RelayLoopUnstableError("simulate_chain: relay output power diverged",
                                         run_power / run_count);
        }

        if (empirical) {
            pw_us.add(u_s);
            pw_min.add(m_in);
            pw_mout.add(m_out);
            pw_ud.add(u_d);
        }

        if (t >= burn) {
            st.rout_cov += r_out * r_out.adjoint();
            st.y_cov += y * y.adjoint();
            const CVec err = s_prev - C.adjoint() * y;  // y(t) carries s(t-1) via the relay
            st.mse += err * err.adjoint();
            st.rout_power += r_out.squaredNorm();
            probe_txs.add(e_tx_s, u_s);
            probe_rxr.add(e_rx_r, m_in);
            probe_txr.add(e_tx_r, m_out);
            probe_rxd.add(e_rx_d, u_d);
            ++st.n_used;
        }

        if (opts.keep_series) {
            result.series.x.push_back(x);
            result.series.r_in.push_back(r_in);
            result.series.r_in_supp.push_back(r_in_supp);
            result.series.r_out.push_back(r_out);
            result.series.y.push_back(y);
        }

        r_in_supp_prev = r_in_supp;
        s_prev = s;
    }

    const double n = static_cast<double>(st.n_used);
    st.rout_cov /= n;
    st.y_cov /= n;
    st.mse /= n;
    st.rout_power /= n;
    st.tx_source = probe_txs.finish();
    st.rx_relay = probe_rxr.finish();
    st.tx_relay = probe_txr.finish();
    st.rx_dest = probe_rxd.finish();
    return result;
}

}  // namespace fdrelay
