#include "fdrelay/covariance.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace fdrelay {

namespace {

double real_trace(const CMat& a) { return a.trace().real(); }

/// tr(C_tx * Q) as a real scalar; both factors are Hermitian in every use.
double weighted_trace(const CMat& c_tx, const CMat& q) { return real_trace(c_tx * q); }

}  // namespace

double source_tx_power(const SystemConfig& cfg, const CMat& F) {
    return (1.0 + cfg.kappa_s) * F.squaredNorm();
}

double relay_tx_power(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                      const CMat& G) {
    const CMat m_out = relay_output_cov(cfg, ch, F, G);
    return (1.0 + cfg.kappa_r) * real_trace(m_out);
}

bool design_feasible(const SystemConfig& cfg, const ChannelSet& ch, const DesignVariables& dv,
                     double rel_tol) {
    if (source_tx_power(cfg, dv.F) > cfg.p_s_max * (1.0 + rel_tol)) return false;
    try {
        if (relay_tx_power(cfg, ch, dv.F, dv.G) > cfg.p_r_max * (1.0 + rel_tol)) return false;
    } catch (const RelayLoopUnstableError&) {
        return false;
    }
    return true;
}

CMat relay_input_cov_base(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F) {
    if (F.rows() != cfg.n_s || F.cols() != cfg.d) {
        throw DimensionError("relay_input_cov_base: F must be N_s x d");
    }
    const CMat q = F * F.adjoint() + cfg.kappa_s * diag_part(F * F.adjoint());
    CMat m = ch.sr.h_est * q * ch.sr.h_est.adjoint();
    m += ch.sr.c_rx * weighted_trace(ch.sr.c_tx, q);
    m += cfg.sigma2_nr * CMat::Identity(cfg.m_r, cfg.m_r);
    return hermitian_part(m);
}

CMat si_coupling_matrix(const SystemConfig& cfg, const ChannelSet& ch) {
    const SelectionMatrix sel_n(cfg.n_r);
    const SelectionMatrix sel_m(cfg.m_r);
    const CMat k_rr = kron(ch.rr.h_est.conjugate(), ch.rr.h_est);  // M_r^2 x N_r^2

    CMat b = cfg.kappa_r * sel_n.apply_right(k_rr);
    b += cfg.beta_r * sel_m.apply_left(k_rr);

    const CVec u = vec(ch.rr.c_rx);
    const CVec w = vec(ch.rr.c_tx.conjugate());
    // vec(C_rx) vec(C_tx*)^T (I + kappa_r D_N): scale diagonal-position columns.
    CVec w_scaled = w;
    for (Eigen::Index i = 0; i < cfg.n_r; ++i) {
        w_scaled(i * (cfg.n_r + 1)) *= (1.0 + cfg.kappa_r);
    }
    b += u * w_scaled.transpose();
    b += cfg.beta_r * sel_m.apply(u) * w.transpose();
    return b;
}

namespace {

struct LoopSolve {
    CMat k_g;                 // G* kron G
    Eigen::PartialPivLU<CMat> lu;  // factorization of I - K_g B
    double condition;
};

LoopSolve solve_loop(const SystemConfig& cfg, const ChannelSet& ch, const CMat& G) {
    if (G.rows() != cfg.n_r || G.cols() != cfg.m_r) {
        throw DimensionError("relay loop: G must be N_r x M_r");
    }
    const CMat b = si_coupling_matrix(cfg, ch);
    const CMat k_g = kron(G.conjugate(), G);
    const CMat loop = k_g * b;  // N_r^2 x N_r^2

    Eigen::ComplexEigenSolver<CMat> eig(loop, /*computeEigenvectors=*/false);
    const double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (radius >= 1.0 - tol::loop_margin) {
        throw RelayLoopUnstableError(
            "relay loop: distortion amplification loop diverges for this G", radius);
    }

    const CMat sys = CMat::Identity(loop.rows(), loop.cols()) - loop;
    Eigen::FullPivLU<CMat> cond_lu(sys);
    const double rcond = cond_lu.rcond();
    const double condition = (rcond > 0.0) ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (condition > 1e10) {
        throw RelayLoopUnstableError("relay loop: I - (G* kron G) B is near singular", radius);
    }
    return {k_g, Eigen::PartialPivLU<CMat>(sys), condition};
}

}  // namespace

RelayTransfer relay_transfer(const SystemConfig& cfg, const ChannelSet& ch, const CMat& G) {
    const SelectionMatrix sel_n(cfg.n_r);
    const SelectionMatrix sel_m(cfg.m_r);
    LoopSolve ls = solve_loop(cfg, ch, G);
    CMat theta = ls.lu.solve(sel_m.scale_diag_cols(ls.k_g, cfg.beta_r));
    theta = sel_n.scale_diag_rows(theta, cfg.kappa_r);
    return {std::move(theta), si_coupling_matrix(cfg, ch), ls.condition};
}

CMat relay_output_cov(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                      const CMat& G) {
    const SelectionMatrix sel_m(cfg.m_r);
    LoopSolve ls = solve_loop(cfg, ch, G);
    const CMat m_in0 = relay_input_cov_base(cfg, ch, F);
    const CVec rhs = ls.k_g * sel_m.scale_diag_entries(vec(m_in0), cfg.beta_r);
    const CVec v = ls.lu.solve(rhs);
    CMat m_out = hermitian_part(unvec(v, cfg.n_r, cfg.n_r));

    Eigen::SelfAdjointEigenSolver<CMat> eig(m_out, Eigen::EigenvaluesOnly);
    const double lam_max = eig.eigenvalues().maxCoeff();
    const double lam_min = eig.eigenvalues().minCoeff();
    if (lam_min < -1e-8 * std::max(lam_max, 0.0)) {
        throw NotPsdError("relay_output_cov: solved covariance is indefinite", lam_min);
    }
    return m_out;
}

CMat relay_input_cov_supp(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                          const CMat& M_out) {
    if (M_out.rows() != cfg.n_r || M_out.cols() != cfg.n_r) {
        throw DimensionError("relay_input_cov_supp: M_out must be N_r x N_r");
    }
    const CMat m_in0 = relay_input_cov_base(cfg, ch, F);
    const CMat& h_rr = ch.rr.h_est;
    const CMat m_diag = diag_part(M_out);

    CMat m1 = m_in0;
    m1 += cfg.kappa_r * (h_rr * m_diag * h_rr.adjoint());
    m1 += ch.rr.c_rx * weighted_trace(ch.rr.c_tx, M_out + cfg.kappa_r * m_diag);
    m1 += cfg.beta_r * diag_part(m_in0 + h_rr * M_out * h_rr.adjoint() +
                                 ch.rr.c_rx * weighted_trace(ch.rr.c_tx, M_out));
    return hermitian_part(m1);
}

CMat relay_input_cov_full(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                          const CMat& M_out) {
    const CMat m_in0 = relay_input_cov_base(cfg, ch, F);
    const CMat& h_rr = ch.rr.h_est;
    const CMat bumped = M_out + cfg.kappa_r * diag_part(M_out);
    CMat m = m_in0 + h_rr * bumped * h_rr.adjoint();
    m += ch.rr.c_rx * weighted_trace(ch.rr.c_tx, bumped);
    return hermitian_part(m);
}

CMat dest_undistorted_cov(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                          const CMat& M_out) {
    const CMat qf = F * F.adjoint() + cfg.kappa_s * diag_part(F * F.adjoint());
    const CMat bumped = M_out + cfg.kappa_r * diag_part(M_out);
    CMat ud = ch.sd.h_est * qf * ch.sd.h_est.adjoint();
    ud += ch.sd.c_rx * weighted_trace(ch.sd.c_tx, qf);
    ud += ch.rd.h_est * bumped * ch.rd.h_est.adjoint();
    ud += ch.rd.c_rx * weighted_trace(ch.rd.c_tx, bumped);
    ud += cfg.sigma2_nd * CMat::Identity(cfg.m_d, cfg.m_d);
    return hermitian_part(ud);
}

CMat dest_input_cov(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                    const CMat& M_out) {
    CMat m2 = dest_undistorted_cov(cfg, ch, F, M_out);
    // beta_d diagonal term keeps only the distortion-free parts of u_d's covariance.
    const CMat ff = F * F.adjoint();
    CMat low = ch.sd.h_est * ff * ch.sd.h_est.adjoint();
    low += ch.sd.c_rx * weighted_trace(ch.sd.c_tx, ff);
    low += ch.rd.h_est * M_out * ch.rd.h_est.adjoint();
    low += ch.rd.c_rx * weighted_trace(ch.rd.c_tx, M_out);
    low += cfg.sigma2_nd * CMat::Identity(cfg.m_d, cfg.m_d);
    m2 += cfg.beta_d * diag_part(low);
    return hermitian_part(m2);
}

CMat equivalent_channel(const ChannelSet& ch, const CMat& G) {
    return ch.rd.h_est * G * ch.sr.h_est;
}

CMat mse_matrix(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F, const CMat& G,
                const CMat& C) {
    if (C.rows() != cfg.m_d || C.cols() != cfg.d) {
        throw DimensionError("mse_matrix: C must be M_d x d");
    }
    const CMat m_out = relay_output_cov(cfg, ch, F, G);
    const CMat m2 = dest_input_cov(cfg, ch, F, m_out);
    const CMat heq_f = equivalent_channel(ch, G) * F;
    CMat e = C.adjoint() * m2 * C + CMat::Identity(cfg.d, cfg.d);
    e -= C.adjoint() * heq_f;
    e -= heq_f.adjoint() * C;
    return hermitian_part(e);
}

CMat mmse_receiver(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F, const CMat& G) {
    const CMat m_out = relay_output_cov(cfg, ch, F, G);
    const CMat m2 = dest_input_cov(cfg, ch, F, m_out);
    const CMat heq_f = equivalent_channel(ch, G) * F;
    return m2.ldlt().solve(heq_f);
}

double achievable_rate(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                       const CMat& G) {
    const CMat m_out = relay_output_cov(cfg, ch, F, G);
    const CMat m2 = dest_input_cov(cfg, ch, F, m_out);
    const CMat heq_f = equivalent_channel(ch, G) * F;
    const CMat gamma = hermitian_part(m2 - heq_f * heq_f.adjoint());

    Eigen::LLT<CMat> llt(gamma);
    if (llt.info() != Eigen::Success) {
        throw DomainError("achievable_rate: interference-plus-noise covariance is not PD");
    }
    const CMat inner = CMat::Identity(cfg.d, cfg.d) + heq_f.adjoint() * llt.solve(heq_f);
    const double log_det = std::log2(std::abs(inner.determinant()));
    return cfg.bandwidth * log_det;
}

}  // namespace fdrelay
