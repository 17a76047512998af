#include "fdrelay/channel.hpp"

#include <cmath>

namespace fdrelay {

const Link& ChannelSet::link(LinkId id) const {
    switch (id) {
        case LinkId::sr: return sr;
        case LinkId::rd: return rd;
        case LinkId::sd: return sd;
        case LinkId::rr: return rr;
    }
    throw std::invalid_argument("ChannelSet::link: bad link id");
}

Link& ChannelSet::link(LinkId id) {
    return const_cast<Link&>(static_cast<const ChannelSet&>(*this).link(id));
}

CsiErrorCov csi_error_cov(const SystemConfig& cfg, const CMat& h_est, LinkId link) {
    double kappa = 0.0, sigma2 = 0.0, p_max = 0.0;
    switch (link) {
        case LinkId::sr: kappa = cfg.kappa_s; sigma2 = cfg.sigma2_nr; p_max = cfg.p_s_max; break;
        case LinkId::sd: kappa = cfg.kappa_s; sigma2 = cfg.sigma2_nd; p_max = cfg.p_s_max; break;
        case LinkId::rd: kappa = cfg.kappa_r; sigma2 = cfg.sigma2_nd; p_max = cfg.p_r_max; break;
        case LinkId::rr: kappa = cfg.kappa_r; sigma2 = cfg.sigma2_nr; p_max = cfg.p_r_max; break;
    }
    const auto m = h_est.rows();
    const auto n = h_est.cols();
    const CMat gram = h_est * h_est.adjoint();
    CMat c_rx = (sigma2 / p_max) * CMat::Identity(m, m);
    c_rx += (2.0 * kappa / static_cast<double>(n)) * gram;
    c_rx += (2.0 * kappa / static_cast<double>(n)) * diag_part(gram);
    c_rx *= 1.0 / (2.0 * static_cast<double>(cfg.t_training));
    return {hermitian_part(c_rx), CMat::Identity(n, n)};
}

namespace {

Link make_link(const SystemConfig& cfg, LinkId id, CMat h_true, RandomStream& rng) {
    Link out;
    out.h_true = std::move(h_true);
    // The true channel stands in for the estimate when forming the error
    // statistics; the two differ at second order in the error itself.
    CsiErrorCov cov = csi_error_cov(cfg, out.h_true, id);
    const CMat c_rx_half = herm_sqrt(cov.c_rx);
    const CMat noise = rng.complex_gaussian_matrix(out.h_true.rows(), out.h_true.cols(), 1.0);
    const CMat delta = c_rx_half * noise;  // C_tx = I
    out.h_est = out.h_true - delta;
    out.c_rx = cov.c_rx;
    out.c_tx = cov.c_tx;
    return out;
}

}  // namespace

ChannelSet draw_channels(const SystemConfig& cfg, RandomStream& rng) {
    cfg.validate();
    const CMat h_sr = rng.complex_gaussian_matrix(cfg.m_r, cfg.n_s, cfg.rho_sr);
    const CMat h_rd = rng.complex_gaussian_matrix(cfg.m_d, cfg.n_r, cfg.rho_rd);
    const CMat h_sd = rng.complex_gaussian_matrix(cfg.m_d, cfg.n_s, cfg.rho_sd);

    const double k = cfg.k_rician;
    const double mean_scale = std::sqrt(cfg.rho_rr * k / (1.0 + k));
    const CMat h_rr = mean_scale * CMat::Ones(cfg.m_r, cfg.n_r) +
                      rng.complex_gaussian_matrix(cfg.m_r, cfg.n_r, 1.0 / (1.0 + k));

    ChannelSet out;
    out.sr = make_link(cfg, LinkId::sr, h_sr, rng);
    out.rd = make_link(cfg, LinkId::rd, h_rd, rng);
    out.sd = make_link(cfg, LinkId::sd, h_sd, rng);
    out.rr = make_link(cfg, LinkId::rr, h_rr, rng);
    return out;
}

ChannelSet strip_csi_error(ChannelSet channels) {
    for (LinkId id : {LinkId::sr, LinkId::rd, LinkId::sd, LinkId::rr}) {
        Link& l = channels.link(id);
        l.h_est = l.h_true;
        l.c_rx = CMat::Zero(l.c_rx.rows(), l.c_rx.cols());
        l.c_tx = CMat::Zero(l.c_tx.rows(), l.c_tx.cols());
    }
    return channels;
}

ChannelSet remove_self_interference(ChannelSet channels) {
    Link& l = channels.rr;
    l.h_true = CMat::Zero(l.h_true.rows(), l.h_true.cols());
    l.h_est = l.h_true;
    l.c_rx = CMat::Zero(l.c_rx.rows(), l.c_rx.cols());
    l.c_tx = CMat::Zero(l.c_tx.rows(), l.c_tx.cols());
    return channels;
}

}  // namespace fdrelay
