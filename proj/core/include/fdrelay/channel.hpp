#ifndef FDRELAY_CHANNEL_HPP
#define FDRELAY_CHANNEL_HPP

#include "fdrelay/config.hpp"
#include "fdrelay/linalg.hpp"
#include "fdrelay/rng.hpp"

namespace fdrelay {

enum class LinkId { sr, rd, sd, rr };

/// One propagation link: the true channel, its estimate, and the receive/transmit
/// correlation matrices of the estimation error (error = C_rx^{1/2} * E * C_tx^{1/2}
/// with E i.i.d. standard complex Gaussian).
struct Link {
    CMat h_true;
    CMat h_est;
    CMat c_rx;
    CMat c_tx;
};

struct ChannelSet {
    Link sr;  // M_r x N_s
    Link rd;  // M_d x N_r
    Link sd;  // M_d x N_s
    Link rr;  // M_r x N_r (self-interference)

    const Link& link(LinkId id) const;
    Link& link(LinkId id);
};

/// Error covariance pair from the two-phase pilot protocol:
///   C_rx = 1/(2T) * ( sigma_n^2/P_max * I + 2 kappa/N * H H^H + 2 kappa/N * diag(H H^H) )
///   C_tx = I
/// where H is the channel estimate of the link, N its column count, and
/// (kappa, sigma_n^2, P_max) belong to the link's transmitter/receiver:
/// the source transmits on sr/sd and the relay on rd/rr.
struct CsiErrorCov {
    CMat c_rx;
    CMat c_tx;
};
CsiErrorCov csi_error_cov(const SystemConfig& cfg, const CMat& h_est, LinkId link);

/// Draws one channel realization. sr/rd/sd have i.i.d. CN(0, rho) entries; the
/// self-interference channel is Rician with mean sqrt(rho_rr*K/(1+K)) * ones and
/// i.i.d. CN(0, 1/(1+K)) fluctuation. Each true channel is then split into
/// estimate plus error: the error is drawn from csi_error_cov (with the true
/// channel standing in for the estimate) and H_est = H_true - error.
/// Draw order is fixed (sr, rd, sd, rr; then the error draws in the same order)
/// so realizations are reproducible for a given stream.
ChannelSet draw_channels(const SystemConfig& cfg, RandomStream& rng);

/// Copy with the estimation error removed: H_est = H_true, zero error covariances.
/// Used to build design models that treat the CSI as exact.
ChannelSet strip_csi_error(ChannelSet channels);

/// Copy with the self-interference channel (and its error statistics) zeroed,
/// as seen by a half-duplex system operating in orthogonal slots.
ChannelSet remove_self_interference(ChannelSet channels);

}  // namespace fdrelay

#endif
