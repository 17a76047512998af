#ifndef FDRELAY_COVARIANCE_HPP
#define FDRELAY_COVARIANCE_HPP

#include "fdrelay/channel.hpp"
#include "fdrelay/config.hpp"
#include "fdrelay/linalg.hpp"

namespace fdrelay {

/// The three tunable matrices of the link.
struct DesignVariables {
    CMat F;  // source precoder, N_s x d
    CMat G;  // relay amplification, N_r x M_r
    CMat C;  // destination equalizer, M_d x d
};

/// Mean transmit powers implied by a design (distortion overhead included):
/// source: (1 + kappa_s) ||F||_F^2, relay: (1 + kappa_r) tr(M_out).
double source_tx_power(const SystemConfig& cfg, const CMat& F);
double relay_tx_power(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F, const CMat& G);

/// True when both power budgets hold with relative slack rel_tol.
bool design_feasible(const SystemConfig& cfg, const ChannelSet& ch, const DesignVariables& dv,
                     double rel_tol = 1e-6);

/// Covariance of the undistorted relay input with the relay transmitter off:
///   M_in,0 = H_sr (F F^H + kappa_s diag(F F^H)) H_sr^H
///          + C_rx,sr tr(C_tx,sr (F F^H + kappa_s diag(F F^H))) + sigma_nr^2 I.
CMat relay_input_cov_base(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F);

/// Coupling matrix B of the vectorized self-interference loop, M_r^2 x N_r^2:
/// maps vec of the relay output covariance to vec of the covariance it adds
/// back into the relay input through distortion and CSI-error leakage.
CMat si_coupling_matrix(const SystemConfig& cfg, const ChannelSet& ch);

/// Relay transfer function: vec(E{r_out r_out^H}) = Theta * vec(M_in,0).
struct RelayTransfer {
    CMat theta;            // N_r^2 x M_r^2
    CMat coupling;         // B, M_r^2 x N_r^2
    double loop_condition; // condition estimate of I - (G* kron G) B
};
RelayTransfer relay_transfer(const SystemConfig& cfg, const ChannelSet& ch, const CMat& G);

/// Undistorted relay transmit covariance M_out, from the closed-form solve of
/// the loop fixed point M_out = G * M1(F, M_out) * G^H in vectorized form.
/// Throws RelayLoopUnstableError when the loop's spectral radius reaches
/// 1 - tol::loop_margin, NotPsdError if the symmetrized solution is indefinite.
CMat relay_output_cov(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F, const CMat& G);

/// Covariance of the interference-suppressed relay input, first order in the
/// distortion coefficients: M1(F, M_out).
CMat relay_input_cov_supp(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                          const CMat& M_out);

/// Full undistorted relay input covariance M_in (relay transmitting), used for
/// the receive-distortion variance.
CMat relay_input_cov_full(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                          const CMat& M_out);

/// Covariance of the undistorted destination input u_d (no beta_d term).
CMat dest_undistorted_cov(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                          const CMat& M_out);

/// Total received covariance at the destination, M2(F, M_out), first order in
/// the distortion coefficients (beta_d diagonal term included).
CMat dest_input_cov(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                    const CMat& M_out);

/// Equivalent source-destination channel through the relay: H_rd G H_sr.
CMat equivalent_channel(const ChannelSet& ch, const CMat& G);

/// Symbol-error covariance E = C^H M2 C + I - C^H H_eq F - F^H H_eq^H C,
/// with M_out obtained from relay_output_cov. tr(E) is the scalar MSE.
CMat mse_matrix(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F, const CMat& G,
                const CMat& C);

/// MMSE destination equalizer C* = M2^{-1} H_eq F for the given (F, G).
CMat mmse_receiver(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F, const CMat& G);

/// Achievable rate W log2 |I + F^H H_eq^H Gamma^{-1} H_eq F| with
/// Gamma = M2 - H_eq F F^H H_eq^H. Throws DomainError when Gamma is not
/// positive definite.
double achievable_rate(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                       const CMat& G);

}  // namespace fdrelay

#endif
