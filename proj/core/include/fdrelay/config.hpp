#ifndef FDRELAY_CONFIG_HPP
#define FDRELAY_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

namespace fdrelay {

/// x dB -> 10^(x/10) (linear power ratio).
double db_to_linear(double x_db);
double linear_to_db(double x_linear);

/// Powers are kept milliwatt-linear throughout: x dBm -> 10^(x/10) mW.
/// All power-like quantities (P_max, noise variances) use the same convention,
/// so the mW-vs-W scale cancels in every ratio the formulas form.
double dbm_to_mw(double x_dbm);
double dbm_to_watts(double x_dbm);

/// Physical and design parameters of the relay link. Counts are antenna/stream
/// numbers; powers and noise variances are linear in mW; distortion
/// coefficients, path gains and the Rician factor are linear ratios.
struct SystemConfig {
    int n_s = 4;  // source transmit antennas
    int n_r = 4;  // relay transmit antennas
    int m_r = 4;  // relay receive antennas
    int m_d = 4;  // destination receive antennas
    int d = 2;    // data streams

    double p_s_max = 1.0;     // source power budget [mW]
    double p_r_max = 1.0;     // relay power budget [mW]
    double sigma2_nr = 1e-4;  // relay noise variance [mW]
    double sigma2_nd = 1e-4;  // destination noise variance [mW]

    double kappa_s = 1e-4;  // source transmit distortion coefficient
    double kappa_r = 1e-4;  // relay transmit distortion coefficient
    double beta_r = 1e-4;   // relay receive distortion coefficient
    double beta_d = 1e-4;   // destination receive distortion coefficient

    double rho_sr = 1e-3;  // source-relay path gain
    double rho_rd = 1e-3;  // relay-destination path gain
    double rho_sd = 1e-3;  // source-destination path gain
    double rho_rr = 1.0;   // self-interference channel strength

    double k_rician = 10.0;  // Rician factor of the self-interference channel
    int t_training = 1000;   // symbols dedicated to CSI estimation
    double bandwidth = 1.0;  // [Hz]; only scales the achievable rate

    /// Throws std::invalid_argument when an invariant is violated
    /// (counts >= 1, d <= min of the antenna counts, positive powers, ...).
    void validate() const;
};

/// Paper-scale default setup: N = M = 4, d = 2, rho_rr = 0 dB, other path
/// gains -30 dB, noise -40 dBm, P_max = 0 dBm, kappa = beta = -40 dB, K = 10.
SystemConfig default_config();

/// Reduced 2x2, d = 1 setup with the same physical parameters; used for CI-speed
/// experiment sweeps and the acceptance suite.
SystemConfig desk_config();

/// Penalty/dual optimizer knobs (documented in pdd.hpp; stored here so a single
/// config file carries both parameter groups).
struct PddConfig {
    double rho0 = 1.0;        // initial penalty parameter (weight is 1/(2 rho))
    double c_rho = 0.6;       // multiplicative shrink of rho when violation stalls
    double zeta_th = 1e-5;    // outer-loop termination threshold on the violation
    double eps_inner = 1e-6;  // relative stop for the inner-loop objective decrease
    int max_outer = 60;
    int max_inner = 50;
    double qp_tol = 1e-8;  // per-subproblem solver tolerance
    int qp_max_iter = 5000;

    void validate() const;
};

/// Plain "key = value" config with '#' comments. Keys mirror the struct field
/// names exactly; ratio-valued keys also accept a _db suffix and power-valued
/// keys a _dbm suffix, both converted with the 10^(x/10) rule at load.
struct FileConfig {
    SystemConfig system;
    PddConfig pdd;
};

FileConfig load_config_file(const std::string& path);
void save_config_file(const FileConfig& cfg, const std::string& path);

/// Applies one named sweep parameter. Supported names: kappa (sets all four
/// distortion coefficients), sigma_n2 [mW], T, dims (sets N_s=N_r=M_r=M_d),
/// rho_rr. Throws std::invalid_argument for unknown names.
SystemConfig apply_sweep_value(SystemConfig base, const std::string& param, double value);

}  // namespace fdrelay

#endif
