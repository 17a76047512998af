#ifndef FDRELAY_PDD_HPP
#define FDRELAY_PDD_HPP

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fdrelay/covariance.hpp"
#include "fdrelay/qcqp.hpp"

namespace fdrelay::pdd {

/// Instantaneous per-chain power limits at the relay. Transmit rows of J are
/// capped with the transmit PAPR, receive chains with the receive PAPR.
struct PaprBudgets {
    double p_i_tx = 0.0;   // max instantaneous per-chain transmit power [mW]
    double p_i_rx = 0.0;   // max instantaneous per-chain receive power [mW]
    double omega_tx = 1.0; // transmit peak-to-average ratio
    double omega_rx = 1.0; // receive peak-to-average ratio
};

struct OuterRecord {
    int outer_iter = 0;
    int inner_iters = 0;
    double zeta = 0.0;
    double al = 0.0;   // augmented Lagrangian after the inner loop
    double mse = 0.0;  // tr(E) of the current (F, G, C), NaN when unevaluable
    double rho = 0.0;
};

struct ConvergenceTrace {
    std::vector<OuterRecord> outer;
    std::vector<double> inner_al;  // AL after every inner sweep of the first outer iteration
    double max_inner_al_increase = 0.0;  // largest AL rise seen inside any inner loop
    int total_inner = 0;
    bool converged = false;

    void write_outer_csv(std::ostream& os) const;  // outer_iter,inner_iters,zeta,al_value,mse,rho
    void write_inner_csv(std::ostream& os) const;  // inner_iter,al_value
};

struct PddResult {
    DesignVariables design;
    ConvergenceTrace trace;
};

struct MultiUserResult {
    CMat F;
    CMat G;
    std::vector<CMat> C;  // one equalizer per user
    ConvergenceTrace trace;
};

/// Dual-loop penalty/dual optimizer for the block-affine reformulation of the
/// MSE (or weighted-MSE rate surrogate) minimization.
///
/// Block 1 holds {F, G, C_l, J, Lt1..Lt4_l}; block 2 holds {Ft, Jt, L1..L6_l}.
/// Every equality-constraint group is affine in either block when the other is
/// fixed, so each block update is an exactly-solvable convex QP; the outer loop
/// shrinks rho (raising the penalty weight 1/(2 rho)) while the violation
/// stalls and takes dual ascent steps once it drops. Termination: total
/// violation below zeta_th.
///
/// Internally the powers are rescaled to noise units (sigma_nd^2 = 1), an exact
/// change of variables under which the MSE is invariant. Without it the
/// absolute thresholds (zeta_th, penalty weights) lose meaning at milliwatt
/// scales where covariance entries are ~1e-3. Extracted designs are mapped
/// back to the caller's units; violation(), rho and the augmented Lagrangian
/// refer to the normalized problem.
class PddSolver {
  public:
    struct Setup {
        SystemConfig cfg;
        std::vector<ChannelSet> users;  // L >= 1; the sr/rr links are read from users[0]
        bool rate_objective = false;
        std::optional<double> si_power_cap;  // cap on tr(H_rr M_out H_rr^H) via ||H_rr J||_F^2
        std::optional<PaprBudgets> papr;
        PddConfig opts;
    };

    explicit PddSolver(Setup setup);
    PddSolver(const PddSolver&) = delete;
    PddSolver& operator=(const PddSolver&) = delete;

    /// Consistent-point initialization: isotropic F at the power bound, damped
    /// matched-filter G (halved until the loop is stable, at most 10 times),
    /// MMSE C, auxiliaries set so every constraint residual is ~0, lambda = 0.
    void init_blocks(RandomStream& rng);

    double violation() const;             // zeta: sum of squared residual norms
    double augmented_lagrangian() const;  // objective + lambda terms + 1/(2 rho) penalties
    double objective_term() const;        // ||L4||^2 (sum over users) or the rate surrogate

    void update_block_b1();
    void update_block_b2();
    void update_weight();  // rate mode only: S <- (L4 L4^H + ridge)^{-1}
    void outer_update();   // rho shrink or dual step, by the violation schedule

    /// Full dual-loop run. The trace is recorded even when not converged.
    ConvergenceTrace run(RandomStream& rng);

    double rho() const { return rho_; }
    double zeta_threshold() const { return setup_.opts.zeta_th; }
    int user_count() const { return static_cast<int>(setup_.users.size()); }

    DesignVariables design() const;            // single-user extraction
    MultiUserResult multiuser_design() const;  // valid for any L (trace left empty)

    // Introspection for tests.
    const CMat& var(const std::string& name) const;
    void set_var(const std::string& name, const CMat& value);
    CMat group_residual(const std::string& name) const;
    std::vector<std::string> group_names() const;
    const CMat& weight_matrix() const { return s_weight_; }

    /// Per-user channel view (shared sr/rr, user's rd/sd) for engine evaluation.
    ChannelSet user_channels(int user) const;

  private:
    struct Var {
        std::string name;
        int block;
        Eigen::Index rows, cols;
        CMat value;
    };
    struct Group {
        std::string name;
        Eigen::Index rows, cols;
        std::vector<int> deps;  // variable ids the residual depends on
        std::function<CMat()> eval;
        CMat lambda;
    };

    std::vector<CMat> snapshot_vars() const;
    void restore_vars(const std::vector<CMat>& values);
    bool constraints_satisfied(double rel_slack) const;
    int add_var(const std::string& name, int block, Eigen::Index rows, Eigen::Index cols);
    void add_group(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                   std::vector<int> deps, std::function<CMat()> eval);
    void build_problem();
    void build_constraint_maps();
    qcqp::QuadraticProgram assemble_block_qp(int block);
    void write_back(int block, const std::vector<CMat>& solution);
    double evaluate_design_mse() const;
    int var_id(const std::string& name) const;

    Setup setup_;            // scaled to noise units (see power_scale_)
    SystemConfig orig_cfg_;  // caller's configuration, for evaluation and extraction
    double power_scale_ = 1.0;
    std::vector<Var> vars_;
    std::vector<Group> groups_;
    std::vector<int> obj_vars_;  // the L4 variables entering the objective
    CMat s_weight_;              // rate-mode weight S (identity-sized d x d)
    double rho_ = 1.0;
    double zeta_prev_ = 0.0;
    double zeta_switch_ = std::numeric_limits<double>::infinity();  // dual-step bar
    // Constant real maps of the quadratic B1 constraints (built once):
    RMat si_cap_map_;                 // ||map * vec(J)||^2 <= cap
    std::vector<RMat> papr_rx_maps_;  // per receive chain, over (F, J)
    int id_f_ = -1, id_g_ = -1, id_j_ = -1;
};

/// Algorithm: PDD-based MSE minimization. Throws NoConvergenceError when the
/// outer-iteration cap is hit with the violation still above zeta_th.
PddResult run_algorithm1(const SystemConfig& cfg, const ChannelSet& ch, const PddConfig& opts,
                         RandomStream& rng);

/// Rate maximization through the weighted-MMSE surrogate; identical machinery
/// plus the closed-form weight update S = (L4 L4^H)^{-1} each inner sweep.
PddResult run_rate_maximization(const SystemConfig& cfg, const ChannelSet& ch,
                                const PddConfig& opts, RandomStream& rng);

/// Multi-user sum-MSE minimization; users share F, G, J and the relay-side
/// auxiliaries while the destination-side constraint families replicate per user.
MultiUserResult run_multiuser(const SystemConfig& cfg, const std::vector<ChannelSet>& users,
                              const PddConfig& opts, RandomStream& rng);

/// MSE minimization with instantaneous per-chain power protection at the relay.
PddResult run_with_saturation(const SystemConfig& cfg, const ChannelSet& ch, const PddConfig& opts,
                              const PaprBudgets& papr, RandomStream& rng);

}  // namespace fdrelay::pdd

#endif
