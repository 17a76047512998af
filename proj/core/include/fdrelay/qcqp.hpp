#ifndef FDRELAY_QCQP_HPP
#define FDRELAY_QCQP_HPP

#include <optional>
#include <string>
#include <vector>

#include "fdrelay/config.hpp"
#include "fdrelay/linalg.hpp"

namespace fdrelay::qcqp {

/// A named complex matrix variable. Its real coordinates are
/// [Re vec(V); Im vec(V)] (column-stacked), and variables are concatenated in
/// declaration order to form the solver's real decision vector.
struct VariableSpec {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index real_size() const { return 2 * rows * cols; }
};

/// One residual group contributing weight * ||A x + b||^2 to the objective,
/// expressed directly on the stacked real variable (covers complex-linear and
/// conjugate-linear maps alike).
struct AffineResidual {
    RMat a;
    RVec b;
    double weight = 1.0;
};

/// ||stacked reals of the listed variables||_2 <= radius
/// (equals the joint Frobenius norm of the complex matrices).
struct BallConstraint {
    std::vector<int> vars;
    double radius = 0.0;
};

/// ||row l of the complex matrix variable||_2 <= radii[l] for every row.
struct RowBallConstraint {
    int var = 0;
    RVec radii;
};

/// ||A * x_sub||^2 + offset <= bound, where x_sub concatenates the stacked
/// reals of the listed variables. A convex quadratic (ellipsoidal) constraint.
struct QuadConstraint {
    std::vector<int> vars;
    RMat a;
    double offset = 0.0;
    double bound = 0.0;
};

struct QuadraticProgram {
    std::vector<VariableSpec> vars;
    std::vector<AffineResidual> residuals;
    std::optional<RVec> linear;  // + q^T x
    std::vector<BallConstraint> balls;
    std::vector<RowBallConstraint> row_balls;
    std::vector<QuadConstraint> quads;

    Eigen::Index total_real_dim() const;
    Eigen::Index var_offset(int var) const;

    /// Round-trips between per-variable complex matrices and the stacked reals.
    RVec stack(const std::vector<CMat>& values) const;
    std::vector<CMat> unstack(const RVec& x) const;
};

enum class SolveStatus { Converged, MaxIter, Infeasible };

struct SolveOptions {
    double tol = 1e-8;      // stop when ||proj-gradient|| <= tol * (1 + ||gradient at 0||)
    int max_iter = 5000;
    double ridge = 1e-12;   // Tikhonov term for (near) rank-deficient least squares
};

struct SolveReport {
    std::vector<CMat> solution;
    RVec x;
    double objective = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
    SolveStatus status = SolveStatus::Converged;
};

/// Minimizes sum_k w_k ||A_k x + b_k||^2 + q^T x over the constraint set.
/// Unconstrained programs are solved exactly via ridge-regularized normal
/// equations. Constrained programs run a monotone accelerated projected
/// gradient on the constrained coordinates (unconstrained coordinates are
/// eliminated exactly first); projections onto balls, per-row balls and
/// ellipsoids are closed-form/secular, and overlapping sets are handled with
/// Dykstra's algorithm.
SolveReport solve(const QuadraticProgram& qp, const SolveOptions& opts = {},
                  const RVec* warm_start = nullptr);

/// Interior-point arithmetic complexity bound for the canonical conic QCQP
/// with real dimension n, m ball constraints of dimensions l:
///   (1 + m)^(1/2) * n * (n^2 + m + sum l_k^2) * digits.
/// Reported as a diagnostic; the solver above is a different algorithm class.
double complexity_bound(double n_tilde, double m_tilde, const std::vector<double>& l,
                        double eps_digits);

/// Canonical-form dimensions of the two block subproblems for a given setup.
struct CanonicalDims {
    double n_tilde = 0.0;
    double m_tilde = 0.0;
    std::vector<double> l;
};
CanonicalDims b1_canonical_dims(const SystemConfig& cfg);
CanonicalDims b2_canonical_dims(const SystemConfig& cfg);

}  // namespace fdrelay::qcqp

#endif
