#ifndef FDRELAY_LINALG_HPP
#define FDRELAY_LINALG_HPP

#include <Eigen/Dense>
#include <complex>

#include "fdrelay/errors.hpp"

namespace fdrelay {

using cxd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Numerical tolerances used throughout the library. Mutable so a caller can
/// tighten or relax them globally; defaults match the documented contracts.
namespace tol {
inline double hermitian = 1e-10;       // relative asymmetry allowed in Hermitian inputs
inline double psd = 1e-9;              // relative negative-eigenvalue slack for PSD inputs
inline double solve_residual = 1e-9;   // relative residual bound for linear solves
inline double condition_limit = 1e12;  // condition number beyond which a solve is rejected
inline double loop_margin = 1e-6;      // distance from unit spectral radius treated as unstable
}  // namespace tol

/// Column-stacking vectorization: entry (i,j) maps to index j*rows + i.
CVec vec(const CMat& x);

/// Inverse of vec() for a rows x cols target.
CMat unvec(const CVec& v, Eigen::Index rows, Eigen::Index cols);

/// Kronecker product, (m_a*m_b) x (n_a*n_b). Satisfies
/// vec(A1*A2*A3) = (A3^T kron A1) * vec(A2) with column-stacking vec().
CMat kron(const CMat& a, const CMat& b);

/// Diagonal part of a square matrix as a matrix (off-diagonal entries zeroed).
CMat diag_part(const CMat& x);

/// Selection matrix D_M with D_M*vec(X) = vec(diag_part(X)) for any M x M matrix X.
/// Stored implicitly; D_M is diagonal with ones exactly at indices i*(M+1), i = 0..M-1.
class SelectionMatrix {
  public:
    explicit SelectionMatrix(Eigen::Index dim);

    Eigen::Index dim() const noexcept { return dim_; }
    Eigen::Index size() const noexcept { return dim_ * dim_; }  // acts on vectors of this length

    /// D_M * v: zero every entry that is not a diagonal position.
    CVec apply(const CVec& v) const;

    /// A * D_M: zero the columns of A at non-diagonal positions.
    CMat apply_right(const CMat& a) const;

    /// D_M * A: zero the rows of A at non-diagonal positions.
    CMat apply_left(const CMat& a) const;

    /// (I + c*D_M) * A: scale the diagonal-position rows of A by (1 + c).
    CMat scale_diag_rows(const CMat& a, double c) const;

    /// A * (I + c*D_M): scale the diagonal-position columns of A by (1 + c).
    CMat scale_diag_cols(const CMat& a, double c) const;

    /// (I + c*D_M) * v: scale the diagonal-position entries of v by (1 + c).
    CVec scale_diag_entries(const CVec& v, double c) const;

    /// Dense M^2 x M^2 realization, for tests only.
    CMat dense() const;

  private:
    Eigen::Index dim_;
};

SelectionMatrix selection_matrix(Eigen::Index dim);

/// Hermitian part (X + X^H)/2.
CMat hermitian_part(const CMat& x);

/// Throws NotPsdError/DimensionError unless x is Hermitian within tol::hermitian
/// and PSD within rel_psd_tol (relative to the largest eigenvalue).
/// Returns the symmetrized matrix with tiny negative eigenvalues clamped to zero.
CMat check_hermitian_psd(const CMat& x, double rel_psd_tol = tol::psd);

/// Principal (Hermitian PSD) square root: returns S with S*S^H = X.
/// Throws NotPsdError if X is not PSD beyond tolerance.
CMat herm_sqrt(const CMat& x);

/// Solution of the square system A*X = B together with a condition estimate.
struct LinearSolve {
    CMat x;
    double condition;  // estimated 2-norm condition number of A
};

/// Solves A*X = B for square A. Throws NearSingularError when the estimated
/// condition number exceeds tol::condition_limit, carrying the estimate.
LinearSolve solve_linear(const CMat& a, const CMat& b);

}  // namespace fdrelay

#endif
