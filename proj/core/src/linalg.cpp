#include "fdrelay/linalg.hpp"

#include <Eigen/Eigenvalues>

namespace fdrelay {

CVec vec(const CMat& x) {
    // Eigen matrices are column-major, so the raw layout is already column-stacked.
    return Eigen::Map<const CVec>(x.data(), x.size());
}

CMat unvec(const CVec& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) {
        throw DimensionError("unvec: vector length does not match target shape");
    }
    return Eigen::Map<const CMat>(v.data(), rows, cols);
}

CMat kron(const CMat& a, const CMat& b) {
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

CMat diag_part(const CMat& x) {
    if (x.rows() != x.cols()) {
        throw DimensionError("diag_part: matrix must be square");
    }
    return x.diagonal().asDiagonal();
}

SelectionMatrix::SelectionMatrix(Eigen::Index dim) : dim_(dim) {
    if (dim < 1) {
        throw DimensionError("SelectionMatrix: dimension must be at least 1");
    }
}

SelectionMatrix selection_matrix(Eigen::Index dim) { return SelectionMatrix(dim); }

CVec SelectionMatrix::apply(const CVec& v) const {
    if (v.size() != size()) {
        throw DimensionError("SelectionMatrix::apply: vector length mismatch");
    }
    CVec out = CVec::Zero(v.size());
    for (Eigen::Index i = 0; i < dim_; ++i) {
        const Eigen::Index k = i * (dim_ + 1);
        out(k) = v(k);
    }
    return out;
}

CMat SelectionMatrix::apply_right(const CMat& a) const {
    if (a.cols() != size()) {
        throw DimensionError("SelectionMatrix::apply_right: column count mismatch");
    }
    CMat out = CMat::Zero(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < dim_; ++i) {
        const Eigen::Index k = i * (dim_ + 1);
        out.col(k) = a.col(k);
    }
    return out;
}

CMat SelectionMatrix::apply_left(const CMat& a) const {
    if (a.rows() != size()) {
        throw DimensionError("SelectionMatrix::apply_left: row count mismatch");
    }
    CMat out = CMat::Zero(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < dim_; ++i) {
        const Eigen::Index k = i * (dim_ + 1);
        out.row(k) = a.row(k);
    }
    return out;
}

CMat SelectionMatrix::scale_diag_rows(const CMat& a, double c) const {
    if (a.rows() != size()) {
        throw DimensionError("SelectionMatrix::scale_diag_rows: row count mismatch");
    }
    CMat out = a;
    for (Eigen::Index i = 0; i < dim_; ++i) {
        out.row(i * (dim_ + 1)) *= (1.0 + c);
    }
    return out;
}

CMat SelectionMatrix::scale_diag_cols(const CMat& a, double c) const {
    if (a.cols() != size()) {
        throw DimensionError("SelectionMatrix::scale_diag_cols: column count mismatch");
    }
    CMat out = a;
    for (Eigen::Index i = 0; i < dim_; ++i) {
        out.col(i * (dim_ + 1)) *= (1.0 + c);
    }
    return out;
}

CVec SelectionMatrix::scale_diag_entries(const CVec& v, double c) const {
    if (v.size() != size()) {
        throw DimensionError("SelectionMatrix::scale_diag_entries: vector length mismatch");
    }
    CVec out = v;
    for (Eigen::Index i = 0; i < dim_; ++i) {
        out(i * (dim_ + 1)) *= (1.0 + c);
    }
    return out;
}

CMat SelectionMatrix::dense() const {
    CMat out = CMat::Zero(size(), size());
    for (Eigen::Index i = 0; i < dim_; ++i) {
        const Eigen::Index k = i * (dim_ + 1);
        out(k, k) = 1.0;
    }
    return out;
}

CMat hermitian_part(const CMat& x) { return 0.5 * (x + x.adjoint()); }

CMat check_hermitian_psd(const CMat& x, double rel_psd_tol) {
    if (x.rows() != x.cols()) {
        throw DimensionError("check_hermitian_psd: matrix must be square");
    }
    const double asym = (x - x.adjoint()).norm();
    if (asym > tol::hermitian * (1.0 + x.norm())) {
        throw NotPsdError("check_hermitian_psd: matrix is not Hermitian within tolerance", 0.0);
    }
    CMat h = hermitian_part(x);
    Eigen::SelfAdjointEigenSolver<CMat> eig(h);
    const RVec& vals = eig.eigenvalues();
    const double lam_max = vals.size() ? vals.maxCoeff() : 0.0;
    const double lam_min = vals.size() ? vals.minCoeff() : 0.0;
    if (lam_min < -rel_psd_tol * (1.0 + std::max(lam_max, 0.0))) {
        throw NotPsdError("check_hermitian_psd: matrix has a negative eigenvalue", lam_min);
    }
    if (lam_min < 0.0) {
        RVec clamped = vals.cwiseMax(0.0);
        h = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().adjoint();
        h = hermitian_part(h);
    }
    return h;
}

CMat herm_sqrt(const CMat& x) {
    CMat h = check_hermitian_psd(x);
    Eigen::SelfAdjointEigenSolver<CMat> eig(h);
    RVec vals = eig.eigenvalues();
    // Eigenvalues at the numerical-noise floor are rank deficiency, not signal;
    // the square root would amplify them from eps to sqrt(eps).
    const double floor = 1e-14 * std::max(vals.maxCoeff(), 0.0);
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) < floor) vals(i) = 0.0;
    }
    const RVec roots = vals.cwiseSqrt();
    CMat s = eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().adjoint();
    return hermitian_part(s);
}

LinearSolve solve_linear(const CMat& a, const CMat& b) {
    if (a.rows() != a.cols()) {
        throw DimensionError("solve_linear: matrix must be square");
    }
    if (a.rows() != b.rows()) {
        throw DimensionError("solve_linear: right-hand side row count mismatch");
    }
    Eigen::FullPivLU<CMat> lu(a);
    const double rcond = lu.rcond();
    const double condition = (lu.isInvertible() && rcond > 0.0)
                                 ? 1.0 / rcond
                                 : std::numeric_limits<double>::infinity();
    if (!lu.isInvertible() || condition > tol::condition_limit) {
        throw NearSingularError("solve_linear: system is singular or too ill-conditioned",
                                condition);
    }
    return LinearSolve{lu.solve(b), condition};
}

}  // namespace fdrelay
