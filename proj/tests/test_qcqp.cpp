#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"

using namespace fdrelay;
using qcqp::QuadraticProgram;

namespace {

/// Residual block for pure complex-linear maps: r = sum_j A_j vec(v_j) + b.
qcqp::AffineResidual complex_residual(const QuadraticProgram& qp,
                                      const std::vector<std::pair<int, CMat>>& maps,
                                      const CVec& offset, double weight = 1.0) {
    const Eigen::Index rows = offset.size();
    RMat a = RMat::Zero(2 * rows, qp.total_real_dim());
    for (const auto& [var, m] : maps) {
        const Eigen::Index off = qp.var_offset(var);
        const Eigen::Index nc = qp.vars[static_cast<std::size_t>(var)].rows *
                                qp.vars[static_cast<std::size_t>(var)].cols;
        a.block(0, off, rows, nc) = m.real();
        a.block(0, off + nc, rows, nc) = -m.imag();
        a.block(rows, off, rows, nc) = m.imag();
        a.block(rows, off + nc, rows, nc) = m.real();
    }
    RVec b(2 * rows);
    b.head(rows) = offset.real();
    b.tail(rows) = offset.imag();
    return {std::move(a), std::move(b), weight};
}

}  // namespace

TEST_CASE("solve - projection onto a ball") {
    // minimize ||x - c||^2 s.t. ||x|| <= r with ||c|| = 2r -> x = r c/||c||.
    QuadraticProgram qp;
    qp.vars.push_back({"x", 3, 1});
    RandomStream rng(80);
    CMat c = rng.complex_gaussian_matrix(3, 1, 1.0);
    const double radius = c.norm() / 2.0;
    qp.residuals.push_back(complex_residual(qp, {{0, CMat::Identity(3, 3)}}, CVec(-vec(c))));
    qp.balls.push_back({{0}, radius});
    const auto rep = qcqp::solve(qp);
    REQUIRE(rep.status == qcqp::SolveStatus::Converged);
    const CMat want = radius * c / c.norm();
    CHECK((rep.solution[0] - want).norm() < 1e-7 * radius);
    CHECK(rep.solution[0].norm() <= radius * (1.0 + 1e-9));
}

TEST_CASE("solve - unconstrained identity map returns the target") {
    QuadraticProgram qp;
    qp.vars.push_back({"x", 4, 2});
    RandomStream rng(81);
    const CMat b = rng.complex_gaussian_matrix(4, 2, 1.0);
    qp.residuals.push_back(complex_residual(qp, {{0, CMat::Identity(8, 8)}}, CVec(-vec(b))));
    const auto rep = qcqp::solve(qp);
    CHECK((rep.solution[0] - b).norm() < 1e-9);
    CHECK(rep.kkt_residual < 1e-9);
    CHECK(rep.objective < 1e-18);
}

TEST_CASE("solve - normal equations residual on random unconstrained systems") {
    RandomStream rng(82);
    for (int trial = 0; trial < 10; ++trial) {
        QuadraticProgram qp;
        qp.vars.push_back({"x", 5, 1});
        qp.vars.push_back({"y", 2, 2});
        const CMat a1 = rng.complex_gaussian_matrix(6, 5, 1.0);
        const CMat a2 = rng.complex_gaussian_matrix(6, 4, 1.0);
        const CVec b = vec(rng.complex_gaussian_matrix(6, 1, 1.0));
        qp.residuals.push_back(complex_residual(qp, {{0, a1}, {1, a2}}, b));
        const auto rep = qcqp::solve(qp);
        REQUIRE(rep.kkt_residual < 1e-9 * (1.0 + rep.objective));
    }
}

TEST_CASE("solve - matches the long-run projected-gradient oracle") {
    RandomStream rng(83);
    for (int trial = 0; trial < 8; ++trial) {
        // ~30 real unknowns split over two ball-constrained matrix variables.
        QuadraticProgram qp;
        qp.vars.push_back({"x", 3, 2});
        qp.vars.push_back({"y", 3, 1});
        const CMat a1 = rng.complex_gaussian_matrix(8, 6, 1.0);
        const CMat a2 = rng.complex_gaussian_matrix(8, 3, 1.0);
        const CVec b = vec(rng.complex_gaussian_matrix(8, 1, 2.0));
        qp.residuals.push_back(complex_residual(qp, {{0, a1}, {1, a2}}, b));
        // Radii chosen so the constraints actually bind for most draws.
        qp.balls.push_back({{0}, 0.4});
        qp.balls.push_back({{1}, 0.3});
        qcqp::SolveOptions opts;
        opts.tol = 1e-10;
        const auto rep = qcqp::solve(qp, opts);
        const double oracle = test::pg_oracle_objective(qp, 1000000);
        REQUIRE(rep.objective <= oracle * (1.0 + 1e-6) + 1e-12);
        REQUIRE(rep.objective >= oracle * (1.0 - 1e-6) - 1e-12);
        REQUIRE(rep.solution[0].norm() <= 0.4 * (1.0 + 1e-9));
        REQUIRE(rep.solution[1].norm() <= 0.3 * (1.0 + 1e-9));
    }
}

TEST_CASE("solve - row balls combined with a Frobenius ball") {
    QuadraticProgram qp;
    qp.vars.push_back({"j", 3, 2});
    RandomStream rng(84);
    const CMat target = 4.0 * rng.complex_gaussian_matrix(3, 2, 1.0);
    qp.residuals.push_back(complex_residual(qp, {{0, CMat::Identity(6, 6)}}, CVec(-vec(target))));
    qp.balls.push_back({{0}, 1.0});
    qp.row_balls.push_back({0, RVec::Constant(3, 0.7)});
    const auto rep = qcqp::solve(qp);
    REQUIRE(rep.status == qcqp::SolveStatus::Converged);
    CHECK(rep.solution[0].norm() <= 1.0 + 1e-9);
    for (int r = 0; r < 3; ++r) {
        CHECK(rep.solution[0].row(r).norm() <= 0.7 + 1e-9);
    }
    // The solution is the projection of the target onto the intersection:
    // no feasible perturbation may come closer to the target.
    const double f_opt = (rep.solution[0] - target).squaredNorm();
    for (int i = 0; i < 500; ++i) {
        CMat cand = rep.solution[0] + 0.05 * rng.complex_gaussian_matrix(3, 2, 1.0);
        if (cand.norm() > 1.0) cand *= 1.0 / cand.norm();
        for (int r = 0; r < 3; ++r) {
            const double rn = cand.row(r).norm();
            if (rn > 0.7) cand.row(r) *= 0.7 / rn;
        }
        REQUIRE((cand - target).squaredNorm() >= f_opt - 1e-9);
    }
}

TEST_CASE("solve - ellipsoid constraint via quadratic map") {
    // minimize ||x - c||^2 s.t. ||A x||^2 <= gamma.
    QuadraticProgram qp;
    qp.vars.push_back({"x", 2, 1});
    RandomStream rng(85);
    const CMat c = 3.0 * rng.complex_gaussian_matrix(2, 1, 1.0);
    qp.residuals.push_back(complex_residual(qp, {{0, CMat::Identity(2, 2)}}, CVec(-vec(c))));
    RMat a = RMat::Zero(4, 4);
    a.diagonal() << 2.0, 1.0, 2.0, 1.0;  // anisotropic
    qp.quads.push_back({{0}, a, 0.0, 1.0});
    const auto rep = qcqp::solve(qp);
    REQUIRE(rep.status == qcqp::SolveStatus::Converged);
    const RVec x = rep.x;
    CHECK((a * x).squaredNorm() <= 1.0 + 1e-8);
    // KKT: the objective gradient 2(x + b) is anti-parallel to the constraint normal.
    const RVec grad_f = 2.0 * (x + qp.residuals[0].b);
    const RVec grad_g = 2.0 * (a.transpose() * (a * x));
    const double cosang = grad_f.dot(grad_g) / (grad_f.norm() * grad_g.norm());
    CHECK(cosang < -0.999);
}

TEST_CASE("solve - infeasible quadratic bound reported") {
    QuadraticProgram qp;
    qp.vars.push_back({"x", 2, 1});
    qp.residuals.push_back(complex_residual(qp, {{0, CMat::Identity(2, 2)}},
                                            CVec(CVec::Zero(2))));
    RMat a = RMat::Identity(4, 4);
    qp.quads.push_back({{0}, a, 2.0, 1.0});  // offset above bound: empty set
    const auto rep = qcqp::solve(qp);
    CHECK(rep.status == qcqp::SolveStatus::Infeasible);
}

TEST_CASE("solve - warm start does not worsen the objective") {
    QuadraticProgram qp;
    qp.vars.push_back({"x", 4, 1});
    RandomStream rng(86);
    const CMat a = rng.complex_gaussian_matrix(5, 4, 1.0);
    const CVec b = vec(rng.complex_gaussian_matrix(5, 1, 1.0));
    qp.residuals.push_back(complex_residual(qp, {{0, a}}, b));
    qp.balls.push_back({{0}, 0.5});
    const auto cold = qcqp::solve(qp);
    const auto warm = qcqp::solve(qp, {}, &cold.x);
    CHECK(warm.objective <= cold.objective * (1.0 + 1e-8) + 1e-14);
}

TEST_CASE("complexity bound - reference arithmetic") {
    SystemConfig cfg = default_config();  // N = M = 4, d = 2
    const auto b1 = qcqp::b1_canonical_dims(cfg);
    // 4*2*(4+4) + 2*(16+16+16+16+4+2*(8+4)) = 64 + 184.
    CHECK(b1.n_tilde == Catch::Approx(248.0));
    CHECK(b1.m_tilde == Catch::Approx(3.0));
    REQUIRE(b1.l.size() == 3);
    CHECK(b1.l[0] == Catch::Approx(16.0));  // 2 d N_s
    CHECK(b1.l[1] == Catch::Approx(32.0));  // 2 N_r^2
    CHECK(b1.l[2] == Catch::Approx(2.0 * 2 * (4 + 4 + 2) + 2.0 * (16 + 16 + 16)));

    const auto b2 = qcqp::b2_canonical_dims(cfg);
    CHECK(b2.m_tilde == Catch::Approx(1.0));  // as stated, though three l's are listed
    REQUIRE(b2.l.size() == 3);
    CHECK(b2.n_tilde == Catch::Approx(2.0 * 2 * (8 + 4 + 4 + 2) + 2.0 * 48));

    // Degenerate all-ones dimensions stay positive and finite.
    SystemConfig ones = cfg;
    ones.n_s = ones.n_r = ones.m_r = ones.m_d = 1;
    ones.d = 1;
    const auto b1_ones = qcqp::b1_canonical_dims(ones);
    const double bound = qcqp::complexity_bound(b1_ones.n_tilde, b1_ones.m_tilde, b1_ones.l, 1.0);
    CHECK(bound > 0.0);
    CHECK(std::isfinite(bound));
}
