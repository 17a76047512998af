#ifndef FDRELAY_TESTS_HELPERS_HPP
#define FDRELAY_TESTS_HELPERS_HPP

// Shared test utilities, including the independent oracles the closed forms
// are checked against. Nothing here touches the implementation paths it
// verifies: the fixed-point oracle iterates the defining relation directly and
// the projected-gradient oracle minimizes with a plain small-step method.

#include <cmath>
#include <stdexcept>

#include "fdrelay/covariance.hpp"
#include "fdrelay/qcqp.hpp"
#include "fdrelay/rng.hpp"

namespace fdrelay::test {

inline double rel_err(const CMat& got, const CMat& want) {
    return (got - want).norm() / (1.0 + want.norm());
}

/// Fixed-point oracle: iterate M_out <- G * M1(F, M_out) * G^H from zero until
/// the update moves less than tol (relative). Independent of the vectorized
/// closed-form solve.
inline CMat fixed_point_relay_output(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                                     const CMat& G, double tol = 1e-12, int max_iter = 100000) {
    CMat m_out = CMat::Zero(cfg.n_r, cfg.n_r);
    for (int it = 0; it < max_iter; ++it) {
        const CMat m1 = relay_input_cov_supp(cfg, ch, F, m_out);
        const CMat next = G * m1 * G.adjoint();
        const double step = (next - m_out).norm();
        m_out = next;
        if (step <= tol * (1.0 + m_out.norm())) return hermitian_part(m_out);
    }
    throw std::runtime_error("fixed_point_relay_output: no convergence (loop unstable?)");
}

/// Random precoder exactly at the transformed source power bound.
inline CMat random_feasible_precoder(const SystemConfig& cfg, RandomStream& rng) {
    CMat f = rng.complex_gaussian_matrix(cfg.n_s, cfg.d, 1.0);
    f *= std::sqrt(cfg.p_s_max / (1.0 + cfg.kappa_s)) / f.norm();
    return f;
}

/// Random relay gain scaled until the loop is stable and the true relay power
/// fits the budget (margin < 1 backs off from the boundary).
inline CMat random_feasible_gain(const SystemConfig& cfg, const ChannelSet& ch, const CMat& F,
                                 RandomStream& rng, double margin = 0.9) {
    CMat g = rng.complex_gaussian_matrix(cfg.n_r, cfg.m_r, 1.0);
    g /= g.norm();
    const CMat m_in0 = relay_input_cov_base(cfg, ch, F);
    const double raw = (g * m_in0 * g.adjoint()).trace().real();
    double gain = std::sqrt(margin * cfg.p_r_max / ((1.0 + cfg.kappa_r) * std::max(raw, 1e-300)));
    for (int attempt = 0; attempt < 40; ++attempt) {
        try {
            const CMat m_out = relay_output_cov(cfg, ch, F, gain * g);
            if ((1.0 + cfg.kappa_r) * m_out.trace().real() <= cfg.p_r_max) {
                return gain * g;
            }
        } catch (const RelayLoopUnstableError&) {
        }
        gain *= 0.5;
    }
    throw std::runtime_error("random_feasible_gain: could not stabilize");
}

/// Long-run projected-gradient oracle for ball-constrained least squares:
/// tiny fixed step, many iterations, projection onto disjoint variable balls.
/// Returns the final objective value.
inline double pg_oracle_objective(const qcqp::QuadraticProgram& qp, long iterations) {
    const Eigen::Index n = qp.total_real_dim();
    Eigen::Index m = 0;
    for (const auto& r : qp.residuals) m += r.b.size();
    RMat a(m, n);
    RVec b(m);
    Eigen::Index row = 0;
    for (const auto& r : qp.residuals) {
        const double s = std::sqrt(r.weight);
        a.middleRows(row, r.b.size()) = s * r.a;
        b.segment(row, r.b.size()) = s * r.b;
        row += r.b.size();
    }
    const RMat h = 2.0 * (a.transpose() * a);
    const RVec c = 2.0 * (a.transpose() * b);
    Eigen::SelfAdjointEigenSolver<RMat> eig(h);
    const double lips = std::max(eig.eigenvalues().maxCoeff(), 1e-300);
    const double step = 0.5 / lips;  // deliberately conservative

    auto project = [&](RVec& x) {
        for (const auto& ball : qp.balls) {
            Eigen::Index off = 0;
            for (int v = 0; v < ball.vars[0]; ++v) off += qp.vars[static_cast<std::size_t>(v)].real_size();
            const Eigen::Index len = qp.vars[static_cast<std::size_t>(ball.vars[0])].real_size();
            const double nrm = x.segment(off, len).norm();
            if (nrm > ball.radius) x.segment(off, len) *= ball.radius / nrm;
        }
    };
    RVec x = RVec::Zero(n);
    project(x);
    for (long it = 0; it < iterations; ++it) {
        RVec g = h * x + c;
        x -= step * g;
        project(x);
    }
    return (a * x + b).squaredNorm();
}

}  // namespace fdrelay::test

#endif
