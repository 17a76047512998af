#include "fdrelay/qcqp.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace fdrelay::qcqp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Eigen::Index QuadraticProgram::total_real_dim() const {
    Eigen::Index n = 0;
    for (const auto& v : vars) n += v.real_size();
    return n;
}

Eigen::Index QuadraticProgram::var_offset(int var) const {
    Eigen::Index off = 0;
    for (int i = 0; i < var; ++i) off += vars[i].real_size();
    return off;
}

RVec QuadraticProgram::stack(const std::vector<CMat>& values) const {
    RVec x(total_real_dim());
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        const Eigen::Index nc = vars[i].rows * vars[i].cols;
        const CVec v = vec(values[i]);
        x.segment(off, nc) = v.real();
        x.segment(off + nc, nc) = v.imag();
        off += 2 * nc;
    }
    return x;
}

std::vector<CMat> QuadraticProgram::unstack(const RVec& x) const {
    std::vector<CMat> out;
    out.reserve(vars.size());
    Eigen::Index off = 0;
    for (const auto& v : vars) {
        const Eigen::Index nc = v.rows * v.cols;
        CVec cv(nc);
        cv.real() = x.segment(off, nc);
        cv.imag() = x.segment(off + nc, nc);
        out.push_back(unvec(cv, v.rows, v.cols));
        off += 2 * nc;
    }
    return out;
}

namespace {

/// Exact projection of a set of per-row-capped rows onto a joint Frobenius
/// ball: every row shrinks along itself, the common shrink factor solved from
/// the monotone secular equation sum_l min(r_l, n_l/(1+mu))^2 = R^2.
struct VarGroupProjector {
    std::vector<Eigen::Index> idx;  // this variable's coordinates in x
    Eigen::Index rows = 0, cols = 0;
    RVec row_radii;       // +inf when a row is uncapped
    double frob_radius = kInf;

    void project(RVec& sub) const {
        const Eigen::Index rc = rows * cols;
        RVec row_norm = RVec::Zero(rows);
        for (Eigen::Index k = 0; k < cols; ++k) {
            for (Eigen::Index l = 0; l < rows; ++l) {
                const double re = sub(l + k * rows);
                const double im = sub(rc + l + k * rows);
                row_norm(l) += re * re + im * im;
            }
        }
        row_norm = row_norm.cwiseSqrt();

        RVec t(rows);
        for (Eigen::Index l = 0; l < rows; ++l) {
            t(l) = (row_norm(l) > row_radii(l)) ? row_radii(l) / row_norm(l) : 1.0;
        }
        if (std::isfinite(frob_radius)) {
            auto clipped_sq = [&](double mu) {
                double s = 0.0;
                for (Eigen::Index l = 0; l < rows; ++l) {
                    const double v = std::min(row_radii(l), row_norm(l) / (1.0 + mu));
                    s += v * v;
                }
                return s;
            };
            const double target = frob_radius * frob_radius;
            if (clipped_sq(0.0) > target * (1.0 + 1e-15)) {
                double lo = 0.0, hi = 1.0;
                while (clipped_sq(hi) > target) hi *= 4.0;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (clipped_sq(mid) > target ? lo : hi) = mid;
                }
                const double mu = 0.5 * (lo + hi);
                for (Eigen::Index l = 0; l < rows; ++l) {
                    const double cap = (row_norm(l) > 0.0) ? row_radii(l) / row_norm(l) : 1.0;
                    t(l) = std::min(cap, 1.0 / (1.0 + mu));
                }
            }
        }
        for (Eigen::Index k = 0; k < cols; ++k) {
            for (Eigen::Index l = 0; l < rows; ++l) {
                sub(l + k * rows) *= t(l);
                sub(rc + l + k * rows) *= t(l);
            }
        }
    }
};

/// Plain Euclidean ball over an arbitrary coordinate subset.
struct BallProjector {
    std::vector<Eigen::Index> idx;
    double radius = 0.0;

    void project(RVec& sub) const {
        const double n = sub.norm();
        if (n > radius) sub *= radius / n;
    }
};

/// Ellipsoid { z : z^T Q z <= gamma } with Q = A^T A diagonalized up front;
/// the projection multiplier solves the decreasing secular equation
/// sum_i lam_i w_i^2 / (1 + mu lam_i)^2 = gamma.
struct EllipsoidProjector {
    std::vector<Eigen::Index> idx;
    RMat basis;   // eigenvectors of Q
    RVec lam;     // eigenvalues (clamped >= 0)
    double gamma = 0.0;

    void project(RVec& sub) const {
        RVec w = basis.transpose() * sub;
        auto value = [&](double mu) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < w.size(); ++i) {
                const double den = 1.0 + mu * lam(i);
                s += lam(i) * w(i) * w(i) / (den * den);
            }
            return s;
        };
        if (value(0.0) <= gamma * (1.0 + 1e-15)) return;
        double lo = 0.0, hi = 1.0;
        while (value(hi) > gamma) hi *= 4.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (value(mid) > gamma ? lo : hi) = mid;
        }
        const double mu = 0.5 * (lo + hi);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w(i) /= (1.0 + mu * lam(i));
        }
        sub = basis * w;
    }
};

struct AnyProjector {
    std::vector<Eigen::Index> idx;
    std::function<void(RVec&)> apply;  // acts on the gathered subvector
};

void apply_on(RVec& x, const AnyProjector& p) {
    RVec sub(static_cast<Eigen::Index>(p.idx.size()));
    for (std::size_t i = 0; i < p.idx.size(); ++i) sub(static_cast<Eigen::Index>(i)) = x(p.idx[i]);
    p.apply(sub);
    for (std::size_t i = 0; i < p.idx.size(); ++i) x(p.idx[i]) = sub(static_cast<Eigen::Index>(i));
}

bool pairwise_disjoint(const std::vector<AnyProjector>& ps) {
    std::vector<Eigen::Index> all;
    for (const auto& p : ps) all.insert(all.end(), p.idx.begin(), p.idx.end());
    std::sort(all.begin(), all.end());
    return std::adjacent_find(all.begin(), all.end()) == all.end();
}

/// Exact projection when sets are disjoint; Dykstra's alternating scheme with
/// correction terms otherwise.
class FeasibleSet {
  public:
    FeasibleSet(std::vector<AnyProjector> ps, Eigen::Index dim)
        : projectors_(std::move(ps)), disjoint_(pairwise_disjoint(projectors_)), dim_(dim) {}

    bool empty() const { return projectors_.empty(); }

    void project(RVec& x) const {
        if (projectors_.empty()) return;
        if (disjoint_) {
            for (const auto& p : projectors_) apply_on(x, p);
            return;
        }
        std::vector<RVec> increments(projectors_.size());
        for (std::size_t i = 0; i < projectors_.size(); ++i) {
            increments[i] = RVec::Zero(static_cast<Eigen::Index>(projectors_[i].idx.size()));
        }
        const double scale = 1.0 + x.norm();
        RVec prev = x;
        for (int sweep = 0; sweep < 500; ++sweep) {
            for (std::size_t i = 0; i < projectors_.size(); ++i) {
                const auto& p = projectors_[i];
                RVec sub(static_cast<Eigen::Index>(p.idx.size()));
                for (std::size_t k = 0; k < p.idx.size(); ++k) {
                    sub(static_cast<Eigen::Index>(k)) = x(p.idx[k]);
                }
                RVec z = sub + increments[i];
                RVec projected = z;
                p.apply(projected);
                increments[i] = z - projected;
                for (std::size_t k = 0; k < p.idx.size(); ++k) {
                    x(p.idx[k]) = projected(static_cast<Eigen::Index>(k));
                }
            }
            if ((x - prev).norm() <= 1e-14 * scale) break;
            prev = x;
        }
    }

  private:
    std::vector<AnyProjector> projectors_;
    bool disjoint_;
    Eigen::Index dim_;
};

std::vector<Eigen::Index> concat_indices(const QuadraticProgram& qp, const std::vector<int>& vars) {
    std::vector<Eigen::Index> idx;
    for (int v : vars) {
        const Eigen::Index off = qp.var_offset(v);
        for (Eigen::Index k = 0; k < qp.vars[static_cast<std::size_t>(v)].real_size(); ++k) {
            idx.push_back(off + k);
        }
    }
    return idx;
}

}  // namespace

SolveReport solve(const QuadraticProgram& qp, const SolveOptions& opts, const RVec* warm_start) {
    const Eigen::Index n = qp.total_real_dim();

    // Stack the weighted residual rows: objective = ||A x + b||^2 + q^T x.
    Eigen::Index m = 0;
    for (const auto& r : qp.residuals) m += r.b.size();
    RMat a_all(m, n);
    RVec b_all(m);
    Eigen::Index row = 0;
    for (const auto& r : qp.residuals) {
        if (r.a.rows() != r.b.size() || r.a.cols() != n) {
            throw DimensionError("qcqp::solve: residual block shape mismatch");
        }
        const double s = std::sqrt(r.weight);
        a_all.middleRows(row, r.b.size()) = s * r.a;
        b_all.segment(row, r.b.size()) = s * r.b;
        row += r.b.size();
    }
    RVec q = qp.linear ? *qp.linear : RVec(RVec::Zero(n));
    if (q.size() != n) throw DimensionError("qcqp::solve: linear term dimension mismatch");

    auto full_objective = [&](const RVec& x) {
        return (a_all * x + b_all).squaredNorm() + q.dot(x);
    };
    auto finish = [&](RVec x, int iters, double kkt, SolveStatus status) {
        SolveReport rep;
        rep.objective = full_objective(x);
        rep.solution = qp.unstack(x);
        rep.x = std::move(x);
        rep.iterations = iters;
        rep.kkt_residual = kkt;
        rep.status = status;
        return rep;
    };

    const bool constrained = !qp.balls.empty() || !qp.row_balls.empty() || !qp.quads.empty();
    if (!constrained) {
        const RMat gram = a_all.transpose() * a_all +
                          opts.ridge * RMat::Identity(n, n);
        const RVec rhs = -(a_all.transpose() * b_all + 0.5 * q);
        const RVec x = gram.ldlt().solve(rhs);
        const double kkt = (2.0 * (a_all.transpose() * (a_all * x + b_all)) + q).norm();
        return finish(x, 1, kkt, SolveStatus::Converged);
    }

    // Build elementary projectors: per-variable ball/row-ball groups, joint
    // multi-variable balls, and ellipsoids.
    std::vector<AnyProjector> projectors;
    std::vector<double> var_frob(qp.vars.size(), kInf);
    std::vector<RVec> var_rows(qp.vars.size());
    for (const auto& b : qp.balls) {
        if (!(b.radius > 0.0)) throw DomainError("qcqp::solve: ball radius must be positive");
        if (b.vars.size() == 1) {
            auto v = static_cast<std::size_t>(b.vars[0]);
            var_frob[v] = std::min(var_frob[v], b.radius);
        } else {
            AnyProjector p;
            p.idx = concat_indices(qp, b.vars);
            auto ball = std::make_shared<BallProjector>();
            ball->radius = b.radius;
            p.apply = [ball](RVec& sub) { ball->project(sub); };
            projectors.push_back(std::move(p));
        }
    }
    for (const auto& rb : qp.row_balls) {
        auto v = static_cast<std::size_t>(rb.var);
        if (rb.radii.size() != qp.vars[v].rows) {
            throw DimensionError("qcqp::solve: row-ball radii count mismatch");
        }
        if (!(rb.radii.minCoeff() > 0.0)) {
            throw DomainError("qcqp::solve: row-ball radii must be positive");
        }
        if (var_rows[v].size() == 0) {
            var_rows[v] = rb.radii;
        } else {
            var_rows[v] = var_rows[v].cwiseMin(rb.radii);
        }
    }
    for (std::size_t v = 0; v < qp.vars.size(); ++v) {
        if (!std::isfinite(var_frob[v]) && var_rows[v].size() == 0) continue;
        auto g = std::make_shared<VarGroupProjector>();
        g->rows = qp.vars[v].rows;
        g->cols = qp.vars[v].cols;
        g->frob_radius = var_frob[v];
        g->row_radii = var_rows[v].size() ? var_rows[v] : RVec::Constant(g->rows, kInf);
        AnyProjector p;
        p.idx = concat_indices(qp, {static_cast<int>(v)});
        p.apply = [g](RVec& sub) { g->project(sub); };
        projectors.push_back(std::move(p));
    }
    for (const auto& e : qp.quads) {
        const double gamma = e.bound - e.offset;
        if (!(gamma > 0.0)) {
            return finish(RVec::Zero(n), 0, 0.0, SolveStatus::Infeasible);
        }
        AnyProjector p;
        p.idx = concat_indices(qp, e.vars);
        if (e.a.cols() != static_cast<Eigen::Index>(p.idx.size())) {
            throw DimensionError("qcqp::solve: quadratic constraint map width mismatch");
        }
        auto ell = std::make_shared<EllipsoidProjector>();
        Eigen::SelfAdjointEigenSolver<RMat> eig(e.a.transpose() * e.a);
        ell->basis = eig.eigenvectors();
        ell->lam = eig.eigenvalues().cwiseMax(0.0);
        ell->gamma = gamma;
        p.apply = [ell](RVec& sub) { ell->project(sub); };
        projectors.push_back(std::move(p));
    }
    FeasibleSet feasible(std::move(projectors), n);

    // Split coordinates into constrained (kept for projected gradient) and
    // free ones, which are eliminated exactly through their normal equations.
    std::vector<bool> in_w(static_cast<std::size_t>(n), false);
    for (const auto& b : qp.balls) {
        for (auto i : concat_indices(qp, b.vars)) in_w[static_cast<std::size_t>(i)] = true;
    }
    for (const auto& rb : qp.row_balls) {
        for (auto i : concat_indices(qp, {rb.var})) in_w[static_cast<std::size_t>(i)] = true;
    }
    for (const auto& e : qp.quads) {
        for (auto i : concat_indices(qp, e.vars)) in_w[static_cast<std::size_t>(i)] = true;
    }
    std::vector<Eigen::Index> w_idx, u_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
        (in_w[static_cast<std::size_t>(i)] ? w_idx : u_idx).push_back(i);
    }
    const auto nw = static_cast<Eigen::Index>(w_idx.size());
    const auto nu = static_cast<Eigen::Index>(u_idx.size());

    RMat a_w(m, nw), a_u(m, nu);
    for (Eigen::Index k = 0; k < nw; ++k) a_w.col(k) = a_all.col(w_idx[static_cast<std::size_t>(k)]);
    for (Eigen::Index k = 0; k < nu; ++k) a_u.col(k) = a_all.col(u_idx[static_cast<std::size_t>(k)]);
    RVec q_w(nw), q_u(nu);
    for (Eigen::Index k = 0; k < nw; ++k) q_w(k) = q(w_idx[static_cast<std::size_t>(k)]);
    for (Eigen::Index k = 0; k < nu; ++k) q_u(k) = q(u_idx[static_cast<std::size_t>(k)]);

    RMat a_red = a_w;
    RVec b_red = b_all;
    RVec q_red = q_w;
    RMat u_shift;  // u*(w) = u0 + u1 w
    RVec u_base;
    if (nu > 0) {
        const RMat gram_u = a_u.transpose() * a_u + opts.ridge * RMat::Identity(nu, nu);
        Eigen::LDLT<RMat> ldlt(gram_u);
        u_shift = -ldlt.solve(a_u.transpose() * a_w);
        u_base = -ldlt.solve(a_u.transpose() * b_all + 0.5 * q_u);
        a_red = a_u * u_shift + a_w;
        b_red = a_u * u_base + b_all;
        q_red = u_shift.transpose() * q_u + q_w;
    }

    const RMat h = 2.0 * (a_red.transpose() * a_red);
    const RVec c = 2.0 * (a_red.transpose() * b_red) + q_red;
    double lips = 0.0;
    if (nw > 0) {
        Eigen::SelfAdjointEigenSolver<RMat> eig(h);
        lips = std::max(eig.eigenvalues().maxCoeff(), 0.0);
    }

    // Constraints as quadratic forms on the reduced coordinates:
    // c_m(w) = w^T Q_m w + offset_m <= bound_m. Balls and row balls are
    // selector-diagonal cases of the same form.
    struct QuadForm {
        RMat q;          // nw x nw PSD
        double offset;
        double bound;
    };
    std::vector<QuadForm> forms;
    std::vector<Eigen::Index> w_pos(static_cast<std::size_t>(n), -1);
    for (Eigen::Index k = 0; k < nw; ++k) w_pos[static_cast<std::size_t>(w_idx[static_cast<std::size_t>(k)])] = k;
    auto selector_form = [&](const std::vector<Eigen::Index>& idx, double radius) {
        QuadForm f{RMat::Zero(nw, nw), 0.0, radius * radius};
        for (auto i : idx) {
            const Eigen::Index p = w_pos[static_cast<std::size_t>(i)];
            f.q(p, p) = 1.0;
        }
        return f;
    };
    for (const auto& b : qp.balls) {
        forms.push_back(selector_form(concat_indices(qp, b.vars), b.radius));
    }
    for (const auto& rb : qp.row_balls) {
        const auto& v = qp.vars[static_cast<std::size_t>(rb.var)];
        const Eigen::Index off = qp.var_offset(rb.var);
        const Eigen::Index rc = v.rows * v.cols;
        for (Eigen::Index r = 0; r < v.rows; ++r) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index col = 0; col < v.cols; ++col) {
                idx.push_back(off + r + col * v.rows);
                idx.push_back(off + rc + r + col * v.rows);
            }
            forms.push_back(selector_form(idx, rb.radii(r)));
        }
    }
    for (const auto& e : qp.quads) {
        const auto idx = concat_indices(qp, e.vars);
        RMat lift = RMat::Zero(e.a.rows(), nw);
        for (Eigen::Index col = 0; col < e.a.cols(); ++col) {
            lift.col(w_pos[static_cast<std::size_t>(idx[static_cast<std::size_t>(col)])]) = e.a.col(col);
        }
        forms.push_back({lift.transpose() * lift, e.offset, e.bound});
    }

    auto reconstruct = [&](const RVec& w) {
        RVec x(n);
        for (Eigen::Index k = 0; k < nw; ++k) x(w_idx[static_cast<std::size_t>(k)]) = w(k);
        if (nu > 0) {
            const RVec u = u_base + u_shift * w;
            for (Eigen::Index k = 0; k < nu; ++k) x(u_idx[static_cast<std::size_t>(k)]) = u(k);
        }
        return x;
    };

    // Exact path: dual coordinate ascent over the constraint multipliers with
    // direct primal solves. Each multiplier's slack is monotone in it, so a
    // safeguarded bisection per coordinate converges; a handful of sweeps
    // settles the active set. Falls back to projected gradient when the KKT
    // conditions do not close (rare; e.g. degenerate geometry).
    {
        const auto nf = static_cast<Eigen::Index>(forms.size());
        RVec mu = RVec::Zero(nf);
        const RMat h_half = a_red.transpose() * a_red + opts.ridge * RMat::Identity(nw, nw);
        const RVec rhs = -(a_red.transpose() * b_red + 0.5 * q_red);
        auto primal = [&](const RVec& mult) {
            RMat sys = h_half;
            for (Eigen::Index m = 0; m < nf; ++m) {
                if (mult(m) > 0.0) sys += mult(m) * forms[static_cast<std::size_t>(m)].q;
            }
            return RVec(sys.ldlt().solve(rhs));
        };
        auto slack = [&](const RVec& w, Eigen::Index m) {
            const auto& f = forms[static_cast<std::size_t>(m)];
            return w.dot(f.q * w) + f.offset - f.bound;  // <= 0 feasible
        };
        const double feas_tol = 1e-12;
        bool ok = false;
        for (int sweep = 0; sweep < 60 && !ok; ++sweep) {
            for (Eigen::Index m = 0; m < nf; ++m) {
                RVec w = primal(mu);
                double s = slack(w, m);
                const double scale = std::abs(forms[static_cast<std::size_t>(m)].bound) + 1e-30;
                if (s <= feas_tol * scale) {
                    // Feasible: multiplier decreases toward complementarity.
                    if (mu(m) > 0.0) {
                        double hi = mu(m), lo = 0.0;
                        RVec mu_try = mu;
                        mu_try(m) = 0.0;
                        if (slack(primal(mu_try), m) <= feas_tol * scale) {
                            mu(m) = 0.0;
                            continue;
                        }
                        for (int it = 0; it < 80; ++it) {
                            const double mid = 0.5 * (lo + hi);
                            mu_try(m) = mid;
                            (slack(primal(mu_try), m) > 0.0 ? lo : hi) = mid;
                        }
                        mu(m) = hi;
                    }
                } else {
                    // Violated: raise the multiplier until the constraint closes.
                    double lo = mu(m), hi = std::max(2.0 * mu(m), 1.0);
                    RVec mu_try = mu;
                    for (int it = 0; it < 200; ++it) {
                        mu_try(m) = hi;
                        if (slack(primal(mu_try), m) <= 0.0) break;
                        lo = hi;
                        hi *= 4.0;
                    }
                    for (int it = 0; it < 80; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        mu_try(m) = mid;
                        (slack(primal(mu_try), m) > 0.0 ? lo : hi) = mid;
                    }
                    mu(m) = hi;
                }
            }
            const RVec w = primal(mu);
            ok = true;
            for (Eigen::Index m = 0; m < nf; ++m) {
                const double s = slack(w, m);
                const double scale = std::abs(forms[static_cast<std::size_t>(m)].bound) + 1e-30;
                if (s > 1e-9 * scale) ok = false;                       // infeasible
                if (mu(m) > 0.0 && s < -1e-7 * scale) ok = false;       // not complementary
            }
        }
        if (ok) {
            const RVec w = primal(mu);
            // KKT residual: projected-gradient norm of the constrained problem.
            RVec grad = h * w + c;
            for (Eigen::Index m = 0; m < nf; ++m) {
                if (mu(m) > 0.0) grad += 2.0 * mu(m) * (forms[static_cast<std::size_t>(m)].q * w);
            }
            return finish(reconstruct(w), 1, grad.norm(), SolveStatus::Converged);
        }
    }

    RVec w0 = RVec::Zero(nw);
    if (warm_start) {
        if (warm_start->size() != n) {
            throw DimensionError("qcqp::solve: warm start dimension mismatch");
        }
        for (Eigen::Index k = 0; k < nw; ++k) w0(k) = (*warm_start)(w_idx[static_cast<std::size_t>(k)]);
    }

    auto project_w = [&](RVec w) {
        RVec x = RVec::Zero(n);
        for (Eigen::Index k = 0; k < nw; ++k) x(w_idx[static_cast<std::size_t>(k)]) = w(k);
        feasible.project(x);
        for (Eigen::Index k = 0; k < nw; ++k) w(k) = x(w_idx[static_cast<std::size_t>(k)]);
        return w;
    };
    auto h_val = [&](const RVec& w) { return (a_red * w + b_red).squaredNorm() + q_red.dot(w); };

    if (lips <= 0.0) {
        if (c.norm() > 0.0) {
            throw DomainError("qcqp::solve: linear objective with no curvature is unbounded");
        }
        RVec w = project_w(w0);
        return finish(reconstruct(w), 0, 0.0, SolveStatus::Converged);
    }

    const double step = 1.0 / lips;
    RVec xk = project_w(w0);
    RVec yk = xk;
    double theta = 1.0;
    double fx = h_val(xk);
    // Stop on the smaller of the gradient-at-zero scale and the warm-start
    // projected-gradient scale; the former alone is meaningless when penalty
    // weights inflate the constant term.
    const RVec pg0 = lips * (xk - project_w(xk - step * (h * xk + c)));
    const double grad0_scale = std::min(1.0 + c.norm(), 1.0 + pg0.norm());

    int iter = 0;
    double kkt = kInf;
    SolveStatus status = SolveStatus::MaxIter;
    for (iter = 1; iter <= opts.max_iter; ++iter) {
        RVec cand = project_w(yk - step * (h * yk + c));
        double fc = h_val(cand);
        if (fc > fx + 1e-14 * (1.0 + std::abs(fx))) {
            // Momentum overshoot: restart from the plain descent step.
            cand = project_w(xk - step * (h * xk + c));
            fc = h_val(cand);
            theta = 1.0;
        }
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        yk = cand + ((theta - 1.0) / theta_next) * (cand - xk);
        theta = theta_next;
        xk = cand;
        fx = std::min(fx, fc);

        const RVec pg = lips * (xk - project_w(xk - step * (h * xk + c)));
        kkt = pg.norm();
        if (kkt <= opts.tol * grad0_scale) {
            status = SolveStatus::Converged;
            break;
        }
    }
    iter = std::min(iter, opts.max_iter);
    return finish(reconstruct(xk), iter, kkt, status);
}

double complexity_bound(double n_tilde, double m_tilde, const std::vector<double>& l,
                        double eps_digits) {
    double sum_l2 = 0.0;
    for (double v : l) sum_l2 += v * v;
    return std::sqrt(1.0 + m_tilde) * n_tilde * (n_tilde * n_tilde + m_tilde + sum_l2) *
           eps_digits;
}

CanonicalDims b1_canonical_dims(const SystemConfig& cfg) {
    const double d = cfg.d, ns = cfg.n_s, nr = cfg.n_r, mr = cfg.m_r, md = cfg.m_d;
    CanonicalDims out;
    out.n_tilde = 4.0 * d * (ns + md) +
                  2.0 * (nr * mr + nr * nr + mr * mr + md * md + d * d + d * (2.0 * md + mr));
    out.m_tilde = 3.0;
    out.l = {2.0 * d * ns, 2.0 * nr * nr,
             2.0 * d * (ns + md + d) + 2.0 * (nr * nr + mr * mr + md * md)};
    return out;
}

CanonicalDims b2_canonical_dims(const SystemConfig& cfg) {
    const double d = cfg.d, ns = cfg.n_s, nr = cfg.n_r, mr = cfg.m_r, md = cfg.m_d;
    CanonicalDims out;
    out.n_tilde = 2.0 * d * (2.0 * md + mr + ns + d) + 2.0 * (nr * nr + mr * mr + md * md);
    // The source text states a single constraint here yet lists three
    // constraint dimensions; we report all three.
    out.m_tilde = 1.0;
    out.l = {2.0 * d * ns, 2.0 * nr * nr,
             2.0 * d * (ns + md + d) + 2.0 * (nr * nr + mr * mr + md * md)};
    return out;
}

}  // namespace fdrelay::qcqp
