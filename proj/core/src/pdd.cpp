#include "fdrelay/pdd.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace fdrelay::pdd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRhoMin = 1e-4;  // penalty parameter floor (weight cap 1/(2 rho))

RVec stack_real(const CMat& m) {
    const Eigen::Index rc = m.size();
    RVec out(2 * rc);
    Eigen::Map<const CVec> v(m.data(), rc);
    out.head(rc) = v.real();
    out.tail(rc) = v.imag();
    return out;
}

void set_real_coord(CMat& m, Eigen::Index k, double value) {
    const Eigen::Index rc = m.size();
    if (k < rc) {
        m.data()[k] = cxd(value, m.data()[k].imag());
    } else {
        m.data()[k - rc] = cxd(m.data()[k - rc].real(), value);
    }
}

CMat rect_identity(Eigen::Index rows, Eigen::Index cols) {
    return CMat::Identity(rows, cols);
}

/// Cholesky factor L with L L^H = X, adding a diagonal jitter of 1e-12 scale
/// (growing tenfold on retry) when X is only numerically PD.
CMat chol_with_jitter(CMat x) {
    x = hermitian_part(x);
    double jitter = 1e-12 * (1.0 + std::abs(x.trace().real()) / static_cast<double>(x.rows()));
    for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::LLT<CMat> llt(x);
        if (llt.info() == Eigen::Success) {
            return llt.matrixL();
        }
        x += jitter * CMat::Identity(x.rows(), x.cols());
        jitter *= 10.0;
    }
    throw NotPsdError("chol_with_jitter: matrix is not positive definite", 0.0);
}

std::string user_suffix(int user, int n_users) {
    return n_users > 1 ? "_" + std::to_string(user) : "";
}

}  // namespace

void ConvergenceTrace::write_outer_csv(std::ostream& os) const {
    os << "outer_iter,inner_iters,zeta,al_value,mse,rho\n";
    char buf[256];
    for (const auto& r : outer) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g\n", r.outer_iter,
                      r.inner_iters, r.zeta, r.al, r.mse, r.rho);
        os << buf;
    }
}

void ConvergenceTrace::write_inner_csv(std::ostream& os) const {
    os << "inner_iter,al_value\n";
    char buf[128];
    for (std::size_t i = 0; i < inner_al.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, inner_al[i]);
        os << buf;
    }
}

PddSolver::PddSolver(Setup setup) : setup_(std::move(setup)) {
    setup_.cfg.validate();
    setup_.opts.validate();
    if (setup_.users.empty()) {
        throw std::invalid_argument("PddSolver: need at least one user channel set");
    }
    if (setup_.rate_objective && setup_.users.size() > 1) {
        throw std::invalid_argument("PddSolver: rate objective is single-user only");
    }
    orig_cfg_ = setup_.cfg;
    power_scale_ = 1.0 / setup_.cfg.sigma2_nd;
    setup_.cfg.p_s_max *= power_scale_;
    setup_.cfg.p_r_max *= power_scale_;
    setup_.cfg.sigma2_nr *= power_scale_;
    setup_.cfg.sigma2_nd *= power_scale_;
    if (setup_.si_power_cap) *setup_.si_power_cap *= power_scale_;
    if (setup_.papr) {
        setup_.papr->p_i_tx *= power_scale_;
        setup_.papr->p_i_rx *= power_scale_;
    }
    build_problem();
    build_constraint_maps();
    rho_ = setup_.opts.rho0;
    s_weight_ = CMat::Identity(setup_.cfg.d, setup_.cfg.d);
}

int PddSolver::add_var(const std::string& name, int block, Eigen::Index rows, Eigen::Index cols) {
    vars_.push_back(Var{name, block, rows, cols, CMat::Zero(rows, cols)});
    return static_cast<int>(vars_.size() - 1);
}

void PddSolver::add_group(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                          std::vector<int> deps, std::function<CMat()> eval) {
    groups_.push_back(Group{name, rows, cols, std::move(deps), std::move(eval),
                            CMat::Zero(rows, cols)});
}

int PddSolver::var_id(const std::string& name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i].name == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("PddSolver: unknown variable '" + name + "'");
}

const CMat& PddSolver::var(const std::string& name) const {
    return vars_[static_cast<std::size_t>(var_id(name))].value;
}

void PddSolver::set_var(const std::string& name, const CMat& value) {
    Var& v = vars_[static_cast<std::size_t>(var_id(name))];
    if (value.rows() != v.rows || value.cols() != v.cols) {
        throw DimensionError("PddSolver::set_var: shape mismatch for " + name);
    }
    v.value = value;
}

CMat PddSolver::group_residual(const std::string& name) const {
    for (const auto& g : groups_) {
        if (g.name == name) return g.eval();
    }
    throw std::invalid_argument("PddSolver: unknown group '" + name + "'");
}

std::vector<std::string> PddSolver::group_names() const {
    std::vector<std::string> out;
    for (const auto& g : groups_) out.push_back(g.name);
    return out;
}

ChannelSet PddSolver::user_channels(int user) const {
    ChannelSet ch = setup_.users[static_cast<std::size_t>(user)];
    ch.sr = setup_.users[0].sr;
    ch.rr = setup_.users[0].rr;
    return ch;
}

void PddSolver::build_problem() {
    const SystemConfig& cfg = setup_.cfg;
    const int n_users = static_cast<int>(setup_.users.size());
    const auto& shared = setup_.users[0];

    id_f_ = add_var("F", 1, cfg.n_s, cfg.d);
    id_g_ = add_var("G", 1, cfg.n_r, cfg.m_r);
    id_j_ = add_var("J", 1, cfg.n_r, cfg.m_r);
    const int lt1 = add_var("Lt1", 1, cfg.m_r, cfg.m_r);
    std::vector<int> c_ids, lt2_ids, lt3_ids, lt4_ids;
    for (int l = 0; l < n_users; ++l) {
        const std::string s = user_suffix(l, n_users);
        c_ids.push_back(add_var("C" + s, 1, cfg.m_d, cfg.d));
        lt2_ids.push_back(add_var("Lt2" + s, 1, cfg.m_d, cfg.m_d));
        lt3_ids.push_back(add_var("Lt3" + s, 1, cfg.d, cfg.m_d));
        lt4_ids.push_back(add_var("Lt4" + s, 1, cfg.d, cfg.d));
    }
    const int ft = add_var("Ft", 2, cfg.n_s, cfg.d);
    const int jt = add_var("Jt", 2, cfg.n_r, cfg.m_r);
    const int l1 = add_var("L1", 2, cfg.m_r, cfg.m_r);
    const int l5 = add_var("L5", 2, cfg.m_r, cfg.d);
    std::vector<int> l2_ids, l3_ids, l4_ids, l6_ids;
    for (int l = 0; l < n_users; ++l) {
        const std::string s = user_suffix(l, n_users);
        l2_ids.push_back(add_var("L2" + s, 2, cfg.m_d, cfg.m_d));
        l3_ids.push_back(add_var("L3" + s, 2, cfg.d, cfg.m_d));
        l4_ids.push_back(add_var("L4" + s, 2, cfg.d, cfg.d));
        l6_ids.push_back(add_var("L6" + s, 2, cfg.m_d, cfg.d));
    }
    obj_vars_ = l4_ids;

    auto value = [this](int id) -> const CMat& { return vars_[static_cast<std::size_t>(id)].value; };

    // Consensus pairs X - Xt.
    auto add_eq = [&](const std::string& name, int plain, int tilde) {
        const auto& v = vars_[static_cast<std::size_t>(plain)];
        add_group(name, v.rows, v.cols, {plain, tilde},
                  [value, plain, tilde]() { return CMat(value(plain) - value(tilde)); });
    };
    add_eq("eq_F", id_f_, ft);
    add_eq("eq_J", id_j_, jt);
    add_eq("eq_L1", l1, lt1);
    for (int l = 0; l < n_users; ++l) {
        const std::string s = user_suffix(l, n_users);
        add_eq("eq_L2" + s, l2_ids[l], lt2_ids[l]);
        add_eq("eq_L3" + s, l3_ids[l], lt3_ids[l]);
        add_eq("eq_L4" + s, l4_ids[l], lt4_ids[l]);
    }

    // Relay input covariance factorization: M1(F, Ft, J, Jt) - L1 Lt1^H.
    // The traces stay complex so the map is affine in either block.
    const double kappa_s = cfg.kappa_s, kappa_r = cfg.kappa_r;
    const double beta_r = cfg.beta_r, beta_d = cfg.beta_d;
    const double s2nr = cfg.sigma2_nr, s2nd = cfg.sigma2_nd;
    const Link sr = shared.sr;
    const Link rr = shared.rr;
    auto mbar1 = [sr, rr, kappa_s, kappa_r, beta_r, s2nr, cfg](const CMat& qf, const CMat& qj) {
        const CMat qf_d = qf.diagonal().asDiagonal();
        const CMat qj_d = qj.diagonal().asDiagonal();
        const CMat eye = CMat::Identity(cfg.m_r, cfg.m_r);
        CMat m = sr.h_est * (qf + kappa_s * qf_d) * sr.h_est.adjoint();
        m += sr.c_rx * (sr.c_tx * (qf + kappa_s * qf_d)).trace();
        m += kappa_r * (rr.h_est * qj_d * rr.h_est.adjoint());
        m += rr.c_rx * (rr.c_tx * (qj + kappa_r * qj_d)).trace();
        CMat low = sr.h_est * qf * sr.h_est.adjoint() + sr.c_rx * (sr.c_tx * qf).trace();
        low += rr.h_est * qj * rr.h_est.adjoint() + rr.c_rx * (rr.c_tx * qj).trace();
        low += s2nr * eye;
        m += beta_r * CMat(low.diagonal().asDiagonal());
        m += s2nr * eye;
        return m;
    };
    add_group("fac_M1", cfg.m_r, cfg.m_r, {id_f_, ft, id_j_, jt, l1, lt1},
              [value, mbar1, this, ft, jt, l1, lt1]() {
                  const CMat qf = value(id_f_) * value(ft).adjoint();
                  const CMat qj = value(id_j_) * value(jt).adjoint();
                  return CMat(mbar1(qf, qj) - value(l1) * value(lt1).adjoint());
              });

    // Per-user destination covariance factorization and receiver chains.
    for (int l = 0; l < n_users; ++l) {
        const std::string s = user_suffix(l, n_users);
        const Link sd = setup_.users[static_cast<std::size_t>(l)].sd;
        const Link rd = setup_.users[static_cast<std::size_t>(l)].rd;
        auto mbar2 = [sd, rd, kappa_s, kappa_r, beta_d, s2nd, cfg](const CMat& qf, const CMat& qj) {
            const CMat qf_d = qf.diagonal().asDiagonal();
            const CMat qj_d = qj.diagonal().asDiagonal();
            const CMat eye = CMat::Identity(cfg.m_d, cfg.m_d);
            CMat m = sd.h_est * (qf + kappa_s * qf_d) * sd.h_est.adjoint();
            m += sd.c_rx * (sd.c_tx * (qf + kappa_s * qf_d)).trace();
            m += rd.h_est * (qj + kappa_r * qj_d) * rd.h_est.adjoint();
            m += rd.c_rx * (rd.c_tx * (qj + kappa_r * qj_d)).trace();
            m += s2nd * eye;
            CMat low = sd.h_est * qf * sd.h_est.adjoint() + sd.c_rx * (sd.c_tx * qf).trace();
            low += rd.h_est * qj * rd.h_est.adjoint() + rd.c_rx * (rd.c_tx * qj).trace();
            low += s2nd * eye;
            m += beta_d * CMat(low.diagonal().asDiagonal());
            return m;
        };
        add_group("fac_M2" + s, cfg.m_d, cfg.m_d,
                  {id_f_, ft, id_j_, jt, l2_ids[l], lt2_ids[l]},
                  [value, mbar2, this, ft, jt, l2 = l2_ids[l], lt2 = lt2_ids[l]]() {
                      const CMat qf = value(id_f_) * value(ft).adjoint();
                      const CMat qj = value(id_j_) * value(jt).adjoint();
                      return CMat(mbar2(qf, qj) - value(l2) * value(lt2).adjoint());
                  });
        add_group("fac_M3" + s, cfg.d, cfg.d,
                  {l3_ids[l], lt3_ids[l], c_ids[l], l6_ids[l], l4_ids[l], lt4_ids[l]},
                  [value, cfg, l3 = l3_ids[l], lt3 = lt3_ids[l], c = c_ids[l], l6 = l6_ids[l],
                   l4 = l4_ids[l], lt4 = lt4_ids[l]]() {
                      CMat m = value(l3) * value(lt3).adjoint();
                      m -= value(c).adjoint() * value(l6);
                      m -= value(l6).adjoint() * value(c);
                      m += CMat::Identity(cfg.d, cfg.d);
                      m -= value(l4) * value(lt4).adjoint();
                      return m;
                  });
        add_group("rx_chain" + s, cfg.d, cfg.m_d, {c_ids[l], l2_ids[l], l3_ids[l]},
                  [value, c = c_ids[l], l2 = l2_ids[l], l3 = l3_ids[l]]() {
                      return CMat(value(c).adjoint() * value(l2) - value(l3));
                  });
        const CMat h_rd = rd.h_est;
        add_group("dest_chain" + s, cfg.m_d, cfg.d, {l6_ids[l], id_g_, l5},
                  [value, h_rd, this, l6 = l6_ids[l], l5]() {
                      return CMat(value(l6) - h_rd * value(id_g_) * value(l5));
                  });
    }

    add_group("relay_chain", cfg.n_r, cfg.m_r, {id_j_, id_g_, l1},
              [value, this, l1]() { return CMat(value(id_j_) - value(id_g_) * value(l1)); });
    const CMat h_sr = shared.sr.h_est;
    add_group("src_chain", cfg.m_r, cfg.d, {l5, id_f_},
              [value, h_sr, this, l5]() { return CMat(value(l5) - h_sr * value(id_f_)); });
}

void PddSolver::build_constraint_maps() {
    const SystemConfig& cfg = setup_.cfg;
    const auto& shared = setup_.users[0];

    // Probes a complex-linear map of (subset of) variables into real rows.
    auto probe_map = [](const std::vector<std::pair<Eigen::Index, Eigen::Index>>& shapes,
                        const std::function<CVec(const std::vector<CMat>&)>& fn) {
        std::vector<CMat> zeros;
        Eigen::Index n = 0;
        for (auto [r, c] : shapes) {
            zeros.emplace_back(CMat::Zero(r, c));
            n += 2 * r * c;
        }
        const CVec base = fn(zeros);
        RMat a(2 * base.size(), n);
        Eigen::Index col = 0;
        for (std::size_t v = 0; v < shapes.size(); ++v) {
            for (Eigen::Index k = 0; k < 2 * shapes[v].first * shapes[v].second; ++k) {
                set_real_coord(zeros[v], k, 1.0);
                const CVec out = fn(zeros) - base;
                a.col(col).head(out.size()) = out.real();
                a.col(col).tail(out.size()) = out.imag();
                set_real_coord(zeros[v], k, 0.0);
                ++col;
            }
        }
        return a;
    };

    if (setup_.si_power_cap) {
        const CMat h_rr = shared.rr.h_est;
        si_cap_map_ = probe_map({{cfg.n_r, cfg.m_r}}, [&](const std::vector<CMat>& v) {
            return CVec(vec(CMat(h_rr * v[0])));
        });
    }

    if (setup_.papr) {
        papr_rx_maps_.clear();
        const Link& sr = shared.sr;
        const Link& rr = shared.rr;
        const CMat ctx_sr_half = sr.c_tx.size() ? herm_sqrt(sr.c_tx) : CMat();
        const CMat ctx_rr_half = rr.c_tx.size() ? herm_sqrt(rr.c_tx) : CMat();
        for (int m = 0; m < cfg.m_r; ++m) {
            // Receive chain m: sum of squares of these linear pieces plus the
            // noise floor equals the m-th diagonal entry of the pre-distortion
            // receive covariance.
            auto pieces = [&, m](const std::vector<CMat>& v) {
                const CMat& f = v[0];
                const CMat& j = v[1];
                std::vector<CVec> parts;
                auto push = [&parts](const CMat& x) { parts.push_back(vec(x)); };
                push(sr.h_est.row(m) * f);
                push(std::sqrt(cfg.kappa_s) *
                     CMat(sr.h_est.row(m).cwiseAbs().transpose().asDiagonal() * f));
                const double c_sr = std::sqrt(std::abs(sr.c_rx(m, m)));
                push(c_sr * CMat(ctx_sr_half * f));
                push(c_sr * std::sqrt(cfg.kappa_s) *
                     CMat(sr.c_tx.diagonal().cwiseAbs().cwiseSqrt().asDiagonal() * f));
                push(rr.h_est.row(m) * j);
                push(std::sqrt(cfg.kappa_r) *
                     CMat(rr.h_est.row(m).cwiseAbs().transpose().asDiagonal() * j));
                const double c_rr = std::sqrt(std::abs(rr.c_rx(m, m)));
                push(c_rr * CMat(ctx_rr_half * j));
                push(c_rr * std::sqrt(cfg.kappa_r) *
                     CMat(rr.c_tx.diagonal().cwiseAbs().cwiseSqrt().asDiagonal() * j));
                Eigen::Index total = 0;
                for (const auto& p : parts) total += p.size();
                CVec out(total);
                Eigen::Index off = 0;
                for (const auto& p : parts) {
                    out.segment(off, p.size()) = p;
                    off += p.size();
                }
                return out;
            };
            papr_rx_maps_.push_back(
                probe_map({{cfg.n_s, cfg.d}, {cfg.n_r, cfg.m_r}}, pieces));
        }
    }
}

void PddSolver::init_blocks(RandomStream& rng) {
    (void)rng;  // the construction is deterministic given the channels
    const SystemConfig& cfg = setup_.cfg;
    const int n_users = static_cast<int>(setup_.users.size());
    const ChannelSet ch0 = user_channels(0);

    // Beamformed starting point: equal-power streams along the dominant right
    // singular vectors of the source-relay channel, and a relay gain that
    // receives along that channel's left singular vectors and retransmits along
    // the relay-destination right singular vectors. The splitting refines
    // designs locally, so the start must already point at the channel.
    Eigen::JacobiSVD<CMat> svd_sr(ch0.sr.h_est, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::JacobiSVD<CMat> svd_rd(ch0.rd.h_est, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double f_scale = std::sqrt(cfg.p_s_max / ((1.0 + cfg.kappa_s) * cfg.d));
    const CMat f0 = f_scale * svd_sr.matrixV().leftCols(cfg.d);

    CMat g_dir = svd_rd.matrixV().leftCols(cfg.d) * svd_sr.matrixU().leftCols(cfg.d).adjoint();
    if (g_dir.norm() < 1e-300) {
        g_dir = rect_identity(cfg.n_r, cfg.m_r);
    }
    g_dir /= g_dir.norm();

    // Largest stable within-budget gain along that direction, by bisection.
    auto gain_ok = [&](double gain) -> bool {
        try {
            const CMat m = relay_output_cov(cfg, ch0, f0, gain * g_dir);
            return (1.0 + cfg.kappa_r) * m.trace().real() <= cfg.p_r_max;
        } catch (const RelayLoopUnstableError&) {
            return false;
        }
    };
    const CMat m_in0 = relay_input_cov_base(cfg, ch0, f0);
    const double raw = (g_dir * m_in0 * g_dir.adjoint()).trace().real();
    double gain = std::sqrt(cfg.p_r_max / ((1.0 + cfg.kappa_r) * std::max(raw, 1e-300)));
    int halvings = 0;
    while (!gain_ok(gain)) {
        gain *= 0.5;
        if (++halvings > 10) {
            throw RelayLoopUnstableError("init_blocks: no stable relay gain found", 1.0);
        }
    }
    if (halvings == 0) {
        double lo = gain, hi = 2.0 * gain;
        for (int b = 0; b < 50 && gain_ok(hi); ++b) {
            lo = hi;
            hi *= 2.0;
        }
        for (int b = 0; b < 50; ++b) {
            const double mid = 0.5 * (lo + hi);
            (gain_ok(mid) ? lo : hi) = mid;
        }
        gain = lo;
    }
    const CMat g0 = gain * g_dir;
    const CMat m_out = relay_output_cov(cfg, ch0, f0, g0);

    set_var("F", f0);
    set_var("Ft", f0);
    set_var("G", g0);

    // Consistent auxiliaries. M1 is evaluated at the closed-form M_out; the
    // induced J J^H differs from M_out only by the fixed-point solve residual.
    const CMat qf0 = f0 * f0.adjoint();
    auto eval_mbar1 = [&](const CMat& qj) {
        const Link& sr = setup_.users[0].sr;
        const Link& rr = setup_.users[0].rr;
        const CMat qf_d = qf0.diagonal().asDiagonal();
        const CMat qj_d = qj.diagonal().asDiagonal();
        const CMat eye = CMat::Identity(cfg.m_r, cfg.m_r);
        CMat m = sr.h_est * (qf0 + cfg.kappa_s * qf_d) * sr.h_est.adjoint();
        m += sr.c_rx * (sr.c_tx * (qf0 + cfg.kappa_s * qf_d)).trace();
        m += cfg.kappa_r * (rr.h_est * qj_d * rr.h_est.adjoint());
        m += rr.c_rx * (rr.c_tx * (qj + cfg.kappa_r * qj_d)).trace();
        CMat low = sr.h_est * qf0 * sr.h_est.adjoint() + sr.c_rx * (sr.c_tx * qf0).trace();
        low += rr.h_est * qj * rr.h_est.adjoint() + rr.c_rx * (rr.c_tx * qj).trace();
        low += cfg.sigma2_nr * eye;
        m += cfg.beta_r * CMat(low.diagonal().asDiagonal());
        m += cfg.sigma2_nr * eye;
        return hermitian_part(m);
    };
    const CMat l1 = chol_with_jitter(eval_mbar1(m_out));
    set_var("L1", l1);
    set_var("Lt1", l1);
    const CMat j0 = g0 * l1;
    set_var("J", j0);
    set_var("Jt", j0);
    const CMat l5 = setup_.users[0].sr.h_est * f0;
    set_var("L5", l5);

    const CMat qj0 = j0 * j0.adjoint();
    for (int l = 0; l < n_users; ++l) {
        const std::string s = user_suffix(l, n_users);
        const ChannelSet ch_l = user_channels(l);
        const CMat c0 = mmse_receiver(cfg, ch_l, f0, g0);
        set_var("C" + s, c0);
        // L2 from the constraint's own covariance at the consistent point.
        const CMat m2 = dest_input_cov(cfg, ch_l, f0, hermitian_part(qj0));
        const CMat l2 = chol_with_jitter(m2);
        set_var("L2" + s, l2);
        set_var("Lt2" + s, l2);
        const CMat l3 = c0.adjoint() * l2;
        set_var("L3" + s, l3);
        set_var("Lt3" + s, l3);
        const CMat l6 = ch_l.rd.h_est * g0 * l5;
        set_var("L6" + s, l6);
        CMat m3 = l3 * l3.adjoint() - c0.adjoint() * l6 - l6.adjoint() * c0 +
                  CMat::Identity(cfg.d, cfg.d);
        const CMat l4 = chol_with_jitter(m3);
        set_var("L4" + s, l4);
        set_var("Lt4" + s, l4);
    }

    for (auto& g : groups_) {
        g.lambda = CMat::Zero(g.rows, g.cols);
    }
    rho_ = setup_.opts.rho0;
    zeta_switch_ = std::numeric_limits<double>::infinity();
    if (setup_.rate_objective) {
        const CMat l4 = var("L4");
        s_weight_ = hermitian_part(
            CMat((l4 * l4.adjoint() + 1e-12 * CMat::Identity(cfg.d, cfg.d)).inverse()));
    } else {
        s_weight_ = CMat::Identity(cfg.d, cfg.d);
    }
    zeta_prev_ = violation();
}

double PddSolver::violation() const {
    double z = 0.0;
    for (const auto& g : groups_) {
        z += g.eval().squaredNorm();
    }
    return z;
}

double PddSolver::objective_term() const {
    if (!setup_.rate_objective) {
        double v = 0.0;
        for (int id : obj_vars_) {
            v += vars_[static_cast<std::size_t>(id)].value.squaredNorm();
        }
        return v;
    }
    const CMat& l4 = vars_[static_cast<std::size_t>(obj_vars_[0])].value;
    const double quad = (l4.adjoint() * s_weight_ * l4).trace().real();
    const double logdet = std::log(std::abs(s_weight_.determinant()));
    return quad - logdet - static_cast<double>(setup_.cfg.d);
}

double PddSolver::augmented_lagrangian() const {
    double al = objective_term();
    for (const auto& g : groups_) {
        const CMat r = g.eval();
        al += (g.lambda.adjoint() * r).trace().real();
        al += r.squaredNorm() / (2.0 * rho_);
    }
    return al;
}

qcqp::QuadraticProgram PddSolver::assemble_block_qp(int block) {
    qcqp::QuadraticProgram qp;
    std::vector<int> ids;
    std::vector<Eigen::Index> offsets;
    Eigen::Index n = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i].block != block) continue;
        ids.push_back(static_cast<int>(i));
        offsets.push_back(n);
        qp.vars.push_back({vars_[i].name, vars_[i].rows, vars_[i].cols});
        n += 2 * vars_[i].rows * vars_[i].cols;
    }
    auto pos_of = [&](int id) -> int {
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (ids[k] == id) return static_cast<int>(k);
        }
        return -1;
    };

    // Zero the block to expose each group's affine map, probing one real
    // coordinate at a time (the maps are exactly affine, so this is exact).
    std::vector<CMat> saved;
    saved.reserve(ids.size());
    for (int id : ids) saved.push_back(vars_[static_cast<std::size_t>(id)].value);
    for (int id : ids) vars_[static_cast<std::size_t>(id)].value.setZero();

    std::vector<CMat> base;
    base.reserve(groups_.size());
    for (const auto& g : groups_) base.push_back(g.eval());

    std::vector<RMat> maps(groups_.size());
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        maps[gi] = RMat::Zero(2 * groups_[gi].rows * groups_[gi].cols, n);
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
        CMat& v = vars_[static_cast<std::size_t>(ids[k])].value;
        for (Eigen::Index coord = 0; coord < 2 * v.size(); ++coord) {
            set_real_coord(v, coord, 1.0);
            for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
                const auto& deps = groups_[gi].deps;
                if (std::find(deps.begin(), deps.end(), ids[k]) == deps.end()) continue;
                maps[gi].col(offsets[k] + coord) = stack_real(groups_[gi].eval() - base[gi]);
            }
            set_real_coord(v, coord, 0.0);
        }
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
        vars_[static_cast<std::size_t>(ids[k])].value = saved[k];
    }

    const double weight = 1.0 / (2.0 * rho_);
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        qp.residuals.push_back(
            {std::move(maps[gi]), stack_real(base[gi] + rho_ * groups_[gi].lambda), weight});
    }

    if (block == 2) {
        // Objective rows: ||L4||^2, or ||U L4||^2 with U^H U = S in rate mode.
        for (int id : obj_vars_) {
            const int p = pos_of(id);
            const auto& v = vars_[static_cast<std::size_t>(id)];
            const Eigen::Index sz = 2 * v.rows * v.cols;
            RMat a = RMat::Zero(sz, n);
            if (!setup_.rate_objective) {
                a.block(0, offsets[static_cast<std::size_t>(p)], sz, sz) =
                    RMat::Identity(sz, sz);
            } else {
                Eigen::LLT<CMat> llt(s_weight_);
                const CMat u = llt.matrixU();
                const CMat map_c = kron(CMat::Identity(v.cols, v.cols), u);
                const Eigen::Index h = v.rows * v.cols;
                a.block(0, offsets[static_cast<std::size_t>(p)], h, h) = map_c.real();
                a.block(0, offsets[static_cast<std::size_t>(p)] + h, h, h) = -map_c.imag();
                a.block(h, offsets[static_cast<std::size_t>(p)], h, h) = map_c.imag();
                a.block(h, offsets[static_cast<std::size_t>(p)] + h, h, h) = map_c.real();
            }
            qp.residuals.push_back({std::move(a), RVec::Zero(sz), 1.0});
        }
    } else {
        const SystemConfig& cfg = setup_.cfg;
        qp.balls.push_back({{pos_of(id_f_)}, std::sqrt(cfg.p_s_max / (1.0 + cfg.kappa_s))});
        qp.balls.push_back({{pos_of(id_j_)}, std::sqrt(cfg.p_r_max / (1.0 + cfg.kappa_r))});
        if (setup_.si_power_cap) {
            qp.quads.push_back({{pos_of(id_j_)}, si_cap_map_, 0.0, *setup_.si_power_cap});
        }
        if (setup_.papr) {
            const auto& papr = *setup_.papr;
            const double row_r =
                std::sqrt(papr.p_i_tx / (papr.omega_tx * (1.0 + cfg.kappa_r)));
            qp.row_balls.push_back({pos_of(id_j_), RVec::Constant(cfg.n_r, row_r)});
            const double chain_bound = papr.p_i_rx / (papr.omega_rx * (1.0 + cfg.beta_r));
            for (const auto& map : papr_rx_maps_) {
                qp.quads.push_back({{pos_of(id_f_), pos_of(id_j_)}, map, cfg.sigma2_nr,
                                    chain_bound});
            }
        }
    }
    return qp;
}

void PddSolver::write_back(int block, const std::vector<CMat>& solution) {
    std::size_t k = 0;
    for (auto& v : vars_) {
        if (v.block != block) continue;
        v.value = solution[k++];
    }
}

namespace {

RVec warm_start_of(const qcqp::QuadraticProgram& qp, const std::vector<CMat>& values) {
    return qp.stack(values);
}

}  // namespace

void PddSolver::update_block_b1() {
    qcqp::QuadraticProgram qp = assemble_block_qp(1);
    std::vector<CMat> current;
    for (const auto& v : vars_) {
        if (v.block == 1) current.push_back(v.value);
    }
    const RVec warm = warm_start_of(qp, current);
    qcqp::SolveOptions opts;
    opts.tol = setup_.opts.qp_tol;
    opts.max_iter = setup_.opts.qp_max_iter;
    const auto rep = qcqp::solve(qp, opts, &warm);
    if (rep.status == qcqp::SolveStatus::Infeasible) {
        throw DomainError("update_block_b1: infeasible constraint set");
    }
    write_back(1, rep.solution);
}

void PddSolver::update_block_b2() {
    qcqp::QuadraticProgram qp = assemble_block_qp(2);
    qcqp::SolveOptions opts;
    opts.tol = setup_.opts.qp_tol;
    opts.max_iter = setup_.opts.qp_max_iter;
    const auto rep = qcqp::solve(qp, opts, nullptr);
    write_back(2, rep.solution);
}

void PddSolver::update_weight() {
    if (!setup_.rate_objective) return;
    const CMat& l4 = vars_[static_cast<std::size_t>(obj_vars_[0])].value;
    const CMat e = l4 * l4.adjoint() +
                   1e-12 * CMat::Identity(setup_.cfg.d, setup_.cfg.d);
    s_weight_ = hermitian_part(e.inverse());
}

void PddSolver::outer_update() {
    const double z = violation();
    // Multiplier steps are the workhorse: they remove violations at a fixed
    // penalty level. The penalty tightens only while the violation is still
    // growing (the early travel phase), and never beyond rho_min: the inner
    // sweeps stall once the weight dwarfs the objective curvature, so ever
    // stronger penalties freeze the iterate instead of cleaning it up.
    const double zeta0 = std::max(1.05 * zeta_prev_, setup_.opts.zeta_th);
    if (z <= zeta0 || rho_ <= kRhoMin) {
        for (auto& g : groups_) {
            g.lambda += (1.0 / rho_) * g.eval();
        }
    } else {
        rho_ *= setup_.opts.c_rho;  // shrinking rho grows the penalty weight 1/(2 rho)
    }
    zeta_prev_ = z;
}

double PddSolver::evaluate_design_mse() const {
    try {
        double total = 0.0;
        const double root = std::sqrt(power_scale_);
        const CMat f = vars_[static_cast<std::size_t>(id_f_)].value / root;
        const CMat& g = vars_[static_cast<std::size_t>(id_g_)].value;
        const int n_users = static_cast<int>(setup_.users.size());
        for (int l = 0; l < n_users; ++l) {
            const std::string s = user_suffix(l, n_users);
            const CMat c = root * var("C" + s);
            const CMat e = mse_matrix(orig_cfg_, user_channels(l), f, g, c);
            total += e.trace().real();
        }
        return total;
    } catch (const std::exception&) {
        return kNaN;
    }
}

std::vector<CMat> PddSolver::snapshot_vars() const {
    std::vector<CMat> out;
    out.reserve(vars_.size());
    for (const auto& v : vars_) out.push_back(v.value);
    return out;
}

void PddSolver::restore_vars(const std::vector<CMat>& values) {
    for (std::size_t i = 0; i < vars_.size(); ++i) vars_[i].value = values[i];
}

bool PddSolver::constraints_satisfied(double rel_slack) const {
    const SystemConfig& cfg = setup_.cfg;
    const CMat& f = vars_[static_cast<std::size_t>(id_f_)].value;
    const CMat& j = vars_[static_cast<std::size_t>(id_j_)].value;
    if (f.squaredNorm() > cfg.p_s_max / (1.0 + cfg.kappa_s) * (1.0 + rel_slack)) return false;
    if (j.squaredNorm() > cfg.p_r_max / (1.0 + cfg.kappa_r) * (1.0 + rel_slack)) return false;
    if (setup_.si_power_cap) {
        const RVec jr = stack_real(j);
        if ((si_cap_map_ * jr).squaredNorm() > *setup_.si_power_cap * (1.0 + rel_slack)) {
            return false;
        }
    }
    if (setup_.papr) {
        const auto& papr = *setup_.papr;
        const double row_cap = papr.p_i_tx / (papr.omega_tx * (1.0 + cfg.kappa_r));
        for (Eigen::Index r = 0; r < j.rows(); ++r) {
            if (j.row(r).squaredNorm() > row_cap * (1.0 + rel_slack)) return false;
        }
        const double chain_cap = papr.p_i_rx / (papr.omega_rx * (1.0 + cfg.beta_r));
        RVec fj(stack_real(f).size() + stack_real(j).size());
        fj << stack_real(f), stack_real(j);
        for (const auto& map : papr_rx_maps_) {
            if ((map * fj).squaredNorm() + cfg.sigma2_nr > chain_cap * (1.0 + rel_slack)) {
                return false;
            }
        }
    }
    return true;
}

ConvergenceTrace PddSolver::run(RandomStream& rng) {
    init_blocks(rng);
    ConvergenceTrace trace;
    zeta_prev_ = violation();

    for (int k = 0; k < setup_.opts.max_outer; ++k) {
        double al_prev = kNaN;
        int sweeps = 0;
        // With a strong penalty the alternating sweeps contract linearly with a
        // factor close to one, so the loop extrapolates along the sweep
        // direction by the implied geometric sum whenever the contraction ratio
        // looks stable, keeping only feasible, AL-decreasing jumps.
        std::vector<CMat> prev = snapshot_vars();
        double prev_step = -1.0;
        for (int m = 1; m <= setup_.opts.max_inner; ++m) {
            update_block_b1();
            update_block_b2();
            update_weight();
            double al = augmented_lagrangian();

            std::vector<CMat> cur = snapshot_vars();
            double step = 0.0;
            for (std::size_t i = 0; i < cur.size(); ++i) step += (cur[i] - prev[i]).squaredNorm();
            step = std::sqrt(step);
            if (prev_step > 0.0 && step > 0.0) {
                const double ratio = step / prev_step;
                if (ratio > 0.3 && ratio < 0.9995) {
                    const double mult = std::min(ratio / (1.0 - ratio), 1e4);
                    std::vector<CMat> jump = cur;
                    for (std::size_t i = 0; i < cur.size(); ++i) {
                        jump[i] += mult * (cur[i] - prev[i]);
                    }
                    restore_vars(jump);
                    const SystemConfig& cfg = setup_.cfg;
                    CMat& f = vars_[static_cast<std::size_t>(id_f_)].value;
                    CMat& j = vars_[static_cast<std::size_t>(id_j_)].value;
                    const double rf = std::sqrt(cfg.p_s_max / (1.0 + cfg.kappa_s));
                    const double rj = std::sqrt(cfg.p_r_max / (1.0 + cfg.kappa_r));
                    if (f.norm() > rf) f *= rf / f.norm();
                    if (j.norm() > rj) j *= rj / j.norm();
                    const double al_jump = augmented_lagrangian();
                    if (al_jump < al && constraints_satisfied(1e-12)) {
                        al = al_jump;
                        cur = snapshot_vars();
                        step = -1.0;  // reset the ratio estimator after a jump
                    } else {
                        restore_vars(cur);
                    }
                }
            }
            prev = std::move(cur);
            prev_step = step;

            sweeps = m;
            if (k == 0) trace.inner_al.push_back(al);
            if (m > 1) {
                trace.max_inner_al_increase =
                    std::max(trace.max_inner_al_increase, al - al_prev);
                if (std::abs(al - al_prev) <= setup_.opts.eps_inner * (1.0 + std::abs(al))) {
                    al_prev = al;
                    break;
                }
            }
            al_prev = al;
        }
        trace.total_inner += sweeps;
        const double z = violation();
        trace.outer.push_back({k, sweeps, z, al_prev, evaluate_design_mse(), rho_});
        if (z < setup_.opts.zeta_th) {
            trace.converged = true;
            break;
        }
        outer_update();
    }
    return trace;
}

DesignVariables PddSolver::design() const {
    // Map back from noise units: F shrinks, G is unit free, C grows.
    const double root = std::sqrt(power_scale_);
    return DesignVariables{var("F") / root, var("G"),
                           root * var(user_count() > 1 ? "C_0" : "C")};
}

MultiUserResult PddSolver::multiuser_design() const {
    MultiUserResult out;
    const double root = std::sqrt(power_scale_);
    out.F = var("F") / root;
    out.G = var("G");
    const int n_users = user_count();
    for (int l = 0; l < n_users; ++l) {
        out.C.push_back(root * var("C" + user_suffix(l, n_users)));
    }
    return out;
}

namespace {

ConvergenceTrace run_or_throw(PddSolver& solver, RandomStream& rng) {
    ConvergenceTrace trace = solver.run(rng);
    if (!trace.converged) {
        const double z = trace.outer.empty() ? kNaN : trace.outer.back().zeta;
        throw NoConvergenceError("PDD: outer iteration cap reached with violation above threshold",
                                 z);
    }
    return trace;
}

}  // namespace

PddResult run_algorithm1(const SystemConfig& cfg, const ChannelSet& ch, const PddConfig& opts,
                         RandomStream& rng) {
    PddSolver solver({cfg, {ch}, false, std::nullopt, std::nullopt, opts});
    ConvergenceTrace trace = run_or_throw(solver, rng);
    return {solver.design(), std::move(trace)};
}

PddResult run_rate_maximization(const SystemConfig& cfg, const ChannelSet& ch,
                                const PddConfig& opts, RandomStream& rng) {
    PddSolver solver({cfg, {ch}, true, std::nullopt, std::nullopt, opts});
    ConvergenceTrace trace = run_or_throw(solver, rng);
    return {solver.design(), std::move(trace)};
}

MultiUserResult run_multiuser(const SystemConfig& cfg, const std::vector<ChannelSet>& users,
                              const PddConfig& opts, RandomStream& rng) {
    PddSolver solver({cfg, users, false, std::nullopt, std::nullopt, opts});
    ConvergenceTrace trace = run_or_throw(solver, rng);
    MultiUserResult out = solver.multiuser_design();
    out.trace = std::move(trace);
    return out;
}

PddResult run_with_saturation(const SystemConfig& cfg, const ChannelSet& ch, const PddConfig& opts,
                              const PaprBudgets& papr, RandomStream& rng) {
    if (!(papr.p_i_tx > 0.0) || !(papr.p_i_rx > 0.0) || !(papr.omega_tx > 0.0) ||
        !(papr.omega_rx > 0.0)) {
        throw std::invalid_argument("run_with_saturation: budgets and ratios must be positive");
    }
    PddSolver solver({cfg, {ch}, false, std::nullopt, papr, opts});
    ConvergenceTrace trace = run_or_throw(solver, rng);
    return {solver.design(), std::move(trace)};
}

}  // namespace fdrelay::pdd
