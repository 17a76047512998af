#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"

using namespace fdrelay;
using test::fixed_point_relay_output;
using test::random_feasible_gain;
using test::random_feasible_precoder;

namespace {

ChannelSet draw(const SystemConfig& cfg, std::uint64_t seed) {
    RandomStream rng(seed);
    return draw_channels(cfg, rng);
}

}  // namespace

TEST_CASE("relay_input_cov_base - collapses") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 21);

    // F = 0: only the noise floor.
    const CMat zero_f = CMat::Zero(cfg.n_s, cfg.d);
    CHECK((relay_input_cov_base(cfg, ch, zero_f) -
           cfg.sigma2_nr * CMat::Identity(cfg.m_r, cfg.m_r))
              .norm() < 1e-15);

    // kappa_s = 0 and no CSI error: plain H F F^H H^H + noise.
    SystemConfig ideal = cfg;
    ideal.kappa_s = 0.0;
    const ChannelSet clean = strip_csi_error(ch);
    RandomStream rng(22);
    const CMat f = random_feasible_precoder(ideal, rng);
    const CMat want = clean.sr.h_est * f * f.adjoint() * clean.sr.h_est.adjoint() +
                      ideal.sigma2_nr * CMat::Identity(cfg.m_r, cfg.m_r);
    CHECK(test::rel_err(relay_input_cov_base(ideal, clean, f), want) < 1e-14);
}

TEST_CASE("si_coupling_matrix - term isolation") {
    SystemConfig cfg = default_config();
    ChannelSet ch = draw(cfg, 23);

    SECTION("all impairment channels off gives zero") {
        SystemConfig c0 = cfg;
        c0.kappa_r = c0.beta_r = 0.0;
        CHECK(si_coupling_matrix(c0, strip_csi_error(ch)).norm() == 0.0);
    }
    SECTION("only the transmit-distortion term survives") {
        SystemConfig c1 = cfg;
        c1.beta_r = 0.0;
        const ChannelSet clean = strip_csi_error(ch);
        const CMat b = si_coupling_matrix(c1, clean);
        const SelectionMatrix sel(cfg.n_r);
        const CMat want = c1.kappa_r * sel.apply_right(kron(clean.rr.h_est.conjugate(),
                                                            clean.rr.h_est));
        CHECK((b - want).norm() < 1e-15);
    }
}

TEST_CASE("si_coupling_matrix - matrix form equals vectorized form") {
    // B * vec(M_out) must reproduce the vec of the M_out-dependent terms of the
    // suppressed-input covariance, assembled here directly in matrix form.
    SystemConfig cfg = default_config();
    cfg.n_s = cfg.n_r = cfg.m_r = cfg.m_d = 2;
    cfg.d = 1;
    const ChannelSet ch = draw(cfg, 24);
    RandomStream rng(25);
    const CMat a = rng.complex_gaussian_matrix(cfg.n_r, cfg.n_r, 1.0);
    const CMat m_out = a * a.adjoint();

    const CMat b = si_coupling_matrix(cfg, ch);
    const CVec got = b * vec(m_out);

    const CMat& h = ch.rr.h_est;
    CMat direct = cfg.kappa_r * (h * diag_part(m_out) * h.adjoint());
    direct += ch.rr.c_rx * (ch.rr.c_tx * (m_out + cfg.kappa_r * diag_part(m_out))).trace();
    direct += cfg.beta_r * diag_part(h * m_out * h.adjoint() +
                                     ch.rr.c_rx * (ch.rr.c_tx * m_out).trace());
    CHECK((got - vec(direct)).norm() < 1e-12 * (1.0 + direct.norm()));
}

TEST_CASE("relay_transfer - ideal hardware is the plain Kronecker gain") {
    SystemConfig cfg = default_config();
    cfg.kappa_r = cfg.beta_r = 0.0;
    const ChannelSet clean = strip_csi_error(draw(cfg, 26));
    RandomStream rng(27);
    for (int i = 0; i < 5; ++i) {
        const CMat g = rng.complex_gaussian_matrix(cfg.n_r, cfg.m_r, 1.0);
        const auto rt = relay_transfer(cfg, clean, g);
        CHECK((rt.theta - kron(g.conjugate(), g)).norm() <= 1e-14 * (1.0 + g.squaredNorm()));
    }
    // G = 0 maps to the zero transfer.
    const auto rt0 = relay_transfer(cfg, clean, CMat::Zero(cfg.n_r, cfg.m_r));
    CHECK(rt0.theta.norm() == 0.0);
}

TEST_CASE("relay_transfer - reconstructs the distorted output covariance") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 28);
    RandomStream rng(29);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = random_feasible_gain(cfg, ch, f, rng);

    const auto rt = relay_transfer(cfg, ch, g);
    const CMat m_in0 = relay_input_cov_base(cfg, ch, f);
    const CMat m_out = relay_output_cov(cfg, ch, f, g);
    const CMat want = m_out + cfg.kappa_r * diag_part(m_out);
    const CMat got = unvec(rt.theta * vec(m_in0), cfg.n_r, cfg.n_r);
    CHECK((got - want).norm() < 1e-10 * (1.0 + want.norm()));
    CHECK(std::isfinite(rt.loop_condition));

    // Power accounting: E||r_out||^2 = (1 + kappa_r) tr(M_out).
    CHECK(got.trace().real() ==
          Catch::Approx((1.0 + cfg.kappa_r) * m_out.trace().real()).epsilon(1e-12));
}

TEST_CASE("relay_output_cov - trivial collapses") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 30);
    RandomStream rng(31);
    const CMat f = random_feasible_precoder(cfg, rng);

    CHECK(relay_output_cov(cfg, ch, f, CMat::Zero(cfg.n_r, cfg.m_r)).norm() == 0.0);

    SystemConfig ideal = cfg;
    ideal.kappa_r = ideal.beta_r = 0.0;
    const ChannelSet clean = strip_csi_error(ch);
    const CMat g = random_feasible_gain(ideal, clean, f, rng);
    const CMat want = g * relay_input_cov_base(ideal, clean, f) * g.adjoint();
    CHECK(test::rel_err(relay_output_cov(ideal, clean, f, g), want) < 1e-12);
}

TEST_CASE("relay_output_cov - agrees with the fixed-point oracle") {
    const SystemConfig cfg = default_config();
    RandomStream rng(32);
    for (int trial = 0; trial < 5; ++trial) {
        const ChannelSet ch = draw(cfg, 33 + static_cast<std::uint64_t>(trial));
        const CMat f = random_feasible_precoder(cfg, rng);
        const CMat g = random_feasible_gain(cfg, ch, f, rng);
        const CMat closed = relay_output_cov(cfg, ch, f, g);
        const CMat iterated = fixed_point_relay_output(cfg, ch, f, g);
        REQUIRE((closed - iterated).norm() < 1e-9 * (1.0 + iterated.norm()));
        // Residual of the defining relation at the closed form.
        const CMat resid = closed - g * relay_input_cov_supp(cfg, ch, f, closed) * g.adjoint();
        REQUIRE(resid.norm() < 1e-9 * (1.0 + closed.norm()));
    }
}

TEST_CASE("relay_output_cov - unstable loop is rejected") {
    SystemConfig cfg = default_config();
    cfg.kappa_r = 0.3;
    cfg.beta_r = 0.3;  // strong distortion so the loop can diverge
    const ChannelSet ch = draw(cfg, 34);
    RandomStream rng(35);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = 1e4 * rng.complex_gaussian_matrix(cfg.n_r, cfg.m_r, 1.0);
    CHECK_THROWS_AS(relay_output_cov(cfg, ch, f, g), RelayLoopUnstableError);
}

TEST_CASE("relay_input_cov_supp - collapses and independent reassembly") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 36);
    RandomStream rng(37);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat m_in0 = relay_input_cov_base(cfg, ch, f);

    // Relay off: M1 = M_in,0 + beta_r diag(M_in,0).
    const CMat m1_off = relay_input_cov_supp(cfg, ch, f, CMat::Zero(cfg.n_r, cfg.n_r));
    CHECK(test::rel_err(m1_off, m_in0 + cfg.beta_r * diag_part(m_in0)) < 1e-14);

    // Ideal relay hardware: M1 = M_in,0 for any M_out.
    SystemConfig ideal = cfg;
    ideal.kappa_r = ideal.beta_r = 0.0;
    const ChannelSet clean = strip_csi_error(ch);
    const CMat a = rng.complex_gaussian_matrix(cfg.n_r, cfg.n_r, 1.0);
    const CMat m_out = a * a.adjoint();
    CHECK(test::rel_err(relay_input_cov_supp(ideal, clean, f, m_out),
                        relay_input_cov_base(ideal, clean, f)) < 1e-14);

    // Term-by-term reassembly at a random M_out.
    const CMat& h = ch.rr.h_est;
    CMat want = m_in0;
    want += cfg.kappa_r * (h * diag_part(m_out) * h.adjoint());
    want += ch.rr.c_rx * (ch.rr.c_tx * (m_out + cfg.kappa_r * diag_part(m_out))).trace().real();
    want += cfg.beta_r * diag_part(m_in0 + h * m_out * h.adjoint() +
                                   ch.rr.c_rx * (ch.rr.c_tx * m_out).trace().real());
    CHECK(test::rel_err(relay_input_cov_supp(cfg, ch, f, m_out), want) < 1e-13);
}

TEST_CASE("dest_input_cov - collapses") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 38);

    // No input at all: only noise and its receive-distortion diagonal.
    const CMat m2_0 = dest_input_cov(cfg, ch, CMat::Zero(cfg.n_s, cfg.d),
                                     CMat::Zero(cfg.n_r, cfg.n_r));
    const CMat want0 =
        cfg.sigma2_nd * (1.0 + cfg.beta_d) * CMat::Identity(cfg.m_d, cfg.m_d);
    CHECK(test::rel_err(m2_0, want0) < 1e-14);

    // Ideal hardware, no CSI error: direct-link plus relay-link plus noise.
    SystemConfig ideal = cfg;
    ideal.kappa_s = ideal.kappa_r = ideal.beta_r = ideal.beta_d = 0.0;
    const ChannelSet clean = strip_csi_error(ch);
    RandomStream rng(39);
    const CMat f = random_feasible_precoder(ideal, rng);
    const CMat a = rng.complex_gaussian_matrix(cfg.n_r, cfg.n_r, 0.01);
    const CMat m_out = a * a.adjoint();
    const CMat want = clean.sd.h_est * f * f.adjoint() * clean.sd.h_est.adjoint() +
                      clean.rd.h_est * m_out * clean.rd.h_est.adjoint() +
                      ideal.sigma2_nd * CMat::Identity(cfg.m_d, cfg.m_d);
    CHECK(test::rel_err(dest_input_cov(ideal, clean, f, m_out), want) < 1e-14);
}

TEST_CASE("mse_matrix - trivial receiver and MMSE optimality") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 40);
    RandomStream rng(41);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = random_feasible_gain(cfg, ch, f, rng);

    // C = 0 gives E = I_d.
    const CMat e0 = mse_matrix(cfg, ch, f, g, CMat::Zero(cfg.m_d, cfg.d));
    CHECK((e0 - CMat::Identity(cfg.d, cfg.d)).norm() < 1e-14);

    // The MMSE receiver beats random perturbations of itself.
    const CMat c_star = mmse_receiver(cfg, ch, f, g);
    const double mse_star = mse_matrix(cfg, ch, f, g, c_star).trace().real();
    for (int i = 0; i < 100; ++i) {
        const CMat c = c_star + 0.3 * c_star.norm() *
                                    rng.complex_gaussian_matrix(cfg.m_d, cfg.d, 1.0) /
                                    std::sqrt(2.0 * cfg.m_d * cfg.d);
        const double mse = mse_matrix(cfg, ch, f, g, c).trace().real();
        REQUIRE(mse >= mse_star - 1e-12);
    }
}

TEST_CASE("mmse_receiver - zero precoder and stationarity") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 42);
    RandomStream rng(43);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = random_feasible_gain(cfg, ch, f, rng);

    CHECK(mmse_receiver(cfg, ch, CMat::Zero(cfg.n_s, cfg.d), g).norm() < 1e-18);

    // Directional finite differences of tr(E) vanish at the MMSE receiver.
    const CMat c_star = mmse_receiver(cfg, ch, f, g);
    const double base = mse_matrix(cfg, ch, f, g, c_star).trace().real();
    const double h_step = 1e-6 * (1.0 + c_star.norm());
    for (int i = 0; i < 20; ++i) {
        CMat dir = rng.complex_gaussian_matrix(cfg.m_d, cfg.d, 1.0);
        dir /= dir.norm();
        const double up = mse_matrix(cfg, ch, f, g, c_star + h_step * dir).trace().real();
        const double dn = mse_matrix(cfg, ch, f, g, c_star - h_step * dir).trace().real();
        REQUIRE(std::abs(up - dn) / (2.0 * h_step) < 1e-6);
    }
}

TEST_CASE("mmse_receiver - scalar chain against the hand formula") {
    SystemConfig cfg = default_config();
    cfg.n_s = cfg.n_r = cfg.m_r = cfg.m_d = 1;
    cfg.d = 1;
    cfg.kappa_s = cfg.kappa_r = cfg.beta_r = cfg.beta_d = 0.0;
    const ChannelSet ch = strip_csi_error(draw(cfg, 44));
    RandomStream rng(45);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = random_feasible_gain(cfg, ch, f, rng);

    const cxd h_sr = ch.sr.h_est(0, 0), h_rd = ch.rd.h_est(0, 0), h_sd = ch.sd.h_est(0, 0);
    const cxd fv = f(0, 0), gv = g(0, 0);
    // E|y|^2 = |h_sd f|^2 + |h_rd|^2 |g|^2 (|h_sr f|^2 + sigma_nr^2) + sigma_nd^2.
    const double yy = std::norm(h_sd * fv) +
                      std::norm(h_rd) * std::norm(gv) * (std::norm(h_sr * fv) + cfg.sigma2_nr) +
                      cfg.sigma2_nd;
    const cxd want = (h_rd * gv * h_sr * fv) / yy;
    const CMat c_star = mmse_receiver(cfg, ch, f, g);
    CHECK(std::abs(c_star(0, 0) - want) < 1e-12 * std::abs(want));
}

TEST_CASE("achievable_rate - zero precoder and MMSE duality") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 46);
    RandomStream rng(47);

    const CMat g0 = random_feasible_gain(cfg, ch, CMat::Zero(cfg.n_s, cfg.d), rng);
    CHECK(achievable_rate(cfg, ch, CMat::Zero(cfg.n_s, cfg.d), g0) == Catch::Approx(0.0));

    for (int trial = 0; trial < 10; ++trial) {
        const CMat f = random_feasible_precoder(cfg, rng);
        const CMat g = random_feasible_gain(cfg, ch, f, rng);
        const double rate = achievable_rate(cfg, ch, f, g);
        const CMat e_mmse = mse_matrix(cfg, ch, f, g, mmse_receiver(cfg, ch, f, g));
        const double dual = -cfg.bandwidth * std::log2(std::abs(e_mmse.determinant()));
        REQUIRE(std::abs(rate - dual) < 1e-9 * (1.0 + std::abs(rate)));
    }
}

TEST_CASE("achievable_rate - scalar AWGN collapse") {
    SystemConfig cfg = default_config();
    cfg.n_s = cfg.n_r = cfg.m_r = cfg.m_d = 1;
    cfg.d = 1;
    cfg.kappa_s = cfg.kappa_r = cfg.beta_r = cfg.beta_d = 0.0;
    ChannelSet ch = strip_csi_error(draw(cfg, 48));
    // Remove the direct link so the relay path is a clean AWGN cascade.
    ch.sd.h_est = ch.sd.h_true = CMat::Zero(1, 1);
    RandomStream rng(49);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = random_feasible_gain(cfg, ch, f, rng);

    const double ps = std::norm(ch.sr.h_est(0, 0) * f(0, 0));
    const double grel = std::norm(g(0, 0)) * std::norm(ch.rd.h_est(0, 0));
    const double snr = grel * ps / (grel * cfg.sigma2_nr + cfg.sigma2_nd);
    const double want = cfg.bandwidth * std::log2(1.0 + snr);
    CHECK(achievable_rate(cfg, ch, f, g) == Catch::Approx(want).epsilon(1e-10));
}

TEST_CASE("mse - nondecreasing in each distortion coefficient") {
    SystemConfig cfg = default_config();
    // Fix a design feasible at the largest grid point.
    SystemConfig worst = cfg;
    worst.kappa_s = worst.kappa_r = worst.beta_r = worst.beta_d = 1e-2;
    const ChannelSet ch = draw(cfg, 50);
    RandomStream rng(51);
    const CMat f = random_feasible_precoder(worst, rng);
    const CMat g = random_feasible_gain(worst, ch, f, rng, 0.5);
    const CMat c = mmse_receiver(cfg, ch, f, g);

    const double grid[5] = {0.0, 1e-4, 1e-3, 3e-3, 1e-2};
    double* knobs[4] = {&cfg.kappa_s, &cfg.kappa_r, &cfg.beta_r, &cfg.beta_d};
    for (double* knob : knobs) {
        const double saved = *knob;
        double prev = -1.0;
        for (double k : grid) {
            *knob = k;
            const double mse = mse_matrix(cfg, ch, f, g, c).trace().real();
            REQUIRE(mse >= prev - 1e-12);
            prev = mse;
        }
        *knob = saved;
    }
}

TEST_CASE("design feasibility helper") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 52);
    RandomStream rng(53);
    DesignVariables dv;
    dv.F = random_feasible_precoder(cfg, rng);
    dv.G = random_feasible_gain(cfg, ch, dv.F, rng);
    dv.C = mmse_receiver(cfg, ch, dv.F, dv.G);
    CHECK(design_feasible(cfg, ch, dv));
    dv.F *= 2.0;
    CHECK_FALSE(design_feasible(cfg, ch, dv));
}
