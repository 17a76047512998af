#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fdrelay/simulate.hpp"
#include "helpers.hpp"

using namespace fdrelay;
using test::random_feasible_gain;
using test::random_feasible_precoder;

namespace {

ChannelSet draw(const SystemConfig& cfg, std::uint64_t seed) {
    RandomStream rng(seed);
    return draw_channels(cfg, rng);
}

}  // namespace

TEST_CASE("simulate_chain - input validation") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 60);
    RandomStream rng(61);
    const CMat f = random_feasible_precoder(cfg, rng);
    SimOptions opts;
    opts.n_sym = 10;
    CHECK_THROWS_AS(simulate_chain(cfg, ch, f, CMat::Zero(cfg.n_r, cfg.m_r),
                                   CMat::Zero(cfg.m_d, cfg.d), opts, rng),
                    std::invalid_argument);
}

TEST_CASE("simulate_chain - silent relay matches the destination closed form") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 62);
    RandomStream rng(63);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = CMat::Zero(cfg.n_r, cfg.m_r);
    const CMat c = mmse_receiver(cfg, ch, f, g);

    SimOptions opts;
    opts.n_sym = 100000;
    const SimResult sim = simulate_chain(cfg, ch, f, g, c, opts, rng);

    CHECK(sim.stats.rout_cov.norm() == 0.0);
    const CMat want = dest_input_cov(cfg, ch, f, CMat::Zero(cfg.n_r, cfg.n_r));
    CHECK((sim.stats.y_cov - want).norm() < 0.04 * want.norm());
}

TEST_CASE("simulate_chain - ideal hardware MSE matches the closed form within 2%") {
    SystemConfig cfg = default_config();
    cfg.kappa_s = cfg.kappa_r = cfg.beta_r = cfg.beta_d = 0.0;
    const ChannelSet ch = strip_csi_error(draw(cfg, 64));
    RandomStream rng(65);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = random_feasible_gain(cfg, ch, f, rng);
    const CMat c = mmse_receiver(cfg, ch, f, g);

    SimOptions opts;
    opts.n_sym = 100000;
    const SimResult sim = simulate_chain(cfg, ch, f, g, c, opts, rng);
    const CMat closed = mse_matrix(cfg, ch, f, g, c);
    CHECK((sim.stats.mse - closed).norm() < 0.02 * closed.norm());
}

TEST_CASE("simulate_chain - default impairments reproduce the transfer-function output") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 66);
    RandomStream rng(67);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = random_feasible_gain(cfg, ch, f, rng);
    const CMat c = mmse_receiver(cfg, ch, f, g);

    SimOptions opts;
    opts.n_sym = 100000;
    const SimResult sim = simulate_chain(cfg, ch, f, g, c, opts, rng);

    const auto rt = relay_transfer(cfg, ch, g);
    const CMat m_in0 = relay_input_cov_base(cfg, ch, f);
    const CMat want = unvec(rt.theta * vec(m_in0), cfg.n_r, cfg.n_r);
    CHECK((sim.stats.rout_cov - want).norm() < 0.05 * want.norm());
}

TEST_CASE("simulate_chain - distortion streams are independent, diagonal and white") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 68);
    RandomStream rng(69);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = random_feasible_gain(cfg, ch, f, rng);
    const CMat c = mmse_receiver(cfg, ch, f, g);

    SimOptions opts;
    opts.n_sym = 40000;
    const SimResult sim = simulate_chain(cfg, ch, f, g, c, opts, rng);
    const double bound = 3.0 / std::sqrt(static_cast<double>(sim.stats.n_used));
    for (const DistortionStats* s :
         {&sim.stats.tx_source, &sim.stats.rx_relay, &sim.stats.tx_relay, &sim.stats.rx_dest}) {
        CHECK(s->max_signal_corr < bound);
        CHECK(s->max_offdiag_corr < bound);
        CHECK(s->max_lag1_corr < bound);
    }
}

TEST_CASE("simulate_chain - empirical distortion mode stays close to the model") {
    const SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 70);
    RandomStream rng(71);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = random_feasible_gain(cfg, ch, f, rng);
    const CMat c = mmse_receiver(cfg, ch, f, g);

    SimOptions opts;
    opts.n_sym = 50000;
    opts.mode = DistortionMode::Empirical;
    const SimResult sim = simulate_chain(cfg, ch, f, g, c, opts, rng);
    const CMat closed = mse_matrix(cfg, ch, f, g, c);
    CHECK((sim.stats.mse - closed).norm() < 0.1 * closed.norm());
}

TEST_CASE("simulate_chain - diverging loop raises the instability error") {
    SystemConfig cfg = default_config();
    const ChannelSet ch = draw(cfg, 72);
    RandomStream rng(73);
    const CMat f = random_feasible_precoder(cfg, rng);
    // A gain far past stability: the closed-form check itself must fire.
    const CMat g = 1e3 * CMat::Ones(cfg.n_r, cfg.m_r);
    SimOptions opts;
    opts.n_sym = 5000;
    CHECK_THROWS_AS(simulate_chain(cfg, ch, f, g, mmse_receiver(cfg, ch, f,
                                   CMat::Zero(cfg.n_r, cfg.m_r)), opts, rng),
                    RelayLoopUnstableError);
}

TEST_CASE("simulate_chain - series retention") {
    const SystemConfig cfg = desk_config();
    const ChannelSet ch = draw(cfg, 74);
    RandomStream rng(75);
    const CMat f = random_feasible_precoder(cfg, rng);
    const CMat g = random_feasible_gain(cfg, ch, f, rng);
    SimOptions opts;
    opts.n_sym = 2000;
    opts.keep_series = true;
    const SimResult sim =
        simulate_chain(cfg, ch, f, g, CMat::Zero(cfg.m_d, cfg.d), opts, rng);
    REQUIRE(sim.series.x.size() == 2000);
    REQUIRE(sim.series.y.size() == 2000);
    // Bookkeeping: the suppressed input is the received input minus the
    // estimated replica of the delayed amplified signal,
    //   r_supp(t) = r_in(t) - H_rr_est * G * r_supp(t-1).
    for (int t = 1000; t < 1010; ++t) {
        const CVec recon = sim.series.r_in[static_cast<std::size_t>(t)] -
                           ch.rr.h_est * (g * sim.series.r_in_supp[static_cast<std::size_t>(t - 1)]);
        const CVec got = sim.series.r_in_supp[static_cast<std::size_t>(t)];
        REQUIRE((got - recon).norm() < 1e-12 * (1.0 + got.norm()));
    }
}
