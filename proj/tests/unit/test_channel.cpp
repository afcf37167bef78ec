#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ssirs/channel.hpp"

using namespace ssirs;

namespace {

ScenarioConfig small_cfg() {
    ScenarioConfig cfg;
    cfg.M = 4;
    cfg.N = 8;
    cfg.K = 2;
    return cfg;
}

}  // namespace

TEST_CASE("reference path gain at 10 m") {
    ScenarioConfig cfg;  // f_c = 470 MHz
    cfg.gain_ap_dbi = cfg.gain_irs_dbi = cfg.gain_user_dbi = 0.0;
    // Free-space gain (lambda / (4 pi 10))^2, about -45.9 dB.
    const double pl = path_gain(10.0, 3.6, cfg, Link::AU);
    CHECK(pl == Catch::Approx(2.580e-5).epsilon(5e-3));
    CHECK(pl == Catch::Approx(reference_gain(cfg)).epsilon(1e-12));
    // The reference point is exponent-independent.
    CHECK(path_gain(10.0, 3.6, cfg, Link::AU) ==
          Catch::Approx(path_gain(10.0, 2.2, cfg, Link::AU)).epsilon(1e-12));
}

TEST_CASE("path gain at 60 m with exponent 3.6") {
    ScenarioConfig cfg;
    cfg.gain_ap_dbi = cfg.gain_irs_dbi = cfg.gain_user_dbi = 0.0;
    CHECK(path_gain(60.0, 3.6, cfg, Link::AU) == Catch::Approx(4.08e-8).epsilon(1e-2));
}

TEST_CASE("path gain includes endpoint antenna gains") {
    ScenarioConfig cfg;  // 10 dBi AP, 10 dBi IRS, 0 dBi user
    const double base = reference_gain(cfg);
    CHECK(path_gain(10.0, 2.2, cfg, Link::AU) == Catch::Approx(10.0 * base).epsilon(1e-12));
    CHECK(path_gain(10.0, 2.2, cfg, Link::AI) == Catch::Approx(100.0 * base).epsilon(1e-12));
    CHECK(path_gain(10.0, 2.2, cfg, Link::IU) == Catch::Approx(10.0 * base).epsilon(1e-12));
}

TEST_CASE("path gain monotone decreasing and positive-distance only") {
    ScenarioConfig cfg;
    double prev = path_gain(1.0, 2.2, cfg, Link::AU);
    for (double d : {2.0, 5.0, 10.0, 25.0, 60.0, 120.0}) {
        const double g = path_gain(d, 2.2, cfg, Link::AU);
        CHECK(g < prev);
        prev = g;
    }
    CHECK_THROWS_AS(path_gain(0.0, 2.2, cfg, Link::AU), std::invalid_argument);
    CHECK_THROWS_AS(path_gain(-1.0, 2.2, cfg, Link::AU), std::invalid_argument);
}

TEST_CASE("geometry construction") {
    ScenarioConfig cfg = small_cfg();
    cfg.d0 = 60.0;
    cfg.d = 30.0;
    cfg.d_y = 1.0;
    cfg.r = 1.0;
    Rng rng(5);
    const Geometry g = build_geometry(cfg, rng);
    CHECK(g.ap == Eigen::Vector2d(0.0, 0.0));
    CHECK(g.irs == Eigen::Vector2d(30.0, 1.0));
    REQUIRE(g.users.size() == 2);
    for (int k = 0; k < 2; ++k) {
        const double dist_from_center = (g.users[k] - Eigen::Vector2d(60.0, 0.0)).norm();
        CHECK(dist_from_center == Catch::Approx(1.0).epsilon(1e-12));
        CHECK(g.ap_user_dist(k) == Catch::Approx(g.users[k].norm()).epsilon(1e-12));
    }
    CHECK(g.ap_irs_dist() == Catch::Approx(std::sqrt(30.0 * 30.0 + 1.0)).epsilon(1e-12));
}

TEST_CASE("rician entries carry the path gain for any K-factor") {
    // E|entry|^2 = pg regardless of beta under the (beta/(1+beta), 1/(1+beta))
    // normalization.
    const double pg = 3.7e-7;
    for (double beta : {0.0, 2.0}) {
        Rng rng(17);
        const cd los(std::cos(0.9), std::sin(0.9));
        double acc = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) acc += std::norm(detail::rician_entry(pg, beta, los, rng));
        CHECK(acc / n == Catch::Approx(pg).epsilon(0.02));
    }
}

TEST_CASE("huge K-factor collapses to the LoS component") {
    const double pg = 1.0;
    const double beta = 1e9;
    Rng rng(3);
    const cd los(std::cos(1.2), std::sin(1.2));
    for (int i = 0; i < 100; ++i) {
        const cd e = detail::rician_entry(pg, beta, los, rng);
        CHECK(std::abs(e - los) < 1e-3);
    }
}

TEST_CASE("channel sampling is deterministic and well shaped") {
    ScenarioConfig cfg = small_cfg();
    Rng rng1(7), rng2(7);
    const ChannelRealization a = sample_channels(cfg, rng1);
    const ChannelRealization b = sample_channels(cfg, rng2);
    REQUIRE(a.G.rows() == cfg.N);
    REQUIRE(a.G.cols() == cfg.M);
    REQUIRE(a.h_r.rows() == cfg.N);
    REQUIRE(a.h_r.cols() == cfg.K);
    REQUIRE(a.h_d.rows() == cfg.M);
    REQUIRE(a.h_d.cols() == cfg.K);
    CHECK(a.G == b.G);
    CHECK(a.h_r == b.h_r);
    CHECK(a.h_d == b.h_d);
    CHECK(a.G.allFinite());
    CHECK(a.h_r.allFinite());
    CHECK(a.h_d.allFinite());
    // Noise budget: thermal + quantization for users, thermal only at the IRS.
    CHECK(a.sigma_k2(0) == Catch::Approx(1e-14 + 1.9952623149688787e-8).epsilon(1e-12));
    CHECK(a.sigma_a2 == Catch::Approx(1e-14).epsilon(1e-12));
}

TEST_CASE("unit-phase LoS model draws different realizations") {
    ScenarioConfig cfg = small_cfg();
    cfg.los = LosModel::kUnitPhase;
    Rng rng(9);
    const ChannelRealization a = sample_channels(cfg, rng);
    CHECK(a.G.allFinite());
    Rng rng2(9);
    const ChannelRealization b = sample_channels(cfg, rng2);
    CHECK(a.G == b.G);  // still deterministic
}

TEST_CASE("config validation rejects nonsense") {
    ScenarioConfig cfg = small_cfg();
    cfg.K = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_cfg();
    cfg.eta_h = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_cfg();
    cfg.b = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_cfg();
    cfg.irs_rows = 3;  // does not divide N = 8
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("square panel factorization") {
    ScenarioConfig cfg;
    cfg.N = 256;
    CHECK(cfg.rows() == 16);
    CHECK(cfg.cols() == 16);
    cfg.N = 64;
    CHECK(cfg.rows() == 8);
    cfg.N = 32;
    CHECK(cfg.rows() == 4);
    CHECK(cfg.cols() == 8);
}
