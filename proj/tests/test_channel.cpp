#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "llmpc/channel.hpp"

using namespace llmpc;

TEST_CASE("dbm/watt conversions hit the textbook points") {
    CHECK(dbm_to_watt(20.0) == Catch::Approx(0.1).epsilon(1e-12));
    CHECK(dbm_to_watt(30.0) == Catch::Approx(1.0).epsilon(1e-12));
    // -173 dBm/Hz over 10 MHz: -103 dBm, computed by hand as 10^-13.3 W
    CHECK(dbm_to_watt(-103.0) == Catch::Approx(5.0118723362727144e-14).epsilon(1e-12));

    SystemParams params;
    CHECK(params.noise_power() == Catch::Approx(5.0118723362727144e-14).epsilon(1e-12));
    CHECK(watt_to_dbm(params.noise_power()) == Catch::Approx(-103.0).margin(1e-9));
}

TEST_CASE("dbm/watt round-trip over [-200, 60]") {
    for (double dbm = -200.0; dbm <= 60.0; dbm += 0.37)
        CHECK(watt_to_dbm(dbm_to_watt(dbm)) == Catch::Approx(dbm).margin(1e-9));
}

TEST_CASE("deployments stay inside the square") {
    SystemParams params;
    RandomStream rng(7);
    for (int k = 0; k < 1000; ++k) {
        const Deployment d = sample_deployment(params, rng);
        for (const Point& p : {d.tx[0], d.tx[1], d.rx[0], d.rx[1]}) {
            CHECK(p.x >= 0.0);
            CHECK(p.x <= params.area_side);
            CHECK(p.y >= 0.0);
            CHECK(p.y <= params.area_side);
        }
    }
}

TEST_CASE("degenerate square collapses every position to the origin") {
    SystemParams params;
    params.area_side = 0.0;
    RandomStream rng(3);
    const Deployment d = sample_deployment(params, rng);
    for (const Point& p : {d.tx[0], d.tx[1], d.rx[0], d.rx[1]}) {
        CHECK(p.x == 0.0);
        CHECK(p.y == 0.0);
    }
}

TEST_CASE("same seed, same deployment") {
    SystemParams params;
    RandomStream a(42), b(42);
    const Deployment da = sample_deployment(params, a);
    const Deployment db = sample_deployment(params, b);
    for (int i = 0; i < 2; ++i) {
        CHECK(da.tx[i].x == db.tx[i].x);
        CHECK(da.tx[i].y == db.tx[i].y);
        CHECK(da.rx[i].x == db.rx[i].x);
        CHECK(da.rx[i].y == db.rx[i].y);
    }
}

TEST_CASE("effective distance") {
    SystemParams params;
    Deployment d;
    d.tx[0] = {0.0, 0.0};
    d.rx[0] = {3.0, 4.0};
    CHECK(effective_distance(d, 0, 0, params) == Catch::Approx(5.0));

    d.rx[0] = {0.0, 0.0};  // co-located: clamped at min_distance
    CHECK(effective_distance(d, 0, 0, params) == 1.0);

    d.rx[0] = {30.0, 30.0};  // corner to corner: sqrt(1800), hand-checked
    CHECK(effective_distance(d, 0, 0, params) == Catch::Approx(42.42640687119285).epsilon(1e-12));
}

TEST_CASE("fading has unit mean power and exponential tail") {
    RandomStream rng(2024);
    const int n = 100000;
    double sum_power = 0.0;
    int above_one = 0;
    for (int k = 0; k < n; ++k) {
        const double power = std::norm(sample_fading(rng));
        sum_power += power;
        above_one += power > 1.0 ? 1 : 0;
    }
    CHECK(sum_power / n > 0.98);
    CHECK(sum_power / n < 1.02);
    // |g|^2 ~ Exp(1): P(|g|^2 > 1) = e^-1
    CHECK(std::abs(static_cast<double>(above_one) / n - std::exp(-1.0)) < 0.01);
}

TEST_CASE("fading is deterministic under a fixed seed") {
    RandomStream a(5), b(5);
    for (int k = 0; k < 10; ++k) {
        const auto ga = sample_fading(a);
        const auto gb = sample_fading(b);
        CHECK(ga.real() == gb.real());
        CHECK(ga.imag() == gb.imag());
    }
}

TEST_CASE("channel gain formula spot values") {
    SystemParams params;
    Deployment d;
    d.tx[0] = {0.0, 0.0};
    d.tx[1] = {0.0, 0.0};
    d.rx[0] = {1.0, 0.0};
    d.rx[1] = {10.0, 0.0};
    FadeMatrix fades;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) fades[i][j] = {1.0, 0.0};  // |g|^2 = 1

    const ChannelGains g = channel_gains(d, fades, params);
    // d = 1 m: h = 10^-3.453
    CHECK(g.h[0][0] == Catch::Approx(3.523708710424873e-4).epsilon(1e-12));
    // d = 10 m: h = 10^(-3.453 - 3.8)
    CHECK(g.h[0][1] == Catch::Approx(5.5847019473683065e-8).epsilon(1e-12));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(g.h[i][j] > 0.0);
}

TEST_CASE("zero fade power is floored, never zero gain") {
    SystemParams params;
    Deployment d;
    d.tx[0] = {0.0, 0.0};
    d.rx[0] = {1.0, 0.0};
    FadeMatrix fades{};  // all-zero fades
    const ChannelGains g = channel_gains(d, fades, params);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(g.h[i][j] > 0.0);
            CHECK(std::isfinite(g.h[i][j]));
        }
}

TEST_CASE("gain decreases with distance for fixed fading") {
    SystemParams params;
    FadeMatrix fades;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) fades[i][j] = {0.8, 0.3};

    double prev = 1e300;
    for (double dist = 1.0; dist <= 42.0; dist += 0.5) {
        Deployment d;
        d.tx[0] = {0.0, 0.0};
        d.rx[0] = {dist, 0.0};
        const double h = channel_gains(d, fades, params).h[0][0];
        CHECK(h < prev);
        prev = h;
    }
}

TEST_CASE("full pipeline is bit-reproducible for a fixed seed") {
    SystemParams params;
    RandomStream a(99), b(99);
    for (int k = 0; k < 50; ++k) {
        const ChannelGains ga = sample_channel(params, a);
        const ChannelGains gb = sample_channel(params, b);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(ga.h[i][j] == gb.h[i][j]);
    }
}

TEST_CASE("parameter validation rejects nonpositive quantities") {
    SystemParams params;
    CHECK_NOTHROW(params.validate());

    SystemParams bad = params;
    bad.p_max = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = params;
    bad.p_circuit = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = params;
    bad.min_distance = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = params;
    bad.bandwidth = -5.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    // noise density may be any real
    SystemParams ok = params;
    ok.noise_density_dbm_hz = 12.0;
    CHECK_NOTHROW(ok.validate());
}
