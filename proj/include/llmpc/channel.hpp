#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "llmpc/rng.hpp"

namespace llmpc {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double watt) { return 30.0 + 10.0 * std::log10(watt); }

// Physical constants of the two-pair scenario. Defaults: 30 m square,
// path loss 10^3.453 * d^3.8, 10 MHz bandwidth, -173 dBm/Hz noise density,
// 20 dBm max transmit power, 30 dBm circuit power.
struct SystemParams {
    double area_side = 30.0;            // m
    double pl_coeff_log10 = 3.453;      // path loss coefficient is 10^pl_coeff_log10
    double pl_exponent = 3.8;
    double bandwidth = 1e7;             // Hz
    double noise_density_dbm_hz = -173.0;
    double p_max = 0.1;                 // W
    double p_circuit = 1.0;             // W
    double min_distance = 1.0;          // m, lower clamp on link distance

    // Noise power N0 * W over the full band, in watts.
    double noise_power() const { return dbm_to_watt(noise_density_dbm_hz) * bandwidth; }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw std::invalid_argument(std::string("SystemParams: ") + name +
                                            " must be strictly positive");
        };
        positive(area_side, "area_side");
        positive(pl_exponent, "pl_exponent");
        positive(bandwidth, "bandwidth");
        positive(p_max, "p_max");
        positive(p_circuit, "p_circuit");
        positive(min_distance, "min_distance");
        if (!std::isfinite(pl_coeff_log10))
            throw std::invalid_argument("SystemParams: pl_coeff_log10 must be finite");
        if (!std::isfinite(noise_density_dbm_hz))
            throw std::invalid_argument("SystemParams: noise_density_dbm_hz must be finite");
    }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Positions of the two transmitters and their receivers.
struct Deployment {
    std::array<Point, 2> tx;
    std::array<Point, 2> rx;
};

// Linear power gains, h[i][j] = gain transmitter i -> receiver j.
struct ChannelGains {
    std::array<std::array<double, 2>, 2> h{};
};

// 2x2 complex multipath coefficients, one per (tx, rx) link.
using FadeMatrix = std::array<std::array<std::complex<double>, 2>, 2>;

// Four positions i.i.d. uniform over the [0, area_side] square.
inline Deployment sample_deployment(const SystemParams& params, RandomStream& rng) {
    auto point = [&]() {
        Point p;
        p.x = rng.uniform(0.0, params.area_side);
        p.y = rng.uniform(0.0, params.area_side);
        return p;
    };
    Deployment d;
    d.tx[0] = point();
    d.tx[1] = point();
    d.rx[0] = point();
    d.rx[1] = point();
    return d;
}

// Euclidean distance tx_i -> rx_j, clamped below at min_distance so the
// path loss cannot diverge for co-located nodes.
inline double effective_distance(const Deployment& d, int tx_i, int rx_j,
                                 const SystemParams& params) {
    const double dx = d.tx[tx_i].x - d.rx[rx_j].x;
    const double dy = d.tx[tx_i].y - d.rx[rx_j].y;
    return std::max(std::hypot(dx, dy), params.min_distance);
}

// CSCG coefficient g = (x + iy)/sqrt(2) with x, y standard normal, so
// E[|g|^2] = 1 and |g|^2 ~ Exp(1).
inline std::complex<double> sample_fading(RandomStream& rng) {
    const auto [x, y] = rng.gaussian_pair();
    constexpr double inv_sqrt2 = 0.7071067811865476;
    return {x * inv_sqrt2, y * inv_sqrt2};
}

// h[i][j] = |g_ij|^2 * 10^(-pl_coeff_log10) * d_ij^(-pl_exponent).
// Fade power is floored at 1e-300 to keep every gain strictly positive.
inline ChannelGains channel_gains(const Deployment& d, const FadeMatrix& fades,
                                  const SystemParams& params) {
    ChannelGains g;
    const double pl_coeff = std::pow(10.0, -params.pl_coeff_log10);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double fade_power = std::max(std::norm(fades[i][j]), 1e-300);
            const double dist = effective_distance(d, i, j, params);
            g.h[i][j] = fade_power * pl_coeff * std::pow(dist, -params.pl_exponent);
        }
    }
    return g;
}

// One full channel realization: fresh deployment plus independent fading on
// each of the four links. Draw order is fixed (deployment, then fades in
// row-major h[0][0], h[0][1], h[1][0], h[1][1] order).
inline ChannelGains sample_channel(const SystemParams& params, RandomStream& rng) {
    const Deployment d = sample_deployment(params, rng);
    FadeMatrix fades;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            fades[i][j] = sample_fading(rng);
    return channel_gains(d, fades, params);
}

}  // namespace llmpc
