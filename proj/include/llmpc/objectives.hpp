#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "llmpc/channel.hpp"

namespace llmpc {

// Transmit powers (P_1, P_2) in watts.
struct PowerAllocation {
    std::array<double, 2> p{0.0, 0.0};
};

enum class ObjectiveKind { SumSE, SumEE };

inline const char* objective_name(ObjectiveKind kind) {
    return kind == ObjectiveKind::SumSE ? "se" : "ee";
}

// SE of pair i with cross-pair interference, with the noise power hoisted.
// This overload is the single arithmetic path for the objective; callers
// that scan many allocations reuse it with a precomputed noise term so grid
// values and per-call values agree bit for bit.
inline double se_pair(const ChannelGains& g, const PowerAllocation& a, double noise_watt,
                      int i) {
    const int l = 1 - i;
    const double sinr = g.h[i][i] * a.p[i] / (noise_watt + g.h[l][i] * a.p[l]);
    return std::log2(1.0 + sinr);
}

// SE_i = log2(1 + h_ii P_i / (N0 W + h_li P_l)), in bits/s/Hz.
inline double se_pair(const ChannelGains& g, const PowerAllocation& a,
                      const SystemParams& params, int i) {
    return se_pair(g, a, params.noise_power(), i);
}

inline double total_se(const ChannelGains& g, const PowerAllocation& a, double noise_watt) {
    return se_pair(g, a, noise_watt, 0) + se_pair(g, a, noise_watt, 1);
}

inline double total_se(const ChannelGains& g, const PowerAllocation& a,
                       const SystemParams& params) {
    return total_se(g, a, params.noise_power());
}

// Per-transmitter energy efficiency sum, SE_i / (P_i + P_C), in bits/s/Hz/W.
inline double total_ee(const ChannelGains& g, const PowerAllocation& a, double noise_watt,
                       double p_circuit) {
    return se_pair(g, a, noise_watt, 0) / (a.p[0] + p_circuit) +
           se_pair(g, a, noise_watt, 1) / (a.p[1] + p_circuit);
}

inline double total_ee(const ChannelGains& g, const PowerAllocation& a,
                       const SystemParams& params) {
    return total_ee(g, a, params.noise_power(), params.p_circuit);
}

inline double evaluate(ObjectiveKind kind, const ChannelGains& g, const PowerAllocation& a,
                       double noise_watt, double p_circuit) {
    return kind == ObjectiveKind::SumSE ? total_se(g, a, noise_watt)
                                        : total_ee(g, a, noise_watt, p_circuit);
}

inline double evaluate(ObjectiveKind kind, const ChannelGains& g, const PowerAllocation& a,
                       const SystemParams& params) {
    return evaluate(kind, g, a, params.noise_power(), params.p_circuit);
}

}  // namespace llmpc
