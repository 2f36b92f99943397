#pragma once

#include <stdexcept>
#include <vector>

#include "llmpc/objectives.hpp"
#include "llmpc/rng.hpp"

namespace llmpc {

// Equally spaced power levels per transmitter, including 0 and p_max.
// 101 levels puts every label on an integer percent of p_max, so grid
// argmax allocations survive the prompt codec's 0..100 encoding exactly.
struct GridSpec {
    int levels = 101;
};

struct BinaryOptions {
    bool include_both_on = false;
};

// Argmax of the objective over the levels x levels power grid.
// Ties resolve to the lower total power, then to the lexicographically
// smaller (P_1, P_2), so labels are deterministic and EE-sane.
inline PowerAllocation solve_grid(ObjectiveKind kind, const ChannelGains& g,
                                  const SystemParams& params, const GridSpec& grid = {}) {
    if (grid.levels < 2) throw std::invalid_argument("GridSpec: levels must be >= 2");

    const double noise = params.noise_power();
    const int n = grid.levels;
    std::vector<double> level(n);
    for (int k = 0; k < n; ++k)
        level[k] = params.p_max * (static_cast<double>(k) / (n - 1));

    PowerAllocation best{{level[0], level[0]}};
    double best_value = evaluate(kind, g, best, noise, params.p_circuit);
    double best_sum = best.p[0] + best.p[1];

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const PowerAllocation a{{level[i], level[j]}};
            const double v = evaluate(kind, g, a, noise, params.p_circuit);
            const double sum = a.p[0] + a.p[1];
            const bool better =
                v > best_value ||
                (v == best_value &&
                 (sum < best_sum ||
                  (sum == best_sum && (a.p[0] < best.p[0] ||
                                       (a.p[0] == best.p[0] && a.p[1] < best.p[1])))));
            if (better) {
                best = a;
                best_value = v;
                best_sum = sum;
            }
        }
    }
    return best;
}

// Best of (p_max, 0) and (0, p_max), plus (p_max, p_max) when enabled.
// Ties keep the earliest candidate, so a symmetric instance returns (p_max, 0).
inline PowerAllocation solve_binary(ObjectiveKind kind, const ChannelGains& g,
                                    const SystemParams& params,
                                    const BinaryOptions& opts = {}) {
    const double noise = params.noise_power();
    std::vector<PowerAllocation> candidates = {{{params.p_max, 0.0}}, {{0.0, params.p_max}}};
    if (opts.include_both_on) candidates.push_back({{params.p_max, params.p_max}});

    PowerAllocation best = candidates[0];
    double best_value = evaluate(kind, g, best, noise, params.p_circuit);
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        const double v = evaluate(kind, g, candidates[c], noise, params.p_circuit);
        if (v > best_value) {
            best = candidates[c];
            best_value = v;
        }
    }
    return best;
}

// P_i i.i.d. uniform on [0, p_max].
inline PowerAllocation solve_random(const SystemParams& params, RandomStream& rng) {
    PowerAllocation a;
    a.p[0] = rng.uniform(0.0, params.p_max);
    a.p[1] = rng.uniform(0.0, params.p_max);
    return a;
}

}  // namespace llmpc
