#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "llmpc/objectives.hpp"

namespace llmpc {

// Domain in which gains are pooled and z-scored before the x100 integer
// encoding. Raw linear gains (~1e-9, heavy-tailed) produce pathological
// z-scores, so the dB domain is the default; linear stays available for
// ablation.
enum class GainDomain { Db, Linear };

struct CodecOptions {
    GainDomain gain_domain = GainDomain::Db;
};

// N_S labeled (gains -> allocation) shots plus one unlabeled query.
struct Episode {
    struct Shot {
        ChannelGains gains;
        PowerAllocation label;
    };
    std::vector<Shot> shots;
    ChannelGains query;
};

// Integer form of an episode. Gains are z-scored over all 4*(N_S+1) gains
// in the episode and scaled by 100; powers are percent of p_max. Gain order
// per realization is (h11, h12, h21, h22).
struct EncodedEpisode {
    std::vector<std::array<int, 4>> shot_gains;
    std::vector<std::array<int, 2>> shot_powers;
    std::array<int, 4> query_gains{};
    double stats_mean = 0.0;    // mean of the transformed gains
    double stats_stddev = 0.0;  // population standard deviation
};

// Result of parsing an LLM completion. A failure maps downstream to the
// all-zero allocation.
struct ParseOutcome {
    std::optional<PowerAllocation> allocation;
    std::string failure_reason;

    bool ok() const { return allocation.has_value(); }

    static ParseOutcome success(const PowerAllocation& a) { return {a, {}}; }
    static ParseOutcome failure(std::string reason) { return {std::nullopt, std::move(reason)}; }
};

namespace detail {

// round half away from zero, as an int
inline int round_int(double x) { return static_cast<int>(std::lround(x)); }

inline void flatten_gains(const ChannelGains& g, std::vector<double>& out) {
    out.push_back(g.h[0][0]);
    out.push_back(g.h[0][1]);
    out.push_back(g.h[1][0]);
    out.push_back(g.h[1][1]);
}

}  // namespace detail

// round(100 * P_i / p_max) per transmitter, each in [0, 100] for a valid
// allocation.
inline std::array<int, 2> encode_power(const PowerAllocation& a, double p_max) {
    return {detail::round_int(100.0 * a.p[0] / p_max),
            detail::round_int(100.0 * a.p[1] / p_max)};
}

// Clamp to [0, 100] and scale back to watts. Out-of-range integers carry
// partial information, so they are clamped rather than rejected.
inline PowerAllocation decode_power(const std::array<int, 2>& ints, double p_max) {
    PowerAllocation a;
    for (int i = 0; i < 2; ++i) {
        const int v = std::min(100, std::max(0, ints[i]));
        a.p[i] = static_cast<double>(v) * p_max / 100.0;
    }
    return a;
}

// Encode a full episode: pool the transformed gains over shots + query,
// z-score with the population standard deviation, scale by 100 and round;
// shot labels go through encode_power. A degenerate pool (stddev < 1e-12)
// encodes every gain as 0.
inline EncodedEpisode encode_episode(const Episode& episode, double p_max,
                                     const CodecOptions& options = {}) {
    std::vector<double> pooled;
    pooled.reserve(4 * (episode.shots.size() + 1));
    for (const auto& shot : episode.shots) detail::flatten_gains(shot.gains, pooled);
    detail::flatten_gains(episode.query, pooled);

    for (double& v : pooled) {
        if (!std::isfinite(v))
            throw std::invalid_argument("encode_episode: non-finite channel gain");
        if (options.gain_domain == GainDomain::Db) {
            v = 10.0 * std::log10(v);
            if (!std::isfinite(v))
                throw std::invalid_argument("encode_episode: gain not representable in dB");
        }
    }

    double mean = 0.0;
    for (double v : pooled) mean += v;
    mean /= static_cast<double>(pooled.size());
    double var = 0.0;
    for (double v : pooled) var += (v - mean) * (v - mean);
    var /= static_cast<double>(pooled.size());
    const double stddev = std::sqrt(var);

    auto encode = [&](double v) {
        if (stddev < 1e-12) return 0;
        return detail::round_int(100.0 * (v - mean) / stddev);
    };

    EncodedEpisode out;
    out.stats_mean = mean;
    out.stats_stddev = stddev;
    std::size_t idx = 0;
    for (const auto& shot : episode.shots) {
        std::array<int, 4> gains;
        for (int k = 0; k < 4; ++k) gains[k] = encode(pooled[idx++]);
        out.shot_gains.push_back(gains);
        out.shot_powers.push_back(encode_power(shot.label, p_max));
    }
    for (int k = 0; k < 4; ++k) out.query_gains[k] = encode(pooled[idx++]);
    return out;
}

// Render the few-shot prompt. Each shot is
//   `If A is {a1}, {a2}, {a3}, {a4}, then B is {b1}, {b2}.`
// joined by single spaces, followed by the query stub, which ends with a
// trailing space and no label. The grammar is byte-exact; downstream parsers
// rely on it.
inline std::string build_prompt(const EncodedEpisode& e) {
    if (e.shot_gains.empty())
        throw std::invalid_argument("build_prompt: at least one in-context shot required");

    std::string out;
    auto append_gains = [&](const std::array<int, 4>& g) {
        out += "If A is ";
        for (int k = 0; k < 4; ++k) {
            out += std::to_string(g[k]);
            out += (k < 3) ? ", " : ", then B is ";
        }
    };
    for (std::size_t s = 0; s < e.shot_gains.size(); ++s) {
        append_gains(e.shot_gains[s]);
        out += std::to_string(e.shot_powers[s][0]);
        out += ", ";
        out += std::to_string(e.shot_powers[s][1]);
        out += ". ";
    }
    append_gains(e.query_gains);
    return out;
}

namespace detail {

// Parse an optionally signed integer at position i, saturating at +/-10^9
// (decoded powers clamp to [0, 100] anyway). Returns false if no digits.
inline bool scan_int(std::string_view text, std::size_t& i, long& value) {
    std::size_t j = i;
    long sign = 1;
    if (j < text.size() && (text[j] == '+' || text[j] == '-')) {
        sign = text[j] == '-' ? -1 : 1;
        ++j;
    }
    if (j >= text.size() || text[j] < '0' || text[j] > '9') return false;
    long v = 0;
    constexpr long kCap = 1000000000L;
    for (; j < text.size() && text[j] >= '0' && text[j] <= '9'; ++j) {
        if (v < kCap) v = v * 10 + (text[j] - '0');
    }
    value = sign * std::min(v, kCap);
    i = j;
    return true;
}

inline void skip_spaces(std::string_view text, std::size_t& i) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' ||
                               text[i] == '\r'))
        ++i;
}

}  // namespace detail

// Accept a completion iff it begins (after leading whitespace) with
// `<int>, <int>`; whitespace around the comma is tolerated and everything
// after the second integer is ignored. Success decodes the pair; anything
// else is a failure value, never an exception.
inline ParseOutcome parse_response(std::string_view text, double p_max) {
    std::size_t i = 0;
    long v1 = 0;
    long v2 = 0;
    detail::skip_spaces(text, i);
    if (!detail::scan_int(text, i, v1))
        return ParseOutcome::failure("no leading integer");
    detail::skip_spaces(text, i);
    if (i >= text.size() || text[i] != ',')
        return ParseOutcome::failure("missing comma separator");
    ++i;
    detail::skip_spaces(text, i);
    if (!detail::scan_int(text, i, v2))
        return ParseOutcome::failure("no second integer");
    return ParseOutcome::success(
        decode_power({static_cast<int>(v1), static_cast<int>(v2)}, p_max));
}

// A prompt recovered back into integer form, e.g. by a mock backend that
// needs the shots behind the text.
struct ParsedPrompt {
    std::vector<std::array<int, 4>> shot_gains;
    std::vector<std::array<int, 2>> shot_labels;
    std::array<int, 4> query_gains{};
};

// Strict parser for the build_prompt grammar. Returns nullopt unless the
// text is exactly a sequence of labeled shots followed by the query stub.
inline std::optional<ParsedPrompt> parse_prompt(std::string_view text) {
    ParsedPrompt out;
    std::size_t i = 0;

    auto literal = [&](std::string_view lit) {
        if (text.substr(i, lit.size()) != lit) return false;
        i += lit.size();
        return true;
    };

    while (true) {
        std::array<int, 4> gains;
        if (!literal("If A is ")) return std::nullopt;
        for (int k = 0; k < 4; ++k) {
            long v = 0;
            if (!detail::scan_int(text, i, v)) return std::nullopt;
            gains[k] = static_cast<int>(v);
            if (!literal(k < 3 ? ", " : ", then B is ")) return std::nullopt;
        }
        if (i == text.size()) {
            // query stub: ends right after "then B is " with its trailing space
            out.query_gains = gains;
            return out;
        }
        std::array<int, 2> label;
        long v = 0;
        if (!detail::scan_int(text, i, v)) return std::nullopt;
        label[0] = static_cast<int>(v);
        if (!literal(", ")) return std::nullopt;
        if (!detail::scan_int(text, i, v)) return std::nullopt;
        label[1] = static_cast<int>(v);
        if (!literal(". ")) return std::nullopt;
        out.shot_gains.push_back(gains);
        out.shot_labels.push_back(label);
    }
}

}  // namespace llmpc
