#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "llmpc/backend.hpp"
#include "llmpc/channel.hpp"
#include "llmpc/objectives.hpp"
#include "llmpc/prompt_codec.hpp"
#include "llmpc/solvers.hpp"

namespace llmpc {

struct RunConfig {
    SystemParams params;
    ObjectiveKind objective = ObjectiveKind::SumEE;
    std::vector<int> n_shots_list = {25, 50, 100, 150, 200};
    int n_trials = 500;
    std::uint64_t master_seed = 1;
    GridSpec grid;
    BinaryOptions binary_opts;
    BackendConfig backend;
    CodecOptions codec;
    int workers = 0;  // 0 = hardware concurrency; ordered backends force 1

    void validate() const {
        params.validate();
        if (n_trials < 1) throw ConfigError("RunConfig: n_trials must be >= 1");
        if (n_shots_list.empty()) throw ConfigError("RunConfig: n_shots_list must be non-empty");
        for (int n : n_shots_list)
            if (n < 1) throw ConfigError("RunConfig: every n_shots value must be >= 1");
        if (grid.levels < 2) throw ConfigError("RunConfig: grid levels must be >= 2");
        if (workers < 0) throw ConfigError("RunConfig: workers must be >= 0");
    }
};

enum class Strategy { Prop1, Prop2, Optimal, Binary, Random };

inline constexpr std::array<Strategy, 5> kAllStrategies = {
    Strategy::Prop1, Strategy::Prop2, Strategy::Optimal, Strategy::Binary, Strategy::Random};

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Prop1: return "prop1";
        case Strategy::Prop2: return "prop2";
        case Strategy::Optimal: return "optimal";
        case Strategy::Binary: return "binary";
        case Strategy::Random: return "random";
    }
    return "unknown";
}

struct StrategyResult {
    PowerAllocation alloc;
    double value = 0.0;
    double ratio = 0.0;  // value / optimal value, in [0, 1]
};

struct TrialRecord {
    int trial_id = 0;
    int n_shots = 0;
    ObjectiveKind objective = ObjectiveKind::SumEE;
    bool parse_ok = false;
    StrategyResult prop1;
    StrategyResult prop2;
    StrategyResult optimal;
    StrategyResult binary;
    StrategyResult random;

    const StrategyResult& by_strategy(Strategy s) const {
        switch (s) {
            case Strategy::Prop1: return prop1;
            case Strategy::Prop2: return prop2;
            case Strategy::Optimal: return optimal;
            case Strategy::Binary: return binary;
            case Strategy::Random: return random;
        }
        return prop1;
    }
};

struct SummaryRow {
    int n_shots = 0;
    ObjectiveKind objective = ObjectiveKind::SumEE;
    Strategy strategy = Strategy::Prop1;
    double mean_value = 0.0;
    double mean_ratio = 0.0;
    double parse_failure_rate = 0.0;
    int n_trials = 0;
};

struct ExperimentResult {
    std::vector<TrialRecord> trials;
    std::vector<SummaryRow> summary;
};

// One trial: sample n_shots labeled shots plus a query, prompt the backend,
// parse, fall back per the zero-power rule, and score every strategy on the
// query instance. Backend transport failures are recorded as parse failures;
// replay errors propagate (the transcript itself is broken).
inline TrialRecord run_trial(const RunConfig& cfg, Backend& backend, int n_shots,
                             int trial_id, RandomStream& rng) {
    const SystemParams& params = cfg.params;
    const double noise = params.noise_power();

    Episode episode;
    episode.shots.reserve(n_shots);
    for (int s = 0; s < n_shots; ++s) {
        Episode::Shot shot;
        shot.gains = sample_channel(params, rng);
        shot.label = solve_grid(cfg.objective, shot.gains, params, cfg.grid);
        episode.shots.push_back(std::move(shot));
    }
    episode.query = sample_channel(params, rng);
    const PowerAllocation random_alloc = solve_random(params, rng);

    TrialRecord rec;
    rec.trial_id = trial_id;
    rec.n_shots = n_shots;
    rec.objective = cfg.objective;

    const EncodedEpisode encoded = encode_episode(episode, params.p_max, cfg.codec);
    CompletionRequest req;
    req.prompt = build_prompt(encoded);

    PowerAllocation prop1_alloc;  // zero allocation unless the LLM answers in form
    try {
        const ParseOutcome outcome = parse_response(backend.complete(req), params.p_max);
        if (outcome.ok()) {
            rec.parse_ok = true;
            prop1_alloc = *outcome.allocation;
        }
    } catch (const BackendError&) {
        // recorded as a failed trial, zero-power fallback
    }

    const ChannelGains& q = episode.query;
    const PowerAllocation binary_alloc = solve_binary(cfg.objective, q, params, cfg.binary_opts);
    const PowerAllocation optimal_alloc = solve_grid(cfg.objective, q, params, cfg.grid);

    auto score = [&](const PowerAllocation& a) {
        StrategyResult r;
        r.alloc = a;
        r.value = evaluate(cfg.objective, q, a, noise, params.p_circuit);
        return r;
    };
    rec.prop1 = score(prop1_alloc);
    rec.binary = score(binary_alloc);
    rec.optimal = score(optimal_alloc);
    rec.random = score(random_alloc);
    // hybrid: keep the LLM answer only when it strictly beats the binary scheme
    rec.prop2 = rec.prop1.value > rec.binary.value ? rec.prop1 : rec.binary;

    // The random baseline is continuous-valued and can land between grid
    // points, so its ratio is clamped to keep ratios in [0, 1].
    auto ratio = [&](double v) {
        if (rec.optimal.value > 0.0) return std::min(v / rec.optimal.value, 1.0);
        return v == 0.0 ? 1.0 : 0.0;
    };
    rec.prop1.ratio = ratio(rec.prop1.value);
    rec.prop2.ratio = ratio(rec.prop2.value);
    rec.optimal.ratio = ratio(rec.optimal.value);
    rec.binary.ratio = ratio(rec.binary.value);
    rec.random.ratio = ratio(rec.random.value);
    return rec;
}

namespace detail {

inline std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& trials,
                                         const std::vector<int>& n_shots_list,
                                         ObjectiveKind objective) {
    std::vector<SummaryRow> rows;
    for (int n_shots : n_shots_list) {
        for (Strategy strategy : kAllStrategies) {
            SummaryRow row;
            row.n_shots = n_shots;
            row.objective = objective;
            row.strategy = strategy;
            int count = 0;
            int failures = 0;
            double sum_value = 0.0;
            double sum_ratio = 0.0;
            for (const auto& t : trials) {
                if (t.n_shots != n_shots) continue;
                const StrategyResult& r = t.by_strategy(strategy);
                sum_value += r.value;
                sum_ratio += r.ratio;
                failures += t.parse_ok ? 0 : 1;
                ++count;
            }
            if (count > 0) {
                row.mean_value = sum_value / count;
                row.mean_ratio = sum_ratio / count;
                row.parse_failure_rate = static_cast<double>(failures) / count;
            }
            row.n_trials = count;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace detail

// Sweep every n_shots value for n_trials trials each. Per-trial RNG streams
// are derived from (master_seed, n_shots, trial_id), so the records are
// identical no matter how many workers execute them; aggregation order is
// always (position in n_shots_list, trial_id).
inline ExperimentResult run_experiment(const RunConfig& cfg, Backend& backend) {
    cfg.validate();

    struct Task {
        int n_shots;
        int trial_id;
    };
    std::vector<Task> tasks;
    tasks.reserve(cfg.n_shots_list.size() * static_cast<std::size_t>(cfg.n_trials));
    for (int n_shots : cfg.n_shots_list)
        for (int t = 0; t < cfg.n_trials; ++t) tasks.push_back({n_shots, t});

    unsigned workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                       : std::max(1u, std::thread::hardware_concurrency());
    if (backend.requires_ordered_calls()) workers = 1;
    workers = std::min<unsigned>(workers, tasks.size());

    ExperimentResult result;
    result.trials.resize(tasks.size());

    auto run_task = [&](std::size_t idx) {
        const Task& task = tasks[idx];
        RandomStream rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(task.n_shots),
                                     static_cast<std::uint64_t>(task.trial_id)));
        result.trials[idx] = run_trial(cfg, backend, task.n_shots, task.trial_id, rng);
    };

    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size()) return;
                try {
                    run_task(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    result.summary = detail::summarize(result.trials, cfg.n_shots_list, cfg.objective);
    return result;
}

inline ExperimentResult run_experiment(const RunConfig& cfg) {
    auto backend = make_backend(cfg.backend);
    return run_experiment(cfg, *backend);
}

}  // namespace llmpc
