#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "llmpc/config.hpp"
#include "llmpc/harness.hpp"
#include "llmpc/report.hpp"

using namespace llmpc;

namespace {

std::string temp_dir(const std::string& stem) {
    static std::atomic<int> counter{0};
    auto path = std::filesystem::temp_directory_path() /
                (stem + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
    return path.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_config(ObjectiveKind objective, int n_shots, int n_trials) {
    RunConfig cfg;
    cfg.objective = objective;
    cfg.n_shots_list = {n_shots};
    cfg.n_trials = n_trials;
    cfg.master_seed = 777;
    return cfg;
}

std::string trials_as_text(const ExperimentResult& result) {
    std::ostringstream ss;
    for (const auto& t : result.trials) {
        ss << t.trial_id << '|' << t.n_shots << '|' << t.parse_ok;
        for (Strategy s : kAllStrategies) {
            const StrategyResult& r = t.by_strategy(s);
            char buf[128];
            std::snprintf(buf, sizeof(buf), "|%.17g,%.17g,%.17g,%.17g", r.alloc.p[0],
                          r.alloc.p[1], r.value, r.ratio);
            ss << buf;
        }
        ss << '\n';
    }
    return ss.str();
}

class ThrowingBackend final : public Backend {
public:
    std::string complete(const CompletionRequest&) override {
        throw BackendError("synthetic transport failure");
    }
};

}  // namespace

TEST_CASE("malformed completions trigger the zero-power fallback") {
    RunConfig cfg = small_config(ObjectiveKind::SumEE, 4, 12);
    MalformedMockBackend backend;
    const ExperimentResult result = run_experiment(cfg, backend);

    REQUIRE(result.trials.size() == 12);
    for (const auto& t : result.trials) {
        CHECK_FALSE(t.parse_ok);
        CHECK(t.prop1.value == 0.0);
        CHECK(t.prop1.alloc.p[0] == 0.0);
        CHECK(t.prop1.alloc.p[1] == 0.0);
        // hybrid falls back to the binary scheme
        CHECK(t.prop2.value == t.binary.value);
        CHECK(t.prop2.alloc.p[0] == t.binary.alloc.p[0]);
        CHECK(t.prop2.alloc.p[1] == t.binary.alloc.p[1]);
    }
    for (const auto& row : result.summary) CHECK(row.parse_failure_rate == 1.0);
}

TEST_CASE("backend transport failures degrade to parse failures") {
    RunConfig cfg = small_config(ObjectiveKind::SumSE, 3, 6);
    ThrowingBackend backend;
    const ExperimentResult result = run_experiment(cfg, backend);
    REQUIRE(result.trials.size() == 6);
    for (const auto& t : result.trials) {
        CHECK_FALSE(t.parse_ok);
        CHECK(t.prop1.value == 0.0);
        CHECK(t.prop2.value == t.binary.value);
    }
}

TEST_CASE("hybrid selection is exactly the max of prop1 and binary") {
    RunConfig cfg = small_config(ObjectiveKind::SumEE, 6, 40);
    NnMockBackend backend;
    const ExperimentResult result = run_experiment(cfg, backend);

    for (const auto& t : result.trials) {
        CHECK(t.prop2.value == std::max(t.prop1.value, t.binary.value));
        CHECK(t.optimal.value >= t.prop2.value);
        CHECK(t.prop2.value >= t.binary.value);
        CHECK(t.binary.value >= 0.0);
        for (Strategy s : kAllStrategies) {
            const StrategyResult& r = t.by_strategy(s);
            CHECK(r.ratio >= 0.0);
            CHECK(r.ratio <= 1.0);
        }
        CHECK(t.optimal.ratio == 1.0);
    }
}

TEST_CASE("a query duplicated from a shot scores within the quantization gap") {
    SystemParams params;
    RandomStream rng(404);
    Episode episode;
    for (int s = 0; s < 5; ++s) {
        Episode::Shot shot;
        shot.gains = sample_channel(params, rng);
        shot.label = solve_grid(ObjectiveKind::SumEE, shot.gains, params, GridSpec{101});
        episode.shots.push_back(shot);
    }
    episode.query = episode.shots[2].gains;

    const EncodedEpisode enc = encode_episode(episode, params.p_max);
    NnMockBackend backend;
    CompletionRequest req;
    req.prompt = build_prompt(enc);
    const ParseOutcome outcome = parse_response(backend.complete(req), params.p_max);
    REQUIRE(outcome.ok());

    // 101 grid levels sit exactly on the percent lattice, so the label
    // survives encode -> decode unchanged and the values coincide.
    const double label_value =
        evaluate(ObjectiveKind::SumEE, episode.query, episode.shots[2].label, params);
    const double prop1_value =
        evaluate(ObjectiveKind::SumEE, episode.query, *outcome.allocation, params);
    CHECK(prop1_value == Catch::Approx(label_value).epsilon(1e-12));
}

TEST_CASE("experiments are deterministic and independent of worker count") {
    RunConfig cfg = small_config(ObjectiveKind::SumEE, 5, 16);
    cfg.n_shots_list = {2, 5};

    NnMockBackend backend;
    cfg.workers = 1;
    const std::string sequential = trials_as_text(run_experiment(cfg, backend));
    cfg.workers = 2;
    const std::string parallel = trials_as_text(run_experiment(cfg, backend));
    CHECK(sequential == parallel);

    // trial streams depend only on (seed, n_shots, trial_id), not n_trials
    cfg.workers = 1;
    cfg.n_trials = 8;
    const std::string shorter = trials_as_text(run_experiment(cfg, backend));
    std::istringstream a(sequential), b(shorter);
    std::string line_a, line_b;
    for (int n_shots_block = 0; n_shots_block < 2; ++n_shots_block) {
        for (int k = 0; k < 16; ++k) {
            REQUIRE(std::getline(a, line_a));
            if (k < 8) {
                REQUIRE(std::getline(b, line_b));
                CHECK(line_a == line_b);
            }
        }
    }
}

TEST_CASE("invalid run configurations are rejected") {
    RunConfig cfg;
    cfg.n_trials = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.n_shots_list = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.n_shots_list = {5, 0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.grid.levels = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("trial CSV carries five strategy rows per trial under the exact header") {
    RunConfig cfg = small_config(ObjectiveKind::SumSE, 3, 7);
    NnMockBackend backend;
    const ExperimentResult result = run_experiment(cfg, backend);

    const std::string dir = temp_dir("harness_csv");
    const std::string trials_path = dir + "/trials.csv";
    write_trials_csv(result.trials, trials_path);

    std::ifstream in(trials_path);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header ==
          "trial_id,n_shots,objective,strategy,parse_ok,p1_watt,p2_watt,value,ratio_to_optimal");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 7 * 5);
    std::filesystem::remove_all(dir);
}

TEST_CASE("summary CSV matches the schema and cardinality") {
    RunConfig cfg = small_config(ObjectiveKind::SumEE, 2, 5);
    cfg.n_shots_list = {2, 4};
    NnMockBackend backend;
    const ExperimentResult result = run_experiment(cfg, backend);
    REQUIRE(result.summary.size() == 10);  // 2 sweep points x 5 strategies

    const std::string dir = temp_dir("harness_summary");
    const std::string path = dir + "/summary.csv";
    write_summary_csv(result.summary, path);

    std::ifstream in(path);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "n_shots,objective,strategy,mean_value,mean_ratio,parse_failure_rate,n_trials");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 10);
    std::filesystem::remove_all(dir);
}

TEST_CASE("report aggregation reproduces the in-memory summary exactly") {
    RunConfig cfg = small_config(ObjectiveKind::SumEE, 3, 9);
    cfg.n_shots_list = {3, 6};
    NnMockBackend backend;
    const ExperimentResult result = run_experiment(cfg, backend);

    const std::string dir = temp_dir("harness_report");
    const std::string trials_path = dir + "/trials.csv";
    write_trials_csv(result.trials, trials_path);

    const auto reloaded = summarize_trials_csv(trials_path);
    REQUIRE(reloaded.size() == result.summary.size());
    for (std::size_t i = 0; i < reloaded.size(); ++i) {
        CHECK(reloaded[i].n_shots == result.summary[i].n_shots);
        CHECK(reloaded[i].objective == result.summary[i].objective);
        CHECK(reloaded[i].strategy == result.summary[i].strategy);
        CHECK(reloaded[i].mean_value == result.summary[i].mean_value);
        CHECK(reloaded[i].mean_ratio == result.summary[i].mean_ratio);
        CHECK(reloaded[i].parse_failure_rate == result.summary[i].parse_failure_rate);
        CHECK(reloaded[i].n_trials == result.summary[i].n_trials);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("summary SVG renders one polyline per strategy") {
    RunConfig cfg = small_config(ObjectiveKind::SumEE, 2, 4);
    cfg.n_shots_list = {2, 3, 5};
    NnMockBackend backend;
    const ExperimentResult result = run_experiment(cfg, backend);

    const std::string dir = temp_dir("harness_svg");
    const auto paths = write_plots(result.summary, dir);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].find("summary_ee.svg") != std::string::npos);

    const std::string svg = slurp(paths[0]);
    std::size_t polylines = 0;
    for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos)
        ++polylines;
    CHECK(polylines == 5);
    for (const char* name : {"prop1", "prop2", "optimal", "binary", "random"})
        CHECK(svg.find(name) != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("recorded sessions replay byte-identically") {
    RunConfig cfg = small_config(ObjectiveKind::SumEE, 4, 6);

    const std::string dir = temp_dir("harness_replay");
    const std::string replay_path = dir + "/session.replay";

    NnMockBackend inner;
    RecordingBackend recorder(inner);
    const ExperimentResult live = run_experiment(cfg, recorder);
    recorder.save(replay_path);

    cfg.backend.kind = BackendKind::Replay;
    cfg.backend.replay_path = replay_path;
    const ExperimentResult replayed = run_experiment(cfg);
    CHECK(trials_as_text(live) == trials_as_text(replayed));

    // a different seed drifts the prompts and must fail loudly
    cfg.master_seed = 778;
    CHECK_THROWS_AS(run_experiment(cfg), ReplayError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("run config JSON round-trips through the loader") {
    const std::string dir = temp_dir("harness_cfg");
    const std::string path = dir + "/config.json";
    {
        std::ofstream out(path);
        out << R"({
            "seed": 99,
            "objective": "se",
            "n_shots_list": [2, 4],
            "n_trials": 3,
            "grid_levels": 51,
            "include_both_on": true,
            "gain_domain": "linear",
            "workers": 2,
            "params": {"area_side": 25.0, "p_max": 0.2},
            "backend": {"kind": "malformed_mock", "max_inflight": 8}
        })";
    }
    const RunConfig cfg = load_run_config(path);
    CHECK(cfg.master_seed == 99);
    CHECK(cfg.objective == ObjectiveKind::SumSE);
    CHECK(cfg.n_shots_list == std::vector<int>{2, 4});
    CHECK(cfg.n_trials == 3);
    CHECK(cfg.grid.levels == 51);
    CHECK(cfg.binary_opts.include_both_on);
    CHECK(cfg.codec.gain_domain == GainDomain::Linear);
    CHECK(cfg.workers == 2);
    CHECK(cfg.params.area_side == 25.0);
    CHECK(cfg.params.p_max == 0.2);
    CHECK(cfg.params.pl_exponent == 3.8);  // untouched default
    CHECK(cfg.backend.kind == BackendKind::MalformedMock);
    CHECK(cfg.backend.max_inflight == 8);

    {
        std::ofstream out(path);
        out << R"({"objectif": "se"})";  // typo must be caught
    }
    CHECK_THROWS_AS(load_run_config(path), ConfigError);
    {
        std::ofstream out(path);
        out << R"({"objective": )";  // truncated JSON
    }
    CHECK_THROWS_AS(load_run_config(path), ConfigError);
    CHECK_THROWS_AS(load_run_config(dir + "/missing.json"), ConfigError);
    std::filesystem::remove_all(dir);
}
