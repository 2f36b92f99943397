// Command-line front end: dataset generation, prompt inspection, full
// experiment sweeps, report regeneration, and replay recording.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "llmpc/config.hpp"
#include "llmpc/harness.hpp"
#include "llmpc/report.hpp"

namespace {

using namespace llmpc;

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string objective;
    std::string backend_kind;
    std::string endpoint_url;
    std::string api_key_env;
    std::string model;
    std::string replay_path;
    std::string gain_domain;
    std::vector<int> shots;
    int trials = 0;
    int grid_levels = 0;
    int workers = -1;
    int max_inflight = 0;
    int retries = -1;
    double timeout_s = 0;
    bool include_both_on = false;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* objective_opt = nullptr;
    CLI::Option* backend_opt = nullptr;
    CLI::Option* endpoint_opt = nullptr;
    CLI::Option* api_key_opt = nullptr;
    CLI::Option* model_opt = nullptr;
    CLI::Option* replay_opt = nullptr;
    CLI::Option* gain_domain_opt = nullptr;
    CLI::Option* shots_opt = nullptr;
    CLI::Option* trials_opt = nullptr;
    CLI::Option* grid_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
    CLI::Option* inflight_opt = nullptr;
    CLI::Option* retries_opt = nullptr;
    CLI::Option* timeout_opt = nullptr;
    CLI::Option* both_on_opt = nullptr;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file (flags override its values)");
    o.seed_opt = cmd->add_option("--seed", o.seed, "master seed");
    o.objective_opt =
        cmd->add_option("--objective", o.objective, "objective: se or ee")
            ->check(CLI::IsMember({"se", "ee"}));
    o.backend_opt = cmd->add_option("--backend", o.backend_kind,
                                    "backend kind: http_completion, nn_mock, malformed_mock, replay")
                        ->check(CLI::IsMember(
                            {"http_completion", "nn_mock", "malformed_mock", "replay"}));
    o.endpoint_opt = cmd->add_option("--endpoint", o.endpoint_url, "completion endpoint URL");
    o.api_key_opt = cmd->add_option("--api-key-env", o.api_key_env,
                                    "environment variable holding the bearer token");
    o.model_opt = cmd->add_option("--model", o.model, "model name sent to the endpoint");
    o.replay_opt = cmd->add_option("--replay-path", o.replay_path, "replay transcript file");
    o.gain_domain_opt = cmd->add_option("--gain-domain", o.gain_domain,
                                        "gain normalization domain: db or linear")
                            ->check(CLI::IsMember({"db", "linear"}));
    o.shots_opt = cmd->add_option("--shots", o.shots, "n_shots sweep values")->delimiter(',');
    o.trials_opt = cmd->add_option("--trials", o.trials, "trials per n_shots value");
    o.grid_opt = cmd->add_option("--grid-levels", o.grid_levels, "power levels per transmitter");
    o.workers_opt = cmd->add_option("--workers", o.workers, "worker threads (0 = auto)");
    o.inflight_opt = cmd->add_option("--max-inflight", o.max_inflight,
                                     "max concurrent http requests");
    o.retries_opt = cmd->add_option("--retries", o.retries, "http retries");
    o.timeout_opt = cmd->add_option("--timeout", o.timeout_s, "http timeout in seconds");
    o.both_on_opt = cmd->add_flag("--include-both-on", o.include_both_on,
                                  "add (p_max, p_max) to the binary candidates");
}

RunConfig build_run_config(const CommonOpts& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = load_run_config(o.config_path);
    if (o.seed_opt->count()) cfg.master_seed = o.seed;
    if (o.objective_opt->count()) cfg.objective = objective_from_name(o.objective);
    if (o.backend_opt->count()) cfg.backend.kind = backend_kind_from_name(o.backend_kind);
    if (o.endpoint_opt->count()) cfg.backend.endpoint_url = o.endpoint_url;
    if (o.api_key_opt->count()) cfg.backend.api_key_env = o.api_key_env;
    if (o.model_opt->count()) cfg.backend.model = o.model;
    if (o.replay_opt->count()) cfg.backend.replay_path = o.replay_path;
    if (o.gain_domain_opt->count()) cfg.codec.gain_domain = gain_domain_from_name(o.gain_domain);
    if (o.shots_opt->count()) cfg.n_shots_list = o.shots;
    if (o.trials_opt->count()) cfg.n_trials = o.trials;
    if (o.grid_opt->count()) cfg.grid.levels = o.grid_levels;
    if (o.workers_opt->count()) cfg.workers = o.workers;
    if (o.inflight_opt->count()) cfg.backend.max_inflight = o.max_inflight;
    if (o.retries_opt->count()) cfg.backend.retries = o.retries;
    if (o.timeout_opt->count()) cfg.backend.timeout_s = o.timeout_s;
    if (o.both_on_opt->count()) cfg.binary_opts.include_both_on = o.include_both_on;
    return cfg;
}

void print_summary_table(const std::vector<SummaryRow>& rows) {
    std::printf("%8s %10s %10s %12s %12s %14s %9s\n", "n_shots", "objective", "strategy",
                "mean_value", "mean_ratio", "parse_fail", "n_trials");
    for (const auto& row : rows) {
        std::printf("%8d %10s %10s %12.5f %12.5f %14.4f %9d\n", row.n_shots,
                    objective_name(row.objective), strategy_name(row.strategy), row.mean_value,
                    row.mean_ratio, row.parse_failure_rate, row.n_trials);
    }
}

int cmd_gen(const CommonOpts& opts, int count, const std::string& out_path) {
    RunConfig cfg = build_run_config(opts);
    cfg.params.validate();
    if (count < 1) throw ConfigError("gen: --count must be >= 1");

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path, std::ios::binary);
        if (!file) throw IoError("cannot open for writing: " + out_path);
        out = &file;
    }

    RandomStream rng(derive_seed(cfg.master_seed, 0x67656eULL));  // "gen" stream
    *out << "sample_id,objective,h11,h12,h21,h22,p1_watt,p2_watt\n";
    for (int i = 0; i < count; ++i) {
        const ChannelGains g = sample_channel(cfg.params, rng);
        const PowerAllocation label = solve_grid(cfg.objective, g, cfg.params, cfg.grid);
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i,
                      objective_name(cfg.objective), g.h[0][0], g.h[0][1], g.h[1][0], g.h[1][1],
                      label.p[0], label.p[1]);
        *out << buf;
    }
    out->flush();
    if (!out->good()) throw IoError("write failed");
    return 0;
}

int cmd_prompt(const CommonOpts& opts, int n_shots) {
    RunConfig cfg = build_run_config(opts);
    cfg.params.validate();
    if (n_shots < 1) throw ConfigError("prompt: --n-shots must be >= 1");

    RandomStream rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(n_shots), 0));
    Episode episode;
    for (int s = 0; s < n_shots; ++s) {
        Episode::Shot shot;
        shot.gains = sample_channel(cfg.params, rng);
        shot.label = solve_grid(cfg.objective, shot.gains, cfg.params, cfg.grid);
        episode.shots.push_back(std::move(shot));
    }
    episode.query = sample_channel(cfg.params, rng);

    const EncodedEpisode encoded = encode_episode(episode, cfg.params.p_max, cfg.codec);
    std::cout << build_prompt(encoded);
    std::cout.flush();
    return 0;
}

int cmd_run(const CommonOpts& opts, const std::string& out_dir, const std::string& record_path) {
    RunConfig cfg = build_run_config(opts);
    std::unique_ptr<Backend> backend = make_backend(cfg.backend);

    ExperimentResult result;
    if (record_path.empty()) {
        result = run_experiment(cfg, *backend);
    } else {
        if (cfg.backend.kind == BackendKind::Replay)
            throw ConfigError("replay-record: recording a replay backend is pointless");
        RecordingBackend recorder(*backend);
        result = run_experiment(cfg, recorder);
        recorder.save(record_path);
        std::cerr << "recorded " << recorder.transcript().size() << " completions to "
                  << record_path << "\n";
    }

    write_outputs(result, out_dir);
    print_summary_table(result.summary);
    std::cerr << "wrote " << result.trials.size() << " trials to " << out_dir << "\n";
    return 0;
}

int cmd_report(const std::string& trials_path, const std::string& out_dir) {
    const std::vector<SummaryRow> summary = summarize_trials_csv(trials_path);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);
    write_summary_csv(summary,
                      (std::filesystem::path(out_dir) / "summary.csv").string());
    write_plots(summary, out_dir);
    print_summary_table(summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-pair interference channel power allocation with prompted LLM backends"};
    app.require_subcommand(1);

    CommonOpts gen_opts;
    int gen_count = 100;
    std::string gen_out = "-";
    CLI::App* gen = app.add_subcommand("gen", "emit a labeled (gains -> allocation) dataset");
    add_common_options(gen, gen_opts);
    gen->add_option("--count", gen_count, "number of labeled samples");
    gen->add_option("--out", gen_out, "output CSV path (- for stdout)");

    CommonOpts prompt_opts;
    int prompt_shots = 3;
    CLI::App* prompt = app.add_subcommand("prompt", "emit one few-shot prompt for inspection");
    add_common_options(prompt, prompt_opts);
    prompt->add_option("--n-shots", prompt_shots, "number of in-context shots");

    CommonOpts run_opts;
    std::string run_out_dir = "out";
    CLI::App* run = app.add_subcommand("run", "run the full experiment sweep");
    add_common_options(run, run_opts);
    run->add_option("--out-dir", run_out_dir, "output directory");

    CommonOpts record_opts;
    std::string record_out_dir = "out";
    std::string record_file;
    CLI::App* record = app.add_subcommand(
        "replay-record", "run the sweep while recording a replay transcript");
    add_common_options(record, record_opts);
    record->add_option("--out-dir", record_out_dir, "output directory");
    record->add_option("--replay-out", record_file, "transcript file to write")->required();

    std::string report_trials;
    std::string report_out_dir = "out";
    CLI::App* report = app.add_subcommand("report", "regenerate summary CSV and SVG from trials");
    report->add_option("--trials", report_trials, "trials.csv produced by run")->required();
    report->add_option("--out-dir", report_out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_opts, gen_count, gen_out);
        if (prompt->parsed()) return cmd_prompt(prompt_opts, prompt_shots);
        if (run->parsed()) return cmd_run(run_opts, run_out_dir, "");
        if (record->parsed()) return cmd_run(record_opts, record_out_dir, record_file);
        if (report->parsed()) return cmd_report(report_trials, report_out_dir);
    } catch (const llmpc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const llmpc::ReplayError& e) {
        std::cerr << "replay error: " << e.what() << "\n";
        return 3;
    } catch (const llmpc::BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
