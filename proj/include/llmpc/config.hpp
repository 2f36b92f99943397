#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "llmpc/harness.hpp"

namespace llmpc {

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const char* where) {
    for (const auto& item : j.items()) {
        bool found = false;
        for (const char* k : known)
            if (item.key() == k) found = true;
        if (!found)
            throw ConfigError(std::string("config: unknown key \"") + item.key() + "\" in " +
                              where);
    }
}

}  // namespace detail

inline ObjectiveKind objective_from_name(const std::string& name) {
    if (name == "se") return ObjectiveKind::SumSE;
    if (name == "ee") return ObjectiveKind::SumEE;
    throw ConfigError("config: objective must be \"se\" or \"ee\", got \"" + name + "\"");
}

inline GainDomain gain_domain_from_name(const std::string& name) {
    if (name == "db") return GainDomain::Db;
    if (name == "linear") return GainDomain::Linear;
    throw ConfigError("config: gain_domain must be \"db\" or \"linear\", got \"" + name + "\"");
}

inline SystemParams system_params_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j,
                                {"area_side", "pl_coeff_log10", "pl_exponent", "bandwidth",
                                 "noise_density_dbm_hz", "p_max", "p_circuit", "min_distance"},
                                "params");
    SystemParams p;
    p.area_side = j.value("area_side", p.area_side);
    p.pl_coeff_log10 = j.value("pl_coeff_log10", p.pl_coeff_log10);
    p.pl_exponent = j.value("pl_exponent", p.pl_exponent);
    p.bandwidth = j.value("bandwidth", p.bandwidth);
    p.noise_density_dbm_hz = j.value("noise_density_dbm_hz", p.noise_density_dbm_hz);
    p.p_max = j.value("p_max", p.p_max);
    p.p_circuit = j.value("p_circuit", p.p_circuit);
    p.min_distance = j.value("min_distance", p.min_distance);
    return p;
}

inline BackendConfig backend_config_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j,
                                {"kind", "endpoint_url", "api_key_env", "model", "timeout_s",
                                 "max_inflight", "retries", "backoff_base_s", "replay_path"},
                                "backend");
    BackendConfig b;
    b.kind = backend_kind_from_name(j.value("kind", std::string(backend_kind_name(b.kind))));
    b.endpoint_url = j.value("endpoint_url", b.endpoint_url);
    b.api_key_env = j.value("api_key_env", b.api_key_env);
    b.model = j.value("model", b.model);
    b.timeout_s = j.value("timeout_s", b.timeout_s);
    b.max_inflight = j.value("max_inflight", b.max_inflight);
    b.retries = j.value("retries", b.retries);
    b.backoff_base_s = j.value("backoff_base_s", b.backoff_base_s);
    b.replay_path = j.value("replay_path", b.replay_path);
    return b;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j,
                                {"seed", "objective", "n_shots_list", "n_trials", "grid_levels",
                                 "include_both_on", "gain_domain", "workers", "params",
                                 "backend"},
                                "config");
    RunConfig cfg;
    cfg.master_seed = j.value("seed", cfg.master_seed);
    if (j.contains("objective")) cfg.objective = objective_from_name(j["objective"]);
    if (j.contains("n_shots_list")) cfg.n_shots_list = j["n_shots_list"].get<std::vector<int>>();
    cfg.n_trials = j.value("n_trials", cfg.n_trials);
    cfg.grid.levels = j.value("grid_levels", cfg.grid.levels);
    cfg.binary_opts.include_both_on = j.value("include_both_on", cfg.binary_opts.include_both_on);
    if (j.contains("gain_domain")) cfg.codec.gain_domain = gain_domain_from_name(j["gain_domain"]);
    cfg.workers = j.value("workers", cfg.workers);
    if (j.contains("params")) cfg.params = system_params_from_json(j["params"]);
    if (j.contains("backend")) cfg.backend = backend_config_from_json(j["backend"]);
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: invalid JSON in " + path);
    try {
        return run_config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

}  // namespace llmpc
