#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "llmpc/harness.hpp"

namespace llmpc {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kTrialCsvHeader =
    "trial_id,n_shots,objective,strategy,parse_ok,p1_watt,p2_watt,value,ratio_to_optimal";
inline constexpr const char* kSummaryCsvHeader =
    "n_shots,objective,strategy,mean_value,mean_ratio,parse_failure_rate,n_trials";

namespace detail {

// %.17g round-trips doubles exactly, so `report` can re-aggregate a trial
// CSV to the same bits as the in-memory summary.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace detail

// One row per (trial, strategy), five rows per trial.
inline void write_trials_csv(const std::vector<TrialRecord>& trials, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << kTrialCsvHeader << '\n';
    for (const auto& t : trials) {
        for (Strategy s : kAllStrategies) {
            const StrategyResult& r = t.by_strategy(s);
            out << t.trial_id << ',' << t.n_shots << ',' << objective_name(t.objective) << ','
                << strategy_name(s) << ',' << (t.parse_ok ? "true" : "false") << ','
                << detail::fmt_double(r.alloc.p[0]) << ',' << detail::fmt_double(r.alloc.p[1])
                << ',' << detail::fmt_double(r.value) << ',' << detail::fmt_double(r.ratio)
                << '\n';
        }
    }
    if (!out.good()) throw IoError("write failed: " + path);
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << kSummaryCsvHeader << '\n';
    for (const auto& row : rows) {
        out << row.n_shots << ',' << objective_name(row.objective) << ','
            << strategy_name(row.strategy) << ',' << detail::fmt_double(row.mean_value) << ','
            << detail::fmt_double(row.mean_ratio) << ','
            << detail::fmt_double(row.parse_failure_rate) << ',' << row.n_trials << '\n';
    }
    if (!out.good()) throw IoError("write failed: " + path);
}

// Re-aggregate a trial CSV into summary rows. Accumulation visits rows in
// file order, which matches the in-memory aggregation order, so the means
// are bit-identical to the ones computed at run time.
inline std::vector<SummaryRow> summarize_trials_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kTrialCsvHeader)
        throw IoError("unexpected trial CSV header in " + path);

    struct Key {
        int n_shots;
        std::string objective;
        std::string strategy;
        bool operator<(const Key& o) const {
            return std::tie(n_shots, objective, strategy) <
                   std::tie(o.n_shots, o.objective, o.strategy);
        }
    };
    struct Acc {
        double sum_value = 0.0;
        double sum_ratio = 0.0;
        int failures = 0;
        int count = 0;
        std::size_t first_seen = 0;
    };
    std::map<Key, Acc> groups;
    std::size_t row_no = 0;

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 9) throw IoError("malformed trial CSV row in " + path);

        Key key{std::stoi(fields[1]), fields[2], fields[3]};
        Acc& acc = groups
                       .try_emplace(key, Acc{0.0, 0.0, 0, 0, row_no})
                       .first->second;
        acc.sum_value += std::stod(fields[7]);
        acc.sum_ratio += std::stod(fields[8]);
        acc.failures += fields[4] == "false" ? 1 : 0;
        ++acc.count;
        ++row_no;
    }

    std::vector<std::pair<Key, Acc>> ordered(groups.begin(), groups.end());
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.second.first_seen < b.second.first_seen; });

    std::vector<SummaryRow> rows;
    for (const auto& [key, acc] : ordered) {
        SummaryRow row;
        row.n_shots = key.n_shots;
        row.objective = key.objective == "se" ? ObjectiveKind::SumSE : ObjectiveKind::SumEE;
        for (Strategy s : kAllStrategies)
            if (key.strategy == strategy_name(s)) row.strategy = s;
        row.mean_value = acc.sum_value / acc.count;
        row.mean_ratio = acc.sum_ratio / acc.count;
        row.parse_failure_rate = static_cast<double>(acc.failures) / acc.count;
        row.n_trials = acc.count;
        rows.push_back(row);
    }
    return rows;
}

namespace detail {

inline constexpr struct {
    Strategy strategy;
    const char* color;
} kSeriesStyle[] = {
    {Strategy::Prop1, "#1f77b4"},  {Strategy::Prop2, "#d62728"},
    {Strategy::Optimal, "#2ca02c"}, {Strategy::Binary, "#ff7f0e"},
    {Strategy::Random, "#9467bd"},
};

}  // namespace detail

// Render one line chart: x = number of shots, y = mean objective value,
// one polyline per strategy. Output is deterministic (fixed-precision
// coordinates, fixed series order).
inline std::string render_summary_svg(const std::vector<SummaryRow>& rows,
                                      ObjectiveKind objective) {
    std::vector<int> xs;
    double y_max = 0.0;
    for (const auto& row : rows) {
        if (row.objective != objective) continue;
        if (std::find(xs.begin(), xs.end(), row.n_shots) == xs.end()) xs.push_back(row.n_shots);
        y_max = std::max(y_max, row.mean_value);
    }
    std::sort(xs.begin(), xs.end());
    if (y_max <= 0.0) y_max = 1.0;
    y_max *= 1.05;

    const double width = 720, height = 480;
    const double left = 70, right = width - 160, top = 40, bottom = height - 50;
    const double x_lo = xs.front(), x_hi = xs.size() > 1 ? xs.back() : xs.front() + 1;

    auto x_px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * (right - left); };
    auto y_px = [&](double y) { return bottom - y / y_max * (bottom - top); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" "
           "viewBox=\"0 0 720 480\">\n";
    svg += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
    const std::string obj = objective_name(objective);
    svg += "<text x=\"" + detail::fmt_fixed((left + right) / 2, 1) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">mean " +
           obj + " value vs number of shots</text>\n";

    // axes
    svg += "<line x1=\"" + detail::fmt_fixed(left, 1) + "\" y1=\"" + detail::fmt_fixed(bottom, 1) +
           "\" x2=\"" + detail::fmt_fixed(right, 1) + "\" y2=\"" + detail::fmt_fixed(bottom, 1) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::fmt_fixed(left, 1) + "\" y1=\"" + detail::fmt_fixed(top, 1) +
           "\" x2=\"" + detail::fmt_fixed(left, 1) + "\" y2=\"" + detail::fmt_fixed(bottom, 1) +
           "\" stroke=\"black\"/>\n";

    for (int x : xs) {
        svg += "<line x1=\"" + detail::fmt_fixed(x_px(x), 1) + "\" y1=\"" +
               detail::fmt_fixed(bottom, 1) + "\" x2=\"" + detail::fmt_fixed(x_px(x), 1) +
               "\" y2=\"" + detail::fmt_fixed(bottom + 5, 1) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::fmt_fixed(x_px(x), 1) + "\" y=\"" +
               detail::fmt_fixed(bottom + 20, 1) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
               std::to_string(x) + "</text>\n";
    }
    for (int k = 0; k <= 5; ++k) {
        const double y = y_max * k / 5.0;
        svg += "<line x1=\"" + detail::fmt_fixed(left - 5, 1) + "\" y1=\"" +
               detail::fmt_fixed(y_px(y), 1) + "\" x2=\"" + detail::fmt_fixed(left, 1) +
               "\" y2=\"" + detail::fmt_fixed(y_px(y), 1) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::fmt_fixed(left - 9, 1) + "\" y=\"" +
               detail::fmt_fixed(y_px(y) + 4, 1) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
               detail::fmt_fixed(y, 3) + "</text>\n";
    }
    svg += "<text x=\"" + detail::fmt_fixed((left + right) / 2, 1) + "\" y=\"" +
           detail::fmt_fixed(height - 12, 1) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">number of "
           "shots</text>\n";

    // series
    int legend_slot = 0;
    for (const auto& style : detail::kSeriesStyle) {
        std::string points;
        for (int x : xs) {
            for (const auto& row : rows) {
                if (row.objective != objective || row.strategy != style.strategy ||
                    row.n_shots != x)
                    continue;
                points += detail::fmt_fixed(x_px(x), 2) + "," +
                          detail::fmt_fixed(y_px(row.mean_value), 2) + " ";
            }
        }
        if (points.empty()) continue;
        points.pop_back();
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(style.color) +
               "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";

        const double ly = top + 18 + 22 * legend_slot++;
        svg += "<line x1=\"" + detail::fmt_fixed(right + 14, 1) + "\" y1=\"" +
               detail::fmt_fixed(ly, 1) + "\" x2=\"" + detail::fmt_fixed(right + 42, 1) +
               "\" y2=\"" + detail::fmt_fixed(ly, 1) + "\" stroke=\"" + style.color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + detail::fmt_fixed(right + 48, 1) + "\" y=\"" +
               detail::fmt_fixed(ly + 4, 1) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + strategy_name(style.strategy) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

// Write one SVG per objective present in the summary. Returns the paths.
inline std::vector<std::string> write_plots(const std::vector<SummaryRow>& rows,
                                            const std::string& out_dir) {
    std::vector<std::string> written;
    for (ObjectiveKind objective : {ObjectiveKind::SumSE, ObjectiveKind::SumEE}) {
        const bool present = std::any_of(rows.begin(), rows.end(), [&](const SummaryRow& r) {
            return r.objective == objective;
        });
        if (!present) continue;
        const std::string path =
            (std::filesystem::path(out_dir) /
             (std::string("summary_") + objective_name(objective) + ".svg"))
                .string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + path);
        out << render_summary_svg(rows, objective);
        if (!out.good()) throw IoError("write failed: " + path);
        written.push_back(path);
    }
    return written;
}

// trials.csv + summary.csv + one SVG per objective, under out_dir.
inline void write_outputs(const ExperimentResult& result, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);
    write_trials_csv(result.trials, (std::filesystem::path(out_dir) / "trials.csv").string());
    write_summary_csv(result.summary, (std::filesystem::path(out_dir) / "summary.csv").string());
    write_plots(result.summary, out_dir);
}

}  // namespace llmpc
