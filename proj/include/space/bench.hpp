#pragma once

// Benchmark harness: AR baseline vs auto-correct decoding over identical
// prompts. Invocation-count speedup is the primary figure at this scale;
// wall-clock (monotonic, median of 3) is reported alongside. Token outputs
// are deterministic given seeds, so reports are reproducible except for the
// wall-clock columns.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "space/decoder.hpp"

namespace space {

struct PromptBench {
    std::size_t prompt_index = 0;
    std::size_t tokens_ar = 0;
    std::size_t invocations_ar = 0;
    std::size_t tokens_space = 0;       // untruncated trace total
    std::size_t invocations_space = 0;
    double avg_accepted_tokens = 0.0;
    double wall_ar_ms = 0.0;
    double wall_space_ms = 0.0;
    double speedup_invocations = 0.0;
    double speedup_wall = 0.0;
};

struct BenchReport {
    std::size_t k = 0;
    std::vector<PromptBench> per_prompt;
    PromptBench aggregate;
    std::vector<std::size_t> histogram;  // histogram[c] = steps that emitted c tokens, c in 1..k+1
};

namespace detail {

template <class F>
inline double median_of_3_ms(F&& run) {
    double times[3];
    for (double& t : times) {
        const auto start = std::chrono::steady_clock::now();
        run();
        const auto stop = std::chrono::steady_clock::now();
        t = std::chrono::duration<double, std::milli>(stop - start).count();
    }
    if (times[0] > times[1]) std::swap(times[0], times[1]);
    if (times[1] > times[2]) std::swap(times[1], times[2]);
    if (times[0] > times[1]) std::swap(times[0], times[1]);
    return times[1];
}

inline void finish_ratios(PromptBench& row) {
    if (row.invocations_space > 0) {
        row.avg_accepted_tokens = static_cast<double>(row.tokens_space) /
                                  static_cast<double>(row.invocations_space);
        row.speedup_invocations = static_cast<double>(row.invocations_ar) /
                                  static_cast<double>(row.invocations_space);
    }
    if (row.wall_space_ms > 0.0) row.speedup_wall = row.wall_ar_ms / row.wall_space_ms;
}

}  // namespace detail

inline BenchReport run_benchmark(const ModelParams& params,
                                 const std::vector<std::vector<int>>& prompts,
                                 const DecodeConfig& decode_config,
                                 const DecodeConfig& baseline_config) {
    decode_config.validate();
    baseline_config.validate();

    BenchReport report;
    report.k = decode_config.k;
    report.histogram.assign(decode_config.k + 2, 0);

    for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
        const std::vector<int>& prompt = prompts[pi];
        PromptBench row;
        row.prompt_index = pi;

        ArResult ar = ar_generate(params, prompt, baseline_config);
        row.tokens_ar = ar.tokens.size();
        row.invocations_ar = ar.invocations;
        row.wall_ar_ms = detail::median_of_3_ms([&] { ar_generate(params, prompt, baseline_config); });

        SpaceResult sp = space_generate(params, prompt, decode_config);
        row.tokens_space = sp.trace.tokens_generated;
        row.invocations_space = sp.trace.invocations;
        row.wall_space_ms =
            detail::median_of_3_ms([&] { space_generate(params, prompt, decode_config); });
        for (const StepTrace& step : sp.trace.steps) {
            const std::size_t emitted = step.emitted.size();
            if (emitted < report.histogram.size()) report.histogram[emitted] += 1;
        }

        detail::finish_ratios(row);
        report.per_prompt.push_back(row);

        report.aggregate.tokens_ar += row.tokens_ar;
        report.aggregate.invocations_ar += row.invocations_ar;
        report.aggregate.tokens_space += row.tokens_space;
        report.aggregate.invocations_space += row.invocations_space;
        report.aggregate.wall_ar_ms += row.wall_ar_ms;
        report.aggregate.wall_space_ms += row.wall_space_ms;
    }
    detail::finish_ratios(report.aggregate);
    return report;
}

namespace detail {

inline void bench_csv_row(std::ofstream& out, const std::string& label, const PromptBench& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%zu,%zu,%.6f,%.3f,%.3f,%.6f,%.6f\n", label.c_str(),
                  r.tokens_ar, r.invocations_ar, r.tokens_space, r.invocations_space,
                  r.avg_accepted_tokens, r.wall_ar_ms, r.wall_space_ms, r.speedup_invocations,
                  r.speedup_wall);
    out << buf;
}

}  // namespace detail

inline void save_bench_csv(const BenchReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open bench csv for writing: " + path);
    out << "prompt,tokens_ar,invocations_ar,tokens_space,invocations_space,"
           "avg_accepted_tokens,wall_ar_ms,wall_space_ms,speedup_invocations,speedup_wall\n";
    for (const PromptBench& r : report.per_prompt) {
        detail::bench_csv_row(out, std::to_string(r.prompt_index), r);
    }
    detail::bench_csv_row(out, "aggregate", report.aggregate);
}

inline void save_histogram_csv(const BenchReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open histogram csv for writing: " + path);
    out << "emitted,steps\n";
    for (std::size_t c = 1; c < report.histogram.size(); ++c) {
        out << c << ',' << report.histogram[c] << '\n';
    }
}

// One benchmark per k over shared prompts. Each k needs its own trained
// params, since k shapes both the dataloader and the decode layout.
inline std::vector<BenchReport> sweep_k(
    const std::vector<std::pair<std::size_t, const ModelParams*>>& params_per_k,
    const std::vector<std::vector<int>>& prompts, const DecodeConfig& base_config) {
    std::vector<BenchReport> table;
    for (const auto& [k, params] : params_per_k) {
        DecodeConfig cfg = base_config;
        cfg.k = k;
        DecodeConfig ar_cfg = cfg;
        table.push_back(run_benchmark(*params, prompts, cfg, ar_cfg));
    }
    return table;
}

inline void save_sweep_csv(const std::vector<BenchReport>& table, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open sweep csv for writing: " + path);
    out << "k,tokens_space,invocations_space,avg_accepted_tokens,speedup_invocations,speedup_wall\n";
    char buf[160];
    for (const BenchReport& r : table) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%.6f,%.6f,%.6f\n", r.k,
                      r.aggregate.tokens_space, r.aggregate.invocations_space,
                      r.aggregate.avg_accepted_tokens, r.aggregate.speedup_invocations,
                      r.aggregate.speedup_wall);
        out << buf;
    }
}

}  // namespace space
