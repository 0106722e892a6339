#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "space/bench.hpp"

using namespace space;

namespace {

ModelConfig tiny_config(std::uint64_t seed = 1234) {
    ModelConfig c;
    c.vocab_size = 11;
    c.d_model = 16;
    c.n_layers = 2;
    c.n_heads = 2;
    c.d_ff = 24;
    c.max_position = 64;
    c.mask_token_id = 1;
    c.eos_token_id = 0;
    c.seed = seed;
    return c;
}

// Argmax is pinned to `token` at every position.
ModelParams biased_model(int token, double bias = 50.0) {
    ModelParams params = init_model(tiny_config());
    params.b_out.value(0, static_cast<std::size_t>(token)) += bias;
    return params;
}

DecodeConfig greedy_config(std::size_t k, std::size_t max_new = 12) {
    DecodeConfig c;
    c.k = k;
    c.sampling.mode = SamplingMode::Greedy;
    c.verification = VerificationMode::GreedyMatch;
    c.max_new_tokens = max_new;
    c.seed = 9;
    return c;
}

std::vector<std::vector<int>> two_prompts() { return {{2, 3, 4}, {5, 6}}; }

void check_non_wall_equal(const PromptBench& a, const PromptBench& b) {
    CHECK(a.prompt_index == b.prompt_index);
    CHECK(a.tokens_ar == b.tokens_ar);
    CHECK(a.invocations_ar == b.invocations_ar);
    CHECK(a.tokens_space == b.tokens_space);
    CHECK(a.invocations_space == b.invocations_space);
    CHECK(a.avg_accepted_tokens == b.avg_accepted_tokens);
    CHECK(a.speedup_invocations == b.speedup_invocations);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("instant-EOS model floors both decoders at one invocation", "[bench]") {
    const ModelParams params = biased_model(0);
    const BenchReport report =
        run_benchmark(params, two_prompts(), greedy_config(3), greedy_config(3));

    REQUIRE(report.per_prompt.size() == 2);
    for (const PromptBench& row : report.per_prompt) {
        CHECK(row.tokens_ar == 0);  // truncated before EOS
        CHECK(row.invocations_ar == 1);
        CHECK(row.tokens_space == 1);  // the trace still counts the EOS step
        CHECK(row.invocations_space == 1);
        CHECK(row.avg_accepted_tokens == 1.0);
        CHECK(row.speedup_invocations == 1.0);
    }
    CHECK(report.aggregate.speedup_invocations == 1.0);

    REQUIRE(report.histogram.size() == 5);  // k + 2 buckets, index 0 unused
    CHECK(report.histogram[0] == 0);
    CHECK(report.histogram[1] == 2);
    CHECK(report.histogram[2] + report.histogram[3] + report.histogram[4] == 0);
}

TEST_CASE("constant model reaches the acceptance ceiling", "[bench]") {
    const ModelParams params = biased_model(3);
    const BenchReport report = run_benchmark(params, {{2, 3, 4}}, greedy_config(5), greedy_config(5));

    const PromptBench& row = report.per_prompt.at(0);
    CHECK(row.tokens_ar == 12);
    CHECK(row.invocations_ar == 12);
    // Step 1 emits a single token, every later step all k drafts plus one.
    CHECK(row.invocations_space == 3);
    CHECK(row.tokens_space == 13);
    CHECK(row.avg_accepted_tokens == 13.0 / 3.0);
    CHECK(row.speedup_invocations == 4.0);

    REQUIRE(report.histogram.size() == 7);
    CHECK(report.histogram[1] == 1);
    CHECK(report.histogram[6] == 2);
    std::size_t mass = 0;
    for (std::size_t c = 1; c < report.histogram.size(); ++c) mass += report.histogram[c];
    CHECK(mass == row.invocations_space);
}

TEST_CASE("aggregate rows are ratios of the summed counters", "[bench]") {
    const ModelParams params = init_model(tiny_config(7));
    DecodeConfig space_cfg = greedy_config(3, 10);
    space_cfg.sampling.mode = SamplingMode::Stochastic;
    space_cfg.verification = VerificationMode::LosslessResidual;
    const BenchReport report = run_benchmark(params, two_prompts(), space_cfg, space_cfg);

    std::size_t tokens_space = 0, inv_space = 0, inv_ar = 0;
    for (std::size_t i = 0; i < report.per_prompt.size(); ++i) {
        const PromptBench& row = report.per_prompt[i];
        CHECK(row.prompt_index == i);
        CHECK(row.avg_accepted_tokens ==
              static_cast<double>(row.tokens_space) / static_cast<double>(row.invocations_space));
        tokens_space += row.tokens_space;
        inv_space += row.invocations_space;
        inv_ar += row.invocations_ar;
    }
    CHECK(report.aggregate.tokens_space == tokens_space);
    CHECK(report.aggregate.invocations_space == inv_space);
    CHECK(report.aggregate.avg_accepted_tokens ==
          static_cast<double>(tokens_space) / static_cast<double>(inv_space));
    CHECK(report.aggregate.speedup_invocations ==
          static_cast<double>(inv_ar) / static_cast<double>(inv_space));
}

TEST_CASE("benchmark counters are reproducible run to run", "[bench]") {
    const ModelParams params = init_model(tiny_config(7));
    DecodeConfig cfg = greedy_config(4, 16);
    cfg.sampling.mode = SamplingMode::Stochastic;
    cfg.verification = VerificationMode::LosslessResidual;

    const BenchReport a = run_benchmark(params, two_prompts(), cfg, cfg);
    const BenchReport b = run_benchmark(params, two_prompts(), cfg, cfg);
    REQUIRE(a.per_prompt.size() == b.per_prompt.size());
    for (std::size_t i = 0; i < a.per_prompt.size(); ++i) {
        check_non_wall_equal(a.per_prompt[i], b.per_prompt[i]);
    }
    check_non_wall_equal(a.aggregate, b.aggregate);
    CHECK(a.histogram == b.histogram);
}

TEST_CASE("benchmark rejects invalid decode configs and empty prompt lists cleanly",
          "[bench]") {
    const ModelParams params = init_model(tiny_config());
    DecodeConfig bad = greedy_config(3);
    bad.k = 0;
    CHECK_THROWS_AS(run_benchmark(params, two_prompts(), bad, greedy_config(3)), ConfigError);

    const BenchReport empty = run_benchmark(params, {}, greedy_config(3), greedy_config(3));
    CHECK(empty.per_prompt.empty());
    CHECK(empty.aggregate.invocations_space == 0);
    CHECK(empty.aggregate.avg_accepted_tokens == 0.0);
}

TEST_CASE("single-entry sweep matches a direct benchmark", "[bench]") {
    const ModelParams params = init_model(tiny_config(7));
    DecodeConfig base = greedy_config(1, 10);

    DecodeConfig direct = base;
    direct.k = 3;
    const BenchReport expect = run_benchmark(params, two_prompts(), direct, direct);

    const std::vector<BenchReport> table = sweep_k({{3, &params}}, two_prompts(), base);
    REQUIRE(table.size() == 1);
    CHECK(table[0].k == 3);
    check_non_wall_equal(table[0].aggregate, expect.aggregate);
    CHECK(table[0].histogram == expect.histogram);

    const std::vector<BenchReport> two =
        sweep_k({{1, &params}, {2, &params}}, two_prompts(), base);
    REQUIRE(two.size() == 2);
    CHECK(two[0].k == 1);
    CHECK(two[1].k == 2);
}

TEST_CASE("csv artifacts have the documented shape", "[bench]") {
    const ModelParams params = biased_model(0);
    const BenchReport report =
        run_benchmark(params, two_prompts(), greedy_config(3), greedy_config(3));

    const std::string bench_path = "bench_tmp.csv";
    const std::string hist_path = "bench_hist_tmp.csv";
    save_bench_csv(report, bench_path);
    save_histogram_csv(report, hist_path);

    const std::vector<std::string> bench_lines = read_lines(bench_path);
    REQUIRE(bench_lines.size() == 4);  // header + 2 prompts + aggregate
    CHECK(bench_lines[0] ==
          "prompt,tokens_ar,invocations_ar,tokens_space,invocations_space,"
          "avg_accepted_tokens,wall_ar_ms,wall_space_ms,speedup_invocations,speedup_wall");
    const std::vector<std::string> row = split_csv(bench_lines[1]);
    REQUIRE(row.size() == 10);
    CHECK(row[0] == "0");
    CHECK(row[1] == "0");
    CHECK(row[2] == "1");
    CHECK(row[3] == "1");
    CHECK(row[4] == "1");
    CHECK(row[5] == "1.000000");
    CHECK(row[8] == "1.000000");
    CHECK(split_csv(bench_lines[3])[0] == "aggregate");

    const std::vector<std::string> hist_lines = read_lines(hist_path);
    REQUIRE(hist_lines.size() == 5);  // header + buckets 1..k+1
    CHECK(hist_lines[0] == "emitted,steps");
    CHECK(hist_lines[1] == "1,2");
    CHECK(hist_lines[2] == "2,0");
    CHECK(hist_lines[4] == "4,0");

    const std::vector<BenchReport> table = sweep_k({{3, &params}}, two_prompts(), greedy_config(3));
    const std::string sweep_path = "bench_sweep_tmp.csv";
    save_sweep_csv(table, sweep_path);
    const std::vector<std::string> sweep_lines = read_lines(sweep_path);
    REQUIRE(sweep_lines.size() == 2);
    CHECK(sweep_lines[0] ==
          "k,tokens_space,invocations_space,avg_accepted_tokens,speedup_invocations,speedup_wall");
    CHECK(split_csv(sweep_lines[1])[0] == "3");

    std::remove(bench_path.c_str());
    std::remove(hist_path.c_str());
    std::remove(sweep_path.c_str());
}
