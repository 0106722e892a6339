// Command-line entry point. Subcommands: train, generate, oracle-check,
// bench, sweep, prep-data, mask-preview. A JSON config file supplies model /
// decode / sarsft sections plus paths; any flag wins over the file value.
// Exit codes: 0 success (or PASS), 1 usage or I/O error, 2 check failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "space/space.hpp"

namespace {

using nlohmann::json;

// ===== config file =====

struct RunConfig {
    space::ModelConfig model;
    space::DecodeConfig decode;
    space::SarSftConfig sarsft;
    std::string checkpoint_path;
    std::string corpus_path;
    std::string report_dir = ".";
};

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) throw space::ConfigError("unknown key \"" + key + "\" in " + where);
    }
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

space::SamplingMode sampling_mode_from_string(const std::string& s) {
    if (s == "greedy") return space::SamplingMode::Greedy;
    if (s == "stochastic") return space::SamplingMode::Stochastic;
    throw space::ConfigError("unknown sampling mode: " + s);
}

space::VerificationMode verification_from_string(const std::string& s) {
    if (s == "lossless-residual") return space::VerificationMode::LosslessResidual;
    if (s == "paper-literal") return space::VerificationMode::PaperLiteral;
    if (s == "greedy-match") return space::VerificationMode::GreedyMatch;
    throw space::ConfigError("unknown verification mode: " + s);
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw space::ConfigError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw space::ConfigError("config parse: " + std::string(e.what()));
    }
    check_keys(j, {"model", "decode", "sarsft", "paths"}, "config");

    if (j.contains("model")) {
        const json& m = j["model"];
        check_keys(m,
                   {"vocab_size", "d_model", "n_layers", "n_heads", "d_ff", "max_position",
                    "mask_token_id", "eos_token_id", "init_std", "seed"},
                   "config.model");
        maybe(m, "vocab_size", cfg.model.vocab_size);
        maybe(m, "d_model", cfg.model.d_model);
        maybe(m, "n_layers", cfg.model.n_layers);
        maybe(m, "n_heads", cfg.model.n_heads);
        maybe(m, "d_ff", cfg.model.d_ff);
        maybe(m, "max_position", cfg.model.max_position);
        maybe(m, "mask_token_id", cfg.model.mask_token_id);
        maybe(m, "eos_token_id", cfg.model.eos_token_id);
        maybe(m, "init_std", cfg.model.init_std);
        maybe(m, "seed", cfg.model.seed);
    }
    if (j.contains("decode")) {
        const json& d = j["decode"];
        check_keys(d,
                   {"k", "sampling", "temperature", "top_p", "top_k", "verification",
                    "max_new_tokens", "seed"},
                   "config.decode");
        maybe(d, "k", cfg.decode.k);
        if (d.contains("sampling")) {
            cfg.decode.sampling.mode = sampling_mode_from_string(d["sampling"].get<std::string>());
        }
        maybe(d, "temperature", cfg.decode.sampling.temperature);
        maybe(d, "top_p", cfg.decode.sampling.top_p);
        maybe(d, "top_k", cfg.decode.sampling.top_k);
        if (d.contains("verification")) {
            cfg.decode.verification = verification_from_string(d["verification"].get<std::string>());
        }
        maybe(d, "max_new_tokens", cfg.decode.max_new_tokens);
        maybe(d, "seed", cfg.decode.seed);
    }
    if (j.contains("sarsft")) {
        const json& s = j["sarsft"];
        check_keys(s,
                   {"k", "p_ar", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps", "epochs",
                    "batch_size", "gradient_clip", "seed"},
                   "config.sarsft");
        maybe(s, "k", cfg.sarsft.k);
        maybe(s, "p_ar", cfg.sarsft.p_ar);
        maybe(s, "learning_rate", cfg.sarsft.learning_rate);
        maybe(s, "adam_beta1", cfg.sarsft.adam_beta1);
        maybe(s, "adam_beta2", cfg.sarsft.adam_beta2);
        maybe(s, "adam_eps", cfg.sarsft.adam_eps);
        maybe(s, "epochs", cfg.sarsft.epochs);
        maybe(s, "batch_size", cfg.sarsft.batch_size);
        maybe(s, "gradient_clip", cfg.sarsft.gradient_clip);
        maybe(s, "seed", cfg.sarsft.seed);
    }
    if (j.contains("paths")) {
        const json& p = j["paths"];
        check_keys(p, {"checkpoint", "corpus", "report_dir"}, "config.paths");
        maybe(p, "checkpoint", cfg.checkpoint_path);
        maybe(p, "corpus", cfg.corpus_path);
        maybe(p, "report_dir", cfg.report_dir);
    }
    return cfg;
}

// ===== small helpers =====

std::vector<int> parse_token_list(const std::string& text) {
    std::vector<int> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        int v;
        try {
            v = std::stoi(item, &pos);
        } catch (const std::exception&) {
            throw space::ConfigError("bad token id: \"" + item + "\"");
        }
        if (pos != item.size()) throw space::ConfigError("bad token id: \"" + item + "\"");
        out.push_back(v);
    }
    return out;
}

std::vector<std::vector<int>> load_prompts_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw space::ConfigError("cannot open prompts file: " + path);
    std::vector<std::vector<int>> prompts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        prompts.push_back(parse_token_list(line));
        if (prompts.back().empty()) throw space::ConfigError("empty prompt line in " + path);
    }
    if (prompts.empty()) throw space::ConfigError("no prompts in " + path);
    return prompts;
}

std::string join_tokens(const std::vector<int>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(tokens[i]);
    }
    return out;
}

void reject_mask_in_prompt(const std::vector<int>& prompt, int mask_token_id) {
    for (int t : prompt) {
        if (t == mask_token_id) {
            throw space::ConfigError("prompt contains the mask token id " +
                                     std::to_string(mask_token_id));
        }
    }
}

// ===== subcommands =====

int cmd_train(const RunConfig& cfg, const std::string& corpus_path, const std::string& out_path,
              const std::string& curve_path) {
    space::Corpus corpus = space::load_corpus(corpus_path);
    space::ModelParams params = space::init_model(cfg.model);

    const bool plain_sft = cfg.sarsft.p_ar >= 1.0;
    std::printf("mode          %s\n", plain_sft ? "sft (p_ar=1)" : "sar-sft");
    std::printf("p_ar          %g\n", cfg.sarsft.p_ar);
    std::printf("k             %zu\n", cfg.sarsft.k);
    std::printf("samples       %zu\n", corpus.size());
    std::printf("epochs        %zu\n", cfg.sarsft.epochs);
    std::printf("lr            %g (cosine)\n", cfg.sarsft.learning_rate);

    auto on_epoch = [&](std::size_t epoch, space::ModelParams& p, double mean_loss) {
        space::save_checkpoint(p, out_path);
        std::printf("epoch %-3zu loss %.6f\n", epoch, mean_loss);
    };
    const std::vector<space::LossPoint> curve = space::train(params, corpus, cfg.sarsft, on_epoch);
    space::save_checkpoint(params, out_path);
    space::save_loss_curve(curve, curve_path);
    std::printf("final loss    %.6f\n", curve.empty() ? 0.0 : curve.back().loss);
    std::printf("checkpoint    %s\n", out_path.c_str());
    std::printf("loss curve    %s\n", curve_path.c_str());
    return 0;
}

int cmd_generate(const space::ModelParams& params, const std::vector<int>& prompt,
                 const std::string& mode, const space::DecodeConfig& decode,
                 const std::string& trace_path, bool render_layout) {
    reject_mask_in_prompt(prompt, params.config.mask_token_id);

    if (render_layout) {
        const space::CandidateState sentinel =
            space::CandidateState::make_sentinel(decode.k, params.config.eos_token_id);
        const space::DecodeLayout layout =
            space::build_layout(prompt, sentinel.L_c, decode.k, params.config.mask_token_id);
        const space::AttnMask mask = space::build_attention_mask(layout);
        const std::vector<int> pbar = space::build_position_indices(mask);
        std::printf("layout tokens  %s\n", join_tokens(layout.tokens).c_str());
        std::printf("positions      %s\n", join_tokens(pbar).c_str());
        std::printf("attention mask (rows attend to '#'):\n%s", mask.render().c_str());
    }

    if (mode == "ar") {
        const space::ArResult res = space::ar_generate(params, prompt, decode);
        std::printf("tokens        %s\n", join_tokens(res.tokens).c_str());
        std::printf("invocations   %zu\n", res.invocations);
        return 0;
    }

    const space::SpaceResult res = space::space_generate(params, prompt, decode);
    std::printf("tokens        %s\n", join_tokens(res.tokens).c_str());
    std::printf("invocations   %zu\n", res.trace.invocations);
    std::printf("avg accepted  %.4f\n", res.trace.avg_accepted_tokens());
    if (!trace_path.empty()) {
        std::ofstream out(trace_path, std::ios::trunc);
        if (!out) throw space::ConfigError("cannot open trace for writing: " + trace_path);
        space::write_trace_jsonl(res.trace, out);
    }
    return 0;
}

int cmd_oracle_check(const space::ModelParams& params, const std::vector<int>& prompt,
                     std::size_t horizon, std::size_t k, std::size_t samples, std::uint64_t seed,
                     const std::string& verification, const std::string& csv_path) {
    reject_mask_in_prompt(prompt, params.config.mask_token_id);
    const bool literal = verification == "paper-literal";
    const space::EquivalenceReport report =
        space::equivalence_report(params, prompt, horizon, k, samples, seed, literal);
    std::fputs(report.to_text().c_str(), stdout);
    if (!csv_path.empty()) {
        space::save_distribution_csv(space::exact_ar_distribution(params, prompt, horizon),
                                     csv_path);
    }
    if (literal) return 0;  // diagnostic mode: report only
    return report.pass ? 0 : 2;
}

int cmd_bench(const space::ModelParams& params, const std::vector<std::vector<int>>& prompts,
              const space::DecodeConfig& decode, const std::string& out_dir) {
    for (const auto& p : prompts) reject_mask_in_prompt(p, params.config.mask_token_id);
    space::DecodeConfig baseline = decode;
    const space::BenchReport report = space::run_benchmark(params, prompts, decode, baseline);
    std::filesystem::create_directories(out_dir);
    space::save_bench_csv(report, out_dir + "/bench.csv");
    space::save_histogram_csv(report, out_dir + "/histogram.csv");
    std::printf("prompts       %zu\n", prompts.size());
    std::printf("k             %zu\n", report.k);
    std::printf("avg accepted  %.4f\n", report.aggregate.avg_accepted_tokens);
    std::printf("speedup inv   %.4f\n", report.aggregate.speedup_invocations);
    std::printf("speedup wall  %.4f\n", report.aggregate.speedup_wall);
    std::printf("reports       %s/bench.csv %s/histogram.csv\n", out_dir.c_str(), out_dir.c_str());
    return 0;
}

int cmd_sweep(const std::vector<std::string>& model_paths, const std::vector<std::size_t>& k_list,
              const std::vector<std::vector<int>>& prompts, const space::DecodeConfig& base,
              const std::string& out_dir) {
    if (model_paths.size() != k_list.size()) {
        throw space::ConfigError("need one model per k (" + std::to_string(k_list.size()) +
                                 " k values, " + std::to_string(model_paths.size()) + " models)");
    }
    std::vector<space::ModelParams> models;
    models.reserve(model_paths.size());
    for (const std::string& path : model_paths) models.push_back(space::load_checkpoint(path));
    for (const auto& p : prompts) {
        for (const auto& m : models) reject_mask_in_prompt(p, m.config.mask_token_id);
    }

    std::vector<std::pair<std::size_t, const space::ModelParams*>> per_k;
    for (std::size_t i = 0; i < k_list.size(); ++i) per_k.emplace_back(k_list[i], &models[i]);
    const std::vector<space::BenchReport> table = space::sweep_k(per_k, prompts, base);

    std::filesystem::create_directories(out_dir);
    space::save_sweep_csv(table, out_dir + "/sweep.csv");
    for (const space::BenchReport& r : table) {
        std::printf("k=%zu avg accepted %.4f speedup inv %.4f speedup wall %.4f\n", r.k,
                    r.aggregate.avg_accepted_tokens, r.aggregate.speedup_invocations,
                    r.aggregate.speedup_wall);
    }
    std::printf("report        %s/sweep.csv\n", out_dir.c_str());
    return 0;
}

int cmd_prep_data(const std::string& kind, std::size_t size, std::uint64_t seed,
                  const std::string& out_path, const space::CorpusParams& cp) {
    const space::Corpus corpus = space::synth_corpus(space::corpus_kind_from_string(kind), size,
                                                     seed, cp);
    space::save_corpus(corpus, out_path);
    std::printf("kind          %s\n", kind.c_str());
    std::printf("samples       %zu\n", corpus.size());
    std::printf("corpus        %s\n", out_path.c_str());
    return 0;
}

int cmd_mask_preview(const std::string& corpus_path, std::size_t k, double p_ar,
                     std::uint64_t seed, int mask_token_id, std::size_t count) {
    const space::Corpus corpus = space::load_corpus(corpus_path);
    const std::size_t n = std::min(count, corpus.size());
    for (std::size_t i = 0; i < n; ++i) {
        space::Rng rng = space::Rng::stream(seed, 0x3A, 0, i);
        const space::MaskedSample ms =
            space::apply_sar_masking(corpus[i], k, p_ar, mask_token_id, rng);
        std::printf("sample %zu  %s", i, ms.masked ? "masked" : "ar");
        if (ms.masked) std::printf(" m=%zu", ms.m);
        std::printf("\n  input  ");
        for (std::size_t t = 0; t < ms.input.size(); ++t) {
            if (t) std::printf(" ");
            if (ms.masked && ms.input[t] == mask_token_id &&
                t >= ms.input.size() - k) {
                std::printf("[M]");
            } else {
                std::printf("%d", ms.input[t]);
            }
        }
        std::printf("\n  target ");
        for (std::size_t t = 0; t < ms.targets.size(); ++t) {
            if (t) std::printf(" ");
            if (ms.loss_mask[t]) {
                std::printf("%d", ms.targets[t]);
            } else {
                std::printf(".");
            }
        }
        std::printf("\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-autoregressive training and auto-correct decoding at desk scale"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (model/decode/sarsft/paths)");

    // train
    auto* train = app.add_subcommand("train", "SAR-SFT training run");
    std::string train_corpus, train_out = "model.spc1", train_curve;
    std::optional<double> ov_p_ar, ov_lr;
    std::optional<std::size_t> ov_k, ov_epochs, ov_batch;
    std::optional<std::uint64_t> ov_train_seed;
    train->add_option("--corpus", train_corpus, "training corpus (jsonl)");
    train->add_option("--out", train_out, "checkpoint output path");
    train->add_option("--loss-curve", train_curve, "loss curve csv path (default <out>.loss.csv)");
    train->add_option("--p-ar", ov_p_ar, "AR-sample probability");
    train->add_option("--k", ov_k, "mask token count");
    train->add_option("--epochs", ov_epochs, "training epochs");
    train->add_option("--lr", ov_lr, "peak learning rate");
    train->add_option("--batch-size", ov_batch, "batch size");
    train->add_option("--seed", ov_train_seed, "training seed");

    // generate
    auto* gen = app.add_subcommand("generate", "decode from a checkpoint");
    std::string gen_model, gen_prompt, gen_mode = "space", gen_trace;
    std::string gen_sampling, gen_verification;
    std::optional<std::size_t> gen_k, gen_max_new, gen_top_k;
    std::optional<double> gen_temperature, gen_top_p;
    std::optional<std::uint64_t> gen_seed;
    bool gen_render_layout = false;
    gen->add_option("--model", gen_model, "checkpoint path")->required();
    gen->add_option("--prompt-tokens", gen_prompt, "comma-separated token ids")->required();
    gen->add_option("--mode", gen_mode, "ar | space")->check(CLI::IsMember({"ar", "space"}));
    gen->add_option("--k", gen_k, "mask token count");
    gen->add_option("--sampling", gen_sampling, "greedy | stochastic");
    gen->add_option("--temperature", gen_temperature, "sampling temperature");
    gen->add_option("--top-p", gen_top_p, "nucleus threshold");
    gen->add_option("--top-k", gen_top_k, "top-k truncation (0 = off)");
    gen->add_option("--verification", gen_verification,
                    "lossless-residual | paper-literal | greedy-match");
    gen->add_option("--max-new-tokens", gen_max_new, "generation cap");
    gen->add_option("--seed", gen_seed, "decode seed");
    gen->add_option("--trace", gen_trace, "step trace output (jsonl)");
    gen->add_flag("--render-layout", gen_render_layout, "print the first-step layout mask grid");

    // oracle-check
    auto* oracle = app.add_subcommand("oracle-check", "distribution-equivalence check");
    std::string oracle_model, oracle_prompt = "2,3,4", oracle_verification = "lossless-residual";
    std::string oracle_csv;
    std::size_t oracle_horizon = 2, oracle_k = 2, oracle_samples = 200000;
    std::uint64_t oracle_seed = 1234;
    oracle->add_option("--model", oracle_model, "checkpoint path (omit to use --config model)");
    oracle->add_option("--prompt-tokens", oracle_prompt, "comma-separated token ids");
    oracle->add_option("--horizon", oracle_horizon, "output horizon");
    oracle->add_option("--k", oracle_k, "mask token count");
    oracle->add_option("--samples", oracle_samples, "sample count per generator");
    oracle->add_option("--seed", oracle_seed, "sampling seed");
    oracle->add_option("--verification", oracle_verification,
                       "lossless-residual | paper-literal (diagnostic)")
        ->check(CLI::IsMember({"lossless-residual", "paper-literal"}));
    oracle->add_option("--csv", oracle_csv, "write the exact distribution as csv");

    // bench
    auto* bench = app.add_subcommand("bench", "AR vs auto-correct benchmark");
    std::string bench_model, bench_prompts, bench_out = "bench-report";
    std::string bench_sampling, bench_verification;
    std::optional<std::size_t> bench_k, bench_max_new;
    std::optional<std::uint64_t> bench_seed;
    bench->add_option("--model", bench_model, "checkpoint path")->required();
    bench->add_option("--prompts-file", bench_prompts, "one comma-separated prompt per line")
        ->required();
    bench->add_option("--k", bench_k, "mask token count");
    bench->add_option("--sampling", bench_sampling, "greedy | stochastic");
    bench->add_option("--verification", bench_verification,
                      "lossless-residual | paper-literal | greedy-match");
    bench->add_option("--max-new-tokens", bench_max_new, "generation cap");
    bench->add_option("--seed", bench_seed, "decode seed");
    bench->add_option("--out", bench_out, "report directory");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "benchmark across k values");
    std::string sweep_models, sweep_klist, sweep_prompts, sweep_out = "sweep-report";
    std::string sweep_sampling, sweep_verification;
    std::optional<std::size_t> sweep_max_new;
    std::optional<std::uint64_t> sweep_seed;
    sweep->add_option("--models", sweep_models, "comma-separated checkpoints, one per k")
        ->required();
    sweep->add_option("--k-list", sweep_klist, "comma-separated k values")->required();
    sweep->add_option("--prompts-file", sweep_prompts, "one comma-separated prompt per line")
        ->required();
    sweep->add_option("--sampling", sweep_sampling, "greedy | stochastic");
    sweep->add_option("--verification", sweep_verification,
                      "lossless-residual | paper-literal | greedy-match");
    sweep->add_option("--max-new-tokens", sweep_max_new, "generation cap");
    sweep->add_option("--seed", sweep_seed, "decode seed");
    sweep->add_option("--out", sweep_out, "report directory");

    // prep-data
    auto* prep = app.add_subcommand("prep-data", "write a synthetic corpus");
    std::string prep_kind = "repeat-pattern", prep_out = "corpus.jsonl";
    std::size_t prep_size = 128;
    std::uint64_t prep_seed = 5;
    space::CorpusParams prep_params;
    prep->add_option("--kind", prep_kind, "repeat-pattern | counting | templated-phrases")
        ->check(CLI::IsMember({"repeat-pattern", "counting", "templated-phrases"}));
    prep->add_option("--size", prep_size, "sample count");
    prep->add_option("--seed", prep_seed, "corpus seed");
    prep->add_option("--out", prep_out, "output path (jsonl)");
    prep->add_option("--vocab-size", prep_params.vocab_size, "vocabulary size");
    prep->add_option("--mask-token-id", prep_params.mask_token_id, "mask token id");
    prep->add_option("--eos-token-id", prep_params.eos_token_id, "EOS token id");
    prep->add_option("--period", prep_params.period, "repeat-pattern period");
    prep->add_option("--n-patterns", prep_params.n_patterns, "distinct patterns/templates");
    prep->add_option("--prompt-len", prep_params.prompt_len, "prompt length");
    prep->add_option("--answer-len", prep_params.answer_len, "answer length before EOS");

    // mask-preview
    auto* preview = app.add_subcommand("mask-preview", "show masked training samples");
    std::string preview_corpus;
    std::size_t preview_k = 5, preview_count = 4;
    double preview_p_ar = 0.5;
    std::uint64_t preview_seed = 7;
    std::optional<int> preview_mask_id;
    preview->add_option("--corpus", preview_corpus, "corpus path (jsonl)")->required();
    preview->add_option("--k", preview_k, "mask token count");
    preview->add_option("--p-ar", preview_p_ar, "AR-sample probability");
    preview->add_option("--seed", preview_seed, "masking seed");
    preview->add_option("--count", preview_count, "samples to show");
    preview->add_option("--mask-token-id", preview_mask_id, "mask token id");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg = load_run_config(config_path);

        if (*train) {
            if (ov_p_ar) cfg.sarsft.p_ar = *ov_p_ar;
            if (ov_k) cfg.sarsft.k = *ov_k;
            if (ov_epochs) cfg.sarsft.epochs = *ov_epochs;
            if (ov_lr) cfg.sarsft.learning_rate = *ov_lr;
            if (ov_batch) cfg.sarsft.batch_size = *ov_batch;
            if (ov_train_seed) cfg.sarsft.seed = *ov_train_seed;
            const std::string corpus_path =
                !train_corpus.empty() ? train_corpus : cfg.corpus_path;
            if (corpus_path.empty()) throw space::ConfigError("no corpus given");
            const std::string curve_path =
                !train_curve.empty() ? train_curve : train_out + ".loss.csv";
            return cmd_train(cfg, corpus_path, train_out, curve_path);
        }

        if (*gen) {
            space::ModelParams params = space::load_checkpoint(gen_model);
            space::DecodeConfig decode = cfg.decode;
            if (gen_k) decode.k = *gen_k;
            if (!gen_sampling.empty()) decode.sampling.mode = sampling_mode_from_string(gen_sampling);
            if (gen_temperature) decode.sampling.temperature = *gen_temperature;
            if (gen_top_p) decode.sampling.top_p = *gen_top_p;
            if (gen_top_k) decode.sampling.top_k = *gen_top_k;
            if (!gen_verification.empty()) {
                decode.verification = verification_from_string(gen_verification);
            }
            if (gen_max_new) decode.max_new_tokens = *gen_max_new;
            if (gen_seed) decode.seed = *gen_seed;
            decode.validate();
            return cmd_generate(params, parse_token_list(gen_prompt), gen_mode, decode, gen_trace,
                                gen_render_layout);
        }

        if (*oracle) {
            space::ModelParams params = oracle_model.empty()
                                            ? space::init_model(cfg.model)
                                            : space::load_checkpoint(oracle_model);
            return cmd_oracle_check(params, parse_token_list(oracle_prompt), oracle_horizon,
                                    oracle_k, oracle_samples, oracle_seed, oracle_verification,
                                    oracle_csv);
        }

        if (*bench) {
            space::ModelParams params = space::load_checkpoint(bench_model);
            space::DecodeConfig decode = cfg.decode;
            if (bench_k) decode.k = *bench_k;
            if (!bench_sampling.empty()) {
                decode.sampling.mode = sampling_mode_from_string(bench_sampling);
            }
            if (!bench_verification.empty()) {
                decode.verification = verification_from_string(bench_verification);
            }
            if (bench_max_new) decode.max_new_tokens = *bench_max_new;
            if (bench_seed) decode.seed = *bench_seed;
            decode.validate();
            return cmd_bench(params, load_prompts_file(bench_prompts), decode, bench_out);
        }

        if (*sweep) {
            space::DecodeConfig decode = cfg.decode;
            if (!sweep_sampling.empty()) {
                decode.sampling.mode = sampling_mode_from_string(sweep_sampling);
            }
            if (!sweep_verification.empty()) {
                decode.verification = verification_from_string(sweep_verification);
            }
            if (sweep_max_new) decode.max_new_tokens = *sweep_max_new;
            if (sweep_seed) decode.seed = *sweep_seed;

            std::vector<std::string> model_paths;
            std::string item;
            std::istringstream in(sweep_models);
            while (std::getline(in, item, ',')) {
                if (!item.empty()) model_paths.push_back(item);
            }
            std::vector<std::size_t> k_list;
            for (int k : parse_token_list(sweep_klist)) {
                if (k < 1) throw space::ConfigError("k must be >= 1");
                k_list.push_back(static_cast<std::size_t>(k));
            }
            decode.k = k_list.empty() ? decode.k : k_list.front();
            decode.validate();
            return cmd_sweep(model_paths, k_list, load_prompts_file(sweep_prompts), decode,
                             sweep_out);
        }

        if (*prep) {
            return cmd_prep_data(prep_kind, prep_size, prep_seed, prep_out, prep_params);
        }

        if (*preview) {
            const int mask_id = preview_mask_id ? *preview_mask_id : cfg.model.mask_token_id;
            return cmd_mask_preview(preview_corpus, preview_k, preview_p_ar, preview_seed, mask_id,
                                    preview_count);
        }
    } catch (const space::GuardError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
