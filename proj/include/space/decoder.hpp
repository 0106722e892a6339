#pragma once

// Auto-correct decoding: every step runs one forward over the extended
// layout, verifies last step's k candidates by rejection sampling, emits the
// accepted prefix plus one extra token, and drafts the next k candidates
// from the mask group adjacent to the last accepted position. A plain AR
// generator with the same sampling rules serves as the baseline.

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "space/layout.hpp"
#include "space/model.hpp"
#include "space/sampling.hpp"

namespace space {

enum class VerificationMode { LosslessResidual, PaperLiteral, GreedyMatch };

inline const char* verification_name(VerificationMode m) {
    switch (m) {
        case VerificationMode::LosslessResidual: return "lossless-residual";
        case VerificationMode::PaperLiteral: return "paper-literal";
        case VerificationMode::GreedyMatch: return "greedy-match";
    }
    return "?";
}

struct DecodeConfig {
    std::size_t k = 5;
    SamplingConfig sampling;
    VerificationMode verification = VerificationMode::GreedyMatch;
    std::size_t max_new_tokens = 64;
    std::uint64_t seed = 0;

    void validate() const {
        if (k == 0) throw ConfigError("k must be >= 1");
        sampling.validate();
        const bool greedy = sampling.mode == SamplingMode::Greedy;
        if (greedy && verification != VerificationMode::GreedyMatch) {
            throw ConfigError("greedy sampling requires greedy-match verification");
        }
        if (!greedy && verification == VerificationMode::GreedyMatch) {
            throw ConfigError("greedy-match verification requires greedy sampling");
        }
    }
};

// Drafts carried between steps. On the first step `sentinel` is set and the
// placeholder candidates are rejected with certainty (the P_c = +inf state);
// afterwards P_c[i] is exactly D_c[i][L_c[i]], with D_c holding the full
// (warped) draft rows so the residual distribution is computable.
struct CandidateState {
    std::vector<int> L_c;
    std::vector<double> P_c;
    std::vector<std::vector<double>> D_c;
    bool sentinel = true;

    static CandidateState make_sentinel(std::size_t k, int fill_token) {
        CandidateState s;
        s.L_c.assign(k, fill_token);
        s.P_c.assign(k, 0.0);
        s.D_c.assign(k, {});
        s.sentinel = true;
        return s;
    }
};

struct StepTrace {
    std::size_t step = 0;
    std::size_t accepted = 0;  // i*, in [0, k]
    std::vector<int> emitted;  // accepted candidates + the extra token
};

struct DecodeTrace {
    std::vector<StepTrace> steps;
    std::size_t invocations = 0;
    std::size_t tokens_generated = 0;  // untruncated sum of emitted counts

    double avg_accepted_tokens() const {
        if (invocations == 0) return 0.0;
        return static_cast<double>(tokens_generated) / static_cast<double>(invocations);
    }
};

// One step record per line: {"step":..,"accepted":..,"emitted":[..]}
inline void write_trace_jsonl(const DecodeTrace& trace, std::ostream& out) {
    for (const StepTrace& s : trace.steps) {
        out << "{\"step\":" << s.step << ",\"accepted\":" << s.accepted << ",\"emitted\":[";
        for (std::size_t i = 0; i < s.emitted.size(); ++i) {
            if (i) out << ',';
            out << s.emitted[i];
        }
        out << "]}\n";
    }
}

// ---------------------------------------------------------------------------
// AR baseline

struct ArResult {
    std::vector<int> tokens;  // generated tokens, EOS excluded
    std::size_t invocations = 0;
};

inline ArResult ar_generate(const ModelParams& params, std::span<const int> prompt,
                            const DecodeConfig& config) {
    config.validate();
    if (prompt.empty()) throw LayoutError("empty prompt");
    const ModelConfig& cfg = params.config;

    ArResult res;
    Rng rng = Rng::stream(config.seed, 0xA7);
    KVCache cache(cfg);
    std::vector<int> output(prompt.begin(), prompt.end());

    while (res.tokens.size() < config.max_new_tokens && output.size() <= cfg.max_position) {
        const std::size_t cached = cache.size();
        std::vector<int> new_tokens(output.begin() + static_cast<std::ptrdiff_t>(cached),
                                    output.end());
        const std::size_t n_new = new_tokens.size();
        AttnMask mask(n_new, cached + n_new);
        std::vector<int> positions(n_new);
        for (std::size_t i = 0; i < n_new; ++i) {
            for (std::size_t j = 0; j <= cached + i; ++j) mask.at(i, j) = 1;
            positions[i] = static_cast<int>(cached + i);
        }
        const Matrix probs = forward(params, new_tokens, mask, positions, &cache);
        res.invocations += 1;
        const int tok = sample_token(probs.row(probs.rows - 1), config.sampling, rng);
        if (tok == cfg.eos_token_id) break;
        res.tokens.push_back(tok);
        output.push_back(tok);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Verification

struct VerifyResult {
    std::size_t accepted = 0;          // i*
    std::vector<double> next_dist;     // distribution for the extra token (warped space)
};

// q_rows holds k+1 raw AR rows: q_rows[0] conditions on the output so far,
// q_rows[i] on output + c_1..c_i. Warping is applied here; the state's
// P_c/D_c are already in the warped space.
inline VerifyResult verify_candidates(const std::vector<std::vector<double>>& q_rows,
                                      const CandidateState& state, const DecodeConfig& config,
                                      Rng& rng) {
    const std::size_t k = config.k;
    if (q_rows.size() != k + 1) {
        throw ShapeError("verify_candidates: expected " + std::to_string(k + 1) + " rows");
    }

    VerifyResult res;

    if (config.verification == VerificationMode::GreedyMatch) {
        std::size_t i = 0;
        while (i < k && !state.sentinel &&
               static_cast<std::size_t>(state.L_c[i]) == argmax_token(q_rows[i])) {
            ++i;
        }
        res.accepted = i;
        res.next_dist = q_rows[i];
        return res;
    }

    auto warped = [&](std::size_t i) { return warp_distribution(q_rows[i], config.sampling); };

    if (state.sentinel) {
        res.accepted = 0;
        res.next_dist = warped(0);
        return res;
    }

    std::size_t i = 0;
    std::vector<double> q = warped(0);
    while (i < k) {
        const auto c = static_cast<std::size_t>(state.L_c[i]);
        const double p_draft = state.P_c[i];
        const double q_c = q[c];
        double ratio;
        if (p_draft > 0.0) {
            ratio = q_c / p_draft;
        } else {
            ratio = q_c > 0.0 ? 2.0 : 0.0;
        }
        if (ratio > 1.0) ratio = 1.0;
        if (rng.uniform() >= ratio) break;
        ++i;
        q = warped(i);
    }
    res.accepted = i;

    if (i == k || config.verification == VerificationMode::PaperLiteral) {
        res.next_dist = std::move(q);
        return res;
    }

    // Rejected at candidate i+1: replacement comes from the residual
    // normalize(max(0, q - d)) so accept+resample together reproduce q.
    const std::vector<double>& d = state.D_c[i];
    std::vector<double> residual(q.size());
    double total = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        const double r = q[j] - d[j];
        residual[j] = r > 0.0 ? r : 0.0;
        total += residual[j];
    }
    if (total <= 1e-300) {
        res.next_dist = std::move(q);  // q == d; any sample from q is exact
    } else {
        for (double& v : residual) v /= total;
        res.next_dist = std::move(residual);
    }
    return res;
}

// ---------------------------------------------------------------------------
// SPACE step and loop

struct StepResult {
    std::vector<int> emitted;
    CandidateState state;
    StepTrace trace;
};

// One decoding step. `cache` must hold key/value slots for every token of
// `output` except the last (it may hold fewer only on the first call, when
// the remaining prompt tokens are forwarded too); it is compacted back to
// that invariant before returning.
inline StepResult space_step(const ModelParams& params, std::span<const int> output,
                             const CandidateState& state, const DecodeConfig& config,
                             KVCache& cache, Rng& rng, std::size_t step_index = 0) {
    const ModelConfig& cfg = params.config;
    const std::size_t k = config.k;
    const std::size_t l = output.size();

    DecodeLayout layout = build_layout(output, state.L_c, k, cfg.mask_token_id,
                                       /*allow_mask_in_prompt=*/true);
    const AttnMask full_mask = build_attention_mask(layout);
    const std::vector<int> pbar = build_position_indices(full_mask);

    const std::size_t cached = cache.size();
    if (cached >= l) throw LayoutError("space_step: cache ahead of output");
    const std::size_t n_new = layout.size() - cached;

    std::vector<int> new_tokens(layout.tokens.begin() + static_cast<std::ptrdiff_t>(cached),
                                layout.tokens.end());
    std::vector<int> positions(pbar.begin() + static_cast<std::ptrdiff_t>(cached), pbar.end());
    AttnMask mask(n_new, layout.size());
    for (std::size_t i = 0; i < n_new; ++i) {
        for (std::size_t j = 0; j < layout.size(); ++j) {
            mask.at(i, j) = full_mask.at(cached + i, j);
        }
    }
    std::vector<SlotKind> kinds(n_new);
    for (std::size_t i = 0; i < n_new; ++i) {
        const std::size_t abs = cached + i;
        if (abs < l) {
            kinds[i] = SlotKind::Prompt;
        } else if (layout.is_mask_index(abs)) {
            kinds[i] = SlotKind::MaskSlot;
        } else {
            kinds[i] = SlotKind::Candidate;
        }
    }

    const Matrix probs = forward(params, new_tokens, mask, positions, &cache, kinds);
    auto row_at = [&](std::size_t abs) { return probs.row(abs - cached); };

    // Verify rows: the output's last token plus each candidate position.
    std::vector<std::vector<double>> q_rows;
    q_rows.reserve(k + 1);
    q_rows.emplace_back(row_at(l - 1).begin(), row_at(l - 1).end());
    for (std::size_t i = 0; i < k; ++i) {
        auto r = row_at(layout.candidate_positions[i]);
        q_rows.emplace_back(r.begin(), r.end());
    }

    VerifyResult verdict = verify_candidates(q_rows, state, config, rng);
    const std::size_t accepted = verdict.accepted;

    StepResult res;
    for (std::size_t i = 0; i < accepted; ++i) res.emitted.push_back(state.L_c[i]);
    int extra;
    if (config.sampling.mode == SamplingMode::Greedy) {
        extra = static_cast<int>(argmax_token(verdict.next_dist));
    } else {
        extra = static_cast<int>(sample_index(verdict.next_dist, rng));
    }
    res.emitted.push_back(extra);

    // Draft the next k candidates from mask group accepted+1, one per row.
    const std::size_t group_start = layout.group_starts[accepted];
    CandidateState next;
    next.sentinel = false;
    next.L_c.resize(k);
    next.P_c.resize(k);
    next.D_c.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        auto raw = row_at(group_start + i);
        std::vector<double> row;
        if (config.sampling.mode == SamplingMode::Greedy || config.sampling.is_identity_warp()) {
            row.assign(raw.begin(), raw.end());
        } else {
            row = warp_distribution(raw, config.sampling);
        }
        const std::size_t tok = config.sampling.mode == SamplingMode::Greedy
                                    ? argmax_token(row)
                                    : sample_index(row, rng);
        next.L_c[i] = static_cast<int>(tok);
        next.P_c[i] = row[tok];
        next.D_c[i] = std::move(row);
    }
    res.state = std::move(next);

    // Keep the old output slots plus the accepted candidates; mask and
    // rejected slots are evicted. The extra token was never forwarded, so the
    // cache again holds everything but the new output's last token.
    std::vector<std::size_t> keep;
    keep.reserve(l + accepted);
    for (std::size_t j = 0; j < l; ++j) keep.push_back(j);
    for (std::size_t i = 0; i < accepted; ++i) keep.push_back(layout.candidate_positions[i]);
    cache = compact_cache(cache, keep);
    for (std::size_t j = l; j < cache.size(); ++j) cache.slots[j].kind = SlotKind::Accepted;

    res.trace.step = step_index;
    res.trace.accepted = accepted;
    res.trace.emitted = res.emitted;
    return res;
}

struct SpaceResult {
    std::vector<int> tokens;  // generated tokens, truncated before EOS
    DecodeTrace trace;
};

inline SpaceResult space_generate(const ModelParams& params, std::span<const int> prompt,
                                  const DecodeConfig& config) {
    config.validate();
    if (prompt.empty()) throw LayoutError("empty prompt");
    const ModelConfig& cfg = params.config;
    for (int t : prompt) {
        if (t == cfg.mask_token_id) throw LayoutError("mask token in prompt");
    }

    SpaceResult res;
    if (config.max_new_tokens == 0) return res;

    Rng rng = Rng::stream(config.seed, 0x5A);
    KVCache cache(cfg);
    std::vector<int> output(prompt.begin(), prompt.end());
    CandidateState state = CandidateState::make_sentinel(config.k, cfg.eos_token_id);

    // The deepest position index in a layout is l + 2k - 1 (the last mask of
    // the final group sees l + k non-masks plus k same-group masks).
    bool stopped = false;
    while (!stopped && res.tokens.size() < config.max_new_tokens &&
           output.size() + 2 * config.k <= cfg.max_position) {
        StepResult step = space_step(params, output, state, config, cache, rng,
                                     res.trace.steps.size());
        res.trace.invocations += 1;
        res.trace.tokens_generated += step.emitted.size();
        res.trace.steps.push_back(step.trace);
        state = std::move(step.state);

        for (int tok : step.emitted) {
            if (tok == cfg.eos_token_id) {
                stopped = true;
                break;
            }
            res.tokens.push_back(tok);
            output.push_back(tok);
        }
    }
    if (res.tokens.size() > config.max_new_tokens) {
        const std::size_t overshoot = res.tokens.size() - config.max_new_tokens;
        res.tokens.resize(config.max_new_tokens);
        output.resize(output.size() - overshoot);
    }
    return res;
}

}  // namespace space
