#pragma once

// Extended-input construction for auto-correct decoding. The prompt is
// followed by k+1 groups of k mask tokens with the k candidates interleaved:
//
//   I = { x_1 .. x_l, M*k, c_1, M*k, c_2, ..., c_k, M*k }
//
// so |I| = l + k*(k+2). All indices below are 0-based: candidate c_i
// (i = 1..k) sits at l + i*(k+1) - 1, and group g (g = 1..k+1) starts at
// l + (g-1)*(k+1). Group g's mask rows draft the continuation that assumes
// the first g-1 candidates were accepted.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "space/errors.hpp"
#include "space/mask.hpp"

namespace space {

struct DecodeLayout {
    std::vector<int> tokens;                     // the extended input I
    std::size_t prompt_len = 0;                  // l
    std::size_t k = 0;
    int mask_token_id = -1;
    std::vector<std::size_t> candidate_positions;  // index of c_1..c_k in tokens
    std::vector<std::size_t> group_starts;         // start of each of the k+1 mask groups

    std::size_t size() const { return tokens.size(); }

    bool is_mask_index(std::size_t idx) const {
        if (idx < prompt_len) return false;
        return (idx - prompt_len) % (k + 1) < k;
    }

    // Group number (1..k+1) of a mask index; 0 for non-mask indices.
    std::size_t group_of(std::size_t idx) const {
        if (!is_mask_index(idx)) return 0;
        return (idx - prompt_len) / (k + 1) + 1;
    }
};

// Mask/candidate classification is positional (index arithmetic), so a
// token that happens to equal the mask id is treated as an ordinary token
// when it sits in the prompt region. The identity check below is an input
// gate for user-supplied prompts; the decoder disables it for its own
// output, which may legitimately contain an emitted mask-id token when
// sampling an untrained model.
inline DecodeLayout build_layout(std::span<const int> prompt, std::span<const int> candidates,
                                 std::size_t k, int mask_token_id,
                                 bool allow_mask_in_prompt = false) {
    if (k == 0) throw LayoutError("k must be >= 1");
    if (prompt.empty()) throw LayoutError("empty prompt");
    if (candidates.size() != k) {
        throw LayoutError("expected " + std::to_string(k) + " candidates, got " +
                          std::to_string(candidates.size()));
    }
    if (!allow_mask_in_prompt) {
        for (int t : prompt) {
            if (t == mask_token_id) throw LayoutError("mask token in prompt");
        }
    }

    DecodeLayout layout;
    layout.prompt_len = prompt.size();
    layout.k = k;
    layout.mask_token_id = mask_token_id;
    layout.tokens.assign(prompt.begin(), prompt.end());
    layout.tokens.reserve(prompt.size() + k * (k + 2));

    for (std::size_t g = 0; g < k + 1; ++g) {
        layout.group_starts.push_back(layout.tokens.size());
        for (std::size_t j = 0; j < k; ++j) layout.tokens.push_back(mask_token_id);
        if (g < k) {
            layout.candidate_positions.push_back(layout.tokens.size());
            layout.tokens.push_back(candidates[g]);
        }
    }
    return layout;
}

// Group-membership semantics: row i attends to j iff j <= i and either I[j]
// is a non-mask token, or both are masks of the same group. Non-masks never
// see masks; masks never see masks of another group.
inline AttnMask build_attention_mask(const DecodeLayout& layout) {
    const std::size_t n = layout.size();
    AttnMask mask(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gi = layout.group_of(i);
        for (std::size_t j = 0; j <= i; ++j) {
            const std::size_t gj = layout.group_of(j);
            if (gj == 0) {
                mask.at(i, j) = 1;
            } else if (gi != 0 && gi == gj) {
                mask.at(i, j) = 1;
            }
        }
    }
    return mask;
}

// The published mask formula's literal second clause (both masks, i-j < k)
// instead of group membership. For k >= 3 it admits cross-group mask pairs;
// kept as a diagnostic, not used for decoding.
inline AttnMask build_attention_mask_literal(const DecodeLayout& layout) {
    const std::size_t n = layout.size();
    const std::size_t k = layout.k;
    AttnMask mask(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool mi = layout.is_mask_index(i);
        for (std::size_t j = 0; j <= i; ++j) {
            const bool mj = layout.is_mask_index(j);
            if (!mj) {
                mask.at(i, j) = 1;
            } else if (mi && i - j < k) {
                mask.at(i, j) = 1;
            }
        }
    }
    return mask;
}

// Cells where two masks disagree, row-major order.
inline std::vector<std::pair<std::size_t, std::size_t>> mask_divergence(const AttnMask& a,
                                                                        const AttnMask& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw LayoutError("mask_divergence shape mismatch");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            if (a.at(i, j) != b.at(i, j)) out.emplace_back(i, j);
        }
    }
    return out;
}

// P-bar: position index of row i is its visible-set size minus one.
inline std::vector<int> build_position_indices(const AttnMask& mask) {
    std::vector<int> out(mask.rows);
    for (std::size_t i = 0; i < mask.rows; ++i) {
        out[i] = static_cast<int>(mask.row_sum(i)) - 1;
    }
    return out;
}

}  // namespace space
