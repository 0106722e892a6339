#pragma once

// Decoder-only toy transformer: pre-norm residual blocks, GELU feed-forward,
// learned absolute position embeddings indexed by caller-supplied indices,
// and an arbitrary boolean attention mask. Two forward paths share the same
// arithmetic: a plain one for inference (with an optional compactable KV
// cache) and a taped one for training.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "space/mask.hpp"
#include "space/matrix.hpp"
#include "space/rng.hpp"
#include "space/tape.hpp"

namespace space {

inline constexpr double kMaskedLogit = -1e9;

struct ModelConfig {
    std::size_t vocab_size = 16;
    std::size_t d_model = 32;
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t d_ff = 64;
    std::size_t max_position = 96;
    int mask_token_id = 1;
    int eos_token_id = 0;
    double init_std = 0.08;
    std::uint64_t seed = 1234;

    void validate() const {
        if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
        if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
            throw ConfigError("d_model must be a positive multiple of n_heads");
        }
        if (n_layers == 0 || d_ff == 0 || max_position == 0) {
            throw ConfigError("n_layers, d_ff, max_position must be positive");
        }
        if (mask_token_id == eos_token_id) throw ConfigError("mask_token_id equals eos_token_id");
        if (mask_token_id < 0 || static_cast<std::size_t>(mask_token_id) >= vocab_size) {
            throw ConfigError("mask_token_id out of vocab");
        }
        if (eos_token_id < 0 || static_cast<std::size_t>(eos_token_id) >= vocab_size) {
            throw ConfigError("eos_token_id out of vocab");
        }
        if (init_std <= 0.0) throw ConfigError("init_std must be positive");
    }

    std::size_t head_dim() const { return d_model / n_heads; }
};

struct LayerParams {
    ParamTensor ln1_g, ln1_b;
    ParamTensor wq, bq, wk, bk, wv, bv, wo, bo;
    ParamTensor ln2_g, ln2_b;
    ParamTensor w1, b1, w2, b2;
};

struct ModelParams {
    ModelConfig config;
    ParamTensor tok_emb;  // vocab_size x d_model; includes the mask-token row
    ParamTensor pos_emb;  // max_position x d_model
    std::vector<LayerParams> layers;
    ParamTensor lnf_g, lnf_b;
    ParamTensor w_out, b_out;

    template <class F>
    void for_each_param(F&& fn) {
        fn(tok_emb);
        fn(pos_emb);
        for (auto& layer : layers) {
            fn(layer.ln1_g);
            fn(layer.ln1_b);
            fn(layer.wq);
            fn(layer.bq);
            fn(layer.wk);
            fn(layer.bk);
            fn(layer.wv);
            fn(layer.bv);
            fn(layer.wo);
            fn(layer.bo);
            fn(layer.ln2_g);
            fn(layer.ln2_b);
            fn(layer.w1);
            fn(layer.b1);
            fn(layer.w2);
            fn(layer.b2);
        }
        fn(lnf_g);
        fn(lnf_b);
        fn(w_out);
        fn(b_out);
    }

    std::vector<ParamTensor*> param_list() {
        std::vector<ParamTensor*> out;
        for_each_param([&](ParamTensor& p) { out.push_back(&p); });
        return out;
    }

    void zero_grads() {
        for_each_param([](ParamTensor& p) { p.zero_grad(); });
    }
};

namespace detail {

inline Matrix normal_matrix(Rng& rng, std::size_t r, std::size_t c, double std) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.normal(0.0, std);
    return m;
}

}  // namespace detail

inline ModelParams init_model(const ModelConfig& config) {
    config.validate();
    ModelParams p;
    p.config = config;
    Rng rng = Rng::stream(config.seed, 0x1717);
    const std::size_t d = config.d_model;
    const double std = config.init_std;

    p.tok_emb = ParamTensor("tok_emb", detail::normal_matrix(rng, config.vocab_size, d, std));
    p.pos_emb = ParamTensor("pos_emb", detail::normal_matrix(rng, config.max_position, d, std));

    p.layers.resize(config.n_layers);
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        auto& layer = p.layers[l];
        const std::string pre = "layer" + std::to_string(l) + ".";
        layer.ln1_g = ParamTensor(pre + "ln1_g", Matrix(1, d, 1.0));
        layer.ln1_b = ParamTensor(pre + "ln1_b", Matrix(1, d));
        layer.wq = ParamTensor(pre + "wq", detail::normal_matrix(rng, d, d, std));
        layer.bq = ParamTensor(pre + "bq", Matrix(1, d));
        layer.wk = ParamTensor(pre + "wk", detail::normal_matrix(rng, d, d, std));
        layer.bk = ParamTensor(pre + "bk", Matrix(1, d));
        layer.wv = ParamTensor(pre + "wv", detail::normal_matrix(rng, d, d, std));
        layer.bv = ParamTensor(pre + "bv", Matrix(1, d));
        layer.wo = ParamTensor(pre + "wo", detail::normal_matrix(rng, d, d, std));
        layer.bo = ParamTensor(pre + "bo", Matrix(1, d));
        layer.ln2_g = ParamTensor(pre + "ln2_g", Matrix(1, d, 1.0));
        layer.ln2_b = ParamTensor(pre + "ln2_b", Matrix(1, d));
        layer.w1 = ParamTensor(pre + "w1", detail::normal_matrix(rng, d, config.d_ff, std));
        layer.b1 = ParamTensor(pre + "b1", Matrix(1, config.d_ff));
        layer.w2 = ParamTensor(pre + "w2", detail::normal_matrix(rng, config.d_ff, d, std));
        layer.b2 = ParamTensor(pre + "b2", Matrix(1, d));
    }

    p.lnf_g = ParamTensor("final_ln_g", Matrix(1, d, 1.0));
    p.lnf_b = ParamTensor("final_ln_b", Matrix(1, d));
    p.w_out = ParamTensor("w_out", detail::normal_matrix(rng, d, config.vocab_size, std));
    p.b_out = ParamTensor("b_out", Matrix(1, config.vocab_size));
    return p;
}

// ---------------------------------------------------------------------------
// KV cache

enum class SlotKind : std::uint8_t { Prompt, Accepted, Candidate, MaskSlot };

struct SlotMeta {
    int pos = 0;
    SlotKind kind = SlotKind::Prompt;
};

struct KVCache {
    std::size_t d_model = 0;
    std::vector<std::vector<double>> k_layers;  // per layer, slots x d_model row-major
    std::vector<std::vector<double>> v_layers;
    std::vector<SlotMeta> slots;

    KVCache() = default;
    explicit KVCache(const ModelConfig& config)
        : d_model(config.d_model), k_layers(config.n_layers), v_layers(config.n_layers) {}

    std::size_t size() const { return slots.size(); }
    bool empty() const { return slots.empty(); }

    const double* k_row(std::size_t layer, std::size_t slot) const {
        return k_layers[layer].data() + slot * d_model;
    }
    const double* v_row(std::size_t layer, std::size_t slot) const {
        return v_layers[layer].data() + slot * d_model;
    }
};

inline KVCache compact_cache(const KVCache& cache, std::span<const std::size_t> keep_slots) {
    for (std::size_t s : keep_slots) {
        if (s >= cache.size()) {
            throw IndexError("compact_cache slot " + std::to_string(s) + " >= " + std::to_string(cache.size()));
        }
    }
    KVCache out;
    out.d_model = cache.d_model;
    out.k_layers.resize(cache.k_layers.size());
    out.v_layers.resize(cache.v_layers.size());
    for (std::size_t l = 0; l < cache.k_layers.size(); ++l) {
        out.k_layers[l].reserve(keep_slots.size() * cache.d_model);
        out.v_layers[l].reserve(keep_slots.size() * cache.d_model);
        for (std::size_t s : keep_slots) {
            const double* k = cache.k_row(l, s);
            const double* v = cache.v_row(l, s);
            out.k_layers[l].insert(out.k_layers[l].end(), k, k + cache.d_model);
            out.v_layers[l].insert(out.v_layers[l].end(), v, v + cache.d_model);
        }
    }
    out.slots.reserve(keep_slots.size());
    for (std::size_t s : keep_slots) out.slots.push_back(cache.slots[s]);
    return out;
}

// ---------------------------------------------------------------------------
// Inference forward

namespace detail {

inline void layer_norm_rows(const Matrix& x, const Matrix& g, const Matrix& b, Matrix& out,
                            double eps = 1e-5) {
    const std::size_t n = x.cols;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += x(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = x(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            out(i, j) = g(0, j) * ((x(i, j) - mean) * is) + b(0, j);
        }
    }
}

inline Matrix linear(const Matrix& x, const ParamTensor& w, const ParamTensor& b) {
    Matrix out = matmul(x, w.value);
    for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += b.value(0, j);
    }
    return out;
}

}  // namespace detail

// Runs the model over `tokens` and returns one next-token distribution per
// input position. The mask has shape |tokens| x (cached + |tokens|); row i
// must have at least one set bit. When a cache is given, the new tokens'
// keys/values are appended to it (with `kinds` metadata when provided).
inline Matrix forward(const ModelParams& params, std::span<const int> tokens, const AttnMask& mask,
                      std::span<const int> positions, KVCache* cache = nullptr,
                      std::span<const SlotKind> kinds = {}) {
    const ModelConfig& cfg = params.config;
    const std::size_t n_new = tokens.size();
    const std::size_t cached = cache ? cache->size() : 0;
    const std::size_t n_ctx = cached + n_new;
    const std::size_t d = cfg.d_model;
    const std::size_t dh = cfg.head_dim();

    if (n_new == 0) throw ShapeError("forward: empty token batch");
    if (positions.size() != n_new) throw ShapeError("forward: positions/tokens length mismatch");
    if (mask.rows != n_new || mask.cols != n_ctx) {
        throw ShapeError("forward: mask " + std::to_string(mask.rows) + "x" + std::to_string(mask.cols) +
                         ", expected " + std::to_string(n_new) + "x" + std::to_string(n_ctx));
    }
    for (std::size_t i = 0; i < n_new; ++i) {
        if (mask.row_sum(i) == 0) throw LayoutError("forward: mask row " + std::to_string(i) + " is all-zero");
    }
    for (int p : positions) {
        if (p < 0 || static_cast<std::size_t>(p) >= cfg.max_position) {
            throw ConfigError("forward: position " + std::to_string(p) + " >= max_position " +
                              std::to_string(cfg.max_position));
        }
    }
    for (int t : tokens) {
        if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size) {
            throw IndexError("forward: token " + std::to_string(t) + " out of vocab");
        }
    }
    if (cache && cache->d_model != d) throw ShapeError("forward: cache d_model mismatch");

    if (cache) {
        for (std::size_t i = 0; i < n_new; ++i) {
            SlotMeta meta;
            meta.pos = positions[i];
            meta.kind = kinds.empty() ? SlotKind::Prompt : kinds[i];
            cache->slots.push_back(meta);
        }
    }

    Matrix x(n_new, d);
    for (std::size_t i = 0; i < n_new; ++i) {
        const auto tok = static_cast<std::size_t>(tokens[i]);
        const auto pos = static_cast<std::size_t>(positions[i]);
        for (std::size_t j = 0; j < d; ++j) {
            x(i, j) = params.tok_emb.value(tok, j) + params.pos_emb.value(pos, j);
        }
    }

    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Matrix h(n_new, d);
    std::vector<double> att(n_ctx);

    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const LayerParams& layer = params.layers[l];
        detail::layer_norm_rows(x, layer.ln1_g.value, layer.ln1_b.value, h);
        Matrix q = detail::linear(h, layer.wq, layer.bq);
        Matrix k = detail::linear(h, layer.wk, layer.bk);
        Matrix v = detail::linear(h, layer.wv, layer.bv);

        const double* k_cached = nullptr;
        const double* v_cached = nullptr;
        if (cache) {
            auto& kl = cache->k_layers[l];
            auto& vl = cache->v_layers[l];
            kl.insert(kl.end(), k.data.begin(), k.data.end());
            vl.insert(vl.end(), v.data.begin(), v.data.end());
            k_cached = kl.data();
            v_cached = vl.data();
        }
        auto key_row = [&](std::size_t j) -> const double* {
            if (cache) return k_cached + j * d;
            return k.data.data() + j * d;
        };
        auto val_row = [&](std::size_t j) -> const double* {
            if (cache) return v_cached + j * d;
            return v.data.data() + j * d;
        };

        Matrix ctx(n_new, d);
        for (std::size_t head = 0; head < cfg.n_heads; ++head) {
            const std::size_t off = head * dh;
            for (std::size_t i = 0; i < n_new; ++i) {
                const double* qrow = q.data.data() + i * d + off;
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < n_ctx; ++j) {
                    if (!mask.at(i, j)) continue;
                    const double* krow = key_row(j) + off;
                    double s = 0.0;
                    for (std::size_t e = 0; e < dh; ++e) s += qrow[e] * krow[e];
                    s *= att_scale;
                    att[j] = s;
                    if (s > mx) mx = s;
                }
                double denom = 0.0;
                for (std::size_t j = 0; j < n_ctx; ++j) {
                    if (!mask.at(i, j)) continue;
                    att[j] = std::exp(att[j] - mx);
                    denom += att[j];
                }
                double* crow = ctx.data.data() + i * d + off;
                for (std::size_t j = 0; j < n_ctx; ++j) {
                    if (!mask.at(i, j)) continue;
                    const double w = att[j] / denom;
                    const double* vrow = val_row(j) + off;
                    for (std::size_t e = 0; e < dh; ++e) crow[e] += w * vrow[e];
                }
            }
        }

        Matrix attn_out = detail::linear(ctx, layer.wo, layer.bo);
        for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += attn_out.data[i];

        detail::layer_norm_rows(x, layer.ln2_g.value, layer.ln2_b.value, h);
        Matrix m1 = detail::linear(h, layer.w1, layer.b1);
        for (double& mv : m1.data) mv = detail::gelu_scalar(mv);
        Matrix m2 = detail::linear(m1, layer.w2, layer.b2);
        for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += m2.data[i];
    }

    detail::layer_norm_rows(x, params.lnf_g.value, params.lnf_b.value, h);
    Matrix logits = detail::linear(h, params.w_out, params.b_out);
    Matrix probs = softmax_rows(logits);
    require_finite(probs, "forward output");
    return probs;
}

// Plain causal forward over a sequence: lower-triangular mask, consecutive
// positions, no cache.
inline Matrix forward_causal(const ModelParams& params, std::span<const int> tokens) {
    AttnMask mask = AttnMask::lower_triangular(tokens.size());
    std::vector<int> positions(tokens.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
    return forward(params, tokens, mask, positions);
}

// ---------------------------------------------------------------------------
// Taped forward (training path)

struct LayerVars {
    Tape::Var ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
};

struct ModelVars {
    Tape::Var tok_emb, pos_emb;
    std::vector<LayerVars> layers;
    Tape::Var lnf_g, lnf_b, w_out, b_out;
};

inline ModelVars leaf_model(Tape& tape, const ModelParams& params) {
    ModelVars v;
    v.tok_emb = tape.leaf(params.tok_emb.value);
    v.pos_emb = tape.leaf(params.pos_emb.value);
    for (const auto& layer : params.layers) {
        LayerVars lv;
        lv.ln1_g = tape.leaf(layer.ln1_g.value);
        lv.ln1_b = tape.leaf(layer.ln1_b.value);
        lv.wq = tape.leaf(layer.wq.value);
        lv.bq = tape.leaf(layer.bq.value);
        lv.wk = tape.leaf(layer.wk.value);
        lv.bk = tape.leaf(layer.bk.value);
        lv.wv = tape.leaf(layer.wv.value);
        lv.bv = tape.leaf(layer.bv.value);
        lv.wo = tape.leaf(layer.wo.value);
        lv.bo = tape.leaf(layer.bo.value);
        lv.ln2_g = tape.leaf(layer.ln2_g.value);
        lv.ln2_b = tape.leaf(layer.ln2_b.value);
        lv.w1 = tape.leaf(layer.w1.value);
        lv.b1 = tape.leaf(layer.b1.value);
        lv.w2 = tape.leaf(layer.w2.value);
        lv.b2 = tape.leaf(layer.b2.value);
        v.layers.push_back(lv);
    }
    v.lnf_g = tape.leaf(params.lnf_g.value);
    v.lnf_b = tape.leaf(params.lnf_b.value);
    v.w_out = tape.leaf(params.w_out.value);
    v.b_out = tape.leaf(params.b_out.value);
    return v;
}

// Adds each leaf's tape gradient into the matching ParamTensor::grad.
inline void accumulate_param_grads(const Tape& tape, const ModelVars& vars, ModelParams& params) {
    auto add = [&](Tape::Var v, ParamTensor& p) {
        const Matrix& g = tape.grad(v);
        for (std::size_t i = 0; i < g.size(); ++i) p.grad.data[i] += g.data[i];
    };
    add(vars.tok_emb, params.tok_emb);
    add(vars.pos_emb, params.pos_emb);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const LayerVars& lv = vars.layers[l];
        LayerParams& lp = params.layers[l];
        add(lv.ln1_g, lp.ln1_g);
        add(lv.ln1_b, lp.ln1_b);
        add(lv.wq, lp.wq);
        add(lv.bq, lp.bq);
        add(lv.wk, lp.wk);
        add(lv.bk, lp.bk);
        add(lv.wv, lp.wv);
        add(lv.bv, lp.bv);
        add(lv.wo, lp.wo);
        add(lv.bo, lp.bo);
        add(lv.ln2_g, lp.ln2_g);
        add(lv.ln2_b, lp.ln2_b);
        add(lv.w1, lp.w1);
        add(lv.b1, lp.b1);
        add(lv.w2, lp.w2);
        add(lv.b2, lp.b2);
    }
    add(vars.lnf_g, params.lnf_g);
    add(vars.lnf_b, params.lnf_b);
    add(vars.w_out, params.w_out);
    add(vars.b_out, params.b_out);
}

// Causal taped forward over one sequence; returns the probability rows node.
inline Tape::Var causal_probs(Tape& tape, const ModelVars& vars, const ModelConfig& cfg,
                              std::span<const int> tokens) {
    const std::size_t n = tokens.size();
    const std::size_t dh = cfg.head_dim();
    if (n == 0) throw ShapeError("causal_probs: empty sequence");
    if (n > cfg.max_position) throw ConfigError("causal_probs: sequence longer than max_position");

    std::vector<int> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = static_cast<int>(i);

    Matrix mask_add(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) mask_add(i, j) = kMaskedLogit;
    }

    Tape::Var x = tape.add(tape.embed_rows(vars.tok_emb, tokens),
                           tape.embed_rows(vars.pos_emb, positions));
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    for (const LayerVars& lv : vars.layers) {
        Tape::Var h = tape.layer_norm(x, lv.ln1_g, lv.ln1_b);
        Tape::Var q = tape.add_row_bias(tape.matmul(h, lv.wq), lv.bq);
        Tape::Var k = tape.add_row_bias(tape.matmul(h, lv.wk), lv.bk);
        Tape::Var v = tape.add_row_bias(tape.matmul(h, lv.wv), lv.bv);

        std::vector<Tape::Var> heads;
        heads.reserve(cfg.n_heads);
        for (std::size_t head = 0; head < cfg.n_heads; ++head) {
            const std::size_t off = head * dh;
            Tape::Var qh = tape.slice_cols(q, off, dh);
            Tape::Var kh = tape.slice_cols(k, off, dh);
            Tape::Var vh = tape.slice_cols(v, off, dh);
            Tape::Var scores = tape.add_const(tape.scale(tape.matmul_nt(qh, kh), att_scale), mask_add);
            Tape::Var att = tape.softmax_rows(scores);
            heads.push_back(tape.matmul(att, vh));
        }
        Tape::Var ctx = tape.concat_cols(heads);
        Tape::Var attn_out = tape.add_row_bias(tape.matmul(ctx, lv.wo), lv.bo);
        x = tape.add(x, attn_out);

        Tape::Var h2 = tape.layer_norm(x, lv.ln2_g, lv.ln2_b);
        Tape::Var m1 = tape.gelu(tape.add_row_bias(tape.matmul(h2, lv.w1), lv.b1));
        Tape::Var m2 = tape.add_row_bias(tape.matmul(m1, lv.w2), lv.b2);
        x = tape.add(x, m2);
    }

    Tape::Var hf = tape.layer_norm(x, vars.lnf_g, vars.lnf_b);
    Tape::Var logits = tape.add_row_bias(tape.matmul(hf, vars.w_out), vars.b_out);
    return tape.softmax_rows(logits);
}

}  // namespace space
