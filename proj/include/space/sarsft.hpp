#pragma once

// SAR-SFT: each sample is left as a plain AR sample with probability p_ar;
// otherwise a position m in {1..N-k} is drawn, the answer is truncated to
// y_1..y_{m-1} followed by k mask tokens, and the model is supervised on
// y_1..y_{m-1} (AR part) plus y_m..y_{m+k} predicted at the last real
// position and the k mask slots. Training itself is a standard causal
// forward — only the dataloader changes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "space/corpus.hpp"
#include "space/model.hpp"

namespace space {

struct MaskedSample {
    std::vector<int> input;              // prompt + (possibly masked) answer
    std::vector<int> targets;            // next-token target per position; -1 unsupervised
    std::vector<std::uint8_t> loss_mask; // 1 on supervised positions
    bool masked = false;                 // whether the substitution branch was taken
    std::size_t m = 0;                   // the drawn position (1-based), 0 for AR samples

    std::size_t supervised_count() const {
        std::size_t n = 0;
        for (std::uint8_t b : loss_mask) n += b;
        return n;
    }
};

struct SarSftConfig {
    std::size_t k = 5;
    double p_ar = 0.5;
    double learning_rate = 3e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t epochs = 10;
    std::size_t batch_size = 4;
    double gradient_clip = 1.0;
    std::uint64_t seed = 7;

    void validate() const {
        if (k == 0) throw ConfigError("k must be >= 1");
        if (p_ar < 0.0 || p_ar > 1.0) throw ConfigError("p_ar must be in [0, 1]");
        if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
        if (epochs == 0 || batch_size == 0) throw ConfigError("epochs and batch_size must be positive");
        if (gradient_clip < 0.0) throw ConfigError("gradient_clip must be >= 0");
    }
};

inline MaskedSample apply_sar_masking(const TrainingSample& sample, std::size_t k, double p_ar,
                                      int mask_token_id, Rng& rng) {
    const std::size_t Lp = sample.prompt.size();
    const std::size_t N = sample.answer.size();
    if (N == 0) throw ConfigError("sample with empty answer");
    for (int t : sample.answer) {
        if (t == mask_token_id) throw ConfigError("mask token in training answer");
    }
    for (int t : sample.prompt) {
        if (t == mask_token_id) throw ConfigError("mask token in training prompt");
    }

    MaskedSample out;
    const bool take_ar = N < k + 1 || rng.uniform() < p_ar;

    if (take_ar) {
        out.input.reserve(Lp + N);
        out.input.insert(out.input.end(), sample.prompt.begin(), sample.prompt.end());
        out.input.insert(out.input.end(), sample.answer.begin(), sample.answer.end());
        out.targets.assign(out.input.size(), -1);
        out.loss_mask.assign(out.input.size(), 0);
        // Position Lp-1+t predicts y_{t+1}; the final answer token has no target.
        for (std::size_t t = 0; t < N; ++t) {
            out.targets[Lp - 1 + t] = sample.answer[t];
            out.loss_mask[Lp - 1 + t] = 1;
        }
        return out;
    }

    const std::size_t m = 1 + rng.below(N - k);  // m in {1..N-k}
    out.masked = true;
    out.m = m;
    out.input.reserve(Lp + m - 1 + k);
    out.input.insert(out.input.end(), sample.prompt.begin(), sample.prompt.end());
    out.input.insert(out.input.end(), sample.answer.begin(),
                     sample.answer.begin() + static_cast<std::ptrdiff_t>(m - 1));
    for (std::size_t i = 0; i < k; ++i) out.input.push_back(mask_token_id);
    out.targets.assign(out.input.size(), -1);
    out.loss_mask.assign(out.input.size(), 0);
    // AR region plus the boundary: position Lp-1+t predicts y_{t+1}, t < m.
    for (std::size_t t = 0; t < m; ++t) {
        out.targets[Lp - 1 + t] = sample.answer[t];
        out.loss_mask[Lp - 1 + t] = 1;
    }
    // Mask slot i predicts y_{m+i+1}.
    for (std::size_t i = 0; i < k; ++i) {
        out.targets[Lp + m - 1 + i] = sample.answer[m + i];
        out.loss_mask[Lp + m - 1 + i] = 1;
    }
    return out;
}

// Mean (or sum) of -log p(target) over the supervised positions, given
// probability rows from a causal forward over masked.input.
inline double sar_loss_sum(const Matrix& prob_rows, const MaskedSample& masked) {
    if (prob_rows.rows != masked.input.size()) {
        throw ShapeError("sar_loss: rows " + std::to_string(prob_rows.rows) + " vs input " +
                         std::to_string(masked.input.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < prob_rows.rows; ++i) {
        if (!masked.loss_mask[i]) continue;
        total += cross_entropy(prob_rows.row(i), static_cast<std::size_t>(masked.targets[i]));
    }
    return total;
}

inline double sar_loss(const Matrix& prob_rows, const MaskedSample& masked) {
    const std::size_t n = masked.supervised_count();
    if (n == 0) return 0.0;
    return sar_loss_sum(prob_rows, masked) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Training loop

struct LossPoint {
    std::size_t step = 0;
    double loss = 0.0;
};

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::size_t t = 0;
};

// Progress hook, called after every epoch with the running params and the
// epoch's mean loss; use it to write per-epoch checkpoints.
using EpochCallback = std::function<void(std::size_t epoch, ModelParams& params, double mean_loss)>;

inline std::vector<LossPoint> train(ModelParams& params, const Corpus& corpus,
                                    const SarSftConfig& config, const EpochCallback& on_epoch = {}) {
    config.validate();
    if (corpus.empty()) throw ConfigError("empty corpus");
    const ModelConfig& mc = params.config;
    for (const TrainingSample& s : corpus) {
        if (s.prompt.empty()) throw ConfigError("sample with empty prompt");
        if (s.prompt.size() + s.answer.size() > mc.max_position) {
            throw ConfigError("sample longer than max_position");
        }
    }

    std::vector<ParamTensor*> plist = params.param_list();
    AdamState adam;
    adam.m.reserve(plist.size());
    adam.v.reserve(plist.size());
    for (ParamTensor* p : plist) {
        adam.m.emplace_back(p->value.rows, p->value.cols);
        adam.v.emplace_back(p->value.rows, p->value.cols);
    }

    const std::size_t batches_per_epoch = (corpus.size() + config.batch_size - 1) / config.batch_size;
    const std::size_t total_steps = batches_per_epoch * config.epochs;
    std::vector<LossPoint> curve;
    curve.reserve(total_steps);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        // Deterministic per-epoch shuffle; masking rng is keyed per
        // (seed, epoch, sample) so batch assembly order is irrelevant.
        std::vector<std::size_t> order(corpus.size());
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = Rng::stream(config.seed, 0x5F, epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        }

        double epoch_loss_sum = 0.0;
        std::size_t epoch_batches = 0;

        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const std::size_t begin = b * config.batch_size;
            const std::size_t end = std::min(begin + config.batch_size, corpus.size());

            std::vector<MaskedSample> batch;
            batch.reserve(end - begin);
            std::size_t supervised_total = 0;
            for (std::size_t i = begin; i < end; ++i) {
                Rng mask_rng = Rng::stream(config.seed, 0x3A, epoch, order[i]);
                batch.push_back(apply_sar_masking(corpus[order[i]], config.k, config.p_ar,
                                                  mc.mask_token_id, mask_rng));
                supervised_total += batch.back().supervised_count();
            }
            if (supervised_total == 0) continue;

            params.zero_grads();
            double batch_nll = 0.0;
            for (const MaskedSample& ms : batch) {
                Tape tape;
                ModelVars vars = leaf_model(tape, params);
                Tape::Var probs = causal_probs(tape, vars, mc, ms.input);
                Tape::Var nll = tape.nll_sum(probs, ms.targets, ms.loss_mask);
                batch_nll += tape.value(nll)(0, 0);
                tape.backward(nll, 1.0 / static_cast<double>(supervised_total));
                accumulate_param_grads(tape, vars, params);
            }
            const double batch_loss = batch_nll / static_cast<double>(supervised_total);
            if (!std::isfinite(batch_loss)) {
                throw DivergenceError("non-finite loss at step " + std::to_string(adam.t));
            }

            if (config.gradient_clip > 0.0) {
                double norm_sq = 0.0;
                for (ParamTensor* p : plist) {
                    for (double g : p->grad.data) norm_sq += g * g;
                }
                const double norm = std::sqrt(norm_sq);
                if (norm > config.gradient_clip) {
                    const double scale = config.gradient_clip / norm;
                    for (ParamTensor* p : plist) {
                        for (double& g : p->grad.data) g *= scale;
                    }
                }
            }

            adam.t += 1;
            const double progress = static_cast<double>(adam.t - 1) /
                                    static_cast<double>(total_steps > 1 ? total_steps - 1 : 1);
            const double lr = config.learning_rate * 0.5 * (1.0 + std::cos(M_PI * progress));
            const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam.t));
            const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam.t));
            for (std::size_t pi = 0; pi < plist.size(); ++pi) {
                ParamTensor& p = *plist[pi];
                Matrix& m1 = adam.m[pi];
                Matrix& v2 = adam.v[pi];
                for (std::size_t j = 0; j < p.value.size(); ++j) {
                    const double g = p.grad.data[j];
                    m1.data[j] = config.adam_beta1 * m1.data[j] + (1.0 - config.adam_beta1) * g;
                    v2.data[j] = config.adam_beta2 * v2.data[j] + (1.0 - config.adam_beta2) * g * g;
                    const double mhat = m1.data[j] / bc1;
                    const double vhat = v2.data[j] / bc2;
                    p.value.data[j] -= lr * mhat / (std::sqrt(vhat) + config.adam_eps);
                }
            }

            curve.push_back({adam.t, batch_loss});
            epoch_loss_sum += batch_loss;
            epoch_batches += 1;
        }

        if (on_epoch) {
            const double mean = epoch_batches ? epoch_loss_sum / static_cast<double>(epoch_batches) : 0.0;
            on_epoch(epoch, params, mean);
        }
    }
    return curve;
}

inline void save_loss_curve(const std::vector<LossPoint>& curve, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open loss curve for writing: " + path);
    out << "step,loss\n";
    char buf[64];
    for (const LossPoint& p : curve) {
        std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", p.step, p.loss);
        out << buf;
    }
}

}  // namespace space
