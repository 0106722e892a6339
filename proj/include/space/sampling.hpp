#pragma once

// Token sampling. Stochastic mode warps a distribution by temperature, then
// top-k, then top-p (the crossing token is kept), renormalizing after
// truncation. The same warp is applied to draft rows and verify rows before
// the acceptance test, so both live in the same warped space; with
// temperature 1, top_p 1, top_k 0 the warp is the identity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "space/errors.hpp"
#include "space/rng.hpp"

namespace space {

enum class SamplingMode { Greedy, Stochastic };

struct SamplingConfig {
    SamplingMode mode = SamplingMode::Greedy;
    double temperature = 1.0;
    double top_p = 1.0;
    std::size_t top_k = 0;  // 0 means no top-k truncation

    void validate() const {
        if (temperature <= 0.0) throw ConfigError("temperature must be positive");
        if (top_p <= 0.0 || top_p > 1.0) throw ConfigError("top_p must be in (0, 1]");
    }

    bool is_identity_warp() const {
        return temperature == 1.0 && top_p == 1.0 && top_k == 0;
    }
};

// Lowest token-id wins ties.
inline std::size_t argmax_token(std::span<const double> dist) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i) {
        if (dist[i] > dist[best]) best = i;
    }
    return best;
}

// Full-size warped distribution; entries outside the truncated support are 0.
inline std::vector<double> warp_distribution(std::span<const double> dist,
                                             const SamplingConfig& cfg) {
    std::vector<double> w(dist.begin(), dist.end());
    if (cfg.is_identity_warp()) return w;

    if (cfg.temperature != 1.0) {
        const double inv_t = 1.0 / cfg.temperature;
        double total = 0.0;
        for (double& v : w) {
            v = v > 0.0 ? std::pow(v, inv_t) : 0.0;
            total += v;
        }
        for (double& v : w) v /= total;
    }

    // Sort ids by weight descending, lowest id first among ties.
    std::vector<std::size_t> order(w.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });

    std::size_t keep = order.size();
    if (cfg.top_k > 0 && cfg.top_k < keep) keep = cfg.top_k;

    if (cfg.top_p < 1.0) {
        double kept_total = 0.0;
        for (std::size_t r = 0; r < keep; ++r) kept_total += w[order[r]];
        double cum = 0.0;
        for (std::size_t r = 0; r < keep; ++r) {
            cum += w[order[r]] / kept_total;
            if (cum >= cfg.top_p) {
                keep = r + 1;
                break;
            }
        }
    }

    std::vector<double> out(w.size(), 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < keep; ++r) total += w[order[r]];
    for (std::size_t r = 0; r < keep; ++r) out[order[r]] = w[order[r]] / total;
    return out;
}

// Inverse-CDF draw from a (possibly unnormalized) non-negative vector.
inline std::size_t sample_index(std::span<const double> weights, Rng& rng) {
    double total = 0.0;
    for (double v : weights) total += v;
    if (total <= 0.0) throw ConfigError("sample_index: empty support");
    const double r = rng.uniform() * total;
    double cum = 0.0;
    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        cum += weights[i];
        last_nonzero = i;
        if (r < cum) return i;
    }
    return last_nonzero;
}

inline int sample_token(std::span<const double> dist, const SamplingConfig& cfg, Rng& rng) {
    if (cfg.mode == SamplingMode::Greedy) return static_cast<int>(argmax_token(dist));
    if (cfg.is_identity_warp()) return static_cast<int>(sample_index(dist, rng));
    const std::vector<double> w = warp_distribution(dist, cfg);
    return static_cast<int>(sample_index(w, rng));
}

}  // namespace space
