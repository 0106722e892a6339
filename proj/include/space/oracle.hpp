#pragma once

// Brute-force machinery behind the losslessness claim: enumerate the exact
// AR distribution over outputs up to a horizon (EOS absorbing, temperature 1,
// no truncation), collect empirical distributions from any generator, and
// compare by total variation against a sampled-AR control so the bound
// self-calibrates to sampling noise.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "space/decoder.hpp"
#include "space/model.hpp"

namespace space {

// Outcome -> probability. Outcomes are generated token sequences with EOS
// excluded: length < horizon means EOS fired, length == horizon means the
// cap was hit.
using SequenceDistribution = std::map<std::vector<int>, double>;

inline constexpr double kEnumerationGuard = 1e6;

inline void check_enumeration_guard(std::size_t vocab_size, std::size_t horizon) {
    double estimate = 1.0;
    for (std::size_t i = 0; i < horizon; ++i) estimate *= static_cast<double>(vocab_size);
    if (estimate > kEnumerationGuard) {
        std::ostringstream msg;
        msg << "enumeration too large: vocab " << vocab_size << " ^ horizon " << horizon
            << " ~= " << estimate << " sequences (limit " << kEnumerationGuard << ")";
        throw GuardError(msg.str());
    }
}

namespace detail {

inline void exact_ar_dfs(const ModelParams& params, std::vector<int>& context,
                         std::vector<int>& generated, double prob, std::size_t horizon,
                         SequenceDistribution& dist) {
    if (generated.size() == horizon) {
        dist[generated] += prob;
        return;
    }
    const Matrix rows = forward_causal(params, context);
    const auto last = rows.row(rows.rows - 1);
    const int eos = params.config.eos_token_id;
    for (std::size_t t = 0; t < last.size(); ++t) {
        const double p = prob * last[t];
        if (p == 0.0) continue;
        if (static_cast<int>(t) == eos) {
            dist[generated] += p;
        } else {
            context.push_back(static_cast<int>(t));
            generated.push_back(static_cast<int>(t));
            exact_ar_dfs(params, context, generated, p, horizon, dist);
            generated.pop_back();
            context.pop_back();
        }
    }
}

}  // namespace detail

inline SequenceDistribution exact_ar_distribution(const ModelParams& params,
                                                  std::span<const int> prompt,
                                                  std::size_t horizon) {
    check_enumeration_guard(params.config.vocab_size, horizon);
    if (prompt.empty()) throw LayoutError("empty prompt");
    SequenceDistribution dist;
    std::vector<int> context(prompt.begin(), prompt.end());
    std::vector<int> generated;
    detail::exact_ar_dfs(params, context, generated, 1.0, horizon, dist);
    return dist;
}

// One generation run given a per-run seed; returns the produced tokens.
using GeneratorFn = std::function<std::vector<int>(std::uint64_t run_seed)>;

inline std::uint64_t run_seed_for(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    return detail::splitmix64(state);
}

inline SequenceDistribution empirical_distribution(const GeneratorFn& generator,
                                                   std::size_t n_samples, std::uint64_t seed) {
    std::map<std::vector<int>, std::uint64_t> counts;
    for (std::size_t i = 0; i < n_samples; ++i) {
        counts[generator(run_seed_for(seed, i))] += 1;
    }
    SequenceDistribution dist;
    for (const auto& [sequence, count] : counts) {
        dist[sequence] = static_cast<double>(count) / static_cast<double>(n_samples);
    }
    return dist;
}

inline double tv_distance(const SequenceDistribution& a, const SequenceDistribution& b) {
    double total = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            total += std::abs(ia->second);
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            total += std::abs(ib->second);
            ++ib;
        } else {
            total += std::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return 0.5 * total;
}

struct EquivalenceReport {
    std::size_t horizon = 0;
    std::size_t k = 0;
    std::size_t n_samples = 0;
    std::size_t support_exact = 0;
    std::size_t support_space = 0;
    std::size_t support_control = 0;
    double tv_space = 0.0;
    double tv_control = 0.0;
    bool has_paper_literal = false;
    double tv_paper_literal = 0.0;
    bool pass = false;

    std::string to_text() const {
        std::ostringstream out;
        out << "samples              " << n_samples << "\n"
            << "horizon              " << horizon << "\n"
            << "k                    " << k << "\n"
            << "support exact        " << support_exact << "\n"
            << "support sampled-ar   " << support_control << "\n"
            << "support space        " << support_space << "\n"
            << "tv(exact, sampled-ar) " << tv_control << "\n"
            << "tv(exact, space)      " << tv_space << "\n";
        if (has_paper_literal) {
            out << "tv(exact, paper-literal) " << tv_paper_literal << " (diagnostic)\n";
        }
        out << "result               " << (pass ? "PASS" : "FAIL") << "\n";
        return out.str();
    }
};

// TV(exact AR, empirical SPACE) against a sampled-AR control of the same
// sample count; PASS iff the SPACE distance is within 0.01 of the control
// and both are below 0.03.
inline EquivalenceReport equivalence_report(const ModelParams& params, std::span<const int> prompt,
                                            std::size_t horizon, std::size_t k,
                                            std::size_t n_samples, std::uint64_t seed,
                                            bool include_paper_literal = false) {
    const SequenceDistribution exact = exact_ar_distribution(params, prompt, horizon);

    DecodeConfig base;
    base.k = k;
    base.sampling.mode = SamplingMode::Stochastic;
    base.sampling.temperature = 1.0;
    base.sampling.top_p = 1.0;
    base.sampling.top_k = 0;
    base.verification = VerificationMode::LosslessResidual;
    base.max_new_tokens = horizon;

    std::vector<int> prompt_copy(prompt.begin(), prompt.end());
    auto ar_gen = [&params, prompt_copy, base](std::uint64_t run_seed) {
        DecodeConfig c = base;
        c.seed = run_seed;
        return ar_generate(params, prompt_copy, c).tokens;
    };
    auto space_gen = [&params, prompt_copy, base](std::uint64_t run_seed) {
        DecodeConfig c = base;
        c.seed = run_seed;
        return space_generate(params, prompt_copy, c).tokens;
    };

    EquivalenceReport report;
    report.horizon = horizon;
    report.k = k;
    report.n_samples = n_samples;
    report.support_exact = exact.size();

    const SequenceDistribution control = empirical_distribution(ar_gen, n_samples, seed);
    const SequenceDistribution sampled_space =
        empirical_distribution(space_gen, n_samples, seed + 1);
    report.support_control = control.size();
    report.support_space = sampled_space.size();
    report.tv_control = tv_distance(exact, control);
    report.tv_space = tv_distance(exact, sampled_space);

    if (include_paper_literal) {
        auto literal_gen = [&params, prompt_copy, base](std::uint64_t run_seed) {
            DecodeConfig c = base;
            c.verification = VerificationMode::PaperLiteral;
            c.seed = run_seed;
            return space_generate(params, prompt_copy, c).tokens;
        };
        report.has_paper_literal = true;
        report.tv_paper_literal =
            tv_distance(exact, empirical_distribution(literal_gen, n_samples, seed + 2));
    }

    report.pass = report.tv_space <= report.tv_control + 0.01 && report.tv_space < 0.03 &&
                  report.tv_control < 0.03;
    return report;
}

inline void save_distribution_csv(const SequenceDistribution& dist, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open distribution csv for writing: " + path);
    out << "sequence,probability\n";
    char buf[32];
    for (const auto& [sequence, prob] : dist) {
        for (std::size_t i = 0; i < sequence.size(); ++i) {
            if (i) out << ' ';
            out << sequence[i];
        }
        std::snprintf(buf, sizeof(buf), ",%.12g\n", prob);
        out << buf;
    }
}

}  // namespace space
