#pragma once

// Synthetic corpora with controllable predictability, plus line-delimited
// JSON persistence ({"prompt": [...], "answer": [...]} per line). All three
// kinds draw only from "usable" token ids — everything except the mask and
// EOS ids — so answers never collide with the special tokens; answers end
// with EOS so trained models learn to stop.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "space/errors.hpp"
#include "space/rng.hpp"

namespace space {

struct TrainingSample {
    std::vector<int> prompt;
    std::vector<int> answer;
};

using Corpus = std::vector<TrainingSample>;

enum class CorpusKind { RepeatPattern, Counting, TemplatedPhrases };

inline CorpusKind corpus_kind_from_string(const std::string& s) {
    if (s == "repeat-pattern") return CorpusKind::RepeatPattern;
    if (s == "counting") return CorpusKind::Counting;
    if (s == "templated-phrases") return CorpusKind::TemplatedPhrases;
    throw ConfigError("unknown corpus kind: " + s);
}

inline const char* corpus_kind_name(CorpusKind k) {
    switch (k) {
        case CorpusKind::RepeatPattern: return "repeat-pattern";
        case CorpusKind::Counting: return "counting";
        case CorpusKind::TemplatedPhrases: return "templated-phrases";
    }
    return "?";
}

struct CorpusParams {
    std::size_t vocab_size = 16;
    int mask_token_id = 1;
    int eos_token_id = 0;
    std::size_t period = 4;        // repeat-pattern period
    std::size_t n_patterns = 4;    // distinct patterns / templates per corpus
    std::size_t prompt_len = 8;
    std::size_t answer_len = 12;   // real tokens before the trailing EOS

    std::vector<int> usable_tokens() const {
        std::vector<int> out;
        for (std::size_t t = 0; t < vocab_size; ++t) {
            const int id = static_cast<int>(t);
            if (id != mask_token_id && id != eos_token_id) out.push_back(id);
        }
        if (out.size() < 2) throw ConfigError("vocab too small for corpus synthesis");
        return out;
    }
};

namespace detail {

// Distinct patterns, no two sharing any rotation, so a full period of
// context always determines the continuation.
inline std::vector<std::vector<int>> make_patterns(const CorpusParams& p, Rng& rng) {
    const std::vector<int> usable = p.usable_tokens();
    std::set<std::vector<int>> rotations;
    std::vector<std::vector<int>> patterns;
    while (patterns.size() < p.n_patterns) {
        std::vector<int> pat(p.period);
        for (int& t : pat) t = usable[rng.below(usable.size())];
        std::vector<std::vector<int>> rots;
        bool fresh = true;
        for (std::size_t s = 0; s < p.period; ++s) {
            std::vector<int> rot(p.period);
            for (std::size_t i = 0; i < p.period; ++i) rot[i] = pat[(s + i) % p.period];
            if (rotations.count(rot)) fresh = false;
            rots.push_back(std::move(rot));
        }
        if (!fresh) continue;
        for (auto& r : rots) rotations.insert(std::move(r));
        patterns.push_back(std::move(pat));
    }
    return patterns;
}

}  // namespace detail

inline Corpus synth_corpus(CorpusKind kind, std::size_t size, std::uint64_t seed,
                           const CorpusParams& p = {}) {
    Rng rng = Rng::stream(seed, 0xC0);
    const std::vector<int> usable = p.usable_tokens();
    Corpus corpus;
    corpus.reserve(size);

    switch (kind) {
        case CorpusKind::RepeatPattern: {
            if (p.prompt_len < p.period) {
                throw ConfigError("repeat-pattern needs prompt_len >= period");
            }
            const auto patterns = detail::make_patterns(p, rng);
            for (std::size_t s = 0; s < size; ++s) {
                const auto& pat = patterns[rng.below(patterns.size())];
                const std::size_t phase = rng.below(p.period);
                TrainingSample sample;
                for (std::size_t i = 0; i < p.prompt_len; ++i) {
                    sample.prompt.push_back(pat[(phase + i) % p.period]);
                }
                for (std::size_t i = 0; i < p.answer_len; ++i) {
                    sample.answer.push_back(pat[(phase + p.prompt_len + i) % p.period]);
                }
                sample.answer.push_back(p.eos_token_id);
                corpus.push_back(std::move(sample));
            }
            break;
        }
        case CorpusKind::Counting: {
            // Successor walk over the usable alphabet, wrapping cyclically.
            for (std::size_t s = 0; s < size; ++s) {
                std::size_t at = rng.below(usable.size());
                TrainingSample sample;
                for (std::size_t i = 0; i < p.prompt_len; ++i) {
                    sample.prompt.push_back(usable[at]);
                    at = (at + 1) % usable.size();
                }
                for (std::size_t i = 0; i < p.answer_len; ++i) {
                    sample.answer.push_back(usable[at]);
                    at = (at + 1) % usable.size();
                }
                sample.answer.push_back(p.eos_token_id);
                corpus.push_back(std::move(sample));
            }
            break;
        }
        case CorpusKind::TemplatedPhrases: {
            // Fixed templates with two slots (-1 and -2 markers); the answer
            // restates both slot fillers, so it is fully determined by the
            // prompt.
            if (p.prompt_len < 3 || p.answer_len < 4) {
                throw ConfigError("templated-phrases needs prompt_len >= 3, answer_len >= 4");
            }
            struct Template {
                std::vector<int> frame;
                std::vector<int> tail;
            };
            std::vector<Template> templates;
            for (std::size_t t = 0; t < p.n_patterns; ++t) {
                Template tpl;
                tpl.frame.resize(p.prompt_len);
                for (int& v : tpl.frame) v = usable[rng.below(usable.size())];
                tpl.frame[1] = -1;
                tpl.frame[p.prompt_len - 1] = -2;
                tpl.tail.resize(p.answer_len);
                for (int& v : tpl.tail) v = usable[rng.below(usable.size())];
                tpl.tail[2] = -1;
                tpl.tail[p.answer_len - 1] = -2;
                templates.push_back(std::move(tpl));
            }
            auto fill = [](const std::vector<int>& frame, int a, int b, std::vector<int>& out) {
                for (int v : frame) out.push_back(v == -1 ? a : (v == -2 ? b : v));
            };
            for (std::size_t s = 0; s < size; ++s) {
                const Template& tpl = templates[rng.below(templates.size())];
                const int slot_a = usable[rng.below(usable.size())];
                const int slot_b = usable[rng.below(usable.size())];
                TrainingSample sample;
                fill(tpl.frame, slot_a, slot_b, sample.prompt);
                fill(tpl.tail, slot_a, slot_b, sample.answer);
                sample.answer.push_back(p.eos_token_id);
                corpus.push_back(std::move(sample));
            }
            break;
        }
    }
    return corpus;
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open corpus for writing: " + path);
    for (const TrainingSample& s : corpus) {
        nlohmann::json line = {{"prompt", s.prompt}, {"answer", s.answer}};
        out << line.dump() << '\n';
    }
    if (!out) throw ConfigError("short write to corpus: " + path);
}

inline Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open corpus: " + path);
    Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
        TrainingSample s;
        s.prompt = j.at("prompt").get<std::vector<int>>();
        s.answer = j.at("answer").get<std::vector<int>>();
        if (s.answer.empty()) {
            throw ConfigError("corpus line " + std::to_string(lineno) + ": empty answer");
        }
        corpus.push_back(std::move(s));
    }
    return corpus;
}

}  // namespace space
