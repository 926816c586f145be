#include "wmf/kgw.hpp"

#include <cmath>

namespace wmf {

void KgwParams::validate() const {
    if (gamma <= 0.0 || gamma >= 1.0) {
        throw DomainError("gamma must be in (0, 1)");
    }
    if (n_ct_kgw == 0) {
        throw DomainError("n_ct_kgw must be >= 1");
    }
}

ProbDist boost_logits(const ProbDist& dist, const std::vector<bool>& mask,
                      double delta_logit) {
    if (mask.size() != dist.probs.size()) {
        throw DomainError("green mask length must equal vocab size");
    }
    ProbDist out = dist;
    double boost = std::exp(delta_logit);
    for (std::size_t i = 0; i < out.probs.size(); ++i) {
        if (mask[i]) {
            out.probs[i] *= boost;
        }
    }
    out.renormalize();
    return out;
}

Sequence generate_kgw(const LanguageModelSource& lm, std::span<const TokenId> prompt,
                      const WatermarkKey& key, const KgwParams& params) {
    params.validate();
    key.validate();
    if (prompt.empty()) {
        throw DomainError("prompt must be non-empty");
    }
    Sequence seq;
    seq.prompt.assign(prompt.begin(), prompt.end());
    seq.params = params.gen;
    seq.watermark = WatermarkMode::kgw;

    std::vector<TokenId> all(prompt.begin(), prompt.end());
    SplitMix64 rng(params.gen.rng_seed);
    for (std::uint32_t i = 0; i < params.gen.max_len; ++i) {
        ProbDist dist = filtered_next(lm, all, params.gen);
        auto mask = green_mask(key, texture_key(all, all.size(), params.n_ct_kgw),
                               params.gamma, lm.vocab_size());
        dist = boost_logits(dist, mask, params.delta_logit);
        seq.tokens.push_back(sample_plain(dist, rng));
        all.push_back(seq.tokens.back());
    }
    return seq;
}

std::size_t green_count(const Sequence& seq, const WatermarkKey& key,
                        const KgwParams& params, std::uint32_t vocab_size) {
    params.validate();
    if (seq.tokens.empty()) {
        throw DomainError("green_count requires a non-empty sequence");
    }
    std::vector<TokenId> all = seq.prompt;
    all.insert(all.end(), seq.tokens.begin(), seq.tokens.end());
    std::size_t n_p = seq.prompt.size();
    std::size_t g = 0;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        auto ct = texture_key(all, n_p + i, params.n_ct_kgw);
        auto mask = green_mask(key, ct, params.gamma, vocab_size);
        if (mask[seq.tokens[i]]) {
            ++g;
        }
    }
    return g;
}

double z_score(const Sequence& seq, const WatermarkKey& key,
               const KgwParams& params, std::uint32_t vocab_size) {
    std::size_t g = green_count(seq, key, params, vocab_size);
    double t = static_cast<double>(seq.tokens.size());
    return (static_cast<double>(g) - params.gamma * t) /
           std::sqrt(t * params.gamma * (1.0 - params.gamma));
}

} // namespace wmf
