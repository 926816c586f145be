#pragma once

#include "wmf/delta_reweight.hpp"

namespace wmf {

struct KgwParams {
    double gamma = 0.5;
    double delta_logit = 1.0;
    std::uint32_t n_ct_kgw = 1;
    GenParams gen; // shared filter / max_len / rng_seed fields

    void validate() const;
};

// Exponential tilt: p'_i proportional to p_i * e^delta for green i. Works on
// probability vectors, no raw logits needed from the bridge.
ProbDist boost_logits(const ProbDist& dist, const std::vector<bool>& mask,
                      double delta_logit);

Sequence generate_kgw(const LanguageModelSource& lm, std::span<const TokenId> prompt,
                      const WatermarkKey& key, const KgwParams& params);

// Green-token count, recomputing each position's mask from the (possibly
// attacked) text's own context.
std::size_t green_count(const Sequence& seq, const WatermarkKey& key,
                        const KgwParams& params, std::uint32_t vocab_size);

// z = (g - gamma*T) / sqrt(T*gamma*(1-gamma))
double z_score(const Sequence& seq, const WatermarkKey& key,
               const KgwParams& params, std::uint32_t vocab_size);

} // namespace wmf
