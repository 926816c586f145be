#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmf {

using TokenId = std::uint32_t;

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BridgeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vocab {
    std::uint32_t size = 0;
    std::vector<std::string> surface_forms; // optional, display only

    void validate() const;
};

// Next-token probability vector. Normalized (sum 1 +/- 1e-9), entries >= 0.
struct ProbDist {
    std::vector<double> probs;

    std::size_t vocab_size() const { return probs.size(); }
    void validate() const;
    void renormalize();
    double entropy() const; // nats
};

class LanguageModelSource {
public:
    virtual ~LanguageModelSource() = default;
    virtual std::uint32_t vocab_size() const = 0;
    // Deterministic for a fixed source and context. context must be non-empty
    // and all ids valid.
    virtual ProbDist dist_next(std::span<const TokenId> context) const = 0;

    // dist_next composed with the sampling filters. Sources may override with
    // a fused implementation; generation and detection replay both go through
    // this single entry point, which is what keeps replay bit-exact.
    virtual ProbDist dist_next_filtered(std::span<const TokenId> context,
                                        std::uint32_t top_k, double top_p,
                                        bool k_then_p) const;
};

// Deterministic low-entropy stand-in LM. Distribution for a context is the
// softmax of pseudo-random logits seeded by hash(seed, last context_order
// tokens), scaled so the mean Shannon entropy over random contexts lands
// within 10% of entropy_level (calibrated once at construction).
class SyntheticLM final : public LanguageModelSource {
public:
    SyntheticLM(std::uint64_t seed, std::uint32_t vocab_size,
                std::uint32_t context_order, double entropy_level);

    std::uint32_t vocab_size() const override { return vocab_size_; }
    ProbDist dist_next(std::span<const TokenId> context) const override;
    ProbDist dist_next_filtered(std::span<const TokenId> context, std::uint32_t top_k,
                                double top_p, bool k_then_p) const override;

    double logit_scale() const { return logit_scale_; }
    double mean_entropy() const { return calibrated_entropy_; }

private:
    void fill_logits(std::span<const TokenId> context, double scale,
                     std::vector<double>& out) const;
    ProbDist dist_for_scale(std::span<const TokenId> context, double scale) const;

    std::uint64_t seed_;
    std::uint32_t vocab_size_;
    std::uint32_t context_order_;
    double entropy_level_;
    double logit_scale_ = 1.0;
    double calibrated_entropy_ = 0.0;
};

// Keeps the k highest-probability tokens (ties toward lower id), renormalizes.
ProbDist filter_top_k(const ProbDist& dist, std::uint32_t k);

// Keeps the smallest probability-descending prefix with cumulative mass >= p
// (ties toward lower id), renormalizes.
ProbDist filter_top_p(const ProbDist& dist, double p);

} // namespace wmf
