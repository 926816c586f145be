#pragma once

#include "wmf/cipher.hpp"
#include "wmf/rng.hpp"
#include "wmf/token_model.hpp"

#include <optional>
#include <string>

namespace wmf {

enum class FilterOrder { k_then_p, p_then_k };
enum class WatermarkMode { none, delta, kgw };

struct GenParams {
    std::uint32_t n_ct = 5;
    std::uint32_t top_k = 50;
    double top_p = 0.9;
    FilterOrder filter_order = FilterOrder::k_then_p;
    std::uint32_t max_len = 30;
    std::uint64_t rng_seed = 0; // plain sampling only
};

struct AttackInfo {
    std::string kind;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> sites; // positions in the attacked sequence
};

struct Sequence {
    std::vector<TokenId> prompt;
    std::vector<TokenId> tokens;
    GenParams params;
    WatermarkMode watermark = WatermarkMode::none;
    std::string key_id;
    std::optional<AttackInfo> attack;
};

// Applies top-k/top-p in the recorded order. The single code path shared by
// generation and detection replay.
ProbDist apply_filters(const ProbDist& dist, const GenParams& params);

// Filtered next-token distribution via the source's (possibly fused)
// dist_next_filtered. Generation and replay must both call this.
ProbDist filtered_next(const LanguageModelSource& lm, std::span<const TokenId> context,
                       const GenParams& params);

// Inverse-CDF pick: smallest t with cumsum(probs[0..t]) > theta, cumulative
// order ascending by token id. Rounding at theta -> 1 clamps to the largest
// support token.
TokenId sample_delta(const ProbDist& dist, Theta th);

// Ordinary seeded sampling through the same inverse CDF (u from a splitmix64
// stream instead of the cipher).
TokenId sample_plain(const ProbDist& dist, SplitMix64& rng);

Sequence generate_watermarked(const LanguageModelSource& lm,
                              std::span<const TokenId> prompt,
                              const WatermarkKey& key, const GenParams& params);

Sequence generate_plain(const LanguageModelSource& lm,
                        std::span<const TokenId> prompt, const GenParams& params);

// JSONL dataset format
std::string sequence_to_json(const Sequence& seq);
Sequence sequence_from_json(const std::string& line);
void save_dataset(const std::vector<Sequence>& seqs, const std::string& path);
std::vector<Sequence> load_dataset(const std::string& path);

std::string watermark_mode_name(WatermarkMode mode);
WatermarkMode watermark_mode_from_name(const std::string& name);

} // namespace wmf
