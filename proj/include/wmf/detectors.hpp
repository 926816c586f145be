#pragma once

#include "wmf/kgw.hpp"

#include <optional>

namespace wmf {

enum class PromptMode { with_prompt, skip_first_window };

struct DetectorConfig {
    double modification_threshold = 0.2; // M_T
    double wm_threshold = 0.0;           // drllr_avg decision threshold, from calibrate
    std::uint32_t grid_size = 10;
    double z_hi = 4.0;
    double z_lo = 2.0;
    PromptMode prompt_mode = PromptMode::with_prompt;

    void validate() const;
};

struct TracePoint {
    bool consistent = false;
    double p_model = 0.0;          // filtered P_M of the text's token
    std::optional<bool> green;     // KGW sequences only
};

struct ConsistencyTrace {
    std::vector<TracePoint> points;
    std::size_t n() const { return points.size(); }
};

enum class KgwVerdict { unwatermarked, watermarked_modified, watermarked_clean };

struct DetectionReport {
    std::size_t n_it = 0;
    bool m_flag = false;
    double drllr_avg = 0.0;
    double mmllr = 0.0;
    std::optional<double> z;
    bool verdict_watermark = false;
    bool verdict_modified = false;
    DetectorConfig thresholds;

    std::string to_json() const;
};

// Replays the delta-reweight sampler over the text's own context: rebuilds
// the filtered dist, derives theta, and compares the sampled token against
// the token actually present.
ConsistencyTrace replay_consistency(const LanguageModelSource& lm,
                                    const WatermarkKey& key, const Sequence& seq,
                                    const DetectorConfig& cfg);

std::size_t idd_score(const ConsistencyTrace& trace);

// true iff n_it / n_ct > M_T (strict)
bool idd_decide(std::size_t n_it, std::uint32_t n_ct, double modification_threshold);

// Per-token log(1/p_model) for consistent positions, 0 for inconsistent ones;
// averaged over all scored positions.
double drllr(const ConsistencyTrace& trace);

// Maximin LLR: max over d in {1/g, ..., 1}, min over tokens, of
// log((1-d)*min(1/p_model, 1/d) + d). Always finite and >= 0; d = 1 is the
// trivial 0 score.
double mmllr(const ConsistencyTrace& trace, std::uint32_t grid_size);

KgwVerdict kgw_decide(double z, double z_lo, double z_hi);

DetectionReport detect(const LanguageModelSource& lm, const WatermarkKey& key,
                       const Sequence& seq, const DetectorConfig& cfg);

} // namespace wmf
