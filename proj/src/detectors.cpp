#include "wmf/detectors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace wmf {

void DetectorConfig::validate() const {
    if (modification_threshold < 0.0) {
        throw DomainError("M_T must be >= 0");
    }
    if (grid_size == 0) {
        throw DomainError("grid_size must be >= 1");
    }
    if (!(z_lo < z_hi)) {
        throw DomainError("z_lo must be < z_hi");
    }
}

ConsistencyTrace replay_consistency(const LanguageModelSource& lm,
                                    const WatermarkKey& key, const Sequence& seq,
                                    const DetectorConfig& cfg) {
    cfg.validate();
    key.validate();
    const GenParams& params = seq.params;

    std::vector<TokenId> all;
    std::size_t first_scored = 0;
    if (cfg.prompt_mode == PromptMode::with_prompt) {
        all = seq.prompt;
        all.insert(all.end(), seq.tokens.begin(), seq.tokens.end());
    } else {
        // prompt unavailable: texture keys of the first n_ct tokens are
        // unrecoverable, so they are excluded from scoring and from n
        all = seq.tokens;
        first_scored = params.n_ct;
    }
    std::size_t base = (cfg.prompt_mode == PromptMode::with_prompt) ? seq.prompt.size() : 0;
    if (seq.tokens.size() <= first_scored) {
        throw DomainError("sequence too short to score");
    }

    ConsistencyTrace trace;
    trace.points.reserve(seq.tokens.size() - first_scored);
    for (std::size_t i = first_scored; i < seq.tokens.size(); ++i) {
        std::size_t pos = base + i;
        std::span<const TokenId> context(all.data(), pos);
        ProbDist dist = filtered_next(lm, context, params);
        Theta th = theta(key, texture_key(all, pos, params.n_ct));
        TokenId sampled = sample_delta(dist, th);

        TracePoint pt;
        TokenId present = seq.tokens[i];
        pt.consistent = (sampled == present);
        pt.p_model = present < dist.probs.size() ? dist.probs[present] : 0.0;
        trace.points.push_back(pt);
    }
    return trace;
}

std::size_t idd_score(const ConsistencyTrace& trace) {
    if (trace.points.empty()) {
        throw DomainError("idd_score on an empty trace");
    }
    std::size_t n_it = 0;
    for (const auto& pt : trace.points) {
        if (!pt.consistent) {
            ++n_it;
        }
    }
    return n_it;
}

bool idd_decide(std::size_t n_it, std::uint32_t n_ct, double modification_threshold) {
    if (n_ct == 0) {
        throw DomainError("n_ct must be >= 1");
    }
    return static_cast<double>(n_it) / n_ct > modification_threshold;
}

double drllr(const ConsistencyTrace& trace) {
    if (trace.points.empty()) {
        throw DomainError("drllr on an empty trace");
    }
    double sum = 0.0;
    for (const auto& pt : trace.points) {
        if (pt.consistent) {
            if (pt.p_model <= 0.0) {
                throw DomainError("consistent position with p_model = 0: replay is broken");
            }
            sum += std::log(1.0 / pt.p_model);
        }
        // inconsistent tokens score 0: dropped, not -inf
    }
    return sum / static_cast<double>(trace.points.size());
}

double mmllr(const ConsistencyTrace& trace, std::uint32_t grid_size) {
    if (grid_size == 0) {
        throw DomainError("grid_size must be >= 1");
    }
    if (trace.points.empty()) {
        throw DomainError("mmllr on an empty trace");
    }
    // Maximin construction: max over the smoothing grid, min over tokens, of
    // the per-token likelihood ratio 1/p clipped to the d-smoothing band.
    // Deliberately ignores the consistency flags -- they are exactly what
    // edits corrupt -- and the min means a handful of implausible tokens
    // cannot raise the score; only the sequence's most ordinary token counts.
    // Conservative by design; d = 1 gives the trivial 0 score.
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint32_t step = 1; step <= grid_size; ++step) {
        double d = static_cast<double>(step) / grid_size;
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& pt : trace.points) {
            // p_model = 0 (token outside the filtered support) hits the 1/d cap
            double ratio = pt.p_model > 0.0 ? std::min(1.0 / pt.p_model, 1.0 / d) : 1.0 / d;
            worst = std::min(worst, std::log((1.0 - d) * ratio + d));
        }
        best = std::max(best, worst);
    }
    return best;
}

KgwVerdict kgw_decide(double z, double z_lo, double z_hi) {
    if (!(z_lo < z_hi)) {
        throw DomainError("z_lo must be < z_hi");
    }
    if (z >= z_hi) {
        return KgwVerdict::watermarked_clean;
    }
    if (z >= z_lo) {
        return KgwVerdict::watermarked_modified;
    }
    return KgwVerdict::unwatermarked;
}

DetectionReport detect(const LanguageModelSource& lm, const WatermarkKey& key,
                       const Sequence& seq, const DetectorConfig& cfg) {
    ConsistencyTrace trace = replay_consistency(lm, key, seq, cfg);
    DetectionReport report;
    report.thresholds = cfg;
    report.n_it = idd_score(trace);
    report.m_flag = idd_decide(report.n_it, seq.params.n_ct, cfg.modification_threshold);
    report.drllr_avg = drllr(trace);
    report.mmllr = mmllr(trace, cfg.grid_size);
    if (seq.watermark == WatermarkMode::kgw) {
        KgwParams kp;
        kp.gen = seq.params;
        report.z = z_score(seq, key, kp, lm.vocab_size());
    }
    report.verdict_watermark = report.drllr_avg > cfg.wm_threshold;
    report.verdict_modified = report.m_flag;
    return report;
}

std::string DetectionReport::to_json() const {
    nlohmann::json j{{"n_it", n_it},
                     {"m_flag", m_flag},
                     {"drllr_avg", drllr_avg},
                     {"mmllr", mmllr},
                     {"verdict_watermark", verdict_watermark},
                     {"verdict_modified", verdict_modified},
                     {"thresholds",
                      {{"mt", thresholds.modification_threshold},
                       {"wm_threshold", thresholds.wm_threshold},
                       {"grid_size", thresholds.grid_size},
                       {"z_lo", thresholds.z_lo},
                       {"z_hi", thresholds.z_hi}}}};
    if (z) {
        j["z"] = *z;
    }
    return j.dump();
}

} // namespace wmf
