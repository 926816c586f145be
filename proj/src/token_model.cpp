#include "wmf/token_model.hpp"
#include "wmf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wmf {

void Vocab::validate() const {
    if (size < 2) {
        throw DomainError("vocab size must be >= 2");
    }
    if (!surface_forms.empty() && surface_forms.size() != size) {
        throw DomainError("surface_forms must have exactly vocab_size entries");
    }
}

void ProbDist::validate() const {
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0 || !std::isfinite(p)) {
            throw DomainError("ProbDist entries must be finite and >= 0");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw DomainError("ProbDist does not sum to 1 (sum = " + std::to_string(sum) + ")");
    }
}

void ProbDist::renormalize() {
    double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (sum <= 0.0) {
        throw DomainError("cannot renormalize a zero distribution");
    }
    for (double& p : probs) {
        p /= sum;
    }
}

double ProbDist::entropy() const {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    return h;
}

namespace {

// FNV-1a over the context window; seeds the per-context logit stream.
std::uint64_t context_hash(std::uint64_t seed, std::span<const TokenId> window) {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ seed;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    };
    mix(window.size());
    for (TokenId t : window) {
        mix(t);
    }
    return h;
}

} // namespace

ProbDist LanguageModelSource::dist_next_filtered(std::span<const TokenId> context,
                                                 std::uint32_t top_k, double top_p,
                                                 bool k_then_p) const {
    if (k_then_p) {
        return filter_top_p(filter_top_k(dist_next(context), top_k), top_p);
    }
    return filter_top_k(filter_top_p(dist_next(context), top_p), top_k);
}

SyntheticLM::SyntheticLM(std::uint64_t seed, std::uint32_t vocab_size,
                         std::uint32_t context_order, double entropy_level)
    : seed_(seed), vocab_size_(vocab_size), context_order_(context_order),
      entropy_level_(entropy_level) {
    if (vocab_size < 2) {
        throw DomainError("vocab size must be >= 2");
    }
    double max_entropy = std::log(static_cast<double>(vocab_size));
    if (entropy_level <= 0.0 || entropy_level > max_entropy) {
        throw DomainError("entropy_level must be in (0, ln(vocab_size)]");
    }

    // Calibrate the logit scale by bisection over a fixed set of random
    // contexts. Entropy of softmax(scale * logits) decreases monotonically
    // in scale.
    constexpr int kContexts = 48;
    SplitMix64 ctx_rng(seed ^ 0xA5A5A5A5A5A5A5A5ULL);
    std::vector<std::vector<TokenId>> contexts(kContexts);
    for (auto& c : contexts) {
        c.resize(std::max<std::uint32_t>(context_order_, 1));
        for (auto& t : c) {
            t = static_cast<TokenId>(ctx_rng.next_below(vocab_size));
        }
    }
    auto mean_entropy_at = [&](double scale) {
        double acc = 0.0;
        for (const auto& c : contexts) {
            acc += dist_for_scale(c, scale).entropy();
        }
        return acc / kContexts;
    };

    double lo = 1e-4, hi = 1.0;
    while (mean_entropy_at(hi) > entropy_level && hi < 1e6) {
        hi *= 2.0;
    }
    for (int iter = 0; iter < 60; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (mean_entropy_at(mid) > entropy_level) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    logit_scale_ = 0.5 * (lo + hi);
    calibrated_entropy_ = mean_entropy_at(logit_scale_);
}

void SyntheticLM::fill_logits(std::span<const TokenId> context, double scale,
                              std::vector<double>& out) const {
    std::span<const TokenId> window = context;
    if (window.size() > context_order_) {
        window = window.subspan(window.size() - context_order_);
    }
    SplitMix64 rng(context_hash(seed_, window));
    out.resize(vocab_size_);
    for (double& logit : out) {
        logit = scale * rng.next_unit();
    }
}

ProbDist SyntheticLM::dist_for_scale(std::span<const TokenId> context, double scale) const {
    thread_local std::vector<double> logits;
    fill_logits(context, scale, logits);
    double max_logit = *std::max_element(logits.begin(), logits.end());

    ProbDist d;
    d.probs.resize(vocab_size_);
    double sum = 0.0;
    for (std::uint32_t i = 0; i < vocab_size_; ++i) {
        d.probs[i] = std::exp(logits[i] - max_logit);
        sum += d.probs[i];
    }
    for (double& p : d.probs) {
        p /= sum;
    }
    return d;
}

ProbDist SyntheticLM::dist_next_filtered(std::span<const TokenId> context, std::uint32_t top_k,
                                         double top_p, bool k_then_p) const {
    if (!k_then_p || top_k == 0 || top_p <= 0.0 || top_p > 1.0) {
        return LanguageModelSource::dist_next_filtered(context, top_k, top_p, k_then_p);
    }
    if (context.empty()) {
        throw DomainError("context must be non-empty");
    }
    for (TokenId t : context) {
        if (t >= vocab_size_) {
            throw DomainError("token id " + std::to_string(t) + " out of range");
        }
    }

    // fused fast path: select the top-k logits first, then softmax and top-p
    // over the kept set only (renormalizing within the kept set gives the
    // same distribution as full-vocab softmax followed by top-k)
    thread_local std::vector<double> logits;
    thread_local std::vector<std::uint32_t> idx;
    fill_logits(context, logit_scale_, logits);

    idx.resize(vocab_size_);
    std::iota(idx.begin(), idx.end(), 0u);
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
    };
    std::size_t keep = std::min<std::size_t>(top_k, vocab_size_);
    if (keep < vocab_size_) {
        std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep) - 1,
                         idx.end(), better);
        idx.resize(keep);
    }
    std::sort(idx.begin(), idx.end(), better);

    double max_logit = logits[idx.front()];
    double sum = 0.0;
    thread_local std::vector<double> kept_probs;
    kept_probs.resize(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        kept_probs[i] = std::exp(logits[idx[i]] - max_logit);
        sum += kept_probs[i];
    }
    for (double& p : kept_probs) {
        p /= sum;
    }

    // smallest probability-descending prefix with cumulative mass >= p
    std::size_t prefix = keep;
    if (top_p < 1.0) {
        double cum = 0.0;
        for (std::size_t i = 0; i < keep; ++i) {
            cum += kept_probs[i];
            if (cum >= top_p) {
                prefix = i + 1;
                break;
            }
        }
    }

    ProbDist out;
    out.probs.assign(vocab_size_, 0.0);
    if (prefix == keep) {
        for (std::size_t i = 0; i < keep; ++i) {
            out.probs[idx[i]] = kept_probs[i];
        }
    } else {
        double prefix_sum = 0.0;
        for (std::size_t i = 0; i < prefix; ++i) {
            prefix_sum += kept_probs[i];
        }
        for (std::size_t i = 0; i < prefix; ++i) {
            out.probs[idx[i]] = kept_probs[i] / prefix_sum;
        }
    }
    return out;
}

ProbDist SyntheticLM::dist_next(std::span<const TokenId> context) const {
    if (context.empty()) {
        throw DomainError("context must be non-empty");
    }
    for (TokenId t : context) {
        if (t >= vocab_size_) {
            throw DomainError("token id " + std::to_string(t) + " out of range");
        }
    }
    return dist_for_scale(context, logit_scale_);
}

namespace {

// Token ids sorted by probability descending, ties toward lower id.
std::vector<std::uint32_t> order_by_prob(const ProbDist& dist) {
    std::vector<std::uint32_t> idx(dist.probs.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
        return dist.probs[a] > dist.probs[b];
    });
    return idx;
}

} // namespace

ProbDist filter_top_k(const ProbDist& dist, std::uint32_t k) {
    if (k == 0) {
        throw DomainError("top-k requires k >= 1");
    }
    if (k >= dist.probs.size()) {
        ProbDist out = dist;
        out.renormalize();
        return out;
    }
    std::size_t support = 0;
    for (double p : dist.probs) {
        support += p > 0.0;
    }
    if (support <= k) {
        return dist; // nothing to zero; bitwise identity keeps replay stable
    }
    auto idx = order_by_prob(dist);
    ProbDist out;
    out.probs.assign(dist.probs.size(), 0.0);
    for (std::uint32_t i = 0; i < k; ++i) {
        out.probs[idx[i]] = dist.probs[idx[i]];
    }
    out.renormalize();
    return out;
}

ProbDist filter_top_p(const ProbDist& dist, double p) {
    if (p <= 0.0 || p > 1.0) {
        throw DomainError("top-p requires p in (0, 1]");
    }
    auto idx = order_by_prob(dist);
    ProbDist out;
    out.probs.assign(dist.probs.size(), 0.0);
    double cum = 0.0;
    std::size_t kept = 0;
    for (std::uint32_t i : idx) {
        out.probs[i] = dist.probs[i];
        cum += dist.probs[i];
        ++kept;
        if (cum >= p) {
            break;
        }
    }
    std::size_t support = 0;
    for (double q : dist.probs) {
        support += q > 0.0;
    }
    if (kept >= support) {
        return dist; // full support kept: bitwise identity
    }
    out.renormalize();
    return out;
}

} // namespace wmf
