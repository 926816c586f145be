#include "wmf/delta_reweight.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace wmf {

using nlohmann::json;

ProbDist apply_filters(const ProbDist& dist, const GenParams& params) {
    if (params.filter_order == FilterOrder::k_then_p) {
        return filter_top_p(filter_top_k(dist, params.top_k), params.top_p);
    }
    return filter_top_k(filter_top_p(dist, params.top_p), params.top_k);
}

ProbDist filtered_next(const LanguageModelSource& lm, std::span<const TokenId> context,
                       const GenParams& params) {
    return lm.dist_next_filtered(context, params.top_k, params.top_p,
                                 params.filter_order == FilterOrder::k_then_p);
}

TokenId sample_delta(const ProbDist& dist, Theta th) {
    double cum = 0.0;
    TokenId last_support = 0;
    bool any = false;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        if (dist.probs[i] > 0.0) {
            last_support = static_cast<TokenId>(i);
            any = true;
        }
        cum += dist.probs[i];
        if (cum > th.value) {
            // strict >: token i owns the half-open interval [cum_prev, cum)
            return static_cast<TokenId>(i);
        }
    }
    if (!any) {
        throw DomainError("sample_delta on an empty distribution");
    }
    return last_support; // rounding clamp at theta -> 1
}

TokenId sample_plain(const ProbDist& dist, SplitMix64& rng) {
    return sample_delta(dist, Theta{rng.next_unit()});
}

namespace {

Sequence generate_impl(const LanguageModelSource& lm, std::span<const TokenId> prompt,
                       const WatermarkKey* key, const GenParams& params,
                       WatermarkMode mode) {
    if (prompt.empty()) {
        throw DomainError("prompt must be non-empty");
    }
    Sequence seq;
    seq.prompt.assign(prompt.begin(), prompt.end());
    seq.params = params;
    seq.watermark = mode;

    std::vector<TokenId> all(prompt.begin(), prompt.end());
    SplitMix64 rng(params.rng_seed);
    for (std::uint32_t i = 0; i < params.max_len; ++i) {
        ProbDist dist = filtered_next(lm, all, params);
        TokenId t;
        if (mode == WatermarkMode::delta) {
            Theta th = theta(*key, texture_key(all, all.size(), params.n_ct));
            t = sample_delta(dist, th);
        } else {
            t = sample_plain(dist, rng);
        }
        seq.tokens.push_back(t);
        all.push_back(t);
    }
    return seq;
}

} // namespace

Sequence generate_watermarked(const LanguageModelSource& lm,
                              std::span<const TokenId> prompt,
                              const WatermarkKey& key, const GenParams& params) {
    key.validate();
    return generate_impl(lm, prompt, &key, params, WatermarkMode::delta);
}

Sequence generate_plain(const LanguageModelSource& lm,
                        std::span<const TokenId> prompt, const GenParams& params) {
    return generate_impl(lm, prompt, nullptr, params, WatermarkMode::none);
}

std::string watermark_mode_name(WatermarkMode mode) {
    switch (mode) {
        case WatermarkMode::none: return "none";
        case WatermarkMode::delta: return "delta";
        case WatermarkMode::kgw: return "kgw";
    }
    throw DomainError("unknown watermark mode");
}

WatermarkMode watermark_mode_from_name(const std::string& name) {
    if (name == "none") return WatermarkMode::none;
    if (name == "delta") return WatermarkMode::delta;
    if (name == "kgw") return WatermarkMode::kgw;
    throw DomainError("unknown watermark mode: " + name);
}

namespace {

json params_to_json(const GenParams& p) {
    return json{{"n_ct", p.n_ct},
                {"top_k", p.top_k},
                {"top_p", p.top_p},
                {"filter_order", p.filter_order == FilterOrder::k_then_p ? "k_then_p" : "p_then_k"},
                {"max_len", p.max_len},
                {"rng_seed", p.rng_seed}};
}

GenParams params_from_json(const json& j) {
    GenParams p; // absent fields keep the defaults
    p.n_ct = j.value("n_ct", p.n_ct);
    p.top_k = j.value("top_k", p.top_k);
    p.top_p = j.value("top_p", p.top_p);
    std::string order = j.value("filter_order", "k_then_p");
    p.filter_order = order == "p_then_k" ? FilterOrder::p_then_k : FilterOrder::k_then_p;
    p.max_len = j.value("max_len", p.max_len);
    p.rng_seed = j.value("rng_seed", p.rng_seed);
    return p;
}

} // namespace

std::string sequence_to_json(const Sequence& seq) {
    json j{{"prompt", seq.prompt},
           {"tokens", seq.tokens},
           {"watermark", watermark_mode_name(seq.watermark)},
           {"params", params_to_json(seq.params)},
           {"key_id", seq.key_id}};
    if (seq.attack) {
        j["attack"] = json{{"kind", seq.attack->kind},
                           {"epsilon", seq.attack->epsilon},
                           {"seed", seq.attack->seed},
                           {"sites", seq.attack->sites}};
    }
    return j.dump();
}

Sequence sequence_from_json(const std::string& line) {
    json j = json::parse(line);
    Sequence seq;
    seq.prompt = j.at("prompt").get<std::vector<TokenId>>();
    seq.tokens = j.at("tokens").get<std::vector<TokenId>>();
    seq.watermark = watermark_mode_from_name(j.value("watermark", "none"));
    if (j.contains("params")) {
        seq.params = params_from_json(j["params"]);
    }
    seq.key_id = j.value("key_id", "");
    if (j.contains("attack")) {
        AttackInfo a;
        const json& ja = j["attack"];
        a.kind = ja.value("kind", "");
        a.epsilon = ja.value("epsilon", 0.0);
        a.seed = ja.value("seed", std::uint64_t{0});
        a.sites = ja.value("sites", std::vector<std::size_t>{});
        seq.attack = std::move(a);
    }
    return seq;
}

void save_dataset(const std::vector<Sequence>& seqs, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DomainError("cannot open output file: " + path);
    }
    for (const auto& s : seqs) {
        out << sequence_to_json(s) << '\n';
    }
}

std::vector<Sequence> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DomainError("cannot open dataset file: " + path);
    }
    std::vector<Sequence> seqs;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            seqs.push_back(sequence_from_json(line));
        }
    }
    return seqs;
}

} // namespace wmf
