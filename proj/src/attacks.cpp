#include "wmf/attacks.hpp"

#include <algorithm>
#include <cmath>

namespace wmf {

void AttackSpec::validate() const {
    if (epsilon < 0.0 || epsilon >= 1.0) {
        throw DomainError("epsilon must be in [0, 1)");
    }
}

std::size_t edit_count(double epsilon, std::size_t n) {
    if (epsilon == 0.0) {
        return 0;
    }
    auto edits = static_cast<std::size_t>(
        std::round(epsilon * static_cast<double>(n))); // half away from zero
    return std::max<std::size_t>(edits, 1);
}

namespace {

// k distinct positions from [0, n), ascending, seeded
std::vector<std::size_t> pick_positions(SplitMix64& rng, std::size_t n, std::size_t k) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) {
        all[i] = i;
    }
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + rng.next_below(n - i);
        std::swap(all[i], all[j]);
    }
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

AttackRecord make_record(const Sequence& seq, const AttackSpec& spec) {
    AttackRecord rec;
    rec.original = seq;
    rec.attacked = seq;
    rec.attacked.attack = AttackInfo{attack_kind_name(spec.kind), spec.epsilon, spec.seed, {}};
    return rec;
}

void finish_record(AttackRecord& rec, std::vector<std::size_t> sites) {
    rec.sites = sites;
    rec.attacked.attack->sites = std::move(sites);
}

} // namespace

AttackRecord attack_replace(const Sequence& seq, const AttackSpec& spec,
                            std::uint32_t vocab_size) {
    spec.validate();
    if (seq.tokens.empty()) {
        throw DomainError("cannot attack an empty sequence");
    }
    AttackRecord rec = make_record(seq, spec);
    std::size_t n = seq.tokens.size();
    std::size_t edits = edit_count(spec.epsilon, n);
    SplitMix64 rng(spec.seed);
    auto sites = pick_positions(rng, n, edits);
    for (std::size_t pos : sites) {
        TokenId orig = seq.tokens[pos];
        // uniform over the vocabulary minus the original token
        auto draw = static_cast<TokenId>(rng.next_below(vocab_size - 1));
        if (draw >= orig) {
            ++draw;
        }
        rec.attacked.tokens[pos] = draw;
    }
    finish_record(rec, std::move(sites));
    return rec;
}

AttackRecord attack_delete(const Sequence& seq, const AttackSpec& spec) {
    spec.validate();
    std::size_t n = seq.tokens.size();
    std::size_t edits = edit_count(spec.epsilon, n);
    if (n < edits + 1) {
        throw DomainError("deletion would empty the sequence");
    }
    AttackRecord rec = make_record(seq, spec);
    SplitMix64 rng(spec.seed);
    auto removed = pick_positions(rng, n, edits);
    rec.attacked.tokens.clear();
    std::size_t next_removed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (next_removed < removed.size() && removed[next_removed] == i) {
            ++next_removed;
        } else {
            rec.attacked.tokens.push_back(seq.tokens[i]);
        }
    }
    // post-deletion indices where removals occurred, clamped to the new length
    std::vector<std::size_t> sites;
    std::size_t new_len = rec.attacked.tokens.size();
    for (std::size_t r = 0; r < removed.size(); ++r) {
        sites.push_back(std::min(removed[r] - r, new_len - 1));
    }
    finish_record(rec, std::move(sites));
    return rec;
}

AttackRecord attack_insert(const Sequence& seq, const AttackSpec& spec,
                           std::uint32_t vocab_size) {
    spec.validate();
    if (seq.tokens.empty()) {
        throw DomainError("cannot attack an empty sequence");
    }
    AttackRecord rec = make_record(seq, spec);
    std::size_t n = seq.tokens.size();
    std::size_t edits = edit_count(spec.epsilon, n);
    SplitMix64 rng(spec.seed);
    // gaps 0..n chosen independently; insertions applied left to right, so
    // sites are ascending in the attacked sequence
    std::vector<std::size_t> gaps;
    std::vector<TokenId> fresh;
    for (std::size_t i = 0; i < edits; ++i) {
        gaps.push_back(rng.next_below(n + 1));
        fresh.push_back(static_cast<TokenId>(rng.next_below(vocab_size)));
    }
    std::vector<std::size_t> order(edits);
    for (std::size_t i = 0; i < edits; ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gaps[a] < gaps[b]; });
    std::vector<std::size_t> sites;
    std::size_t shift = 0;
    for (std::size_t idx : order) {
        std::size_t at = gaps[idx] + shift;
        rec.attacked.tokens.insert(rec.attacked.tokens.begin() + static_cast<std::ptrdiff_t>(at),
                                   fresh[idx]);
        sites.push_back(at);
        ++shift;
    }
    finish_record(rec, std::move(sites));
    return rec;
}

AttackRecord apply_attack(const Sequence& seq, const AttackSpec& spec,
                          std::uint32_t vocab_size) {
    switch (spec.kind) {
        case AttackKind::replacement: return attack_replace(seq, spec, vocab_size);
        case AttackKind::deletion: return attack_delete(seq, spec);
        case AttackKind::addition: return attack_insert(seq, spec, vocab_size);
    }
    throw DomainError("unknown attack kind");
}

std::string attack_kind_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::addition: return "addition";
        case AttackKind::deletion: return "deletion";
        case AttackKind::replacement: return "replacement";
    }
    throw DomainError("unknown attack kind");
}

AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "addition") return AttackKind::addition;
    if (name == "deletion") return AttackKind::deletion;
    if (name == "replacement") return AttackKind::replacement;
    throw DomainError("unknown attack kind: " + name);
}

} // namespace wmf
