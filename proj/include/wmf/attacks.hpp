#pragma once

#include "wmf/delta_reweight.hpp"

namespace wmf {

enum class AttackKind { addition, deletion, replacement };

struct AttackSpec {
    AttackKind kind = AttackKind::replacement;
    double epsilon = 0.0; // in [0, 1)
    std::uint64_t seed = 0;

    void validate() const;
};

struct AttackRecord {
    Sequence original;
    Sequence attacked;
    std::vector<std::size_t> sites; // positions in the attacked sequence
};

// Number of edits for epsilon on an n-token sequence: round half away from
// zero, floored at 1 for epsilon > 0.
std::size_t edit_count(double epsilon, std::size_t n);

AttackRecord attack_replace(const Sequence& seq, const AttackSpec& spec,
                            std::uint32_t vocab_size);
AttackRecord attack_delete(const Sequence& seq, const AttackSpec& spec);
AttackRecord attack_insert(const Sequence& seq, const AttackSpec& spec,
                           std::uint32_t vocab_size);

AttackRecord apply_attack(const Sequence& seq, const AttackSpec& spec,
                          std::uint32_t vocab_size);

std::string attack_kind_name(AttackKind kind);
AttackKind attack_kind_from_name(const std::string& name);

} // namespace wmf
