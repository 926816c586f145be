#pragma once

#include "wmf/token_model.hpp"

#include <cstdio>
#include <memory>
#include <string>

namespace wmf {

// LanguageModelSource backed by an external process speaking the line-
// delimited bridge protocol on stdin/stdout:
//   request  {"id": <int>, "context": [<token ids>]}
//   response {"id": <int>, "probs": [<vocab_size floats>]}
//         or {"id": <int>, "entries": [[tokid, prob], ...]}  (rest zero)
// Responses must arrive in request order. Probabilities are renormalized on
// receipt when |sum - 1| <= 1e-6; larger deviation is a protocol error.
class BridgeLM final : public LanguageModelSource {
public:
    // Spawns `command` via the shell with a bidirectional pipe.
    BridgeLM(const std::string& command, std::uint32_t vocab_size);
    ~BridgeLM() override;

    BridgeLM(const BridgeLM&) = delete;
    BridgeLM& operator=(const BridgeLM&) = delete;

    std::uint32_t vocab_size() const override { return vocab_size_; }
    ProbDist dist_next(std::span<const TokenId> context) const override;

private:
    std::uint32_t vocab_size_;
    mutable std::uint64_t next_id_ = 0; // one in-flight request per instance
    FILE* to_child_ = nullptr;
    FILE* from_child_ = nullptr;
    int child_pid_ = -1;
};

// Parses one bridge response line against an expected id; shared with tests.
ProbDist parse_bridge_response(const std::string& line, std::uint64_t expect_id,
                               std::uint32_t vocab_size);

} // namespace wmf
