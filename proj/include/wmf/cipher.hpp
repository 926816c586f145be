#pragma once

#include "wmf/token_model.hpp"

#include <cstdint>
#include <vector>

namespace wmf {

struct WatermarkKey {
    std::vector<std::uint8_t> bytes;

    static WatermarkKey from_hex(const std::string& hex);
    static WatermarkKey from_file(const std::string& path);
    static WatermarkKey random(std::uint64_t seed); // 32 bytes, for tests/benchmarks
    void validate() const;
};

// The up-to-n_ct tokens immediately preceding a position, in order.
struct TextureKey {
    std::vector<TokenId> window;
    std::uint32_t n_ct = 0;
};

struct Theta {
    double value = 0.0; // in [0, 1)
};

TextureKey texture_key(std::span<const TokenId> tokens, std::size_t position,
                       std::uint32_t n_ct);

// First 8 bytes (LE) of SHA-256(key || LE64(n_ct) || LE64(t) for t in window).
// Shared seed root for theta() and green_mask(); byte layout is the wire
// contract for interoperating implementations.
std::uint64_t hash_prefix(const WatermarkKey& key, const TextureKey& ct);

// theta = u / 2^64
Theta theta(const WatermarkKey& key, const TextureKey& ct);

// Exactly floor(gamma * vocab_size) bits set: splitmix64 seeded with
// hash_prefix, Fisher-Yates shuffle of [0..vocab_size), first
// floor(gamma*vocab_size) positions of the shuffled array are green.
std::vector<bool> green_mask(const WatermarkKey& key, const TextureKey& ct,
                             double gamma, std::uint32_t vocab_size);

} // namespace wmf
