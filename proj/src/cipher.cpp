#include "wmf/cipher.hpp"
#include "wmf/rng.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace wmf {

WatermarkKey WatermarkKey::from_hex(const std::string& hex) {
    if (hex.empty() || hex.size() % 2 != 0) {
        throw DomainError("key hex string must be non-empty with even length");
    }
    WatermarkKey key;
    key.bytes.reserve(hex.size() / 2);
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw DomainError(std::string("invalid hex character '") + c + "'");
    };
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        key.bytes.push_back(static_cast<std::uint8_t>(nibble(hex[i]) * 16 + nibble(hex[i + 1])));
    }
    return key;
}

WatermarkKey WatermarkKey::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DomainError("cannot open key file: " + path);
    }
    WatermarkKey key;
    key.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    key.validate();
    return key;
}

WatermarkKey WatermarkKey::random(std::uint64_t seed) {
    SplitMix64 rng(seed);
    WatermarkKey key;
    key.bytes.resize(32);
    for (std::size_t i = 0; i < 32; i += 8) {
        std::uint64_t v = rng.next();
        for (std::size_t b = 0; b < 8; ++b) {
            key.bytes[i + b] = static_cast<std::uint8_t>(v >> (8 * b));
        }
    }
    return key;
}

void WatermarkKey::validate() const {
    if (bytes.empty()) {
        throw DomainError("watermark key must be non-empty");
    }
}

TextureKey texture_key(std::span<const TokenId> tokens, std::size_t position,
                       std::uint32_t n_ct) {
    if (position > tokens.size()) {
        throw DomainError("texture_key position out of range");
    }
    std::size_t take = std::min<std::size_t>(n_ct, position);
    TextureKey ct;
    ct.n_ct = n_ct;
    ct.window.assign(tokens.begin() + static_cast<std::ptrdiff_t>(position - take),
                     tokens.begin() + static_cast<std::ptrdiff_t>(position));
    return ct;
}

namespace {

void append_le64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

} // namespace

std::uint64_t hash_prefix(const WatermarkKey& key, const TextureKey& ct) {
    key.validate();
    std::vector<std::uint8_t> msg = key.bytes;
    append_le64(msg, ct.n_ct);
    for (TokenId t : ct.window) {
        append_le64(msg, t);
    }
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(msg.data(), msg.size(), digest);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) {
        u |= static_cast<std::uint64_t>(digest[i]) << (8 * i);
    }
    return u;
}

Theta theta(const WatermarkKey& key, const TextureKey& ct) {
    std::uint64_t u = hash_prefix(key, ct);
    return Theta{static_cast<double>(u) * 0x1.0p-64};
}

std::vector<bool> green_mask(const WatermarkKey& key, const TextureKey& ct,
                             double gamma, std::uint32_t vocab_size) {
    if (vocab_size < 2) {
        throw DomainError("green_mask requires vocab_size >= 2");
    }
    if (gamma <= 0.0 || gamma >= 1.0) {
        throw DomainError("gamma must be in (0, 1)");
    }
    SplitMix64 rng(hash_prefix(key, ct));
    thread_local std::vector<std::uint32_t> perm;
    perm.resize(vocab_size);
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::uint32_t i = vocab_size - 1; i > 0; --i) {
        std::uint32_t j = static_cast<std::uint32_t>(rng.next_below(i + 1));
        std::swap(perm[i], perm[j]);
    }
    auto n_green = static_cast<std::uint32_t>(std::floor(gamma * vocab_size));
    std::vector<bool> mask(vocab_size, false);
    for (std::uint32_t i = 0; i < n_green; ++i) {
        mask[perm[i]] = true;
    }
    return mask;
}

} // namespace wmf
