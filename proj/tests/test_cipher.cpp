#include "wmf/cipher.hpp"
#include "wmf/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace wmf;

TEST_CASE("texture key windows") {
    std::vector<TokenId> t1{7, 8, 9, 10};
    CHECK(texture_key(t1, 4, 5).window == std::vector<TokenId>{7, 8, 9, 10});

    std::vector<TokenId> t2{1, 2, 3, 4, 5, 6};
    CHECK(texture_key(t2, 6, 5).window == std::vector<TokenId>{2, 3, 4, 5, 6});

    std::vector<TokenId> t3{1, 2, 3};
    CHECK(texture_key(t3, 0, 5).window.empty());
    CHECK_THROWS_AS(texture_key(t3, 4, 5), DomainError);
}

TEST_CASE("splitmix64 reference stream") {
    // frozen from an independent python implementation of the update rule
    SplitMix64 rng(42);
    CHECK(rng.next() == 0xbdd732262feb6e95ULL);
    CHECK(rng.next() == 0x28efe333b266f103ULL);
    CHECK(rng.next() == 0x47526757130f9f52ULL);
}

TEST_CASE("theta golden value") {
    // SHA-256(32 zero bytes || LE64(5) || LE64(0..4)), first 8 bytes LE,
    // frozen from python hashlib
    WatermarkKey key;
    key.bytes.assign(32, 0);
    TextureKey ct{{0, 1, 2, 3, 4}, 5};
    CHECK(hash_prefix(key, ct) == 0x3ffb9d09b288b596ULL);
    CHECK(theta(key, ct).value == doctest::Approx(0.24993306624176878).epsilon(1e-15));
}

TEST_CASE("theta is deterministic and key-sensitive") {
    auto k1 = WatermarkKey::from_hex("6b31"); // "k1"
    auto k2 = WatermarkKey::from_hex("6b32"); // "k2"
    TextureKey ct{{1, 2, 3}, 5};
    CHECK(theta(k1, ct).value == theta(k1, ct).value);
    CHECK(theta(k1, ct).value != theta(k2, ct).value);
}

TEST_CASE("theta avalanche: single-token window changes move theta") {
    auto key = WatermarkKey::random(1);
    SplitMix64 rng(77);
    int collisions = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<TokenId> window(5);
        for (auto& t : window) {
            t = static_cast<TokenId>(rng.next_below(1000));
        }
        TextureKey a{window, 5};
        std::size_t pos = rng.next_below(5);
        window[pos] = static_cast<TokenId>(window[pos] + 1 + rng.next_below(10));
        TextureKey b{window, 5};
        if (theta(key, a).value == theta(key, b).value) {
            ++collisions;
        }
    }
    CHECK(collisions == 0);
}

TEST_CASE("theta uniformity (KS test at alpha = 0.01)") {
    const int n = 100000;
    auto key = WatermarkKey::random(3);
    std::vector<double> samples;
    samples.reserve(n);
    SplitMix64 rng(5);
    for (int i = 0; i < n; ++i) {
        TextureKey ct{{static_cast<TokenId>(rng.next_below(1u << 30)),
                       static_cast<TokenId>(rng.next_below(1u << 30))},
                      5};
        samples.push_back(theta(key, ct).value);
    }
    std::sort(samples.begin(), samples.end());
    double d_stat = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = samples[static_cast<std::size_t>(i)];
        d_stat = std::max(d_stat, std::abs(u - static_cast<double>(i) / n));
        d_stat = std::max(d_stat, std::abs(static_cast<double>(i + 1) / n - u));
    }
    // critical value at alpha=0.01: 1.628 / sqrt(n)
    CHECK(d_stat < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("green mask golden values") {
    WatermarkKey key;
    key.bytes.assign(32, 0);
    // frozen from a python splitmix64 + Fisher-Yates oracle
    auto mask8 = green_mask(key, TextureKey{{3}, 1}, 0.5, 8);
    std::vector<bool> expect8{false, false, false, false, true, true, true, true};
    CHECK(mask8 == expect8);

    auto mask10 = green_mask(key, TextureKey{{1, 2}, 5}, 0.5, 10);
    std::vector<bool> expect10{true, false, false, true, true, true, false, true, false, false};
    CHECK(mask10 == expect10);
}

TEST_CASE("green mask cardinality and determinism") {
    auto key = WatermarkKey::random(9);
    for (std::uint32_t vocab : {10u, 33u, 1000u}) {
        for (double gamma : {0.25, 0.5, 0.77}) {
            TextureKey ct{{5, 6}, 2};
            auto mask = green_mask(key, ct, gamma, vocab);
            auto count = static_cast<std::uint32_t>(std::count(mask.begin(), mask.end(), true));
            CHECK(count == static_cast<std::uint32_t>(std::floor(gamma * vocab)));
            CHECK(mask == green_mask(key, ct, gamma, vocab));
        }
    }
    CHECK_THROWS_AS(green_mask(key, TextureKey{{1}, 1}, 0.5, 1), DomainError);
}

TEST_CASE("key loading") {
    CHECK_THROWS_AS(WatermarkKey::from_hex(""), DomainError);
    CHECK_THROWS_AS(WatermarkKey::from_hex("abc"), DomainError);
    CHECK_THROWS_AS(WatermarkKey::from_hex("zz"), DomainError);
    auto k = WatermarkKey::from_hex("00ff10");
    CHECK(k.bytes == std::vector<std::uint8_t>{0x00, 0xff, 0x10});
}
