#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace hptrim {

// One Philox4x32-10 block: ten rounds over a 128-bit counter and 64-bit key.
constexpr std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                     std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/**
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * A stream is identified by (key, stream id). The 128-bit counter is laid out
 * as [draw index lo, draw index hi, stream id, 0], so distinct stream ids under
 * one key never share a counter block. The simulator gives component i the
 * stream id i; replicate r of an experiment uses key derive_seed(seed, r).
 */
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t key, std::uint32_t stream_id) noexcept
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          stream_(stream_id) {}

    // Next raw 64-bit output.
    std::uint64_t next_u64() noexcept {
        if (pos_ == 2) refill();
        const std::uint64_t v = (static_cast<std::uint64_t>(block_[2 * pos_ + 1]) << 32) | block_[2 * pos_];
        ++pos_;
        return v;
    }

    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1).
    double uniform_open() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    // Exponential with the given rate (> 0); strictly positive.
    double exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

    // Counter blocks consumed so far (two 64-bit draws each).
    std::uint64_t blocks() const noexcept { return counter_; }

private:
    void refill() noexcept {
        block_ = philox4x32_10({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                                stream_, 0u},
                               key_);
        ++counter_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 2;
};

// SplitMix64 finalizer; used to derive per-replicate keys from a base seed.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(mix64(seed) ^ (index * 0xD1B54A32D192ED03ull + 1));
}

} // namespace hptrim
