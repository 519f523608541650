#pragma once

// Counter-based random numbers.
//
// Every random quantity in dcmlab is drawn from Philox4x32-10 (Salmon et al.,
// the Random123 constants). A generator is identified by a 64-bit key (the
// user seed) and a 64-bit stream id; its output is the sequence of Philox
// blocks for counters (block, stream) with block = 0, 1, 2, ... . Parallel
// trials therefore use (seed, trial-index) and never share state.
//
// Counter layout: words 0-1 hold the block index (low, high), words 2-3 hold
// the stream id (low, high). Key words are (seed low, seed high).

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace dcmlab {

using Philox4x32Block = std::array<std::uint32_t, 4>;

inline Philox4x32Block philox4x32_10(Philox4x32Block ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
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

/// SplitMix64 finalizer. Used only to derive child seeds from (seed, tag).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Child seed for a named sub-experiment, e.g. derive_seed(graph_seed, kWalkTag).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed ^ mix64(tag));
}

class Philox {
public:
    using result_type = std::uint64_t;

    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 2) refill();
        return buffer_[pos_++];
    }

    std::uint32_t next_u32() {
        if (half_valid_) {
            half_valid_ = false;
            return static_cast<std::uint32_t>(half_ >> 32);
        }
        half_ = (*this)();
        half_valid_ = true;
        return static_cast<std::uint32_t>(half_);
    }

    /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        if (bound <= 0xFFFFFFFFull) {
            const auto b = static_cast<std::uint32_t>(bound);
            std::uint64_t prod = std::uint64_t{next_u32()} * b;
            auto low = static_cast<std::uint32_t>(prod);
            if (low < b) {
                const std::uint32_t threshold = (0u - b) % b;
                while (low < threshold) {
                    prod = std::uint64_t{next_u32()} * b;
                    low = static_cast<std::uint32_t>(prod);
                }
            }
            return prod >> 32;
        }
        unsigned __int128 prod = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(prod);
        if (low < bound) {
            const std::uint64_t threshold = (0ull - bound) % bound;
            while (low < threshold) {
                prod = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(prod);
            }
        }
        return static_cast<std::uint64_t>(prod >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe to pass to log().
    double uniform_open0() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

    std::uint64_t seed() const {
        return std::uint64_t{key_[0]} | (std::uint64_t{key_[1]} << 32);
    }
    std::uint64_t stream() const { return stream_; }

private:
    void refill() {
        const Philox4x32Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        const auto out = philox4x32_10(ctr, key_);
        buffer_[0] = std::uint64_t{out[0]} | (std::uint64_t{out[1]} << 32);
        buffer_[1] = std::uint64_t{out[2]} | (std::uint64_t{out[3]} << 32);
        ++block_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int pos_ = 2;
    std::uint64_t half_ = 0;
    bool half_valid_ = false;
};

/// Fisher-Yates, descending: for i = size-1 .. 1 swap items[i] with items[below(i+1)].
template <class T>
void shuffle(std::span<T> items, Philox& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

}  // namespace dcmlab
