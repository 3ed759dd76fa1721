#pragma once

#include <array>
#include <cstdint>

namespace rasr {

/// Philox4x32-10 counter-based generator (Salmon et al.'s Random123 family).
/// A block is a pure function of (counter, key): streams never share state,
/// so parallel consumers stay reproducible by construction.
///
/// Stream layout used by this project:
///   key     = (seed_lo, seed_hi)
///   counter = (c0, c1, stream_lo, stream_hi)
/// where `stream` identifies the consumer (episode index, Dirichlet row, ...)
/// and (c0, c1) count blocks within the stream.
struct Philox4x32 {
    using Counter = std::array<uint32_t, 4>;
    using Key = std::array<uint32_t, 2>;

    static Counter block(Counter ctr, Key key) {
        constexpr uint32_t kMul0 = 0xD2511F53u;
        constexpr uint32_t kMul1 = 0xCD9E8D57u;
        constexpr uint32_t kWeyl0 = 0x9E3779B9u;
        constexpr uint32_t kWeyl1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const uint64_t p0 = static_cast<uint64_t>(kMul0) * ctr[0];
            const uint64_t p1 = static_cast<uint64_t>(kMul1) * ctr[2];
            const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
            const uint32_t lo0 = static_cast<uint32_t>(p0);
            const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
            const uint32_t lo1 = static_cast<uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

/// Draws from one Philox substream. Each next_u64 consumes one block half;
/// uniforms map 53 random bits into [0, 1).
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t stream)
        : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
          stream_lo_(static_cast<uint32_t>(stream)),
          stream_hi_(static_cast<uint32_t>(stream >> 32)) {}

    uint64_t next_u64() {
        if (phase_ == 0) {
            block_ = Philox4x32::block({static_cast<uint32_t>(block_index_),
                                        static_cast<uint32_t>(block_index_ >> 32),
                                        stream_lo_, stream_hi_},
                                       key_);
            ++block_index_;
        }
        const int base = phase_ * 2;
        phase_ ^= 1;
        return (static_cast<uint64_t>(block_[base + 1]) << 32) | block_[base];
    }

    /// Uniform in [0, 1) with 53 bits.
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    Philox4x32::Key key_;
    uint32_t stream_lo_;
    uint32_t stream_hi_;
    uint64_t block_index_ = 0;
    Philox4x32::Counter block_{};
    int phase_ = 0;
};

} // namespace rasr
