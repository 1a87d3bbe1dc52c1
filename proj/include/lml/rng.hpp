#pragma once

#include <array>
#include <cstdint>
#include <cmath>

namespace lml {

// Philox4x64-10 counter-based block cipher generator.
//
// The output is a pure function of (key, counter), so disjoint streams are
// free: stream k of a run keyed by `seed` is Philox4x64{seed, k}. Trials can
// run in parallel and replay exactly. Output matches numpy.random.Philox.
class Philox4x64 {
public:
    using Block = std::array<std::uint64_t, 4>;

    Philox4x64(std::uint64_t seed, std::uint64_t stream)
        : key_{seed, stream}, counter_{0, 0, 0, 0} {}

    Block next_block() {
        Block out = encrypt(counter_, key_);
        // 256-bit counter increment
        for (int i = 0; i < 4; ++i) {
            if (++counter_[i] != 0) break;
        }
        return out;
    }

    static Block encrypt(Block ctr, std::array<std::uint64_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

private:
    static constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

    static Block single_round(const Block& c, const std::array<std::uint64_t, 2>& k) {
        const unsigned __int128 p0 = static_cast<unsigned __int128>(kMult0) * c[0];
        const unsigned __int128 p1 = static_cast<unsigned __int128>(kMult1) * c[2];
        const std::uint64_t lo0 = static_cast<std::uint64_t>(p0);
        const std::uint64_t hi0 = static_cast<std::uint64_t>(p0 >> 64);
        const std::uint64_t lo1 = static_cast<std::uint64_t>(p1);
        const std::uint64_t hi1 = static_cast<std::uint64_t>(p1 >> 64);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    std::array<std::uint64_t, 2> key_;
    Block counter_;
};

// Buffered stream with the handful of variate types this project needs.
// Value semantics: copying an Rng snapshots its state, so a noise realization
// can be replayed by keeping a copy (used for synchronous path pairs).
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : gen_(seed, stream), buf_pos_(4), have_cached_normal_(false), cached_normal_(0.0) {}

    std::uint64_t next_u64() {
        if (buf_pos_ == 4) {
            buf_ = gen_.next_block();
            buf_pos_ = 0;
        }
        return buf_[buf_pos_++];
    }

    // uniform on the open interval (0,1); safe under log()
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal, Box-Muller with a one-deep cache
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 6.283185307179586476925286766559 * uniform();
        cached_normal_ = r * std::sin(phi);
        have_cached_normal_ = true;
        return r * std::cos(phi);
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    bool bernoulli(double p) { return uniform() < p; }

    std::size_t uniform_index(std::size_t n) {
        // modulo bias is < 2^-40 for any n used here (n < 2^24)
        return static_cast<std::size_t>(next_u64() % n);
    }

private:
    Philox4x64 gen_;
    Philox4x64::Block buf_{};
    int buf_pos_;
    bool have_cached_normal_;
    double cached_normal_;
};

}  // namespace lml
