#pragma once

// Counter-based stream seeding over xoshiro256**. Streams are derived from
// (seed, stream ids...) by splitmix64 hashing, so any unit of work (a
// replication, a market, a draw block) can be given an order-independent
// generator. Bit-reproducible across platforms; no <random> engines involved.

#include <array>
#include <cstdint>

namespace cournot {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Stream {
  public:
    explicit Stream(std::uint64_t seed) { init(seed); }

    // Derived stream: hash the parent seed with the id path.
    Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
        std::uint64_t h = seed;
        for (std::uint64_t id : ids) {
            std::uint64_t mix = h ^ (0x9e3779b97f4a7c15ULL + id);
            h = splitmix64(mix);
        }
        init(h);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on (0,1), never exactly 0 or 1.
    double uniform() {
        double u = (next_u64() >> 11) * 0x1.0p-53;
        if (u <= 0.0) u = 0x1.0p-53;
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    void init(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& s : s_) s = splitmix64(sm);
        // xoshiro must not start all-zero; splitmix output never is for all four words
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::array<std::uint64_t, 4> s_{};
};

}  // namespace cournot
