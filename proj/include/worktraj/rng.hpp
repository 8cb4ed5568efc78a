#pragma once

#include <cstdint>

namespace worktraj {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro256++ with streams derived statelessly from (master seed, stream index),
// so trajectory i always sees the same numbers no matter which worker runs it.
class Xoshiro256pp {
  public:
    Xoshiro256pp(uint64_t master_seed, uint64_t stream_index) {
        uint64_t sm = master_seed ^ (0xD2B74407B1CE6E93ULL * (stream_index + 1));
        s_[0] = splitmix64(sm);
        s_[1] = splitmix64(sm);
        s_[2] = splitmix64(sm);
        s_[3] = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

}  // namespace worktraj
