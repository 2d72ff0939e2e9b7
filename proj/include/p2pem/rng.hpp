#ifndef P2PEM_RNG_HPP
#define P2PEM_RNG_HPP

#include <cstdint>

namespace p2pem {

/* splitmix64: tiny, fast, and fully pinned by this code, so seeded runs
 * replay identically on any platform. */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // {0, ..., n-1}
    int next_int(int n) { return static_cast<int>(next_double() * n); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

private:
    std::uint64_t state_;
};

/* Per-run seed for multi-seed sweeps: mixes the base seed with the run
 * index so sweeps are reproducible piecewise. */
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    Rng r(base ^ (0xA0761D6478BD642Full * (index + 1)));
    return r.next_u64();
}

}  // namespace p2pem

#endif
