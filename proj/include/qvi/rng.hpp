#pragma once

#include <cmath>
#include <cstdint>

namespace qvi {

// Counter-based generator: output j of stream (seed, stream) is a pure
// function of (seed, stream, j), so results do not depend on the parallel
// schedule. One stream per path index.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) ^ stream)) {}

    std::uint64_t next_u64() { return mix(key_ ^ (0xbf58476d1ce4e5b9ULL * ++ctr_)); }

    // Uniform on (0, 1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Knuth for small means, normal approximation for large ones.
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 30.0) {
            double l = std::exp(-lambda), p = 1.0;
            int k = 0;
            do {
                ++k;
                p *= uniform();
            } while (p > l);
            return k - 1;
        }
        double n = lambda + std::sqrt(lambda) * normal();
        return n < 0.0 ? 0 : static_cast<int>(n + 0.5);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace qvi
