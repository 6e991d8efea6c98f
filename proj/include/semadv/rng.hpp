#ifndef SEMADV_RNG_HPP
#define SEMADV_RNG_HPP

// Deterministic random streams. std::normal_distribution is implementation
// defined, so normal draws go through an explicit Box-Muller transform to keep
// checkpoints and attack outputs bit-identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace semadv {

class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    int64_t uniform_int(int64_t lo, int64_t hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(engine_() % span);
    }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void fill_normal(std::vector<T>& out, double scale = 1.0) {
        for (auto& v : out) v = static_cast<T>(normal() * scale);
    }

    template <typename It>
    void shuffle(It first, It last) {
        const int64_t n = last - first;
        for (int64_t i = n - 1; i > 0; --i) {
            const int64_t j = uniform_int(0, i);
            std::swap(first[i], first[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// FNV-1a, used for dataset/checkpoint fingerprints and derived seeds.
inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 1469598103934665603ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t derive_seed(uint64_t base, uint64_t salt_a, uint64_t salt_b = 0) {
    uint64_t buf[3] = {base, salt_a, salt_b};
    return fnv1a(buf, sizeof(buf));
}

}  // namespace semadv

#endif  // SEMADV_RNG_HPP
