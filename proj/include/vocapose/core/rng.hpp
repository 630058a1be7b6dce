#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vp::core {

// Seeded RNG with pinned algorithms (53-bit uniform, Box-Muller gaussian,
// Fisher-Yates shuffle). std::distributions are implementation-defined, so
// frozen test values and byte-identical reruns go through this instead.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mu, double sigma) { return mu + sigma * gaussian(); }

    // Uniform integer in [0, n). Modulo bias is < 2^-50 for any n that fits
    // this codebase; acceptable and deterministic.
    uint64_t below(uint64_t n) { return n == 0 ? 0 : gen_() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    Rng fork() { return Rng(next_u64() ^ 0x9e3779b97f4a7c15ull); }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace vp::core
