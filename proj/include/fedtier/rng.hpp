#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace fedtier {

// Derives an independent stream seed from (base seed, purpose tag, indices).
// Every consumer of randomness owns its own stream keyed this way, so the
// order in which streams are drained can never change results.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// mt19937_64 plus hand-rolled draws. The standard pins the raw engine output
// bit-for-bit; std::*_distribution sequences differ between standard library
// implementations, so none are used here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0,1) with 53 random bits
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // unbiased integer in [0,n)
    std::uint64_t below(std::uint64_t n);

    // standard normal via Box-Muller; keeps the paired draw as a spare
    double normal();

    // median-1 lognormal factor
    double lognormal(double sigma) { return std::exp(sigma * normal()); }

    // k distinct integers from [0,n), returned ascending
    std::vector<int> sample_without_replacement(int n, int k);

    // index drawn proportionally to non-negative weights
    int discrete(std::span<const double> weights);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline Rng make_stream(std::uint64_t base, std::string_view tag,
                       std::uint64_t a = 0, std::uint64_t b = 0) {
    return Rng(derive_seed(base, tag, a, b));
}

}  // namespace fedtier
