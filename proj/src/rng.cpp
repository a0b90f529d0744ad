#include "fedtier/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedtier {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = kFnvOffset;
    h = fnv1a(h, &base, sizeof(base));
    h = fnv1a(h, tag.data(), tag.size());
    h = fnv1a(h, &a, sizeof(a));
    h = fnv1a(h, &b, sizeof(b));
    return splitmix64(h);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) {
        throw std::domain_error("Rng::below: n must be positive");
    }
    // rejection keeps the draw unbiased
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = engine_();
        if (r >= threshold) {
            return r % n;
        }
    }
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) {
        u1 = uniform01();
    }
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(theta);
    has_spare_ = true;
    return radius * std::cos(theta);
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
    if (k < 0 || n < 0 || k > n) {
        throw std::domain_error("sample_without_replacement: need 0 <= k <= n");
    }
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

int Rng::discrete(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw std::domain_error("discrete: weights must be finite and non-negative");
        }
        total += w;
    }
    if (total <= 0.0) {
        throw std::domain_error("discrete: total weight must be positive");
    }
    const double x = uniform01() * total;
    double cum = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > 0.0) {
            cum += weights[i];
            last_positive = static_cast<int>(i);
            if (x < cum) {
                return static_cast<int>(i);
            }
        }
    }
    return last_positive;  // x landed on the fp tail
}

}  // namespace fedtier
