#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "fedtier/analytics.hpp"
#include "fedtier/rng.hpp"
#include "fedtier/scheduler.hpp"

using namespace fedtier;

namespace {

// independent oracle: exact 64-bit binomials via the multiplicative formula
unsigned long long binom_oracle(long long n, long long r) {
    if (r < 0 || r > n) {
        return 0;
    }
    r = std::min(r, n - r);
    unsigned long long result = 1;
    for (long long i = 1; i <= r; ++i) {
        result = result * static_cast<unsigned long long>(n - r + i) /
                 static_cast<unsigned long long>(i);
    }
    return result;
}

// independent oracle for large k: telescoped product of per-draw ratios
long double prob_oracle_product(long long k, long long c, long long slow) {
    long double pr = 1.0L;
    for (long long i = 0; i < c; ++i) {
        pr *= static_cast<long double>(k - slow - i) / static_cast<long double>(k - i);
    }
    return 1.0L - pr;
}

}  // namespace

TEST_CASE("no slow level means no stragglers; all slow means certainty") {
    CHECK(straggler_prob({50, 5, 0}) == 0.0);
    CHECK(straggler_prob({50, 5, 50}) == 1.0);
}

TEST_CASE("straggler probability matches the exact binomial oracle") {
    const double pr = straggler_prob({50, 5, 10});
    const double expected =
        1.0 - static_cast<double>(binom_oracle(40, 5)) / static_cast<double>(binom_oracle(50, 5));
    CHECK(binom_oracle(40, 5) == 658008ull);
    CHECK(binom_oracle(50, 5) == 2118760ull);
    CHECK(pr == doctest::Approx(expected).epsilon(1e-12));
    CHECK(pr == doctest::Approx(0.68944).epsilon(1e-4));
}

TEST_CASE("a draw larger than the non-slow pool is a certain straggler") {
    CHECK(straggler_prob({10, 8, 5}) == 1.0);
}

TEST_CASE("log-gamma path agrees with the product oracle at large k") {
    const std::vector<StragglerParams> cases = {
        {1000, 10, 100}, {100000, 50, 10000}, {1000000000, 100, 100000000},
        {10000000000LL, 1000, 1000000000LL},
    };
    for (const auto& p : cases) {
        const double expected = static_cast<double>(prob_oracle_product(p.k, p.c, p.slow));
        CHECK(straggler_prob(p) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("straggler probability is monotone in slow and in c") {
    for (long long slow = 0; slow < 40; ++slow) {
        CHECK(straggler_prob({50, 5, slow + 1}) >= straggler_prob({50, 5, slow}));
    }
    for (long long c = 1; c < 40; ++c) {
        CHECK(straggler_prob({50, c + 1, 10}) >= straggler_prob({50, c, 10}));
    }
}

TEST_CASE("the closed-form bound evaluates as stated") {
    CHECK(straggler_prob_bound({50, 5, 10}) == doctest::Approx(0.67232).epsilon(1e-12));
}

TEST_CASE("the bound never exceeds the exact probability") {
    // strict inequality holds for c >= 2; at c = 1 the two coincide and only
    // floating-point noise separates them
    int points = 0;
    for (long long k : {10, 20, 50, 100, 500, 1000, 100000}) {
        for (long long c : {2, 3, 5, 10}) {
            for (double frac : {0.1, 0.25, 0.5}) {
                const long long slow = std::max<long long>(1, static_cast<long long>(k * frac));
                if (c > k || slow >= k) {
                    continue;
                }
                const StragglerParams p{k, c, slow};
                CHECK(straggler_prob_bound(p) <= straggler_prob(p) + 1e-12);
                ++points;
            }
        }
    }
    CHECK(points >= 80);
}

TEST_CASE("bound equals the exact probability for a single draw") {
    for (long long slow : {1, 5, 20}) {
        const StragglerParams p{50, 1, slow};
        CHECK(straggler_prob_bound(p) ==
              doctest::Approx(straggler_prob(p)).epsilon(1e-14));
        CHECK(straggler_prob(p) ==
              doctest::Approx(static_cast<double>(slow) / 50.0).epsilon(1e-14));
    }
    // log-gamma path: equality up to its numeric noise
    const StragglerParams big{100000, 1, 10000};
    CHECK(straggler_prob_bound(big) ==
          doctest::Approx(straggler_prob(big)).epsilon(1e-9));
}

TEST_CASE("invalid straggler parameters are rejected") {
    CHECK_THROWS_AS(straggler_prob({0, 1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(straggler_prob({10, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(straggler_prob({10, 11, 0}), std::invalid_argument);
    CHECK_THROWS_AS(straggler_prob({10, 1, 11}), std::invalid_argument);
}

TEST_CASE("Monte-Carlo vanilla selection matches the closed form") {
    std::vector<int> pool(50);
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng(77);
    int hits = 0;
    const int rounds = 20000;
    for (int r = 0; r < rounds; ++r) {
        const Selection s = select_vanilla(pool, 5, rng);
        if (std::any_of(s.clients.begin(), s.clients.end(), [](int c) { return c >= 40; })) {
            ++hits;
        }
    }
    CHECK(std::abs(hits / static_cast<double>(rounds) - straggler_prob({50, 5, 10})) < 0.02);
}

TEST_CASE("training-time estimate is the probability-weighted dot product") {
    const std::vector<double> lat = {1, 2, 4, 8, 16};
    const std::vector<double> uniform(5, 0.2);
    CHECK(estimate_training_time(lat, uniform, 500) == doctest::Approx(3100.0).epsilon(1e-12));

    const std::vector<double> one = {1.0};
    const std::vector<double> single = {7.5};
    CHECK(estimate_training_time(single, one, 100) == doctest::Approx(750.0).epsilon(1e-12));

    const std::vector<double> onehot = {0.0, 0.0, 1.0, 0.0, 0.0};
    CHECK(estimate_training_time(lat, onehot, 10) == doctest::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("estimate is linear in rounds and latencies") {
    const std::vector<double> lat = {2, 3, 5};
    const std::vector<double> probs = {0.2, 0.3, 0.5};
    const double base = estimate_training_time(lat, probs, 100);
    CHECK(estimate_training_time(lat, probs, 300) == doctest::Approx(3.0 * base));
    const std::vector<double> doubled = {4, 6, 10};
    CHECK(estimate_training_time(doubled, probs, 100) == doctest::Approx(2.0 * base));
}

TEST_CASE("estimate validates vector lengths and probabilities") {
    const std::vector<double> lat = {1, 2};
    const std::vector<double> bad_len = {1.0};
    CHECK_THROWS_AS(estimate_training_time(lat, bad_len, 10), std::domain_error);
    const std::vector<double> bad_sum = {0.5, 0.4};
    CHECK_THROWS_AS(estimate_training_time(lat, bad_sum, 10), std::invalid_argument);
}

TEST_CASE("mape reproduces the reported estimator errors") {
    CHECK(mape(12693, 12643) == doctest::Approx(0.40).epsilon(0.02));
    CHECK(mape(5143, 5053) == doctest::Approx(1.78).epsilon(0.01));
    CHECK(mape(46242, 44977) == doctest::Approx(2.81).epsilon(0.02));
    CHECK(mape(1837, 1750) == doctest::Approx(4.97).epsilon(0.02));
    CHECK(mape(100, 100) == 0.0);
    CHECK_THROWS_AS(mape(10, 0.0), std::domain_error);
    CHECK_THROWS_AS(mape(10, -5.0), std::domain_error);
}

TEST_CASE("uniform client sampling rate is c over k") {
    PrivacyParams p;
    p.epsilon = 1.0;
    p.delta = 1e-5;
    p.c = 5;
    p.k = 50;
    p.tier_sizes = {10, 10, 10, 10, 10};
    p.tier_weights = {1, 1, 1, 1, 1};
    const Amplification amp = privacy_amplification(p);
    CHECK(amp.q_uniform == doctest::Approx(0.1).epsilon(1e-15));
    for (double q : amp.q) {
        CHECK(q == doctest::Approx(0.1).epsilon(1e-15));  // (1/5) * 5/10
    }
    CHECK(amp.q_max == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("a one-hot tier weight concentrates the sampling rate") {
    PrivacyParams p;
    p.epsilon = 0.5;
    p.delta = 1e-6;
    p.c = 5;
    p.k = 50;
    p.tier_sizes = {10, 10, 10, 10, 10};
    p.tier_weights = {1, 0, 0, 0, 0};
    const Amplification amp = privacy_amplification(p);
    CHECK(amp.q[0] == doctest::Approx(0.1).epsilon(1e-15));
    for (std::size_t j = 1; j < amp.q.size(); ++j) {
        CHECK(amp.q[j] == 0.0);
    }
    CHECK(amp.q_max == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("a sampling rate above one is rejected") {
    PrivacyParams p;
    p.c = 40;
    p.k = 50;
    p.tier_sizes = {4, 46};
    p.tier_weights = {1.0, 1.0};
    CHECK_THROWS_AS(privacy_amplification(p), std::domain_error);  // q_1 = 0.5*40/4 = 5
}
