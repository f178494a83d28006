#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "seqsparse/distributions.hpp"
#include "seqsparse/errors.hpp"

using namespace seqsparse;

namespace {

// Exponential scale family: P0 = Exp(1), P1 = Exp(rate), rate < 1.
// log(P1/P0)(y) = ln(rate) + (1 - rate) y is increasing in y, so the sum of
// observations is a monotone statistic.
DistributionPair exponential_pair(double rate, bool alt_known = true) {
    GeneralModel model;
    model.draw = [rate](Stream& rng, Hypothesis h) {
        const double u = 1.0 - rng.uniform01();
        return -std::log(u) / (h == Hypothesis::Alt ? rate : 1.0);
    };
    model.statistic = [](std::span<const double> ys) {
        double t = 0.0;
        for (double y : ys) t += y;
        return t;
    };
    if (alt_known) model.log_ratio = [rate](double y) { return std::log(rate) + (1.0 - rate) * y; };
    model.mc_draws = 200000;
    return DistributionPair::general(std::move(model), alt_known);
}

// Brute-force binomial quantile: enumerate all 2^count outcomes.
double enumerated_quantile(std::size_t count, double p0, double rho) {
    std::vector<double> mass(count + 1, 0.0);
    for (std::uint32_t mask = 0; mask < (1u << count); ++mask) {
        const int ones = __builtin_popcount(mask);
        mass[ones] += std::pow(p0, ones) * std::pow(1.0 - p0, static_cast<double>(count) - ones);
    }
    double cdf = 0.0;
    for (std::size_t g = 0; g <= count; ++g) {
        cdf += mass[g];
        if (cdf >= rho - 1e-12) return static_cast<double>(g);
    }
    return static_cast<double>(count);
}

}  // namespace

TEST_CASE("construction invariants") {
    CHECK_THROWS_AS(DistributionPair::gaussian_shift(0.0), InvalidArgument);
    CHECK_THROWS_AS(DistributionPair::gaussian_shift(-1.0), InvalidArgument);
    CHECK_THROWS_AS(DistributionPair::bernoulli(0.5, 1.5), InvalidArgument);
    CHECK_THROWS_AS(DistributionPair::bernoulli(0.6, 0.4), InvalidArgument);
    GeneralModel empty;
    CHECK_THROWS_AS(DistributionPair::general(empty, false), InvalidArgument);
}

TEST_CASE("sample is deterministic under a fixed seed") {
    const auto pair = DistributionPair::gaussian_shift(2.0);
    Stream a(7), b(7);
    const auto x = pair.sample(Hypothesis::Null, 3, a);
    const auto y = pair.sample(Hypothesis::Null, 3, b);
    CHECK(x.size() == 3);
    CHECK(x == y);
    Stream c(8);
    CHECK(pair.sample(Hypothesis::Null, 3, c) != x);
    CHECK_THROWS_AS(pair.sample(Hypothesis::Null, 0, a), InvalidArgument);
}

TEST_CASE("degenerate Bernoulli null draws only zeros") {
    const auto pair = DistributionPair::bernoulli(0.0, 1.0);
    Stream rng(3);
    CHECK(pair.sample(Hypothesis::Null, 5, rng) == std::vector<double>(5, 0.0));
    CHECK(pair.sample(Hypothesis::Alt, 5, rng) == std::vector<double>(5, 1.0));
}

TEST_CASE("Gaussian alternative sample mean converges") {
    const auto pair = DistributionPair::gaussian_shift(2.0);
    Stream rng(11);
    const auto ys = pair.sample(Hypothesis::Alt, 1000000, rng);
    double mean = 0.0;
    for (double y : ys) mean += y;
    mean /= static_cast<double>(ys.size());
    // Standard error 1e-3; 0.01 is ten of them.
    CHECK(std::abs(mean - 2.0) < 0.01);
}

TEST_CASE("llr examples") {
    const auto gauss = DistributionPair::gaussian_shift(2.0);
    CHECK(gauss.llr({}) == 0.0);
    const std::vector<double> one{1.0};
    CHECK(gauss.llr(one) == doctest::Approx(0.0).epsilon(1e-15));
    const auto flat = DistributionPair::bernoulli(0.5, 0.5);
    const std::vector<double> bits{1, 0, 1, 1, 0};
    CHECK(flat.llr(bits) == 0.0);

    const auto hidden = DistributionPair::gaussian_shift(2.0, false);
    CHECK_THROWS_AS(hidden.llr(one), QueryNotPermitted);
    CHECK_THROWS_AS(hidden.log_ratio(1.0), QueryNotPermitted);
    CHECK_THROWS_AS(exponential_pair(0.5, false).llr(one), QueryNotPermitted);
}

TEST_CASE("llr_stats closed forms") {
    const LlrStats g = DistributionPair::gaussian_shift(2.0).llr_stats();
    CHECK(g.d01 == 2.0);
    CHECK(g.d10 == 2.0);
    CHECK(g.dkl == 2.0);
    CHECK(g.var01 == 4.0);

    const LlrStats flat = DistributionPair::bernoulli(0.5, 0.5).llr_stats();
    CHECK(flat.d01 == 0.0);
    CHECK(flat.d10 == 0.0);
    CHECK(flat.var01 == 0.0);

    // Oracle: enumerate y in {0, 1} directly.
    const double p0 = 0.1, p1 = 0.3;
    double d01 = 0.0, d10 = 0.0, mean0 = 0.0, sq0 = 0.0;
    for (int y = 0; y <= 1; ++y) {
        const double q0 = y ? p0 : 1 - p0;
        const double q1 = y ? p1 : 1 - p1;
        const double lr = std::log(q1 / q0);
        d01 -= q0 * lr;
        d10 += q1 * lr;
        mean0 += q0 * lr;
        sq0 += q0 * lr * lr;
    }
    const LlrStats b = DistributionPair::bernoulli(p0, p1).llr_stats();
    CHECK(b.d01 == doctest::Approx(d01).epsilon(1e-12));
    CHECK(b.d01 == doctest::Approx(0.1163217565860046).epsilon(1e-12));
    CHECK(b.d10 == doctest::Approx(d10).epsilon(1e-12));
    CHECK(b.var01 == doctest::Approx(sq0 - mean0 * mean0).epsilon(1e-10));
    CHECK(b.dkl == std::max(b.d01, b.d10));

    CHECK_THROWS_AS(DistributionPair::bernoulli(0.0, 0.5).llr_stats(), NonFiniteDivergence);
}

TEST_CASE("GeneralMLR divergences by Monte Carlo") {
    const double rate = 0.5;
    const LlrStats st = exponential_pair(rate).llr_stats();
    // Closed forms for the exponential scale pair.
    CHECK(st.d01 == doctest::Approx(rate - 1.0 - std::log(rate)).epsilon(0.02));
    CHECK(st.d10 == doctest::Approx(std::log(rate) + (1.0 - rate) / rate).epsilon(0.02));
    CHECK(st.var01 == doctest::Approx((1.0 - rate) * (1.0 - rate)).epsilon(0.02));
    // Same seed, same estimate.
    CHECK(exponential_pair(rate).llr_stats().d01 == st.d01);
    CHECK_THROWS_AS(exponential_pair(rate, false).llr_stats(), QueryNotPermitted);
}

TEST_CASE("test_statistic") {
    const std::vector<double> ys{1.0, -0.5, 2.5};
    CHECK(DistributionPair::gaussian_shift(2.0).test_statistic(ys) == 3.0);
    const std::vector<double> bits{1, 0, 1, 1};
    CHECK(DistributionPair::bernoulli(0.2, 0.6).test_statistic(bits) == 3.0);
    CHECK(DistributionPair::gaussian_shift(1.0, false).test_statistic(ys) ==
          DistributionPair::gaussian_shift(3.0, false).test_statistic(ys));
}

TEST_CASE("null_quantile examples") {
    const auto g = DistributionPair::gaussian_shift(2.0, false);
    CHECK(g.null_quantile(8, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
    // 2 * Phi^-1(0.75), evaluated independently.
    CHECK(g.null_quantile(4, 0.75) == doctest::Approx(1.3489795003921634).epsilon(1e-12));
    CHECK(DistributionPair::bernoulli(0.5, 0.7).null_quantile(2, 0.5) == 1.0);
    CHECK_THROWS_AS(g.null_quantile(0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(g.null_quantile(1, 1.0), InvalidArgument);
}

TEST_CASE("property: llr is additive over any split") {
    std::mt19937_64 gen(2024);
    const auto pairs = {DistributionPair::gaussian_shift(1.3), DistributionPair::bernoulli(0.2, 0.45),
                        exponential_pair(0.4)};
    for (const auto& pair : pairs) {
        Stream rng(gen());
        for (int rep = 0; rep < 200; ++rep) {
            const std::size_t len = 1 + gen() % 40;
            const auto ys = pair.sample(rep % 2 ? Hypothesis::Alt : Hypothesis::Null, len, rng);
            const std::size_t cut = gen() % (len + 1);
            const std::span<const double> all(ys);
            const double whole = pair.llr(all);
            const double parts = pair.llr(all.first(cut)) + pair.llr(all.subspan(cut));
            CHECK(std::abs(whole - parts) <= 1e-12 * std::max(1.0, std::abs(whole)));
        }
    }
}

TEST_CASE("property: single-sample llr means match the divergences") {
    const auto pairs = {DistributionPair::gaussian_shift(1.0), DistributionPair::bernoulli(0.1, 0.3)};
    for (const auto& pair : pairs) {
        const LlrStats st = pair.llr_stats();
        for (Hypothesis h : {Hypothesis::Null, Hypothesis::Alt}) {
            Stream rng(h == Hypothesis::Null ? 5 : 6);
            const int draws = 200000;
            double sum = 0.0, sq = 0.0;
            for (int i = 0; i < draws; ++i) {
                const double x = pair.log_ratio(pair.draw(rng, h));
                sum += x;
                sq += x * x;
            }
            const double mean = sum / draws;
            const double se = std::sqrt((sq / draws - mean * mean) / draws);
            const double target = h == Hypothesis::Null ? -st.d01 : st.d10;
            CHECK(std::abs(mean - target) <= 5.0 * se);
        }
    }
}

TEST_CASE("property: null quantiles are calibrated and minimal") {
    std::mt19937_64 gen(99);
    std::normal_distribution<double> normal;
    std::exponential_distribution<double> expo(1.0);
    const auto gauss = DistributionPair::gaussian_shift(1.0, false);
    const auto expo_pair = exponential_pair(0.5, false);
    const int draws = 100000;
    for (std::size_t count : {1u, 2u, 4u, 8u}) {
        for (double rho : {0.5, 0.75, 0.9}) {
            for (int family = 0; family < 2; ++family) {
                const DistributionPair& pair = family == 0 ? gauss : expo_pair;
                const double q = pair.null_quantile(count, rho);
                const double lower = q - pair.quantile_resolution(count, rho);
                int at = 0, below = 0;
                for (int i = 0; i < draws; ++i) {
                    double t = 0.0;
                    for (std::size_t j = 0; j < count; ++j) t += family == 0 ? normal(gen) : expo(gen);
                    at += t <= q;
                    below += t <= lower;
                }
                CAPTURE(count);
                CAPTURE(rho);
                CAPTURE(family);
                CHECK(static_cast<double>(at) / draws >= rho - 0.01);
                CHECK(static_cast<double>(at) / draws <= rho + 0.01);
                CHECK(static_cast<double>(below) / draws < rho);
            }
        }
    }
    for (double p0 : {0.1, 0.3, 0.5})
        for (std::size_t count = 1; count <= 12; ++count)
            for (double rho : {0.5, 0.75, 0.9})
                CHECK(DistributionPair::bernoulli(p0, 0.9).null_quantile(count, rho) ==
                      enumerated_quantile(count, p0, rho));
}

TEST_CASE("property: Gaussian llr is affine in the statistic") {
    const double theta = 1.7;
    const auto pair = DistributionPair::gaussian_shift(theta);
    Stream rng(77);
    for (std::size_t len = 1; len < 50; len += 7) {
        const auto ys = pair.sample(Hypothesis::Null, len, rng);
        const double t = pair.test_statistic(ys);
        CHECK(pair.llr(ys) ==
              doctest::Approx(theta * t - static_cast<double>(len) * theta * theta / 2.0).epsilon(1e-12));
    }
}
