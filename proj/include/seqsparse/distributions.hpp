#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqsparse/random.hpp"

namespace seqsparse {

enum class Family { GaussianShift, BernoulliPair, GeneralMLR };
enum class Hypothesis { Null, Alt };

std::string to_string(Family family);

// Divergences of the single-sample log-likelihood ratio, in nats.
struct LlrStats {
    double d01 = 0.0;    // D(P0 || P1)
    double d10 = 0.0;    // D(P1 || P0)
    double dkl = 0.0;    // max(d01, d10)
    double var01 = 0.0;  // variance of log(P1/P0)(Y) under Y ~ P0
};

// User-supplied monotone-likelihood-ratio family.
//
// `draw` produces one observation under the requested hypothesis.
// `statistic` maps a block of observations to a scalar whose log-likelihood
// ratio is strictly increasing in it. `log_ratio` is the pointwise
// log(P1(y)/P0(y)); leave it empty when the alternative is not known, in
// which case divergences and LLR queries are unavailable.
struct GeneralModel {
    std::function<double(Stream&, Hypothesis)> draw;
    std::function<double(std::span<const double>)> statistic;
    std::function<double(double)> log_ratio;
    // Monte Carlo resolution for divergences and null quantiles.
    std::size_t mc_draws = 200000;
    std::uint64_t mc_seed = 0x5eed5eedULL;
};

// Null/alternative pair. Immutable after construction; copies share the
// (thread-safe) quantile cache of GeneralMLR pairs.
class DistributionPair {
public:
    // N(0,1) against N(theta,1), theta > 0.
    static DistributionPair gaussian_shift(double theta, bool alt_known = true);
    // Bernoulli(p0) against Bernoulli(p1), 0 <= p0 <= p1 <= 1.
    static DistributionPair bernoulli(double p0, double p1, bool alt_known = true);
    static DistributionPair general(GeneralModel model, bool alt_known);

    Family family() const noexcept { return family_; }
    bool alt_known() const noexcept { return alt_known_; }
    double theta() const noexcept { return theta_; }
    double p0() const noexcept { return p0_; }
    double p1() const noexcept { return p1_; }

    double draw(Stream& rng, Hypothesis h) const;
    std::vector<double> sample(Hypothesis h, std::size_t count, Stream& rng) const;

    // Pointwise log(P1(y)/P0(y)). Throws QueryNotPermitted if !alt_known().
    double log_ratio(double y) const;
    // Sum of log_ratio over the observations; 0 for an empty sequence.
    double llr(std::span<const double> observations) const;

    LlrStats llr_stats() const;

    // Monotone sufficient statistic: sum for GaussianShift, count of ones for
    // BernoulliPair, the user statistic for GeneralMLR.
    double test_statistic(std::span<const double> observations) const;
    // True when the statistic is a plain sum of per-observation terms, so
    // procedures can accumulate it without buffering.
    bool additive_statistic() const noexcept { return family_ != Family::GeneralMLR; }

    // min{g : P(T^(count) <= g | null) >= rho}.
    double null_quantile(std::size_t count, double rho) const;
    // Shift in g that removes about 0.02 of null probability below the
    // quantile (continuous families) or one lattice step (Bernoulli).
    double quantile_resolution(std::size_t count, double rho) const;

private:
    struct GeneralState;

    DistributionPair(Family family, bool alt_known) : family_(family), alt_known_(alt_known) {}

    std::shared_ptr<const std::vector<double>> sorted_null_statistics(std::size_t count) const;

    Family family_;
    bool alt_known_;
    double theta_ = 0.0;
    double p0_ = 0.0;
    double p1_ = 0.0;
    std::shared_ptr<GeneralState> general_;
};

}  // namespace seqsparse
