#include "seqsparse/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/random/normal_distribution.hpp>

#include "seqsparse/errors.hpp"

namespace seqsparse {

namespace {

// Ratio comparisons against rho tolerate this much accumulated rounding in a
// computed CDF.
constexpr double kCdfSlack = 1e-12;
constexpr double kResolutionMass = 0.02;

double standard_normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

// p * log(p / q) with the 0 log 0 = 0 convention.
double kl_term(double p, double q) {
    if (p == 0.0) return 0.0;
    return p * std::log(p / q);
}

void check_rho(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("rho must lie in (0, 1)");
}

void check_count(std::size_t count) {
    if (count == 0) throw InvalidArgument("sample count must be at least 1");
}

// Smallest integer g with P(Binomial(count, p) <= g) >= rho.
double binomial_quantile(std::size_t count, double p, double rho) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return static_cast<double>(count);
    const double n = static_cast<double>(count);
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    const double lgn = std::lgamma(n + 1.0);
    double cdf = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double kk = static_cast<double>(k);
        cdf += std::exp(lgn - std::lgamma(kk + 1.0) - std::lgamma(n - kk + 1.0) + kk * lp + (n - kk) * lq);
        if (cdf >= rho - kCdfSlack) return kk;
    }
    return n;
}

}  // namespace

std::string to_string(Family family) {
    switch (family) {
        case Family::GaussianShift: return "gaussian";
        case Family::BernoulliPair: return "bernoulli";
        case Family::GeneralMLR: return "general";
    }
    return "unknown";
}

struct DistributionPair::GeneralState {
    GeneralModel model;

    std::once_flag stats_once;
    LlrStats stats;
    bool stats_finite = true;

    std::mutex cache_mutex;
    std::map<std::size_t, std::shared_ptr<const std::vector<double>>> null_cache;
};

DistributionPair DistributionPair::gaussian_shift(double theta, bool alt_known) {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw InvalidArgument("GaussianShift requires finite theta > 0");
    DistributionPair pair(Family::GaussianShift, alt_known);
    pair.theta_ = theta;
    return pair;
}

DistributionPair DistributionPair::bernoulli(double p0, double p1, bool alt_known) {
    if (!(p0 >= 0.0 && p0 <= 1.0 && p1 >= 0.0 && p1 <= 1.0))
        throw InvalidArgument("BernoulliPair requires p0, p1 in [0, 1]");
    if (p1 < p0) throw InvalidArgument("BernoulliPair requires p1 >= p0 (count of ones must be the monotone statistic)");
    DistributionPair pair(Family::BernoulliPair, alt_known);
    pair.p0_ = p0;
    pair.p1_ = p1;
    return pair;
}

DistributionPair DistributionPair::general(GeneralModel model, bool alt_known) {
    if (!model.draw || !model.statistic) throw InvalidArgument("GeneralMLR requires draw and statistic callbacks");
    if (alt_known && !model.log_ratio) throw InvalidArgument("GeneralMLR with a known alternative requires log_ratio");
    if (model.mc_draws < 100) throw InvalidArgument("GeneralMLR requires at least 100 Monte Carlo draws");
    DistributionPair pair(Family::GeneralMLR, alt_known);
    pair.general_ = std::make_shared<GeneralState>();
    pair.general_->model = std::move(model);
    return pair;
}

double DistributionPair::draw(Stream& rng, Hypothesis h) const {
    switch (family_) {
        case Family::GaussianShift: {
            boost::random::normal_distribution<double> z;
            const double y = z(rng);
            return h == Hypothesis::Alt ? y + theta_ : y;
        }
        case Family::BernoulliPair: {
            const double p = h == Hypothesis::Alt ? p1_ : p0_;
            return rng.uniform01() < p ? 1.0 : 0.0;
        }
        case Family::GeneralMLR:
            return general_->model.draw(rng, h);
    }
    return 0.0;
}

std::vector<double> DistributionPair::sample(Hypothesis h, std::size_t count, Stream& rng) const {
    check_count(count);
    std::vector<double> out(count);
    for (auto& y : out) y = draw(rng, h);
    return out;
}

double DistributionPair::log_ratio(double y) const {
    if (!alt_known_) throw QueryNotPermitted("log-likelihood ratio requested for a pair with unknown alternative");
    switch (family_) {
        case Family::GaussianShift:
            return theta_ * y - 0.5 * theta_ * theta_;
        case Family::BernoulliPair:
            if (p0_ == p1_) return 0.0;
            return y != 0.0 ? std::log(p1_ / p0_) : std::log((1.0 - p1_) / (1.0 - p0_));
        case Family::GeneralMLR:
            return general_->model.log_ratio(y);
    }
    return 0.0;
}

double DistributionPair::llr(std::span<const double> observations) const {
    if (!alt_known_) throw QueryNotPermitted("log-likelihood ratio requested for a pair with unknown alternative");
    double sum = 0.0;
    for (double y : observations) sum += log_ratio(y);
    return sum;
}

LlrStats DistributionPair::llr_stats() const {
    LlrStats st;
    switch (family_) {
        case Family::GaussianShift:
            st.d01 = st.d10 = 0.5 * theta_ * theta_;
            st.var01 = theta_ * theta_;
            break;
        case Family::BernoulliPair: {
            if (p0_ == p1_) break;
            st.d01 = kl_term(p0_, p1_) + kl_term(1.0 - p0_, 1.0 - p1_);
            st.d10 = kl_term(p1_, p0_) + kl_term(1.0 - p1_, 1.0 - p0_);
            if (p0_ > 0.0 && p0_ < 1.0) {
                const double gap = std::log(p1_ / p0_) - std::log((1.0 - p1_) / (1.0 - p0_));
                st.var01 = p0_ * (1.0 - p0_) * gap * gap;
            }
            break;
        }
        case Family::GeneralMLR: {
            auto& g = *general_;
            if (!g.model.log_ratio) throw QueryNotPermitted("divergences need the GeneralMLR log_ratio callback");
            std::call_once(g.stats_once, [&g] {
                const std::size_t draws = g.model.mc_draws;
                Stream null_rng = substream(g.model.mc_seed, 0, 1);
                Stream alt_rng = substream(g.model.mc_seed, 0, 2);
                double mean0 = 0.0, m2 = 0.0, mean1 = 0.0;
                // Welford under P0; plain mean under P1.
                for (std::size_t i = 0; i < draws; ++i) {
                    const double x = g.model.log_ratio(g.model.draw(null_rng, Hypothesis::Null));
                    const double delta = x - mean0;
                    mean0 += delta / static_cast<double>(i + 1);
                    m2 += delta * (x - mean0);
                    mean1 += g.model.log_ratio(g.model.draw(alt_rng, Hypothesis::Alt));
                }
                g.stats.d01 = -mean0;
                g.stats.d10 = mean1 / static_cast<double>(draws);
                g.stats.var01 = m2 / static_cast<double>(draws - 1);
            });
            st = g.stats;
            break;
        }
    }
    st.dkl = std::max(st.d01, st.d10);
    if (!std::isfinite(st.d01) || !std::isfinite(st.d10) || !std::isfinite(st.var01))
        throw NonFiniteDivergence("divergence of the " + to_string(family_) + " pair is not finite");
    return st;
}

double DistributionPair::test_statistic(std::span<const double> observations) const {
    if (family_ == Family::GeneralMLR) return general_->model.statistic(observations);
    // Sum of observations; for 0/1 observations this is the count of ones.
    return std::accumulate(observations.begin(), observations.end(), 0.0);
}

std::shared_ptr<const std::vector<double>> DistributionPair::sorted_null_statistics(std::size_t count) const {
    auto& g = *general_;
    {
        std::lock_guard lock(g.cache_mutex);
        if (auto it = g.null_cache.find(count); it != g.null_cache.end()) return it->second;
    }
    // Computed outside the lock; a racing duplicate produces identical values.
    auto stats = std::make_shared<std::vector<double>>(g.model.mc_draws);
    Stream rng = substream(g.model.mc_seed, count, 3);
    std::vector<double> block(count);
    for (auto& t : *stats) {
        for (auto& y : block) y = g.model.draw(rng, Hypothesis::Null);
        t = g.model.statistic(block);
    }
    std::sort(stats->begin(), stats->end());
    std::lock_guard lock(g.cache_mutex);
    return g.null_cache.emplace(count, std::move(stats)).first->second;
}

double DistributionPair::null_quantile(std::size_t count, double rho) const {
    check_count(count);
    check_rho(rho);
    switch (family_) {
        case Family::GaussianShift:
            return std::sqrt(static_cast<double>(count)) * standard_normal_quantile(rho);
        case Family::BernoulliPair:
            return binomial_quantile(count, p0_, rho);
        case Family::GeneralMLR: {
            const auto stats = sorted_null_statistics(count);
            const auto rank = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(stats->size()) - kCdfSlack));
            return (*stats)[std::max<std::size_t>(rank, 1) - 1];
        }
    }
    return 0.0;
}

double DistributionPair::quantile_resolution(std::size_t count, double rho) const {
    check_count(count);
    check_rho(rho);
    const double lower = std::max(rho - kResolutionMass, 1e-6);
    switch (family_) {
        case Family::GaussianShift:
            return std::sqrt(static_cast<double>(count)) *
                   (standard_normal_quantile(rho) - standard_normal_quantile(lower));
        case Family::BernoulliPair:
            return 1.0;
        case Family::GeneralMLR:
            return null_quantile(count, rho) - null_quantile(count, lower);
    }
    return 0.0;
}

}  // namespace seqsparse
