#include "seqsparse/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <type_traits>

#include <boost/random/uniform_int_distribution.hpp>

#include "seqsparse/errors.hpp"

namespace seqsparse {

namespace {

// Rounding guard for ceil/floor of schedule formulas whose exact value is an
// integer but whose floating evaluation may land a few ulps off.
constexpr double kIntegerSnap = 1e-9;

double snap_ceil(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= kIntegerSnap * std::max(1.0, std::abs(x))) return r;
    return std::ceil(x);
}

double snap_floor(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= kIntegerSnap * std::max(1.0, std::abs(x))) return r;
    return std::floor(x);
}

void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
}

Hypothesis hypothesis_of(const ProblemInstance& instance, std::size_t i) {
    return instance.in_support(i) ? Hypothesis::Alt : Hypothesis::Null;
}

// Fills in the error counts and totals from estimated_support and
// samples_per_index.
void finalize(RecoveryOutcome& out, const ProblemInstance& instance) {
    std::sort(out.estimated_support.begin(), out.estimated_support.end());
    out.total_samples = std::accumulate(out.samples_per_index.begin(), out.samples_per_index.end(), std::uint64_t{0});
    const ErrorCounts counts = classify_outcome(out, instance);
    out.false_positives = counts.alpha_events;
    out.false_negatives = counts.beta_events;
    out.exact = counts.exact;
}

// Draws `count` observations for component i on `step` and returns the test
// statistic. `buffer` is scratch space for non-additive statistics.
double block_statistic(const DistributionPair& pair, Stream& rng, Hypothesis h, std::size_t count,
                       std::vector<double>& buffer) {
    if (pair.additive_statistic()) {
        double sum = 0.0;
        for (std::size_t j = 0; j < count; ++j) sum += pair.draw(rng, h);
        return sum;
    }
    buffer.resize(count);
    for (auto& y : buffer) y = pair.draw(rng, h);
    return pair.test_statistic(buffer);
}

void record_step(StepRecord& step, bool alt, bool survived) {
    if (alt) {
        ++step.alt_entered;
        step.alt_survived += survived ? 1 : 0;
    } else {
        ++step.null_entered;
        step.null_survived += survived ? 1 : 0;
    }
}

}  // namespace

ProblemInstance::ProblemInstance(std::size_t n, std::vector<std::size_t> support, std::uint64_t seed,
                                 std::vector<std::uint64_t> stream_keys)
    : n_(n), support_(std::move(support)), membership_(n, 0), seed_(seed), stream_keys_(std::move(stream_keys)) {
    if (n_ < 2) throw InvalidArgument("n must be at least 2");
    if (support_.empty()) throw InvalidArgument("support must contain at least one index (s >= 1)");
    if (2 * support_.size() > n_) throw InvalidArgument("sparsity must satisfy s <= n/2");
    for (std::size_t i : support_) {
        if (i >= n_) throw InvalidArgument("support index " + std::to_string(i) + " out of range");
        if (membership_[i]) throw InvalidArgument("support index " + std::to_string(i) + " repeated");
        membership_[i] = 1;
    }
    std::sort(support_.begin(), support_.end());
    if (!stream_keys_.empty() && stream_keys_.size() != n_)
        throw InvalidArgument("stream_keys must be empty or have one key per component");
}

ProblemInstance ProblemInstance::random_support(std::size_t n, std::size_t s, std::uint64_t seed) {
    if (s > n) throw InvalidArgument("sparsity exceeds dimension");
    // Partial Fisher-Yates on a stream no component key can reach.
    Stream rng(derive_seed(seed, ~std::uint64_t{0}, ~std::uint64_t{0}));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < s; ++i) {
        boost::random::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(perm[i], perm[pick(rng)]);
    }
    perm.resize(s);
    return ProblemInstance(n, std::move(perm), seed);
}

ProblemInstance ProblemInstance::first_s(std::size_t n, std::size_t s, std::uint64_t seed) {
    std::vector<std::size_t> support(s);
    std::iota(support.begin(), support.end(), std::size_t{0});
    return ProblemInstance(n, std::move(support), seed);
}

std::string procedure_name(const ProcedureConfig& cfg) {
    struct Visitor {
        std::string operator()(const FixedSample&) const { return "fixed"; }
        std::string operator()(const Sprt&) const { return "sprt"; }
        std::string operator()(const SimpleST&) const { return "simple_st"; }
        std::string operator()(const GeneralST&) const { return "general_st"; }
    };
    return std::visit(Visitor{}, cfg);
}

std::size_t simple_st_passes(std::size_t n, double delta) {
    check_delta(delta);
    return static_cast<std::size_t>(snap_ceil(std::log2(2.0 * static_cast<double>(n) / delta)));
}

std::size_t general_st_steps(std::size_t n, std::size_t s, double delta, double rho) {
    check_delta(delta);
    if (!(rho >= 0.5 && rho < 1.0)) throw InvalidArgument("rho must lie in [1/2, 1)");
    if (s >= n) throw InvalidArgument("need n - s >= 1");
    const double ratio = 2.0 * static_cast<double>(n - s) / delta;
    return static_cast<std::size_t>(snap_ceil(std::log(ratio) / -std::log1p(-rho)));
}

std::vector<std::size_t> general_st_schedule(std::size_t n, std::size_t s, std::size_t m, double rho,
                                             std::size_t steps) {
    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(steps);
    const double scale = static_cast<double>(m) * rho * rho * nn / (nn + static_cast<double>(s) * kk * kk);
    std::vector<std::size_t> schedule(steps);
    for (std::size_t k = 1; k <= steps; ++k)
        schedule[k - 1] = static_cast<std::size_t>(snap_floor(scale * static_cast<double>(k)));
    return schedule;
}

std::uint64_t default_sprt_cap(std::size_t s, double d01) {
    constexpr std::uint64_t kBase = 10000;
    if (!(d01 > 0.0) || !std::isfinite(d01)) return kBase;
    const double rate = std::ceil(std::log(static_cast<double>(s)) / d01);
    return kBase * static_cast<std::uint64_t>(std::max(1.0, rate));
}

RecoveryOutcome run_fixed_sample(const ProblemInstance& instance, const DistributionPair& pair,
                                 const FixedSample& cfg) {
    if (cfg.m < 1) throw InvalidArgument("fixed-sample budget m must be at least 1");
    const bool use_llr = std::holds_alternative<LlrThreshold>(cfg.rule);
    if (use_llr && !pair.alt_known())
        throw QueryNotPermitted("llr_threshold rule needs the alternative distribution");

    const std::size_t n = instance.n();
    RecoveryOutcome out;
    out.samples_per_index.assign(n, cfg.m);
    std::vector<double> score(n);
    std::vector<double> buffer(cfg.m);
    for (std::size_t i = 0; i < n; ++i) {
        Stream rng = substream(instance.seed(), instance.stream_key(i));
        const Hypothesis h = hypothesis_of(instance, i);
        for (auto& y : buffer) y = pair.draw(rng, h);
        out.draws += cfg.m;
        score[i] = use_llr ? pair.llr(buffer) : pair.test_statistic(buffer);
    }

    if (use_llr) {
        const double tau = std::get<LlrThreshold>(cfg.rule).tau;
        for (std::size_t i = 0; i < n; ++i)
            if (score[i] > tau) out.estimated_support.push_back(i);
    } else {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const auto s = static_cast<std::ptrdiff_t>(instance.s());
        std::partial_sort(order.begin(), order.begin() + s, order.end(), [&](std::size_t a, std::size_t b) {
            return score[a] != score[b] ? score[a] > score[b] : a < b;
        });
        out.estimated_support.assign(order.begin(), order.begin() + s);
    }
    finalize(out, instance);
    return out;
}

RecoveryOutcome run_sprt(const ProblemInstance& instance, const DistributionPair& pair, const Sprt& cfg) {
    if (!pair.alt_known()) throw QueryNotPermitted("the SPRT needs the alternative distribution");
    if (!(cfg.epsilon > 0.0)) throw InvalidArgument("SPRT epsilon must be positive");

    const std::size_t n = instance.n();
    const std::size_t s = instance.s();
    const double log_lower = -(1.0 + cfg.epsilon) * std::log(static_cast<double>(s));
    const double log_upper = (1.0 + cfg.epsilon) * std::log(static_cast<double>(n - s));
    const double midpoint = 0.5 * (log_lower + log_upper);

    // Diagnostics only; degenerate pairs simply skip the Wald residual.
    double d10 = std::numeric_limits<double>::quiet_NaN();
    double d01 = std::numeric_limits<double>::quiet_NaN();
    try {
        const LlrStats stats = pair.llr_stats();
        d10 = stats.d10;
        d01 = stats.d01;
    } catch (const NonFiniteDivergence&) {
    }
    const std::uint64_t cap = cfg.j_max > 0 ? cfg.j_max : default_sprt_cap(s, d01);
    const bool wald_ok = d10 > 0.0 && std::isfinite(d10);

    RecoveryOutcome out;
    out.samples_per_index.assign(n, 0);
    SprtTrace& trace = out.sprt;
    for (std::size_t i = 0; i < n; ++i) {
        Stream rng = substream(instance.seed(), instance.stream_key(i));
        const Hypothesis h = hypothesis_of(instance, i);
        double llr = 0.0;
        std::uint64_t j = 0;
        bool include = false;
        bool truncated = false;
        for (;;) {
            if (llr < log_lower) {
                ++trace.lower_exits;
                trace.lower_overshoot_sum += log_lower - llr;
                break;
            }
            if (llr > log_upper) {
                ++trace.upper_exits;
                trace.upper_overshoot_sum += llr - log_upper;
                include = true;
                break;
            }
            if (j == cap) {
                truncated = true;
                include = llr > midpoint;
                break;
            }
            llr += pair.log_ratio(pair.draw(rng, h));
            ++j;
        }
        out.draws += j;
        out.samples_per_index[i] = j;
        if (include) out.estimated_support.push_back(i);
        if (truncated) {
            ++trace.truncated_components;
            out.truncated = true;
        } else if (h == Hypothesis::Alt && wald_ok) {
            const double residual = static_cast<double>(j) - llr / d10;
            ++trace.alt_untruncated;
            trace.wald_residual_sum += residual;
            trace.wald_residual_sumsq += residual * residual;
        }
    }
    finalize(out, instance);
    return out;
}

RecoveryOutcome run_simple_st(const ProblemInstance& instance, const DistributionPair& pair, const SimpleST& cfg) {
    if (pair.family() != Family::GaussianShift)
        throw UnsupportedFamily("simple sequential thresholding is defined for the Gaussian shift pair only");
    if (cfg.m < 2 || cfg.m % 2 != 0) throw InvalidArgument("simple sequential thresholding needs an even m >= 2");
    const std::size_t n = instance.n();
    const std::size_t passes = simple_st_passes(n, cfg.delta);
    const std::size_t half = cfg.m / 2;

    RecoveryOutcome out;
    out.samples_per_index.assign(n, 0);
    out.steps.assign(passes, StepRecord{half, 0.0});
    std::vector<double> buffer;
    for (std::size_t i = 0; i < n; ++i) {
        const Hypothesis h = hypothesis_of(instance, i);
        bool alive = true;
        for (std::size_t k = 1; k <= passes && alive; ++k) {
            Stream rng = substream(instance.seed(), instance.stream_key(i), k);
            const double t = block_statistic(pair, rng, h, half, buffer);
            out.draws += half;
            out.samples_per_index[i] += half;
            alive = t > 0.0;
            record_step(out.steps[k - 1], h == Hypothesis::Alt, alive);
        }
        if (alive) out.estimated_support.push_back(i);
    }
    finalize(out, instance);
    return out;
}

RecoveryOutcome run_general_st(const ProblemInstance& instance, const DistributionPair& pair,
                               const GeneralST& cfg) {
    const std::size_t n = instance.n();
    const std::size_t s = instance.s();
    const std::size_t steps = general_st_steps(n, s, cfg.delta, cfg.rho);
    const std::vector<std::size_t> schedule = general_st_schedule(n, s, cfg.m, cfg.rho, steps);
    if (schedule.front() < 1)
        throw ScheduleUnderflow("budget m=" + std::to_string(cfg.m) + " gives m_1=0 over " + std::to_string(steps) +
                                " steps; increase m");

    RecoveryOutcome out;
    out.samples_per_index.assign(n, 0);
    out.steps.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        out.steps[k].samples_per_component = schedule[k];
        out.steps[k].threshold = pair.null_quantile(schedule[k], cfg.rho);
    }
    std::vector<double> buffer;
    for (std::size_t i = 0; i < n; ++i) {
        const Hypothesis h = hypothesis_of(instance, i);
        bool alive = true;
        for (std::size_t k = 1; k <= steps && alive; ++k) {
            StepRecord& step = out.steps[k - 1];
            Stream rng = substream(instance.seed(), instance.stream_key(i), k);
            const double t = block_statistic(pair, rng, h, step.samples_per_component, buffer);
            out.draws += step.samples_per_component;
            out.samples_per_index[i] += step.samples_per_component;
            alive = t > step.threshold;
            record_step(step, h == Hypothesis::Alt, alive);
        }
        if (alive) out.estimated_support.push_back(i);
    }
    finalize(out, instance);
    return out;
}

RecoveryOutcome run_procedure(const ProblemInstance& instance, const DistributionPair& pair,
                              const ProcedureConfig& cfg) {
    return std::visit(
        [&](const auto& c) -> RecoveryOutcome {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, FixedSample>) return run_fixed_sample(instance, pair, c);
            else if constexpr (std::is_same_v<T, Sprt>) return run_sprt(instance, pair, c);
            else if constexpr (std::is_same_v<T, SimpleST>) return run_simple_st(instance, pair, c);
            else return run_general_st(instance, pair, c);
        },
        cfg);
}

ErrorCounts classify_outcome(const RecoveryOutcome& outcome, const ProblemInstance& instance) {
    if (outcome.samples_per_index.size() != instance.n())
        throw MismatchedInstance("outcome covers " + std::to_string(outcome.samples_per_index.size()) +
                                 " components, instance has " + std::to_string(instance.n()));
    ErrorCounts counts;
    std::size_t hits = 0;
    for (std::size_t i : outcome.estimated_support) {
        if (i >= instance.n()) throw MismatchedInstance("estimated index " + std::to_string(i) + " out of range");
        if (instance.in_support(i)) ++hits;
        else ++counts.alpha_events;
    }
    counts.beta_events = instance.s() - hits;
    counts.exact = counts.alpha_events == 0 && counts.beta_events == 0;
    return counts;
}

}  // namespace seqsparse
