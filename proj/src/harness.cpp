#include "seqsparse/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>
#include <type_traits>

#include "seqsparse/errors.hpp"

namespace seqsparse {

namespace {

constexpr double kZ95 = 1.959963984540054;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrialSummary {
    bool exact = false;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::uint64_t total_samples = 0;
    std::uint64_t draws = 0;
    bool truncated = false;
    std::vector<StepRecord> steps;
    SprtTrace sprt;
};

TrialSummary summarize(RecoveryOutcome&& outcome) {
    TrialSummary t;
    t.exact = outcome.exact;
    t.false_positives = outcome.false_positives;
    t.false_negatives = outcome.false_negatives;
    t.total_samples = outcome.total_samples;
    t.draws = outcome.draws;
    t.truncated = outcome.truncated;
    t.steps = std::move(outcome.steps);
    t.sprt = outcome.sprt;
    return t;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Sequential two-pass mean and standard error; order-fixed for bitwise
// reproducibility.
template <typename Pred>
MeanSe mean_se_of_totals(const std::vector<TrialSummary>& trials, Pred keep, std::size_t& count) {
    count = 0;
    double sum = 0.0;
    for (const auto& t : trials)
        if (keep(t)) {
            sum += static_cast<double>(t.total_samples);
            ++count;
        }
    MeanSe out;
    if (count == 0) {
        out.mean = kNaN;
        out.se = kNaN;
        return out;
    }
    out.mean = sum / static_cast<double>(count);
    if (count < 2) return out;
    double ss = 0.0;
    for (const auto& t : trials)
        if (keep(t)) {
            const double d = static_cast<double>(t.total_samples) - out.mean;
            ss += d * d;
        }
    out.se = std::sqrt(ss / static_cast<double>(count - 1) / static_cast<double>(count));
    return out;
}

void echo_config(MonteCarloReport& r, const ExperimentSpec& spec) {
    r.label = spec.label;
    r.n = spec.n;
    r.s = spec.s;
    r.procedure = procedure_name(spec.procedure);
    r.family = to_string(spec.pair.family());
    r.theta = spec.pair.family() == Family::GaussianShift ? spec.pair.theta() : kNaN;
    r.m = r.delta = r.rho = r.epsilon = kNaN;
    std::visit(
        [&r](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, FixedSample>) {
                r.m = static_cast<double>(c.m);
            } else if constexpr (std::is_same_v<T, Sprt>) {
                r.epsilon = c.epsilon;
            } else if constexpr (std::is_same_v<T, SimpleST>) {
                r.m = static_cast<double>(c.m);
                r.delta = c.delta;
            } else {
                r.m = static_cast<double>(c.m);
                r.delta = c.delta;
                r.rho = c.rho;
            }
        },
        spec.procedure);
}

void attach_bounds(MonteCarloReport& r, const ExperimentSpec& spec) {
    const bool fixed = std::holds_alternative<FixedSample>(spec.procedure);
    // SPRT has no budget input; its regime is judged on realized usage.
    const double m_eff = std::isnan(r.m) ? r.avg_samples_per_dim : r.m;
    r.seq_rate = r.nonseq_rate = kNaN;
    LlrStats stats;
    try {
        stats = spec.pair.llr_stats();
    } catch (const Error&) {
        r.regime = Regime::Indeterminate;
        return;
    }
    if (stats.d01 > 0.0) r.seq_rate = seq_rate(spec.s, stats);
    if (stats.d10 > 0.0) r.nonseq_rate = nonseq_rate(spec.n, stats);
    r.regime = classify_regime(m_eff, spec.n, spec.s, stats,
                               fixed ? ProcedureKind::FixedSample : ProcedureKind::Sequential);
    if (stats.dkl > 0.0) {
        const double delta = std::isnan(r.delta) ? 0.05 : r.delta;
        r.bound_context = seq_lower_bound(spec.s, delta, stats, m_eff);
        r.bound_context.inputs.n = spec.n;
        r.bound_context.inputs.epsilon = std::isnan(r.epsilon) ? 0.0 : r.epsilon;
        r.bound_context.inputs.rho = std::isnan(r.rho) ? 0.0 : r.rho;
    }
}

MonteCarloReport aggregate(const ExperimentSpec& spec, const std::vector<TrialSummary>& trials) {
    MonteCarloReport r;
    echo_config(r, spec);
    r.trials = trials.size();
    const std::uint64_t total = trials.size();
    std::uint64_t truncated = 0;
    for (const auto& t : trials) {
        r.failed_trials += t.exact ? 0 : 1;
        r.false_positive_events += t.false_positives;
        r.false_negative_events += t.false_negatives;
        r.total_draws += t.draws;
        truncated += t.truncated ? 1 : 0;
    }
    r.fwer_hat = static_cast<double>(r.failed_trials) / static_cast<double>(total);
    r.fwer_halfwidth = proportion_halfwidth(r.failed_trials, total);
    r.null_components = total * (spec.n - spec.s);
    r.alt_components = total * spec.s;
    r.alpha_hat = static_cast<double>(r.false_positive_events) / static_cast<double>(r.null_components);
    r.beta_hat = static_cast<double>(r.false_negative_events) / static_cast<double>(r.alt_components);
    r.truncation_rate = static_cast<double>(truncated) / static_cast<double>(total);

    std::size_t count = 0;
    const MeanSe all = mean_se_of_totals(trials, [](const TrialSummary&) { return true; }, count);
    r.mean_total_samples = all.mean;
    r.se_total_samples = all.se;
    r.avg_samples_per_dim = all.mean / static_cast<double>(spec.n);
    const MeanSe cond =
        mean_se_of_totals(trials, [](const TrialSummary& t) { return t.false_negatives == 0; }, count);
    r.conditional_trials = count;
    r.conditional_mean_total = cond.mean;
    r.conditional_se_total = cond.se;

    if (!std::isnan(r.m) && !std::holds_alternative<Sprt>(spec.procedure)) {
        const double cap = static_cast<double>(spec.n) * r.m;
        const MeanSe& basis = count > 0 ? cond : all;
        r.budget_ok = basis.mean <= cap + 3.0 * basis.se;
    }

    if (!trials.empty() && !trials.front().steps.empty()) {
        r.steps.resize(trials.front().steps.size());
        for (std::size_t k = 0; k < r.steps.size(); ++k) {
            r.steps[k].samples_per_component = trials.front().steps[k].samples_per_component;
            r.steps[k].threshold = trials.front().steps[k].threshold;
        }
        for (const auto& t : trials)
            for (std::size_t k = 0; k < r.steps.size(); ++k) {
                r.steps[k].null_entered += t.steps[k].null_entered;
                r.steps[k].null_survived += t.steps[k].null_survived;
                r.steps[k].alt_entered += t.steps[k].alt_entered;
                r.steps[k].alt_survived += t.steps[k].alt_survived;
            }
    }

    if (std::holds_alternative<Sprt>(spec.procedure)) {
        SprtSummary& sp = r.sprt;
        double lower = 0.0, upper = 0.0, wsum = 0.0, wsq = 0.0;
        for (const auto& t : trials) {
            sp.lower_exits += t.sprt.lower_exits;
            sp.upper_exits += t.sprt.upper_exits;
            sp.wald_count += t.sprt.alt_untruncated;
            sp.truncated_components += t.sprt.truncated_components;
            lower += t.sprt.lower_overshoot_sum;
            upper += t.sprt.upper_overshoot_sum;
            wsum += t.sprt.wald_residual_sum;
            wsq += t.sprt.wald_residual_sumsq;
        }
        sp.mean_lower_overshoot = sp.lower_exits ? lower / static_cast<double>(sp.lower_exits) : kNaN;
        sp.mean_upper_overshoot = sp.upper_exits ? upper / static_cast<double>(sp.upper_exits) : kNaN;
        if (sp.wald_count > 1) {
            const double c = static_cast<double>(sp.wald_count);
            sp.wald_residual = wsum / c;
            const double var = std::max(0.0, (wsq - c * sp.wald_residual * sp.wald_residual) / (c - 1.0));
            sp.wald_se = std::sqrt(var / c);
        } else {
            sp.wald_residual = sp.wald_se = kNaN;
        }
    }

    attach_bounds(r, spec);
    return r;
}

}  // namespace

void validate(const ExperimentSpec& spec) {
    if (spec.trials < 1) throw ValidationError("trials must be at least 1");
    if (spec.s < 1) throw ValidationError("s must be at least 1");
    if (2 * spec.s > spec.n) throw ValidationError("sparsity constraint s <= n/2 violated (s=" +
                                                   std::to_string(spec.s) + ", n=" + std::to_string(spec.n) + ")");
    if (std::holds_alternative<Sprt>(spec.procedure) && !spec.pair.alt_known())
        throw ValidationError("sprt requires a pair with a known alternative (alt_known = true)");
    if (const auto* f = std::get_if<FixedSample>(&spec.procedure);
        f && std::holds_alternative<LlrThreshold>(f->rule) && !spec.pair.alt_known())
        throw ValidationError("llr_threshold rule requires a pair with a known alternative");
    if (std::holds_alternative<SimpleST>(spec.procedure) && spec.pair.family() != Family::GaussianShift)
        throw ValidationError("simple_st requires the gaussian family");
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial) { return derive_seed(base_seed, trial); }

ProblemInstance make_instance(const ExperimentSpec& spec, std::uint64_t trial) {
    const std::uint64_t seed = trial_seed(spec.base_seed, trial);
    return spec.placement == SupportPlacement::UniformRandom ? ProblemInstance::random_support(spec.n, spec.s, seed)
                                                             : ProblemInstance::first_s(spec.n, spec.s, seed);
}

std::size_t default_worker_count() {
    if (const char* env = std::getenv("SEQSPARSE_THREADS"); env && *env) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

MonteCarloReport run_experiment(const ExperimentSpec& spec, std::size_t workers) {
    validate(spec);
    if (workers == 0) workers = default_worker_count();
    workers = std::min(workers, spec.trials);

    std::vector<TrialSummary> results(spec.trials);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex error_mutex;
    std::size_t error_trial = std::numeric_limits<std::size_t>::max();
    std::string error_message;

    // Trials are claimed in increasing order and every claimed trial runs to
    // completion, so the lowest failing trial is independent of scheduling.
    auto worker = [&] {
        for (;;) {
            if (stop.load(std::memory_order_relaxed)) return;
            const std::size_t t = next.fetch_add(1);
            if (t >= spec.trials) return;
            try {
                const ProblemInstance instance = make_instance(spec, t);
                results[t] = summarize(run_procedure(instance, spec.pair, spec.procedure));
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                if (t < error_trial) {
                    error_trial = t;
                    error_message = e.what();
                }
                stop.store(true);
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error_trial != std::numeric_limits<std::size_t>::max())
        throw TrialError(error_trial, trial_seed(spec.base_seed, error_trial), error_message);
    return aggregate(spec, results);
}

std::vector<SweepEntry> sweep(const std::vector<ExperimentSpec>& specs, std::size_t workers) {
    std::vector<SweepEntry> out;
    out.reserve(specs.size());
    for (const auto& spec : specs) {
        SweepEntry entry;
        try {
            entry.report = run_experiment(spec, workers);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

double fwer_oracle(double alpha, double beta, std::size_t n, std::size_t s) {
    if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0))
        throw InvalidArgument("alpha and beta must lie in [0, 1]");
    if (s > n) throw InvalidArgument("s must not exceed n");
    const double log_keep =
        static_cast<double>(s) * std::log1p(-beta) + static_cast<double>(n - s) * std::log1p(-alpha);
    return -std::expm1(log_keep);
}

double binomial_se(double p, std::uint64_t total) {
    if (total == 0) return kNaN;
    return std::sqrt(p * (1.0 - p) / static_cast<double>(total));
}

double proportion_halfwidth(std::uint64_t successes, std::uint64_t total) {
    if (total == 0) return kNaN;
    const double nn = static_cast<double>(total);
    const double p = static_cast<double>(successes) / nn;
    if (successes >= 10 && total - successes >= 10) return kZ95 * std::sqrt(p * (1.0 - p) / nn);
    const double z2 = kZ95 * kZ95;
    return kZ95 / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
}

}  // namespace seqsparse
