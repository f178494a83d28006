#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqsparse/bounds.hpp"
#include "seqsparse/distributions.hpp"
#include "seqsparse/procedures.hpp"

namespace seqsparse {

enum class SupportPlacement { FixedFirstS, UniformRandom };

struct ExperimentSpec {
    std::string label;
    std::size_t n = 2;
    std::size_t s = 1;
    DistributionPair pair = DistributionPair::gaussian_shift(1.0);
    ProcedureConfig procedure = FixedSample{};
    std::size_t trials = 1;
    std::uint64_t base_seed = 0;
    SupportPlacement placement = SupportPlacement::UniformRandom;
};

// Throws ValidationError naming the violated constraint.
void validate(const ExperimentSpec& spec);

// Seed of trial t: derive_seed(base_seed, t).
std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial);
ProblemInstance make_instance(const ExperimentSpec& spec, std::uint64_t trial);

// Pooled per-step counts over all trials.
struct StepSummary {
    std::size_t samples_per_component = 0;
    double threshold = 0.0;
    std::uint64_t null_entered = 0;
    std::uint64_t null_survived = 0;
    std::uint64_t alt_entered = 0;
    std::uint64_t alt_survived = 0;
};

struct SprtSummary {
    std::uint64_t lower_exits = 0;
    std::uint64_t upper_exits = 0;
    double mean_lower_overshoot = 0.0;
    double mean_upper_overshoot = 0.0;
    // Wald identity on untruncated support components: mean and standard
    // error of J - L^(J) / d10.
    std::uint64_t wald_count = 0;
    double wald_residual = 0.0;
    double wald_se = 0.0;
    std::uint64_t truncated_components = 0;
};

struct MonteCarloReport {
    // Configuration echo; NaN where a parameter does not apply.
    std::string label;
    std::size_t n = 0;
    std::size_t s = 0;
    std::string procedure;
    std::string family;
    double m = 0.0;
    double theta = 0.0;
    double delta = 0.0;
    double rho = 0.0;
    double epsilon = 0.0;

    std::size_t trials = 0;
    std::size_t failed_trials = 0;
    double fwer_hat = 0.0;
    double fwer_halfwidth = 0.0;  // 95% CI half-width
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    std::uint64_t null_components = 0;
    std::uint64_t alt_components = 0;
    std::uint64_t false_positive_events = 0;
    std::uint64_t false_negative_events = 0;

    double avg_samples_per_dim = 0.0;
    double mean_total_samples = 0.0;
    double se_total_samples = 0.0;
    // Trials with no false negatives.
    std::size_t conditional_trials = 0;
    double conditional_mean_total = 0.0;
    double conditional_se_total = 0.0;
    bool budget_ok = true;
    double truncation_rate = 0.0;  // fraction of trials with any truncated component
    std::uint64_t total_draws = 0;

    BoundReport bound_context;
    double seq_rate = 0.0;     // NaN when D(P0||P1) = 0
    double nonseq_rate = 0.0;  // NaN when D(P1||P0) = 0
    Regime regime = Regime::Indeterminate;

    std::vector<StepSummary> steps;
    SprtSummary sprt;
};

// Worker count from SEQSPARSE_THREADS, else hardware concurrency.
std::size_t default_worker_count();

// Runs spec.trials independent trials and aggregates them. Results do not
// depend on `workers` (0 = default_worker_count()). A failing trial aborts
// the experiment with TrialError carrying the lowest failing trial's seed.
MonteCarloReport run_experiment(const ExperimentSpec& spec, std::size_t workers = 0);

struct SweepEntry {
    std::optional<MonteCarloReport> report;
    std::string error;  // empty when report is set
};
// Runs every spec in order; errors are collected per entry.
std::vector<SweepEntry> sweep(const std::vector<ExperimentSpec>& specs, std::size_t workers = 0);

// 1 - (1-beta)^s (1-alpha)^(n-s).
double fwer_oracle(double alpha, double beta, std::size_t n, std::size_t s);

// 95% half-width for a proportion: normal approximation, or Wilson when
// fewer than 10 successes or failures.
double proportion_halfwidth(std::uint64_t successes, std::uint64_t total);
// sqrt(p(1-p)/total).
double binomial_se(double p, std::uint64_t total);

}  // namespace seqsparse
