#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "seqsparse/distributions.hpp"

namespace seqsparse {

// n components, s of which (the support) follow the alternative.
// Indices are 0-based. `stream_keys`, when non-empty, maps each index to the
// key of its random substream; the default key of index i is i.
class ProblemInstance {
public:
    ProblemInstance(std::size_t n, std::vector<std::size_t> support, std::uint64_t seed,
                    std::vector<std::uint64_t> stream_keys = {});

    // Support drawn uniformly from all s-subsets using a stream derived from seed.
    static ProblemInstance random_support(std::size_t n, std::size_t s, std::uint64_t seed);
    static ProblemInstance first_s(std::size_t n, std::size_t s, std::uint64_t seed);

    std::size_t n() const noexcept { return n_; }
    std::size_t s() const noexcept { return support_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::size_t>& support() const noexcept { return support_; }
    bool in_support(std::size_t i) const noexcept { return membership_[i] != 0; }
    std::uint64_t stream_key(std::size_t i) const noexcept { return stream_keys_.empty() ? i : stream_keys_[i]; }

private:
    std::size_t n_;
    std::vector<std::size_t> support_;  // sorted ascending
    std::vector<std::uint8_t> membership_;
    std::uint64_t seed_;
    std::vector<std::uint64_t> stream_keys_;
};

// Per-step bookkeeping for the thresholding procedures.
struct StepRecord {
    std::size_t samples_per_component = 0;  // m_k
    double threshold = 0.0;                 // gamma_k
    std::size_t null_entered = 0;
    std::size_t null_survived = 0;
    std::size_t alt_entered = 0;
    std::size_t alt_survived = 0;
};

// Sufficient statistics of one trial's SPRT paths, used for overshoot and
// Wald-identity diagnostics.
struct SprtTrace {
    std::size_t lower_exits = 0;
    std::size_t upper_exits = 0;
    double lower_overshoot_sum = 0.0;  // sum of (log gamma_L - L) over lower exits
    double upper_overshoot_sum = 0.0;  // sum of (L - log gamma_U) over upper exits
    // Untruncated support components: D = J - L / d10.
    std::size_t alt_untruncated = 0;
    double wald_residual_sum = 0.0;
    double wald_residual_sumsq = 0.0;
    std::size_t truncated_components = 0;
};

struct RecoveryOutcome {
    std::vector<std::size_t> estimated_support;  // sorted ascending
    std::vector<std::uint64_t> samples_per_index;
    std::uint64_t total_samples = 0;
    // Observations actually drawn from the random streams, counted at the
    // draw site independently of samples_per_index.
    std::uint64_t draws = 0;
    bool exact = false;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    bool truncated = false;
    std::vector<StepRecord> steps;
    SprtTrace sprt;
};

struct LlrThreshold {
    double tau = 0.0;
};
struct TopS {};

struct FixedSample {
    std::size_t m = 1;
    std::variant<TopS, LlrThreshold> rule = TopS{};
};

struct Sprt {
    double epsilon = 0.1;
    // 0 selects the default cap 10^4 * ceil(ln s / d01).
    std::uint64_t j_max = 0;
};

struct SimpleST {
    double delta = 0.1;
    std::size_t m = 2;
};

struct GeneralST {
    double delta = 0.1;
    std::size_t m = 1;
    double rho = 0.5;
};

using ProcedureConfig = std::variant<FixedSample, Sprt, SimpleST, GeneralST>;

std::string procedure_name(const ProcedureConfig& cfg);

RecoveryOutcome run_fixed_sample(const ProblemInstance& instance, const DistributionPair& pair,
                                 const FixedSample& cfg);
RecoveryOutcome run_sprt(const ProblemInstance& instance, const DistributionPair& pair, const Sprt& cfg);
RecoveryOutcome run_simple_st(const ProblemInstance& instance, const DistributionPair& pair, const SimpleST& cfg);
RecoveryOutcome run_general_st(const ProblemInstance& instance, const DistributionPair& pair,
                               const GeneralST& cfg);
RecoveryOutcome run_procedure(const ProblemInstance& instance, const DistributionPair& pair,
                              const ProcedureConfig& cfg);

// ceil(log2(2n / delta)).
std::size_t simple_st_passes(std::size_t n, double delta);
// ceil(log_{1/(1-rho)}(2(n-s) / delta)).
std::size_t general_st_steps(std::size_t n, std::size_t s, double delta, double rho);
// m_k = floor(m k rho^2 n / (n + s K^2)) for k = 1..K.
std::vector<std::size_t> general_st_schedule(std::size_t n, std::size_t s, std::size_t m, double rho,
                                             std::size_t steps);
std::uint64_t default_sprt_cap(std::size_t s, double d01);

struct ErrorCounts {
    std::size_t alpha_events = 0;  // estimated but not in support
    std::size_t beta_events = 0;   // in support but not estimated
    bool exact = false;
};

ErrorCounts classify_outcome(const RecoveryOutcome& outcome, const ProblemInstance& instance);

}  // namespace seqsparse
