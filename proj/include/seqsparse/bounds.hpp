#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "seqsparse/distributions.hpp"

namespace seqsparse {

enum class Regime { Reliable, Unreliable, Indeterminate };
std::string to_string(Regime regime);

// Which divergence sets the sequential necessary rate.
enum class DivergenceChoice {
    Auto,  // d01 when s/n <= 0.01 (sublinear sparsity), otherwise dkl
    D01,
    Dkl,
};

struct BoundInputs {
    std::size_t n = 0;
    std::size_t s = 0;
    double delta = 0.0;
    double epsilon = 0.0;
    double rho = 0.0;
    double d01 = 0.0;
    double d10 = 0.0;
    double var01 = 0.0;
};

struct BoundReport {
    double m_required = 0.0;  // samples per dimension
    double pe_floor = 0.0;    // lower bound on the FWER where applicable
    Regime regime = Regime::Indeterminate;
    BoundInputs inputs;
};

// Finite-sample necessary condition for any coordinate-wise procedure:
// m <= (ln s + ln(1/(4 delta))) / D implies P_e >= 1 - exp(-delta).
// D is dkl unless `choice` says otherwise. When `m` is given, regime is
// Unreliable for m <= m_required and Indeterminate above it.
BoundReport seq_lower_bound(std::size_t s, double delta, const LlrStats& stats, std::optional<double> m = {},
                            DivergenceChoice choice = DivergenceChoice::Dkl);

// ln(s) / d01; 0 for s = 1.
double seq_rate(std::size_t s, const LlrStats& stats);
// ln(n) / d10.
double nonseq_rate(std::size_t n, const LlrStats& stats);

struct SprtThresholds {
    double gamma_lower = 0.0;
    double gamma_upper = 0.0;
    double log_lower = 0.0;
    double log_upper = 0.0;
};
// gamma_L = s^-(1+eps), gamma_U = (n-s)^(1+eps).
SprtThresholds sprt_thresholds(std::size_t n, std::size_t s, double epsilon);

// (ln s + ln log2(2n/delta) + ln(1/delta)) / (theta^2/4); the simple
// thresholding budget must strictly exceed this value.
double simple_st_budget(std::size_t n, std::size_t s, double delta, double theta);
// Smallest even integer strictly greater than `budget`.
std::size_t next_even_budget(double budget);

struct StRate {
    double c_n = 0.0;
    double m_sufficient = 0.0;  // (ln s + ln(1/delta) + ln 4) / c_n
};
// Rate constant of general sequential thresholding. Throws NotPositive if
// c_n <= 0 or the square-root argument is not positive.
StRate st_cn(std::size_t n, std::size_t s, double delta, double rho, std::size_t steps, const LlrStats& stats);

struct StSchedule {
    double delta = 0.0;
    double rho = 0.0;
    std::size_t steps = 0;
};
// delta = 1/ln s, rho = 1 - 1/sqrt(ln s), steps from the general
// thresholding step formula.
StSchedule cor2_schedule(std::size_t n, std::size_t s);

enum class ProcedureKind { FixedSample, Sequential };

// Position of a budget m relative to the necessary rates: Unreliable below
// the applicable necessary rate; above it, Reliable for sequential
// procedures (achievable rate matches) and Indeterminate for fixed-sample
// ones (necessary only).
Regime classify_regime(double m, std::size_t n, std::size_t s, const LlrStats& stats, ProcedureKind kind,
                       DivergenceChoice choice = DivergenceChoice::Auto);

}  // namespace seqsparse
