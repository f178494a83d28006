#include "seqsparse/bounds.hpp"

#include <cmath>

#include "seqsparse/errors.hpp"
#include "seqsparse/procedures.hpp"

namespace seqsparse {

namespace {

double sequential_divergence(const LlrStats& stats, DivergenceChoice choice, std::size_t n, std::size_t s) {
    switch (choice) {
        case DivergenceChoice::D01: return stats.d01;
        case DivergenceChoice::Dkl: return stats.dkl;
        case DivergenceChoice::Auto:
            return static_cast<double>(s) <= 0.01 * static_cast<double>(n) ? stats.d01 : stats.dkl;
    }
    return stats.dkl;
}

BoundInputs echo(std::size_t n, std::size_t s, double delta, double epsilon, double rho, const LlrStats& stats) {
    return BoundInputs{n, s, delta, epsilon, rho, stats.d01, stats.d10, stats.var01};
}

}  // namespace

std::string to_string(Regime regime) {
    switch (regime) {
        case Regime::Reliable: return "reliable";
        case Regime::Unreliable: return "unreliable";
        case Regime::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

BoundReport seq_lower_bound(std::size_t s, double delta, const LlrStats& stats, std::optional<double> m,
                            DivergenceChoice choice) {
    if (s < 1) throw InvalidArgument("sparsity must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
    // Without n, Auto cannot judge sparsity; it falls back to dkl.
    const double divergence = choice == DivergenceChoice::D01 ? stats.d01 : stats.dkl;
    if (!(divergence > 0.0)) throw DivergenceZero("lower bound needs a positive divergence");

    BoundReport report;
    const double numerator = std::log(static_cast<double>(s)) + std::log(1.0 / (4.0 * delta));
    report.m_required = std::max(0.0, numerator / divergence);
    report.pe_floor = 1.0 - std::exp(-delta);
    if (m) report.regime = *m <= report.m_required ? Regime::Unreliable : Regime::Indeterminate;
    report.inputs = echo(0, s, delta, 0.0, 0.0, stats);
    return report;
}

double seq_rate(std::size_t s, const LlrStats& stats) {
    if (s < 1) throw InvalidArgument("sparsity must be at least 1");
    if (!(stats.d01 > 0.0)) throw DivergenceZero("D(P0||P1) is zero; the sequential rate is unbounded");
    return std::log(static_cast<double>(s)) / stats.d01;
}

double nonseq_rate(std::size_t n, const LlrStats& stats) {
    if (n < 2) throw InvalidArgument("dimension must be at least 2");
    if (!(stats.d10 > 0.0)) throw DivergenceZero("D(P1||P0) is zero; the non-sequential rate is unbounded");
    return std::log(static_cast<double>(n)) / stats.d10;
}

SprtThresholds sprt_thresholds(std::size_t n, std::size_t s, double epsilon) {
    if (s < 1 || s >= n) throw InvalidArgument("SPRT thresholds need 1 <= s and n - s >= 1");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    SprtThresholds t;
    t.log_lower = -(1.0 + epsilon) * std::log(static_cast<double>(s));
    t.log_upper = (1.0 + epsilon) * std::log(static_cast<double>(n - s));
    t.gamma_lower = std::exp(t.log_lower);
    t.gamma_upper = std::exp(t.log_upper);
    return t;
}

double simple_st_budget(std::size_t n, std::size_t s, double delta, double theta) {
    if (s < 1 || n < 1) throw InvalidArgument("need n, s >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
    if (!(theta > 0.0)) throw InvalidArgument("theta must be positive");
    const double passes = std::log2(2.0 * static_cast<double>(n) / delta);
    return (std::log(static_cast<double>(s)) + std::log(passes) + std::log(1.0 / delta)) / (theta * theta / 4.0);
}

std::size_t next_even_budget(double budget) {
    if (!std::isfinite(budget)) throw InvalidArgument("budget must be finite");
    if (budget < 0.0) return 2;
    const auto even = static_cast<std::size_t>(2.0 * std::floor(budget / 2.0) + 2.0);
    return std::max<std::size_t>(even, 2);
}

StRate st_cn(std::size_t n, std::size_t s, double delta, double rho, std::size_t steps, const LlrStats& stats) {
    if (s < 1 || n < 1 || steps < 1) throw InvalidArgument("need n, s, K >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
    if (!(rho >= 0.5 && rho < 1.0)) throw InvalidArgument("rho must lie in [1/2, 1)");
    if (!(stats.d01 > 0.0)) throw DivergenceZero("c_n needs D(P0||P1) > 0");

    const double nn = static_cast<double>(n);
    const double ss = static_cast<double>(s);
    const double kk = static_cast<double>(steps);
    const double share = nn / (nn + ss * kk * kk);
    const double prefactor = rho * rho * share;

    double gap = stats.d01;
    if (stats.var01 > 0.0) {
        const double inner = (rho * rho * share * std::log(ss) / stats.d01 - 1.0) * (1.0 - rho);
        if (!(inner > 0.0)) throw NotPositive("c_n undefined: square-root argument is not positive");
        gap -= std::sqrt(stats.var01 / inner);
    }
    StRate rate;
    rate.c_n = prefactor * gap;
    if (!(rate.c_n > 0.0)) throw NotPositive("c_n is not positive for these inputs");
    rate.m_sufficient = (std::log(ss) + std::log(1.0 / delta) + std::log(4.0)) / rate.c_n;
    return rate;
}

StSchedule cor2_schedule(std::size_t n, std::size_t s) {
    if (s < 3) throw InvalidArgument("schedule needs s >= 3");
    const double log_s = std::log(static_cast<double>(s));
    StSchedule out;
    out.delta = 1.0 / log_s;
    out.rho = 1.0 - 1.0 / std::sqrt(log_s);
    if (out.rho < 0.5) throw InvalidArgument("rho = 1 - 1/sqrt(ln s) falls below 1/2; need ln s >= 4 (s >= 55)");
    const double log_n = std::log(static_cast<double>(n));
    if (!(static_cast<double>(s) < static_cast<double>(n) / (log_n * log_n)))
        throw SparsityRegimeViolation("schedule requires s < n / (ln n)^2");
    out.steps = general_st_steps(n, s, out.delta, out.rho);
    return out;
}

Regime classify_regime(double m, std::size_t n, std::size_t s, const LlrStats& stats, ProcedureKind kind,
                       DivergenceChoice choice) {
    if (kind == ProcedureKind::FixedSample) {
        if (!(stats.d10 > 0.0)) return Regime::Unreliable;
        return m < nonseq_rate(n, stats) ? Regime::Unreliable : Regime::Indeterminate;
    }
    const double divergence = sequential_divergence(stats, choice, n, s);
    if (!(divergence > 0.0)) return Regime::Unreliable;
    const double threshold = std::log(static_cast<double>(s)) / divergence;
    return m <= threshold ? Regime::Unreliable : Regime::Reliable;
}

}  // namespace seqsparse
