#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seqsparse/bounds.hpp"
#include "seqsparse/config.hpp"
#include "seqsparse/errors.hpp"
#include "seqsparse/harness.hpp"
#include "seqsparse/procedures.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace seqsparse;

namespace {

void register_errors(py::module_& m) {
    static py::exception<Error> base(m, "SeqsparseError", PyExc_RuntimeError);
    // Later registrations are tried first, so subclasses win over the base.
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
    py::register_exception<QueryNotPermitted>(m, "QueryNotPermitted", base.ptr());
    py::register_exception<NonFiniteDivergence>(m, "NonFiniteDivergence", base.ptr());
    py::register_exception<UnsupportedFamily>(m, "UnsupportedFamily", base.ptr());
    py::register_exception<ScheduleUnderflow>(m, "ScheduleUnderflow", base.ptr());
    py::register_exception<MismatchedInstance>(m, "MismatchedInstance", base.ptr());
    py::register_exception<DivergenceZero>(m, "DivergenceZero", base.ptr());
    py::register_exception<NotPositive>(m, "NotPositive", base.ptr());
    py::register_exception<SparsityRegimeViolation>(m, "SparsityRegimeViolation", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<TrialError>(m, "TrialError", base.ptr());
}

void bind_distributions(py::module_& m) {
    py::enum_<Family>(m, "Family")
        .value("GaussianShift", Family::GaussianShift)
        .value("BernoulliPair", Family::BernoulliPair)
        .value("GeneralMLR", Family::GeneralMLR);
    py::enum_<Hypothesis>(m, "Hypothesis").value("Null", Hypothesis::Null).value("Alt", Hypothesis::Alt);

    py::class_<LlrStats>(m, "LlrStats")
        .def(py::init<double, double, double, double>(), "d01"_a, "d10"_a, "dkl"_a, "var01"_a)
        .def_readwrite("d01", &LlrStats::d01)
        .def_readwrite("d10", &LlrStats::d10)
        .def_readwrite("dkl", &LlrStats::dkl)
        .def_readwrite("var01", &LlrStats::var01)
        .def("__repr__", [](const LlrStats& s) {
            return "LlrStats(d01=" + format_number(s.d01) + ", d10=" + format_number(s.d10) +
                   ", dkl=" + format_number(s.dkl) + ", var01=" + format_number(s.var01) + ")";
        });

    py::class_<DistributionPair>(m, "DistributionPair")
        .def_static("gaussian_shift", &DistributionPair::gaussian_shift, "theta"_a, "alt_known"_a = true)
        .def_static("bernoulli", &DistributionPair::bernoulli, "p0"_a, "p1"_a, "alt_known"_a = true)
        .def_property_readonly("family", &DistributionPair::family)
        .def_property_readonly("alt_known", &DistributionPair::alt_known)
        .def(
            "sample",
            [](const DistributionPair& p, Hypothesis h, std::size_t count, std::uint64_t seed) {
                Stream rng(seed);
                return p.sample(h, count, rng);
            },
            "h"_a, "count"_a, "seed"_a)
        .def("log_ratio", &DistributionPair::log_ratio, "y"_a)
        .def(
            "llr", [](const DistributionPair& p, const std::vector<double>& ys) { return p.llr(ys); },
            "observations"_a)
        .def("llr_stats", &DistributionPair::llr_stats)
        .def(
            "test_statistic",
            [](const DistributionPair& p, const std::vector<double>& ys) { return p.test_statistic(ys); },
            "observations"_a)
        .def("null_quantile", &DistributionPair::null_quantile, "count"_a, "rho"_a);
}

void bind_procedures(py::module_& m) {
    py::class_<ProblemInstance>(m, "ProblemInstance")
        .def(py::init<std::size_t, std::vector<std::size_t>, std::uint64_t>(), "n"_a, "support"_a, "seed"_a)
        .def_static("random_support", &ProblemInstance::random_support, "n"_a, "s"_a, "seed"_a)
        .def_property_readonly("n", &ProblemInstance::n)
        .def_property_readonly("s", &ProblemInstance::s)
        .def_property_readonly("seed", &ProblemInstance::seed)
        .def_property_readonly("support", &ProblemInstance::support);

    py::class_<StepRecord>(m, "StepRecord")
        .def_readonly("samples_per_component", &StepRecord::samples_per_component)
        .def_readonly("threshold", &StepRecord::threshold)
        .def_readonly("null_entered", &StepRecord::null_entered)
        .def_readonly("null_survived", &StepRecord::null_survived)
        .def_readonly("alt_entered", &StepRecord::alt_entered)
        .def_readonly("alt_survived", &StepRecord::alt_survived);

    py::class_<RecoveryOutcome>(m, "RecoveryOutcome")
        .def_readonly("estimated_support", &RecoveryOutcome::estimated_support)
        .def_readonly("samples_per_index", &RecoveryOutcome::samples_per_index)
        .def_readonly("total_samples", &RecoveryOutcome::total_samples)
        .def_readonly("exact", &RecoveryOutcome::exact)
        .def_readonly("false_positives", &RecoveryOutcome::false_positives)
        .def_readonly("false_negatives", &RecoveryOutcome::false_negatives)
        .def_readonly("truncated", &RecoveryOutcome::truncated)
        .def_readonly("steps", &RecoveryOutcome::steps);

    py::class_<TopS>(m, "TopS").def(py::init<>());
    py::class_<LlrThreshold>(m, "LlrThreshold").def(py::init<double>(), "tau"_a).def_readwrite("tau", &LlrThreshold::tau);
    py::class_<FixedSample>(m, "FixedSample")
        .def(py::init([](std::size_t m, std::optional<double> tau) {
                 FixedSample f;
                 f.m = m;
                 if (tau) f.rule = LlrThreshold{*tau};
                 return f;
             }),
             "m"_a, "tau"_a = py::none())
        .def_readwrite("m", &FixedSample::m);
    py::class_<Sprt>(m, "Sprt")
        .def(py::init<double, std::uint64_t>(), "epsilon"_a = 0.1, "j_max"_a = 0)
        .def_readwrite("epsilon", &Sprt::epsilon)
        .def_readwrite("j_max", &Sprt::j_max);
    py::class_<SimpleST>(m, "SimpleST")
        .def(py::init<double, std::size_t>(), "delta"_a, "m"_a)
        .def_readwrite("delta", &SimpleST::delta)
        .def_readwrite("m", &SimpleST::m);
    py::class_<GeneralST>(m, "GeneralST")
        .def(py::init<double, std::size_t, double>(), "delta"_a, "m"_a, "rho"_a)
        .def_readwrite("delta", &GeneralST::delta)
        .def_readwrite("m", &GeneralST::m)
        .def_readwrite("rho", &GeneralST::rho);

    m.def("run_procedure", &run_procedure, "instance"_a, "pair"_a, "config"_a);
    m.def("simple_st_passes", &simple_st_passes, "n"_a, "delta"_a);
    m.def("general_st_steps", &general_st_steps, "n"_a, "s"_a, "delta"_a, "rho"_a);
    m.def("general_st_schedule", &general_st_schedule, "n"_a, "s"_a, "m"_a, "rho"_a, "steps"_a);
}

void bind_bounds(py::module_& m) {
    py::enum_<Regime>(m, "Regime")
        .value("Reliable", Regime::Reliable)
        .value("Unreliable", Regime::Unreliable)
        .value("Indeterminate", Regime::Indeterminate);

    py::class_<BoundReport>(m, "BoundReport")
        .def_readonly("m_required", &BoundReport::m_required)
        .def_readonly("pe_floor", &BoundReport::pe_floor)
        .def_readonly("regime", &BoundReport::regime);
    py::class_<SprtThresholds>(m, "SprtThresholds")
        .def_readonly("gamma_lower", &SprtThresholds::gamma_lower)
        .def_readonly("gamma_upper", &SprtThresholds::gamma_upper)
        .def_readonly("log_lower", &SprtThresholds::log_lower)
        .def_readonly("log_upper", &SprtThresholds::log_upper);
    py::class_<StRate>(m, "StRate")
        .def_readonly("c_n", &StRate::c_n)
        .def_readonly("m_sufficient", &StRate::m_sufficient);
    py::class_<StSchedule>(m, "StSchedule")
        .def_readonly("delta", &StSchedule::delta)
        .def_readonly("rho", &StSchedule::rho)
        .def_readonly("steps", &StSchedule::steps);

    m.def(
        "seq_lower_bound",
        [](std::size_t s, double delta, const LlrStats& stats, std::optional<double> m) {
            return seq_lower_bound(s, delta, stats, m);
        },
        "s"_a, "delta"_a, "stats"_a, "m"_a = py::none());
    m.def("seq_rate", &seq_rate, "s"_a, "stats"_a);
    m.def("nonseq_rate", &nonseq_rate, "n"_a, "stats"_a);
    m.def("sprt_thresholds", &sprt_thresholds, "n"_a, "s"_a, "epsilon"_a);
    m.def("simple_st_budget", &simple_st_budget, "n"_a, "s"_a, "delta"_a, "theta"_a);
    m.def("st_cn", &st_cn, "n"_a, "s"_a, "delta"_a, "rho"_a, "steps"_a, "stats"_a);
    m.def("cor2_schedule", &cor2_schedule, "n"_a, "s"_a);
}

void bind_harness(py::module_& m) {
    py::class_<ExperimentSpec>(m, "ExperimentSpec")
        .def(py::init([](std::size_t n, std::size_t s, const DistributionPair& pair, const ProcedureConfig& procedure,
                         std::size_t trials, std::uint64_t seed, std::string label) {
                 ExperimentSpec spec;
                 spec.n = n;
                 spec.s = s;
                 spec.pair = pair;
                 spec.procedure = procedure;
                 spec.trials = trials;
                 spec.base_seed = seed;
                 spec.label = std::move(label);
                 return spec;
             }),
             "n"_a, "s"_a, "pair"_a, "procedure"_a, "trials"_a, "seed"_a, "label"_a = "")
        .def_readonly("label", &ExperimentSpec::label)
        .def_readonly("n", &ExperimentSpec::n)
        .def_readonly("s", &ExperimentSpec::s)
        .def_readonly("trials", &ExperimentSpec::trials)
        .def_readonly("seed", &ExperimentSpec::base_seed);

    py::class_<MonteCarloReport>(m, "MonteCarloReport")
        .def_readonly("label", &MonteCarloReport::label)
        .def_readonly("n", &MonteCarloReport::n)
        .def_readonly("s", &MonteCarloReport::s)
        .def_readonly("procedure", &MonteCarloReport::procedure)
        .def_readonly("family", &MonteCarloReport::family)
        .def_readonly("trials", &MonteCarloReport::trials)
        .def_readonly("fwer_hat", &MonteCarloReport::fwer_hat)
        .def_readonly("fwer_halfwidth", &MonteCarloReport::fwer_halfwidth)
        .def_readonly("alpha_hat", &MonteCarloReport::alpha_hat)
        .def_readonly("beta_hat", &MonteCarloReport::beta_hat)
        .def_readonly("avg_samples_per_dim", &MonteCarloReport::avg_samples_per_dim)
        .def_readonly("mean_total_samples", &MonteCarloReport::mean_total_samples)
        .def_readonly("budget_ok", &MonteCarloReport::budget_ok)
        .def_readonly("truncation_rate", &MonteCarloReport::truncation_rate)
        .def_readonly("seq_rate", &MonteCarloReport::seq_rate)
        .def_readonly("nonseq_rate", &MonteCarloReport::nonseq_rate)
        .def_readonly("regime", &MonteCarloReport::regime)
        .def("csv_row", &csv_row);

    m.def("run_experiment", &run_experiment, "spec"_a, "workers"_a = 0, py::call_guard<py::gil_scoped_release>());
    m.def("fwer_oracle", &fwer_oracle, "alpha"_a, "beta"_a, "n"_a, "s"_a);
    m.def("parse_config", &parse_config, "text"_a);
    m.def("csv_header", &csv_header);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sequential sparse support recovery: distributions, procedures, bounds and Monte Carlo harness";
    register_errors(m);
    bind_distributions(m);
    bind_procedures(m);
    bind_bounds(m);
    bind_harness(m);
}
