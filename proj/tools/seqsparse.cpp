// Command-line front end: bounds tables and Monte Carlo experiments.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "seqsparse/bounds.hpp"
#include "seqsparse/config.hpp"
#include "seqsparse/errors.hpp"
#include "seqsparse/harness.hpp"
#include "seqsparse/procedures.hpp"

namespace {

using namespace seqsparse;

struct BoundsArgs {
    std::size_t n = 0;
    std::size_t s = 0;
    std::string family = "gaussian";
    double theta = 1.0;
    double p0 = 0.5;
    double p1 = 0.5;
    double delta = 0.1;
    double epsilon = 0.1;
};

void print_row(const std::string& name, const std::string& formula, const std::string& value) {
    std::printf("%-34s %-28s %s\n", name.c_str(), formula.c_str(), value.c_str());
}

int cmd_bounds(const BoundsArgs& args) {
    if (args.s < 1 || 2 * args.s > args.n) throw ValidationError("need 1 <= s <= n/2");
    const DistributionPair pair = args.family == "gaussian"
                                      ? DistributionPair::gaussian_shift(args.theta)
                                      : DistributionPair::bernoulli(args.p0, args.p1);
    const LlrStats stats = pair.llr_stats();
    std::printf("instance: n=%zu s=%zu family=%s", args.n, args.s, args.family.c_str());
    if (args.family == "gaussian") std::printf(" theta=%s\n", format_number(args.theta).c_str());
    else std::printf(" p0=%s p1=%s\n", format_number(args.p0).c_str(), format_number(args.p1).c_str());
    std::printf("divergences (nats): D(P0||P1)=%s D(P1||P0)=%s D_KL=%s var01=%s\n\n", format_number(stats.d01).c_str(),
                format_number(stats.d10).c_str(), format_number(stats.dkl).c_str(),
                format_number(stats.var01).c_str());

    const double seq = seq_rate(args.s, stats);
    const double nonseq = nonseq_rate(args.n, stats);
    print_row("row", "formula", "samples per dimension");
    print_row("necessary, sequential", "ln s / D(P0||P1)", format_number(seq));
    if (args.s == 1) std::printf("  note: s = 1 makes ln s = 0; the sequential rate is degenerate\n");
    const BoundReport finite = seq_lower_bound(args.s, args.delta, stats);
    print_row("  finite-sample, delta=" + format_number(args.delta), "(ln s + ln(1/4delta)) / D_KL",
              format_number(finite.m_required) + " (P_e >= " + format_number(finite.pe_floor) + " at or below)");
    print_row("necessary, non-sequential", "ln n / D(P1||P0)", format_number(nonseq));
    print_row("SPRT sufficient, eps=" + format_number(args.epsilon), "(1+eps) ln s / D(P0||P1)",
              format_number((1.0 + args.epsilon) * seq));
    const SprtThresholds t = sprt_thresholds(args.n, args.s, args.epsilon);
    std::printf("  thresholds: log gamma_L=%s log gamma_U=%s\n", format_number(t.log_lower).c_str(),
                format_number(t.log_upper).c_str());
    print_row("ST sufficient (asymptotic)", "ln s / D(P0||P1)", format_number(seq));
    try {
        const StSchedule sched = cor2_schedule(args.n, args.s);
        std::printf("  schedule: delta=%s rho=%s K=%zu\n", format_number(sched.delta).c_str(),
                    format_number(sched.rho).c_str(), sched.steps);
        try {
            const StRate rate = st_cn(args.n, args.s, sched.delta, sched.rho, sched.steps, stats);
            print_row("  finite-sample", "(ln s + ln 1/delta + ln 4) / c_n",
                      format_number(rate.m_sufficient) + " (c_n=" + format_number(rate.c_n) + ")");
        } catch (const NotPositive& e) {
            std::printf("  finite-sample: c_n not positive at this size (%s)\n", e.what());
        }
    } catch (const Error& e) {
        std::printf("  schedule unavailable: %s\n", e.what());
    }
    if (args.family == "gaussian") {
        const double budget = simple_st_budget(args.n, args.s, args.delta, args.theta);
        print_row("simple ST sufficient, delta=" + format_number(args.delta), "budget > ... / (theta^2/4)",
                  format_number(budget) + " (use m=" + std::to_string(next_even_budget(budget)) + ")");
    }
    return 0;
}

int cmd_experiments(const std::string& config, const std::string& out, const Overrides& overrides,
                    bool collect_errors) {
    std::vector<ExperimentSpec> specs = load_config(config);
    apply_overrides(specs, overrides);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory '" + out + "': " + ec.message());
    std::vector<MonteCarloReport> reports;
    std::vector<std::string> failures;
    if (collect_errors) {
        for (auto& entry : sweep(specs)) {
            if (entry.report) reports.push_back(std::move(*entry.report));
            else failures.push_back(entry.error);
        }
    } else {
        for (const auto& spec : specs) reports.push_back(run_experiment(spec));
    }
    emit_report(reports, out, failures);
    for (const auto& r : reports)
        std::printf("%s: fwer %s +/- %s, %s samples/dim\n", r.label.c_str(), format_number(r.fwer_hat).c_str(),
                    format_number(r.fwer_halfwidth).c_str(), format_number(r.avg_samples_per_dim).c_str());
    for (const auto& f : failures) std::fprintf(stderr, "failed: %s\n", f.c_str());
    return failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential sparse support recovery: bounds and Monte Carlo experiments"};
    app.require_subcommand(1);

    BoundsArgs bargs;
    auto* bounds = app.add_subcommand("bounds", "Evaluate the sample-complexity bounds for one instance");
    bounds->add_option("--n", bargs.n, "dimension")->required();
    bounds->add_option("--s", bargs.s, "sparsity")->required();
    bounds->add_option("--family", bargs.family, "gaussian or bernoulli")
        ->check(CLI::IsMember({"gaussian", "bernoulli"}));
    bounds->add_option("--theta", bargs.theta, "Gaussian mean shift");
    bounds->add_option("--p0", bargs.p0, "Bernoulli null parameter");
    bounds->add_option("--p1", bargs.p1, "Bernoulli alternative parameter");
    bounds->add_option("--delta", bargs.delta, "target error probability");
    bounds->add_option("--epsilon", bargs.epsilon, "SPRT threshold exponent slack");

    std::string config, out;
    Overrides overrides;
    std::uint64_t seed = 0;
    std::size_t trials = 0;
    auto* run = app.add_subcommand("run", "Run every experiment in a config file, stopping at the first error");
    run->add_option("--config", config, "experiment config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory (created if missing)")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override every experiment's base seed");
    auto* trials_opt = run->add_option("--trials", trials, "override every experiment's trial count");

    std::string sweep_config, sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run every experiment, collecting per-experiment errors");
    sweep_cmd->add_option("--config", sweep_config, "experiment config file")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--out", sweep_out, "output directory (created if missing)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*bounds) return cmd_bounds(bargs);
        if (*run) {
            if (*seed_opt) overrides.seed = seed;
            if (*trials_opt) overrides.trials = trials;
            return cmd_experiments(config, out, overrides, false);
        }
        return cmd_experiments(sweep_config, sweep_out, {}, true);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
