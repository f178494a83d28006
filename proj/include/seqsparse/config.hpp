#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqsparse/harness.hpp"

namespace seqsparse {

// Experiment configuration documents.
//
//   # comment
//   [experiment.<name>]
//   key = value
//   key = [v1, v2, ...]     # grid: one spec per element
//
// Keys given before the first header form an experiment named "default".
// Several bracketed lists in one section expand to their cartesian product,
// first-listed key outermost. Recognized keys:
//
//   n, s, trials, seed                  required
//   family      gaussian | bernoulli    required
//   theta                               gaussian
//   p0, p1                              bernoulli
//   alt_known   true | false            optional, default true
//   placement   uniform_random | fixed_first_s   optional, default uniform_random
//   procedure   fixed | sprt | simple_st | general_st   required
//   m                                   fixed, simple_st, general_st
//   rule        top_s | llr_threshold   fixed, optional, default top_s
//   tau                                 fixed with llr_threshold
//   epsilon, j_max                      sprt (j_max optional)
//   delta                               simple_st, general_st
//   rho                                 general_st
//
// Unknown keys and keys that do not apply to the chosen family or procedure
// are rejected.
std::vector<ExperimentSpec> parse_config(std::string_view text);
std::vector<ExperimentSpec> load_config(const std::filesystem::path& path);

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
};
void apply_overrides(std::vector<ExperimentSpec>& specs, const Overrides& overrides);

// Six significant digits, '.' separator, empty for NaN.
std::string format_number(double value);

std::string csv_header();
std::string csv_row(const MonteCarloReport& report);

// Writes results.csv and summary.txt into `dir` (which must exist).
// `failures` lists experiments that did not complete, one line each.
void emit_report(const std::vector<MonteCarloReport>& reports, const std::filesystem::path& dir,
                 const std::vector<std::string>& failures = {});

}  // namespace seqsparse
