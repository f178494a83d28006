#include "seqsparse/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "seqsparse/errors.hpp"

namespace seqsparse {

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "n",   "s",     "trials", "seed",    "family", "theta", "p0",    "p1",   "alt_known",
    "placement", "procedure", "m", "rule", "tau",  "epsilon", "j_max", "delta", "rho",
};

struct Entry {
    std::string key;
    std::vector<std::string> values;
    bool is_list = false;
    std::size_t line = 0;
};

struct Section {
    std::string name;
    std::size_t line = 0;
    std::vector<Entry> entries;
};

struct Value {
    std::string text;
    std::size_t line = 0;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool valid_name(std::string_view name) {
    return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

std::vector<Section> split_sections(std::string_view text) {
    std::vector<Section> sections;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            constexpr std::string_view prefix = "[experiment.";
            if (line.back() != ']' || line.substr(0, prefix.size()) != prefix)
                throw ParseError(line_no, "expected a section header of the form [experiment.<name>]");
            const std::string_view name = line.substr(prefix.size(), line.size() - prefix.size() - 1);
            if (!valid_name(name)) throw ParseError(line_no, "invalid experiment name '" + std::string(name) + "'");
            for (const auto& sec : sections)
                if (sec.name == name) throw ParseError(line_no, "duplicate experiment '" + std::string(name) + "'");
            sections.push_back(Section{std::string(name), line_no, {}});
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
        Entry entry;
        entry.key = std::string(trim(line.substr(0, eq)));
        entry.line = line_no;
        if (!kKnownKeys.contains(entry.key)) throw ParseError(line_no, "unknown key '" + entry.key + "'");
        const std::string_view value = trim(line.substr(eq + 1));
        if (value.empty()) throw ParseError(line_no, "missing value for '" + entry.key + "'");
        if (value.front() == '[') {
            if (value.back() != ']') throw ParseError(line_no, "unterminated list for '" + entry.key + "'");
            entry.is_list = true;
            std::string_view body = value.substr(1, value.size() - 2);
            while (true) {
                const auto comma = body.find(',');
                const std::string_view item = trim(body.substr(0, comma));
                if (item.empty()) throw ParseError(line_no, "empty list element for '" + entry.key + "'");
                entry.values.emplace_back(item);
                if (comma == std::string_view::npos) break;
                body = body.substr(comma + 1);
            }
        } else {
            entry.values.emplace_back(value);
        }

        if (sections.empty()) sections.push_back(Section{"default", line_no, {}});
        auto& entries = sections.back().entries;
        for (const auto& e : entries)
            if (e.key == entry.key) throw ParseError(line_no, "duplicate key '" + entry.key + "'");
        entries.push_back(std::move(entry));
    }
    return sections;
}

template <typename T>
T parse_integer(const std::string& key, const Value& v) {
    T out{};
    const char* first = v.text.data();
    const char* last = first + v.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw ParseError(v.line, "'" + key + "' expects a non-negative integer, got '" + v.text + "'");
    return out;
}

double parse_real(const std::string& key, const Value& v) {
    double out = 0.0;
    const char* first = v.text.data();
    const char* last = first + v.text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw ParseError(v.line, "'" + key + "' expects a real number, got '" + v.text + "'");
    return out;
}

bool parse_bool(const std::string& key, const Value& v) {
    if (v.text == "true") return true;
    if (v.text == "false") return false;
    throw ParseError(v.line, "'" + key + "' expects true or false, got '" + v.text + "'");
}

// One fully expanded experiment: key -> value.
class Assignment {
public:
    Assignment(std::string name, std::map<std::string, Value> values)
        : name_(std::move(name)), values_(std::move(values)) {}

    bool has(const std::string& key) const { return values_.contains(key); }

    const Value& require(const std::string& key) {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ValidationError(name_ + ": missing required key '" + key + "'");
        used_.insert(key);
        return it->second;
    }

    std::optional<Value> optional(const std::string& key) {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    void reject_unused(const std::string& context) const {
        for (const auto& [key, value] : values_)
            if (!used_.contains(key))
                throw ValidationError(name_ + ": key '" + key + "' (line " + std::to_string(value.line) +
                                      ") does not apply to " + context);
    }

    const std::string& name() const { return name_; }

private:
    std::string name_;
    std::map<std::string, Value> values_;
    std::set<std::string> used_;
};

void check(bool ok, const std::string& name, const std::string& constraint) {
    if (!ok) throw ValidationError(name + ": constraint violated: " + constraint);
}

ExperimentSpec build_spec(Assignment& a) {
    ExperimentSpec spec;
    const std::string& name = a.name();
    spec.label = name;
    spec.n = parse_integer<std::size_t>("n", a.require("n"));
    spec.s = parse_integer<std::size_t>("s", a.require("s"));
    spec.trials = parse_integer<std::size_t>("trials", a.require("trials"));
    spec.base_seed = parse_integer<std::uint64_t>("seed", a.require("seed"));

    bool alt_known = true;
    if (auto v = a.optional("alt_known")) alt_known = parse_bool("alt_known", *v);
    if (auto v = a.optional("placement")) {
        if (v->text == "uniform_random") spec.placement = SupportPlacement::UniformRandom;
        else if (v->text == "fixed_first_s") spec.placement = SupportPlacement::FixedFirstS;
        else throw ParseError(v->line, "placement must be uniform_random or fixed_first_s");
    }

    const Value family = a.require("family");
    try {
        if (family.text == "gaussian") {
            spec.pair = DistributionPair::gaussian_shift(parse_real("theta", a.require("theta")), alt_known);
        } else if (family.text == "bernoulli") {
            const double p0 = parse_real("p0", a.require("p0"));
            const double p1 = parse_real("p1", a.require("p1"));
            spec.pair = DistributionPair::bernoulli(p0, p1, alt_known);
        } else {
            throw ParseError(family.line, "family must be gaussian or bernoulli, got '" + family.text + "'");
        }
    } catch (const InvalidArgument& e) {
        throw ValidationError(name + ": " + e.what());
    }

    const Value procedure = a.require("procedure");
    if (procedure.text == "fixed") {
        FixedSample cfg;
        cfg.m = parse_integer<std::size_t>("m", a.require("m"));
        check(cfg.m >= 1, name, "m >= 1");
        std::string rule = "top_s";
        if (auto v = a.optional("rule")) rule = v->text;
        if (rule == "llr_threshold") {
            cfg.rule = LlrThreshold{parse_real("tau", a.require("tau"))};
        } else if (rule != "top_s") {
            throw ValidationError(name + ": rule must be top_s or llr_threshold");
        }
        spec.procedure = cfg;
    } else if (procedure.text == "sprt") {
        Sprt cfg;
        cfg.epsilon = parse_real("epsilon", a.require("epsilon"));
        check(cfg.epsilon > 0.0 && std::isfinite(cfg.epsilon), name, "epsilon > 0");
        if (auto v = a.optional("j_max")) cfg.j_max = parse_integer<std::uint64_t>("j_max", *v);
        spec.procedure = cfg;
    } else if (procedure.text == "simple_st") {
        SimpleST cfg;
        cfg.m = parse_integer<std::size_t>("m", a.require("m"));
        cfg.delta = parse_real("delta", a.require("delta"));
        check(cfg.m >= 2 && cfg.m % 2 == 0, name, "simple_st needs an even m >= 2");
        check(cfg.delta > 0.0 && cfg.delta < 1.0, name, "0 < delta < 1");
        spec.procedure = cfg;
    } else if (procedure.text == "general_st") {
        GeneralST cfg;
        cfg.m = parse_integer<std::size_t>("m", a.require("m"));
        cfg.delta = parse_real("delta", a.require("delta"));
        cfg.rho = parse_real("rho", a.require("rho"));
        check(cfg.m >= 1, name, "m >= 1");
        check(cfg.delta > 0.0 && cfg.delta < 1.0, name, "0 < delta < 1");
        check(cfg.rho >= 0.5 && cfg.rho < 1.0, name, "1/2 <= rho < 1");
        spec.procedure = cfg;
    } else {
        throw ParseError(procedure.line, "procedure must be fixed, sprt, simple_st or general_st, got '" +
                                             procedure.text + "'");
    }

    a.reject_unused("family '" + family.text + "' with procedure '" + procedure.text + "'");
    validate(spec);
    return spec;
}

void expand(const Section& section, std::size_t depth, std::map<std::string, Value>& current,
            std::string suffix, std::vector<ExperimentSpec>& out) {
    if (depth == section.entries.size()) {
        Assignment a(section.name + (suffix.empty() ? "" : "[" + suffix + "]"), current);
        out.push_back(build_spec(a));
        return;
    }
    const Entry& e = section.entries[depth];
    for (const auto& v : e.values) {
        current[e.key] = Value{v, e.line};
        std::string next = suffix;
        if (e.is_list) next += (next.empty() ? "" : ",") + e.key + "=" + v;
        expand(section, depth + 1, current, next, out);
    }
    current.erase(e.key);
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

std::vector<ExperimentSpec> parse_config(std::string_view text) {
    std::vector<ExperimentSpec> specs;
    for (const auto& section : split_sections(text)) {
        std::map<std::string, Value> current;
        expand(section, 0, current, "", specs);
    }
    return specs;
}

std::vector<ExperimentSpec> load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

void apply_overrides(std::vector<ExperimentSpec>& specs, const Overrides& overrides) {
    for (auto& spec : specs) {
        if (overrides.seed) spec.base_seed = *overrides.seed;
        if (overrides.trials) {
            if (*overrides.trials < 1) throw ValidationError("--trials must be at least 1");
            spec.trials = *overrides.trials;
        }
    }
}

std::string format_number(double value) {
    if (std::isnan(value)) return {};
    char buf[64];
    // printf-family conversions use the "C" locale unless setlocale is called.
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

std::string csv_header() {
    return "n,s,m,procedure,family,theta,delta,rho,epsilon,trials,fwer_hat,fwer_ci,alpha_hat,beta_hat,"
           "avg_samples_per_dim,budget_ok,truncation_rate,seq_rate,nonseq_rate,regime";
}

std::string csv_row(const MonteCarloReport& r) {
    std::string row;
    auto field = [&row](const std::string& v) {
        if (!row.empty()) row += ',';
        row += v;
    };
    field(std::to_string(r.n));
    field(std::to_string(r.s));
    field(format_number(r.m));
    field(r.procedure);
    field(r.family);
    field(format_number(r.theta));
    field(format_number(r.delta));
    field(format_number(r.rho));
    field(format_number(r.epsilon));
    field(std::to_string(r.trials));
    field(format_number(r.fwer_hat));
    field(format_number(r.fwer_halfwidth));
    field(format_number(r.alpha_hat));
    field(format_number(r.beta_hat));
    field(format_number(r.avg_samples_per_dim));
    field(bool_text(r.budget_ok));
    field(format_number(r.truncation_rate));
    field(format_number(r.seq_rate));
    field(format_number(r.nonseq_rate));
    field(to_string(r.regime));
    return row;
}

void emit_report(const std::vector<MonteCarloReport>& reports, const std::filesystem::path& dir,
                 const std::vector<std::string>& failures) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw IoError("output directory '" + dir.string() + "' does not exist");

    std::ofstream csv(dir / "results.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError("cannot write " + (dir / "results.csv").string());
    csv << csv_header() << '\n';
    for (const auto& r : reports) csv << csv_row(r) << '\n';
    csv.close();
    if (!csv) throw IoError("failed writing " + (dir / "results.csv").string());

    std::ofstream txt(dir / "summary.txt", std::ios::binary | std::ios::trunc);
    if (!txt) throw IoError("cannot write " + (dir / "summary.txt").string());
    for (const auto& r : reports) {
        txt << "experiment " << r.label << ": " << r.procedure << " on " << r.family << " pair, n=" << r.n
            << ", s=" << r.s;
        if (!std::isnan(r.m)) txt << ", m=" << format_number(r.m);
        txt << ", " << r.trials << " trials\n";
        txt << "  exact-recovery failures " << r.failed_trials << "/" << r.trials << ": FWER "
            << format_number(r.fwer_hat) << " +/- " << format_number(r.fwer_halfwidth) << " (95%)\n";
        txt << "  per-component error rates: alpha " << format_number(r.alpha_hat) << ", beta "
            << format_number(r.beta_hat) << "\n";
        txt << "  samples per dimension " << format_number(r.avg_samples_per_dim) << " (budget "
            << (r.budget_ok ? "respected" : "exceeded") << ")";
        if (r.truncation_rate > 0.0) txt << ", truncated trials " << format_number(r.truncation_rate);
        txt << "\n";
        if (!std::isnan(r.seq_rate) || !std::isnan(r.nonseq_rate))
            txt << "  necessary rates: sequential " << format_number(r.seq_rate) << ", non-sequential "
                << format_number(r.nonseq_rate) << " samples/dim; regime " << to_string(r.regime) << "\n";
        if (r.procedure == "sprt" && r.sprt.wald_count > 1)
            txt << "  mean overshoot lower " << format_number(r.sprt.mean_lower_overshoot) << ", upper "
                << format_number(r.sprt.mean_upper_overshoot) << "; Wald residual "
                << format_number(r.sprt.wald_residual) << " +/- " << format_number(r.sprt.wald_se) << "\n";
        txt << "\n";
    }
    for (const auto& f : failures) txt << "FAILED " << f << "\n";
    txt.close();
    if (!txt) throw IoError("failed writing " + (dir / "summary.txt").string());
}

}  // namespace seqsparse
