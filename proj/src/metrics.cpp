#include "dsb/metrics.hpp"

#include "dsb/errors.hpp"
#include "dsb/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace dsb {

namespace {

std::string csv_field(const std::string & s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

std::string naive_label_for(const RunKey & key) {
    RunKey k    = key;
    k.scheduler = to_string(SchedulerKind{ NaiveBlock{ refresh_period(parse_scheduler(key.scheduler)) } });
    return k.config_label();
}

} // namespace

std::string RunKey::config_label() const {
    return experiment + "|" + scheduler + "|" + sampler + "|" + cache + "|" + denoiser + "|L=" +
           std::to_string(gen_len);
}

RunMetrics run_metrics(const RunResult & run, double c_low) {
    RunMetrics m;
    m.steps = static_cast<std::int64_t>(run.trace.size());
    m.nfe   = m.steps;
    std::int64_t commits = 0;
    for (const auto & rec : run.trace) {
        commits += static_cast<std::int64_t>(rec.commits.size());
        m.recomputed_total += rec.recomputed;
        for (const auto & c : rec.commits) {
            m.premature += static_cast<double>(c.confidence) < c_low ? 1 : 0;
        }
    }
    m.commits_per_step   = m.steps > 0 ? static_cast<double>(commits) / static_cast<double>(m.steps) : 0.0;
    m.recompute_fraction = m.nfe > 0 && run.seq_len > 0
                               ? static_cast<double>(m.recomputed_total) /
                                     (static_cast<double>(m.nfe) * static_cast<double>(run.seq_len))
                               : 0.0;
    m.exact_match = run.exact_match;
    m.wall_ms     = run.wall_ms;
    return m;
}

Stat mean_std(const std::vector<double> & xs) {
    if (xs.empty()) {
        throw NoData("no samples");
    }
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    const double mean = sum / static_cast<double>(xs.size());
    double       ss   = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return Stat{ mean, std::sqrt(ss / static_cast<double>(xs.size())) };
}

std::vector<double> paired_step_differences(const std::vector<RunResult> & runs, const std::string & config_a,
                                            const std::string & config_b) {
    std::map<std::uint64_t, double> a, b;
    for (const auto & r : runs) {
        const auto label = r.key.config_label();
        if (label == config_a) {
            a[r.key.seed] = static_cast<double>(r.trace.size());
        } else if (label == config_b) {
            b[r.key.seed] = static_cast<double>(r.trace.size());
        }
    }
    std::vector<double> out;
    for (const auto & [seed, steps] : a) {
        if (auto it = b.find(seed); it != b.end()) {
            out.push_back(steps - it->second);
        }
    }
    return out;
}

std::vector<SummaryRow> summarize(const std::vector<RunResult> & runs, double c_low) {
    if (runs.empty()) {
        throw NoData("nothing to summarize");
    }
    std::vector<std::string>                         order;
    std::map<std::string, std::vector<const RunResult *>> groups;
    for (const auto & r : runs) {
        const auto label = r.key.config_label();
        auto [it, inserted] = groups.try_emplace(label);
        if (inserted) {
            order.push_back(label);
        }
        it->second.push_back(&r);
    }

    std::vector<SummaryRow> rows;
    for (const auto & label : order) {
        const auto & group = groups[label];
        SummaryRow   row;
        row.config    = label;
        row.scheduler = group.front()->key.scheduler;
        row.runs      = group.size();
        std::vector<double> steps, nfe, frac, premature, exact;
        for (const RunResult * r : group) {
            const RunMetrics m = run_metrics(*r, c_low);
            steps.push_back(static_cast<double>(m.steps));
            nfe.push_back(static_cast<double>(m.nfe));
            frac.push_back(m.recompute_fraction);
            premature.push_back(static_cast<double>(m.premature));
            if (m.exact_match) {
                exact.push_back(*m.exact_match);
            }
        }
        row.steps              = mean_std(steps);
        row.nfe                = mean_std(nfe);
        row.recompute_fraction = mean_std(frac);
        row.premature          = mean_std(premature);
        if (exact.size() == group.size()) {
            row.exact_match = mean_std(exact);
        }
        if (std::holds_alternative<SlidingBlock>(parse_scheduler(row.scheduler))) {
            const auto baseline = naive_label_for(group.front()->key);
            if (groups.contains(baseline)) {
                const auto diffs = paired_step_differences(runs, label, baseline);
                if (!diffs.empty()) {
                    row.steps_vs_naive = mean_std(diffs).mean;
                }
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

const std::vector<std::string> & result_csv_columns() {
    static const std::vector<std::string> cols = {
        "experiment",       "scheduler", "sampler",     "cache",    "denoiser",           "gen_len",
        "seed",             "steps",     "commits_per_step", "nfe", "recomputed_total",   "recompute_fraction",
        "premature_commits", "exact_match", "wall_ms",
    };
    return cols;
}

void write_results_csv(std::ostream & out, const std::vector<RunResult> & runs, double c_low) {
    const auto & cols = result_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << cols[i];
    }
    out << '\n';
    for (const auto & r : runs) {
        const RunMetrics m = run_metrics(r, c_low);
        out << csv_field(r.key.experiment) << ',' << csv_field(r.key.scheduler) << ',' << csv_field(r.key.sampler)
            << ',' << csv_field(r.key.cache) << ',' << csv_field(r.key.denoiser) << ',' << r.key.gen_len << ','
            << r.key.seed << ',' << m.steps << ',' << num(m.commits_per_step) << ',' << m.nfe << ','
            << m.recomputed_total << ',' << num(m.recompute_fraction) << ',' << m.premature << ','
            << (m.exact_match ? num(*m.exact_match) : std::string()) << ',' << num(m.wall_ms) << '\n';
    }
}

void write_summary_csv(std::ostream & out, const std::vector<SummaryRow> & rows) {
    out << "config,runs,steps_mean,steps_std,nfe_mean,nfe_std,recompute_fraction_mean,recompute_fraction_std,"
           "premature_mean,premature_std,exact_match_mean,exact_match_std,steps_vs_naive\n";
    for (const auto & r : rows) {
        out << csv_field(r.config) << ',' << r.runs << ',' << num(r.steps.mean) << ',' << num(r.steps.std) << ','
            << num(r.nfe.mean) << ',' << num(r.nfe.std) << ',' << num(r.recompute_fraction.mean) << ','
            << num(r.recompute_fraction.std) << ',' << num(r.premature.mean) << ',' << num(r.premature.std) << ','
            << (r.exact_match ? num(r.exact_match->mean) : "") << ','
            << (r.exact_match ? num(r.exact_match->std) : "") << ','
            << (r.steps_vs_naive ? num(*r.steps_vs_naive) : "") << '\n';
    }
}

void print_summary_table(std::ostream & out, const std::vector<SummaryRow> & rows) {
    std::size_t w = 6;
    for (const auto & r : rows) {
        w = std::max(w, r.config.size());
    }
    auto pm = [](const Stat & s) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(2) << s.mean << "+-" << s.std;
        return os.str();
    };
    out << std::left << std::setw(static_cast<int>(w)) << "config" << "  " << std::setw(5) << "runs" << std::setw(16)
        << "steps" << std::setw(16) << "nfe" << std::setw(16) << "recompute" << std::setw(16) << "premature"
        << std::setw(16) << "exact-match" << "vs-naive\n";
    for (const auto & r : rows) {
        std::ostringstream delta;
        if (r.steps_vs_naive) {
            delta << std::showpos << std::fixed << std::setprecision(2) << *r.steps_vs_naive;
        } else {
            delta << "-";
        }
        out << std::left << std::setw(static_cast<int>(w)) << r.config << "  " << std::setw(5) << r.runs
            << std::setw(16) << pm(r.steps) << std::setw(16) << pm(r.nfe) << std::setw(16)
            << pm(r.recompute_fraction) << std::setw(16) << pm(r.premature) << std::setw(16)
            << (r.exact_match ? pm(*r.exact_match) : std::string("-")) << delta.str() << '\n';
    }
}

} // namespace dsb
