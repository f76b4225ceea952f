#pragma once

#include "dsb/core_state.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dsb {

// Identifies one grid cell.
struct RunKey {
    std::string   experiment;
    std::string   scheduler;
    std::string   sampler;
    std::string   cache;
    std::string   denoiser;
    std::int32_t  gen_len = 0;
    std::uint64_t seed    = 0;

    // Everything but the seed.
    std::string config_label() const;
};

struct RunResult {
    RunKey                  key;
    Position                seq_len = 0;
    std::vector<StepRecord> trace;
    // Ground-truth agreement; only oracle runs have a ground truth.
    std::optional<double>   exact_match;
    double                  wall_ms = 0.0;
};

struct RunMetrics {
    std::int64_t          steps            = 0;
    double                commits_per_step = 0.0;
    std::int64_t          nfe              = 0;
    std::int64_t          recomputed_total = 0;
    double                recompute_fraction = 0.0;  // recomputed_total / (nfe * seq_len)
    std::int64_t          premature        = 0;
    std::optional<double> exact_match;
    double                wall_ms = 0.0;
};

// Everything except exact_match and wall_ms comes from the trace alone.
RunMetrics run_metrics(const RunResult & run, double c_low);

struct Stat {
    double mean = 0.0;
    double std  = 0.0;  // population standard deviation
};

Stat mean_std(const std::vector<double> & xs);

struct SummaryRow {
    std::string          config;
    std::string          scheduler;
    std::size_t          runs = 0;
    Stat                 steps;
    Stat                 nfe;
    Stat                 recompute_fraction;
    Stat                 premature;
    std::optional<Stat>  exact_match;
    // Mean over shared seeds of (steps - steps of the matching naive config).
    std::optional<double> steps_vs_naive;
};

// One row per configuration, in first-appearance order. The naive baseline
// for the paired column is the naive scheduler with the same block size as
// the row's refresh period and otherwise identical settings.
// Throws NoData on empty input.
std::vector<SummaryRow> summarize(const std::vector<RunResult> & runs, double c_low);

// Per-seed differences of `steps` between two configurations, over the seeds
// both have, ordered by seed.
std::vector<double> paired_step_differences(const std::vector<RunResult> & runs, const std::string & config_a,
                                            const std::string & config_b);

void write_results_csv(std::ostream & out, const std::vector<RunResult> & runs, double c_low);
void write_summary_csv(std::ostream & out, const std::vector<SummaryRow> & rows);
void print_summary_table(std::ostream & out, const std::vector<SummaryRow> & rows);

// Column names of write_results_csv, in order.
const std::vector<std::string> & result_csv_columns();

} // namespace dsb
