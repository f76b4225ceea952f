// Command-line front end: single decodes, experiment grids and weight dumps.

#include "dsb/decode.hpp"
#include "dsb/denoiser.hpp"
#include "dsb/errors.hpp"
#include "dsb/grid.hpp"
#include "dsb/metrics.hpp"
#include "dsb/option_string.hpp"
#include "dsb/sim_oracle.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

std::vector<dsb::TokenId> read_prompt_file(const std::string & path) {
    std::ifstream in(path);
    if (!in) {
        throw dsb::InvalidArgument("cannot open prompt file " + path);
    }
    std::vector<dsb::TokenId> out;
    std::string               line;
    std::size_t               lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string        tok;
        while (ls >> tok) {
            std::size_t used = 0;
            long        v    = -1;
            try {
                v = std::stol(tok, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used != tok.size() || v < 0) {
                throw dsb::ParseError(lineno, "'" + tok + "' is not a token id");
            }
            out.push_back(static_cast<dsb::TokenId>(v));
        }
    }
    return out;
}

struct DecodeArgs {
    std::string                  scheduler = "dsb:init=32,max=unbounded";
    std::string                  sampler   = "threshold:tau=0.9";
    std::string                  cache     = "dsbcache:pmin=24";
    std::string                  denoiser  = "toy:seed=42";
    std::string                  prompt_file;
    std::int32_t                 prompt_len = 16;
    std::int32_t                 gen_len    = 256;
    std::uint64_t                seed       = 0;
    std::optional<dsb::TokenId>  eos;
    double                       c_low = 0.5;
    std::string                  trace_path;
    std::string                  csv_path;
};

int run_decode(const DecodeArgs & a) {
    const auto started  = std::chrono::steady_clock::now();
    auto       denoiser = dsb::make_denoiser(a.denoiser, a.gen_len, a.seed);
    auto       prompt   = a.prompt_file.empty() ? dsb::seeded_prompt(a.prompt_len, a.seed, denoiser->vocab())
                                                : read_prompt_file(a.prompt_file);
    dsb::DecodeOptions opts;
    opts.eos_id = a.eos;
    auto res    = dsb::decode(*denoiser, dsb::parse_scheduler(a.scheduler), dsb::parse_sampler(a.sampler),
                              dsb::parse_cache_policy(a.cache), std::move(prompt), a.gen_len, opts);

    if (!a.trace_path.empty()) {
        std::ofstream os(a.trace_path);
        dsb::write_trace(os, res.trace);
    }
    dsb::RunResult run;
    run.key     = { "decode", a.scheduler, a.sampler, a.cache, a.denoiser, a.gen_len, a.seed };
    run.seq_len = res.state.total_len();
    if (const auto * oracle = dynamic_cast<const dsb::OracleDenoiser *>(denoiser.get())) {
        run.exact_match = dsb::exact_match_rate(oracle->profile(), res.state);
    }
    run.trace   = res.trace;
    run.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    if (!a.csv_path.empty()) {
        std::ofstream os(a.csv_path);
        dsb::write_results_csv(os, { run }, a.c_low);
    }

    const auto m = dsb::run_metrics(run, a.c_low);
    std::cout << "steps " << m.steps << "  decoded " << res.state.decoded_count() << "/" << a.gen_len
              << "  commits/step " << m.commits_per_step << "  recompute-fraction " << m.recompute_fraction
              << "  premature " << m.premature;
    if (m.exact_match) {
        std::cout << "  exact-match " << *m.exact_match;
    }
    std::cout << "\nresponse";
    for (auto t : res.state.response()) {
        std::cout << ' ' << t;
    }
    std::cout << '\n';
    return 0;
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{ "Block-scheduled decoding for masked diffusion language models" };
    app.require_subcommand(1);

    DecodeArgs da;
    auto *     dec = app.add_subcommand("decode", "Run one decode and write its trace");
    dec->add_option("--scheduler", da.scheduler, "naive:B=32 | dsb:init=32,max=32 | dsb:init=32,max=unbounded")
        ->capture_default_str();
    dec->add_option("--sampler", da.sampler, "vanilla | threshold:tau=0.9")->capture_default_str();
    dec->add_option("--cache", da.cache, "nocache | dual | dsbcache:pmin=24,suffix=0")->capture_default_str();
    dec->add_option("--denoiser", da.denoiser, "toy:seed=42 | oracle:profile=FILE | oracle:scripted=boundary")
        ->capture_default_str();
    dec->add_option("--prompt-file", da.prompt_file, "Whitespace-separated prompt token ids")->check(CLI::ExistingFile);
    dec->add_option("--prompt-len", da.prompt_len, "Seeded prompt length when no prompt file is given")
        ->capture_default_str();
    dec->add_option("--gen-len", da.gen_len, "Response length")->capture_default_str();
    dec->add_option("--seed", da.seed, "Seed for generated prompts and scripted profiles")->capture_default_str();
    dec->add_option("--eos", da.eos, "Stop once this token closes a fully decoded prefix");
    dec->add_option("--c-low", da.c_low, "Confidence floor for premature-commit counting")->capture_default_str();
    dec->add_option("--trace", da.trace_path, "Write the step trace (JSON lines)");
    dec->add_option("--csv", da.csv_path, "Write a one-row metrics CSV");

    std::string   grid_config, grid_csv, grid_summary, grid_traces;
    bool          grid_table   = false;
    unsigned      grid_threads = std::max(1u, std::thread::hardware_concurrency());
    auto *        grid         = app.add_subcommand("grid", "Run an experiment grid");
    grid->add_option("--config", grid_config, "YAML grid description")->required()->check(CLI::ExistingFile);
    grid->add_option("--csv", grid_csv, "Per-cell results CSV");
    grid->add_option("--summary-csv", grid_summary, "Per-configuration summary CSV");
    grid->add_option("--trace-dir", grid_traces, "Directory for per-cell traces");
    grid->add_option("--threads", grid_threads, "Worker threads")->capture_default_str();
    grid->add_flag("--table", grid_table, "Print an aligned summary table");

    std::string dump_denoiser = "toy:seed=42", dump_out;
    auto *      dump          = app.add_subcommand("dump-weights", "Write toy model weights to a binary file");
    dump->add_option("--denoiser", dump_denoiser, "toy:seed=...")->capture_default_str();
    dump->add_option("--out", dump_out, "Output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*dec) {
            return run_decode(da);
        }
        if (*grid) {
            const auto       config = dsb::load_grid_config(grid_config);
            dsb::GridOptions opts;
            opts.threads = grid_threads;
            if (!grid_traces.empty()) {
                opts.trace_dir = grid_traces;
            }
            const auto runs = dsb::run_grid(config, opts);
            if (!grid_csv.empty()) {
                std::ofstream os(grid_csv);
                dsb::write_results_csv(os, runs, config.c_low);
            }
            const auto rows = dsb::summarize(runs, config.c_low);
            if (!grid_summary.empty()) {
                std::ofstream os(grid_summary);
                dsb::write_summary_csv(os, rows);
            }
            if (grid_table || (grid_csv.empty() && grid_summary.empty())) {
                dsb::print_summary_table(std::cout, rows);
            }
            return 0;
        }
        if (*dump) {
            auto d   = dsb::make_denoiser(dump_denoiser, 1, 0);
            auto toy = dynamic_cast<dsb::ToyDenoiser *>(d.get());
            if (toy == nullptr) {
                throw dsb::InvalidArgument("dump-weights needs a toy denoiser");
            }
            toy->model().save(dump_out);
            std::cout << "checksum " << std::hex << toy->model().checksum() << '\n';
            return 0;
        }
    } catch (const dsb::Error & e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
