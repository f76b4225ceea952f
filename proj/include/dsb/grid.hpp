#pragma once

#include "dsb/core_state.hpp"
#include "dsb/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dsb {

// One Cartesian block of cells: schedulers x samplers x caches x denoisers x seeds.
struct Experiment {
    std::string                           name;
    std::vector<std::string>              schedulers;
    std::vector<std::string>              samplers;
    std::vector<std::string>              caches;
    std::vector<std::string>              denoisers;
    std::vector<std::uint64_t>            seeds;
    std::int32_t                          gen_len    = 256;
    std::int32_t                          prompt_len = 16;
    std::optional<std::vector<TokenId>>   prompt;  // overrides prompt_len when set
    std::size_t                           line = 0;
};

struct GridConfig {
    double                  c_low = 0.5;
    std::vector<Experiment> experiments;
};

// YAML document. Top-level keys act as defaults for every experiment:
//
//   c_low: 0.5
//   gen_len: 64
//   prompt_len: 8
//   seeds: [1, 2, 3]
//   samplers: [vanilla]
//   experiments:
//     - name: s_init_sweep
//       schedulers:
//         - dsb:init=8,max=unbounded
//         - dsb:init=16,max=unbounded
//       caches: [dsbcache:pmin=24]
//       denoisers: ["toy:seed=42"]
//
// Without an `experiments` list the top level is a single experiment.
// Malformed input raises ParseError carrying the 1-based line number.
GridConfig parse_grid_config(std::string_view yaml);
GridConfig load_grid_config(const std::filesystem::path & path);

std::size_t cell_count(const GridConfig & config);

struct GridOptions {
    unsigned threads = 1;
    // When set, each cell's trace is written there as <index>.trace.
    std::optional<std::filesystem::path> trace_dir;
};

// Runs every cell; results come back in cell order regardless of threading.
std::vector<RunResult> run_grid(const GridConfig & config, const GridOptions & options = {});

// Prompt used for toy cells without an explicit prompt: `len` regular tokens
// drawn from the seed.
std::vector<TokenId> seeded_prompt(std::int32_t len, std::uint64_t seed, const Vocab & vocab);

} // namespace dsb
