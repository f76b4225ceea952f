#include "dsb/grid.hpp"

#include "dsb/cache_policy.hpp"
#include "dsb/decode.hpp"
#include "dsb/denoiser.hpp"
#include "dsb/errors.hpp"
#include "dsb/option_string.hpp"
#include "dsb/sampler.hpp"
#include "dsb/scheduler.hpp"
#include "dsb/sim_oracle.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace dsb {

namespace {

std::size_t line_of(const YAML::Node & node) { return static_cast<std::size_t>(node.Mark().line) + 1; }

template <class T> T scalar(const YAML::Node & node, const char * what) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception &) {
        throw ParseError(line_of(node), std::string("invalid value for '") + what + "'");
    }
}

std::vector<std::string> string_list(const YAML::Node & node, const char * what) {
    std::vector<std::string> out;
    if (node.IsScalar()) {
        out.push_back(scalar<std::string>(node, what));
    } else if (node.IsSequence()) {
        for (const auto & item : node) {
            out.push_back(scalar<std::string>(item, what));
        }
    } else {
        throw ParseError(line_of(node), std::string("'") + what + "' must be a string or a list");
    }
    if (out.empty()) {
        throw ParseError(line_of(node), std::string("'") + what + "' must not be empty");
    }
    return out;
}

template <class Fn> void check_each(const YAML::Node & node, const std::vector<std::string> & items, Fn && parse) {
    for (std::size_t i = 0; i < items.size(); ++i) {
        const YAML::Node at = node.IsSequence() ? node[i] : node;
        try {
            parse(items[i]);
        } catch (const InvalidArgument & e) {
            throw ParseError(line_of(at), e.what());
        }
    }
}

void apply_keys(const YAML::Node & map, Experiment & ex, bool top_level) {
    static const std::set<std::string> experiment_keys = { "name",     "schedulers", "samplers", "caches",
                                                           "denoisers", "seeds",      "gen_len",  "prompt_len",
                                                           "prompt" };
    for (const auto & kv : map) {
        const auto key = kv.first.as<std::string>();
        const auto & v  = kv.second;
        if (top_level && (key == "experiments" || key == "c_low")) {
            continue;
        }
        if (!experiment_keys.contains(key)) {
            throw ParseError(line_of(kv.first), "unknown key '" + key + "'");
        }
        if (key == "name") {
            ex.name = scalar<std::string>(v, "name");
        } else if (key == "schedulers") {
            ex.schedulers = string_list(v, "schedulers");
            check_each(v, ex.schedulers, [](const std::string & s) { parse_scheduler(s); });
        } else if (key == "samplers") {
            ex.samplers = string_list(v, "samplers");
            check_each(v, ex.samplers, [](const std::string & s) { parse_sampler(s); });
        } else if (key == "caches") {
            ex.caches = string_list(v, "caches");
            check_each(v, ex.caches, [](const std::string & s) { parse_cache_policy(s); });
        } else if (key == "denoisers") {
            ex.denoisers = string_list(v, "denoisers");
            check_each(v, ex.denoisers, [](const std::string & s) {
                const auto name = parse_option_string(s).name;
                if (name != "toy" && name != "oracle") {
                    throw InvalidArgument("unknown denoiser '" + name + "'");
                }
            });
        } else if (key == "seeds") {
            ex.seeds.clear();
            if (v.IsScalar()) {
                ex.seeds.push_back(scalar<std::uint64_t>(v, "seeds"));
            } else if (v.IsSequence()) {
                for (const auto & s : v) {
                    ex.seeds.push_back(scalar<std::uint64_t>(s, "seeds"));
                }
            }
            if (ex.seeds.empty()) {
                throw ParseError(line_of(v), "'seeds' must list at least one seed");
            }
        } else if (key == "gen_len") {
            ex.gen_len = scalar<std::int32_t>(v, "gen_len");
            if (ex.gen_len < 1) {
                throw ParseError(line_of(v), "gen_len must be positive");
            }
        } else if (key == "prompt_len") {
            ex.prompt_len = scalar<std::int32_t>(v, "prompt_len");
            if (ex.prompt_len < 1) {
                throw ParseError(line_of(v), "prompt_len must be positive");
            }
        } else if (key == "prompt") {
            if (!v.IsSequence() || v.size() == 0) {
                throw ParseError(line_of(v), "prompt must be a non-empty list of token ids");
            }
            std::vector<TokenId> p;
            for (const auto & t : v) {
                p.push_back(scalar<TokenId>(t, "prompt"));
            }
            ex.prompt = std::move(p);
        }
    }
}

void validate_experiment(const Experiment & ex) {
    auto need = [&](const auto & list, const char * what) {
        if (list.empty()) {
            throw ParseError(ex.line, "experiment '" + ex.name + "' has no " + what);
        }
    };
    need(ex.schedulers, "schedulers");
    need(ex.samplers, "samplers");
    need(ex.caches, "caches");
    need(ex.denoisers, "denoisers");
    need(ex.seeds, "seeds");
    for (const auto & d : ex.denoisers) {
        if (parse_option_string(d).name != "oracle") {
            continue;
        }
        for (const auto & c : ex.caches) {
            if (uses_kv_cache(parse_cache_policy(c))) {
                throw ParseError(ex.line, "experiment '" + ex.name + "' pairs oracle denoiser '" + d +
                                              "' with cache policy '" + c + "', which needs KV state");
            }
        }
    }
}

struct Cell {
    const Experiment * experiment;
    std::string        scheduler, sampler, cache, denoiser;
    std::uint64_t      seed;
};

std::vector<Cell> enumerate_cells(const GridConfig & config) {
    std::vector<Cell> cells;
    for (const auto & ex : config.experiments) {
        for (const auto & d : ex.denoisers) {
            for (const auto & s : ex.schedulers) {
                for (const auto & sa : ex.samplers) {
                    for (const auto & c : ex.caches) {
                        for (auto seed : ex.seeds) {
                            cells.push_back(Cell{ &ex, s, sa, c, d, seed });
                        }
                    }
                }
            }
        }
    }
    return cells;
}

RunResult run_cell(const Cell & cell) {
    const Experiment & ex       = *cell.experiment;
    const auto         started  = std::chrono::steady_clock::now();
    auto               denoiser = make_denoiser(cell.denoiser, ex.gen_len, cell.seed);
    auto prompt = ex.prompt ? *ex.prompt : seeded_prompt(ex.prompt_len, cell.seed, denoiser->vocab());

    DecodeResult res = decode(*denoiser, parse_scheduler(cell.scheduler), parse_sampler(cell.sampler),
                              parse_cache_policy(cell.cache), std::move(prompt), ex.gen_len);

    RunResult out;
    out.key     = RunKey{ ex.name, cell.scheduler, cell.sampler, cell.cache, cell.denoiser, ex.gen_len, cell.seed };
    out.seq_len = res.state.total_len();
    if (const auto * oracle = dynamic_cast<const OracleDenoiser *>(denoiser.get())) {
        out.exact_match = exact_match_rate(oracle->profile(), res.state);
    }
    out.trace   = std::move(res.trace);
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return out;
}

} // namespace

GridConfig parse_grid_config(std::string_view yaml) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml));
    } catch (const YAML::ParserException & e) {
        throw ParseError(static_cast<std::size_t>(e.mark.line) + 1, e.msg);
    }
    if (!root.IsMap()) {
        throw ParseError(root.IsDefined() ? line_of(root) : 1, "grid config must be a mapping");
    }
    GridConfig config;
    if (const auto c = root["c_low"]) {
        config.c_low = scalar<double>(c, "c_low");
        if (!(config.c_low > 0.0 && config.c_low < 1.0)) {
            throw ParseError(line_of(c), "c_low must lie in (0, 1)");
        }
    }
    Experiment defaults;
    defaults.name  = "default";
    defaults.seeds = { 0 };
    defaults.line  = line_of(root);
    apply_keys(root, defaults, true);

    if (const auto list = root["experiments"]) {
        if (!list.IsSequence() || list.size() == 0) {
            throw ParseError(line_of(list), "'experiments' must be a non-empty list");
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto & node = list[i];
            if (!node.IsMap()) {
                throw ParseError(line_of(node), "each experiment must be a mapping");
            }
            Experiment ex = defaults;
            ex.name       = "exp" + std::to_string(i);
            ex.line       = line_of(node);
            apply_keys(node, ex, false);
            validate_experiment(ex);
            config.experiments.push_back(std::move(ex));
        }
    } else {
        validate_experiment(defaults);
        config.experiments.push_back(std::move(defaults));
    }
    return config;
}

GridConfig load_grid_config(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open grid config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_grid_config(ss.str());
}

std::size_t cell_count(const GridConfig & config) { return enumerate_cells(config).size(); }

std::vector<TokenId> seeded_prompt(std::int32_t len, std::uint64_t seed, const Vocab & vocab) {
    // Reuse the oracle's seeded truth draw so prompts are platform independent.
    const DifficultyProfile p = uniform_profile(len, 0.0, 0.0, 1, seed ^ 0x70726f6d7074ull, vocab);
    return p.truth;
}

std::vector<RunResult> run_grid(const GridConfig & config, const GridOptions & options) {
    const auto             cells = enumerate_cells(config);
    std::vector<RunResult> results(cells.size());
    std::atomic<std::size_t> next{ 0 };
    std::exception_ptr       error;
    std::mutex               error_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                results[i] = run_cell(cells[i]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                next = cells.size();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(cells.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    if (error) {
        std::rethrow_exception(error);
    }
    if (options.trace_dir) {
        std::filesystem::create_directories(*options.trace_dir);
        for (std::size_t i = 0; i < results.size(); ++i) {
            std::ofstream os(*options.trace_dir / (std::to_string(i) + ".trace"));
            write_trace(os, results[i].trace);
        }
    }
    return results;
}

} // namespace dsb
