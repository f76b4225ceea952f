#include "dsb/errors.hpp"
#include "dsb/grid.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>
#include <sstream>

using namespace dsb;

namespace {

std::size_t error_line(const std::string & yaml) {
    try {
        parse_grid_config(yaml);
    } catch (const ParseError & e) {
        return e.line();
    }
    return 0;
}

} // namespace

TEST_CASE("a three by two grid yields six rows per seed") {
    const auto config = parse_grid_config(R"(
gen_len: 12
prompt_len: 3
seeds: [1, 2]
denoisers: ["toy:seed=3,width=16,heads=2,layers=1,maxlen=32"]
experiments:
  - name: sweep
    schedulers: [naive:B=4, "dsb:init=4,max=4", "dsb:init=4,max=unbounded"]
    samplers: [vanilla, "threshold:tau=0.9"]
    caches: [nocache]
)");
    REQUIRE(config.experiments.size() == 1);
    CHECK(config.experiments[0].name == "sweep");
    CHECK(config.c_low == 0.5);
    CHECK(cell_count(config) == 12);

    const auto runs = run_grid(config, GridOptions{ 2, std::nullopt });
    REQUIRE(runs.size() == 12);
    std::set<std::string> per_seed[3];
    for (const auto & r : runs) {
        per_seed[r.key.seed].insert(r.key.config_label());
        CHECK(r.seq_len == 15);
        CHECK_FALSE(r.trace.empty());
    }
    CHECK(per_seed[1].size() == 6);
    CHECK(per_seed[2].size() == 6);

    // cells come back in the same order whatever the thread count
    const auto serial = run_grid(config);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        CHECK(serial[i].key.config_label() == runs[i].key.config_label());
        CHECK(serial[i].trace.size() == runs[i].trace.size());
    }
}

TEST_CASE("single experiment without a list") {
    const auto config = parse_grid_config("schedulers: [naive:B=4]\nsamplers: [vanilla]\ncaches: [nocache]\n"
                                          "denoisers: [\"oracle:scripted=uniform\"]\ngen_len: 8\nc_low: 0.3\n");
    CHECK(config.experiments.size() == 1);
    CHECK(config.c_low == 0.3);
    const auto runs = run_grid(config);
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].exact_match.has_value());
}

TEST_CASE("grid errors carry line numbers") {
    CHECK(error_line("schedulers: [naive:B=4]\nbogus: 1\n") == 2);
    CHECK(error_line("samplers: [vanilla]\ncaches: [nocache]\nschedulers: [\"naive:B=0\"]\n") == 3);
    CHECK(error_line("denoisers: [toy]\nexperiments:\n  - name: a\n    samplers: [\"threshold:tau=2\"]\n") == 4);
    CHECK(error_line("schedulers: [naive:B=4]\nsamplers: [vanilla]\ncaches: [dual]\n"
                     "experiments:\n  - name: a\n    denoisers: [\"oracle:scripted=uniform\"]\n") == 5);
    CHECK(error_line("experiments: [1, 2\n") > 0);
    CHECK(error_line("c_low: 1.5\n") == 1);
    CHECK(error_line("experiments:\n  - name: a\n    gen_len: -3\n") == 3);
}

TEST_CASE("trace directory") {
    const auto dir    = std::filesystem::temp_directory_path() / "dsb_grid_traces";
    std::filesystem::remove_all(dir);
    const auto config = parse_grid_config("schedulers: [naive:B=4]\nsamplers: [vanilla]\ncaches: [nocache]\n"
                                          "denoisers: [\"oracle:scripted=uniform\"]\ngen_len: 8\nseeds: [4, 5]\n");
    run_grid(config, GridOptions{ 1, dir });
    CHECK(std::filesystem::exists(dir / "0.trace"));
    CHECK(std::filesystem::exists(dir / "1.trace"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("seeded prompts") {
    const Vocab v{ 65, 64 };
    CHECK(seeded_prompt(10, 3, v) == seeded_prompt(10, 3, v));
    CHECK(seeded_prompt(10, 3, v) != seeded_prompt(10, 4, v));
    for (auto t : seeded_prompt(50, 1, v)) {
        CHECK(t != 64);
    }
}
