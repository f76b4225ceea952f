#pragma once

// Straight-line reference interpreters used as oracles by the tests. They
// deliberately avoid the production scheduler/sampler/cache code.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <vector>

namespace dsb::reference {

struct Boundary {
    int s = 0;
    int e = 0;

    friend bool operator==(const Boundary &, const Boundary &) = default;
};

struct SlidingTrace {
    std::vector<Boundary>         windows;  // window used at each iteration
    std::vector<std::vector<int>> commits;  // absolute positions unmasked at each iteration
};

// Executes the sliding-block listing line by line on a boolean mask buffer.
// Each iteration unmasks a random non-empty subset of the masked positions
// in the block. max_size < 0 means unbounded. The right edge is additionally
// clamped to the end of the response buffer.
inline SlidingTrace run_sliding_listing(int prompt_len, int L, int s_init, int max_size, std::mt19937_64 & rng) {
    std::vector<bool> masked(static_cast<std::size_t>(prompt_len + L), false);
    for (int i = prompt_len; i < prompt_len + L; ++i) {
        masked[static_cast<std::size_t>(i)] = true;
    }
    int s = prompt_len;
    int e = std::min(s + s_init, prompt_len + L);
    int U = 0;

    SlidingTrace trace;
    std::bernoulli_distribution coin(0.35);
    while (U < L) {
        // B <- {s, ..., e-1};  M <- masked positions of B
        std::vector<int> M;
        for (int i = s; i < e; ++i) {
            if (masked[static_cast<std::size_t>(i)]) {
                M.push_back(i);
            }
        }
        trace.windows.push_back({ s, e });
        // unmask a selected subset of M
        std::vector<int> chosen;
        for (int i : M) {
            if (coin(rng)) {
                chosen.push_back(i);
            }
        }
        if (chosen.empty() && !M.empty()) {
            chosen.push_back(M[std::uniform_int_distribution<std::size_t>(0, M.size() - 1)(rng)]);
        }
        for (int i : chosen) {
            masked[static_cast<std::size_t>(i)] = false;
        }
        trace.commits.push_back(chosen);
        // U <- U + |newly unmasked in M|
        U += static_cast<int>(chosen.size());
        // i* <- min masked position in B, if any
        std::optional<int> i_star;
        for (int i = s; i < e; ++i) {
            if (masked[static_cast<std::size_t>(i)]) {
                i_star = i;
                break;
            }
        }
        const int old_e = e;
        s               = i_star ? *i_star : old_e;
        // e <- min(prompt_len + S_init + U, s + S_max)
        int next_e = prompt_len + s_init + U;
        if (max_size >= 0) {
            next_e = std::min(next_e, s + max_size);
        }
        e = std::min(next_e, prompt_len + L);
        if (trace.windows.size() > static_cast<std::size_t>(L) + 1) {
            break;  // runaway guard
        }
    }
    return trace;
}

// Recompute set for the sliding-window cache, spelled out as a std::set.
inline std::set<int> dsb_cache_set(int s, int e, int prev_s, int min_prefix, int suffix, int seq_len) {
    std::set<int> out;
    const int     pw = std::max(min_prefix, s - prev_s);
    for (int p = s - pw; p < s; ++p) {
        if (p >= 0) {
            out.insert(p);
        }
    }
    for (int p = s; p < e; ++p) {
        out.insert(p);
    }
    for (int p = e; p < e + suffix && p < seq_len; ++p) {
        out.insert(p);
    }
    return out;
}

} // namespace dsb::reference
