#pragma once

#include "dsb/core_state.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace dsb {

// Fixed partition of the response into block_size chunks, decoded in order.
// The last block is truncated when block_size does not divide the length.
struct NaiveBlock {
    std::int32_t block_size = 32;

    friend bool operator==(const NaiveBlock &, const NaiveBlock &) = default;
};

// Sliding block whose left edge follows the first remaining mask and whose
// right edge grows with the decoded count, capped at start + max_size.
// max_size == init_size is the constant-width variant; no max_size is the
// greedy variant.
struct SlidingBlock {
    std::int32_t                init_size = 32;
    std::optional<std::int32_t> max_size  = 32;

    bool greedy() const { return !max_size.has_value(); }

    friend bool operator==(const SlidingBlock &, const SlidingBlock &) = default;
};

using SchedulerKind = std::variant<NaiveBlock, SlidingBlock>;

// Accepts "naive:B=32", "dsb:init=32,max=32", "dsb:init=32,max=unbounded".
SchedulerKind parse_scheduler(std::string_view text);
std::string   to_string(const SchedulerKind & kind);

// Token count that defines one "block" of progress for cache refreshes:
// block_size for naive, init_size for sliding.
std::int32_t refresh_period(const SchedulerKind & kind);

// Active window [start, end) in absolute coordinates.
struct BlockWindow {
    Position      start = 0;
    Position      end   = 0;
    SchedulerKind kind;

    Range range() const { return {start, end}; }
    bool  empty() const { return end <= start; }
};

BlockWindow init_window(const SchedulerKind & kind, Position prompt_len, std::int32_t gen_len);

// Moves to the next block only once the current one has no masks left.
BlockWindow advance_naive(const BlockWindow & window, const SequenceState & state);

// Left edge jumps to the first masked position of the current window (or to
// its end when none remain); right edge becomes
//   min(prompt_len + init_size + decoded, start' + max_size, prompt_len + gen_len).
// Call after the step's commits have been applied.
BlockWindow advance_dsb(const BlockWindow & window, const SequenceState & state);

BlockWindow advance(const BlockWindow & window, const SequenceState & state);

// Masked positions inside the window, absolute coordinates.
PositionSet eligible_set(const BlockWindow & window, const SequenceState & state);

} // namespace dsb
