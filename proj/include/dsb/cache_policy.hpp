#pragma once

#include "dsb/core_state.hpp"
#include "dsb/scheduler.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace dsb {

// Recompute everything every step.
struct NoCache {
    friend bool operator==(const NoCache &, const NoCache &) = default;
};

// Recompute only the active block; full recomputation once the block start
// has moved by a whole refresh period since the last full pass.
struct DualCache {
    friend bool operator==(const DualCache &, const DualCache &) = default;
};

// Active block plus a prefix window of max(min_prefix, slide) positions in
// front of it (and optionally suffix_len positions after it) are recomputed
// every step; everything is recomputed after refresh_period commits.
struct DsbCache {
    std::int32_t min_prefix = 24;
    std::int32_t suffix_len = 0;

    friend bool operator==(const DsbCache &, const DsbCache &) = default;
};

using CachePolicy = std::variant<NoCache, DualCache, DsbCache>;

// Accepts "nocache", "dual", "dsbcache:pmin=24,suffix=0".
CachePolicy parse_cache_policy(std::string_view text);
std::string to_string(const CachePolicy & policy);

bool uses_kv_cache(const CachePolicy & policy);

struct CacheSchedule {
    std::int32_t refresh_period       = 32;
    std::int64_t tokens_since_refresh = 0;
    Position     prev_start           = 0;  // window start of the previous step
    Position     start_at_last_full   = 0;
    bool         primed               = false;  // a full pass has populated the cache
};

CacheSchedule make_cache_schedule(std::int32_t refresh_period, Position initial_start);

// max(min_prefix, s_now - s_prev); throws InvalidArgument if s_now < s_prev.
std::int32_t prefix_window_len(std::int32_t min_prefix, Position s_now, Position s_prev);

struct RecomputePlan {
    PositionSet positions;
    CacheEvent  event = CacheEvent::none;

    bool full(Position seq_len) const { return static_cast<Position>(positions.size()) == seq_len; }
};

RecomputePlan recompute_set(const CachePolicy & policy, const BlockWindow & window, const CacheSchedule & schedule,
                            Position seq_len);

// Adds this step's commits to the refresh counter, or resets it when the step
// was a global refresh. `window_start` is the start used by this step.
CacheSchedule after_step(const CacheSchedule & schedule, std::int64_t committed, CacheEvent event,
                         Position window_start);

} // namespace dsb
