#include "dsb/cache_policy.hpp"

#include "dsb/errors.hpp"
#include "dsb/option_string.hpp"

#include <algorithm>

namespace dsb {

namespace {

PositionSet interval(Position begin, Position end) {
    PositionSet out;
    for (Position p = begin; p < end; ++p) {
        out.push_back(p);
    }
    return out;
}

} // namespace

CachePolicy parse_cache_policy(std::string_view text) {
    const OptionString opt = parse_option_string(text);
    if (opt.name == "nocache") {
        opt.require_only({});
        return NoCache{};
    }
    if (opt.name == "dual") {
        opt.require_only({});
        return DualCache{};
    }
    if (opt.name == "dsbcache") {
        opt.require_only({ "pmin", "suffix" });
        DsbCache c{ opt.get_int("pmin", 24), opt.get_int("suffix", 0) };
        if (c.min_prefix < 1) {
            throw InvalidArgument("pmin must be at least 1");
        }
        if (c.suffix_len < 0) {
            throw InvalidArgument("suffix must be non-negative");
        }
        return c;
    }
    throw InvalidArgument("unknown cache policy '" + opt.name + "'");
}

std::string to_string(const CachePolicy & policy) {
    if (std::holds_alternative<NoCache>(policy)) {
        return "nocache";
    }
    if (std::holds_alternative<DualCache>(policy)) {
        return "dual";
    }
    const auto & c = std::get<DsbCache>(policy);
    return "dsbcache:pmin=" + std::to_string(c.min_prefix) + ",suffix=" + std::to_string(c.suffix_len);
}

bool uses_kv_cache(const CachePolicy & policy) { return !std::holds_alternative<NoCache>(policy); }

CacheSchedule make_cache_schedule(std::int32_t refresh_period, Position initial_start) {
    if (refresh_period < 1) {
        throw InvalidArgument("refresh period must be positive");
    }
    CacheSchedule s;
    s.refresh_period     = refresh_period;
    s.prev_start         = initial_start;
    s.start_at_last_full = initial_start;
    return s;
}

std::int32_t prefix_window_len(std::int32_t min_prefix, Position s_now, Position s_prev) {
    if (s_now < s_prev) {
        throw InvalidArgument("block start moved backwards (" + std::to_string(s_prev) + " -> " +
                              std::to_string(s_now) + ")");
    }
    return std::max(min_prefix, s_now - s_prev);
}

RecomputePlan recompute_set(const CachePolicy & policy, const BlockWindow & window, const CacheSchedule & schedule,
                            Position seq_len) {
    if (window.start < 0 || window.end > seq_len || window.start > window.end) {
        throw InvalidArgument("window outside the sequence");
    }
    if (std::holds_alternative<NoCache>(policy)) {
        return { interval(0, seq_len), CacheEvent::none };
    }
    if (!schedule.primed) {
        return { interval(0, seq_len), CacheEvent::global_refresh };
    }
    if (std::holds_alternative<DualCache>(policy)) {
        if (window.start - schedule.start_at_last_full >= schedule.refresh_period) {
            return { interval(0, seq_len), CacheEvent::global_refresh };
        }
        return { interval(window.start, window.end), CacheEvent::partial };
    }

    const auto & c = std::get<DsbCache>(policy);
    if (schedule.tokens_since_refresh >= schedule.refresh_period) {
        return { interval(0, seq_len), CacheEvent::global_refresh };
    }
    const std::int32_t prefix = prefix_window_len(c.min_prefix, window.start, schedule.prev_start);
    const Position     begin  = std::max<Position>(0, window.start - prefix);
    const Position     end    = std::min<Position>(seq_len, window.end + c.suffix_len);
    return { interval(begin, end), CacheEvent::partial };
}

CacheSchedule after_step(const CacheSchedule & schedule, std::int64_t committed, CacheEvent event,
                         Position window_start) {
    if (committed < 0) {
        throw InvalidArgument("committed count must be non-negative");
    }
    CacheSchedule next = schedule;
    next.prev_start    = window_start;
    if (event == CacheEvent::global_refresh) {
        next.tokens_since_refresh = 0;
        next.start_at_last_full   = window_start;
        next.primed               = true;
    } else {
        next.tokens_since_refresh += committed;
    }
    return next;
}

} // namespace dsb
