#include "dsb/scheduler.hpp"

#include "dsb/errors.hpp"
#include "dsb/option_string.hpp"

#include <algorithm>

namespace dsb {

namespace {

template <class... Ts> struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

void validate(const SchedulerKind & kind) {
    std::visit(overloaded{
                   [](const NaiveBlock & k) {
                       if (k.block_size < 1) {
                           throw InvalidArgument("naive block size must be positive");
                       }
                   },
                   [](const SlidingBlock & k) {
                       if (k.init_size < 1) {
                           throw InvalidArgument("initial block size must be positive");
                       }
                       if (k.max_size && *k.max_size < k.init_size) {
                           throw InvalidArgument("maximum block size must be at least the initial size");
                       }
                   },
               },
               kind);
}

} // namespace

SchedulerKind parse_scheduler(std::string_view text) {
    const OptionString opt = parse_option_string(text);
    SchedulerKind      kind;
    if (opt.name == "naive") {
        opt.require_only({ "B" });
        kind = NaiveBlock{ opt.get_int("B") };
    } else if (opt.name == "dsb") {
        opt.require_only({ "init", "max" });
        SlidingBlock k;
        k.init_size = opt.get_int("init");
        if (const auto max = opt.get("max"); !max) {
            k.max_size = k.init_size;
        } else if (*max == "unbounded") {
            k.max_size.reset();
        } else {
            k.max_size = opt.get_int("max");
        }
        kind = k;
    } else {
        throw InvalidArgument("unknown scheduler '" + opt.name + "'");
    }
    validate(kind);
    return kind;
}

std::string to_string(const SchedulerKind & kind) {
    return std::visit(overloaded{
                          [](const NaiveBlock & k) { return "naive:B=" + std::to_string(k.block_size); },
                          [](const SlidingBlock & k) {
                              return "dsb:init=" + std::to_string(k.init_size) +
                                     ",max=" + (k.max_size ? std::to_string(*k.max_size) : std::string("unbounded"));
                          },
                      },
                      kind);
}

std::int32_t refresh_period(const SchedulerKind & kind) {
    return std::visit(overloaded{
                          [](const NaiveBlock & k) { return k.block_size; },
                          [](const SlidingBlock & k) { return k.init_size; },
                      },
                      kind);
}

BlockWindow init_window(const SchedulerKind & kind, Position prompt_len, std::int32_t gen_len) {
    validate(kind);
    if (gen_len < 1) {
        throw InvalidArgument("generation length must be positive");
    }
    const Position seq_end = prompt_len + gen_len;
    const Position width   = refresh_period(kind);
    return BlockWindow{ prompt_len, std::min(prompt_len + width, seq_end), kind };
}

BlockWindow advance_naive(const BlockWindow & window, const SequenceState & state) {
    const auto * naive = std::get_if<NaiveBlock>(&window.kind);
    if (naive == nullptr) {
        throw InvalidArgument("advance_naive called on a sliding window");
    }
    for (Position p = window.start; p < window.end; ++p) {
        if (state.is_masked_abs(p)) {
            return window;
        }
    }
    const Position seq_end = state.total_len();
    BlockWindow    next    = window;
    next.start             = window.end;
    next.end               = std::min(window.end + naive->block_size, seq_end);
    return next;
}

BlockWindow advance_dsb(const BlockWindow & window, const SequenceState & state) {
    const auto * dsb = std::get_if<SlidingBlock>(&window.kind);
    if (dsb == nullptr) {
        throw InvalidArgument("advance_dsb called on a naive window");
    }
    Position start = window.end;
    for (Position p = window.start; p < window.end; ++p) {
        if (state.is_masked_abs(p)) {
#ifdef DSB_LEFT_BOUNDARY_ONE_BEFORE
            // Alternative reading: stop one position short of the first mask.
            start = std::max(window.start, p - 1);
#else
            start = p;
#endif
            break;
        }
    }
    Position end = state.prompt_len() + dsb->init_size + state.decoded_count();
    if (dsb->max_size) {
        end = std::min(end, start + *dsb->max_size);
    }
    end = std::min(end, state.total_len());
    return BlockWindow{ start, std::max(end, start), window.kind };
}

BlockWindow advance(const BlockWindow & window, const SequenceState & state) {
    if (std::holds_alternative<NaiveBlock>(window.kind)) {
        return advance_naive(window, state);
    }
    return advance_dsb(window, state);
}

PositionSet eligible_set(const BlockWindow & window, const SequenceState & state) {
    PositionSet out;
    for (Position p = std::max(window.start, state.prompt_len()); p < window.end; ++p) {
        if (state.is_masked_abs(p)) {
            out.push_back(p);
        }
    }
    return out;
}

} // namespace dsb
