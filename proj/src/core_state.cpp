#include "dsb/core_state.hpp"

#include "dsb/errors.hpp"

#include <string>

namespace dsb {

void Vocab::validate() const {
    if (size < 2) {
        throw InvalidArgument("vocab size must be at least 2, got " + std::to_string(size));
    }
    if (mask_id < 0 || mask_id >= size) {
        throw InvalidArgument("mask id " + std::to_string(mask_id) + " outside vocab of size " +
                              std::to_string(size));
    }
}

SequenceState::SequenceState(std::vector<TokenId> prompt, std::int32_t gen_len, Vocab vocab)
    : prompt_(std::move(prompt)), vocab_(vocab) {
    vocab_.validate();
    if (prompt_.empty()) {
        throw InvalidArgument("prompt must not be empty");
    }
    if (gen_len < 1) {
        throw InvalidArgument("generation length must be positive, got " + std::to_string(gen_len));
    }
    for (TokenId t : prompt_) {
        if (!vocab_.contains(t)) {
            throw InvalidArgument("prompt token " + std::to_string(t) + " outside vocab");
        }
    }
    response_.assign(static_cast<std::size_t>(gen_len), vocab_.mask_id);
}

std::vector<TokenId> SequenceState::tokens() const {
    std::vector<TokenId> out;
    out.reserve(prompt_.size() + response_.size());
    out.insert(out.end(), prompt_.begin(), prompt_.end());
    out.insert(out.end(), response_.begin(), response_.end());
    return out;
}

bool SequenceState::is_masked(Position response_pos) const {
    if (response_pos < 0 || response_pos >= gen_len()) {
        throw InvalidArgument("response position " + std::to_string(response_pos) + " out of range");
    }
    return response_[static_cast<std::size_t>(response_pos)] == vocab_.mask_id;
}

bool SequenceState::is_masked_abs(Position abs_pos) const {
    if (abs_pos < prompt_len()) {
        return false;
    }
    return is_masked(to_response(abs_pos));
}

void SequenceState::commit(Position response_pos, TokenId token) {
    if (response_pos < 0 || response_pos >= gen_len()) {
        throw InvalidArgument("commit position " + std::to_string(response_pos) + " out of range");
    }
    if (token == vocab_.mask_id) {
        throw InvalidArgument("cannot commit the mask token");
    }
    if (!vocab_.contains(token)) {
        throw InvalidArgument("token " + std::to_string(token) + " outside vocab");
    }
    auto & slot = response_[static_cast<std::size_t>(response_pos)];
    if (slot != vocab_.mask_id) {
        throw IllegalTransition("position " + std::to_string(response_pos) + " already decoded");
    }
    slot = token;
    ++decoded_;
}

SequenceState new_sequence(std::vector<TokenId> prompt, std::int32_t gen_len, const Vocab & vocab) {
    return SequenceState(std::move(prompt), gen_len, vocab);
}

PositionSet masked_positions(const SequenceState & state, Range range) {
    if (range.begin < 0 || range.end > state.gen_len() || range.begin > range.end) {
        throw InvalidArgument("range [" + std::to_string(range.begin) + ", " + std::to_string(range.end) +
                              ") outside response of length " + std::to_string(state.gen_len()));
    }
    PositionSet out;
    const auto & resp = state.response();
    for (Position p = range.begin; p < range.end; ++p) {
        if (resp[static_cast<std::size_t>(p)] == state.vocab().mask_id) {
            out.push_back(p);
        }
    }
    return out;
}

std::string_view to_string(CacheEvent e) {
    switch (e) {
        case CacheEvent::none:
            return "none";
        case CacheEvent::partial:
            return "partial";
        case CacheEvent::global_refresh:
            return "global-refresh";
    }
    return "none";
}

CacheEvent cache_event_from_string(std::string_view s) {
    if (s == "none") {
        return CacheEvent::none;
    }
    if (s == "partial") {
        return CacheEvent::partial;
    }
    if (s == "global-refresh") {
        return CacheEvent::global_refresh;
    }
    throw InvalidArgument("unknown cache event '" + std::string(s) + "'");
}

} // namespace dsb
