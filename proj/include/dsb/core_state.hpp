#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace dsb {

using TokenId  = std::int32_t;
using Position = std::int32_t;

// Sorted ascending, no duplicates.
using PositionSet = std::vector<Position>;

// Half-open interval [begin, end).
struct Range {
    Position begin = 0;
    Position end   = 0;

    Position size() const { return end > begin ? end - begin : 0; }
    bool     empty() const { return end <= begin; }
    bool     contains(Position p) const { return p >= begin && p < end; }

    friend bool operator==(const Range &, const Range &) = default;
};

struct Vocab {
    std::int32_t size    = 0;
    TokenId      mask_id = 0;

    // Throws InvalidArgument unless size >= 2 and mask_id < size.
    void validate() const;
    bool contains(TokenId t) const { return t >= 0 && t < size; }
};

// Prompt followed by a fixed-length response whose undecoded slots hold
// mask_id. Response positions are relative to the response start; the
// scheduler and cache work in absolute coordinates over prompt ++ response,
// and absolute = prompt_len() + relative.
class SequenceState {
public:
    SequenceState(std::vector<TokenId> prompt, std::int32_t gen_len, Vocab vocab);

    const Vocab &                vocab() const { return vocab_; }
    const std::vector<TokenId> & prompt() const { return prompt_; }
    const std::vector<TokenId> & response() const { return response_; }
    // prompt ++ response
    std::vector<TokenId> tokens() const;

    Position     prompt_len() const { return static_cast<Position>(prompt_.size()); }
    std::int32_t gen_len() const { return static_cast<std::int32_t>(response_.size()); }
    Position     total_len() const { return prompt_len() + gen_len(); }
    std::int32_t decoded_count() const { return decoded_; }
    std::int64_t step() const { return step_; }
    bool         done() const { return decoded_ == gen_len(); }

    bool is_masked(Position response_pos) const;
    bool is_masked_abs(Position abs_pos) const;

    Position to_absolute(Position response_pos) const { return response_pos + prompt_len(); }
    Position to_response(Position abs_pos) const { return abs_pos - prompt_len(); }

    // The only mutation of response content.
    void commit(Position response_pos, TokenId token);
    void commit_abs(Position abs_pos, TokenId token) { commit(to_response(abs_pos), token); }

    void advance_step() { ++step_; }

private:
    std::vector<TokenId> prompt_;
    std::vector<TokenId> response_;
    Vocab                vocab_;
    std::int32_t         decoded_ = 0;
    std::int64_t         step_    = 0;
};

SequenceState new_sequence(std::vector<TokenId> prompt, std::int32_t gen_len, const Vocab & vocab);

// Masked positions of `range`, given in response coordinates. Result is in
// response coordinates too.
PositionSet masked_positions(const SequenceState & state, Range range);

struct ConfidenceEntry {
    TokenId token      = 0;
    float   confidence = 0.0f;
};

// Keyed by absolute position; only masked positions appear.
using ConfidenceMap = std::map<Position, ConfidenceEntry>;

struct Commit {
    Position position   = 0;  // absolute
    TokenId  token      = 0;
    float    confidence = 0.0f;
};

enum class CacheEvent { none, partial, global_refresh };

std::string_view to_string(CacheEvent e);
CacheEvent       cache_event_from_string(std::string_view s);

struct StepRecord {
    std::int64_t        step = 0;
    Range               block;
    std::vector<Commit> commits;
    std::int64_t        recomputed = 0;
    CacheEvent          event      = CacheEvent::none;
    bool                fallback   = false;
};

} // namespace dsb
