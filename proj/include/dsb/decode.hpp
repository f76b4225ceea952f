#pragma once

#include "dsb/cache_policy.hpp"
#include "dsb/core_state.hpp"
#include "dsb/denoiser.hpp"
#include "dsb/sampler.hpp"
#include "dsb/scheduler.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace dsb {

// Snapshot handed to the observer after the forward pass of a step and before
// its commits are applied.
struct StepView {
    const SequenceState & state;
    const BlockWindow &   window;
    const RecomputePlan & plan;
    const CacheSchedule & schedule;
    const ConfidenceMap & confidences;
    const Denoiser &      denoiser;
};

using StepObserver = std::function<void(const StepView &)>;

struct DecodeOptions {
    // Stop once this token is committed and every earlier response position
    // is decoded. Off by default: the response is always filled to gen_len.
    std::optional<TokenId> eos_id;
    StepObserver           observer;
};

struct DecodeResult {
    SequenceState           state;
    std::vector<StepRecord> trace;
    std::int64_t            nfe              = 0;  // forward evaluations, one per step
    std::int64_t            recomputed_total = 0;  // sum of recompute-set sizes
};

// Per step: recompute plan, forward, confidences, eligible set, sampler,
// commits, window update, cache schedule update. Runs until every response
// position is decoded (or the EOS condition fires).
// Throws InvalidConfiguration when the cache policy needs KV state the
// denoiser does not keep, or the sequence does not fit the denoiser.
DecodeResult decode(Denoiser & denoiser, const SchedulerKind & scheduler, const SamplerKind & sampler,
                    const CachePolicy & cache, std::vector<TokenId> prompt, std::int32_t gen_len,
                    const DecodeOptions & options = {});

// One JSON object per line with keys in the fixed order
//   step, s, e, positions, tokens, confidences, recomputed, event, fallback
void                    write_trace(std::ostream & out, const std::vector<StepRecord> & trace);
std::vector<StepRecord> read_trace(std::istream & in);

} // namespace dsb
