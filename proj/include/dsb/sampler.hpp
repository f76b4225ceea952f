#pragma once

#include "dsb/core_state.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dsb {

struct VanillaTop1 {
    friend bool operator==(const VanillaTop1 &, const VanillaTop1 &) = default;
};

// Commits every eligible position whose confidence is >= tau.
struct ConfidenceThreshold {
    double tau = 0.9;

    friend bool operator==(const ConfidenceThreshold &, const ConfidenceThreshold &) = default;
};

using SamplerKind = std::variant<VanillaTop1, ConfidenceThreshold>;

// Accepts "vanilla" and "threshold:tau=0.9".
SamplerKind parse_sampler(std::string_view text);
std::string to_string(const SamplerKind & kind);

struct Selection {
    std::vector<Commit> commits;  // ascending by position
    bool                fallback = false;  // threshold sampler fell back to the argmax
};

// Highest-confidence eligible position; ties go to the lowest position.
// Throws NoCandidates when no eligible position has a confidence entry.
Selection select_top1(const ConfidenceMap & conf, const PositionSet & eligible);

// All eligible positions with confidence >= tau, or the argmax alone when
// none qualifies.
Selection select_threshold(const ConfidenceMap & conf, const PositionSet & eligible, double tau);

Selection select(const SamplerKind & kind, const ConfidenceMap & conf, const PositionSet & eligible);

} // namespace dsb
