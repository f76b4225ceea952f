#pragma once

#include "dsb/core_state.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace dsb {

// Scripted per-position difficulty for the synthetic denoiser. Indices are
// response positions.
struct DifficultyProfile {
    std::vector<double>  difficulty;  // each in [0, 1]
    std::vector<TokenId> truth;       // ground-truth token per position
    double               gain   = 0.5;  // context gain, in [0, 1]
    std::int32_t         radius = 4;
    std::uint64_t        seed   = 0;
    Vocab                vocab{ 65, 64 };

    std::int32_t length() const { return static_cast<std::int32_t>(difficulty.size()); }
    void         validate() const;
};

// Fraction of the response neighbours within `radius` of `response_pos`
// (excluding itself) that are decoded. Positions with no neighbours get 0.
double context_fraction(const DifficultyProfile & profile, const SequenceState & state, Position response_pos);

// For each masked position i: c = clamp((1 - difficulty_i) + gain * context_i, 0, 1).
// The reported token is the truth with probability c, otherwise a decoy that
// is neither the truth nor the mask. Draws are a pure function of
// (seed, position, step), so identical histories give identical output.
// Keys are absolute positions.
ConfidenceMap oracle_confidences(const DifficultyProfile & profile, const SequenceState & state);

// Commits whose confidence at commit time was below c_low.
std::int64_t premature_commit_count(const std::vector<StepRecord> & trace, const DifficultyProfile & profile,
                                    double c_low);

// Fraction of response positions matching the ground truth.
double exact_match_rate(const DifficultyProfile & profile, const SequenceState & state);

// Every position has the same difficulty; truth tokens drawn from the seed.
DifficultyProfile uniform_profile(std::int32_t gen_len, double difficulty, double gain, std::int32_t radius,
                                  std::uint64_t seed, Vocab vocab = { 65, 64 });

// One hard position inside an otherwise easy response: the hard-inside,
// easy-outside layout where fixed blocks misbehave.
struct BoundaryProfileSpec {
    std::int32_t  gen_len       = 256;
    std::int32_t  hard_position = 31;
    double        hard          = 0.95;
    double        easy          = 0.05;
    double        gain          = 0.5;
    std::int32_t  radius        = 4;
    std::uint64_t seed          = 0;
    Vocab         vocab{ 65, 64 };
};

DifficultyProfile boundary_profile(const BoundaryProfileSpec & spec);

// Text format:
//   # comment
//   gamma <real>
//   radius <int>
//   seed <int>
//   vocab <size> <mask_id>        (optional, default 65 64)
//   <index> <difficulty> <token>  (one per position, indices 0..n-1 in order)
// Errors are reported as ParseError with the offending line number.
DifficultyProfile parse_profile(std::istream & in);
DifficultyProfile load_profile(const std::filesystem::path & path);
void              write_profile(std::ostream & out, const DifficultyProfile & profile);

} // namespace dsb
