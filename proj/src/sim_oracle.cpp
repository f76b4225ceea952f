#include "dsb/sim_oracle.hpp"

#include "dsb/errors.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace dsb {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t salt) {
    return splitmix64(splitmix64(splitmix64(seed ^ salt) ^ a) ^ b);
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Uniform regular token excluding the mask and `exclude` (pass -1 for none).
TokenId pick_token(const Vocab & vocab, std::uint64_t h, TokenId exclude) {
    std::vector<TokenId> pool;
    pool.reserve(static_cast<std::size_t>(vocab.size));
    for (TokenId t = 0; t < vocab.size; ++t) {
        if (t != vocab.mask_id && t != exclude) {
            pool.push_back(t);
        }
    }
    return pool[static_cast<std::size_t>(h % pool.size())];
}

std::vector<TokenId> seeded_truth(std::int32_t n, std::uint64_t seed, const Vocab & vocab) {
    std::vector<TokenId> out(static_cast<std::size_t>(n));
    for (std::int32_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = pick_token(vocab, mix(seed, static_cast<std::uint64_t>(i), 0, 0x7275), -1);
    }
    return out;
}

} // namespace

void DifficultyProfile::validate() const {
    vocab.validate();
    if (vocab.size < 3) {
        throw InvalidArgument("oracle vocab needs room for a decoy token");
    }
    if (difficulty.empty() || truth.size() != difficulty.size()) {
        throw InvalidArgument("profile needs one difficulty and one truth token per position");
    }
    if (!(gain >= 0.0 && gain <= 1.0)) {
        throw InvalidArgument("context gain must lie in [0, 1]");
    }
    if (radius < 1) {
        throw InvalidArgument("neighbourhood radius must be positive");
    }
    for (std::size_t i = 0; i < difficulty.size(); ++i) {
        if (!(difficulty[i] >= 0.0 && difficulty[i] <= 1.0)) {
            throw InvalidArgument("difficulty at " + std::to_string(i) + " outside [0, 1]");
        }
        if (!vocab.contains(truth[i]) || truth[i] == vocab.mask_id) {
            throw InvalidArgument("truth token at " + std::to_string(i) + " is not a regular token");
        }
    }
}

double context_fraction(const DifficultyProfile & profile, const SequenceState & state, Position response_pos) {
    const Position lo = std::max<Position>(0, response_pos - profile.radius);
    const Position hi = std::min<Position>(state.gen_len() - 1, response_pos + profile.radius);
    int            total = 0;
    int            decoded = 0;
    for (Position j = lo; j <= hi; ++j) {
        if (j == response_pos) {
            continue;
        }
        ++total;
        if (!state.is_masked(j)) {
            ++decoded;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(decoded) / total;
}

ConfidenceMap oracle_confidences(const DifficultyProfile & profile, const SequenceState & state) {
    if (profile.length() != state.gen_len()) {
        throw InvalidArgument("profile length " + std::to_string(profile.length()) +
                              " does not match generation length " + std::to_string(state.gen_len()));
    }
    ConfidenceMap out;
    const auto    step = static_cast<std::uint64_t>(state.step());
    for (Position i = 0; i < state.gen_len(); ++i) {
        if (!state.is_masked(i)) {
            continue;
        }
        const std::size_t k = static_cast<std::size_t>(i);
        const double c = std::clamp((1.0 - profile.difficulty[k]) + profile.gain * context_fraction(profile, state, i),
                                    0.0, 1.0);
        const std::uint64_t h     = mix(profile.seed, static_cast<std::uint64_t>(i), step, 0x636f6e66);
        TokenId             token = profile.truth[k];
        if (unit(h) >= c) {
            token = pick_token(profile.vocab, splitmix64(h), profile.truth[k]);
        }
        out.emplace(state.to_absolute(i), ConfidenceEntry{ token, static_cast<float>(c) });
    }
    return out;
}

std::int64_t premature_commit_count(const std::vector<StepRecord> & trace, const DifficultyProfile & /*profile*/,
                                    double c_low) {
    if (!(c_low > 0.0 && c_low < 1.0)) {
        throw InvalidArgument("c_low must lie in (0, 1)");
    }
    std::int64_t n = 0;
    for (const auto & rec : trace) {
        for (const auto & c : rec.commits) {
            if (static_cast<double>(c.confidence) < c_low) {
                ++n;
            }
        }
    }
    return n;
}

double exact_match_rate(const DifficultyProfile & profile, const SequenceState & state) {
    if (profile.length() != state.gen_len()) {
        throw InvalidArgument("profile length does not match generation length");
    }
    std::int32_t hits = 0;
    for (std::size_t i = 0; i < profile.truth.size(); ++i) {
        hits += state.response()[i] == profile.truth[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(profile.truth.size());
}

DifficultyProfile uniform_profile(std::int32_t gen_len, double difficulty, double gain, std::int32_t radius,
                                  std::uint64_t seed, Vocab vocab) {
    if (gen_len < 1) {
        throw InvalidArgument("profile length must be positive");
    }
    DifficultyProfile p;
    p.difficulty.assign(static_cast<std::size_t>(gen_len), difficulty);
    p.gain   = gain;
    p.radius = radius;
    p.seed   = seed;
    p.vocab  = vocab;
    p.truth  = seeded_truth(gen_len, seed, vocab);
    p.validate();
    return p;
}

DifficultyProfile boundary_profile(const BoundaryProfileSpec & spec) {
    if (spec.hard_position < 0 || spec.hard_position >= spec.gen_len) {
        throw InvalidArgument("hard position outside the response");
    }
    DifficultyProfile p = uniform_profile(spec.gen_len, spec.easy, spec.gain, spec.radius, spec.seed, spec.vocab);
    p.difficulty[static_cast<std::size_t>(spec.hard_position)] = spec.hard;
    p.validate();
    return p;
}

DifficultyProfile parse_profile(std::istream & in) {
    DifficultyProfile p;
    std::string       line;
    std::size_t       lineno = 0;
    bool              have_gamma = false, have_radius = false, have_seed = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string        head;
        if (!(ls >> head)) {
            continue;
        }
        auto expect_end = [&] {
            std::string extra;
            if (ls >> extra) {
                throw ParseError(lineno, "unexpected trailing field '" + extra + "'");
            }
        };
        if (head == "gamma") {
            if (!(ls >> p.gain)) {
                throw ParseError(lineno, "gamma needs a real value");
            }
            have_gamma = true;
        } else if (head == "radius") {
            if (!(ls >> p.radius)) {
                throw ParseError(lineno, "radius needs an integer value");
            }
            have_radius = true;
        } else if (head == "seed") {
            if (!(ls >> p.seed)) {
                throw ParseError(lineno, "seed needs an unsigned integer value");
            }
            have_seed = true;
        } else if (head == "vocab") {
            if (!(ls >> p.vocab.size >> p.vocab.mask_id)) {
                throw ParseError(lineno, "vocab needs <size> <mask_id>");
            }
        } else {
            std::size_t used  = 0;
            long        index = -1;
            try {
                index = std::stol(head, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used != head.size()) {
                throw ParseError(lineno, "unknown header '" + head + "'");
            }
            double  delta = 0.0;
            TokenId token = 0;
            if (!(ls >> delta >> token)) {
                throw ParseError(lineno, "record needs <index> <difficulty> <token>");
            }
            if (index != static_cast<long>(p.difficulty.size())) {
                throw ParseError(lineno, "expected index " + std::to_string(p.difficulty.size()) + ", got " +
                                             std::to_string(index));
            }
            p.difficulty.push_back(delta);
            p.truth.push_back(token);
        }
        expect_end();
    }
    if (!have_gamma || !have_radius || !have_seed) {
        throw ParseError(lineno, "profile header needs gamma, radius and seed");
    }
    try {
        p.validate();
    } catch (const InvalidArgument & e) {
        throw ParseError(lineno, e.what());
    }
    return p;
}

DifficultyProfile load_profile(const std::filesystem::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open profile " + path.string());
    }
    return parse_profile(in);
}

void write_profile(std::ostream & out, const DifficultyProfile & profile) {
    out << "gamma " << std::setprecision(17) << profile.gain << '\n';
    out << "radius " << profile.radius << '\n';
    out << "seed " << profile.seed << '\n';
    out << "vocab " << profile.vocab.size << ' ' << profile.vocab.mask_id << '\n';
    for (std::size_t i = 0; i < profile.difficulty.size(); ++i) {
        out << i << ' ' << profile.difficulty[i] << ' ' << profile.truth[i] << '\n';
    }
}

} // namespace dsb
