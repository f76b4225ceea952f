#include "dsb/denoiser.hpp"

#include "dsb/errors.hpp"
#include "dsb/option_string.hpp"

#include <limits>

namespace dsb {

ToyDenoiser::ToyDenoiser(std::shared_ptr<const ToyModel> model) : model_(std::move(model)) {
    if (!model_) {
        throw InvalidArgument("toy denoiser needs a model");
    }
}

void ToyDenoiser::reset(const SequenceState & /*state*/) {
    kv_.reset();
    queries_ = 0;
}

ConfidenceMap ToyDenoiser::score(const SequenceState & state, const RecomputePlan & plan) {
    const auto tokens = state.tokens();
    LogitTable logits;
    if (plan.full(state.total_len())) {
        auto out = forward_full(*model_, tokens);
        logits   = std::move(out.logits);
        kv_      = std::move(out.kv);
    } else {
        if (!kv_) {
            throw CacheIntegrityError("partial recompute requested before the cache was populated");
        }
        logits = forward_cached(*model_, tokens, *kv_, plan.positions);
    }
    queries_ += logits.queries;

    PositionSet masked;
    for (Position p : plan.positions) {
        if (state.is_masked_abs(p)) {
            masked.push_back(p);
        }
    }
    return confidences(logits, masked, model_->vocab());
}

OracleDenoiser::OracleDenoiser(DifficultyProfile profile) : profile_(std::move(profile)) { profile_.validate(); }

std::int32_t OracleDenoiser::max_len() const { return std::numeric_limits<std::int32_t>::max(); }

void OracleDenoiser::reset(const SequenceState & state) {
    if (state.gen_len() != profile_.length()) {
        throw InvalidConfiguration("oracle profile covers " + std::to_string(profile_.length()) +
                                   " positions but the response has " + std::to_string(state.gen_len()));
    }
}

ConfidenceMap OracleDenoiser::score(const SequenceState & state, const RecomputePlan & plan) {
    ConfidenceMap all = oracle_confidences(profile_, state);
    if (plan.full(state.total_len())) {
        return all;
    }
    ConfidenceMap out;
    for (Position p : plan.positions) {
        if (auto it = all.find(p); it != all.end()) {
            out.insert(*it);
        }
    }
    return out;
}

std::unique_ptr<Denoiser> make_denoiser(std::string_view spec, std::int32_t gen_len, std::uint64_t run_seed) {
    const OptionString opt = parse_option_string(spec);
    if (opt.name == "toy") {
        if (const auto weights = opt.get("weights")) {
            opt.require_only({ "weights" });
            return std::make_unique<ToyDenoiser>(std::make_shared<const ToyModel>(ToyModel::load(*weights)));
        }
        opt.require_only({ "seed", "vocab", "width", "heads", "layers", "maxlen" });
        DenoiserConfig cfg;
        cfg.seed       = static_cast<std::uint64_t>(opt.get_int("seed", 42));
        cfg.vocab_size = opt.get_int("vocab", cfg.vocab_size);
        cfg.width      = opt.get_int("width", cfg.width);
        cfg.heads      = opt.get_int("heads", cfg.heads);
        cfg.layers     = opt.get_int("layers", cfg.layers);
        cfg.max_len    = opt.get_int("maxlen", cfg.max_len);
        return std::make_unique<ToyDenoiser>(std::make_shared<const ToyModel>(cfg));
    }
    if (opt.name == "oracle") {
        if (const auto path = opt.get("profile")) {
            opt.require_only({ "profile" });
            return std::make_unique<OracleDenoiser>(load_profile(*path));
        }
        const std::string kind = opt.get("scripted").value_or("boundary");
        if (kind == "boundary") {
            opt.require_only({ "scripted", "at", "hard", "easy", "gamma", "radius" });
            BoundaryProfileSpec s;
            s.gen_len       = gen_len;
            s.hard_position = opt.get_int("at", s.hard_position);
            s.hard          = opt.get_double("hard", s.hard);
            s.easy          = opt.get_double("easy", s.easy);
            s.gain          = opt.get_double("gamma", s.gain);
            s.radius        = opt.get_int("radius", s.radius);
            s.seed          = run_seed;
            return std::make_unique<OracleDenoiser>(boundary_profile(s));
        }
        if (kind == "uniform") {
            opt.require_only({ "scripted", "difficulty", "gamma", "radius" });
            return std::make_unique<OracleDenoiser>(uniform_profile(gen_len, opt.get_double("difficulty", 0.05),
                                                                    opt.get_double("gamma", 0.5),
                                                                    opt.get_int("radius", 4), run_seed));
        }
        throw InvalidArgument("unknown scripted profile '" + kind + "'");
    }
    throw InvalidArgument("unknown denoiser '" + opt.name + "'");
}

} // namespace dsb
