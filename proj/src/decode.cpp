#include "dsb/decode.hpp"

#include "dsb/errors.hpp"

#include <nlohmann/json.hpp>

#include <istream>
#include <ostream>
#include <string>

namespace dsb {

namespace {

bool eos_reached(const SequenceState & state, const std::vector<Commit> & commits, TokenId eos) {
    for (const auto & c : commits) {
        if (c.token != eos) {
            continue;
        }
        const Position rel = state.to_response(c.position);
        bool           ok  = true;
        for (Position p = 0; p < rel && ok; ++p) {
            ok = !state.is_masked(p);
        }
        if (ok) {
            return true;
        }
    }
    return false;
}

} // namespace

DecodeResult decode(Denoiser & denoiser, const SchedulerKind & scheduler, const SamplerKind & sampler,
                    const CachePolicy & cache, std::vector<TokenId> prompt, std::int32_t gen_len,
                    const DecodeOptions & options) {
    if (uses_kv_cache(cache) && !denoiser.supports_kv_cache()) {
        throw InvalidConfiguration("cache policy '" + to_string(cache) + "' needs a denoiser with KV state");
    }
    DecodeResult result{ new_sequence(std::move(prompt), gen_len, denoiser.vocab()), {}, 0, 0 };
    SequenceState & state = result.state;
    if (state.total_len() > denoiser.max_len()) {
        throw InvalidConfiguration("sequence of length " + std::to_string(state.total_len()) +
                                   " exceeds the denoiser maximum of " + std::to_string(denoiser.max_len()));
    }

    denoiser.reset(state);
    BlockWindow   window   = init_window(scheduler, state.prompt_len(), gen_len);
    CacheSchedule schedule = make_cache_schedule(refresh_period(scheduler), window.start);

    while (!state.done()) {
        if (result.trace.size() >= static_cast<std::size_t>(gen_len)) {
            throw std::logic_error("decode exceeded one step per response position");
        }
        const RecomputePlan plan = recompute_set(cache, window, schedule, state.total_len());
        const ConfidenceMap conf = denoiser.score(state, plan);
        ++result.nfe;
        result.recomputed_total += static_cast<std::int64_t>(plan.positions.size());

        if (options.observer) {
            options.observer(StepView{ state, window, plan, schedule, conf, denoiser });
        }

        const PositionSet eligible = eligible_set(window, state);
        if (eligible.empty()) {
            throw std::logic_error("active window has no masked positions while decoding is unfinished");
        }
        Selection sel = select(sampler, conf, eligible);

        StepRecord rec;
        rec.step       = state.step();
        rec.block      = window.range();
        rec.recomputed = static_cast<std::int64_t>(plan.positions.size());
        rec.event      = plan.event;
        rec.fallback   = sel.fallback;
        for (const auto & c : sel.commits) {
            state.commit_abs(c.position, c.token);
        }
        rec.commits = std::move(sel.commits);
        state.advance_step();

        const Position used_start = window.start;
        window                    = advance(window, state);
        schedule = after_step(schedule, static_cast<std::int64_t>(rec.commits.size()), plan.event, used_start);

        const bool stop = options.eos_id && eos_reached(state, rec.commits, *options.eos_id);
        result.trace.push_back(std::move(rec));
        if (stop) {
            break;
        }
    }
    return result;
}

void write_trace(std::ostream & out, const std::vector<StepRecord> & trace) {
    for (const auto & rec : trace) {
        nlohmann::ordered_json j;
        j["step"] = rec.step;
        j["s"]    = rec.block.begin;
        j["e"]    = rec.block.end;
        nlohmann::ordered_json positions = nlohmann::ordered_json::array();
        nlohmann::ordered_json tokens      = nlohmann::ordered_json::array();
        nlohmann::ordered_json confidences = nlohmann::ordered_json::array();
        for (const auto & c : rec.commits) {
            positions.push_back(c.position);
            tokens.push_back(c.token);
            confidences.push_back(c.confidence);
        }
        j["positions"]   = std::move(positions);
        j["tokens"]      = std::move(tokens);
        j["confidences"] = std::move(confidences);
        j["recomputed"] = rec.recomputed;
        j["event"]      = std::string(to_string(rec.event));
        j["fallback"]   = rec.fallback;
        out << j.dump() << '\n';
    }
}

std::vector<StepRecord> read_trace(std::istream & in) {
    std::vector<StepRecord> trace;
    std::string             line;
    std::size_t             lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            StepRecord rec;
            rec.step        = j.at("step").get<std::int64_t>();
            rec.block.begin = j.at("s").get<Position>();
            rec.block.end   = j.at("e").get<Position>();
            const auto & ps = j.at("positions");
            const auto & ts = j.at("tokens");
            const auto & cs = j.at("confidences");
            if (ps.size() != ts.size() || ps.size() != cs.size()) {
                throw ParseError(lineno, "commit arrays differ in length");
            }
            for (std::size_t i = 0; i < ps.size(); ++i) {
                rec.commits.push_back(Commit{ ps[i].get<Position>(), ts[i].get<TokenId>(), cs[i].get<float>() });
            }
            rec.recomputed = j.at("recomputed").get<std::int64_t>();
            rec.event      = cache_event_from_string(j.at("event").get<std::string>());
            rec.fallback   = j.at("fallback").get<bool>();
            trace.push_back(std::move(rec));
        } catch (const nlohmann::json::exception & e) {
            throw ParseError(lineno, e.what());
        } catch (const InvalidArgument & e) {
            throw ParseError(lineno, e.what());
        }
    }
    return trace;
}

} // namespace dsb
