#include "dsb/sampler.hpp"

#include "dsb/errors.hpp"
#include "dsb/option_string.hpp"

#include <sstream>

namespace dsb {

namespace {

void validate_tau(double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) {
        throw InvalidArgument("threshold tau must lie in (0, 1]");
    }
}

} // namespace

SamplerKind parse_sampler(std::string_view text) {
    const OptionString opt = parse_option_string(text);
    if (opt.name == "vanilla") {
        opt.require_only({});
        return VanillaTop1{};
    }
    if (opt.name == "threshold") {
        opt.require_only({ "tau" });
        const double tau = opt.get_double("tau", 0.9);
        validate_tau(tau);
        return ConfidenceThreshold{ tau };
    }
    throw InvalidArgument("unknown sampler '" + opt.name + "'");
}

std::string to_string(const SamplerKind & kind) {
    if (const auto * t = std::get_if<ConfidenceThreshold>(&kind)) {
        std::ostringstream os;
        os << "threshold:tau=" << t->tau;
        return os.str();
    }
    return "vanilla";
}

Selection select_top1(const ConfidenceMap & conf, const PositionSet & eligible) {
    bool   found = false;
    Commit chosen;
    for (Position p : eligible) {
        const auto it = conf.find(p);
        if (it == conf.end()) {
            continue;
        }
        // strict > keeps the lowest position on ties since eligible is ascending
        if (!found || it->second.confidence > chosen.confidence) {
            chosen = Commit{ p, it->second.token, it->second.confidence };
            found  = true;
        }
    }
    if (!found) {
        throw NoCandidates("no eligible position has a confidence entry");
    }
    return Selection{ { chosen }, false };
}

Selection select_threshold(const ConfidenceMap & conf, const PositionSet & eligible, double tau) {
    validate_tau(tau);
    Selection out;
    bool      any = false;
    for (Position p : eligible) {
        const auto it = conf.find(p);
        if (it == conf.end()) {
            continue;
        }
        any = true;
        if (static_cast<double>(it->second.confidence) >= tau) {
            out.commits.push_back(Commit{ p, it->second.token, it->second.confidence });
        }
    }
    if (!any) {
        throw NoCandidates("no eligible position has a confidence entry");
    }
    if (out.commits.empty()) {
        out          = select_top1(conf, eligible);
        out.fallback = true;
    }
    return out;
}

Selection select(const SamplerKind & kind, const ConfidenceMap & conf, const PositionSet & eligible) {
    if (const auto * t = std::get_if<ConfidenceThreshold>(&kind)) {
        return select_threshold(conf, eligible, t->tau);
    }
    return select_top1(conf, eligible);
}

} // namespace dsb
