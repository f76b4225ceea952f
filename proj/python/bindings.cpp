#include "dsb/cache_policy.hpp"
#include "dsb/decode.hpp"
#include "dsb/errors.hpp"
#include "dsb/grid.hpp"
#include "dsb/metrics.hpp"
#include "dsb/sampler.hpp"
#include "dsb/scheduler.hpp"
#include "dsb/sim_oracle.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace dsb;

#define DSB_STR_(x) #x
#define DSB_STR(x) DSB_STR_(x)

namespace {

py::dict metrics_dict(const RunResult & run, double c_low) {
    const RunMetrics m = run_metrics(run, c_low);
    py::dict         d;
    d["experiment"]         = run.key.experiment;
    d["scheduler"]          = run.key.scheduler;
    d["sampler"]            = run.key.sampler;
    d["cache"]              = run.key.cache;
    d["denoiser"]           = run.key.denoiser;
    d["gen_len"]            = run.key.gen_len;
    d["seed"]               = run.key.seed;
    d["steps"]              = m.steps;
    d["commits_per_step"]   = m.commits_per_step;
    d["nfe"]                = m.nfe;
    d["recomputed_total"]   = m.recomputed_total;
    d["recompute_fraction"] = m.recompute_fraction;
    d["premature_commits"]  = m.premature;
    d["exact_match"]        = m.exact_match ? py::cast(*m.exact_match) : py::none();
    d["wall_ms"]            = m.wall_ms;
    return d;
}

} // namespace

PYBIND11_MODULE(_dsb, m) {
    m.doc()               = "Block schedulers, samplers and KV-cache policies for masked diffusion decoding";
    m.attr("__version__") = DSB_STR(VERSION_INFO);

    auto & error = py::register_exception<Error>(m, "DsbError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", error.ptr());
    py::register_exception<InvalidConfiguration>(m, "InvalidConfiguration", error.ptr());
    py::register_exception<CacheIntegrityError>(m, "CacheIntegrityError", error.ptr());

    py::enum_<CacheEvent>(m, "CacheEvent")
        .value("none", CacheEvent::none)
        .value("partial", CacheEvent::partial)
        .value("global_refresh", CacheEvent::global_refresh);

    py::class_<Commit>(m, "Commit")
        .def_readonly("position", &Commit::position)
        .def_readonly("token", &Commit::token)
        .def_readonly("confidence", &Commit::confidence)
        .def("__repr__", [](const Commit & c) {
            std::ostringstream os;
            os << "Commit(position=" << c.position << ", token=" << c.token << ", confidence=" << c.confidence << ")";
            return os.str();
        });

    py::class_<StepRecord>(m, "StepRecord")
        .def_readonly("step", &StepRecord::step)
        .def_property_readonly("s", [](const StepRecord & r) { return r.block.begin; })
        .def_property_readonly("e", [](const StepRecord & r) { return r.block.end; })
        .def_readonly("commits", &StepRecord::commits)
        .def_readonly("recomputed", &StepRecord::recomputed)
        .def_readonly("event", &StepRecord::event)
        .def_readonly("fallback", &StepRecord::fallback);

    py::class_<DecodeResult>(m, "DecodeResult")
        .def_property_readonly("prompt", [](const DecodeResult & r) { return r.state.prompt(); })
        .def_property_readonly("response", [](const DecodeResult & r) { return r.state.response(); })
        .def_property_readonly("done", [](const DecodeResult & r) { return r.state.done(); })
        .def_readonly("trace", &DecodeResult::trace)
        .def_readonly("nfe", &DecodeResult::nfe)
        .def_readonly("recomputed_total", &DecodeResult::recomputed_total)
        .def_property_readonly("steps", [](const DecodeResult & r) { return r.trace.size(); });

    m.def(
        "decode",
        [](const std::string & scheduler, const std::string & sampler, const std::string & cache,
           const std::string & denoiser, std::vector<TokenId> prompt, std::int32_t gen_len, std::uint64_t seed,
           std::optional<TokenId> eos) {
            auto          d = make_denoiser(denoiser, gen_len, seed);
            DecodeOptions opts;
            opts.eos_id = eos;
            py::gil_scoped_release release;
            return decode(*d, parse_scheduler(scheduler), parse_sampler(sampler), parse_cache_policy(cache),
                          std::move(prompt), gen_len, opts);
        },
        py::arg("scheduler"), py::arg("sampler"), py::arg("cache"), py::arg("denoiser"), py::arg("prompt"),
        py::arg("gen_len"), py::arg("seed") = 0, py::arg("eos") = py::none(),
        "Decode one response and return its final state and step trace.");

    m.def(
        "write_trace",
        [](const std::vector<StepRecord> & trace) {
            std::ostringstream os;
            write_trace(os, trace);
            return os.str();
        },
        py::arg("trace"), "Serialize a trace to line-delimited JSON.");
    m.def(
        "read_trace",
        [](const std::string & text) {
            std::istringstream in(text);
            return read_trace(in);
        },
        py::arg("text"));

    m.def(
        "run_grid",
        [](const std::string & yaml, unsigned threads) {
            const GridConfig       config = parse_grid_config(yaml);
            std::vector<RunResult> runs;
            {
                py::gil_scoped_release release;
                runs = run_grid(config, GridOptions{ threads, std::nullopt });
            }
            py::list rows;
            for (const auto & r : runs) {
                rows.append(metrics_dict(r, config.c_low));
            }
            return rows;
        },
        py::arg("config"), py::arg("threads") = 1,
        "Run every cell of a YAML grid config; one metrics dict per cell.");
    m.def("grid_cell_count", [](const std::string & yaml) { return cell_count(parse_grid_config(yaml)); },
          py::arg("config"));

    m.def("normalize_scheduler", [](const std::string & s) { return to_string(parse_scheduler(s)); });
    m.def("normalize_sampler", [](const std::string & s) { return to_string(parse_sampler(s)); });
    m.def("normalize_cache", [](const std::string & s) { return to_string(parse_cache_policy(s)); });

    m.def(
        "window_trace",
        [](const std::string & scheduler, std::int32_t prompt_len, std::int32_t gen_len,
           const std::vector<std::vector<Position>> & commits) {
            const auto    kind  = parse_scheduler(scheduler);
            SequenceState state = new_sequence(std::vector<TokenId>(static_cast<std::size_t>(prompt_len), 0),
                                               gen_len, Vocab{ 2, 1 });
            BlockWindow   w     = init_window(kind, prompt_len, gen_len);
            std::vector<std::pair<Position, Position>> out{ { w.start, w.end } };
            for (const auto & step : commits) {
                for (Position p : step) {
                    if (!w.range().contains(p)) {
                        throw InvalidArgument("position " + std::to_string(p) + " is outside the active block");
                    }
                    state.commit_abs(p, 0);
                }
                w = advance(w, state);
                out.emplace_back(w.start, w.end);
            }
            return out;
        },
        py::arg("scheduler"), py::arg("prompt_len"), py::arg("gen_len"), py::arg("commits"),
        "Block windows produced by feeding per-step commits (absolute positions) to a scheduler.");

    m.def("prefix_window_len", &prefix_window_len, py::arg("min_prefix"), py::arg("s_now"), py::arg("s_prev"));

    m.def(
        "boundary_profile",
        [](std::int32_t gen_len, std::int32_t hard_position, double hard, double easy, double gain,
           std::int32_t radius, std::uint64_t seed) {
            BoundaryProfileSpec spec{ gen_len, hard_position, hard, easy, gain, radius, seed, Vocab{ 65, 64 } };
            std::ostringstream os;
            write_profile(os, boundary_profile(spec));
            return os.str();
        },
        py::arg("gen_len") = 256, py::arg("hard_position") = 31, py::arg("hard") = 0.95, py::arg("easy") = 0.05,
        py::arg("gain") = 0.5, py::arg("radius") = 4, py::arg("seed") = 0,
        "Text of a one-hard-position difficulty profile, loadable with oracle:profile=<path>.");
}
