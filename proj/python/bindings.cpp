#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stream_t1/beam.hpp"
#include "stream_t1/config.hpp"
#include "stream_t1/experiment.hpp"
#include "stream_t1/noise.hpp"
#include "stream_t1/reward.hpp"

namespace py = pybind11;
using namespace stream_t1;

namespace {

py::dict record_dict(const ChunkLogRecord& r) {
  py::dict d;
  d["chunk_index"] = r.chunk_index;
  d["candidate_id"] = r.candidate_id;
  d["lineage_id"] = r.lineage_id;
  d["parent_id"] = r.parent_id;
  d["s_short"] = r.s_short;
  d["s_long"] = r.s_long;
  d["s_final"] = r.s_final;
  d["cumulative_final"] = r.cumulative_final;
  d["routing_decision"] =
      r.routing_decision ? py::object(py::str(std::string(to_string(*r.routing_decision))))
                         : py::object(py::none());
  d["evicted_chunk"] = r.evicted_chunk;
  d["c_quality"] = r.c_quality;
  d["c_transition"] = r.c_transition;
  d["noise_seed_path"] = r.noise_seed_path;
  return d;
}

py::dict summary_dict(const SummaryRow& s) {
  py::dict d;
  d["strategy"] = s.strategy;
  d["seed"] = s.seed;
  d["cumulative_final"] = s.cumulative_final;
  d["mean_short"] = s.mean_short;
  d["mean_long"] = s.mean_long;
  d["appends"] = s.appends;
  d["ema_updates"] = s.ema_updates;
  d["discards"] = s.discards;
  d["generator_calls"] = s.generator_calls;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "stream_t1 core bindings";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<BudgetMismatch>(m, "BudgetMismatch", PyExc_RuntimeError);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("from_text", &parse_config_text, py::arg("text"))
      .def_static("from_file", [](const std::string& path) { return parse_config(path); },
                  py::arg("path"))
      .def("to_text", &serialize_config)
      .def("validate", &RunConfig::validate)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("total_chunks", &RunConfig::total_chunks)
      .def_readwrite("frames", &RunConfig::frames)
      .def_readwrite("dim", &RunConfig::dim)
      .def_readwrite("beam_width", &RunConfig::beam_width)
      .def_readwrite("expansions", &RunConfig::expansions)
      .def_readwrite("bon_n", &RunConfig::bon_n)
      .def_readwrite("beta", &RunConfig::beta)
      .def_readwrite("tau", &RunConfig::tau)
      .def_readwrite("reward_window", &RunConfig::reward_window)
      .def_readwrite("attn_window", &RunConfig::attn_window)
      .def_readwrite("sink_size", &RunConfig::sink_size)
      .def_readwrite("alpha", &RunConfig::alpha)
      .def_readwrite("tau_short", &RunConfig::tau_short)
      .def_readwrite("tau_long", &RunConfig::tau_long)
      .def_readwrite("scene_file", &RunConfig::scene_file)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readwrite("compare_seeds", &RunConfig::compare_seeds)
      .def_property(
          "strategy", [](const RunConfig& c) { return std::string(to_string(c.strategy)); },
          [](RunConfig& c, const std::string& s) { c.strategy = parse_strategy(s); })
      .def("__eq__", [](const RunConfig& a, const RunConfig& b) { return a == b; })
      .def("__repr__", [](const RunConfig& c) { return "RunConfig(\n" + serialize_config(c) + ")"; });

  py::class_<RunResult>(m, "RunResult")
      .def_property_readonly("strategy",
                             [](const RunResult& r) { return std::string(to_string(r.strategy)); })
      .def_property_readonly("cumulative_final",
                             [](const RunResult& r) { return r.trajectory.cumulative_final; })
      .def_property_readonly("summary", [](const RunResult& r) { return summary_dict(r.summary); })
      .def_property_readonly("log",
                             [](const RunResult& r) {
                               py::list out;
                               for (const auto& rec : r.log) out.append(record_dict(rec));
                               return out;
                             })
      .def_property_readonly("trajectory",
                             [](const RunResult& r) {
                               py::list out;
                               for (const auto& rec : r.trajectory.records) out.append(record_dict(rec));
                               return out;
                             })
      .def_property_readonly("frames",
                             [](const RunResult& r) {
                               std::vector<Matrix> out;
                               for (const auto& c : r.trajectory.chunks) out.push_back(c.frames);
                               return out;
                             })
      .def_property_readonly("generator_calls",
                             [](const RunResult& r) { return r.counters.generator_calls; })
      .def("format_log", [](const RunResult& r, const std::string& fmt) {
        return format_log(r.log, fmt == "tsv" ? LogFormat::Tsv : LogFormat::Jsonl);
      }, py::arg("format") = "jsonl");

  m.def(
      "run",
      [](const RunConfig& c, std::optional<std::string> strategy) {
        const Strategy s = strategy ? parse_strategy(*strategy) : c.strategy;
        py::gil_scoped_release release;
        return run_strategy(c, s);
      },
      py::arg("config") = RunConfig{}, py::arg("strategy") = py::none(),
      "Run one strategy end to end.");

  m.def("strategies", [] {
    std::vector<std::string> out;
    for (Strategy s : all_strategies()) out.emplace_back(to_string(s));
    return out;
  });

  m.def(
      "compare",
      [](const RunConfig& c, const std::string& strategies) {
        const auto list = parse_strategy_list(strategies);
        Comparison cmp;
        {
          py::gil_scoped_release release;
          cmp = compare(c, list);
        }
        py::list rows, means;
        for (const auto& r : cmp.rows) rows.append(summary_dict(r));
        for (const auto& r : cmp.means) means.append(summary_dict(r));
        py::dict d;
        d["rows"] = rows;
        d["means"] = means;
        d["csv"] = format_comparison(cmp);
        return d;
      },
      py::arg("config") = RunConfig{}, py::arg("strategies") = "baselines");

  m.def(
      "verify",
      [](std::uint64_t seed) {
        VerifyOptions o;
        o.seed = seed;
        py::list out;
        for (const auto& r : verify(o)) out.append(py::make_tuple(r.name, r.passed, r.detail));
        return out;
      },
      py::arg("seed") = kDefaultSeed);

  m.def(
      "propagate_noise",
      [](const Matrix& prev, double beta, std::uint64_t seed) {
        RngStream rng(seed);
        return propagate_noise({prev, 0}, {beta}, rng).values;
      },
      py::arg("prev"), py::arg("beta") = 0.5, py::arg("seed") = kDefaultSeed);

  m.def(
      "fuse",
      [](double s, double l, int n, double tau, int total) { return fuse(s, l, n, {tau, total}); },
      py::arg("s_short"), py::arg("s_long"), py::arg("chunk_index"), py::arg("tau") = 0.5,
      py::arg("total_chunks") = 40);

  m.def("route", [](bool q, bool t) { return std::string(to_string(route(q, t))); },
        py::arg("c_quality"), py::arg("c_transition"));

  m.def(
      "select_top_k",
      [](const std::vector<double>& keys, int k) { return select_top_k(keys, k); },
      py::arg("keys"), py::arg("k"));
}

