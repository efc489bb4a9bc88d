// Copyright 2026 The UnionSearch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "unionsearch/cli.hpp"
#include "unionsearch/engine.hpp"
#include "unionsearch/error.hpp"
#include "unionsearch/eval.hpp"
#include "unionsearch/persist.hpp"

namespace py = pybind11;
using namespace unionsearch;

namespace {

std::vector<std::vector<std::string>> table_cells(const Table& t) {
  std::vector<std::vector<std::string>> out;
  for (const auto& c : t.columns) out.push_back(c.cells);
  return out;
}

py::list result_rows(const QueryResult& r) {
  py::list rows;
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    py::dict d;
    d["rank"] = i + 1;
    d["table_id"] = e.id;
    d["mu_T"] = e.table_score;
    d["mu_A"] = e.alignment;
    d["mu"] = e.score;
    rows.append(d);
  }
  return rows;
}

SearchConfig search_config(const EngineConfig& base, std::optional<std::size_t> k, std::optional<double> tau_abs,
                           std::optional<double> tau_drop) {
  SearchConfig s = base.search;
  if (k) s.k = *k;
  if (tau_abs) s.tau_abs = *tau_abs;
  if (tau_drop) s.tau_drop = *tau_drop;
  return s;
}

// Engine state bundled with the configuration it was built from.
struct Engine {
  EngineState state;
  EngineConfig config;
};

}  // namespace

PYBIND11_MODULE(_unionsearch, m) {
  m.doc() = "Table union search over data lakes of CSV tables";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<EmptyTable>(m, "EmptyTable", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<BuildError>(m, "BuildError", base.ptr());
  py::register_exception<EmptyIndex>(m, "EmptyIndex", base.ptr());
  py::register_exception<BadQuery>(m, "BadQuery", base.ptr());
  py::register_exception<TooFewTables>(m, "TooFewTables", base.ptr());
  py::register_exception<TrainingDiverged>(m, "TrainingDiverged", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());

  py::class_<Table>(m, "Table")
      .def(py::init(&Table::from_columns), py::arg("id"), py::arg("columns"),
           "Build a table from column-major cells.")
      .def_static("from_rows", &Table::from_rows, py::arg("id"), py::arg("rows"))
      .def_readwrite("id", &Table::id)
      .def_readonly("n_rows", &Table::n_rows)
      .def_property_readonly("column_count", &Table::column_count)
      .def_property_readonly("columns", &table_cells)
      .def("__eq__", [](const Table& a, const Table& b) { return a == b; })
      .def("__repr__", [](const Table& t) {
        return "<Table " + t.id + " " + std::to_string(t.n_rows) + "x" + std::to_string(t.column_count()) + ">";
      });

  py::class_<DataLake>(m, "DataLake")
      .def(py::init<>())
      .def("add", &DataLake::add)
      .def("ids", &DataLake::ids)
      .def("__len__", &DataLake::size)
      .def("__contains__", &DataLake::contains)
      .def("__getitem__", &DataLake::at, py::return_value_policy::reference_internal);

  m.def("ingest_csv", [](const std::filesystem::path& p, bool has_header) {
    return ingest_csv(p, {.has_header = has_header});
  }, py::arg("path"), py::arg("has_header") = true);
  m.def("parse_csv", [](const std::string& text, const std::string& id, bool has_header) {
    return parse_csv(text, id, {.has_header = has_header});
  }, py::arg("text"), py::arg("id"), py::arg("has_header") = true);
  m.def("load_lake", [](const std::filesystem::path& p, bool has_header) {
    return load_lake(p, {.has_header = has_header});
  }, py::arg("directory"), py::arg("has_header") = true);
  m.def("write_lake", &write_lake, py::arg("lake"), py::arg("directory"), py::arg("header") = true);
  m.def("tokenize_value", &tokenize_value);

  py::class_<EngineConfig>(m, "Config")
      .def(py::init<>())
      .def_static("load", &EngineConfig::load)
      .def_static("keys", &EngineConfig::keys)
      .def("set", &EngineConfig::set)
      .def("get", &EngineConfig::get)
      .def("entries", &EngineConfig::entries)
      .def("save", &EngineConfig::save);

  py::class_<EncoderParams>(m, "EncoderParams")
      .def_static("init", [](const EngineConfig& c) { return EncoderParams::init(c.encoder); })
      .def_static("load", &load_params)
      .def("save", [](const EncoderParams& p, const std::filesystem::path& path) { save_params(path, p); })
      .def_property_readonly("parameter_count", &EncoderParams::parameter_count);

  m.def("train", [](const DataLake& lake, const EngineConfig& cfg) {
    TrainResult r;
    {
      py::gil_scoped_release release;
      r = train(lake, cfg.encoder, cfg.train);
    }
    r.params.round_to_float();
    return py::make_tuple(std::move(r.params), r.epoch_loss);
  }, py::arg("lake"), py::arg("config"), "Train the encoder; returns (params, per-epoch mean loss).");

  m.def("embed", [](const Table& t, const EncoderParams& p, const EngineConfig& cfg) {
    return embed_table(t, p, cfg.offline_serializer()).vec;
  }, py::arg("table"), py::arg("params"), py::arg("config"));

  py::class_<Engine>(m, "Engine")
      .def_static("build", [](const DataLake& lake, const EncoderParams& params, const EngineConfig& cfg) {
        return Engine{build_engine(lake, params, cfg), cfg};
      }, py::arg("lake"), py::arg("params"), py::arg("config"))
      .def_static("load", [](const std::filesystem::path& dir) {
        Engine e;
        e.state = load_state(dir, &e.config);
        return e;
      })
      .def("save", [](const Engine& e, const std::filesystem::path& dir) { save_state(dir, e.state, e.config); })
      .def_property_readonly("size", [](const Engine& e) { return e.state.index.size(); })
      .def("search", [](const Engine& e, const Table& q, std::optional<std::size_t> k, std::optional<double> tau_abs,
                        std::optional<double> tau_drop) {
        SearchOutcome out = search(q, e.state, search_config(e.config, k, tau_abs, tau_drop));
        py::dict d;
        d["results"] = result_rows(out.result);
        d["initial_pool"] = out.pool.init.size();
        d["pool_size"] = out.pool.cutoff;
        return d;
      }, py::arg("query"), py::arg("k") = py::none(), py::arg("tau_abs") = py::none(), py::arg("tau_drop") = py::none())
      .def("evaluate", [](const Engine& e, const GroundTruth& gt, const DataLake& queries, std::optional<std::size_t> k) {
        return evaluate(e.state, gt, queries, search_config(e.config, k, std::nullopt, std::nullopt)).to_json().dump();
      }, py::arg("ground_truth"), py::arg("queries"), py::arg("k") = py::none(),
         "Evaluate and return the metric report as a JSON string.");

  m.def("adaptive_cutoff", [](const std::vector<double>& s, std::size_t k, double tau_abs, double tau_drop) {
    return adaptive_cutoff(s, k, tau_abs, tau_drop);
  }, py::arg("scores"), py::arg("k"), py::arg("tau_abs"), py::arg("tau_drop"));
  m.def("precision_recall", [](const std::vector<std::string>& r, const std::set<std::string>& gt, std::size_t k) {
    auto pr = precision_recall(r, gt, k);
    return py::make_tuple(pr.precision, pr.recall);
  });
  m.def("map_at_k", [](const std::vector<std::string>& r, const std::set<std::string>& gt, std::size_t k) {
    return map_at_k(r, gt, k);
  });
  m.def("recall_upper_bound", &recall_upper_bound);

  m.def("gen_synthetic_lake", [](std::size_t clusters, std::size_t per_cluster, std::uint64_t seed) {
    SyntheticConfig sc;
    sc.clusters = clusters;
    sc.tables_per_cluster = per_cluster;
    sc.seed = seed;
    SyntheticLake s = gen_synthetic_lake(sc);
    return py::make_tuple(std::move(s.lake), s.ground_truth);
  }, py::arg("clusters") = 40, py::arg("per_cluster") = 8, py::arg("seed") = 2024,
     "Returns (lake, ground_truth).");

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "unionsearch");
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Run a CLI command; returns (exit code, stdout, stderr).");
}
