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

#include "unionsearch/cli.hpp"

#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "unionsearch/engine.hpp"
#include "unionsearch/error.hpp"
#include "unionsearch/eval.hpp"
#include "unionsearch/persist.hpp"

namespace unionsearch {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_file;
  std::vector<std::string> overrides;

  std::string lake;
  std::string state;
  std::string out;
  std::string params;
  std::string embeddings;
  std::string mode;
  std::string query;
  std::string gt;
  std::string queries;
  std::string json_out;
  std::string write_lake;
  bool has_header = true;
  bool json = false;
  bool build = false;

  std::optional<std::size_t> epochs, batch, k, clusters, per_cluster;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, tau_abs, tau_drop;
};

// Defaults <- lake-state snapshot <- --config <- --set <- individual flags.
EngineConfig resolve_config(const Options& o, const fs::path* state_dir) {
  EngineConfig cfg;
  if (state_dir && fs::exists(*state_dir / "config.txt")) cfg.merge_file(*state_dir / "config.txt");
  if (!o.config_file.empty()) cfg.merge_file(o.config_file);
  for (const auto& kv : o.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.ingest.has_header = o.has_header;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.batch) cfg.train.batch_size = *o.batch;
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.lr) cfg.train.learning_rate = *o.lr;
  if (o.k) cfg.search.k = *o.k;
  if (o.tau_abs) cfg.search.tau_abs = *o.tau_abs;
  if (o.tau_drop) cfg.search.tau_drop = *o.tau_drop;
  if (!o.mode.empty()) cfg.set("index.mode", o.mode);
  return cfg;
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

EncoderParams train_params(const DataLake& lake, const EngineConfig& cfg, std::ostream& err) {
  TrainResult r = train(lake, cfg.encoder, cfg.train, [&err](std::size_t epoch, double loss) {
    err << "epoch " << (epoch + 1) << " mean loss " << fixed(loss) << '\n';
  });
  r.params.round_to_float();
  return std::move(r.params);
}

int cmd_ingest(const Options& o, std::ostream& out) {
  fs::path state = o.state;
  EngineConfig cfg = resolve_config(o, o.state.empty() ? nullptr : &state);
  DataLake lake = load_lake(o.lake, cfg.ingest);
  std::size_t cols = 0, rows = 0;
  for (const auto& [_, t] : lake) {
    cols += t.column_count();
    rows += t.n_rows;
  }
  out << "tables\t" << lake.size() << "\ncolumns\t" << cols << "\nrows\t" << rows << '\n';
  if (!o.state.empty()) {
    fs::create_directories(state);
    build_column_store(lake, make_word_vectors(cfg)).save(state / "colvecs.bin");
    cfg.save(state / "config.txt");
  }
  return 0;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  EngineConfig cfg = resolve_config(o, nullptr);
  DataLake lake = load_lake(o.lake, cfg.ingest);
  EncoderParams params = train_params(lake, cfg, err);
  save_params(o.out, params);
  out << "wrote " << o.out << '\n';
  return 0;
}

int cmd_embed(const Options& o, std::ostream& out) {
  fs::path state = o.state;
  EngineConfig cfg = resolve_config(o, o.state.empty() ? nullptr : &state);
  fs::path params_path = !o.params.empty() ? fs::path(o.params) : state / "params.bin";
  fs::path out_path = !o.out.empty() ? fs::path(o.out) : state / "embeddings.bin";
  if (o.state.empty() && (o.params.empty() || o.out.empty()))
    throw ConfigError("embed needs --state or both --params and --out");
  DataLake lake = load_lake(o.lake, cfg.ingest);
  EncoderParams params = load_params(params_path);
  if (!o.state.empty()) fs::create_directories(state);
  save_embeddings(out_path, to_embedding_set(embed_lake(lake, params, cfg.offline_serializer())));
  if (!o.state.empty()) {
    if (!fs::exists(state / "params.bin") || !fs::equivalent(params_path, state / "params.bin"))
      save_params(state / "params.bin", params);
    build_column_store(lake, make_word_vectors(cfg)).save(state / "colvecs.bin");
    cfg.save(state / "config.txt");
  }
  out << "embedded " << lake.size() << " tables into " << out_path.string() << '\n';
  return 0;
}

int cmd_index(const Options& o, std::ostream& out) {
  EngineConfig cfg = resolve_config(o, nullptr);
  EmbeddingSet set = load_embeddings(o.embeddings);
  const std::size_t n = set.size();
  EmbeddingIndex idx = EmbeddingIndex::build(std::move(set), cfg.resolve_index_mode(n), cfg.index);
  idx.save(o.out);
  out << "indexed " << n << " embeddings (" << to_string(idx.mode()) << ") into " << o.out << '\n';
  return 0;
}

void build_state(const Options& o, const fs::path& state, std::ostream& err) {
  EngineConfig cfg = resolve_config(o, nullptr);
  DataLake lake = load_lake(o.lake, cfg.ingest);
  EncoderParams params = train_params(lake, cfg, err);
  EngineState engine = build_engine(lake, std::move(params), cfg);
  save_state(state, engine, cfg);
}

int cmd_query(const Options& o, std::ostream& out, std::ostream& err) {
  fs::path state_dir = o.state;
  if (o.build) {
    if (o.lake.empty()) throw ConfigError("--build requires --lake");
    build_state(o, state_dir, err);
  }
  EngineConfig cfg;
  EngineState state = load_state(state_dir, &cfg);
  cfg = resolve_config(o, &state_dir);
  cfg.search.validate();
  Table q = ingest_csv(o.query, cfg.ingest);
  SearchOutcome res = search(q, state, cfg.search);
  if (o.json) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < res.result.entries.size(); ++i) {
      const auto& e = res.result.entries[i];
      rows.push_back({{"rank", i + 1}, {"table_id", e.id}, {"mu_T", e.table_score}, {"mu_A", e.alignment}, {"mu", e.score}});
    }
    nlohmann::json doc = {{"query", q.id},
                          {"k", cfg.search.k},
                          {"initial_pool", res.pool.init.size()},
                          {"pool_size", res.pool.cutoff},
                          {"results", rows}};
    out << doc.dump(2) << '\n';
    return 0;
  }
  out << "rank\ttable_id\tmu_T\tmu_A\tmu\n";
  for (std::size_t i = 0; i < res.result.entries.size(); ++i) {
    const auto& e = res.result.entries[i];
    out << (i + 1) << '\t' << e.id << '\t' << fixed(e.table_score) << '\t' << fixed(e.alignment) << '\t'
        << fixed(e.score) << '\n';
  }
  return 0;
}

void emit_report(const Options& o, const MetricReport& report, std::ostream& out) {
  if (o.json) {
    out << report.to_json().dump(2) << '\n';
  } else {
    out << report.to_text();
  }
  if (!o.json_out.empty()) {
    std::ofstream f(o.json_out);
    if (!f) throw IoError("cannot write " + o.json_out);
    f << report.to_json().dump(2) << '\n';
  }
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  fs::path state_dir = o.state;
  EngineConfig cfg = resolve_config(o, o.state.empty() ? nullptr : &state_dir);
  GroundTruth gt = load_ground_truth(o.gt);
  DataLake queries = load_lake(o.queries, cfg.ingest);
  MetricReport report;
  if (!o.state.empty()) {
    report = evaluate(load_state(state_dir), gt, queries, cfg.search);
  } else {
    DataLake lake = load_lake(o.lake, cfg.ingest);
    report = run_benchmark(lake, gt, queries, cfg, [&err](std::size_t e, double l) {
               err << "epoch " << (e + 1) << " mean loss " << fixed(l) << '\n';
             }).report;
  }
  emit_report(o, report, out);
  return 0;
}

int cmd_bench_synth(const Options& o, std::ostream& out, std::ostream& err) {
  EngineConfig cfg = resolve_config(o, nullptr);
  if (!o.k) cfg.search.k = 5;
  SyntheticConfig sc;
  if (o.clusters) sc.clusters = *o.clusters;
  if (o.per_cluster) sc.tables_per_cluster = *o.per_cluster;
  if (o.seed) sc.seed = *o.seed;
  SyntheticLake synth = gen_synthetic_lake(sc);
  DataLake queries = hold_out_queries(synth, 1);
  if (!o.write_lake.empty()) {
    fs::path dir = o.write_lake;
    write_lake(synth.lake, dir / "lake");
    write_lake(queries, dir / "queries");
    save_ground_truth(synth.ground_truth, dir / "gt.csv");
  }
  BenchmarkRun run = run_benchmark(synth.lake, synth.ground_truth, queries, cfg, [&err](std::size_t e, double l) {
    err << "epoch " << (e + 1) << " mean loss " << fixed(l) << '\n';
  });
  emit_report(o, run.report, out);
  if (!o.json) out << "train seconds    " << fixed(run.train_seconds, 1) << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Table union search over a data lake of CSV files", "unionsearch"};
  app.require_subcommand(1, 1);
  Options o;
  app.add_option("--config", o.config_file, "Flat key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", o.overrides, "Override one configuration entry (key=value)");

  auto header_flag = [&o](CLI::App* sub) {
    sub->add_option("--has-header", o.has_header, "CSV files start with a header row")->default_val(true);
  };

  auto* ingest = app.add_subcommand("ingest", "Load a lake directory and precompute column vectors");
  ingest->add_option("--lake", o.lake, "Directory of CSV files")->required();
  ingest->add_option("--state", o.state, "Lake-state directory to write column vectors into");
  header_flag(ingest);

  auto* train_cmd = app.add_subcommand("train", "Train the table encoder");
  train_cmd->add_option("--lake", o.lake, "Directory of CSV files")->required();
  train_cmd->add_option("--out", o.out, "Checkpoint path")->required();
  train_cmd->add_option("--epochs", o.epochs);
  train_cmd->add_option("--batch", o.batch);
  train_cmd->add_option("--seed", o.seed);
  train_cmd->add_option("--lr", o.lr);
  header_flag(train_cmd);

  auto* embed = app.add_subcommand("embed", "Embed every lake table with a trained encoder");
  embed->add_option("--lake", o.lake, "Directory of CSV files")->required();
  embed->add_option("--params", o.params, "Encoder checkpoint (default STATE/params.bin)");
  embed->add_option("--out", o.out, "Embedding file (default STATE/embeddings.bin)");
  embed->add_option("--state", o.state, "Lake-state directory");
  header_flag(embed);

  auto* index = app.add_subcommand("index", "Build a nearest-neighbor index over embeddings");
  index->add_option("--embeddings", o.embeddings, "Embedding file")->required();
  index->add_option("--mode", o.mode, "exact | hnsw | auto")->check(CLI::IsMember({"exact", "hnsw", "auto"}));
  index->add_option("--out", o.out, "Index directory")->required();

  auto* query = app.add_subcommand("query", "Find the top-k unionable tables for a query table");
  query->add_option("--lake-state", o.state, "Lake-state directory")->required();
  query->add_option("--query", o.query, "Query CSV file")->required()->check(CLI::ExistingFile);
  query->add_option("--k", o.k);
  query->add_option("--tau-abs", o.tau_abs);
  query->add_option("--tau-drop", o.tau_drop);
  query->add_flag("--json", o.json, "Print JSON instead of tab-separated rows");
  query->add_flag("--build", o.build, "Train, embed and index --lake into the state directory first");
  query->add_option("--lake", o.lake, "Lake directory for --build");
  query->add_option("--epochs", o.epochs);
  query->add_option("--seed", o.seed);
  header_flag(query);

  auto* eval = app.add_subcommand("eval", "Evaluate queries against ground truth");
  eval->add_option("--lake", o.lake, "Directory of CSV files");
  eval->add_option("--lake-state", o.state, "Use a prepared lake state instead of training");
  eval->add_option("--gt", o.gt, "Ground truth CSV (query_id,candidate_id)")->required();
  eval->add_option("--queries", o.queries, "Directory of query CSV files")->required();
  eval->add_option("--k", o.k);
  eval->add_option("--tau-abs", o.tau_abs);
  eval->add_option("--tau-drop", o.tau_drop);
  eval->add_option("--epochs", o.epochs);
  eval->add_option("--seed", o.seed);
  eval->add_flag("--json", o.json, "Print the report as JSON");
  eval->add_option("--json-out", o.json_out, "Also write the JSON report to this file");
  header_flag(eval);

  auto* bench = app.add_subcommand("bench-synth", "Run the synthetic end-to-end benchmark");
  bench->add_option("--clusters", o.clusters);
  bench->add_option("--per-cluster", o.per_cluster);
  bench->add_option("--seed", o.seed, "Generator seed");
  bench->add_option("--k", o.k);
  bench->add_option("--epochs", o.epochs);
  bench->add_option("--tau-abs", o.tau_abs);
  bench->add_option("--tau-drop", o.tau_drop);
  bench->add_flag("--json", o.json, "Print the report as JSON");
  bench->add_option("--json-out", o.json_out, "Also write the JSON report to this file");
  bench->add_option("--write-lake", o.write_lake, "Write the generated lake, queries and gt.csv here");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(o, out);
    if (*train_cmd) return cmd_train(o, out, err);
    if (*embed) return cmd_embed(o, out);
    if (*index) return cmd_index(o, out);
    if (*query) return cmd_query(o, out, err);
    if (*eval) {
      if (o.lake.empty() && o.state.empty()) throw ConfigError("eval needs --lake or --lake-state");
      return cmd_eval(o, out, err);
    }
    if (*bench) return cmd_bench_synth(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace unionsearch
