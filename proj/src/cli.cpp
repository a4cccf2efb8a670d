#include "melrag/cli.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <unordered_set>

#include "CLI11.hpp"
#include "json.hpp"
#include "melrag/backend.hpp"
#include "melrag/dataset.hpp"
#include "melrag/embedding_store.hpp"
#include "melrag/error.hpp"
#include "melrag/evaluation.hpp"
#include "melrag/pipeline.hpp"
#include "melrag/prompting.hpp"
#include "melrag/report.hpp"
#include "melrag/retrieval_index.hpp"

namespace melrag {
namespace {

namespace fs = std::filesystem;

struct SplitArgs {
  std::string cases, out;
  std::uint64_t seed = 0;
  double train_frac = 0.7;
  double val_frac = 0.2;
};

struct IndexArgs {
  std::string bundle, out;
  bool normalize = false;
};

struct RetrieveArgs {
  std::string index, queries, id;
  std::size_t k = 2;
  bool json = false;
};

struct ClassifyArgs {
  std::string cases, index, queries, split, subset = "test", out;
  std::vector<std::size_t> ks;
  std::vector<std::size_t> k_sweep;
  std::string mode = "attribute_value";
  std::string backend = "mock";
  std::string endpoint;
  double timeout_s = 60.0;
  std::size_t retries = 2;
  std::size_t backoff_ms = 250;
  std::size_t max_in_flight = 1;
  std::string adapter = "neutral";
  std::optional<std::string> model;
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  std::string image_root, instruction_file, dump_prompts;
  bool trace = false;
};

struct EvaluateArgs {
  std::string preds, cases, out_dir;
};

struct CompareArgs {
  std::string baseline, ours, cases, out;
};

struct DumpPromptArgs {
  std::string cases, index, queries, id, instruction_file;
  std::string mode = "attribute_value";
  std::size_t k = 2;
};

SerializationMode mode_from(const std::string& text) {
  auto mode = parse_serialization_mode(text);
  if (!mode) throw Error(ErrorCode::InvalidArgument, "unknown serialization mode '" + text + "'");
  return *mode;
}

PromptOptions prompt_options(const std::string& instruction_file) {
  PromptOptions opts;
  if (!instruction_file.empty()) {
    opts.instruction = read_text_file(instruction_file);
    while (!opts.instruction.empty() && (opts.instruction.back() == '\n' || opts.instruction.back() == '\r')) {
      opts.instruction.pop_back();
    }
  }
  return opts;
}

// Query vector from a bundle when given, otherwise the stored index row.
MultimodalVector lookup_query_vector(const CaseIndex& index, const std::string& queries_path, const std::string& id) {
  if (!queries_path.empty()) return query_vector_for(read_bundle(queries_path), id, index);
  const auto row = index.find(id);
  if (!row) throw Error(ErrorCode::UnknownCaseId, "case '" + id + "' is not in the index; pass --queries");
  const auto stored = index.row(*row);
  return MultimodalVector(stored.begin(), stored.end());
}

std::string safe_file_name(std::string id) {
  for (auto& c : id) {
    if (c == '/' || c == '\\' || c == ':' || static_cast<unsigned char>(c) < 0x20) c = '_';
  }
  return id;
}

fs::path k_output_path(const fs::path& out, std::size_t k, bool sweep) {
  if (!sweep) return out;
  fs::path p = out;
  p.replace_filename(out.stem().string() + ".k" + std::to_string(k) + out.extension().string());
  return p;
}

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const auto cases = read_cases_jsonl(a.cases);
  const auto split = stratified_split(cases, a.seed, a.train_frac, a.val_frac);
  write_split(a.out, split);
  out << fmt::format("train {}  val {}  test {}  (seed {})\n", split.train_ids.size(), split.val_ids.size(),
                     split.test_ids.size(), split.seed);
  return kExitOk;
}

int cmd_index(const IndexArgs& a, std::ostream& out, std::ostream& err) {
  const auto bundle = read_bundle(a.bundle);
  IndexBuildInfo info;
  const auto index = build_index(bundle, a.normalize, info);
  if (info.empty) err << "warning: bundle is empty; every query will return no neighbors\n";
  if (info.zero_norm_rows > 0) err << "warning: " << info.zero_norm_rows << " zero-norm rows left unnormalized\n";
  save_index(index, a.out);
  out << fmt::format("indexed {} cases, dim {} ({} image + {} text), {}\n", index.size(), index.dim(),
                     index.image_dim(), index.text_dim(), index.normalized() ? "normalized" : "raw");
  return kExitOk;
}

int cmd_retrieve(const RetrieveArgs& a, std::ostream& out) {
  if (a.k == 0) throw Error(ErrorCode::InvalidArgument, "-k must be at least 1 for retrieve");
  const auto index = load_index(a.index);
  const auto query = lookup_query_vector(index, a.queries, a.id);
  const auto neighbors = retrieve_neighbors(index, a.id, query, a.k);
  if (a.json) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& n : neighbors) list.push_back({{"id", n.id}, {"score", n.score}});
    out << list.dump() << "\n";
  } else {
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
      out << fmt::format("{}\t{}\t{:.6f}\n", i + 1, neighbors[i].id, neighbors[i].score);
    }
  }
  return kExitOk;
}

std::vector<CaseRecord> select_queries(const CaseStore& store, const EmbeddingBundle& queries,
                                       const std::string& split_path, const std::string& subset) {
  std::vector<std::string> ids;
  if (split_path.empty()) {
    ids = queries.ids;
  } else {
    const auto split = read_split(split_path);
    if (subset == "test") ids = split.test_ids;
    else if (subset == "val") ids = split.val_ids;
    else if (subset == "train") ids = split.train_ids;
    else throw Error(ErrorCode::InvalidArgument, "unknown subset '" + subset + "'");
  }
  std::vector<CaseRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(store.at(id));
  return out;
}

int cmd_classify(const ClassifyArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<std::size_t> ks = a.ks;
  ks.insert(ks.end(), a.k_sweep.begin(), a.k_sweep.end());
  if (ks.empty()) ks.push_back(2);
  const bool sweep = ks.size() > 1;

  BackendConfig config;
  config.kind = a.backend == "http" ? BackendKind::Http : BackendKind::Mock;
  if (!a.endpoint.empty()) config.endpoint = a.endpoint;
  config.timeout_s = a.timeout_s;
  config.retries = a.retries;
  config.initial_backoff = std::chrono::milliseconds(a.backoff_ms);
  config.max_in_flight = a.max_in_flight;
  config.adapter = a.adapter == "openai" ? WireAdapter::OpenAiChat : WireAdapter::Neutral;
  config.model = a.model;
  config.temperature = a.temperature;
  config.max_tokens = a.max_tokens;
  if (config.kind == BackendKind::Mock && config.endpoint) {
    err << "note: --endpoint ignored for the mock backend\n";
    config.endpoint.reset();
  }

  std::mutex trace_mutex;
  TraceSink trace;
  if (a.trace) {
    trace = [&](std::string_view line) {
      std::lock_guard lock(trace_mutex);
      err << "[trace] " << line << '\n';
    };
  }
  auto backend = make_backend(config, trace);

  const CaseStore store(read_cases_jsonl(a.cases));
  const auto index = load_index(a.index);
  const auto query_embeddings = read_bundle(a.queries);
  const auto queries = select_queries(store, query_embeddings, a.split, a.subset);

  const SerializationMode mode = mode_from(a.mode);
  if (mode != index.serialization_mode()) {
    err << "warning: prompts use " << to_string(mode) << " but the index text was embedded as "
        << to_string(index.serialization_mode()) << "\n";
  }

  ClassifyOptions options;
  options.mode = mode;
  options.retries = config.retries;
  options.initial_backoff = config.initial_backoff;
  options.max_in_flight = config.max_in_flight;
  options.prompt = prompt_options(a.instruction_file);
  options.attach_images = config.kind == BackendKind::Http;
  options.image_root = a.image_root;

  const TruthMap truth = store.truth();
  std::vector<std::pair<std::string, MetricReport>> rows;
  bool backend_failed = false;
  for (const std::size_t k : ks) {
    options.k = k;
    if (!a.dump_prompts.empty()) {
      const fs::path dir = fs::path(a.dump_prompts) / ("k" + std::to_string(k));
      fs::create_directories(dir);
      options.on_prompt = [dir](const CaseRecord& q, const PromptBundle& p) {
        write_text_file(dir / (safe_file_name(q.id) + ".txt"), p.text + "\n");
      };
    }
    const auto preds = classify_cases(queries, query_embeddings, index, store, *backend, options);
    const fs::path out_path = k_output_path(a.out, k, sweep);
    write_predictions_jsonl(out_path, preds);

    const auto report = evaluate_predictions(preds, truth);
    rows.emplace_back("K=" + std::to_string(k), report);
    if (report.backend_failures > 0) {
      backend_failed = true;
      err << "error: backend failed for " << report.backend_failures << " of " << preds.size() << " cases (K=" << k
          << ")\n";
    }
    out << "wrote " << preds.size() << " predictions to " << out_path.string() << "\n";
  }
  out << metric_table_text(rows);
  return backend_failed ? kExitBackendFailure : kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const CaseStore store(read_cases_jsonl(a.cases));
  const auto preds = read_predictions_jsonl(a.preds);
  const auto report = evaluate_predictions(preds, store.truth());
  const fs::path dir = a.out_dir.empty() ? fs::absolute(a.preds).parent_path() : fs::path(a.out_dir);
  fs::create_directories(dir);
  const std::string text = metric_report_text(report);
  write_text_file(dir / "report.txt", text);
  write_text_file(dir / "report.json", metric_report_json(report) + "\n");
  out << text;
  return kExitOk;
}

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const CaseStore store(read_cases_jsonl(a.cases));
  const auto baseline = read_predictions_jsonl(a.baseline);
  const auto ours = read_predictions_jsonl(a.ours);
  const auto report = recovery_between(baseline, ours, store.truth());
  const fs::path dest = a.out.empty() ? fs::absolute(a.ours).parent_path() / "recovery.json" : fs::path(a.out);
  write_text_file(dest, recovery_report_json(report) + "\n");
  out << recovery_report_text(report);
  return kExitOk;
}

int cmd_dump_prompt(const DumpPromptArgs& a, std::ostream& out) {
  const CaseStore store(read_cases_jsonl(a.cases));
  const auto index = load_index(a.index);
  const CaseRecord& query = store.at(a.id);
  const auto vec = a.k == 0 ? MultimodalVector{} : lookup_query_vector(index, a.queries, a.id);
  const auto neighbors = retrieve_neighbors(index, a.id, vec, a.k);
  std::vector<CaseRecord> examples;
  for (const auto& n : neighbors) examples.push_back(store.at(n.id));
  const auto prompt = build_prompt(query, examples, mode_from(a.mode), examples.size(), prompt_options(a.instruction_file));
  out << prompt.text << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrieval-augmented case-based lesion classification"};
  app.name("melrag");
  app.require_subcommand(1);

  const std::vector<std::string> modes{"sentence", "attribute_value", "html"};

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Two-stage stratified train/val/test split");
  split->add_option("--cases", split_args.cases, "cases.jsonl")->required()->check(CLI::ExistingFile);
  split->add_option("--seed", split_args.seed, "Shuffle seed")->capture_default_str();
  split->add_option("--train-frac", split_args.train_frac, "Share of all cases kept for training")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  split->add_option("--val-frac", split_args.val_frac, "Share of the training pool used for validation")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  split->add_option("--out", split_args.out, "Output split.json")->required();

  IndexArgs index_args;
  auto* index = app.add_subcommand("index", "Build a flat dot-product index from an embedding bundle");
  index->add_option("--bundle", index_args.bundle, "Embedding bundle (.mmeb)")->required()->check(CLI::ExistingFile);
  index->add_flag("--normalize", index_args.normalize, "L2-normalize stored vectors (cosine similarity)");
  index->add_option("--out", index_args.out, "Output index (.mmix)")->required();

  RetrieveArgs retrieve_args;
  auto* retrieve = app.add_subcommand("retrieve", "Top-k neighbors of one case (the case itself excluded)");
  retrieve->add_option("--index", retrieve_args.index, "Index file")->required()->check(CLI::ExistingFile);
  retrieve->add_option("--id", retrieve_args.id, "Query case id")->required();
  retrieve->add_option("--queries", retrieve_args.queries, "Bundle holding the query embedding (default: the index)")
      ->check(CLI::ExistingFile);
  retrieve->add_option("-k", retrieve_args.k, "Neighbors to return")->capture_default_str();
  retrieve->add_flag("--json", retrieve_args.json, "Print JSON instead of a table");

  ClassifyArgs classify_args;
  auto* classify = app.add_subcommand("classify", "Retrieve, prompt and classify query cases");
  classify->add_option("--cases", classify_args.cases, "cases.jsonl covering queries and indexed cases")
      ->required()->check(CLI::ExistingFile);
  classify->add_option("--index", classify_args.index, "Index file")->required()->check(CLI::ExistingFile);
  classify->add_option("--queries", classify_args.queries, "Bundle with the query embeddings")
      ->required()->check(CLI::ExistingFile);
  classify->add_option("--split", classify_args.split, "split.json; classify one subset of it")
      ->check(CLI::ExistingFile);
  classify->add_option("--subset", classify_args.subset, "Subset of --split to classify")
      ->capture_default_str()->check(CLI::IsMember({"train", "val", "test"}));
  classify->add_option("-k", classify_args.ks, "Retrieved examples per prompt (repeatable; default 2)")
      ->allow_extra_args(false);
  classify->add_option("--k-sweep", classify_args.k_sweep, "Comma-separated K values, e.g. 1,2,3,4")->delimiter(',');
  classify->add_option("--mode", classify_args.mode, "Metadata serialization")
      ->capture_default_str()->check(CLI::IsMember(modes));
  classify->add_option("--backend", classify_args.backend, "mock or http")
      ->capture_default_str()->check(CLI::IsMember({"mock", "http"}));
  classify->add_option("--endpoint", classify_args.endpoint, "Backend URL")->envname("MELRAG_ENDPOINT");
  classify->add_option("--timeout", classify_args.timeout_s, "Per-call timeout in seconds")
      ->envname("MELRAG_TIMEOUT_S")->capture_default_str()->check(CLI::PositiveNumber);
  classify->add_option("--retries", classify_args.retries, "Retries per case")->capture_default_str();
  classify->add_option("--backoff-ms", classify_args.backoff_ms, "First retry delay, doubled each retry")
      ->capture_default_str();
  classify->add_option("--max-in-flight", classify_args.max_in_flight, "Concurrent backend calls")
      ->capture_default_str()->check(CLI::PositiveNumber);
  classify->add_option("--adapter", classify_args.adapter, "Wire format: neutral or openai")
      ->capture_default_str()->check(CLI::IsMember({"neutral", "openai"}));
  classify->add_option("--model", classify_args.model, "Model name passed to the endpoint");
  classify->add_option("--temperature", classify_args.temperature, "Sampling temperature passed through");
  classify->add_option("--max-tokens", classify_args.max_tokens, "Token limit passed through");
  classify->add_option("--image-root", classify_args.image_root, "Directory image_ref paths are relative to");
  classify->add_option("--instruction-file", classify_args.instruction_file, "Replace the instruction line")
      ->check(CLI::ExistingFile);
  classify->add_option("--dump-prompts", classify_args.dump_prompts, "Write each prompt to DIR/k<K>/<id>.txt");
  classify->add_flag("--trace", classify_args.trace, "Log request/response bodies (images elided) to stderr");
  classify->add_option("--out", classify_args.out, "preds.jsonl (with several K: preds.k<K>.jsonl)")->required();

  EvaluateArgs evaluate_args;
  auto* evaluate = app.add_subcommand("evaluate", "Confusion matrix and metrics for a prediction file");
  evaluate->add_option("--preds", evaluate_args.preds, "preds.jsonl")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--cases", evaluate_args.cases, "cases.jsonl with ground truth")
      ->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out-dir", evaluate_args.out_dir, "Where report.json/report.txt go (default: next to --preds)");

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "Recovery of baseline FP/FN errors by a second prediction set");
  compare->add_option("--baseline", compare_args.baseline, "Baseline preds.jsonl")->required()->check(CLI::ExistingFile);
  compare->add_option("--ours", compare_args.ours, "Second preds.jsonl")->required()->check(CLI::ExistingFile);
  compare->add_option("--cases", compare_args.cases, "cases.jsonl with ground truth")
      ->required()->check(CLI::ExistingFile);
  compare->add_option("--out", compare_args.out, "recovery.json (default: next to --ours)");

  DumpPromptArgs dump_args;
  auto* dump = app.add_subcommand("dump-prompt", "Print the prompt that classify would send for one case");
  dump->add_option("--cases", dump_args.cases, "cases.jsonl")->required()->check(CLI::ExistingFile);
  dump->add_option("--index", dump_args.index, "Index file")->required()->check(CLI::ExistingFile);
  dump->add_option("--id", dump_args.id, "Query case id")->required();
  dump->add_option("--queries", dump_args.queries, "Bundle holding the query embedding (default: the index)")
      ->check(CLI::ExistingFile);
  dump->add_option("-k", dump_args.k, "Retrieved examples")->capture_default_str();
  dump->add_option("--mode", dump_args.mode, "Metadata serialization")
      ->capture_default_str()->check(CLI::IsMember(modes));
  dump->add_option("--instruction-file", dump_args.instruction_file, "Replace the instruction line")
      ->check(CLI::ExistingFile);

  std::vector<const char*> argv{"melrag"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInvalid;
  }

  try {
    if (*split) return cmd_split(split_args, out);
    if (*index) return cmd_index(index_args, out, err);
    if (*retrieve) return cmd_retrieve(retrieve_args, out);
    if (*classify) return cmd_classify(classify_args, out, err);
    if (*evaluate) return cmd_evaluate(evaluate_args, out);
    if (*compare) return cmd_compare(compare_args, out);
    if (*dump) return cmd_dump_prompt(dump_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::BackendUnavailable || e.code() == ErrorCode::Timeout ? kExitBackendFailure
                                                                                       : kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace melrag
