// ppa: privacy policy analysis command line.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "ppa/backend.hpp"
#include "ppa/config.hpp"
#include "ppa/corpus.hpp"
#include "ppa/eval.hpp"
#include "ppa/extraction.hpp"
#include "ppa/graph.hpp"
#include "ppa/policyconv.hpp"
#include "ppa/taxonomy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool replay = false;
  bool record = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file");
  auto opt = [&](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<std::string>(
        flag, [&f, key](const std::string& v) { f.values[key] = v; }, help);
  };
  opt("--model", "model", "Model name");
  opt("--cache", "cache", "Record/replay cache file (JSON Lines)");
  opt("--taxonomy", "taxonomy", "Taxonomy file (Turtle, N-Triples or TSV)");
  opt("--threshold", "threshold", "Relaxed-match threshold in (0, 1]");
  opt("--out", "out", "Output directory");
  opt("--jobs", "jobs", "Worker threads");
  opt("--seed", "seed", "Random seed");
  opt("--profile", "profile", "Conversion profile (JSON)");
  opt("--gold-schema", "gold_schema", "brat label mapping (JSON)");
  opt("--mode", "cache_mode", "live, record or replay");
  auto* rp = cmd->add_flag("--replay", f.replay, "Answer only from the cache");
  auto* rc = cmd->add_flag("--record", f.record, "Call the model and append responses to the cache");
  rp->excludes(rc);
}

ppa::config::RunConfig resolve(CommonFlags& f) {
  if (f.replay) f.values["cache_mode"] = "replay";
  if (f.record) f.values["cache_mode"] = "record";
  std::optional<json> file;
  if (!f.config_file.empty()) file = ppa::config::load_file(f.config_file);
  auto cfg = ppa::config::resolve(file ? &*file : nullptr, ppa::config::process_env(), f.values);
  std::cerr << "effective configuration: " << cfg.to_json().dump() << "\n";
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void log_line(const fs::path& log, const json& record) {
  std::ofstream out(log, std::ios::binary | std::ios::app);
  out << record.dump() << '\n';
}

std::string safe_name(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) c = '_';
  return s;
}

int cmd_analyze(const std::vector<std::string>& files, const std::string& service_id, const std::string& format,
                bool include_flagged, CommonFlags& flags) {
  auto cfg = resolve(flags);
  if (!service_id.empty() && files.size() != 1) throw CLI::ValidationError("--service-id needs exactly one input file");
  const auto taxonomy = ppa::taxonomy::load_taxonomy(cfg.taxonomy_path);
  for (const auto& w : taxonomy.warnings()) std::cerr << "taxonomy: " << w << "\n";
  auto backend = ppa::backend::make_backend(cfg.backend);

  fs::create_directories(cfg.out_dir);
  const fs::path audit = cfg.out_dir / "audit.jsonl";
  const fs::path run_log = cfg.out_dir / "run.jsonl";
  fs::remove(audit);
  fs::remove(run_log);

  ppa::extraction::ExtractOptions xopts;
  xopts.jobs = cfg.jobs;
  ppa::graph::BuildOptions bopts;
  bopts.include_non_verbatim = include_flagged;

  ppa::rdf::Graph corpus_graph;
  int failures = 0;
  for (const auto& file : files) {
    const std::string sid = service_id.empty() ? fs::path(file).stem().string() : service_id;
    try {
      const auto doc = ppa::corpus::load_policy(file, sid);
      const auto result = ppa::extraction::extract_document_nothrow(doc, *backend, taxonomy, xopts);
      ppa::extraction::write_audit_log(result, audit);
      const auto built = ppa::graph::build_graph(result, sid, doc.source_uri, taxonomy.version(), bopts);
      for (const auto& p : ppa::graph::check_invariants(built.graph.triples, &taxonomy))
        std::cerr << sid << ": invariant violated: " << p << "\n";
      const std::string base = safe_name(sid);
      if (format == "turtle" || format == "both")
        write_file(cfg.out_dir / (base + ".ttl"), ppa::graph::serialize(built.graph.triples, ppa::rdf::Format::Turtle));
      if (format == "ntriples" || format == "both")
        write_file(cfg.out_dir / (base + ".nt"), ppa::graph::serialize(built.graph.triples, ppa::rdf::Format::NTriples));
      write_file(cfg.out_dir / (base + ".extraction.json"), result.canonical() + "\n");
      write_file(cfg.out_dir / (base + ".buildlog.json"), built.log.to_json().dump(2) + "\n");
      corpus_graph.merge(built.graph.triples);
      log_line(run_log, json{{"event", "document"},
                             {"service_id", sid},
                             {"file", file},
                             {"segments", doc.segments.size()},
                             {"practices", built.log.practices},
                             {"failed", result.failed}});
      if (result.failed) {
        ++failures;
        std::cerr << sid << ": every segment failed\n";
      }
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << file << ": " << e.what() << "\n";
      log_line(run_log, json{{"event", "error"}, {"file", file}, {"error", e.what()}});
    }
  }
  write_file(cfg.out_dir / "corpus.ttl", ppa::graph::serialize(corpus_graph, ppa::rdf::Format::Turtle));
  std::cerr << "analyzed " << files.size() - static_cast<std::size_t>(failures) << "/" << files.size()
            << " documents into " << cfg.out_dir << "\n";
  return failures == 0 ? 0 : 1;
}

ppa::eval::GoldSchema load_schema(const ppa::config::RunConfig& cfg) {
  if (cfg.gold_schema_path.empty()) return ppa::eval::GoldSchema::defaults();
  return ppa::eval::GoldSchema::from_json(ppa::config::load_file(cfg.gold_schema_path));
}

std::vector<ppa::corpus::GoldDocument> load_gold(const std::string& dir) {
  std::vector<std::string> warnings;
  auto corpus = ppa::corpus::load_gold_corpus(dir, &warnings);
  for (const auto& w : warnings) std::cerr << "gold: " << w << "\n";
  if (corpus.empty()) throw CLI::ValidationError("gold directory " + dir + " holds no .txt/.ann pairs");
  return corpus;
}

std::vector<ppa::TaskKind> parse_tasks(const std::vector<std::string>& names) {
  if (names.empty()) return {ppa::kAllTasks.begin(), ppa::kAllTasks.end()};
  std::vector<ppa::TaskKind> out;
  for (const auto& n : names) {
    auto t = ppa::parse_task(n);
    if (!t) throw CLI::ValidationError("unknown task '" + n + "'");
    out.push_back(*t);
  }
  return out;
}

int cmd_evaluate(const std::string& gold_dir, const std::vector<std::string>& task_names,
                 const std::vector<std::string>& models, CommonFlags& flags) {
  auto cfg = resolve(flags);
  const auto corpus = load_gold(gold_dir);
  const auto taxonomy = ppa::taxonomy::load_taxonomy(cfg.taxonomy_path);
  const auto tasks = parse_tasks(task_names);
  ppa::eval::BenchmarkOptions bopts;
  bopts.match = cfg.match;
  bopts.aggregation = cfg.aggregation;
  bopts.schema = load_schema(cfg);

  std::vector<std::string> model_list = models.empty() ? std::vector<std::string>{cfg.backend.model_name} : models;
  std::vector<ppa::eval::ScoreReport> reports;
  std::size_t failures = 0;
  for (const auto& m : model_list) {
    auto bc = cfg.backend;
    bc.model_name = m;
    auto backend = ppa::backend::make_backend(bc);
    reports.push_back(ppa::eval::run_benchmark(corpus, *backend, tasks, taxonomy, bopts));
    for (const auto& t : reports.back().tasks) failures += t.failures;
  }
  const std::string table = ppa::eval::benchmark_table(reports);
  json j = json::array();
  for (const auto& r : reports) j.push_back(r.to_json());
  write_file(cfg.out_dir / "report.tsv", table);
  write_file(cfg.out_dir / "report.json", j.dump(2) + "\n");
  std::cout << table;
  if (failures) std::cerr << failures << " queries failed and were scored as empty predictions\n";
  return 0;
}

int cmd_convert(const std::vector<std::string>& files, CommonFlags& flags) {
  auto cfg = resolve(flags);
  const auto profile = cfg.profile_path.empty() ? ppa::policyconv::ConversionProfile::defaults()
                                                : ppa::policyconv::ConversionProfile::load(cfg.profile_path);
  const auto prefixes = ppa::policyconv::output_prefixes(profile);
  int failures = 0;
  for (const auto& file : files) {
    try {
      const auto g = ppa::graph::load_graph_file(file);
      const auto odrl = ppa::policyconv::to_odrl(g, profile);
      const auto psd = ppa::policyconv::to_psdtou(g, profile);
      const std::string base = fs::path(file).stem().string();
      write_file(cfg.out_dir / (base + ".odrl.ttl"), ppa::rdf::write_turtle(odrl.graph, prefixes));
      write_file(cfg.out_dir / (base + ".psdtou.ttl"), ppa::rdf::write_turtle(psd.graph, prefixes));
      write_file(cfg.out_dir / (base + ".conversion.json"),
                 json{{"odrl", odrl.report.to_json()}, {"psdtou", psd.report.to_json()}}.dump(2) + "\n");
      std::cerr << base << ": " << odrl.report.rules << " permissions, " << odrl.report.skipped.size()
                << " skipped, " << odrl.report.unmapped.size() << " unmapped\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << file << ": " << e.what() << "\n";
    }
  }
  return failures == 0 ? 0 : 1;
}

int cmd_stats(const std::vector<std::string>& files, std::size_t top, const std::string& vocab_file, CommonFlags& flags) {
  auto cfg = resolve(flags);
  std::vector<ppa::rdf::Graph> graphs;
  for (const auto& f : files) graphs.push_back(ppa::graph::load_graph_file(f));
  ppa::graph::StatsVocabulary vocab;
  if (!vocab_file.empty()) vocab = ppa::graph::StatsVocabulary::from_json(ppa::config::load_file(vocab_file));
  const auto s = ppa::graph::stats(graphs, top, vocab);
  write_file(cfg.out_dir / "stats.tsv", s.to_tsv());
  write_file(cfg.out_dir / "stats.json", s.to_json().dump(2) + "\n");
  std::cout << s.to_tsv();
  return 0;
}

int cmd_export(const std::string& gold_dir, const std::string& task_name, const std::string& spec_str,
               CommonFlags& flags) {
  auto cfg = resolve(flags);
  const auto corpus = load_gold(gold_dir);
  auto task = ppa::parse_task(task_name);
  if (!task) throw CLI::ValidationError("unknown task '" + task_name + "'");
  const auto spec = ppa::eval::FinetuneSpec::parse(spec_str, cfg.seed);
  std::optional<ppa::taxonomy::Taxonomy> taxonomy;
  if (*task == ppa::TaskKind::DataClassification || *task == ppa::TaskKind::PurposeClassification)
    taxonomy = ppa::taxonomy::load_taxonomy(cfg.taxonomy_path);
  ppa::eval::FinetuneOptions fopts;
  fopts.schema = load_schema(cfg);
  const auto e = ppa::eval::select_finetune_data(corpus, *task, spec, taxonomy ? &*taxonomy : nullptr, fopts);
  ppa::eval::write_finetune(e, cfg.out_dir);
  std::cerr << "wrote " << e.train.size() << " training and " << e.validation.size() << " validation records to "
            << cfg.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy policy analysis: extraction, knowledge graph, conversion and evaluation"};
  app.require_subcommand(1);

  CommonFlags af, ef, cf, sf, xf;

  auto* analyze = app.add_subcommand("analyze", "Extract practices from policy files and build graphs");
  std::vector<std::string> policy_files;
  std::string service_id, format = "turtle";
  bool include_flagged = false;
  analyze->add_option("files", policy_files, "Policy text files")->required()->check(CLI::ExistingFile);
  analyze->add_option("--service-id", service_id, "Service identifier (single input only; default: file stem)");
  analyze->add_option("--format", format, "turtle, ntriples or both")
      ->check(CLI::IsMember({"turtle", "ntriples", "both"}));
  analyze->add_flag("--include-flagged", include_flagged, "Keep spans not found verbatim in their segment");
  add_common(analyze, af);

  auto* evaluate = app.add_subcommand("evaluate", "Score pipeline steps against a brat gold corpus");
  std::string gold_dir;
  std::vector<std::string> tasks, models;
  evaluate->add_option("gold", gold_dir, "Directory of brat .txt/.ann pairs")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--task", tasks, "Tasks to run (default: all)");
  evaluate->add_option("--models", models, "One report row per model (overrides --model)");
  add_common(evaluate, ef);

  auto* convert = app.add_subcommand("convert", "Convert graphs to ODRL and psDToU documents");
  std::vector<std::string> graph_files;
  convert->add_option("graphs", graph_files, "Graph files (.ttl or .nt)")->required()->check(CLI::ExistingFile);
  add_common(convert, cf);

  auto* stats = app.add_subcommand("stats", "Corpus statistics over graph files");
  std::vector<std::string> stat_files;
  std::size_t top = 10;
  std::string vocab;
  stats->add_option("graphs", stat_files, "Graph files (.ttl or .nt)")->required()->check(CLI::ExistingFile);
  stats->add_option("--top", top, "Rows in the top-k tables");
  stats->add_option("--vocab", vocab, "JSON file naming practice classes and data/purpose predicates");
  add_common(stats, sf);

  auto* exportft = app.add_subcommand("export-finetune", "Export a stratified fine-tuning dataset");
  std::string ft_gold, ft_task, ft_spec;
  exportft->add_option("gold", ft_gold, "Directory of brat .txt/.ann pairs")->required()->check(CLI::ExistingDirectory);
  exportft->add_option("--task", ft_task, "Pipeline task")->required();
  exportft->add_option("--spec", ft_spec, "Sample counts as train_nonempty-train_empty-val_nonempty-val_empty")
      ->required();
  add_common(exportft, xf);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*analyze) return cmd_analyze(policy_files, service_id, format, include_flagged, af);
    if (*evaluate) return cmd_evaluate(gold_dir, tasks, models, ef);
    if (*convert) return cmd_convert(graph_files, cf);
    if (*stats) return cmd_stats(stat_files, top, vocab, sf);
    if (*exportft) return cmd_export(ft_gold, ft_task, ft_spec, xf);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ppa::config::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const ppa::backend::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
