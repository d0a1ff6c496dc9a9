#include "snr/cli.h"

#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "snr/align.h"
#include "snr/config.h"
#include "snr/corpus.h"
#include "snr/embed.h"
#include "snr/error.h"
#include "snr/eval.h"
#include "snr/preorder.h"
#include "snr/reorder.h"
#include "snr/select.h"
#include "snr/wordclass.h"

namespace snr {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config_path;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

template <typename F>
auto parallel_map(std::size_t n, int jobs, F&& f) {
  using T = decltype(f(std::size_t{0}));
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, jobs > 0 ? jobs : 1));
  auto run = [&](std::size_t w) {
    for (std::size_t i = w; i < n; i += workers) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  // Report the failure of the earliest example, whatever thread hit it.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

fs::path artifact(const PipelineConfig& c, const std::string& stem, Split split) {
  return c.work_dir / (stem + "_" + std::string(split_name(split)) + ".jsonl");
}

Corpus load_work_corpus(const PipelineConfig& c, Split split) {
  return load_corpus(artifact(c, "corpus", split), CorpusFormat::kJsonl, split);
}

std::vector<std::string> all_splits(const PipelineConfig& c) {
  std::vector<std::string> out;
  for (const auto& [s, _] : c.corpus) out.emplace_back(split_name(s));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

AlignmentIndex index_alignments(const std::vector<AlignmentRecord>& records) {
  AlignmentIndex index;
  for (const auto& r : records) index.emplace(r.id, r.alignment);
  return index;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

int cmd_ingest(const PipelineConfig& c, const std::vector<std::string>& splits, std::ostream& out) {
  fs::create_directories(c.work_dir);
  std::unique_ptr<Lemmatizer> lemmatizer = std::make_unique<Lemmatizer>();
  if (!c.lemma_table.empty())
    lemmatizer = std::make_unique<TableLemmatizer>(TableLemmatizer::load(c.lemma_table));
  for (const auto& name : splits) {
    const Split split = parse_split(name);
    auto it = c.corpus.find(split);
    if (it == c.corpus.end()) throw DataError("config lists no corpus for split '" + name + "'");
    Corpus raw = load_corpus(it->second, c.corpus_format, split);
    std::vector<ParallelExample> examples = raw.examples();
    if (c.normalize_gloss)
      for (auto& ex : examples) ex.gloss = normalize_gloss(ex.gloss);
    Corpus corpus(split, std::move(examples));
    std::size_t dropped = 0;
    if (c.filter_many_to_one && split == Split::kTrain) {
      auto [kept, removed] = filter_many_to_one(corpus);
      dropped = removed.size();
      corpus = std::move(kept);
    }
    save_corpus(corpus, artifact(c, "corpus", split));
    std::ostringstream overlap;
    overlap.precision(4);
    overlap << (corpus.empty() ? 0.0 : lexical_overlap(corpus, *lemmatizer));
    out << name << ": " << corpus.size() << " examples ingested, " << dropped
        << " dropped, lexical overlap " << overlap.str() << "\n";
  }
  return kExitOk;
}

int cmd_align(const PipelineConfig& c, Split split, int jobs, std::ostream& out) {
  const Corpus corpus = load_work_corpus(c, split);
  if (c.static_vectors.empty()) throw DataError("config has no static_vectors path");
  auto ctx_path = c.contextual.find(split);
  if (ctx_path == c.contextual.end())
    throw DataError("config has no contextual store for split '" +
                    std::string(split_name(split)) + "'");
  const auto table = load_static_table(c.static_vectors);
  const auto store = load_contextual_store(ctx_path->second);
  AlignmentParams params;
  params.threshold = c.threshold;
  params.scale = c.alpha;
  const auto method = c.optimal_extraction ? ExtractionMethod::kOptimal : ExtractionMethod::kGreedy;
  const auto& examples = corpus.examples();
  auto records = parallel_map(examples.size(), jobs, [&](std::size_t i) {
    const auto soft = build_soft_alignment(examples[i], table.table, store, params);
    return make_alignment_record(examples[i], extract_one_to_one(soft, method));
  });
  save_alignment_dump(records, artifact(c, "alignments", split));
  out << records.size() << " examples aligned\n";
  return kExitOk;
}

int cmd_train_select(const PipelineConfig& c, std::ostream& out) {
  const Corpus corpus = load_work_corpus(c, Split::kTrain);
  const auto records = load_alignment_dump(artifact(c, "alignments", Split::kTrain));
  const auto model = train_lexical_model(corpus, index_alignments(records), c.smoothing_k);
  model.save(c.work_dir / "select_model.json");
  out << "selection model: " << model.table().size() << " words from " << corpus.size()
      << " examples\n";
  return kExitOk;
}

int cmd_train_classes(const PipelineConfig& c, std::ostream& out) {
  const Corpus corpus = load_work_corpus(c, Split::kTrain);
  BrownOptions opts;
  opts.num_classes = c.brown_k;
  opts.min_count = c.brown_min_count;
  const auto clustering = train_brown(corpus, opts);
  clustering.save(c.work_dir / "classes.json");
  out << clustering.assignment.size() << " words in " << clustering.K << " classes\n";
  return kExitOk;
}

int cmd_train_preorder(const PipelineConfig& c, std::ostream& out) {
  const Corpus corpus = load_work_corpus(c, Split::kTrain);
  const auto records = load_alignment_dump(artifact(c, "alignments", Split::kTrain));
  const auto classes = BrownClustering::load(c.work_dir / "classes.json");
  std::unordered_map<std::string, const AlignmentRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);
  std::vector<Sentence> sentences;
  std::vector<std::vector<std::size_t>> targets;
  for (const auto& ex : corpus.examples()) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) throw TrainingError("no alignment for example '" + ex.id + "'");
    sentences.push_back(annotate_classes(ex.text, classes));
    targets.push_back(it->second->sio.perm);
  }
  PreorderTrainOptions opts;
  opts.iterations = c.preorder_iterations;
  opts.beam = c.preorder_beam;
  opts.seed = c.seed;
  PreorderTrainStats stats;
  const auto model = train_preorder(sentences, targets, opts, &stats);
  model.save(c.work_dir / "preorder_model.json");
  std::ostringstream tau;
  tau.precision(4);
  tau << (stats.epoch_mean_tau.empty() ? 0.0 : stats.epoch_mean_tau.back());
  out << "preorder model: " << model.weights().size() << " features, " << stats.updates
      << " updates, last-epoch tau " << tau.str() << "\n";
  return kExitOk;
}

enum class ReorderKind { kStatistical, kLearned, kNone };

int cmd_translate(const PipelineConfig& c, Split split, ReorderKind reorder, bool aligned_spo,
                  bool print, int jobs, std::ostream& out) {
  const Corpus corpus = load_work_corpus(c, split);
  std::optional<LexicalChoiceModel> select;
  std::unordered_map<std::string, SpoGloss> aligned;
  if (aligned_spo) {
    for (auto& r : load_alignment_dump(artifact(c, "alignments", split)))
      aligned.emplace(r.id, std::move(r.spo));
  } else {
    select = LexicalChoiceModel::load(c.work_dir / "select_model.json");
  }
  std::optional<BrownClustering> classes;
  std::optional<PreorderModel> preorder;
  std::optional<ClassBigramScorer> transitions;
  if (reorder == ReorderKind::kStatistical) {
    classes = BrownClustering::load(c.work_dir / "classes.json");
    preorder = PreorderModel::load(c.work_dir / "preorder_model.json");
  } else if (reorder == ReorderKind::kLearned) {
    classes = BrownClustering::load(c.work_dir / "classes.json");
    std::vector<SignOrderText> sio;
    for (auto& r : load_alignment_dump(artifact(c, "alignments", Split::kTrain)))
      sio.push_back(std::move(r.sio));
    transitions = train_transition_model(sio, *classes, c.transition_k);
  }

  const auto& examples = corpus.examples();
  auto records = parallel_map(examples.size(), jobs, [&](std::size_t i) {
    const auto& ex = examples[i];
    SpoGloss spo;
    if (aligned_spo) {
      auto it = aligned.find(ex.id);
      if (it == aligned.end()) throw LookupError("no alignment for example '" + ex.id + "'");
      spo = it->second;
    } else {
      spo = gs_decode(*select, ex.text);
    }
    Mapping m;
    switch (reorder) {
      case ReorderKind::kStatistical:
        m = Mapping(apply_preorder(*preorder, annotate_classes(ex.text, *classes)).perm);
        break;
      case ReorderKind::kLearned: {
        const auto words = ex.text.words();
        m = extract_mapping(words, constrained_decode(*transitions, words));
        break;
      }
      case ReorderKind::kNone:
        m = Mapping::identity(ex.text.size());
        break;
    }
    return TranslationRecord{ex.id, spo.tokens, m.perm(), compose_translation(spo, m)};
  });

  std::ostringstream dump;
  for (const auto& r : records) dump << translation_record_to_json(r) << '\n';
  write_text(artifact(c, "translations", split), dump.str());
  if (print)
    for (const auto& r : records) out << r.id << '\t' << join(r.gloss) << '\n';
  out << records.size() << " examples translated\n";
  return kExitOk;
}

int cmd_evaluate(const PipelineConfig& c, Split split, std::ostream& out) {
  const Corpus corpus = load_work_corpus(c, split);
  std::ifstream in(artifact(c, "translations", split), std::ios::binary);
  if (!in) throw DataError("cannot open " + artifact(c, "translations", split).string());
  std::stringstream buf;
  buf << in.rdbuf();
  const auto records = parse_translation_dump(buf.str());
  std::vector<TokenSeq> hyps, refs;
  for (const auto& r : records) {
    const auto* ex = corpus.find(r.id);
    if (!ex) throw LookupError("translation for unknown example '" + r.id + "'");
    hyps.push_back(r.gloss);
    refs.push_back(ex->gloss.words());
  }
  const auto report = evaluate(hyps, refs);
  write_text(c.work_dir / ("report_" + std::string(split_name(split)) + ".json"),
             report.to_json() + "\n");
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(2);
  line << "BLEU-1 " << report.bleu1 << " BLEU-4 " << report.bleu4 << " ROUGE " << report.rouge
       << " over " << report.n_examples << " examples";
  out << line.str() << "\n";
  return kExitOk;
}

int cmd_bench(const PipelineConfig& c, Split split, int repeats, double baseline_ms,
              std::ostream& out) {
  const Corpus corpus = load_work_corpus(c, split);
  const auto select = LexicalChoiceModel::load(c.work_dir / "select_model.json");
  const auto classes = BrownClustering::load(c.work_dir / "classes.json");
  const auto preorder = PreorderModel::load(c.work_dir / "preorder_model.json");
  std::size_t sink = 0;
  std::map<std::string, Stage> stages;
  stages["gs"] = [&](const Corpus& cs) {
    for (const auto& ex : cs.examples()) sink += gs_decode(select, ex.text).tokens.size();
  };
  stages["preorder"] = [&](const Corpus& cs) {
    for (const auto& ex : cs.examples())
      sink += apply_preorder(preorder, annotate_classes(ex.text, classes)).perm.size();
  };
  stages["snr"] = [&](const Corpus& cs) {
    for (const auto& ex : cs.examples()) {
      const auto spo = gs_decode(select, ex.text);
      const Mapping m(apply_preorder(preorder, annotate_classes(ex.text, classes)).perm);
      sink += compose_translation(spo, m).size();
    }
  };
  const auto report = bench_latency(stages, corpus, repeats, baseline_ms, "snr");
  write_text(c.work_dir / "latency.json", report.to_json() + "\n");
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(2);
  for (const auto& [name, s] : report.stages)
    line << name << " " << s.ms << "ms (" << s.speedup << "x) ";
  out << line.str() << "over " << corpus.size() << " examples\n";
  static_cast<void>(sink);
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Select-and-reorder text to gloss translation"};
  app.name(argv.empty() ? "snr" : argv.front());
  app.set_version_flag("--version", std::string("snr ") + kVersion);
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config_path, "pipeline configuration (JSON)");
  app.add_option("--jobs", g.jobs, "worker threads for per-sentence stages")
      ->check(CLI::PositiveNumber);
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "overrides the configured seed");

  std::string split_arg = "train";
  std::vector<std::string> ingest_splits;
  auto* ingest = app.add_subcommand("ingest", "normalize corpora into the work directory");
  ingest->add_option("--split", ingest_splits, "splits to ingest (default: all configured)");

  auto* align = app.add_subcommand("align", "extract one-to-one alignments");
  align->add_option("--split", split_arg)->check(CLI::IsMember({"train", "dev", "test"}));

  auto* train_select = app.add_subcommand("train-select", "train the gloss selection model");
  auto* train_classes = app.add_subcommand("train-classes", "cluster train words");
  auto* train_pre = app.add_subcommand("train-preorder", "train the BTG preordering model");

  std::string translate_split = "test";
  std::string reorder_arg = "statistical";
  std::string spo_arg = "gs";
  bool print = false;
  auto* translate = app.add_subcommand("translate", "select glosses and reorder them");
  translate->add_option("--split", translate_split)
      ->check(CLI::IsMember({"train", "dev", "test"}));
  translate->add_option("--reorder", reorder_arg)
      ->check(CLI::IsMember({"statistical", "learned", "none"}));
  translate->add_option("--spo", spo_arg, "gloss source: model selection or the alignments")
      ->check(CLI::IsMember({"gs", "aligned"}));
  translate->add_flag("--print", print, "print id and gloss per example");

  std::string eval_split = "test";
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score translations against references");
  evaluate_cmd->add_option("--split", eval_split)->check(CLI::IsMember({"train", "dev", "test"}));

  std::string bench_split = "dev";
  int repeats = 5;
  double baseline_ms = 0.0;
  auto* bench = app.add_subcommand("bench", "per-stage latency");
  bench->add_option("--split", bench_split)->check(CLI::IsMember({"train", "dev", "test"}));
  bench->add_option("--repeats", repeats)->check(CLI::Range(3, 1000000));
  bench->add_option("--baseline-ms", baseline_ms, "baseline latency; default: the snr stage")
      ->check(CLI::NonNegativeNumber);

  try {
    std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  if (g.config_path.empty()) {
    err << "--config is required\n" << app.help();
    return kExitUsage;
  }

  try {
    PipelineConfig config = load_config(g.config_path);
    if (seed_opt->count()) config.seed = seed;
    if (ingest->parsed()) {
      auto splits = ingest_splits.empty() ? all_splits(config) : ingest_splits;
      return cmd_ingest(config, splits, out);
    }
    if (align->parsed()) return cmd_align(config, parse_split(split_arg), g.jobs, out);
    if (train_select->parsed()) return cmd_train_select(config, out);
    if (train_classes->parsed()) return cmd_train_classes(config, out);
    if (train_pre->parsed()) return cmd_train_preorder(config, out);
    if (translate->parsed()) {
      const ReorderKind kind = reorder_arg == "statistical" ? ReorderKind::kStatistical
                               : reorder_arg == "learned"   ? ReorderKind::kLearned
                                                            : ReorderKind::kNone;
      return cmd_translate(config, parse_split(translate_split), kind, spo_arg == "aligned", print,
                           g.jobs, out);
    }
    if (evaluate_cmd->parsed()) return cmd_evaluate(config, parse_split(eval_split), out);
    if (bench->parsed()) return cmd_bench(config, parse_split(bench_split), repeats, baseline_ms, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
  err << app.help();
  return kExitUsage;
}

int run_command(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace snr
