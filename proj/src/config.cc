#include "snr/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "snr/error.h"

namespace snr {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("config: alpha must lie in (0, 1]");
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw DomainError("config: threshold must lie in (0, 1]");
  if (brown_k < 2) throw DomainError("config: brown_k must be at least 2");
  if (brown_min_count < 1) throw DomainError("config: brown_min_count must be at least 1");
  if (preorder_iterations < 0) throw DomainError("config: preorder_iterations must be >= 0");
  if (preorder_beam < 1) throw DomainError("config: preorder_beam must be >= 1");
  if (!(smoothing_k >= 0.0)) throw DomainError("config: smoothing_k must be >= 0");
  if (!(transition_k > 0.0)) throw DomainError("config: transition_k must be > 0");
}

namespace {

std::filesystem::path resolve(const json& v, const std::filesystem::path& base) {
  std::filesystem::path p = v.get<std::string>();
  return p.is_absolute() || p.empty() ? p : base / p;
}

std::map<Split, std::filesystem::path> split_paths(const json& v,
                                                   const std::filesystem::path& base) {
  std::map<Split, std::filesystem::path> out;
  if (v.is_string()) {
    for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) out[s] = resolve(v, base);
    return out;
  }
  for (const auto& [name, path] : v.items()) out[parse_split(name)] = resolve(path, base);
  return out;
}

}  // namespace

PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  static const std::set<std::string> known = {
      "work_dir",        "corpus",           "corpus_format",      "static_vectors",
      "contextual",      "lemma_table",      "alpha",              "threshold",
      "extraction",      "normalize_gloss",  "filter_many_to_one", "smoothing_k",
      "brown_k",         "brown_min_count",  "preorder_iterations", "preorder_beam",
      "transition_k",    "seed"};
  PipelineConfig c;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw SchemaError("config: unknown key '" + key + "'");
  try {
    if (j.contains("work_dir")) c.work_dir = resolve(j["work_dir"], base_dir);
    if (j.contains("corpus")) c.corpus = split_paths(j["corpus"], base_dir);
    if (j.contains("corpus_format")) {
      const auto f = j["corpus_format"].get<std::string>();
      if (f == "jsonl")
        c.corpus_format = CorpusFormat::kJsonl;
      else if (f == "tsv")
        c.corpus_format = CorpusFormat::kTsv;
      else
        throw SchemaError("config: corpus_format must be 'jsonl' or 'tsv'");
    }
    if (j.contains("static_vectors")) c.static_vectors = resolve(j["static_vectors"], base_dir);
    if (j.contains("contextual")) c.contextual = split_paths(j["contextual"], base_dir);
    if (j.contains("lemma_table")) c.lemma_table = resolve(j["lemma_table"], base_dir);
    if (j.contains("extraction")) {
      const auto e = j["extraction"].get<std::string>();
      if (e != "greedy" && e != "optimal")
        throw SchemaError("config: extraction must be 'greedy' or 'optimal'");
      c.optimal_extraction = e == "optimal";
    }
    c.alpha = j.value("alpha", c.alpha);
    c.threshold = j.value("threshold", c.threshold);
    c.normalize_gloss = j.value("normalize_gloss", c.normalize_gloss);
    c.filter_many_to_one = j.value("filter_many_to_one", c.filter_many_to_one);
    c.smoothing_k = j.value("smoothing_k", c.smoothing_k);
    c.brown_k = j.value("brown_k", c.brown_k);
    c.brown_min_count = j.value("brown_min_count", c.brown_min_count);
    c.preorder_iterations = j.value("preorder_iterations", c.preorder_iterations);
    c.preorder_beam = j.value("preorder_beam", c.preorder_beam);
    c.transition_k = j.value("transition_k", c.transition_k);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace snr
