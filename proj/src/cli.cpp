/* Copyright 2026 The latentstory Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "latentstory/cli.hpp"

#include "latentstory/checkpoint.hpp"
#include "latentstory/config.hpp"
#include "latentstory/corpus.hpp"
#include "latentstory/discourse.hpp"
#include "latentstory/errors.hpp"
#include "latentstory/inference.hpp"
#include "latentstory/metrics.hpp"
#include "latentstory/model_io.hpp"
#include "latentstory/random.hpp"
#include "latentstory/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace latentstory {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Scalar = float;

// Flag values; an option counts as set when its CLI::Option reports a count.
struct Flags {
  std::string config, out, data, checkpoint, prior_checkpoint, in, gen, ref, prompt, gen_parses, ref_parses;
  std::string prompt_mode = "title";
  std::uint64_t seed = 0;
  double p = 0.9, lambda1 = 0.1, lambda2 = 0.1, tau_max = 0.9, tau_min = 0.1, temperature = 1.0;
  int min_tokens = 100, max_tokens = 512, codes = 256, cnn_layers = 3, steps = 0, n_docs = 500, vocab_size = 120;
  std::map<std::string, std::vector<CLI::Option*>> opts;

  bool has(const std::string& name) const {
    const auto it = opts.find(name);
    if (it == opts.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(), [](const CLI::Option* o) { return o->count() > 0; });
  }
};

// Resolved configuration for one invocation.
struct Resolved {
  json file = json::object();
  ModelConfig model;
  TrainConfig train;
  SamplingConfig sampling;
  std::size_t vocab_max_size = 30000;
  std::size_t vocab_min_freq = 1;

  json to_json() const {
    return json{{"model", model},
                {"train", train},
                {"sampling", sampling},
                {"data", {{"vocab_max_size", vocab_max_size}, {"vocab_min_freq", vocab_min_freq}}}};
  }
};

template <typename T>
std::vector<std::string> keys_of() {
  const json defaults = T{};
  std::vector<std::string> out;
  for (const auto& [k, v] : defaults.items()) out.push_back(k);
  return out;
}

std::string join(const std::vector<std::string>& xs, const std::string& prefix) {
  std::string s;
  for (const auto& x : xs) s += (s.empty() ? "" : ", ") + prefix + x;
  return s;
}

template <typename T>
void merge_section(const json& file, const std::string& section, T& target) {
  if (!file.contains(section)) return;
  const json& j = file.at(section);
  if (!j.is_object()) throw ConfigError(section + ": config section must be an object");
  const json defaults = target;
  for (const auto& [k, v] : j.items()) {
    if (!defaults.contains(k)) throw ConfigError(section + "." + k + ": unknown config key");
  }
  json merged = defaults;
  merged.update(j);
  try {
    target = merged.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

Resolved resolve(const Flags& f) {
  Resolved r;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("config: cannot open '" + f.config + "'");
    try {
      r.file = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config: '" + f.config + "' is not valid JSON (" + e.what() + ")");
    }
    if (!r.file.is_object()) throw ConfigError("config: top level must be an object");
    for (const auto& [k, v] : r.file.items()) {
      if (k != "model" && k != "train" && k != "sampling" && k != "data") {
        throw ConfigError(k + ": unknown config section (expected model, train, sampling, data)");
      }
    }
  }
  merge_section(r.file, "model", r.model);
  merge_section(r.file, "train", r.train);
  merge_section(r.file, "sampling", r.sampling);
  if (r.file.contains("data")) {
    const json& d = r.file["data"];
    for (const auto& [k, v] : d.items()) {
      if (k != "vocab_max_size" && k != "vocab_min_freq") throw ConfigError("data." + k + ": unknown config key");
    }
    r.vocab_max_size = d.value("vocab_max_size", r.vocab_max_size);
    r.vocab_min_freq = d.value("vocab_min_freq", r.vocab_min_freq);
  }
  if (f.has("--seed")) {
    r.train.seed = f.seed;
    r.sampling.seed = f.seed;
    r.model.init_seed = f.seed;
  }
  if (f.has("--lambda1")) r.train.lambda1 = f.lambda1;
  if (f.has("--lambda2")) r.train.lambda2 = f.lambda2;
  if (f.has("--tau-max")) r.train.tau_max = f.tau_max;
  if (f.has("--tau-min")) r.train.tau_min = f.tau_min;
  if (f.has("--steps")) r.train.steps = f.steps;
  if (f.has("--codes")) r.model.codes = f.codes;
  if (f.has("--cnn-layers")) r.model.cnn_layers = f.cnn_layers;
  if (f.has("--p")) r.sampling.p = f.p;
  if (f.has("--min-tokens")) r.sampling.min_tokens = f.min_tokens;
  if (f.has("--max-tokens")) r.sampling.max_tokens = f.max_tokens;
  if (f.has("--temperature")) r.sampling.temperature = f.temperature;
  return r;
}

bool model_overridden(const Flags& f, const Resolved& r) {
  return r.file.contains("model") || f.has("--codes") || f.has("--cnn-layers");
}

void require_flag(const std::string& value, const std::string& name) {
  if (value.empty()) throw ConfigError(name + ": required for this subcommand");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_jsonl(const fs::path& path) {
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".json";
}

/// JSONL records, or one story per line for any other extension.
std::vector<RawRecord> read_records(const fs::path& path) {
  if (is_jsonl(path)) return read_jsonl(path);
  std::vector<RawRecord> out;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!tokenize(line).empty()) out.push_back(RawRecord{"", line, std::nullopt});
  }
  return out;
}

/// The "story" field of every JSONL line, or raw lines for plain text.
std::vector<std::string> read_stories(const fs::path& path) {
  std::vector<std::string> out;
  for (const auto& r : read_records(path)) out.push_back(r.story);
  return out;
}

Vocab build_vocab(const std::vector<RawRecord>& records, const Resolved& r) {
  std::vector<std::string> texts;
  for (const auto& rec : records) {
    texts.push_back(rec.prompt);
    texts.push_back(rec.story);
  }
  return Vocab::build(texts, r.vocab_max_size, r.vocab_min_freq);
}

std::vector<PromptStoryPair> encode_all(const std::vector<RawRecord>& records, const Vocab& vocab, const ModelConfig& m) {
  if (records.empty()) throw DataError("training corpus is empty");
  const LoadOptions opts{m.max_src_len, m.max_story_len, m.cnn_layers};
  std::vector<PromptStoryPair> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(encode_record(rec, vocab, opts));
  return out;
}

TrainHooks console_hooks(std::ostream& out, CsvLog& log) {
  TrainHooks hooks;
  hooks.on_log = [&out, &log](const TrainLogRow& row) {
    log.write(row);
    out << "step " << row.step << " lr " << row.lr << " tau " << row.tau << " loss " << row.loss << " recon "
        << row.recon << " entr " << row.entr << " disc " << row.disc << " grad_norm " << row.grad_norm << '\n';
  };
  return hooks;
}

json provenance(const Resolved& r, const std::string& command) {
  return json{{"command", command}, {"config", r.to_json()}};
}

void echo_config(const fs::path& dir, const Resolved& r, const std::string& command) {
  write_text(dir / "resolved_config.json", provenance(r, command).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Subcommands.

int run_synth(const Flags& f, std::ostream& out) {
  require_flag(f.out, "--out");
  Resolved r = resolve(f);
  SynthSpec spec;
  spec.seed = f.has("--seed") ? f.seed : spec.seed;
  spec.n_docs = f.n_docs;
  spec.vocab_size = f.vocab_size;
  if (f.prompt_mode == "full") {
    spec.prompt_mode = PromptMode::Full;
  } else if (f.prompt_mode != "title") {
    throw ConfigError("--prompt-mode: expected title or full");
  }
  const auto docs = synth_corpus(spec);
  const fs::path dir(f.out);
  fs::create_directories(dir);
  std::string jsonl;
  std::vector<std::vector<ParsedSentence>> passages;
  for (const auto& d : docs) {
    jsonl += to_jsonl_line(d) + "\n";
    passages.push_back(d.sentences);
  }
  write_text(dir / "synth.jsonl", jsonl);
  write_text(dir / "synth.conllu", to_conllu(passages));
  json p = provenance(r, "synth");
  p["synth"] = {{"seed", spec.seed}, {"n_docs", spec.n_docs}, {"vocab_size", spec.vocab_size}, {"prompt_mode", f.prompt_mode}};
  write_text(dir / "resolved_config.json", p.dump(2) + "\n");
  out << "wrote " << docs.size() << " documents to " << (dir / "synth.jsonl").string() << '\n';
  return kExitOk;
}

int run_annotate(const Flags& f, std::ostream& out) {
  require_flag(f.in, "--in");
  require_flag(f.out, "--out");
  const auto passages = parse_conllu_passages(read_text(f.in));
  std::string lines;
  for (const auto& passage : passages) {
    std::string story;
    for (const auto& s : passage) {
      for (const auto& w : s.words) story += (story.empty() ? "" : " ") + w;
    }
    const DiscourseAnnotation ann = extract_annotations(passage);
    json j{{"prompt", ""}, {"story", story}, {"annotation", json::parse(annotation_to_json(ann))}};
    lines += j.dump() + "\n";
  }
  write_text(f.out, lines);
  out << "annotated " << passages.size() << " passages\n";
  return kExitOk;
}

int run_stage1(const Flags& f, std::ostream& out, bool warm) {
  require_flag(f.data, "--data");
  require_flag(f.out, "--out");
  Resolved r = resolve(f);
  r.train.stage = warm ? "warmstart" : "finetune";
  if (warm) r.train.lambda2 = 0.0;
  const auto records = read_records(f.data);
  if (records.empty()) throw DataError("'" + f.data + "' contains no texts");

  std::unique_ptr<Generator<Scalar>> gen;
  Vocab vocab;
  if (!f.checkpoint.empty()) {
    auto loaded = load_generator<Scalar>(f.checkpoint);
    if (model_overridden(f, r)) {
      ModelConfig wanted = r.model;
      wanted.vocab_size = loaded.model->config.vocab_size;
      if (!(wanted == loaded.model->config)) {
        throw CheckpointError("model config does not match the architecture stored in '" + f.checkpoint + "': expected " +
                              json(loaded.model->config).dump() + ", got " + json(wanted).dump());
      }
    }
    gen = std::move(loaded.model);
    vocab = std::move(loaded.vocab);
    r.model = gen->config;
  } else {
    vocab = build_vocab(records, r);
    r.model.vocab_size = vocab.size();
    gen = std::make_unique<Generator<Scalar>>(r.model);
  }
  const auto data = encode_all(records, vocab, r.model);
  const bool steps_given = f.has("--steps") || (r.file.contains("train") && r.file["train"].contains("steps"));
  if (warm && !steps_given) {
    const long per_step = static_cast<long>(r.train.batch_size) * r.train.grad_accum;
    r.train.steps = static_cast<int>((static_cast<long>(data.size()) + per_step - 1) / per_step);
  }
  validate(r.train);

  const fs::path dir(f.out);
  fs::create_directories(dir);
  echo_config(dir, r, warm ? "warmstart" : "train");
  vocab.save(dir / "vocab.txt");
  CsvLog log(dir / "train_log.csv");
  const fs::path ckpt = dir / "generator.ckpt";
  TrainHooks hooks = console_hooks(out, log);
  hooks.on_checkpoint = [&](long step) {
    save_model(ckpt, "generator", *gen, vocab, {{"train", r.train}, {"step", step}, {"resolved", r.to_json()}});
  };
  train_stage1(*gen, data, r.train, hooks);
  save_model(ckpt, "generator", *gen, vocab, {{"train", r.train}, {"step", r.train.steps}, {"resolved", r.to_json()}});
  out << "saved " << ckpt.string() << '\n';
  return kExitOk;
}

int run_train_prior(const Flags& f, std::ostream& out) {
  require_flag(f.data, "--data");
  require_flag(f.out, "--out");
  if (f.checkpoint.empty()) throw CheckpointError("--checkpoint: a trained stage-1 checkpoint is required");
  Resolved r = resolve(f);
  r.train.stage = "prior";
  auto loaded = load_generator<Scalar>(f.checkpoint);
  ModelConfig cfg = loaded.model->config;
  if (r.file.contains("model")) {
    ModelConfig wanted = r.model;
    wanted.vocab_size = cfg.vocab_size;
    wanted.prior_layers = cfg.prior_layers;
    wanted.prior_max_codes = cfg.prior_max_codes;
    if (!(wanted == cfg)) throw CheckpointError("model config does not match the stage-1 checkpoint '" + f.checkpoint + "'");
    cfg.prior_layers = r.model.prior_layers;
    cfg.prior_max_codes = r.model.prior_max_codes;
  }
  r.model = cfg;
  validate(r.train);
  const auto data = encode_all(read_records(f.data), loaded.vocab, cfg);

  const fs::path dir(f.out);
  fs::create_directories(dir);
  echo_config(dir, r, "train-prior");
  const auto targets = cache_targets(*loaded.model, data);
  write_text(dir / "prior_targets.json", json(targets).dump() + "\n");

  Prior<Scalar> prior(cfg);
  prior.init_encoder_from(*loaded.model);
  CsvLog log(dir / "train_log.csv");
  const fs::path ckpt = dir / "prior.ckpt";
  TrainHooks hooks = console_hooks(out, log);
  hooks.on_checkpoint = [&](long step) {
    save_model(ckpt, "prior", prior, loaded.vocab, {{"train", r.train}, {"step", step}, {"resolved", r.to_json()}});
  };
  train_prior(prior, data, targets, r.train, hooks);
  const double acc = teacher_forced_accuracy(prior, data, targets);
  save_model(ckpt, "prior", prior, loaded.vocab,
             {{"train", r.train}, {"step", r.train.steps}, {"resolved", r.to_json()}, {"teacher_forced_accuracy", acc}});
  out << "teacher-forced accuracy " << acc << "\nsaved " << ckpt.string() << '\n';
  return kExitOk;
}

int run_generate(const Flags& f, std::ostream& out) {
  require_flag(f.out, "--out");
  if (f.checkpoint.empty()) throw CheckpointError("--checkpoint: stage-1 checkpoint is required");
  if (f.prior_checkpoint.empty()) throw CheckpointError("--prior-checkpoint: prior checkpoint is required");
  if (f.data.empty() && !f.has("--prompt")) throw ConfigError("--data or --prompt: prompts are required");
  Resolved r = resolve(f);
  validate(r.sampling);
  auto gen = load_generator<Scalar>(f.checkpoint);
  auto prior = load_prior<Scalar>(f.prior_checkpoint);
  if (!(gen.vocab == prior.vocab)) throw CheckpointError("stage-1 and prior checkpoints use different vocabularies");
  r.model = gen.model->config;

  std::vector<std::string> prompts;
  if (f.has("--prompt")) {
    prompts.push_back(f.prompt);
  } else {
    for (const auto& rec : read_records(f.data)) prompts.push_back(rec.prompt);
  }
  std::string lines;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    SamplingConfig s = r.sampling;
    s.seed = hash_key(r.sampling.seed, i, 0, 0, 0);
    const Generation g = generate_text(*gen.model, *prior.model, gen.vocab, prompts[i], s);
    lines += json{{"prompt", prompts[i]}, {"story", g.story}, {"codes", g.codes}}.dump() + "\n";
  }
  const fs::path path(f.out);
  write_text(path, lines);
  write_text(fs::path(path.string() + ".config.json"), provenance(r, "generate").dump(2) + "\n");
  out << "generated " << prompts.size() << " stories into " << path.string() << '\n';
  return kExitOk;
}

std::vector<double> parsed_distribution(const std::string& path) {
  std::vector<DiscourseAnnotation> anns;
  for (const auto& passage : parse_conllu_passages(read_text(path))) anns.push_back(extract_annotations(passage));
  const auto d = relation_distribution(anns);
  return {d.begin(), d.end()};
}

int run_evaluate(const Flags& f, std::ostream& out) {
  require_flag(f.gen, "--gen");
  require_flag(f.ref, "--ref");
  Resolved r = resolve(f);
  const auto generated = read_stories(f.gen);
  const auto references = read_stories(f.ref);
  MetricReport report = evaluate_texts(generated, references);
  if (!f.gen_parses.empty()) {
    report.discourse = parsed_distribution(f.gen_parses);
    report.discourse_from_surface = false;
  }
  std::vector<double> ref_dist;
  try {
    if (!f.ref_parses.empty()) {
      ref_dist = parsed_distribution(f.ref_parses);
    } else {
      std::vector<std::vector<std::string>> toks;
      for (const auto& t : references) toks.push_back(tokenize(t));
      const auto d = marker_surface_distribution(toks);
      ref_dist.assign(d.begin(), d.end());
    }
  } catch (const DataError&) {
    ref_dist.clear();
  }
  if (!report.discourse.empty() && !ref_dist.empty()) {
    report.scalars["discourse-entropy-bits"] = entropy_bits(report.discourse);
    try {
      report.scalars["discourse-kld-bits"] = kld_bits(ref_dist, report.discourse);
    } catch (const DataError&) {
      // a category present in the references never occurs in the generations
    }
  }
  report.provenance = provenance(r, "evaluate");
  report.provenance["generated"] = f.gen;
  report.provenance["references"] = f.ref;
  if (!f.out.empty()) {
    const fs::path dir(f.out);
    fs::create_directories(dir);
    write_text(dir / "report.json", report.to_json().dump(2) + "\n");
    write_text(dir / "report.txt", report.to_table());
  }
  out << report.to_table();
  return kExitOk;
}

int run_inspect_codes(const Flags& f, std::ostream& out) {
  require_flag(f.gen, "--gen");
  Resolved r = resolve(f);
  int cnn_layers = r.model.cnn_layers;
  if (!f.checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(f.checkpoint);
    cnn_layers = ckpt.meta.at("model").get<ModelConfig>().cnn_layers;
  }
  std::vector<CodedStory> stories;
  std::istringstream in(read_text(f.gen));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      stories.push_back(CodedStory{j.at("story").get<std::string>(), j.at("codes").get<std::vector<int>>()});
    } catch (const json::exception& e) {
      throw DataError(f.gen + ":" + std::to_string(line_no) + ": expected {\"story\", \"codes\"} (" + e.what() + ")");
    }
  }
  const auto stats = code_marker_stats(stories, 1 << cnn_layers);
  json report = json::array();
  std::ostringstream table;
  for (const auto& cm : stats) {
    json top = json::array();
    table << "code " << std::setw(4) << cm.code << "  4-grams " << std::setw(5) << cm.qualifying_ngrams << " ";
    for (const auto& [marker, pct] : cm.top) {
      top.push_back({{"marker", marker}, {"percent", pct}});
      table << " " << marker << " " << std::fixed << std::setprecision(1) << pct << "%";
    }
    table << '\n';
    report.push_back({{"code", cm.code}, {"qualifying_4grams", cm.qualifying_ngrams}, {"top_markers", top}});
  }
  if (!f.out.empty()) {
    const fs::path dir(f.out);
    fs::create_directories(dir);
    json doc{{"block", 1 << cnn_layers}, {"min_repeats", 2}, {"codes", report}, {"provenance", provenance(r, "inspect-codes")}};
    write_text(dir / "code_markers.json", doc.dump(2) + "\n");
    write_text(dir / "code_markers.txt", table.str());
  }
  out << table.str();
  return kExitOk;
}

std::string keys_footer(bool model, bool train, bool sampling) {
  std::string s = "Config keys read (--config JSON, overridden by flags):\n";
  if (model) s += "  " + join(keys_of<ModelConfig>(), "model.") + "\n";
  if (train) s += "  " + join(keys_of<TrainConfig>(), "train.") + "\n";
  if (sampling) s += "  " + join(keys_of<SamplingConfig>(), "sampling.") + "\n";
  if (model) s += "  data.vocab_max_size, data.vocab_min_freq\n";
  return s;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discourse-aware discrete latent story generation"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&f](CLI::App* sub) {
    f.opts["--config"].push_back(sub->add_option("--config", f.config, "JSON config file"));
    f.opts["--seed"].push_back(sub->add_option("--seed", f.seed, "seed for every stochastic component"));
  };
  auto add_model = [&f](CLI::App* sub) {
    f.opts["--codes"].push_back(sub->add_option("--codes", f.codes, "latent vocabulary size K"));
    f.opts["--cnn-layers"].push_back(sub->add_option("--cnn-layers", f.cnn_layers, "CNN layers c (compression 2^c)"));
  };
  auto add_train = [&f](CLI::App* sub) {
    f.opts["--lambda1"].push_back(sub->add_option("--lambda1", f.lambda1, "entropy regularization weight"));
    f.opts["--lambda2"].push_back(sub->add_option("--lambda2", f.lambda2, "discourse loss weight"));
    f.opts["--tau-max"].push_back(sub->add_option("--tau-max", f.tau_max, "initial Gumbel temperature"));
    f.opts["--tau-min"].push_back(sub->add_option("--tau-min", f.tau_min, "Gumbel temperature floor"));
    f.opts["--steps"].push_back(sub->add_option("--steps", f.steps, "optimizer steps"));
  };
  auto add_sampling = [&f](CLI::App* sub) {
    f.opts["--p"].push_back(sub->add_option("--p", f.p, "nucleus mass"));
    f.opts["--min-tokens"].push_back(sub->add_option("--min-tokens", f.min_tokens, "tokens before eos is allowed"));
    f.opts["--max-tokens"].push_back(sub->add_option("--max-tokens", f.max_tokens, "token limit"));
    f.opts["--temperature"].push_back(sub->add_option("--temperature", f.temperature, "softmax temperature (0 = greedy)"));
  };

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus with parses and annotations");
  add_common(synth);
  synth->add_option("--out", f.out, "output directory");
  synth->add_option("--n-docs", f.n_docs, "number of documents");
  synth->add_option("--vocab-size", f.vocab_size, "vocabulary size");
  synth->add_option("--prompt-mode", f.prompt_mode, "title or full");
  synth->footer("Writes synth.jsonl, synth.conllu and resolved_config.json under --out.");

  auto* annotate = app.add_subcommand("annotate", "extract discourse annotations from CoNLL-U parses");
  annotate->add_option("--in", f.in, "CoNLL-U file, passages separated by # newdoc")->required();
  annotate->add_option("--out", f.out, "output JSONL")->required();

  auto* warm = app.add_subcommand("warmstart", "warm-start the stage-1 model on plain text");
  auto* train = app.add_subcommand("train", "fine-tune the stage-1 model");
  for (auto* sub : {warm, train}) {
    add_common(sub);
    add_model(sub);
    add_train(sub);
    sub->add_option("--data", f.data, "JSONL records or plain text (one story per line)");
    sub->add_option("--out", f.out, "output directory");
    f.opts["--checkpoint"].push_back(sub->add_option("--checkpoint", f.checkpoint, "stage-1 checkpoint to continue from"));
    sub->footer(keys_footer(true, true, false) + "Writes generator.ckpt, vocab.txt, train_log.csv, resolved_config.json.");
  }

  auto* prior = app.add_subcommand("train-prior", "train the latent prior on posterior codes");
  add_common(prior);
  prior->add_option("--data", f.data, "JSONL records");
  prior->add_option("--out", f.out, "output directory");
  prior->add_option("--checkpoint", f.checkpoint, "trained stage-1 checkpoint");
  f.opts["--steps"].push_back(prior->add_option("--steps", f.steps, "optimizer steps"));
  prior->footer(keys_footer(true, true, false) + "Writes prior.ckpt, prior_targets.json, train_log.csv, resolved_config.json.");

  auto* generate = app.add_subcommand("generate", "sample stories for prompts");
  add_common(generate);
  add_sampling(generate);
  generate->add_option("--checkpoint", f.checkpoint, "stage-1 checkpoint");
  generate->add_option("--prior-checkpoint", f.prior_checkpoint, "prior checkpoint");
  generate->add_option("--data", f.data, "JSONL whose prompt fields are used");
  f.opts["--prompt"].push_back(generate->add_option("--prompt", f.prompt, "single prompt"));
  generate->add_option("--out", f.out, "output JSONL of {prompt, story, codes}");
  generate->footer(keys_footer(false, false, true));

  auto* evaluate = app.add_subcommand("evaluate", "score generations against references");
  add_common(evaluate);
  evaluate->add_option("--gen", f.gen, "generated JSONL (story field) or text");
  evaluate->add_option("--ref", f.ref, "reference JSONL (story field) or text");
  evaluate->add_option("--gen-parses", f.gen_parses, "CoNLL-U parses of the generations");
  evaluate->add_option("--ref-parses", f.ref_parses, "CoNLL-U parses of the references");
  evaluate->add_option("--out", f.out, "directory for report.json and report.txt");

  auto* inspect = app.add_subcommand("inspect-codes", "per-code discourse marker statistics");
  add_common(inspect);
  add_model(inspect);
  inspect->add_option("--gen", f.gen, "generated JSONL with codes");
  inspect->add_option("--checkpoint", f.checkpoint, "stage-1 checkpoint (for the block size)");
  inspect->add_option("--out", f.out, "directory for code_markers.json and code_markers.txt");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return run_synth(f, out);
    if (annotate->parsed()) return run_annotate(f, out);
    if (warm->parsed()) return run_stage1(f, out, true);
    if (train->parsed()) return run_stage1(f, out, false);
    if (prior->parsed()) return run_train_prior(f, out);
    if (generate->parsed()) return run_generate(f, out);
    if (evaluate->parsed()) return run_evaluate(f, out);
    if (inspect->parsed()) return run_inspect_codes(f, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace latentstory
