#include "mtpe/datasetgen.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "mtpe/error.hpp"
#include "mtpe/jsonl.hpp"
#include "mtpe/sampling.hpp"
#include "mtpe/text.hpp"

namespace mtpe::dataset {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view label) {
  std::string s = text::to_lower(text::trim(label));
  if (s == "train") return Split::Train;
  if (s == "dev" || s == "validation" || s == "valid") return Split::Dev;
  if (s == "test") return Split::Test;
  throw Error("unknown split '" + std::string(label) + "'");
}

std::string_view to_string(Regime r) { return r == Regime::Bilingual ? "bilingual" : "multilingual"; }

Regime parse_regime(std::string_view label) {
  std::string s = text::to_lower(text::trim(label));
  if (s == "bilingual" || s == "bi") return Regime::Bilingual;
  if (s == "multilingual" || s == "multi") return Regime::Multilingual;
  throw ConfigError("unknown regime '" + std::string(label) + "'");
}

const SplitCounts& SplitPlan::counts(const std::string& code) const {
  auto it = per_lang.find(code);
  return it == per_lang.end() ? defaults : it->second;
}

// ---------------------------------------------------------------------------
// Instruction text

namespace {

std::string one_line(std::string_view s) {
  std::string out = text::replace_all(std::string(s), "\r\n", " ");
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}

std::string errors_payload(const Segment& seg, FeedbackKind feedback, AnnotationSource source) {
  if (feedback == FeedbackKind::Generic) {
    return "Improve the translation from " + seg.lang.src + " to " + seg.lang.tgt +
           " without any explanation.";
  }
  if (feedback != FeedbackKind::FineGrained)
    throw ConfigError("instruction datasets support generic or fine-grained feedback only");
  std::string out;
  for (const auto& e : seg.errors) {
    if (e.source != source || !e.is_error()) continue;
    if (!out.empty()) out += ' ';
    out += error_sentence(e, ComponentMask::full(), TypeWording::FullLabel);
  }
  return out.empty() ? "None." : out;
}

}  // namespace

std::string render_instruction(const Segment& seg, FeedbackKind feedback, AnnotationSource source) {
  return "### " + seg.lang.src + ": " + one_line(seg.source) + "\n### " + seg.lang.tgt + ": " +
         one_line(seg.hypothesis) + "\n### Errors: " + one_line(errors_payload(seg, feedback, source)) +
         "\n\n### Improved " + seg.lang.tgt + ":";
}

ParsedInstruction parse_instruction(std::string_view ins) {
  auto fail = [](const std::string& what) -> ParsedInstruction {
    throw Error("malformed instruction: " + what);
  };
  ParsedInstruction p;
  auto lines = text::split(ins, '\n');
  if (lines.size() != 5) return fail("expected 5 lines, got " + std::to_string(lines.size()));
  auto header = [&](const std::string& line, std::string& lang, std::string& body) {
    if (!text::starts_with(line, "### ")) return false;
    std::size_t colon = line.find(": ", 4);
    if (colon == std::string::npos) return false;
    lang = line.substr(4, colon - 4);
    body = line.substr(colon + 2);
    return !lang.empty();
  };
  if (!header(lines[0], p.src_lang, p.source)) return fail("bad source line");
  if (!header(lines[1], p.tgt_lang, p.hypothesis)) return fail("bad hypothesis line");
  std::string label;
  if (!header(lines[2], label, p.errors) || label != "Errors") return fail("bad Errors line");
  if (!lines[3].empty()) return fail("missing blank line before the cue");
  if (lines[4] != "### Improved " + p.tgt_lang + ":") return fail("bad cue line");
  if (p.errors != "None.") {
    static constexpr std::string_view kBoundary = ". There is";
    std::size_t start = 0;
    for (;;) {
      std::size_t pos = p.errors.find(kBoundary, start);
      if (pos == std::string::npos) {
        p.error_sentences.push_back(p.errors.substr(start));
        break;
      }
      p.error_sentences.push_back(p.errors.substr(start, pos + 1 - start));
      start = pos + 2;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Build

json DatasetBuild::summary_json() const {
  json j = json::object();
  for (const auto& [code, s] : summary) {
    j[code] = {{"mqm_segments", s.mqm_segments},
               {"demetr_segments", s.demetr_segments},
               {"skipped_no_reference", s.skipped_no_reference},
               {"removed_overlap", s.removed_overlap},
               {"train_mqm", s.train_mqm},
               {"train_demetr", s.train_demetr},
               {"dev", s.dev},
               {"test", s.test}};
  }
  return j;
}

DatasetBuild build_instruction_dataset(std::span<const Corpus> corpora, const DatasetOptions& opts) {
  if (opts.feedback == FeedbackKind::Score)
    throw ConfigError("instruction datasets support generic or fine-grained feedback only");

  struct Pool {
    std::vector<const Segment*> mqm;
    std::vector<const Segment*> demetr;
  };
  std::map<std::string, Pool> pools;
  DatasetBuild out;
  for (const auto& corpus : corpora) {
    for (const auto& seg : corpus) {
      LangSummary& s = out.summary[seg.lang.code];
      Pool& pool = pools[seg.lang.code];
      if (!seg.reference || text::trim(*seg.reference).empty()) {
        ++s.skipped_no_reference;
        continue;
      }
      if (seg.origin == Origin::DEMETR) {
        pool.demetr.push_back(&seg);
        ++s.demetr_segments;
      } else {
        pool.mqm.push_back(&seg);
        ++s.mqm_segments;
      }
    }
  }

  for (auto& [code, pool] : pools) {
    LangSummary& s = out.summary[code];
    const SplitCounts& want = opts.plan.counts(code);
    const std::size_t fixed = want.test + want.dev + want.train.value_or(0);
    if (fixed > pool.mqm.size())
      throw Error("split plan for " + code + " needs " + std::to_string(fixed) +
                  " MQM segments with references, corpus has " + std::to_string(pool.mqm.size()));

    SeededRng rng(opts.plan.seed);
    std::vector<const Segment*> shuffled = pool.mqm;
    seeded_shuffle(shuffled, rng);

    auto begin = shuffled.begin();
    std::vector<const Segment*> test(begin, begin + want.test);
    std::vector<const Segment*> dev(begin + want.test, begin + want.test + want.dev);
    std::vector<const Segment*> train(begin + want.test + want.dev, shuffled.end());
    train.insert(train.end(), pool.demetr.begin(), pool.demetr.end());

    std::unordered_set<std::string> test_text;
    for (const Segment* seg : test) {
      test_text.insert(std::string(text::trim(seg->source)));
      test_text.insert(std::string(text::trim(seg->hypothesis)));
      test_text.insert(std::string(text::trim(*seg->reference)));
    }
    auto overlaps = [&](const Segment* seg) {
      return test_text.count(std::string(text::trim(seg->source))) ||
             test_text.count(std::string(text::trim(seg->hypothesis))) ||
             test_text.count(std::string(text::trim(*seg->reference)));
    };

    std::vector<const Segment*> kept;
    std::size_t mqm_kept = 0;
    for (const Segment* seg : train) {
      if (overlaps(seg)) {
        ++s.removed_overlap;
        continue;
      }
      if (seg->origin == Origin::MQM) {
        if (want.train && mqm_kept >= *want.train) continue;
        ++mqm_kept;
        ++s.train_mqm;
      } else {
        ++s.train_demetr;
      }
      kept.push_back(seg);
    }
    s.dev = dev.size();
    s.test = test.size();

    auto emit = [&](const std::vector<const Segment*>& segs, Split split) {
      for (const Segment* seg : segs) {
        AnnotationSource source = seg->origin == Origin::DEMETR ? AnnotationSource::DEMETR : opts.source;
        out.examples.push_back({render_instruction(*seg, opts.feedback, source),
                                std::string(text::trim(*seg->reference)), seg->lang, split,
                                seg->origin});
      }
    };
    emit(kept, Split::Train);
    emit(dev, Split::Dev);
    emit(test, Split::Test);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

ordered_json example_to_json(const InstructExample& ex) {
  ordered_json j;
  j["instruction"] = ex.instruction;
  j["output"] = ex.completion;
  j["lang"] = ex.lang.code;
  j["split"] = to_string(ex.split);
  j["origin"] = to_string(ex.origin);
  return j;
}

InstructExample example_from_json(const json& j) {
  InstructExample ex;
  ex.instruction = j.at("instruction").get<std::string>();
  ex.completion = j.at("output").get<std::string>();
  ex.lang = LangPair::from_code(j.at("lang").get<std::string>());
  ex.split = parse_split(j.at("split").get<std::string>());
  ex.origin = parse_origin(j.at("origin").get<std::string>());
  if (ex.completion.empty()) throw Error("example has an empty output");
  return ex;
}

std::string examples_to_jsonl(std::span<const InstructExample> examples) {
  std::string out;
  for (const auto& ex : examples) out += io::dump_line(example_to_json(ex)) + "\n";
  return out;
}

std::vector<InstructExample> examples_from_jsonl(std::string_view content, const std::string& name) {
  std::vector<InstructExample> out;
  io::for_each_json_line(content, name,
                         [&](std::size_t, const json& j) { out.push_back(example_from_json(j)); });
  return out;
}

void export_jsonl(std::span<const InstructExample> examples, const std::filesystem::path& path) {
  io::write_file_atomic(path, examples_to_jsonl(examples));
}

std::vector<InstructExample> import_jsonl(const std::filesystem::path& path) {
  return examples_from_jsonl(io::read_file(path), path.string());
}

std::vector<std::string> export_dataset(std::span<const InstructExample> examples, Regime regime,
                                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::vector<InstructExample>> files;
  for (Split split : {Split::Train, Split::Dev, Split::Test}) {
    for (const auto& ex : examples) {
      if (ex.split != split) continue;
      std::string name = std::string(to_string(split)) + ".jsonl";
      if (regime == Regime::Bilingual) name = ex.lang.code + "." + name;
      files[name].push_back(ex);
    }
  }
  std::vector<std::string> names;
  for (const auto& [name, exs] : files) {
    export_jsonl(exs, dir / name);
    names.push_back(name);
  }
  return names;
}

ordered_json TrainingManifest::to_json() const {
  ordered_json j;
  j["base_model"] = base_model;
  j["regime"] = to_string(regime);
  j["lora_rank"] = lora_rank;
  j["lora_alpha"] = lora_alpha;
  j["lora_dropout"] = lora_dropout;
  j["optimizer"] = optimizer;
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["grad_accum"] = grad_accum;
  j["warmup_steps"] = warmup_steps;
  j["epochs"] = epochs;
  j["early_stop_patience"] = early_stop_patience;
  j["languages"] = languages;
  j["data_files"] = data_files;
  return j;
}

TrainingManifest TrainingManifest::from_json(const json& j) {
  TrainingManifest m;
  m.base_model = j.value("base_model", m.base_model);
  if (j.contains("regime")) m.regime = parse_regime(j["regime"].get<std::string>());
  m.lora_rank = j.value("lora_rank", m.lora_rank);
  m.lora_alpha = j.value("lora_alpha", m.lora_alpha);
  m.lora_dropout = j.value("lora_dropout", m.lora_dropout);
  m.optimizer = j.value("optimizer", m.optimizer);
  m.learning_rate = j.value("learning_rate", m.learning_rate);
  m.batch_size = j.value("batch_size", m.batch_size);
  m.grad_accum = j.value("grad_accum", m.grad_accum);
  m.warmup_steps = j.value("warmup_steps", m.warmup_steps);
  m.epochs = j.value("epochs", m.epochs);
  m.early_stop_patience = j.value("early_stop_patience", m.early_stop_patience);
  m.languages = j.value("languages", m.languages);
  m.data_files = j.value("data_files", m.data_files);
  return m;
}

void export_training_manifest(const TrainingManifest& manifest, const std::filesystem::path& path) {
  io::write_file_atomic(path, manifest.to_json().dump(2) + "\n");
}

}  // namespace mtpe::dataset
