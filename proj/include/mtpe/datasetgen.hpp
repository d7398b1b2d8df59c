#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mtpe/corpus.hpp"
#include "mtpe/feedback.hpp"

namespace mtpe::dataset {

enum class Split { Train, Dev, Test };

std::string_view to_string(Split s);
Split parse_split(std::string_view label);

enum class Regime { Bilingual, Multilingual };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view label);

struct InstructExample {
  std::string instruction;  // ends with "### Improved {Tgt}:"
  std::string completion;   // reference translation
  LangPair lang;
  Split split = Split::Train;
  Origin origin = Origin::MQM;

  friend bool operator==(const InstructExample&, const InstructExample&) = default;
};

struct SplitCounts {
  std::optional<std::size_t> train;  // MQM train cap; all remaining when unset
  std::size_t dev = 200;
  std::size_t test = 1000;
};

/// MQM segments of each language pair are shuffled with `seed` and cut into
/// test, dev and train; DEMETR segments always go to train.
struct SplitPlan {
  SplitCounts defaults;
  std::map<std::string, SplitCounts> per_lang;  // by pair code
  std::uint64_t seed = 12345;

  const SplitCounts& counts(const std::string& code) const;
};

struct DatasetOptions {
  SplitPlan plan;
  FeedbackKind feedback = FeedbackKind::FineGrained;  // Generic or FineGrained
  AnnotationSource source = AnnotationSource::MQM;    // errors shown for MQM segments
};

struct LangSummary {
  std::size_t mqm_segments = 0;
  std::size_t demetr_segments = 0;
  std::size_t skipped_no_reference = 0;
  std::size_t removed_overlap = 0;  // train segments sharing text with test
  std::size_t train_mqm = 0;
  std::size_t train_demetr = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
};

struct DatasetBuild {
  std::vector<InstructExample> examples;  // per pair: train, dev, test
  std::map<std::string, LangSummary> summary;

  nlohmann::json summary_json() const;
};

/// "### {Src}: {source}\n### {Tgt}: {hypothesis}\n### Errors: {errors}\n\n### Improved {Tgt}:"
/// Fine-grained errors are full-label sentences joined by a space, "None."
/// when the segment has none; generic feedback puts the plain instruction in
/// the Errors slot. Line breaks inside the texts become spaces.
std::string render_instruction(const Segment& seg, FeedbackKind feedback,
                               AnnotationSource source = AnnotationSource::MQM);

struct ParsedInstruction {
  std::string src_lang;
  std::string tgt_lang;
  std::string source;
  std::string hypothesis;
  std::string errors;  // payload of the Errors line
  std::vector<std::string> error_sentences;
};

/// Inverse of render_instruction. Throws Error when the text does not follow
/// the skeleton.
ParsedInstruction parse_instruction(std::string_view instruction);

/// One example per segment that has a reference. Train segments whose source,
/// hypothesis or reference also occurs in the test split are dropped. Throws
/// Error when a plan asks for more MQM segments than a pair provides.
DatasetBuild build_instruction_dataset(std::span<const Corpus> corpora, const DatasetOptions& opts);

nlohmann::ordered_json example_to_json(const InstructExample& ex);
InstructExample example_from_json(const nlohmann::json& j);
std::string examples_to_jsonl(std::span<const InstructExample> examples);
std::vector<InstructExample> examples_from_jsonl(std::string_view content, const std::string& name = "");

void export_jsonl(std::span<const InstructExample> examples, const std::filesystem::path& path);
std::vector<InstructExample> import_jsonl(const std::filesystem::path& path);

/// Writes {train,dev,test}.jsonl (multilingual) or {code}.{split}.jsonl
/// (bilingual) into `dir`. Returns the written file names.
std::vector<std::string> export_dataset(std::span<const InstructExample> examples, Regime regime,
                                        const std::filesystem::path& dir);

struct TrainingManifest {
  std::string base_model = "meta-llama/Llama-2-7b-hf";
  Regime regime = Regime::Multilingual;
  int lora_rank = 16;
  int lora_alpha = 32;
  double lora_dropout = 0.05;
  std::string optimizer = "adam";
  double learning_rate = 2e-4;
  int batch_size = 2;
  int grad_accum = 4;
  int warmup_steps = 20;
  int epochs = 5;
  int early_stop_patience = 16;
  std::vector<std::string> languages;
  std::vector<std::string> data_files;

  nlohmann::ordered_json to_json() const;
  static TrainingManifest from_json(const nlohmann::json& j);
};

void export_training_manifest(const TrainingManifest& manifest, const std::filesystem::path& path);

}  // namespace mtpe::dataset
