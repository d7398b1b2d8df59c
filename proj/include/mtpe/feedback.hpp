#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtpe/corpus.hpp"

namespace mtpe {

enum class FeedbackKind { Generic, Score, FineGrained };

std::string_view to_string(FeedbackKind k);
/// Accepts "generic", "score", "fine-grained" (also "fine_grained", "mqm").
FeedbackKind parse_feedback_kind(std::string_view label);

/// Which parts of an error annotation are shown in fine-grained feedback.
struct ComponentMask {
  bool span = true;
  bool type = true;
  bool severity = true;

  static ComponentMask full() { return {}; }
  /// Comma-separated subset of {span, type, severity}; "all" for every part.
  static ComponentMask parse(std::string_view spec);
  std::string to_string() const;
  bool empty() const { return !span && !type && !severity; }

  friend bool operator==(const ComponentMask&, const ComponentMask&) = default;
};

/// How the error type is worded in a feedback sentence.
enum class TypeWording {
  Subcategory,  // "mistranslation": prompting templates
  FullLabel,    // "accuracy/mistranslation": instruction datasets
};

struct FeedbackSpec {
  FeedbackKind kind = FeedbackKind::Generic;
  double score = 100.0;                     // Score only, in [0, 100]
  std::vector<ErrorAnnotation> annotations;  // FineGrained only
  ComponentMask mask;

  static FeedbackSpec generic();
  static FeedbackSpec with_score(double normalized);
  static FeedbackSpec fine_grained(std::vector<ErrorAnnotation> annotations,
                                   ComponentMask mask = ComponentMask::full());

  /// Throws Error when the spec violates its invariants.
  void validate() const;
};

/// Non-Neutral annotations from one source, wrapped as fine-grained feedback.
FeedbackSpec fine_grained_for(const Segment& seg, AnnotationSource source,
                              ComponentMask mask = ComponentMask::full());

struct RenderedFeedback {
  std::string instruction_line;
  std::vector<std::string> error_lines;
};

/// One error sentence without numbering, e.g.
/// "There is a major mistranslation error at ``mit Gepäck versehen''."
std::string error_sentence(const ErrorAnnotation& ann, const ComponentMask& mask,
                           TypeWording wording = TypeWording::Subcategory);

/// Instruction line plus numbered error lines ("(1) ...") for the post-editing
/// prompt. Neutral annotations are skipped; throws Error when a fine-grained
/// spec has nothing left to show.
RenderedFeedback render_feedback(const FeedbackSpec& spec, const LangPair& lang,
                                 TypeWording wording = TypeWording::Subcategory);

/// Optional replacement for the built-in query block. Placeholders:
/// {SRC_LANG} {TGT_LANG} {SOURCE} {HYP} {ERRORS} {SCORE}.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string body);
  static PromptTemplate load(const std::filesystem::path& path);

  std::string render(const Segment& seg, const FeedbackSpec& spec,
                     const RenderedFeedback& feedback) const;
  const std::string& body() const { return body_; }

 private:
  std::string body_;
};

/// Prompt pieces in template order. Rendering joins the lines of one block
/// with single newlines; shot blocks come first, separated from each other
/// and from the query by a blank line.
struct PromptBundle {
  std::string instruction_line;
  std::vector<std::string> error_lines;
  std::string source_line;
  std::string hypothesis_line;
  std::string cue_line;
  std::optional<std::string> completion;  // set for shots: text after the cue
  std::vector<PromptBundle> shots;
  std::uint64_t rng_seed = 0;
  std::optional<std::string> custom_block;  // rendered PromptTemplate, if any

  std::string render_block() const;
  std::string render() const;
};

struct Shot {
  Segment segment;
  FeedbackSpec feedback;
  std::string gold;  // text after "Improved {Tgt}:"
};

PromptBundle make_bundle(const Segment& seg, const FeedbackSpec& spec,
                         const PromptTemplate* tmpl = nullptr);

/// Builds the query block for `seg`, preceded by k shots drawn uniformly
/// without replacement from `pool` (entries with the query's id are never
/// drawn). Deterministic for a given seed. Throws Error when k exceeds the
/// eligible pool.
PromptBundle build_postedit_bundle(const Segment& seg, const FeedbackSpec& spec,
                                   std::span<const Shot> pool, std::size_t k, std::uint64_t seed,
                                   const PromptTemplate* tmpl = nullptr);

std::string build_postedit_prompt(const Segment& seg, const FeedbackSpec& spec,
                                  std::span<const Shot> pool, std::size_t k, std::uint64_t seed,
                                  const PromptTemplate* tmpl = nullptr);

/// "Translate from {Src} to {Tgt} without any explanation.\n{Src}: {source}\n{Tgt}:"
std::string build_translate_prompt(std::string_view source, const LangPair& lang);

}  // namespace mtpe
