#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mtpe/corpus.hpp"
#include "mtpe/llm_gateway.hpp"
#include "mtpe/metrics.hpp"

namespace mtpe::analysis {

struct CategoryCounts {
  std::size_t matched = 0;   // span still present in the edited output
  std::size_t no_match = 0;  // span gone

  std::size_t total() const { return matched + no_match; }
};

struct ResolutionReport {
  std::string condition;  // feedback condition id, e.g. "fine-grained/k=10"
  AnnotationSource source = AnnotationSource::MQM;
  std::size_t segments = 0;
  std::size_t skipped_failed = 0;  // records without an extracted output
  std::map<std::string, CategoryCounts> per_category;  // keyed by major category

  std::size_t matched() const;
  std::size_t no_match() const;
  std::size_t annotations() const { return matched() + no_match(); }

  nlohmann::json to_json() const;
  std::string to_table() const;
  std::string to_csv() const;
};

/// Span is considered unresolved when its whitespace-normalized text is a
/// case-sensitive substring of the whitespace-normalized output.
bool span_present(std::string_view span, std::string_view output);

/// Checks every non-Neutral annotation from `source` against the edited
/// output of its segment. Throws Error for a record whose id is not in the
/// corpus.
ResolutionReport resolution_analysis(const Corpus& corpus, std::span<const llm::PostEditRecord> edits,
                                     std::string condition = {},
                                     AnnotationSource source = AnnotationSource::MQM);

struct AgreementRule {
  enum class Kind { Exact, Jaccard };
  Kind kind = Kind::Exact;
  double theta = 0.5;

  static AgreementRule exact() { return {}; }
  static AgreementRule jaccard(double theta) { return {Kind::Jaccard, theta}; }
  /// "exact" or "jaccard:0.5".
  static AgreementRule parse(std::string_view spec);
  std::string id() const;

  bool match(std::string_view a, std::string_view b) const;
};

/// Token-set Jaccard similarity over whitespace tokens; 1 for two empty spans.
double token_jaccard(std::string_view a, std::string_view b);

struct AgreementReport {
  AnnotationSource source_a = AnnotationSource::MQM;
  AnnotationSource source_b = AnnotationSource::MQM;
  std::string rule;
  std::size_t overlap = 0;
  std::size_t sample_size = 0;
  std::optional<std::uint64_t> seed;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

struct AgreementOptions {
  AgreementRule rule;
  std::optional<std::size_t> sample;  // draw this many segments, else all
  std::uint64_t seed = 12345;
};

/// Segments with spans from both sources count as overlapping when some span of
/// one source matches some span of the other under the rule. Throws Error
/// when no segment carries both sources or the sample exceeds them.
AgreementReport agreement(const Corpus& corpus, AnnotationSource a, AnnotationSource b,
                          const AgreementOptions& opts = {});

struct CompareOptions {
  metrics::TerOptions ter;
  metrics::TokenizerOptions tokenizer;
  std::size_t resamples = 1000;
  std::uint64_t seed = 12345;
};

/// Original hypotheses vs post-edited outputs, both scored against the
/// references. Failed records fall back to the original hypothesis.
struct EditComparison {
  metrics::MetricReport original;
  metrics::MetricReport edited;
  metrics::SignificanceResult bleu_significance;
  metrics::SignificanceResult ter_significance;
  std::size_t segments = 0;
  std::size_t failed = 0;
  std::vector<std::string> ids;

  double bleu_delta() const { return edited.bleu - original.bleu; }
  double ter_delta() const { return edited.ter - original.ter; }

  nlohmann::json to_json() const;
  std::string to_table() const;
  /// One row per segment: id, bleu/ter before and after.
  std::string segment_tsv() const;
};

/// Throws Error when a record id is missing from the corpus or its segment has
/// no reference, or when there are no records.
EditComparison compare_edits(const Corpus& corpus, std::span<const llm::PostEditRecord> edits,
                             const CompareOptions& opts = {});

/// compare_edits restricted to segments without any non-Neutral annotation.
EditComparison overedit_audit(const Corpus& corpus, std::span<const llm::PostEditRecord> edits,
                              const CompareOptions& opts = {});

}  // namespace mtpe::analysis
