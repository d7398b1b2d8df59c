#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "mtpe/corpus.hpp"

namespace mtpe {

/// Per-annotation MQM penalty weights.
///
/// Defaults are the WMT MQM weighting: a major non-translation costs 25, any
/// other major error 5, a minor fluency/punctuation error 0.1, any other minor
/// error 1 and a neutral annotation nothing. Critical errors have no row of
/// their own in that scheme; by default they reuse the major row.
struct WeightTable {
  double major_non_translation = 25.0;
  double major_other = 5.0;
  double minor_fluency_punctuation = 0.1;
  double minor_other = 1.0;
  double neutral = 0.0;
  double critical_non_translation = 25.0;
  double critical_other = 5.0;
  /// Penalty that maps to a normalized score of 0.
  double max_penalty = 25.0;

  double weight(const ErrorAnnotation& ann) const;

  /// Applies overrides from a JSON object. Recognized keys: "major/non_translation",
  /// "major/other", "minor/fluency_punctuation", "minor/other", "neutral",
  /// "critical/non_translation", "critical/other", "max_penalty".
  static WeightTable from_json(const nlohmann::json& j);
  static WeightTable load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// How annotations from several raters combine into one penalty.
enum class PenaltyPolicy {
  Average,  // mean of per-rater sums
  KeepAll,  // sum over every annotation
};

struct QualityScore {
  double penalty = 0.0;
  double normalized = 100.0;

  /// Integer form shown in prompts (round half away from zero).
  int rounded() const;
};

/// Sum of annotation weights, per rater then combined by `policy`. Only
/// annotations from `source` count when it is given.
double segment_penalty(const Segment& seg, PenaltyPolicy policy, const WeightTable& weights = {},
                       std::optional<AnnotationSource> source = std::nullopt);

/// Linear map 100 * (1 - penalty / max_penalty), clamped to [0, 100].
/// Throws Error on negative or NaN penalties.
double normalize(double penalty, double max_penalty = 25.0);

QualityScore score_segment(const Segment& seg, PenaltyPolicy policy,
                           const WeightTable& weights = {},
                           std::optional<AnnotationSource> source = std::nullopt);

}  // namespace mtpe
