#include "mtpe/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtpe/error.hpp"
#include "mtpe/jsonl.hpp"
#include "mtpe/text.hpp"

namespace mtpe {

namespace {

bool is_non_translation(const ErrorAnnotation& ann) {
  return ann.category && ann.category->major == MajorCategory::NonTranslation;
}

bool is_fluency_punctuation(const ErrorAnnotation& ann) {
  return ann.category && ann.category->major == MajorCategory::Fluency && ann.category->sub &&
         text::iequals(*ann.category->sub, "Punctuation");
}

}  // namespace

double WeightTable::weight(const ErrorAnnotation& ann) const {
  switch (ann.severity) {
    case Severity::Neutral: return neutral;
    case Severity::Critical: return is_non_translation(ann) ? critical_non_translation : critical_other;
    case Severity::Major: return is_non_translation(ann) ? major_non_translation : major_other;
    case Severity::Minor: return is_fluency_punctuation(ann) ? minor_fluency_punctuation : minor_other;
  }
  return 0.0;
}

WeightTable WeightTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("weight table must be a JSON object");
  WeightTable w;
  const std::map<std::string, double*> fields{
      {"major/non_translation", &w.major_non_translation},
      {"major/other", &w.major_other},
      {"minor/fluency_punctuation", &w.minor_fluency_punctuation},
      {"minor/other", &w.minor_other},
      {"neutral", &w.neutral},
      {"critical/non_translation", &w.critical_non_translation},
      {"critical/other", &w.critical_other},
      {"max_penalty", &w.max_penalty},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("unknown weight key '" + key + "'");
    if (!value.is_number()) throw ConfigError("weight '" + key + "' must be a number");
    double v = value.get<double>();
    if (v < 0) throw ConfigError("weight '" + key + "' must be non-negative");
    *it->second = v;
  }
  if (w.max_penalty <= 0) throw ConfigError("max_penalty must be positive");
  return w;
}

WeightTable WeightTable::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json WeightTable::to_json() const {
  return {{"major/non_translation", major_non_translation},
          {"major/other", major_other},
          {"minor/fluency_punctuation", minor_fluency_punctuation},
          {"minor/other", minor_other},
          {"neutral", neutral},
          {"critical/non_translation", critical_non_translation},
          {"critical/other", critical_other},
          {"max_penalty", max_penalty}};
}

int QualityScore::rounded() const { return static_cast<int>(std::lround(normalized)); }

double segment_penalty(const Segment& seg, PenaltyPolicy policy, const WeightTable& weights,
                       std::optional<AnnotationSource> source) {
  // Weights are summed in sorted order so the result does not depend on the
  // order annotations were listed in.
  std::map<std::string, std::vector<double>> per_rater;
  std::vector<double> all;
  for (const auto& ann : seg.errors) {
    if (source && ann.source != *source) continue;
    double w = weights.weight(ann);
    per_rater[ann.rater].push_back(w);
    all.push_back(w);
  }
  if (all.empty()) return 0.0;
  auto sorted_sum = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  };
  if (policy == PenaltyPolicy::KeepAll) return sorted_sum(all);
  double sum = 0.0;
  for (const auto& [rater, ws] : per_rater) sum += sorted_sum(ws);
  return sum / static_cast<double>(per_rater.size());
}

double normalize(double penalty, double max_penalty) {
  if (std::isnan(penalty) || penalty < 0) throw Error("penalty must be non-negative");
  if (max_penalty <= 0) throw Error("max_penalty must be positive");
  return std::clamp(100.0 * (1.0 - penalty / max_penalty), 0.0, 100.0);
}

QualityScore score_segment(const Segment& seg, PenaltyPolicy policy, const WeightTable& weights,
                           std::optional<AnnotationSource> source) {
  QualityScore q;
  q.penalty = segment_penalty(seg, policy, weights, source);
  q.normalized = normalize(q.penalty, weights.max_penalty);
  return q;
}

}  // namespace mtpe
