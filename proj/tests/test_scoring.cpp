#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "mtpe/error.hpp"
#include "mtpe/scoring.hpp"

using namespace mtpe;

namespace {

ErrorAnnotation ann(const char* category, Severity sev, const char* rater = "r1") {
  ErrorAnnotation a;
  a.span = "x";
  a.category = parse_mqm_category(category);
  a.severity = sev;
  a.rater = rater;
  return a;
}

Segment with(std::vector<ErrorAnnotation> errors) {
  Segment s;
  s.id = "s";
  s.lang = LangPair::from_code("en-de");
  s.source = "a";
  s.hypothesis = "x";
  s.errors = std::move(errors);
  return s;
}

}  // namespace

TEST(Weights, DefaultTable) {
  WeightTable w;
  EXPECT_EQ(w.weight(ann("Non-translation", Severity::Major)), 25.0);
  EXPECT_EQ(w.weight(ann("Accuracy/Mistranslation", Severity::Major)), 5.0);
  EXPECT_EQ(w.weight(ann("Fluency/Punctuation", Severity::Minor)), 0.1);
  EXPECT_EQ(w.weight(ann("Fluency/Grammar", Severity::Minor)), 1.0);
  EXPECT_EQ(w.weight(ann("Accuracy/Omission", Severity::Neutral)), 0.0);
  EXPECT_EQ(w.weight(ann("Non-translation", Severity::Critical)), 25.0);
  EXPECT_EQ(w.weight(ann("Style/Awkward", Severity::Critical)), 5.0);
}

TEST(Weights, OverridesFromJson) {
  WeightTable w = WeightTable::from_json(nlohmann::json{{"major/other", 3.75}, {"critical/other", 10}});
  EXPECT_EQ(w.weight(ann("Accuracy/Mistranslation", Severity::Major)), 3.75);
  EXPECT_EQ(w.weight(ann("Accuracy/Mistranslation", Severity::Critical)), 10.0);
  EXPECT_EQ(w.weight(ann("Fluency/Grammar", Severity::Minor)), 1.0);
  EXPECT_THROW(WeightTable::from_json(nlohmann::json{{"major/whatever", 1}}), Error);
}

TEST(Penalty, Examples) {
  EXPECT_EQ(segment_penalty(with({ann("Accuracy/Mistranslation", Severity::Major)}), PenaltyPolicy::Average), 5.0);
  EXPECT_EQ(segment_penalty(with({ann("Fluency/Punctuation", Severity::Minor)}), PenaltyPolicy::Average), 0.1);
  EXPECT_EQ(segment_penalty(with({}), PenaltyPolicy::Average), 0.0);
}

TEST(Penalty, AveragesOverRaters) {
  Segment s = with({ann("Accuracy/Mistranslation", Severity::Major, "r1"),
                    ann("Fluency/Grammar", Severity::Minor, "r1"),
                    ann("Fluency/Grammar", Severity::Minor, "r2")});
  EXPECT_DOUBLE_EQ(segment_penalty(s, PenaltyPolicy::Average), 3.5);
  EXPECT_DOUBLE_EQ(segment_penalty(s, PenaltyPolicy::KeepAll), 7.0);
}

TEST(Normalize, EndpointsAndLinearity) {
  EXPECT_EQ(normalize(0.0), 100.0);
  EXPECT_EQ(normalize(25.0), 0.0);
  EXPECT_EQ(normalize(5.0), 80.0);
  EXPECT_EQ(normalize(60.0), 0.0);
  EXPECT_THROW(normalize(-1.0), Error);
}

TEST(Normalize, RoundsHalfAwayFromZero) {
  EXPECT_EQ((QualityScore{0, 84.5}.rounded()), 85);
  EXPECT_EQ((QualityScore{0, 84.49}.rounded()), 84);
  EXPECT_EQ((QualityScore{0, 0.5}.rounded()), 1);
}

TEST(Properties, MonotoneAndOrderInvariant) {
  const char* cats[] = {"Accuracy/Mistranslation", "Fluency/Punctuation", "Fluency/Grammar",
                        "Non-translation", "Style/Awkward"};
  const Severity sevs[] = {Severity::Major, Severity::Minor, Severity::Neutral, Severity::Critical};
  std::mt19937 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ErrorAnnotation> errs;
    const int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i)
      errs.push_back(ann(cats[rng() % 5], sevs[rng() % 4], (rng() % 2) ? "r1" : "r2"));
    Segment s = with(errs);
    const double base = score_segment(s, PenaltyPolicy::KeepAll).normalized;

    std::vector<ErrorAnnotation> shuffled = errs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(score_segment(with(shuffled), PenaltyPolicy::KeepAll).normalized, base);
    EXPECT_EQ(score_segment(with(shuffled), PenaltyPolicy::Average).normalized,
              score_segment(s, PenaltyPolicy::Average).normalized);

    std::vector<ErrorAnnotation> more = errs;
    more.push_back(ann(cats[rng() % 5], rng() % 2 ? Severity::Major : Severity::Minor));
    EXPECT_LE(score_segment(with(more), PenaltyPolicy::KeepAll).normalized, base);
  }
  for (double p = 0.0; p < 30.0; p += 0.37) EXPECT_GE(normalize(p), normalize(p + 0.37));
}
