#include "mtpe/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mtpe/error.hpp"
#include "mtpe/sampling.hpp"
#include "mtpe/text.hpp"

namespace mtpe::analysis {

using nlohmann::json;
using metrics::format_score;

namespace {

std::string category_key(const ErrorAnnotation& e) {
  return e.category ? std::string(to_string(e.category->major)) : "Untyped";
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Resolution

std::size_t ResolutionReport::matched() const {
  std::size_t n = 0;
  for (const auto& [_, c] : per_category) n += c.matched;
  return n;
}

std::size_t ResolutionReport::no_match() const {
  std::size_t n = 0;
  for (const auto& [_, c] : per_category) n += c.no_match;
  return n;
}

json ResolutionReport::to_json() const {
  json cats = json::object();
  for (const auto& [name, c] : per_category)
    cats[name] = {{"matched", c.matched}, {"no_match", c.no_match}};
  return {{"condition", condition},
          {"source", to_string(source)},
          {"segments", segments},
          {"skipped_failed", skipped_failed},
          {"annotations", annotations()},
          {"matched", matched()},
          {"no_match", no_match()},
          {"per_category", cats}};
}

std::string ResolutionReport::to_table() const {
  std::ostringstream os;
  os << "condition: " << (condition.empty() ? "-" : condition) << "  segments: " << segments
     << "  annotations: " << annotations() << "\n";
  os << pad("category", 20) << pad("matched", 10) << "no match\n";
  for (const auto& [name, c] : per_category) {
    if (c.total() == 0) continue;
    os << pad(name, 20) << pad(std::to_string(c.matched), 10) << c.no_match << "\n";
  }
  os << pad("total", 20) << pad(std::to_string(matched()), 10) << no_match() << "\n";
  return os.str();
}

std::string ResolutionReport::to_csv() const {
  std::string out = "condition,category,matched,no_match\n";
  for (const auto& [name, c] : per_category) {
    out += condition + "," + name + "," + std::to_string(c.matched) + "," +
           std::to_string(c.no_match) + "\n";
  }
  return out;
}

bool span_present(std::string_view span, std::string_view output) {
  const std::string s = text::normalize_whitespace(span);
  if (s.empty()) return true;
  return text::normalize_whitespace(output).find(s) != std::string::npos;
}

ResolutionReport resolution_analysis(const Corpus& corpus, std::span<const llm::PostEditRecord> edits,
                                     std::string condition, AnnotationSource source) {
  ResolutionReport r;
  r.condition = std::move(condition);
  r.source = source;
  for (MajorCategory c : {MajorCategory::Accuracy, MajorCategory::Fluency,
                          MajorCategory::LocalConvention, MajorCategory::Terminology,
                          MajorCategory::Style, MajorCategory::SourceError,
                          MajorCategory::NonTranslation, MajorCategory::Other})
    r.per_category[std::string(to_string(c))];

  for (const auto& rec : edits) {
    const Segment* seg = corpus.find(rec.segment_id);
    if (seg == nullptr) throw Error("edit record refers to unknown segment " + rec.segment_id);
    if (!rec.extracted) {
      ++r.skipped_failed;
      continue;
    }
    ++r.segments;
    for (const auto& e : seg->errors) {
      if (e.source != source || !e.is_error()) continue;
      CategoryCounts& c = r.per_category[category_key(e)];
      if (span_present(e.span, *rec.extracted)) ++c.matched;
      else ++c.no_match;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Agreement

AgreementRule AgreementRule::parse(std::string_view spec) {
  std::string s = text::to_lower(text::trim(spec));
  if (s == "exact") return exact();
  if (text::starts_with(s, "jaccard")) {
    std::string rest = s.substr(7);
    if (rest.empty()) return jaccard(0.5);
    if (rest[0] != ':' && rest[0] != '=') throw ConfigError("bad agreement rule '" + std::string(spec) + "'");
    double theta = 0;
    try {
      theta = std::stod(rest.substr(1));
    } catch (const std::exception&) {
      throw ConfigError("bad jaccard threshold in '" + std::string(spec) + "'");
    }
    if (theta <= 0.0 || theta > 1.0) throw ConfigError("jaccard threshold must be in (0, 1]");
    return jaccard(theta);
  }
  throw ConfigError("unknown agreement rule '" + std::string(spec) + "'");
}

std::string AgreementRule::id() const {
  if (kind == Kind::Exact) return "exact";
  char buf[32];
  std::snprintf(buf, sizeof buf, "jaccard:%.2f", theta);
  return buf;
}

double token_jaccard(std::string_view a, std::string_view b) {
  auto ta = text::split_whitespace(a);
  auto tb = text::split_whitespace(b);
  std::set<std::string> sa(ta.begin(), ta.end());
  std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

bool AgreementRule::match(std::string_view a, std::string_view b) const {
  if (kind == Kind::Exact) return text::normalize_whitespace(a) == text::normalize_whitespace(b);
  return token_jaccard(a, b) >= theta;
}

json AgreementReport::to_json() const {
  json j = {{"source_a", to_string(source_a)},
            {"source_b", to_string(source_b)},
            {"rule", rule},
            {"overlap", overlap},
            {"sample_size", sample_size}};
  j["seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

std::string AgreementReport::to_table() const {
  std::ostringstream os;
  os << to_string(source_a) << " vs " << to_string(source_b) << " (" << rule << "): " << overlap
     << "/" << sample_size << "\n";
  return os.str();
}

AgreementReport agreement(const Corpus& corpus, AnnotationSource a, AnnotationSource b,
                          const AgreementOptions& opts) {
  // Only segments where both sources marked at least one span are compared.
  auto has_span = [](const Segment& seg, AnnotationSource src) {
    return std::any_of(seg.errors.begin(), seg.errors.end(),
                       [&](const ErrorAnnotation& e) { return e.source == src && e.is_error(); });
  };
  std::vector<const Segment*> eligible;
  for (const auto& seg : corpus) {
    if (has_span(seg, a) && has_span(seg, b)) eligible.push_back(&seg);
  }
  if (eligible.empty())
    throw Error(std::string("no segment carries both ") + std::string(to_string(a)) + " and " +
                std::string(to_string(b)) + " error spans");

  AgreementReport r;
  r.source_a = a;
  r.source_b = b;
  r.rule = opts.rule.id();
  if (opts.sample) {
    if (*opts.sample > eligible.size())
      throw Error("agreement sample of " + std::to_string(*opts.sample) + " exceeds the " +
                  std::to_string(eligible.size()) + " eligible segments");
    SeededRng rng(opts.seed);
    std::vector<const Segment*> picked;
    for (std::size_t i : sample_without_replacement(eligible.size(), *opts.sample, rng))
      picked.push_back(eligible[i]);
    eligible = std::move(picked);
    r.seed = opts.seed;
  }
  r.sample_size = eligible.size();

  for (const Segment* seg : eligible) {
    bool hit = false;
    for (const auto& ea : seg->errors) {
      if (ea.source != a || !ea.is_error()) continue;
      for (const auto& eb : seg->errors) {
        if (eb.source != b || !eb.is_error()) continue;
        if (opts.rule.match(ea.span, eb.span)) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) ++r.overlap;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Metric comparison

json EditComparison::to_json() const {
  return {{"segments", segments},
          {"failed", failed},
          {"original", original.to_json()},
          {"edited", edited.to_json()},
          {"delta", {{"bleu", std::stod(format_score(bleu_delta()))},
                     {"ter", std::stod(format_score(ter_delta()))}}},
          {"significance", json::array({bleu_significance.to_json(), ter_significance.to_json()})}};
}

std::string EditComparison::to_table() const {
  std::ostringstream os;
  os << pad("", 10) << pad("original", 10) << pad("edited", 10) << pad("delta", 10) << "p\n";
  os << pad("BLEU", 10) << pad(format_score(original.bleu), 10) << pad(format_score(edited.bleu), 10)
     << pad(format_score(bleu_delta()), 10) << format_score(bleu_significance.p_value) << "\n";
  os << pad("TER", 10) << pad(format_score(original.ter), 10) << pad(format_score(edited.ter), 10)
     << pad(format_score(ter_delta()), 10) << format_score(ter_significance.p_value) << "\n";
  os << "segments: " << segments << "  failed: " << failed << "\n";
  return os.str();
}

std::string EditComparison::segment_tsv() const {
  std::string out = "id\tbleu_original\tbleu_edited\tter_original\tter_edited\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i] + "\t" + format_score(original.segment_bleu[i]) + "\t" +
           format_score(edited.segment_bleu[i]) + "\t" + format_score(original.segment_ter[i]) +
           "\t" + format_score(edited.segment_ter[i]) + "\n";
  }
  return out;
}

namespace {

EditComparison compare_impl(const Corpus& corpus, std::span<const llm::PostEditRecord> edits,
                            const CompareOptions& opts, bool no_error_only) {
  std::vector<metrics::TokenizedPair> before;
  std::vector<metrics::TokenizedPair> after;
  EditComparison c;
  for (const auto& rec : edits) {
    const Segment* seg = corpus.find(rec.segment_id);
    if (seg == nullptr) throw Error("edit record refers to unknown segment " + rec.segment_id);
    if (no_error_only && seg->has_error()) continue;
    if (!seg->reference) throw Error("segment " + seg->id + " has no reference");
    const std::string& out = rec.extracted ? *rec.extracted : seg->hypothesis;
    if (!rec.extracted) ++c.failed;
    before.push_back(metrics::tokenize_pair(seg->hypothesis, *seg->reference, opts.tokenizer));
    after.push_back(metrics::tokenize_pair(out, *seg->reference, opts.tokenizer));
    c.ids.push_back(seg->id);
  }
  if (before.empty()) throw Error("no segments to compare");
  c.segments = before.size();
  c.original = metrics::evaluate(before, opts.ter, opts.tokenizer);
  c.edited = metrics::evaluate(after, opts.ter, opts.tokenizer);
  if (c.segments >= 2) {
    c.bleu_significance = metrics::paired_bootstrap(c.edited.segment_bleu, c.original.segment_bleu,
                                                    opts.resamples, opts.seed, "bleu");
    c.ter_significance = metrics::paired_bootstrap(c.edited.segment_ter, c.original.segment_ter,
                                                   opts.resamples, opts.seed, "ter");
  } else {
    c.bleu_significance = {"bleu", c.bleu_delta(), 1.0, 0, opts.seed};
    c.ter_significance = {"ter", c.ter_delta(), 1.0, 0, opts.seed};
  }
  return c;
}

}  // namespace

EditComparison compare_edits(const Corpus& corpus, std::span<const llm::PostEditRecord> edits,
                             const CompareOptions& opts) {
  return compare_impl(corpus, edits, opts, false);
}

EditComparison overedit_audit(const Corpus& corpus, std::span<const llm::PostEditRecord> edits,
                              const CompareOptions& opts) {
  return compare_impl(corpus, edits, opts, true);
}

}  // namespace mtpe::analysis
