#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mtpe {

/// Language pair. Names are English language names; prompts always use them.
struct LangPair {
  std::string src;   // "Chinese"
  std::string tgt;   // "English"
  std::string code;  // "zh-en"

  /// Builds a pair from a code such as "en-de". Throws ConfigError for
  /// unknown language codes or identical sides.
  static LangPair from_code(std::string_view code);

  friend bool operator==(const LangPair&, const LangPair&) = default;
};

/// English name for an ISO 639-1 code, empty when unknown.
std::string language_name(std::string_view iso_code);

enum class Severity { Critical, Major, Minor, Neutral };

/// Case-insensitive. "No-error" maps to Neutral. Throws Error on unknown labels.
Severity parse_severity(std::string_view label);
std::string_view to_string(Severity s);
/// Lowercase word used in rendered feedback ("major").
std::string_view severity_word(Severity s);

enum class MajorCategory {
  Accuracy,
  Fluency,
  LocalConvention,
  Terminology,
  Style,
  SourceError,
  NonTranslation,
  Other,
};

std::string_view to_string(MajorCategory c);

struct ErrorCategory {
  MajorCategory major = MajorCategory::Other;
  std::optional<std::string> sub;  // canonical subcategory name from the hierarchy
  std::string raw;                 // label as it appeared in the input

  friend bool operator==(const ErrorCategory&, const ErrorCategory&) = default;
};

/// Parses "Major/Sub" labels against the MQM hierarchy. Accepts the spelling
/// variants used in WMT releases ("Locale convention", "Non-translation!",
/// "Source issue"). Throws Error on anything outside the hierarchy.
ErrorCategory parse_mqm_category(std::string_view label);

/// Like parse_mqm_category, but labels outside the hierarchy become
/// Other with the raw label kept. Used for automatic annotators.
ErrorCategory parse_category_lenient(std::string_view label);

enum class AnnotationSource { MQM, InstructScore, XComet, DEMETR };

std::string_view to_string(AnnotationSource s);
AnnotationSource parse_annotation_source(std::string_view label);

struct ErrorAnnotation {
  std::string span;
  std::optional<ErrorCategory> category;  // absent for xCOMET
  Severity severity = Severity::Minor;
  AnnotationSource source = AnnotationSource::MQM;
  std::optional<std::size_t> offset;  // byte offset of span in the raw hypothesis
  std::string rater;

  bool is_error() const { return severity != Severity::Neutral; }

  friend bool operator==(const ErrorAnnotation&, const ErrorAnnotation&) = default;
};

/// Corpus the segment was drawn from; drives dataset construction.
enum class Origin { MQM, DEMETR };

std::string_view to_string(Origin o);
Origin parse_origin(std::string_view label);

struct Segment {
  std::string id;
  LangPair lang;
  std::string system;
  std::string source;
  std::string hypothesis;  // raw; normalized only for span checks
  std::optional<std::string> reference;
  std::vector<ErrorAnnotation> errors;
  std::vector<AnnotationSource> annotated_by;
  Origin origin = Origin::MQM;

  /// True when at least one non-Neutral annotation exists (from `source`
  /// only, when given).
  bool has_error(std::optional<AnnotationSource> source = std::nullopt) const;

  bool annotated_with(AnnotationSource source) const;

  std::vector<ErrorAnnotation> errors_from(AnnotationSource source) const;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Ordered segments with unique ids.
class Corpus {
 public:
  Corpus() = default;

  /// Appends a segment. Throws Error if the id is already present.
  void add(Segment seg);

  const Segment* find(std::string_view id) const;
  Segment* find(std::string_view id);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  bool empty() const { return segments_.empty(); }
  auto begin() const { return segments_.begin(); }
  auto end() const { return segments_.end(); }

  std::vector<std::string> provenance;

 private:
  std::vector<Segment> segments_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Multi-rater handling at load time.
enum class RaterFilter { KeepAll, FirstRater };

struct MqmParseOptions {
  RaterFilter raters = RaterFilter::KeepAll;
};

/// Reads a WMT MQM TSV file (one row per annotation, spans marked inline
/// with <v>...</v> in the target column).
Corpus parse_mqm_tsv(const std::filesystem::path& path, const LangPair& lang,
                     const MqmParseOptions& opts = {});
Corpus parse_mqm_tsv_text(std::string_view content, const LangPair& lang,
                          const MqmParseOptions& opts = {}, const std::string& name = "");

/// Attaches line-delimited JSON annotations {id, spans:[{text, type?, severity}]}
/// from an automatic annotator. Existing annotations of other sources are kept.
Corpus parse_external_annotations(const std::filesystem::path& path, AnnotationSource source,
                                  const Corpus& corpus);
Corpus parse_external_annotations_text(std::string_view content, AnnotationSource source,
                                       const Corpus& corpus, const std::string& name = "");

/// Reads DEMETR records converted to line-delimited JSON:
/// {id, lang_tag, source, hypothesis, reference, severity, category?, span?}.
/// X-En directions for German and Russian are relabeled en-de / en-ru.
Corpus parse_demetr_jsonl(const std::filesystem::path& path);
Corpus parse_demetr_jsonl_text(std::string_view content, const std::string& name = "");

struct SegmentFilter {
  enum class Kind { HasError, NoError, LangPair, System };
  Kind kind = Kind::HasError;
  std::string value;

  static SegmentFilter has_error() { return {Kind::HasError, {}}; }
  static SegmentFilter no_error() { return {Kind::NoError, {}}; }
  static SegmentFilter lang_pair(std::string code) { return {Kind::LangPair, std::move(code)}; }
  static SegmentFilter system(std::string name) { return {Kind::System, std::move(name)}; }

  bool matches(const Segment& seg) const;
};

Corpus filter_segments(const Corpus& corpus, const SegmentFilter& filter);

struct DedupResult {
  Corpus corpus;
  std::size_t removed = 0;
};

/// Drops segments whose trimmed source matches a test source or whose
/// trimmed hypothesis matches a test hypothesis.
DedupResult dedup_against(const Corpus& corpus, const Corpus& test);

struct LangStats {
  std::size_t segments = 0;
  std::size_t errors = 0;
  std::map<std::string, std::size_t> by_category;
  std::map<std::string, std::size_t> by_severity;
  double mean_span_length = 0.0;
  double mean_errors_per_segment = 0.0;
};

struct StatsReport {
  std::map<std::string, LangStats> per_lang;
};

/// Counts non-Neutral annotations (from `source` only, when given).
StatsReport corpus_stats(const Corpus& corpus,
                         std::optional<AnnotationSource> source = std::nullopt);

nlohmann::json to_json(const StatsReport& report);

/// Canonical corpus form: one Segment JSON object per line.
nlohmann::ordered_json segment_to_json(const Segment& seg);
Segment segment_from_json(const nlohmann::json& j);
void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);
std::string corpus_to_jsonl(const Corpus& corpus);
Corpus read_corpus_jsonl(const std::filesystem::path& path);
Corpus corpus_from_jsonl(std::string_view content, const std::string& name = "");

}  // namespace mtpe
