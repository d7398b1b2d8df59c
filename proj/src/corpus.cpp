#include "mtpe/corpus.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include "mtpe/error.hpp"
#include "mtpe/jsonl.hpp"
#include "mtpe/text.hpp"

namespace mtpe {

namespace {

struct LangName {
  std::string_view code;
  std::string_view name;
};

constexpr std::array<LangName, 20> kLanguages{{
    {"en", "English"},  {"de", "German"},   {"zh", "Chinese"},   {"ru", "Russian"},
    {"ja", "Japanese"}, {"fr", "French"},   {"es", "Spanish"},   {"it", "Italian"},
    {"pt", "Portuguese"}, {"cs", "Czech"},  {"uk", "Ukrainian"}, {"hr", "Croatian"},
    {"pl", "Polish"},   {"nl", "Dutch"},    {"ko", "Korean"},    {"hi", "Hindi"},
    {"ta", "Tamil"},    {"lt", "Lithuanian"}, {"et", "Estonian"}, {"he", "Hebrew"},
}};

struct SubcategoryTable {
  MajorCategory major;
  std::string_view name;
  std::vector<std::string_view> aliases;
  std::vector<std::string_view> subs;
};

const std::vector<SubcategoryTable>& hierarchy() {
  static const std::vector<SubcategoryTable> table{
      {MajorCategory::Accuracy,
       "Accuracy",
       {"accuracy"},
       {"Addition", "Omission", "Mistranslation", "Untranslated text"}},
      {MajorCategory::Fluency,
       "Fluency",
       {"fluency"},
       {"Character Encoding", "Grammar", "Inconsistency", "Punctuation", "Register", "Spelling"}},
      {MajorCategory::LocalConvention,
       "Local convention",
       {"local convention", "locale convention", "localconvention"},
       {"Address format", "Currency format", "Date format", "Name format", "Telephone format",
        "Time format"}},
      {MajorCategory::Terminology,
       "Terminology",
       {"terminology"},
       {"Inappropriate for context", "Inconsistent use"}},
      {MajorCategory::Style, "Style", {"style"}, {"Awkward"}},
      {MajorCategory::SourceError, "Source error", {"source error", "source issue"}, {}},
      {MajorCategory::NonTranslation,
       "Non-translation",
       {"non-translation", "non-translation!", "nontranslation"},
       {}},
      {MajorCategory::Other, "Other", {"other"}, {}},
  };
  return table;
}

const SubcategoryTable* find_major(std::string_view label) {
  std::string lower = text::to_lower(text::trim(label));
  for (const auto& row : hierarchy()) {
    for (auto alias : row.aliases) {
      if (lower == alias) return &row;
    }
  }
  return nullptr;
}

std::optional<ErrorCategory> try_parse_category(std::string_view label) {
  std::string_view trimmed = text::trim(label);
  std::size_t slash = trimmed.find('/');
  std::string_view major_part = trimmed.substr(0, slash);
  const SubcategoryTable* row = find_major(major_part);
  if (row == nullptr) return std::nullopt;
  ErrorCategory cat{row->major, std::nullopt, std::string(label)};
  if (slash == std::string_view::npos) return cat;
  std::string_view sub = text::trim(trimmed.substr(slash + 1));
  if (sub.empty()) return cat;
  for (auto known : row->subs) {
    if (text::iequals(known, sub)) {
      cat.sub = std::string(known);
      return cat;
    }
  }
  return std::nullopt;
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + 1))
    ++n;
  return n;
}

}  // namespace

std::string language_name(std::string_view iso_code) {
  std::string lower = text::to_lower(iso_code);
  for (const auto& l : kLanguages) {
    if (l.code == lower) return std::string(l.name);
  }
  return {};
}

LangPair LangPair::from_code(std::string_view code) {
  std::string lower = text::to_lower(text::trim(code));
  std::size_t dash = lower.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == lower.size())
    throw ConfigError("language pair must look like 'en-de', got '" + std::string(code) + "'");
  std::string src_code = lower.substr(0, dash);
  std::string tgt_code = lower.substr(dash + 1);
  if (src_code == tgt_code) throw ConfigError("language pair with identical sides: " + lower);
  LangPair lp{language_name(src_code), language_name(tgt_code), lower};
  if (lp.src.empty()) throw ConfigError("unknown language code '" + src_code + "'");
  if (lp.tgt.empty()) throw ConfigError("unknown language code '" + tgt_code + "'");
  return lp;
}

Severity parse_severity(std::string_view label) {
  std::string lower = text::to_lower(text::trim(label));
  if (lower == "critical") return Severity::Critical;
  if (lower == "major") return Severity::Major;
  if (lower == "minor") return Severity::Minor;
  if (lower == "neutral" || lower == "no-error" || lower == "no error") return Severity::Neutral;
  throw Error("unknown severity '" + std::string(label) + "'");
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Critical: return "Critical";
    case Severity::Major: return "Major";
    case Severity::Minor: return "Minor";
    case Severity::Neutral: return "Neutral";
  }
  return "Neutral";
}

std::string_view severity_word(Severity s) {
  switch (s) {
    case Severity::Critical: return "critical";
    case Severity::Major: return "major";
    case Severity::Minor: return "minor";
    case Severity::Neutral: return "neutral";
  }
  return "neutral";
}

std::string_view to_string(MajorCategory c) {
  for (const auto& row : hierarchy()) {
    if (row.major == c) return row.name;
  }
  return "Other";
}

ErrorCategory parse_mqm_category(std::string_view label) {
  auto cat = try_parse_category(label);
  if (!cat) throw Error("category '" + std::string(label) + "' is not in the MQM hierarchy");
  return *cat;
}

ErrorCategory parse_category_lenient(std::string_view label) {
  if (auto cat = try_parse_category(label)) return *cat;
  return ErrorCategory{MajorCategory::Other, std::nullopt, std::string(label)};
}

std::string_view to_string(AnnotationSource s) {
  switch (s) {
    case AnnotationSource::MQM: return "MQM";
    case AnnotationSource::InstructScore: return "InstructScore";
    case AnnotationSource::XComet: return "xCOMET";
    case AnnotationSource::DEMETR: return "DEMETR";
  }
  return "MQM";
}

AnnotationSource parse_annotation_source(std::string_view label) {
  std::string lower = text::to_lower(text::trim(label));
  if (lower == "mqm") return AnnotationSource::MQM;
  if (lower == "instructscore") return AnnotationSource::InstructScore;
  if (lower == "xcomet") return AnnotationSource::XComet;
  if (lower == "demetr") return AnnotationSource::DEMETR;
  throw ConfigError("unknown annotation source '" + std::string(label) + "'");
}

std::string_view to_string(Origin o) { return o == Origin::MQM ? "MQM" : "DEMETR"; }

Origin parse_origin(std::string_view label) {
  std::string lower = text::to_lower(text::trim(label));
  if (lower == "mqm") return Origin::MQM;
  if (lower == "demetr") return Origin::DEMETR;
  throw Error("unknown origin '" + std::string(label) + "'");
}

bool Segment::has_error(std::optional<AnnotationSource> src) const {
  return std::any_of(errors.begin(), errors.end(), [&](const ErrorAnnotation& e) {
    return e.is_error() && (!src || e.source == *src);
  });
}

bool Segment::annotated_with(AnnotationSource src) const {
  return std::find(annotated_by.begin(), annotated_by.end(), src) != annotated_by.end();
}

std::vector<ErrorAnnotation> Segment::errors_from(AnnotationSource src) const {
  std::vector<ErrorAnnotation> out;
  std::copy_if(errors.begin(), errors.end(), std::back_inserter(out),
               [&](const ErrorAnnotation& e) { return e.source == src; });
  return out;
}

void Corpus::add(Segment seg) {
  if (index_.count(seg.id) != 0) throw Error("duplicate segment id '" + seg.id + "'");
  index_.emplace(seg.id, segments_.size());
  segments_.push_back(std::move(seg));
}

const Segment* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &segments_[it->second];
}

Segment* Corpus::find(std::string_view id) {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &segments_[it->second];
}

// ---------------------------------------------------------------------------
// MQM TSV

namespace {

struct MarkedText {
  std::string plain;
  std::optional<std::string> span;
  std::optional<std::size_t> offset;
};

// Strips one <v>...</v> pair. Nested, repeated or unbalanced markers are errors.
MarkedText strip_markers(std::string_view s, const std::string& file, std::size_t line,
                         std::string_view column) {
  static constexpr std::string_view kOpen = "<v>";
  static constexpr std::string_view kClose = "</v>";
  MarkedText out;
  std::size_t open = s.find(kOpen);
  std::size_t close = s.find(kClose);
  if (open == std::string_view::npos && close == std::string_view::npos) {
    out.plain = std::string(s);
    return out;
  }
  if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    throw ParseError(file, line, "unbalanced span markers in " + std::string(column));
  if (count_occurrences(s, kOpen) != 1 || count_occurrences(s, kClose) != 1)
    throw ParseError(file, line, "more than one marked span in " + std::string(column));
  out.plain.append(s.substr(0, open));
  out.offset = out.plain.size();
  out.span = std::string(s.substr(open + kOpen.size(), close - open - kOpen.size()));
  out.plain.append(*out.span);
  out.plain.append(s.substr(close + kClose.size()));
  return out;
}

bool is_no_error_label(std::string_view label) {
  std::string lower = text::to_lower(text::trim(label));
  return lower == "no-error" || lower == "no error" || lower.empty();
}

}  // namespace

Corpus parse_mqm_tsv(const std::filesystem::path& path, const LangPair& lang,
                     const MqmParseOptions& opts) {
  return parse_mqm_tsv_text(io::read_file(path), lang, opts, path.string());
}

Corpus parse_mqm_tsv_text(std::string_view content, const LangPair& lang,
                          const MqmParseOptions& opts, const std::string& name) {
  std::vector<std::string> lines = text::split(content, '\n');
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  }
  std::size_t header_idx = 0;
  while (header_idx < lines.size() && text::trim(lines[header_idx]).empty()) ++header_idx;
  if (header_idx == lines.size()) throw ParseError(name, 0, "empty MQM file");

  std::vector<std::string> header = text::split(lines[header_idx], '\t');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i)
    col[text::to_lower(text::trim(header[i]))] = i;
  for (const char* required : {"system", "rater", "source", "target", "category", "severity"}) {
    if (col.count(required) == 0)
      throw ParseError(name, header_idx + 1, std::string("missing column '") + required + "'");
  }
  auto optional_col = [&](std::initializer_list<const char*> names) -> std::optional<std::size_t> {
    for (const char* n : names) {
      if (auto it = col.find(n); it != col.end()) return it->second;
    }
    return std::nullopt;
  };
  const auto doc_col = optional_col({"doc"});
  const auto seg_col = optional_col({"seg_id", "segment_id", "globalsegid"});
  const auto ref_col = optional_col({"reference", "ref"});

  Corpus corpus;
  corpus.provenance.push_back(name.empty() ? std::string("<mqm>") : name);
  std::map<std::pair<std::string, std::string>, std::string> ids_by_source;
  std::map<std::string, std::string> first_rater;

  for (std::size_t li = header_idx + 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (text::trim(lines[li]).empty()) continue;
    std::vector<std::string> f = text::split(lines[li], '\t');
    if (f.size() != header.size())
      throw ParseError(name, line_no,
                       "expected " + std::to_string(header.size()) + " columns, found " +
                           std::to_string(f.size()));

    const std::string& system = f[col["system"]];
    const std::string& rater = f[col["rater"]];
    // Source-side markers flag source errors; the span lives in the source so
    // it is dropped rather than attached to the hypothesis.
    MarkedText src = strip_markers(f[col["source"]], name, line_no, "source");
    MarkedText tgt = strip_markers(f[col["target"]], name, line_no, "target");
    const std::string& category_label = f[col["category"]];
    const std::string& severity_label = f[col["severity"]];

    Severity severity;
    try {
      severity = parse_severity(severity_label);
    } catch (const Error& e) {
      throw ParseError(name, line_no, e.what());
    }

    std::string id;
    if (doc_col || seg_col) {
      id = system;
      if (doc_col) id += "/" + f[*doc_col];
      if (seg_col) id += "/" + f[*seg_col];
    } else {
      auto key = std::make_pair(system, src.plain);
      auto it = ids_by_source.find(key);
      if (it == ids_by_source.end()) {
        it = ids_by_source
                 .emplace(key, system + "/" + std::to_string(ids_by_source.size() + 1))
                 .first;
      }
      id = it->second;
    }

    Segment* seg = corpus.find(id);
    if (seg == nullptr) {
      Segment fresh;
      fresh.id = id;
      fresh.lang = lang;
      fresh.system = system;
      fresh.source = src.plain;
      fresh.hypothesis = tgt.plain;
      if (ref_col && !text::trim(f[*ref_col]).empty()) fresh.reference = f[*ref_col];
      fresh.annotated_by.push_back(AnnotationSource::MQM);
      fresh.origin = Origin::MQM;
      corpus.add(std::move(fresh));
      seg = corpus.find(id);
      first_rater[id] = rater;
    } else if (seg->hypothesis != tgt.plain) {
      throw ParseError(name, line_no, "target text differs from earlier rows of segment " + id);
    }

    if (opts.raters == RaterFilter::FirstRater && first_rater[id] != rater) continue;

    ErrorAnnotation ann;
    ann.severity = severity;
    ann.source = AnnotationSource::MQM;
    ann.rater = rater;
    if (is_no_error_label(category_label)) {
      ann.severity = Severity::Neutral;
    } else {
      try {
        ann.category = parse_mqm_category(category_label);
      } catch (const Error& e) {
        throw ParseError(name, line_no, e.what());
      }
      if (tgt.span) {
        ann.span = *tgt.span;
        ann.offset = tgt.offset;
      }
    }
    seg->errors.push_back(std::move(ann));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Filtering, dedup, statistics

bool SegmentFilter::matches(const Segment& seg) const {
  switch (kind) {
    case Kind::HasError: return seg.has_error();
    case Kind::NoError: return !seg.has_error();
    case Kind::LangPair: return text::iequals(seg.lang.code, value);
    case Kind::System: return seg.system == value;
  }
  return false;
}

Corpus filter_segments(const Corpus& corpus, const SegmentFilter& filter) {
  Corpus out;
  out.provenance = corpus.provenance;
  for (const auto& seg : corpus) {
    if (filter.matches(seg)) out.add(seg);
  }
  return out;
}

DedupResult dedup_against(const Corpus& corpus, const Corpus& test) {
  std::unordered_set<std::string> sources;
  std::unordered_set<std::string> targets;
  for (const auto& seg : test) {
    sources.emplace(text::trim(seg.source));
    targets.emplace(text::trim(seg.hypothesis));
  }
  DedupResult result;
  result.corpus.provenance = corpus.provenance;
  for (const auto& seg : corpus) {
    if (sources.count(std::string(text::trim(seg.source))) != 0 ||
        targets.count(std::string(text::trim(seg.hypothesis))) != 0) {
      ++result.removed;
      continue;
    }
    result.corpus.add(seg);
  }
  return result;
}

StatsReport corpus_stats(const Corpus& corpus, std::optional<AnnotationSource> source) {
  StatsReport report;
  std::map<std::string, std::pair<std::size_t, std::size_t>> span_acc;  // total chars, count
  for (const auto& seg : corpus) {
    LangStats& st = report.per_lang[seg.lang.code];
    if (st.segments == 0) {
      for (const auto& row : hierarchy()) st.by_category[std::string(row.name)] = 0;
      st.by_category["Untyped"] = 0;
      for (Severity s : {Severity::Critical, Severity::Major, Severity::Minor})
        st.by_severity[std::string(to_string(s))] = 0;
    }
    ++st.segments;
    for (const auto& e : seg.errors) {
      if (!e.is_error() || (source && e.source != *source)) continue;
      ++st.errors;
      st.by_category[e.category ? std::string(to_string(e.category->major)) : "Untyped"]++;
      st.by_severity[std::string(to_string(e.severity))]++;
      std::string span = text::normalize_whitespace(e.span);
      if (!span.empty()) {
        auto& acc = span_acc[seg.lang.code];
        acc.first += text::utf8_length(span);
        acc.second += 1;
      }
    }
  }
  for (auto& [code, st] : report.per_lang) {
    auto& acc = span_acc[code];
    st.mean_span_length = acc.second == 0 ? 0.0 : double(acc.first) / double(acc.second);
    st.mean_errors_per_segment = st.segments == 0 ? 0.0 : double(st.errors) / double(st.segments);
  }
  return report;
}

}  // namespace mtpe
