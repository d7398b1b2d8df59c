#include <algorithm>

#include <nlohmann/json.hpp>

#include "mtpe/corpus.hpp"
#include "mtpe/error.hpp"
#include "mtpe/jsonl.hpp"
#include "mtpe/text.hpp"

namespace mtpe {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

MajorCategory parse_major_name(std::string_view name) {
  for (MajorCategory c :
       {MajorCategory::Accuracy, MajorCategory::Fluency, MajorCategory::LocalConvention,
        MajorCategory::Terminology, MajorCategory::Style, MajorCategory::SourceError,
        MajorCategory::NonTranslation, MajorCategory::Other}) {
    if (to_string(c) == name) return c;
  }
  throw Error("unknown major category '" + std::string(name) + "'");
}

ordered_json annotation_to_json(const ErrorAnnotation& e) {
  ordered_json j;
  j["span"] = e.span;
  j["offset"] = e.offset ? ordered_json(*e.offset) : ordered_json(nullptr);
  if (e.category) {
    j["category"] = {{"major", to_string(e.category->major)},
                     {"sub", e.category->sub ? ordered_json(*e.category->sub)
                                             : ordered_json(nullptr)},
                     {"raw", e.category->raw}};
  } else {
    j["category"] = nullptr;
  }
  j["severity"] = to_string(e.severity);
  j["source"] = to_string(e.source);
  j["rater"] = e.rater;
  return j;
}

ErrorAnnotation annotation_from_json(const json& j) {
  ErrorAnnotation e;
  e.span = j.at("span").get<std::string>();
  if (j.contains("offset") && !j["offset"].is_null()) e.offset = j["offset"].get<std::size_t>();
  if (j.contains("category") && !j["category"].is_null()) {
    const json& c = j["category"];
    ErrorCategory cat;
    cat.major = parse_major_name(c.at("major").get<std::string>());
    if (c.contains("sub") && !c["sub"].is_null()) cat.sub = c["sub"].get<std::string>();
    cat.raw = c.value("raw", std::string());
    e.category = std::move(cat);
  }
  e.severity = parse_severity(j.at("severity").get<std::string>());
  e.source = parse_annotation_source(j.at("source").get<std::string>());
  e.rater = j.value("rater", std::string());
  return e;
}

/// Finds the span in the raw hypothesis; falls back to a whitespace-normalized
/// comparison (offset unknown). Returns false when the span is absent.
bool bind_span(const std::string& hypothesis, ErrorAnnotation& ann) {
  if (ann.span.empty()) return true;
  if (std::size_t pos = hypothesis.find(ann.span); pos != std::string::npos) {
    ann.offset = pos;
    return true;
  }
  ann.offset.reset();
  return text::normalize_whitespace(hypothesis).find(text::normalize_whitespace(ann.span)) !=
         std::string::npos;
}

}  // namespace

ordered_json segment_to_json(const Segment& seg) {
  ordered_json j;
  j["id"] = seg.id;
  j["system"] = seg.system;
  j["lang"] = seg.lang.code;
  j["origin"] = to_string(seg.origin);
  j["source"] = seg.source;
  j["hypothesis"] = seg.hypothesis;
  j["reference"] = seg.reference ? ordered_json(*seg.reference) : ordered_json(nullptr);
  ordered_json by = ordered_json::array();
  for (auto s : seg.annotated_by) by.push_back(to_string(s));
  j["annotated_by"] = std::move(by);
  ordered_json errs = ordered_json::array();
  for (const auto& e : seg.errors) errs.push_back(annotation_to_json(e));
  j["errors"] = std::move(errs);
  return j;
}

Segment segment_from_json(const json& j) {
  Segment seg;
  seg.id = j.at("id").get<std::string>();
  seg.system = j.value("system", std::string());
  seg.lang = LangPair::from_code(j.at("lang").get<std::string>());
  seg.origin = parse_origin(j.value("origin", std::string("MQM")));
  seg.source = j.at("source").get<std::string>();
  seg.hypothesis = j.at("hypothesis").get<std::string>();
  if (j.contains("reference") && !j["reference"].is_null())
    seg.reference = j["reference"].get<std::string>();
  if (j.contains("annotated_by")) {
    for (const auto& s : j["annotated_by"])
      seg.annotated_by.push_back(parse_annotation_source(s.get<std::string>()));
  }
  if (j.contains("errors")) {
    for (const auto& e : j["errors"]) seg.errors.push_back(annotation_from_json(e));
  }
  if (text::trim(seg.source).empty()) throw Error("segment " + seg.id + ": empty source");
  if (text::trim(seg.hypothesis).empty()) throw Error("segment " + seg.id + ": empty hypothesis");
  return seg;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& seg : corpus) {
    out += io::dump_line(segment_to_json(seg));
    out += '\n';
  }
  return out;
}

void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  io::write_file_atomic(path, corpus_to_jsonl(corpus));
}

Corpus corpus_from_jsonl(std::string_view content, const std::string& name) {
  Corpus corpus;
  corpus.provenance.push_back(name.empty() ? std::string("<jsonl>") : name);
  io::for_each_json_line(content, name,
                         [&](std::size_t, const json& j) { corpus.add(segment_from_json(j)); });
  return corpus;
}

Corpus read_corpus_jsonl(const std::filesystem::path& path) {
  return corpus_from_jsonl(io::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// External annotators

Corpus parse_external_annotations(const std::filesystem::path& path, AnnotationSource source,
                                  const Corpus& corpus) {
  return parse_external_annotations_text(io::read_file(path), source, corpus, path.string());
}

Corpus parse_external_annotations_text(std::string_view content, AnnotationSource source,
                                       const Corpus& corpus, const std::string& name) {
  if (source == AnnotationSource::MQM)
    throw ConfigError("MQM annotations are read from the TSV release, not JSON");
  Corpus out = corpus;
  out.provenance.push_back(name.empty() ? std::string("<annotations>") : name);
  io::for_each_json_line(content, name, [&](std::size_t line, const json& j) {
    std::string id = j.at("id").get<std::string>();
    Segment* seg = out.find(id);
    if (seg == nullptr) throw ParseError(name, line, "unknown segment id '" + id + "'");

    std::vector<ErrorAnnotation> anns;
    for (const auto& s : j.at("spans")) {
      ErrorAnnotation ann;
      ann.source = source;
      ann.span = std::string(text::trim(s.at("text").get<std::string>()));
      ann.severity = parse_severity(s.at("severity").get<std::string>());
      const bool has_type = s.contains("type") && !s["type"].is_null();
      if (has_type) {
        if (source == AnnotationSource::XComet)
          throw ParseError(name, line, "xCOMET record for '" + id + "' carries an error type");
        ann.category = parse_category_lenient(s["type"].get<std::string>());
      }
      if (!bind_span(seg->hypothesis, ann) && ann.is_error())
        throw ParseError(name, line,
                         "span '" + ann.span + "' does not occur in hypothesis of '" + id + "'");
      anns.push_back(std::move(ann));
    }
    std::erase_if(seg->errors, [&](const ErrorAnnotation& e) { return e.source == source; });
    seg->errors.insert(seg->errors.end(), anns.begin(), anns.end());
    if (!seg->annotated_with(source)) seg->annotated_by.push_back(source);
  });
  return out;
}

// ---------------------------------------------------------------------------
// DEMETR

namespace {

LangPair demetr_lang(std::string_view tag) {
  std::string lower = text::to_lower(text::trim(tag));
  std::replace(lower.begin(), lower.end(), '_', '-');  // "de_en" as well as "de-en"
  if (lower.find('-') != std::string::npos) {
    // Full pair given; apply the same relabeling to X-en directions.
    LangPair lp = LangPair::from_code(lower);
    std::string src = lower.substr(0, lower.find('-'));
    if (lower.ends_with("-en") && (src == "de" || src == "ru")) return LangPair::from_code("en-" + src);
    return lp;
  }
  if (lower == "de" || lower == "ru") return LangPair::from_code("en-" + lower);
  return LangPair::from_code(lower + "-en");
}

}  // namespace

Corpus parse_demetr_jsonl(const std::filesystem::path& path) {
  return parse_demetr_jsonl_text(io::read_file(path), path.string());
}

Corpus parse_demetr_jsonl_text(std::string_view content, const std::string& name) {
  Corpus corpus;
  corpus.provenance.push_back(name.empty() ? std::string("<demetr>") : name);
  io::for_each_json_line(content, name, [&](std::size_t line, const json& j) {
    Segment seg;
    seg.id = "demetr/" + (j.at("id").is_string() ? j["id"].get<std::string>()
                                                  : std::to_string(j["id"].get<long long>()));
    seg.lang = demetr_lang(j.at("lang_tag").get<std::string>());
    seg.system = "demetr";
    seg.origin = Origin::DEMETR;
    seg.source = j.at("source").get<std::string>();
    seg.hypothesis = j.at("hypothesis").get<std::string>();
    if (j.contains("reference") && !j["reference"].is_null())
      seg.reference = j["reference"].get<std::string>();
    if (text::trim(seg.source).empty() || text::trim(seg.hypothesis).empty())
      throw ParseError(name, line, "empty source or hypothesis");

    ErrorAnnotation ann;
    ann.source = AnnotationSource::DEMETR;
    ann.severity = parse_severity(j.at("severity").get<std::string>());
    if (j.contains("category") && !j["category"].is_null())
      ann.category = parse_category_lenient(j["category"].get<std::string>());
    if (j.contains("span") && !j["span"].is_null())
      ann.span = std::string(text::trim(j["span"].get<std::string>()));
    if (!bind_span(seg.hypothesis, ann) && ann.is_error())
      throw ParseError(name, line, "span '" + ann.span + "' does not occur in hypothesis");
    seg.errors.push_back(std::move(ann));
    seg.annotated_by.push_back(AnnotationSource::DEMETR);
    corpus.add(std::move(seg));
  });
  return corpus;
}

json to_json(const StatsReport& report) {
  json out = json::object();
  for (const auto& [code, st] : report.per_lang) {
    out[code] = {{"segments", st.segments},
                 {"errors", st.errors},
                 {"by_category", st.by_category},
                 {"by_severity", st.by_severity},
                 {"mean_span_length", st.mean_span_length},
                 {"mean_errors_per_segment", st.mean_errors_per_segment}};
  }
  return out;
}

}  // namespace mtpe
