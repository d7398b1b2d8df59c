#include "mtpe/feedback.hpp"

#include <algorithm>
#include <cmath>

#include "mtpe/error.hpp"
#include "mtpe/jsonl.hpp"
#include "mtpe/sampling.hpp"
#include "mtpe/scoring.hpp"
#include "mtpe/text.hpp"

namespace mtpe {

std::string_view to_string(FeedbackKind k) {
  switch (k) {
    case FeedbackKind::Generic: return "generic";
    case FeedbackKind::Score: return "score";
    case FeedbackKind::FineGrained: return "fine-grained";
  }
  return "generic";
}

FeedbackKind parse_feedback_kind(std::string_view label) {
  std::string lower = text::to_lower(text::trim(label));
  if (lower == "generic") return FeedbackKind::Generic;
  if (lower == "score") return FeedbackKind::Score;
  if (lower == "fine-grained" || lower == "fine_grained" || lower == "finegrained" ||
      lower == "mqm")
    return FeedbackKind::FineGrained;
  throw ConfigError("unknown feedback kind '" + std::string(label) + "'");
}

ComponentMask ComponentMask::parse(std::string_view spec) {
  std::string lower = text::to_lower(text::trim(spec));
  if (lower == "all" || lower == "full") return full();
  ComponentMask m{false, false, false};
  for (const auto& part : text::split(lower, ',')) {
    std::string_view p = text::trim(part);
    if (p == "span") m.span = true;
    else if (p == "type") m.type = true;
    else if (p == "severity") m.severity = true;
    else if (!p.empty()) throw ConfigError("unknown feedback component '" + std::string(p) + "'");
  }
  if (m.empty()) throw ConfigError("component mask must name at least one component");
  return m;
}

std::string ComponentMask::to_string() const {
  std::vector<std::string> parts;
  if (span) parts.emplace_back("span");
  if (type) parts.emplace_back("type");
  if (severity) parts.emplace_back("severity");
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

FeedbackSpec FeedbackSpec::generic() { return {}; }

FeedbackSpec FeedbackSpec::with_score(double normalized) {
  FeedbackSpec s;
  s.kind = FeedbackKind::Score;
  s.score = normalized;
  return s;
}

FeedbackSpec FeedbackSpec::fine_grained(std::vector<ErrorAnnotation> annotations,
                                        ComponentMask mask) {
  FeedbackSpec s;
  s.kind = FeedbackKind::FineGrained;
  s.annotations = std::move(annotations);
  s.mask = mask;
  return s;
}

void FeedbackSpec::validate() const {
  switch (kind) {
    case FeedbackKind::Generic: return;
    case FeedbackKind::Score:
      if (std::isnan(score) || score < 0.0 || score > 100.0)
        throw Error("score feedback must lie in [0, 100]");
      return;
    case FeedbackKind::FineGrained:
      if (mask.empty()) throw Error("fine-grained feedback needs a non-empty component mask");
      if (std::none_of(annotations.begin(), annotations.end(),
                       [](const ErrorAnnotation& a) { return a.is_error(); }))
        throw Error("fine-grained feedback needs at least one error annotation");
      return;
  }
}

FeedbackSpec fine_grained_for(const Segment& seg, AnnotationSource source, ComponentMask mask) {
  std::vector<ErrorAnnotation> anns;
  for (const auto& e : seg.errors) {
    if (e.source == source && e.is_error()) anns.push_back(e);
  }
  return FeedbackSpec::fine_grained(std::move(anns), mask);
}

namespace {

std::string type_word(const ErrorCategory& cat, TypeWording wording) {
  if (wording == TypeWording::FullLabel) {
    if (!cat.raw.empty()) return text::to_lower(text::trim(cat.raw));
    std::string label(to_string(cat.major));
    if (cat.sub) label += "/" + *cat.sub;
    return text::to_lower(label);
  }
  if (cat.sub) return text::to_lower(*cat.sub);
  // Lenient parses of foreign labels keep the annotator's own wording.
  if (cat.major == MajorCategory::Other && !cat.raw.empty() && !text::iequals(cat.raw, "Other"))
    return text::to_lower(text::trim(cat.raw));
  return text::to_lower(to_string(cat.major));
}

std::string_view article_for(std::string_view word) {
  if (word.empty()) return "a";
  switch (word.front()) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
    default: return "a";
  }
}

std::string language_line(const std::string& name, const std::string& body) {
  return name + ": " + body;
}

}  // namespace

std::string error_sentence(const ErrorAnnotation& ann, const ComponentMask& mask,
                           TypeWording wording) {
  const bool show_severity = mask.severity;
  const bool show_type = mask.type && ann.category.has_value();
  const bool show_span = mask.span && !ann.span.empty();

  std::string descriptor;
  if (show_severity) descriptor += severity_word(ann.severity);
  if (show_type) {
    if (!descriptor.empty()) descriptor += ' ';
    descriptor += type_word(*ann.category, wording);
  }

  std::string out = "There is ";
  if (descriptor.empty()) {
    out += "an error";
  } else {
    out += std::string(article_for(descriptor)) + " " + descriptor + " error";
  }
  if (show_span) out += " at ``" + ann.span + "''";
  out += ".";
  return out;
}

RenderedFeedback render_feedback(const FeedbackSpec& spec, const LangPair& lang,
                                 TypeWording wording) {
  spec.validate();
  RenderedFeedback out;
  const std::string base = "Improve the translation from " + lang.src + " to " + lang.tgt;
  switch (spec.kind) {
    case FeedbackKind::Generic:
      out.instruction_line = base + " without any explanation.";
      break;
    case FeedbackKind::Score:
      out.instruction_line = base + " without any explanation. This translation is scored " +
                             std::to_string(QualityScore{0.0, spec.score}.rounded()) +
                             " out of 100.";
      break;
    case FeedbackKind::FineGrained: {
      out.instruction_line = base + " based on the identified errors without any explanation.";
      std::size_t n = 0;
      for (const auto& ann : spec.annotations) {
        if (!ann.is_error()) continue;
        out.error_lines.push_back("(" + std::to_string(++n) + ") " +
                                  error_sentence(ann, spec.mask, wording));
      }
      break;
    }
  }
  return out;
}

PromptTemplate::PromptTemplate(std::string body) : body_(std::move(body)) {
  while (!body_.empty() && (body_.back() == '\n' || body_.back() == '\r')) body_.pop_back();
  if (body_.find("{HYP}") == std::string::npos)
    throw ConfigError("prompt template must contain the {HYP} placeholder");
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  return PromptTemplate(io::read_file(path));
}

std::string PromptTemplate::render(const Segment& seg, const FeedbackSpec& spec,
                                   const RenderedFeedback& feedback) const {
  std::string errors;
  for (std::size_t i = 0; i < feedback.error_lines.size(); ++i)
    errors += (i ? "\n" : "") + feedback.error_lines[i];
  std::string score;
  if (spec.kind == FeedbackKind::Score) score = std::to_string(QualityScore{0.0, spec.score}.rounded());
  // Substitute the payload placeholders last so text inside a segment that
  // happens to look like a placeholder is left untouched.
  std::string out = body_;
  out = text::replace_all(out, "{SRC_LANG}", seg.lang.src);
  out = text::replace_all(out, "{TGT_LANG}", seg.lang.tgt);
  out = text::replace_all(out, "{ERRORS}", errors);
  out = text::replace_all(out, "{SCORE}", score);
  const std::string source_marker = "\x01SOURCE\x01";
  const std::string hyp_marker = "\x01HYP\x01";
  out = text::replace_all(out, "{SOURCE}", source_marker);
  out = text::replace_all(out, "{HYP}", hyp_marker);
  out = text::replace_all(out, source_marker, seg.source);
  out = text::replace_all(out, hyp_marker, seg.hypothesis);
  return out;
}

std::string PromptBundle::render_block() const {
  std::string out;
  if (custom_block) {
    out = *custom_block;
  } else {
    out = instruction_line;
    for (const auto& line : error_lines) out += "\n" + line;
    out += "\n" + source_line;
    out += "\n" + hypothesis_line;
    out += "\n" + cue_line;
  }
  if (completion) out += " " + *completion;
  return out;
}

std::string PromptBundle::render() const {
  std::string out;
  for (const auto& shot : shots) {
    out += shot.render_block();
    out += "\n\n";
  }
  out += render_block();
  return out;
}

PromptBundle make_bundle(const Segment& seg, const FeedbackSpec& spec, const PromptTemplate* tmpl) {
  RenderedFeedback fb = render_feedback(spec, seg.lang);
  PromptBundle b;
  b.instruction_line = fb.instruction_line;
  b.error_lines = fb.error_lines;
  b.source_line = language_line(seg.lang.src, seg.source);
  b.hypothesis_line = language_line(seg.lang.tgt, seg.hypothesis);
  b.cue_line = "Improved " + seg.lang.tgt + ":";
  if (tmpl != nullptr) b.custom_block = tmpl->render(seg, spec, fb);
  return b;
}

PromptBundle build_postedit_bundle(const Segment& seg, const FeedbackSpec& spec,
                                   std::span<const Shot> pool, std::size_t k, std::uint64_t seed,
                                   const PromptTemplate* tmpl) {
  PromptBundle query = make_bundle(seg, spec, tmpl);
  query.rng_seed = seed;
  if (k == 0) return query;

  std::vector<std::size_t> eligible;
  eligible.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].segment.id != seg.id) eligible.push_back(i);
  }
  if (k > eligible.size())
    throw Error("requested " + std::to_string(k) + " shots but only " +
                std::to_string(eligible.size()) + " are available for segment " + seg.id);

  SeededRng rng(seed);
  for (std::size_t pick : sample_without_replacement(eligible.size(), k, rng)) {
    const Shot& shot = pool[eligible[pick]];
    PromptBundle b = make_bundle(shot.segment, shot.feedback, tmpl);
    b.completion = shot.gold;
    query.shots.push_back(std::move(b));
  }
  return query;
}

std::string build_postedit_prompt(const Segment& seg, const FeedbackSpec& spec,
                                  std::span<const Shot> pool, std::size_t k, std::uint64_t seed,
                                  const PromptTemplate* tmpl) {
  return build_postedit_bundle(seg, spec, pool, k, seed, tmpl).render();
}

std::string build_translate_prompt(std::string_view source, const LangPair& lang) {
  return "Translate from " + lang.src + " to " + lang.tgt + " without any explanation.\n" +
         lang.src + ": " + std::string(source) + "\n" + lang.tgt + ":";
}

}  // namespace mtpe
