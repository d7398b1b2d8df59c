#pragma once

// Synthetic corpora for tests. Texts are unique per segment so dedup and
// split checks are not confused by accidental collisions.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mtpe/corpus.hpp"

namespace synth {

inline const std::vector<std::string>& words() {
  static const std::vector<std::string> w{
      "Haus",   "Baum",   "Stadt",  "Fluss",  "Brücke", "Straße", "Zug",   "Schule", "Markt",
      "Wasser", "Licht",  "Nacht",  "Morgen", "Abend",  "Regen",  "Wind",  "Feld",   "Dorf",
      "Kirche", "Garten", "Fenster", "Tür",   "Weg",    "Berg",   "Wald",  "See",    "Hafen",
      "alt",    "neu",    "groß",   "klein",  "schnell", "ruhig", "laut",  "hell",   "dunkel",
      "sieht",  "baut",   "findet", "bringt", "nimmt",  "kennt",  "sucht", "zeigt",  "hält"};
  return w;
}

inline const std::vector<std::string>& categories() {
  static const std::vector<std::string> c{
      "Accuracy/Mistranslation", "Accuracy/Omission",  "Fluency/Grammar", "Fluency/Punctuation",
      "Style/Awkward",           "Terminology/Inappropriate for context", "Fluency/Spelling"};
  return c;
}

struct Generated {
  std::string tsv;
  std::size_t annotations = 0;
  std::size_t spans_in_reference = 0;  // annotated spans that also occur in the reference
};

/// MQM TSV with a reference column: `n` segments, one or two marked spans
/// each; references replace a few hypothesis words so some spans survive in
/// the reference and some do not.
inline Generated mqm_tsv(std::size_t n, std::uint64_t seed, std::size_t no_error_every = 0) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t m) { return static_cast<std::size_t>(rng() % m); };
  const auto& w = words();
  Generated g;
  g.tsv = "system\tdoc\tseg_id\trater\tsource\ttarget\treference\tcategory\tseverity\n";
  for (std::size_t i = 0; i < n; ++i) {
    const std::string src = "Source sentence number " + std::to_string(i) + " about the " +
                            "town and its " + std::to_string(i % 7) + " bridges.";
    std::vector<std::string> hyp;
    const std::size_t len = 6 + pick(7);
    for (std::size_t t = 0; t < len; ++t) hyp.push_back(w[pick(w.size())]);
    hyp.push_back("Nr" + std::to_string(i));
    std::vector<std::string> ref = hyp;
    for (std::size_t t = 0; t + 1 < ref.size(); ++t) {
      if (pick(3) == 0) ref[t] = w[pick(w.size())] + "e";
    }
    auto join = [](const std::vector<std::string>& v, std::size_t from, std::size_t to) {
      std::string s;
      for (std::size_t k = from; k < to; ++k) s += (k > from ? " " : "") + v[k];
      return s;
    };
    const std::string hyp_text = join(hyp, 0, hyp.size()) + ".";
    const std::string ref_text = join(ref, 0, ref.size()) + ".";
    const std::string sys = "sys" + std::to_string(i % 3);
    const std::string prefix = sys + "\tdoc" + std::to_string(i / 10) + "\t" + std::to_string(i) +
                               "\trater1\t" + src + "\t";

    if (no_error_every != 0 && i % no_error_every == 0) {
      g.tsv += prefix + hyp_text + "\t" + ref_text + "\tNo-error\tNo-error\n";
      continue;
    }
    const std::size_t n_err = 1 + pick(2);
    std::size_t last_end = 0;
    for (std::size_t e = 0; e < n_err; ++e) {
      // Spans sit in disjoint regions: [0, len/2) then [len/2, len).
      const std::size_t lo = e == 0 ? 0 : len / 2;
      const std::size_t hi = e == 0 ? len / 2 : len;
      if (lo >= hi || lo < last_end) break;
      const std::size_t start = lo + pick(hi - lo);
      const std::size_t end = std::min(hi, start + 1 + pick(3));
      last_end = end;
      std::string marked = join(hyp, 0, start);
      if (start > 0) marked += " ";
      marked += "<v>" + join(hyp, start, end) + "</v>";
      if (end < hyp.size()) marked += " " + join(hyp, end, hyp.size());
      marked += ".";
      const std::string span = join(hyp, start, end);
      // A span is checked against the reference the way resolution analysis
      // checks an output: plain substring.
      if (ref_text.find(span) != std::string::npos) ++g.spans_in_reference;
      ++g.annotations;
      g.tsv += prefix + marked + "\t" + ref_text + "\t" + categories()[pick(categories().size())] +
               "\t" + (pick(3) == 0 ? "Major" : "Minor") + "\n";
    }
  }
  return g;
}

/// In-memory corpus with unique texts, for dataset sizing checks.
inline mtpe::Corpus plain_corpus(std::size_t n, const std::string& code, mtpe::Origin origin,
                                 const std::string& tag, std::size_t with_error_every = 2) {
  mtpe::Corpus c;
  const mtpe::LangPair lang = mtpe::LangPair::from_code(code);
  for (std::size_t i = 0; i < n; ++i) {
    mtpe::Segment s;
    s.id = tag + "/" + std::to_string(i);
    s.lang = lang;
    s.system = tag;
    s.origin = origin;
    s.source = tag + " source " + std::to_string(i);
    s.hypothesis = tag + " hypothesis " + std::to_string(i) + " Wort";
    s.reference = tag + " reference " + std::to_string(i);
    s.annotated_by.push_back(origin == mtpe::Origin::DEMETR ? mtpe::AnnotationSource::DEMETR
                                                            : mtpe::AnnotationSource::MQM);
    if (i % with_error_every == 0) {
      mtpe::ErrorAnnotation e;
      e.span = "Wort";
      e.category = mtpe::parse_mqm_category("Accuracy/Mistranslation");
      e.severity = mtpe::Severity::Minor;
      e.source = s.annotated_by.front();
      s.errors.push_back(e);
    }
    c.add(std::move(s));
  }
  return c;
}

}  // namespace synth
