#include "mtpe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <regex>

#include <nlohmann/json.hpp>

#include "mtpe/error.hpp"
#include "mtpe/sampling.hpp"
#include "mtpe/text.hpp"

namespace mtpe::metrics {

namespace {

bool is_13a_symbol(char c) {
  // { | } ~  [ \ ] ^ _ `  space ! " # $ % &  ( ) * +  : ; < = > ? @  /
  return (c >= '{' && c <= '~') || (c >= '[' && c <= '`') || (c >= ' ' && c <= '&') ||
         (c >= '(' && c <= '+') || (c >= ':' && c <= '@') || c == '/';
}

}  // namespace

Tokens tokenize(std::string_view input, const TokenizerOptions& opts) {
  std::string line(input);
  line = text::replace_all(std::move(line), "<skipped>", "");
  line = text::replace_all(std::move(line), "-\n", "");
  std::replace(line.begin(), line.end(), '\n', ' ');
  if (line.find('&') != std::string::npos) {
    line = text::replace_all(std::move(line), "&quot;", "\"");
    line = text::replace_all(std::move(line), "&amp;", "&");
    line = text::replace_all(std::move(line), "&lt;", "<");
    line = text::replace_all(std::move(line), "&gt;", ">");
  }

  std::string spaced;
  spaced.reserve(line.size() * 2 + 2);
  spaced.push_back(' ');
  for (char c : line) {
    if (is_13a_symbol(c)) {
      spaced.push_back(' ');
      spaced.push_back(c);
      spaced.push_back(' ');
    } else {
      spaced.push_back(c);
    }
  }
  spaced.push_back(' ');

  static const std::regex kPeriodCommaAfter(R"(([^0-9])([\.,]))");
  static const std::regex kPeriodCommaBefore(R"(([\.,])([^0-9]))");
  static const std::regex kDashAfterDigit(R"(([0-9])(-))");
  spaced = std::regex_replace(spaced, kPeriodCommaAfter, "$1 $2 ");
  spaced = std::regex_replace(spaced, kPeriodCommaBefore, " $1 $2");
  spaced = std::regex_replace(spaced, kDashAfterDigit, "$1 $2 ");

  Tokens toks = text::split_whitespace(spaced);
  if (opts.lowercase) {
    for (auto& t : toks) t = text::to_lower(t);
  }
  return toks;
}

TokenizedPair tokenize_pair(std::string_view hypothesis, std::string_view reference,
                            const TokenizerOptions& opts) {
  return {tokenize(hypothesis, opts), tokenize(reference, opts),
          opts.lowercase ? "13a-lc" : "13a"};
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (std::size_t n = 0; n < kMaxNgramOrder; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

namespace {

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(const Tokens& toks, std::size_t order) {
  NgramCounts counts;
  if (toks.size() < order) return counts;
  for (std::size_t i = 0; i + order <= toks.size(); ++i) {
    std::vector<std::string_view> key(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + order));
    ++counts[key];
  }
  return counts;
}

}  // namespace

BleuStats bleu_stats(const Tokens& hypothesis, const Tokens& reference) {
  BleuStats s;
  s.hyp_len = hypothesis.size();
  s.ref_len = reference.size();
  for (std::size_t n = 1; n <= kMaxNgramOrder; ++n) {
    NgramCounts hyp = count_ngrams(hypothesis, n);
    NgramCounts ref = count_ngrams(reference, n);
    s.totals[n - 1] = hypothesis.size() >= n ? hypothesis.size() - n + 1 : 0;
    for (const auto& [gram, c] : hyp) {
      auto it = ref.find(gram);
      if (it != ref.end()) s.matches[n - 1] += std::min(c, it->second);
    }
  }
  return s;
}

double bleu_from_stats(const BleuStats& s, bool effective_order) {
  if (s.hyp_len == 0) return 0.0;
  std::array<double, kMaxNgramOrder> precision{};
  double smooth = 1.0;
  std::size_t order = kMaxNgramOrder;
  for (std::size_t n = 0; n < kMaxNgramOrder; ++n) {
    if (s.totals[n] == 0) break;
    if (effective_order) order = n + 1;
    if (s.matches[n] == 0) {
      smooth *= 2.0;
      precision[n] = 1.0 / (smooth * static_cast<double>(s.totals[n]));
    } else {
      precision[n] = static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]);
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < order; ++n) {
    if (precision[n] <= 0.0) return 0.0;
    log_sum += std::log(precision[n]);
  }
  double bp = 1.0;
  if (s.hyp_len < s.ref_len)
    bp = std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len));
  return bp * std::exp(log_sum / static_cast<double>(order));
}

double bleu(std::span<const TokenizedPair> pairs) {
  if (pairs.empty()) throw Error("BLEU needs at least one segment");
  BleuStats total;
  for (const auto& p : pairs) total += bleu_stats(p.hypothesis, p.reference);
  return bleu_from_stats(total, false);
}

double sentence_bleu(const TokenizedPair& pair) {
  return bleu_from_stats(bleu_stats(pair.hypothesis, pair.reference), true);
}

double TerStats::score() const {
  if (ref_len == 0) return edits > 0 ? 1.0 : 0.0;
  return static_cast<double>(edits) / static_cast<double>(ref_len);
}

double ter(std::span<const TokenizedPair> pairs, const TerOptions& opts) {
  std::size_t edits = 0;
  std::size_t ref_len = 0;
  for (const auto& p : pairs) {
    TerStats s = ter_stats(p.hypothesis, p.reference, opts);
    edits += s.edits;
    ref_len += s.ref_len;
  }
  return TerStats{edits, 0, ref_len}.score();
}

std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

MetricReport evaluate(std::span<const TokenizedPair> pairs, const TerOptions& ter_opts,
                      const TokenizerOptions& tok_opts) {
  MetricReport r;
  r.sample_size = pairs.size();
  r.signature = std::string("tok:") + (tok_opts.lowercase ? "13a|case:lc" : "13a|case:mixed") +
                "|smooth:exp|ngram:4|ref:1|ter-max-shift:" + std::to_string(ter_opts.max_shift_size);
  if (pairs.empty()) return r;
  BleuStats total;
  std::size_t edits = 0;
  std::size_t ref_len = 0;
  for (const auto& p : pairs) {
    BleuStats bs = bleu_stats(p.hypothesis, p.reference);
    total += bs;
    r.segment_bleu.push_back(bleu_from_stats(bs, true));
    TerStats ts = ter_stats(p.hypothesis, p.reference, ter_opts);
    edits += ts.edits;
    ref_len += ts.ref_len;
    r.segment_ter.push_back(ts.score());
  }
  r.bleu = bleu_from_stats(total, false);
  r.ter = TerStats{edits, 0, ref_len}.score();
  return r;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["bleu"] = std::stod(format_score(bleu));
  j["ter"] = std::stod(format_score(ter));
  if (comet) j["comet"] = std::stod(format_score(*comet));
  j["sample_size"] = sample_size;
  j["signature"] = signature;
  return j;
}

SignificanceResult paired_bootstrap(std::span<const double> a, std::span<const double> b,
                                    std::size_t resamples, std::uint64_t seed,
                                    std::string metric) {
  if (a.size() != b.size())
    throw Error("paired bootstrap: score lists differ in length (" + std::to_string(a.size()) +
                " vs " + std::to_string(b.size()) + ")");
  if (a.size() < 2) throw Error("paired bootstrap needs at least two segments");
  if (resamples == 0) throw Error("paired bootstrap needs at least one resample");

  const std::size_t n = a.size();
  std::vector<double> diff(n);
  double full = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = a[i] - b[i];
    full += diff[i];
  }
  full /= static_cast<double>(n);

  SignificanceResult r{std::move(metric), full, 1.0, resamples, seed};
  if (full == 0.0) return r;

  SeededRng rng(seed);
  std::size_t flips = 0;
  for (std::size_t s = 0; s < resamples; ++s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += diff[static_cast<std::size_t>(rng.below(n))];
    double d = sum / static_cast<double>(n);
    if ((full > 0.0 && d <= 0.0) || (full < 0.0 && d >= 0.0)) ++flips;
  }
  r.p_value = std::min(1.0, 2.0 * static_cast<double>(flips) / static_cast<double>(resamples));
  return r;
}

nlohmann::json SignificanceResult::to_json() const {
  return {{"metric", metric},
          {"delta", std::stod(format_score(delta))},
          {"p_value", std::stod(format_score(p_value))},
          {"resamples", resamples},
          {"seed", seed}};
}

}  // namespace mtpe::metrics
