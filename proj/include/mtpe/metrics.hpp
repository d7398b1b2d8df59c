#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mtpe::metrics {

using Tokens = std::vector<std::string>;

struct TokenizerOptions {
  bool lowercase = false;
};

/// mteval-v13a style tokenization: punctuation and symbols become their own
/// tokens, periods and commas are split off unless they sit next to a digit,
/// a dash following a digit is split off, and whitespace is normalized.
Tokens tokenize(std::string_view text, const TokenizerOptions& opts = {});

struct TokenizedPair {
  Tokens hypothesis;
  Tokens reference;
  std::string tokenizer = "13a";
};

TokenizedPair tokenize_pair(std::string_view hypothesis, std::string_view reference,
                            const TokenizerOptions& opts = {});

inline constexpr std::size_t kMaxNgramOrder = 4;

/// Clipped n-gram matches and candidate n-gram totals for orders 1..4.
struct BleuStats {
  std::array<std::size_t, kMaxNgramOrder> matches{};
  std::array<std::size_t, kMaxNgramOrder> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o);
};

BleuStats bleu_stats(const Tokens& hypothesis, const Tokens& reference);

/// BLEU-4 in [0, 1] with exponential smoothing: every order with zero matches
/// doubles a running divisor s (starting at 1) and uses 1 / (s * total) as
/// its precision. With `effective_order` the geometric mean only covers the
/// orders that have candidate n-grams (sentence-level use).
double bleu_from_stats(const BleuStats& stats, bool effective_order = false);

/// Corpus-level BLEU. Throws Error for an empty pair list.
double bleu(std::span<const TokenizedPair> pairs);

/// Sentence-level BLEU with effective order, used for per-segment values.
double sentence_bleu(const TokenizedPair& pair);

struct TerOptions {
  std::size_t max_shift_size = 10;
};

struct TerStats {
  std::size_t edits = 0;   // insertions + deletions + substitutions + shifts
  std::size_t shifts = 0;
  std::size_t ref_len = 0;

  /// edits / ref_len; an empty reference scores 1 if anything had to be
  /// inserted and 0 otherwise.
  double score() const;
};

/// Word-level Levenshtein distance with unit costs.
std::size_t edit_distance(const Tokens& hypothesis, const Tokens& reference);

/// Greedy TER: repeatedly apply the phrase shift that most reduces edit
/// distance (ties: shortest move, then earliest phrase start), then add the
/// residual edit distance.
TerStats ter_stats(const Tokens& hypothesis, const Tokens& reference, const TerOptions& opts = {});

/// Corpus TER: total edits over total reference words.
double ter(std::span<const TokenizedPair> pairs, const TerOptions& opts = {});

struct MetricReport {
  double bleu = 0.0;
  double ter = 0.0;
  std::vector<double> segment_bleu;
  std::vector<double> segment_ter;
  std::optional<double> comet;
  std::size_t sample_size = 0;
  std::string signature;

  nlohmann::json to_json() const;
};

MetricReport evaluate(std::span<const TokenizedPair> pairs, const TerOptions& ter_opts = {},
                      const TokenizerOptions& tok_opts = {});

struct SignificanceResult {
  std::string metric;
  double delta = 0.0;  // mean(a) - mean(b) on the full data
  double p_value = 1.0;
  std::size_t resamples = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Two-sided paired bootstrap over segment indices. p is twice the fraction of
/// resamples whose delta does not share the sign of the full-data delta,
/// clamped to [0, 1]; a zero full-data delta gives p = 1. Throws Error on
/// length mismatch or fewer than two segments.
SignificanceResult paired_bootstrap(std::span<const double> system_a,
                                    std::span<const double> system_b,
                                    std::size_t resamples = 1000, std::uint64_t seed = 12345,
                                    std::string metric = {});

/// Formats a score with four decimals.
std::string format_score(double v);

}  // namespace mtpe::metrics
