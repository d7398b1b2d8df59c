#pragma once

// Slow, independent reference implementations used to check the library.
// None of these call into mtpe.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

inline std::size_t levenshtein(const Tokens& a, const Tokens& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
  return d[a.size()][b.size()];
}

namespace detail {

// Token sequences interned to one char per token so states hash cheaply.
inline std::size_t lev(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Every way of cutting out h[i, j) and reinserting it elsewhere.
inline std::vector<std::string> block_moves(const std::string& h) {
  std::vector<std::string> out;
  const std::size_t n = h.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j <= n; ++j) {
      std::string block = h.substr(i, j - i);
      std::string rest = h.substr(0, i) + h.substr(j);
      for (std::size_t p = 0; p <= rest.size(); ++p) {
        if (p == i) continue;
        out.push_back(rest.substr(0, p) + block + rest.substr(p));
      }
    }
  }
  return out;
}

}  // namespace detail

/// Minimum over shift sequences of (#shifts + Levenshtein distance), found by
/// breadth-first search over hypothesis orderings.
inline std::size_t ter_edits(const Tokens& hyp, const Tokens& ref) {
  std::map<std::string, char> ids;
  auto intern = [&](const Tokens& t) {
    std::string s;
    for (const auto& w : t) s += ids.emplace(w, static_cast<char>('A' + ids.size())).first->second;
    return s;
  };
  const std::string h = intern(hyp);
  const std::string r = intern(ref);
  std::size_t best = detail::lev(h, r);
  std::set<std::string> seen{h};
  std::vector<std::string> frontier{h};
  // Shifts keep the length, so every state costs at least the length gap.
  const std::size_t gap = h.size() > r.size() ? h.size() - r.size() : r.size() - h.size();
  for (std::size_t depth = 1; depth + gap < best && !frontier.empty(); ++depth) {
    std::vector<std::string> next;
    for (const auto& state : frontier) {
      for (auto& m : detail::block_moves(state)) {
        if (!seen.insert(m).second) continue;
        best = std::min(best, depth + detail::lev(m, r));
        next.push_back(std::move(m));
      }
    }
    frontier = std::move(next);
  }
  return best;
}

/// Corpus BLEU with clipped counts and exponential smoothing, written from
/// the textbook definition.
inline double bleu(const std::vector<std::pair<Tokens, Tokens>>& pairs) {
  double match[4] = {0, 0, 0, 0};
  double total[4] = {0, 0, 0, 0};
  double c = 0, r = 0;
  for (const auto& [hyp, ref] : pairs) {
    c += hyp.size();
    r += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<Tokens, int> hc, rc;
      for (std::size_t i = 0; i + n <= hyp.size(); ++i) hc[Tokens(hyp.begin() + i, hyp.begin() + i + n)]++;
      for (std::size_t i = 0; i + n <= ref.size(); ++i) rc[Tokens(ref.begin() + i, ref.begin() + i + n)]++;
      for (const auto& [g, k] : hc) {
        total[n - 1] += k;
        auto it = rc.find(g);
        if (it != rc.end()) match[n - 1] += std::min(k, it->second);
      }
    }
  }
  if (c == 0) return 0.0;
  double log_sum = 0;
  double smooth = 1;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0) return 0.0;
    double p;
    if (match[n] == 0) {
      smooth *= 2;
      p = 1.0 / (smooth * total[n]);
    } else {
      p = match[n] / total[n];
    }
    log_sum += std::log(p);
  }
  double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / 4.0);
}

/// Paired bootstrap built on the standard library distributions.
inline double bootstrap_p(const std::vector<double>& a, const std::vector<double>& b, int resamples,
                          unsigned seed) {
  const std::size_t n = a.size();
  double full = 0;
  for (std::size_t i = 0; i < n; ++i) full += a[i] - b[i];
  if (full == 0) return 1.0;
  std::mt19937 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  int flips = 0;
  for (int s = 0; s < resamples; ++s) {
    double d = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t k = pick(gen);
      d += a[k] - b[k];
    }
    if (d * full <= 0) ++flips;
  }
  return std::min(1.0, 2.0 * flips / resamples);
}

/// Shot indices the prompt builder is expected to choose: partial
/// Fisher-Yates over [0, n) driven by a 64-bit Mersenne twister with a
/// rejection-sampled bounded draw.
inline std::vector<std::size_t> shot_order(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  auto bounded = [&](std::uint64_t m) {
    const std::uint64_t reject_below = (~m + 1) % m;
    while (true) {
      std::uint64_t x = eng();
      if (x >= reject_below) return x % m;
    }
  };
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + bounded(n - i)]);
  pool.resize(k);
  return pool;
}

}  // namespace oracle
