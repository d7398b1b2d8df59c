#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <unordered_map>
#include <utility>

#include "mtpe/metrics.hpp"

namespace mtpe::metrics {

namespace {

using Ids = std::vector<int>;

struct Alignment {
  std::size_t distance = 0;
  std::vector<bool> hyp_err;          // hypothesis word not matched exactly
  std::vector<bool> ref_err;          // reference word not matched exactly
  std::vector<std::int64_t> ref_to_hyp;  // hyp position aligned to each ref word (-1 = before start)
};

std::vector<std::size_t> distance_table(const Ids& h, const Ids& r) {
  const std::size_t H = h.size();
  const std::size_t R = r.size();
  std::vector<std::size_t> d((H + 1) * (R + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (R + 1) + j]; };
  for (std::size_t i = 0; i <= H; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= R; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= H; ++i) {
    for (std::size_t j = 1; j <= R; ++j) {
      std::size_t diag = at(i - 1, j - 1) + (h[i - 1] == r[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  return d;
}

std::size_t distance_only(const Ids& h, const Ids& r) {
  // Two-row variant for candidate scoring.
  std::vector<std::size_t> prev(r.size() + 1), cur(r.size() + 1);
  for (std::size_t j = 0; j <= r.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= h.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= r.size(); ++j) {
      std::size_t diag = prev[j - 1] + (h[i - 1] == r[j - 1] ? 0 : 1);
      cur[j] = std::min({diag, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[r.size()];
}

Alignment align(const Ids& h, const Ids& r) {
  const std::size_t H = h.size();
  const std::size_t R = r.size();
  std::vector<std::size_t> d = distance_table(h, r);
  auto at = [&](std::size_t i, std::size_t j) { return d[i * (R + 1) + j]; };

  // Backtrace, preferring diagonal moves, then hypothesis insertions.
  enum class Op { Match, Sub, Ins, Del };
  std::vector<Op> ops;
  std::size_t i = H;
  std::size_t j = R;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = h[i - 1] == r[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        ops.push_back(same ? Op::Match : Op::Sub);
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ops.push_back(Op::Ins);
      --i;
    } else {
      ops.push_back(Op::Del);
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());

  Alignment a;
  a.distance = at(H, R);
  a.ref_to_hyp.assign(R, -1);
  std::int64_t ph = -1;
  std::int64_t pr = -1;
  for (Op op : ops) {
    switch (op) {
      case Op::Match:
      case Op::Sub:
        ++ph;
        ++pr;
        a.ref_to_hyp[static_cast<std::size_t>(pr)] = ph;
        a.hyp_err.push_back(op == Op::Sub);
        a.ref_err.push_back(op == Op::Sub);
        break;
      case Op::Ins:
        ++ph;
        a.hyp_err.push_back(true);
        break;
      case Op::Del:
        ++pr;
        a.ref_to_hyp[static_cast<std::size_t>(pr)] = ph;
        a.ref_err.push_back(true);
        break;
    }
  }
  return a;
}

/// Moves words[start, start + len) so that it begins at `target` in the
/// original indexing.
Ids perform_shift(const Ids& w, std::size_t start, std::size_t len, std::size_t target) {
  Ids out;
  out.reserve(w.size());
  auto append = [&](std::size_t b, std::size_t e) {
    e = std::min(e, w.size());
    if (b < e) out.insert(out.end(), w.begin() + static_cast<std::ptrdiff_t>(b),
                          w.begin() + static_cast<std::ptrdiff_t>(e));
  };
  if (target < start) {
    append(0, target);
    append(start, start + len);
    append(target, start);
    append(start + len, w.size());
  } else if (target > start + len) {
    append(0, start);
    append(start + len, target);
    append(start, start + len);
    append(target, w.size());
  } else {
    append(0, start);
    append(start + len, len + target);
    append(start, start + len);
    append(len + target, w.size());
  }
  return out;
}

struct ShiftChoice {
  std::size_t gain = 0;
  std::size_t dist = 0;
  std::size_t start = 0;
  Ids words;
};

bool better(const ShiftChoice& c, const std::optional<ShiftChoice>& best) {
  if (!best) return true;
  if (c.gain != best->gain) return c.gain > best->gain;
  if (c.dist != best->dist) return c.dist < best->dist;
  return c.start < best->start;
}

std::optional<ShiftChoice> best_shift(const Ids& h, const Ids& r, const Alignment& al,
                                      std::size_t max_len) {
  std::optional<ShiftChoice> best;
  for (std::size_t sh = 0; sh < h.size(); ++sh) {
    for (std::size_t sr = 0; sr < r.size(); ++sr) {
      for (std::size_t len = 1; len <= max_len && sh + len <= h.size() && sr + len <= r.size();
           ++len) {
        if (h[sh + len - 1] != r[sr + len - 1]) break;
        bool hyp_wrong = false;
        for (std::size_t k = sh; k < sh + len; ++k) hyp_wrong |= al.hyp_err[k];
        if (!hyp_wrong) continue;
        bool ref_wrong = false;
        for (std::size_t k = sr; k < sr + len; ++k) ref_wrong |= al.ref_err[k];
        if (!ref_wrong) continue;
        const std::int64_t anchor = al.ref_to_hyp[sr];
        if (anchor >= static_cast<std::int64_t>(sh) &&
            anchor < static_cast<std::int64_t>(sh + len))
          continue;

        std::int64_t prev_idx = -1;
        for (std::int64_t off = -1; off < static_cast<std::int64_t>(len); ++off) {
          const std::int64_t t = static_cast<std::int64_t>(sr) + off;
          const std::int64_t idx = t < 0 ? 0 : al.ref_to_hyp[static_cast<std::size_t>(t)] + 1;
          if (idx == prev_idx) continue;
          prev_idx = idx;
          Ids shifted = perform_shift(h, sh, len, static_cast<std::size_t>(idx));
          const std::size_t cost = distance_only(shifted, r);
          if (cost >= al.distance) continue;
          ShiftChoice c{al.distance - cost,
                        static_cast<std::size_t>(std::llabs(idx - static_cast<std::int64_t>(sh))),
                        sh, std::move(shifted)};
          if (better(c, best)) best = std::move(c);
        }
      }
    }
  }
  return best;
}

// Maps tokens to small integers shared by both sides.
std::pair<Ids, Ids> intern(const Tokens& hypothesis, const Tokens& reference) {
  std::unordered_map<std::string_view, int> vocab;
  auto ids = [&](const Tokens& t) {
    Ids out;
    for (const auto& w : t) out.push_back(vocab.emplace(w, static_cast<int>(vocab.size())).first->second);
    return out;
  };
  Ids h = ids(hypothesis);
  Ids r = ids(reference);
  return {std::move(h), std::move(r)};
}

}  // namespace

std::size_t edit_distance(const Tokens& hypothesis, const Tokens& reference) {
  auto [h, r] = intern(hypothesis, reference);
  return distance_only(h, r);
}

TerStats ter_stats(const Tokens& hypothesis, const Tokens& reference, const TerOptions& opts) {
  auto [h, r] = intern(hypothesis, reference);

  TerStats stats;
  stats.ref_len = r.size();
  for (;;) {
    Alignment al = align(h, r);
    if (al.distance == 0) break;
    auto shift = best_shift(h, r, al, opts.max_shift_size);
    if (!shift) break;
    h = std::move(shift->words);
    ++stats.shifts;
  }
  stats.edits = stats.shifts + distance_only(h, r);
  return stats;
}

}  // namespace mtpe::metrics
