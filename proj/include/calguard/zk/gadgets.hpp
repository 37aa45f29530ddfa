#pragma once

// Circuit building blocks, written once and instantiated for both roles.
// Prover-only witness computation sits behind `if constexpr (P::kIsProver)`.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "calguard/errors.hpp"
#include "calguard/itmac/party.hpp"
#include "calguard/zk/fixed_point.hpp"

namespace calguard::zk {

using itmac::Fp;

inline Fp fe(std::int64_t v) { return Fp::from_signed(v); }
inline Fp pow2(int i) { return Fp(std::uint64_t{1} << i); }

template <class P>
using WireOf = typename P::Wire;

// y = sum c_i x_i + k. Purely local.
template <class P>
WireOf<P> lin_combine(P& p, std::span<const Fp> coeffs, std::span<const WireOf<P>> xs, Fp k) {
  if (coeffs.size() != xs.size() || xs.empty()) {
    throw InvalidInput("lin_combine: coefficient and value lists differ in length");
  }
  WireOf<P> acc = p.constant(k);
  for (std::size_t i = 0; i < xs.size(); ++i) acc += xs[i] * coeffs[i];
  return acc;
}

// Commits the n low bits of w, proves each boolean and that they recompose to
// w. `flip_top` corrupts the prover's top bit (tamper tests only).
template <class P>
std::vector<WireOf<P>> decompose(P& p, const WireOf<P>& w, int n, bool flip_top = false) {
  std::vector<WireOf<P>> bits;
  bits.reserve(static_cast<std::size_t>(n));
  [[maybe_unused]] std::uint64_t val = 0;
  if constexpr (P::kIsProver) val = w.v.v;
  WireOf<P> sum = p.constant(Fp{});
  for (int i = 0; i < n; ++i) {
    Fp bit{};
    if constexpr (P::kIsProver) {
      bit = Fp((val >> i) & 1);
      if (flip_top && i == n - 1) bit = Fp(1) - bit;
    }
    const auto b = p.input(bit);
    p.assert_zero(p.mul(b, p.add_const(b, -Fp(1))));
    sum += b * pow2(i);
    bits.push_back(b);
  }
  p.assert_zero(w - sum);
  return bits;
}

// 0 <= w < 2^n.
template <class P>
void range_check(P& p, const WireOf<P>& w, int n) {
  decompose(p, w, n);
}

// -2^(n-1) <= w < 2^(n-1).
template <class P>
void range_check_signed(P& p, const WireOf<P>& w, int n) {
  decompose(p, p.add_const(w, pow2(n - 1)), n);
}

// [x < y] for |y - x| < 2^l: the top bit of y - x - 1 + 2^l over l+1 bits.
template <class P>
WireOf<P> less_than(P& p, const WireOf<P>& x, const WireOf<P>& y, int l, bool flip = false) {
  const auto t = p.add_const(y - x, pow2(l) - Fp(1));
  return decompose(p, t, l + 1, flip).back();
}

template <class P>
WireOf<P> equal(P& p, const WireOf<P>& x, const WireOf<P>& y, int l) {
  const auto a = less_than(p, x, y, l);
  const auto b = less_than(p, y, x, l);
  return p.add_const(p.constant(Fp{}) - a - b, Fp(1));
}

// bit ? a : b
template <class P>
WireOf<P> select(P& p, const WireOf<P>& bit, const WireOf<P>& a, const WireOf<P>& b) {
  return b + p.mul(bit, a - b);
}

// Prover-supplied one-hot vector of length n for a hidden index; proves
// booleanity, sum = 1 and sum k*s_k = idx.
template <class P>
std::vector<WireOf<P>> one_hot(P& p, const WireOf<P>& idx, std::size_t n) {
  [[maybe_unused]] std::uint64_t at = 0;
  if constexpr (P::kIsProver) at = idx.v.v;
  std::vector<WireOf<P>> s;
  s.reserve(n);
  WireOf<P> total = p.constant(Fp{});
  WireOf<P> weighted = p.constant(Fp{});
  for (std::size_t k = 0; k < n; ++k) {
    Fp bit{};
    if constexpr (P::kIsProver) bit = Fp(at == k ? 1 : 0);
    const auto b = p.input(bit);
    p.assert_zero(p.mul(b, p.add_const(b, -Fp(1))));
    total += b;
    weighted += b * Fp(k);
    s.push_back(b);
  }
  p.assert_zero(p.add_const(total, -Fp(1)));
  p.assert_zero(weighted - idx);
  return s;
}

// Array of authenticated values addressed through one-hot selectors, so the
// index stays hidden. Every access touches all slots.
template <class P>
struct ZkArray {
  std::vector<WireOf<P>> e;

  ZkArray(P& p, std::size_t n) : e(n, p.constant(Fp{})) {}

  std::size_t size() const { return e.size(); }

  // e[i] += v for the selected i.
  void add(P& p, std::span<const WireOf<P>> sel, const WireOf<P>& v) {
    for (std::size_t b = 0; b < e.size(); ++b) e[b] += p.mul(sel[b], v);
  }
  // e[i] += c for a public constant c: linear, no triples.
  void add_const(std::span<const WireOf<P>> sel, Fp c) {
    for (std::size_t b = 0; b < e.size(); ++b) e[b] += sel[b] * c;
  }
  WireOf<P> read(P& p, std::span<const WireOf<P>> sel) const {
    WireOf<P> acc = p.constant(Fp{});
    for (std::size_t b = 0; b < e.size(); ++b) acc += p.mul(sel[b], e[b]);
    return acc;
  }
  void write(P& p, std::span<const WireOf<P>> sel, const WireOf<P>& v) {
    for (std::size_t b = 0; b < e.size(); ++b) e[b] += p.mul(sel[b], v - e[b]);
  }
};

// Commits a prover value (the verifier passes anything).
template <class P>
WireOf<P> witness(P& p, std::int64_t v) {
  if constexpr (P::kIsProver) return p.input(fe(v));
  else return p.input(Fp{});
}

// Signed value of a prover wire; zero on the verifier side.
template <class P>
std::int64_t value_of(const WireOf<P>& w) {
  if constexpr (P::kIsProver) return w.v.to_signed();
  else return 0;
}

// ---------------------------------------------------------------------------
// Fixed-point pieces
// ---------------------------------------------------------------------------

template <class W>
struct RescaleOut {
  W q;
  W nonneg;  // [q >= 0]
};

// q = floor((acc + 2^(f-1)) / 2^f) with q in l signed bits, proven by one
// decomposition of acc + 2^(f-1) + 2^(f+l-1) into f+l bits. The top bit is
// the sign of q.
template <class P>
RescaleOut<WireOf<P>> rescale_wire(P& p, const WireOf<P>& acc, const FixedPointParams& fp) {
  const int f = fp.frac_bits;
  const int l = fp.value_bits;
  const auto u = p.add_const(acc, pow2(f - 1) + pow2(f + l - 1));
  const auto bits = decompose(p, u, f + l);
  WireOf<P> h = p.constant(Fp{});
  for (int i = f; i < f + l; ++i) h += bits[static_cast<std::size_t>(i)] * pow2(i - f);
  return {p.add_const(h, -pow2(l - 1)), bits.back()};
}

// One dense layer. `relu` applies max(q, 0) via the sign bit.
template <class P>
std::vector<WireOf<P>> dense_committed(P& p, std::span<const WireOf<P>> w, std::span<const WireOf<P>> b,
                                       std::size_t in, std::size_t out, std::span<const WireOf<P>> a,
                                       bool relu, const FixedPointParams& fp) {
  std::vector<WireOf<P>> res;
  res.reserve(out);
  for (std::size_t r = 0; r < out; ++r) {
    WireOf<P> acc = b[r] * pow2(fp.frac_bits);
    for (std::size_t c = 0; c < in; ++c) acc += p.mul(w[r * in + c], a[c]);
    auto rs = rescale_wire(p, acc, fp);
    res.push_back(relu ? p.mul(rs.nonneg, rs.q) : rs.q);
  }
  return res;
}

// Same with a public input vector: the products are linear.
template <class P>
std::vector<WireOf<P>> dense_public(P& p, std::span<const WireOf<P>> w, std::span<const WireOf<P>> b,
                                    std::size_t in, std::size_t out, std::span<const std::int64_t> x,
                                    bool relu, const FixedPointParams& fp) {
  std::vector<WireOf<P>> res;
  res.reserve(out);
  for (std::size_t r = 0; r < out; ++r) {
    WireOf<P> acc = b[r] * pow2(fp.frac_bits);
    for (std::size_t c = 0; c < in; ++c) acc += w[r * in + c] * fe(x[c]);
    auto rs = rescale_wire(p, acc, fp);
    res.push_back(relu ? p.mul(rs.nonneg, rs.q) : rs.q);
  }
  return res;
}

template <class W>
struct ArgmaxOut {
  W max;
  W index;
};

// Tournament with strict comparison, so the lowest index wins ties.
template <class P>
ArgmaxOut<WireOf<P>> argmax_wire(P& p, std::span<const WireOf<P>> z, const FixedPointParams& fp) {
  ArgmaxOut<WireOf<P>> best{z[0], p.constant(Fp{})};
  for (std::size_t j = 1; j < z.size(); ++j) {
    const auto gt = less_than(p, best.max, z[j], fp.value_bits + 1);
    best.max = select(p, gt, z[j], best.max);
    best.index = best.index + p.mul(gt, p.add_const(p.constant(Fp{}) - best.index, Fp(j)));
  }
  return best;
}

// exp(d) for d <= 0 from the public table. u = min(-d + 2^(s-1), cap) is
// split as low + 2^s * (lo + 64 * hi) with one-hot selectors for lo and hi,
// and the read is sum_h s_hi[h] * sum_l s_lo[l] * T[64h + l].
template <class P>
WireOf<P> exp_wire(P& p, const WireOf<P>& d, const FixedPointParams& fp) {
  const int shift = fp.frac_bits - kExpStepBits;
  constexpr std::size_t kSide = std::size_t{1} << (kExpTableBits / 2);
  const std::int64_t cap = (std::int64_t{1} << (kExpTableBits + shift)) - 1;
  const auto& table = exp_table(fp);

  const auto w = p.add_const(p.constant(Fp{}) - d, pow2(shift - 1));
  const auto capw = p.constant(fe(cap));
  const auto below = less_than(p, w, capw, fp.value_bits + 1);
  const auto u = select(p, below, w, capw);

  [[maybe_unused]] std::int64_t uv = 0;
  if constexpr (P::kIsProver) uv = u.v.to_signed();
  const auto low = witness(p, uv & ((std::int64_t{1} << shift) - 1));
  const auto lo = witness(p, (uv >> shift) & static_cast<std::int64_t>(kSide - 1));
  const auto hi = witness(p, uv >> (shift + kExpTableBits / 2));
  range_check(p, low, shift);
  const auto s_lo = one_hot(p, lo, kSide);
  const auto s_hi = one_hot(p, hi, kSide);
  p.assert_zero(u - low - lo * pow2(shift) - hi * pow2(shift + kExpTableBits / 2));

  WireOf<P> out = p.constant(Fp{});
  for (std::size_t h = 0; h < kSide; ++h) {
    WireOf<P> row = p.constant(Fp{});
    for (std::size_t l = 0; l < kSide; ++l) row += s_lo[l] * fe(table[h * kSide + l]);
    out += p.mul(s_hi[h], row);
  }
  return out;
}

// p_hat = floor((2^(2f+1) + S) / 2S), proven by 0 <= S - v and 0 <= v + S - 1
// with v = 2 p_hat S - 2^(2f+1), plus p_hat in f+1 bits.
template <class P>
WireOf<P> reciprocal_wire(P& p, const WireOf<P>& s, const FixedPointParams& fp, bool tamper = false) {
  const int f = fp.frac_bits;
  [[maybe_unused]] std::int64_t ph = 0;
  if constexpr (P::kIsProver) {
    ph = reciprocal_confidence(s.v.to_signed(), fp);
    if (tamper) ph += 1;
  }
  const auto phat = witness(p, ph);
  range_check(p, phat, f + 1);
  const auto v = p.add_const(p.mul(phat, s) * Fp(2), -pow2(2 * f + 1));
  range_check(p, s - v, fp.value_bits);
  range_check(p, p.add_const(v + s, -Fp(1)), fp.value_bits);
  return phat;
}

}  // namespace calguard::zk
