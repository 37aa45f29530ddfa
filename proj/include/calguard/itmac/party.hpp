#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "calguard/itmac/channel.hpp"
#include "calguard/itmac/field.hpp"
#include "calguard/itmac/prg.hpp"

namespace calguard::itmac {

// A MAC or consistency check failed; the session is over.
class ProtocolAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Prover's share of an authenticated value: M = K + delta * v.
struct ProverWire {
  Fp v;
  Fp2 m;
};

// Verifier's share: the key K.
struct VerifierWire {
  Fp2 k;
};

// Linear operations need no interaction and look the same on both sides.
inline ProverWire operator+(const ProverWire& a, const ProverWire& b) { return {a.v + b.v, a.m + b.m}; }
inline ProverWire operator-(const ProverWire& a, const ProverWire& b) { return {a.v - b.v, a.m - b.m}; }
inline ProverWire operator*(const ProverWire& a, Fp c) { return {a.v * c, a.m * c}; }
inline ProverWire operator*(Fp c, const ProverWire& a) { return a * c; }
inline ProverWire& operator+=(ProverWire& a, const ProverWire& b) { return a = a + b; }
inline ProverWire& operator-=(ProverWire& a, const ProverWire& b) { return a = a - b; }

inline VerifierWire operator+(const VerifierWire& a, const VerifierWire& b) { return {a.k + b.k}; }
inline VerifierWire operator-(const VerifierWire& a, const VerifierWire& b) { return {a.k - b.k}; }
inline VerifierWire operator*(const VerifierWire& a, Fp c) { return {a.k * c}; }
inline VerifierWire operator*(Fp c, const VerifierWire& a) { return a * c; }
inline VerifierWire& operator+=(VerifierWire& a, const VerifierWire& b) { return a = a + b; }
inline VerifierWire& operator-=(VerifierWire& a, const VerifierWire& b) { return a = a - b; }

// The prover's correlated randomness, expanded from one dealer seed.
class ProverRandomness {
 public:
  struct Random {
    Fp r;
    Fp2 m;
  };
  struct Triple {
    Fp a, b;
    Fp2 ma, mb, mc;
  };

  explicit ProverRandomness(const PrgSeed& seed) : prg_(seed) {}

  Random next_random() {
    const Fp r = prg_.next_fp();
    return {r, prg_.next_fp2()};
  }
  Triple next_triple() {
    Triple t;
    t.a = prg_.next_fp();
    t.b = prg_.next_fp();
    t.ma = prg_.next_fp2();
    t.mb = prg_.next_fp2();
    t.mc = prg_.next_fp2();
    return t;
  }

 private:
  Prg prg_;
};

// Simulated trusted dealer. It replays the prover's stream and hands the
// verifier only the matching keys K = M - delta * value.
class Dealer {
 public:
  struct TripleKeys {
    Fp2 ka, kb, kc;
  };

  Dealer(const PrgSeed& seed, Fp2 delta, std::uint64_t triple_budget)
      : stream_(seed), delta_(delta), budget_(triple_budget) {}

  Fp2 next_random_key() {
    const auto r = stream_.next_random();
    return r.m - delta_ * r.r;
  }
  TripleKeys next_triple_keys() {
    if (issued_ == budget_) throw SessionError("dealer: Beaver triple budget exhausted");
    ++issued_;
    const auto t = stream_.next_triple();
    return {t.ma - delta_ * t.a, t.mb - delta_ * t.b, t.mc - delta_ * (t.a * t.b)};
  }
  std::uint64_t issued() const { return issued_; }

 private:
  ProverRandomness stream_;
  Fp2 delta_;
  std::uint64_t budget_;
  std::uint64_t issued_ = 0;
};

struct PartyOptions {
  // Masked words buffered before a frame goes out.
  std::size_t flush_words = 1 << 15;
  // Pending zero-checks that force an intermediate batch check.
  std::size_t check_cap = 1 << 20;
  std::uint64_t triple_budget = ~std::uint64_t{0};
  // Verifier only: fixed delta for worked examples in tests.
  std::optional<Fp2> fixed_delta;
};

struct PartyStats {
  std::uint64_t inputs = 0;
  std::uint64_t multiplications = 0;
  std::uint64_t zero_checks = 0;
  std::uint64_t batch_checks = 0;
};

class Prover {
 public:
  static constexpr bool kIsProver = true;
  using Wire = ProverWire;

  Prover(Channel& ch, PartyOptions opt = {});

  // Waits for the dealer seed.
  void setup();

  Wire input(Fp x);
  Wire constant(Fp c) const { return {c, Fp2{}}; }
  Wire add_const(const Wire& w, Fp c) const { return {w.v + c, w.m}; }
  Wire mul(const Wire& x, const Wire& y);
  void assert_zero(const Wire& w);
  // Random-linear-combination check of every pending zero assertion.
  void check();
  // Sends value and MAC in the clear; returns the value.
  Fp reveal(const Wire& w);

  Channel& channel() { return ch_; }
  const PartyStats& stats() const { return stats_; }
  void flush();

 private:
  void push_masked(Fp x);
  void after_op();
  Frame expect(MsgType t);

  Channel& ch_;
  PartyOptions opt_;
  std::optional<ProverRandomness> rand_;
  std::vector<std::uint64_t> out_;
  std::vector<Fp2> pending_;
  PartyStats stats_;
};

class Verifier {
 public:
  static constexpr bool kIsProver = false;
  using Wire = VerifierWire;

  // `rng_seed` drives delta, the dealer seed and every challenge.
  Verifier(Channel& ch, const PrgSeed& rng_seed, PartyOptions opt = {});

  // Samples delta and sends the dealer seed.
  void setup();

  // The argument is ignored; it keeps circuit code symmetric.
  Wire input(Fp ignored = Fp{});
  Wire constant(Fp c) const { return {-(delta_ * c)}; }
  Wire add_const(const Wire& w, Fp c) const { return {w.k - delta_ * c}; }
  Wire mul(const Wire& x, const Wire& y);
  void assert_zero(const Wire& w);
  void check();
  Fp reveal(const Wire& w);

  // Best-effort notice to the prover before throwing.
  [[noreturn]] void abort(const std::string& why);

  Channel& channel() { return ch_; }
  const PartyStats& stats() const { return stats_; }
  std::uint64_t triples_issued() const { return dealer_ ? dealer_->issued() : 0; }

 private:
  Fp next_masked();
  void after_op();
  Frame expect(MsgType t);

  Channel& ch_;
  PartyOptions opt_;
  Prg rng_;
  Fp2 delta_{};
  std::optional<Dealer> dealer_;
  std::vector<std::uint64_t> in_;
  std::size_t in_pos_ = 0;
  std::vector<Fp2> pending_;
  PartyStats stats_;
};

// Evaluates sum_i chi^i * v_i by Horner's rule.
Fp2 horner(const std::vector<Fp2>& v, Fp2 chi);

}  // namespace calguard::itmac
