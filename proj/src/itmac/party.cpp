#include "calguard/itmac/party.hpp"

#include <cstring>
#include <string>

namespace calguard::itmac {

namespace {

PrgSeed seed_from_words(const std::vector<std::uint64_t>& w) {
  PrgSeed s{};
  std::memcpy(s.data(), w.data(), 16);
  return s;
}

std::vector<std::uint64_t> words_from_seed(const PrgSeed& s) {
  std::vector<std::uint64_t> w(2);
  std::memcpy(w.data(), s.data(), 16);
  return w;
}

Fp2 challenge_point(const PrgSeed& s) {
  Prg prg(s);
  return prg.next_fp2();
}

bool canonical(std::uint64_t x) { return x < Fp::kP; }

}  // namespace

Fp2 horner(const std::vector<Fp2>& v, Fp2 chi) {
  Fp2 acc{};
  for (std::size_t i = v.size(); i-- > 0;) acc = acc * chi + v[i];
  return acc;
}

// ---------------------------------------------------------------------------
// Prover
// ---------------------------------------------------------------------------

Prover::Prover(Channel& ch, PartyOptions opt) : ch_(ch), opt_(opt) {}

Frame Prover::expect(MsgType t) {
  Frame f = ch_.recv();
  if (f.type == MsgType::kAbort) throw ProtocolAbort("verifier aborted the session");
  if (f.type != t) {
    throw SessionError(std::string("prover: expected ") + to_string(t) + ", got " +
                       to_string(f.type));
  }
  return f;
}

void Prover::setup() {
  Frame f = expect(MsgType::kDealerSeed);
  if (f.payload.size() != 2) throw SessionError("prover: malformed dealer seed");
  rand_.emplace(seed_from_words(f.payload));
}

void Prover::push_masked(Fp x) {
  out_.push_back(x.v);
  if (out_.size() >= opt_.flush_words) flush();
}

void Prover::flush() {
  if (out_.empty()) return;
  Frame f{MsgType::kMasked, std::move(out_)};
  out_.clear();
  ch_.send(f);
}

void Prover::after_op() {
  if (pending_.size() >= opt_.check_cap) check();
}

ProverWire Prover::input(Fp x) {
  const auto r = rand_->next_random();
  push_masked(x - r.r);
  ++stats_.inputs;
  return {x, r.m};
}

ProverWire Prover::mul(const Wire& x, const Wire& y) {
  const auto t = rand_->next_triple();
  const Fp d = x.v - t.a;
  const Fp e = y.v - t.b;
  push_masked(d);
  push_masked(e);
  // The openings are checked later as zero assertions.
  pending_.push_back(x.m - t.ma);
  pending_.push_back(y.m - t.mb);
  ++stats_.multiplications;
  const Wire z{x.v * y.v, t.mc + t.mb * d + t.ma * e};
  after_op();
  return z;
}

void Prover::assert_zero(const Wire& w) {
  pending_.push_back(w.m);
  ++stats_.zero_checks;
  after_op();
}

void Prover::check() {
  flush();
  ch_.send({MsgType::kChallenge, {}});
  Frame f = expect(MsgType::kChallenge);
  if (f.payload.size() != 2) throw SessionError("prover: malformed challenge");
  const Fp2 sigma = horner(pending_, challenge_point(seed_from_words(f.payload)));
  pending_.clear();
  ch_.send({MsgType::kMacCheck, {sigma.re.v, sigma.im.v}});
  ++stats_.batch_checks;
}

Fp Prover::reveal(const Wire& w) {
  flush();
  ch_.send({MsgType::kReveal, {w.v.v, w.m.re.v, w.m.im.v}});
  return w.v;
}

// ---------------------------------------------------------------------------
// Verifier
// ---------------------------------------------------------------------------

Verifier::Verifier(Channel& ch, const PrgSeed& rng_seed, PartyOptions opt)
    : ch_(ch), opt_(opt), rng_(rng_seed) {}

void Verifier::abort(const std::string& why) {
  try {
    ch_.send({MsgType::kAbort, {}});
  } catch (const SessionError&) {
    // The prover may already be gone; the abort stands either way.
  }
  throw ProtocolAbort(why);
}

Frame Verifier::expect(MsgType t) {
  Frame f = ch_.recv();
  if (f.type == MsgType::kAbort) throw SessionError("prover gave up the session");
  if (f.type != t) {
    abort(std::string("transcript out of step: expected ") + to_string(t) + ", got " +
          to_string(f.type));
  }
  return f;
}

void Verifier::setup() {
  delta_ = opt_.fixed_delta ? *opt_.fixed_delta : rng_.next_fp2();
  PrgSeed dealer_seed{};
  for (std::size_t i = 0; i < 2; ++i) {
    const std::uint64_t w = rng_.next_u64();
    std::memcpy(dealer_seed.data() + 8 * i, &w, 8);
  }
  dealer_.emplace(dealer_seed, delta_, opt_.triple_budget);
  ch_.send({MsgType::kDealerSeed, words_from_seed(dealer_seed)});
}

Fp Verifier::next_masked() {
  if (in_pos_ == in_.size()) {
    Frame f = expect(MsgType::kMasked);
    in_ = std::move(f.payload);
    in_pos_ = 0;
    if (in_.empty()) abort("empty masked frame");
  }
  const std::uint64_t x = in_[in_pos_++];
  if (!canonical(x)) abort("non-canonical field element on the wire");
  return Fp::raw(x);
}

void Verifier::after_op() {
  if (pending_.size() >= opt_.check_cap) check();
}

VerifierWire Verifier::input(Fp) {
  const Fp2 k = dealer_->next_random_key();
  const Fp d = next_masked();
  ++stats_.inputs;
  return {k - delta_ * d};
}

VerifierWire Verifier::mul(const Wire& x, const Wire& y) {
  const auto t = dealer_->next_triple_keys();
  const Fp d = next_masked();
  const Fp e = next_masked();
  pending_.push_back(x.k - t.ka + delta_ * d);
  pending_.push_back(y.k - t.kb + delta_ * e);
  ++stats_.multiplications;
  const Wire z{t.kc + t.kb * d + t.ka * e - delta_ * (d * e)};
  after_op();
  return z;
}

void Verifier::assert_zero(const Wire& w) {
  pending_.push_back(w.k);
  ++stats_.zero_checks;
  after_op();
}

void Verifier::check() {
  if (in_pos_ != in_.size()) abort("transcript out of step: unconsumed masked data at check");
  expect(MsgType::kChallenge);
  PrgSeed s{};
  for (std::size_t i = 0; i < 2; ++i) {
    const std::uint64_t w = rng_.next_u64();
    std::memcpy(s.data() + 8 * i, &w, 8);
  }
  ch_.send({MsgType::kChallenge, words_from_seed(s)});
  const Fp2 expected = horner(pending_, challenge_point(s));
  pending_.clear();
  Frame f = expect(MsgType::kMacCheck);
  if (f.payload.size() != 2 || !canonical(f.payload[0]) || !canonical(f.payload[1])) {
    abort("malformed MAC check");
  }
  ++stats_.batch_checks;
  const Fp2 got{Fp::raw(f.payload[0]), Fp::raw(f.payload[1])};
  if (!(got == expected)) abort("batch MAC check failed");
}

Fp Verifier::reveal(const Wire& w) {
  if (in_pos_ != in_.size()) abort("transcript out of step: unconsumed masked data at reveal");
  Frame f = expect(MsgType::kReveal);
  if (f.payload.size() != 3 || !canonical(f.payload[0]) || !canonical(f.payload[1]) ||
      !canonical(f.payload[2])) {
    abort("malformed reveal");
  }
  const Fp v = Fp::raw(f.payload[0]);
  const Fp2 m{Fp::raw(f.payload[1]), Fp::raw(f.payload[2])};
  if (!(m == w.k + delta_ * v)) abort("revealed value does not match its MAC");
  return v;
}

}  // namespace calguard::itmac
