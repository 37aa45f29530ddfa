#include <random>
#include <thread>

#include "calguard/data.hpp"
#include "calguard/errors.hpp"
#include "calguard/nets.hpp"
#include "calguard/zk/audit.hpp"
#include "calguard/zk/fixed_point.hpp"
#include "calguard/zk/gadgets.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "pair.hpp"

using namespace calguard;
using namespace calguard::zk;
using itmac::Fp;
using itmac::Prover;
using itmac::Verifier;

namespace {

const FixedPointParams kFp{};

// Runs `circuit` on both sides and returns what the verifier saw revealed.
template <class Circuit>
std::vector<std::int64_t> reveal_all(Circuit circuit, bool* aborted = nullptr) {
  std::vector<std::int64_t> seen;
  auto r = pair_run::run(
      [&](Prover& p) {
        for (const auto& w : circuit(p)) p.reveal(w);
        p.check();
      },
      [&](Verifier& v) {
        for (const auto& w : circuit(v)) seen.push_back(v.reveal(w).to_signed());
        v.check();
      });
  if (aborted) {
    *aborted = pair_run::aborted(r);
  } else {
    pair_run::rethrow(r);
  }
  return seen;
}

nets::ModelParams random_model(std::vector<std::size_t> dims, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  nets::ModelParams m;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    nets::Layer l{dims[k], dims[k + 1], {}, {}};
    for (std::size_t i = 0; i < l.in * l.out; ++i) l.weight.push_back(n(rng));
    for (std::size_t i = 0; i < l.out; ++i) l.bias.push_back(0.3 * n(rng));
    m.layers.push_back(l);
  }
  return m;
}

oracle::FixedModel to_oracle(const QuantizedModel& q) {
  oracle::FixedModel m;
  for (const auto& l : q.layers) {
    m.in.push_back(l.in);
    m.out.push_back(l.out);
    m.w.push_back(l.weight);
    m.b.push_back(l.bias);
  }
  return m;
}

data::Dataset random_ref(std::size_t n, std::size_t dims, int classes, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.5);
  data::Dataset d;
  d.rows = n;
  d.dims = dims;
  d.num_classes = classes;
  for (std::size_t i = 0; i < n * dims; ++i) d.features.push_back(z(rng));
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(static_cast<int>(rng() % classes));
  return d;
}

}  // namespace

TEST_CASE("quantization") {
  CHECK(quantize_value(0.0, kFp) == 0);
  CHECK(quantize_value(1.5, kFp) == 98304);
  CHECK(quantize_value(-1.5, kFp) == -98304);
  // Ties go to even.
  CHECK(quantize_value(0.5 / 65536.0, kFp) == 0);
  CHECK(quantize_value(1.5 / 65536.0, kFp) == 2);
  CHECK_THROWS_AS(quantize_value(1e9, kFp), InvalidInput);
  CHECK_THROWS_AS(quantize_value(NAN, kFp), InvalidInput);
  FixedPointParams bad;
  bad.value_bits = 12;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("plaintext fixed-point pieces") {
  CHECK(rescale(0, kFp) == 0);
  CHECK(rescale(static_cast<__int128>(3) << 16, kFp) == 3);
  CHECK(rescale(-(static_cast<__int128>(1) << 15), kFp) == 0);
  CHECK(rescale(-(static_cast<__int128>(1) << 15) - 1, kFp) == -1);
  CHECK(exp_lookup(0, kFp) == 65536);
  CHECK(exp_lookup(-(std::int64_t{1} << 40), kFp) == exp_table(kFp)[4095]);
  CHECK(reciprocal_confidence(131072, kFp) == 32768);
  CHECK(reciprocal_confidence(65536, kFp) == 65536);
  CHECK_THROWS_AS(reciprocal_confidence(0, kFp), InvalidInput);
  CHECK(fixed_bin(quantize_value(0.43, kFp), 10, kFp) == 4);
  CHECK(fixed_bin(65536, 10, kFp) == 9);
  CHECK(fixed_bin(0, 10, kFp) == 0);
  CHECK(exp_table_checksum(kFp) == exp_table_checksum(kFp));
}

TEST_CASE("fixed inference examples") {
  QuantizedModel id;
  id.layers.push_back({2, 2, {65536, 0, 0, 65536}, {0, 0}});
  const std::vector<std::int64_t> x{65536, 0};
  const auto r = fixed_inference(id, x, kFp);
  CHECK(r.logits == std::vector<std::int64_t>{65536, 0});
  CHECK(r.label == 0);
  const std::vector<std::int64_t> zero{0, 0};
  const auto t = fixed_inference(id, zero, kFp);
  CHECK(t.label == 0);
  CHECK(t.confidence == 32768);
}

TEST_CASE("fixed inference matches the independent oracle") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng() % 4, h = 1 + rng() % 6, c = 2 + rng() % 4;
    auto m = random_model({d, h, c}, rng);
    m.temperature = 0.5 + (rng() % 100) / 50.0;
    const auto q = quantize_model(m, kFp);
    const auto om = to_oracle(q);
    std::vector<double> x(d);
    for (auto& v : x) v = n(rng);
    const auto xq = quantize_input(x, kFp);
    const auto got = fixed_inference(q, xq, kFp);
    const auto want = oracle::fixed_predict(om, xq, 16);
    CHECK(got.label == want.label);
    CHECK(got.confidence == want.confidence);
  }
}

TEST_CASE("comparison gadget") {
  auto seen = reveal_all([](auto& p) {
    using P = std::remove_reference_t<decltype(p)>;
    std::vector<WireOf<P>> out;
    const auto a = witness(p, 5), b = witness(p, 9);
    out.push_back(less_than(p, a, b, 8));
    out.push_back(less_than(p, b, a, 8));
    out.push_back(less_than(p, a, a, 8));
    out.push_back(equal(p, a, a, 8));
    out.push_back(equal(p, a, b, 8));
    return out;
  });
  CHECK(seen == std::vector<std::int64_t>{1, 0, 0, 1, 0});

  std::mt19937_64 rng(3);
  std::vector<std::pair<std::int64_t, std::int64_t>> xy;
  for (int i = 0; i < 1000; ++i) {
    xy.emplace_back(static_cast<std::int64_t>(rng() % 2000001) - 1000000,
                    static_cast<std::int64_t>(rng() % 2000001) - 1000000);
  }
  seen = reveal_all([&](auto& p) {
    using P = std::remove_reference_t<decltype(p)>;
    std::vector<WireOf<P>> out;
    for (auto [x, y] : xy) {
      // Both sides know the values here; only the prover's matter.
      out.push_back(less_than(p, witness(p, x), witness(p, y), 22));
    }
    return out;
  });
  REQUIRE(seen.size() == xy.size());
  bool ok = true;
  for (std::size_t i = 0; i < xy.size(); ++i) ok = ok && seen[i] == (xy[i].first < xy[i].second ? 1 : 0);
  CHECK(ok);
}

TEST_CASE("decomposition tamper aborts") {
  bool aborted = false;
  reveal_all(
      [](auto& p) {
        using P = std::remove_reference_t<decltype(p)>;
        const auto a = witness(p, 5), b = witness(p, 9);
        return std::vector<WireOf<P>>{less_than(p, a, b, 8, true)};
      },
      &aborted);
  CHECK(aborted);
}

TEST_CASE("one-hot selectors and hidden-index arrays") {
  const auto seen = reveal_all([](auto& p) {
    using P = std::remove_reference_t<decltype(p)>;
    const auto idx = witness(p, 3);
    const auto s = one_hot(p, idx, 5);
    ZkArray<P> arr(p, 5);
    arr.add(p, s, witness(p, 7));
    arr.add_const(s, Fp(2));
    std::vector<WireOf<P>> out(s.begin(), s.end());
    for (const auto& e : arr.e) out.push_back(e);
    out.push_back(arr.read(p, s));
    arr.write(p, s, witness(p, -4));
    out.push_back(arr.read(p, s));
    return out;
  });
  CHECK(seen == std::vector<std::int64_t>{0, 0, 0, 1, 0, 0, 0, 0, 9, 0, 9, -4});
}

TEST_CASE("fixed-point gadgets agree with the plaintext reference") {
  std::mt19937_64 rng(8);
  std::vector<std::int64_t> accs, ds, sums;
  for (int i = 0; i < 40; ++i) {
    accs.push_back(static_cast<std::int64_t>(rng() % (1ULL << 50)) - (std::int64_t{1} << 49));
    ds.push_back(-static_cast<std::int64_t>(rng() % (std::int64_t{20} << 16)));
    sums.push_back(65536 + static_cast<std::int64_t>(rng() % (std::int64_t{9} << 16)));
  }
  ds.push_back(0);
  const auto seen = reveal_all([&](auto& p) {
    using P = std::remove_reference_t<decltype(p)>;
    std::vector<WireOf<P>> out;
    for (auto a : accs) {
      const auto r = rescale_wire(p, witness(p, a), kFp);
      out.push_back(r.q);
      out.push_back(r.nonneg);
    }
    for (auto d : ds) out.push_back(exp_wire(p, witness(p, d), kFp));
    for (auto s : sums) out.push_back(reciprocal_wire(p, witness(p, s), kFp));
    return out;
  });
  std::size_t k = 0;
  for (auto a : accs) {
    const auto q = rescale(a, kFp);
    CHECK(seen[k++] == q);
    CHECK(seen[k++] == (q >= 0 ? 1 : 0));
  }
  for (auto d : ds) CHECK(seen[k++] == exp_lookup(d, kFp));
  for (auto s : sums) CHECK(seen[k++] == reciprocal_confidence(s, kFp));

  bool aborted = false;
  reveal_all(
      [](auto& p) {
        using P = std::remove_reference_t<decltype(p)>;
        return std::vector<WireOf<P>>{reciprocal_wire(p, witness(p, 131072), kFp, true)};
      },
      &aborted);
  CHECK(aborted);
}

TEST_CASE("argmax gadget breaks ties low") {
  const auto seen = reveal_all([](auto& p) {
    using P = std::remove_reference_t<decltype(p)>;
    std::vector<WireOf<P>> z{witness(p, 3), witness(p, 7), witness(p, 7), witness(p, -2)};
    const auto a = argmax_wire<P>(p, z, kFp);
    return std::vector<WireOf<P>>{a.max, a.index};
  });
  CHECK(seen == std::vector<std::int64_t>{7, 1});
}

TEST_CASE("audit verdict matches the plaintext fixed-point audit") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    const auto m = random_model({2, 4, 3}, rng);
    const auto q = quantize_model(m, kFp);
    const auto ref = random_ref(12, 2, 3, rng);
    AuditParams ap;
    ap.audit.bins = 5;
    ap.audit.alpha = trial % 2 ? 0.9 : 0.2;
    ap.hidden_ref = trial >= 3;
    VerifierOptions vo;
    vo.seed = static_cast<std::uint64_t>(trial);
    const auto run = run_local(q, ref, ap, {}, vo);
    const bool want = fixed_audit(q, ref, 5, ap.audit.alpha, kFp).pass;
    CHECK(run.verifier.outcome == (want ? Outcome::kPass : Outcome::kFail));
    CHECK(run.prover.outcome == run.verifier.outcome);
    std::string why;
    CHECK_MESSAGE(transcript_is_minimal(run.verifier.transcript, &why), why);
    CHECK(run.verifier.points == 12);
  }
}

TEST_CASE("per-bin inequality worked example") {
  // Four points at confidence ~0.625 with three correct: CalE ~0.125.
  nets::ModelParams m;
  m.layers.push_back({1, 2, {1.0, 0.0}, {0.0, 0.0}});
  data::Dataset ref;
  ref.rows = 4;
  ref.dims = 1;
  ref.num_classes = 2;
  ref.features = std::vector<double>(4, std::log(0.625 / 0.375));
  ref.labels = {0, 0, 0, 1};
  const auto q = quantize_model(m, kFp);
  const auto fa = fixed_audit(q, ref, 10, 0.1, kFp);
  CHECK(fa.count[6] == 4);
  CHECK(std::abs(fa.conf[6] - std::int64_t{163840}) <= 256);
  CHECK(fa.acc[6] == 3 * 65536);
  CHECK_FALSE(fa.pass);
  AuditParams ap;
  ap.audit.bins = 10;
  ap.audit.alpha = 0.1;
  CHECK(run_local(q, ref, ap).verifier.outcome == Outcome::kFail);
  ap.audit.alpha = 0.15;
  CHECK(run_local(q, ref, ap).verifier.outcome == Outcome::kPass);
}

TEST_CASE("tampering provers are caught") {
  std::mt19937_64 rng(41);
  const auto m = random_model({2, 3, 3}, rng);
  const auto q = quantize_model(m, kFp);
  const auto ref = random_ref(4, 2, 3, rng);
  AuditParams ap;
  ap.audit.bins = 5;
  ap.audit.alpha = 1.0;
  REQUIRE(run_local(q, ref, ap).verifier.outcome == Outcome::kPass);
  for (auto t : {Tamper::kConfidencePlusOne, Tamper::kFlipBinBit, Tamper::kSkipPoint,
                 Tamper::kShiftWeights}) {
    for (std::size_t pt : {0u, 3u}) {
      const auto run = run_local(q, ref, ap, {t, pt});
      CHECK_MESSAGE(run.verifier.outcome == Outcome::kAbort, to_string(t));
    }
  }
}

TEST_CASE("session errors are not aborts") {
  std::mt19937_64 rng(5);
  const auto q = quantize_model(random_model({2, 3, 2}, rng), kFp);
  const auto ref = random_ref(3, 2, 2, rng);
  AuditParams ap;
  AuditParams other = ap;
  other.audit.bins = 7;

  auto [pc, vc] = itmac::memory_channel_pair();
  std::thread t([&, ch = std::move(pc)] { run_prover(*ch, q, ref, other); });
  const auto out = run_verifier(*vc, &ref, ap);
  vc.reset();
  t.join();
  CHECK(out.outcome == Outcome::kSessionError);

  auto [pc2, vc2] = itmac::memory_channel_pair();
  pc2.reset();
  CHECK(run_verifier(*vc2, &ref, ap).outcome == Outcome::kSessionError);
}

TEST_CASE("audit over tcp") {
  std::mt19937_64 rng(6);
  const auto q = quantize_model(random_model({2, 3, 2}, rng), kFp);
  const auto ref = random_ref(3, 2, 2, rng);
  AuditParams ap;
  itmac::TcpListener listener(0);
  const auto port = listener.port();
  AuditOutcome prover;
  std::thread t([&] {
    auto ch = itmac::tcp_connect("127.0.0.1", port);
    prover = run_prover(*ch, q, ref, ap);
  });
  auto ch = listener.accept_one();
  const auto out = run_verifier(*ch, &ref, ap);
  t.join();
  CHECK(out.outcome == prover.outcome);
  CHECK(out.outcome == (fixed_audit(q, ref, 15, 0.1, kFp).pass ? Outcome::kPass : Outcome::kFail));
  CHECK(out.bytes > 0);
}
