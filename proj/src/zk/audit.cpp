#include "calguard/zk/audit.hpp"

#include <bit>
#include <chrono>
#include <exception>
#include <thread>

#include "calguard/errors.hpp"
#include "calguard/zk/gadgets.hpp"

namespace calguard::zk {

using itmac::Channel;
using itmac::Frame;
using itmac::MsgType;
using itmac::ProtocolAbort;
using itmac::SessionError;

void AuditParams::validate() const {
  audit.validate();
  fp.validate();
  if (audit.bins > 1024) throw ConfigError("zk audit: at most 1024 bins");
  if (audit.alpha > 8.0) throw ConfigError("zk audit: alpha above 8 is meaningless");
}

const char* to_string(Tamper t) {
  switch (t) {
    case Tamper::kNone: return "none";
    case Tamper::kConfidencePlusOne: return "confidence+1";
    case Tamper::kFlipBinBit: return "flip-bin-bit";
    case Tamper::kSkipPoint: return "skip-point";
    case Tamper::kShiftWeights: return "shift-weights";
  }
  return "?";
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::kPass: return "pass";
    case Outcome::kFail: return "fail";
    case Outcome::kAbort: return "abort";
    case Outcome::kSessionError: return "session-error";
  }
  return "?";
}

nlohmann::json AuditOutcome::to_json() const {
  return {{"verdict", to_string(outcome)},
          {"message", message},
          {"points", points},
          {"runtime_sec", seconds},
          {"runtime_sec_per_point", seconds_per_point()},
          {"bytes", bytes},
          {"bytes_per_point", bytes_per_point()},
          {"multiplications", multiplications}};
}

bool transcript_is_minimal(const std::vector<itmac::TranscriptEntry>& t, std::string* why) {
  std::size_t reveals = 0;
  for (const auto& e : t) {
    if (e.sent) continue;
    if (itmac::disclosure_of(e.type) != itmac::Disclosure::kPlaintextValue) continue;
    ++reveals;
    if (e.words != 3) {
      if (why) *why = "plaintext frame with " + std::to_string(e.words) + " words";
      return false;
    }
  }
  if (reveals > 1) {
    if (why) *why = std::to_string(reveals) + " plaintext frames";
    return false;
  }
  return true;
}

namespace {

constexpr std::uint64_t kVersion = 1;

// Public circuit shape, agreed in the hello exchange.
struct Shape {
  std::vector<std::size_t> dims;  // input, then each layer's output
  std::size_t rows = 0;
};

int bit_width_of(std::uint64_t v) { return static_cast<int>(std::bit_width(v)); }

std::vector<std::uint64_t> hello_words(const Shape& s, const AuditParams& params,
                                       const std::array<std::uint64_t, 4>& hash) {
  std::vector<std::uint64_t> w{kVersion,
                               params.audit.bins,
                               static_cast<std::uint64_t>(alpha_fixed(params.audit.alpha, params.fp)),
                               static_cast<std::uint64_t>(params.fp.frac_bits),
                               static_cast<std::uint64_t>(params.fp.value_bits),
                               params.hidden_ref ? 1u : 0u,
                               s.rows,
                               exp_table_checksum(params.fp),
                               hash[0],
                               hash[1],
                               hash[2],
                               hash[3],
                               s.dims.size()};
  for (std::size_t d : s.dims) w.push_back(d);
  return w;
}

// Everything a role needs to walk the circuit. Prover-only fields are null on
// the verifier side.
struct CircuitInputs {
  Shape shape;
  const QuantizedModel* model = nullptr;
  const std::vector<std::vector<std::int64_t>>* xs = nullptr;
  const std::vector<int>* ys = nullptr;
};

template <class P>
std::uint64_t run_circuit(P& p, const CircuitInputs& in, const AuditParams& params,
                          const ProverOptions& opt, std::size_t& points) {
  using W = WireOf<P>;
  const auto& fp = params.fp;
  const int f = fp.frac_bits;
  const int l = fp.value_bits;
  const std::size_t B = params.audit.bins;
  const auto& dims = in.shape.dims;
  const std::size_t L = dims.size() - 1;
  const std::size_t C = dims.back();
  const bool hidden = params.hidden_ref;

  // Commit the model; every entry is range-checked to l signed bits.
  std::vector<std::vector<W>> w(L);
  std::vector<std::vector<W>> b(L);
  for (std::size_t k = 0; k < L; ++k) {
    for (std::size_t i = 0; i < dims[k] * dims[k + 1]; ++i) {
      std::int64_t v = 0;
      if constexpr (P::kIsProver) v = in.model->layers[k].weight[i];
      w[k].push_back(witness(p, v));
      range_check_signed(p, w[k].back(), l);
    }
    for (std::size_t i = 0; i < dims[k + 1]; ++i) {
      std::int64_t v = 0;
      if constexpr (P::kIsProver) v = in.model->layers[k].bias[i];
      b[k].push_back(witness(p, v));
      range_check_signed(p, b[k].back(), l);
    }
  }

  // Hidden reference set: commit inputs and labels too.
  const int label_bits = std::max(1, bit_width_of(C - 1));
  std::vector<std::vector<W>> hx;
  std::vector<W> hy;
  if (hidden) {
    for (std::size_t i = 0; i < in.shape.rows; ++i) {
      std::vector<W> row;
      for (std::size_t c = 0; c < dims[0]; ++c) {
        std::int64_t v = 0;
        if constexpr (P::kIsProver) v = (*in.xs)[i][c];
        row.push_back(witness(p, v));
        range_check_signed(p, row.back(), l);
      }
      hx.push_back(std::move(row));
      std::int64_t y = 0;
      if constexpr (P::kIsProver) y = (*in.ys)[i];
      hy.push_back(witness(p, y));
      range_check(p, hy.back(), label_bits);
    }
  }
  p.check();

  ZkArray<P> bin(p, B);
  ZkArray<P> conf(p, B);
  ZkArray<P> acc(p, B);
  const int bin_bits = f + 2 + bit_width_of(B);

  for (std::size_t i = 0; i < in.shape.rows; ++i) {
    const bool here = opt.tamper != Tamper::kNone && opt.tamper_point == i;
    if constexpr (P::kIsProver) {
      if (here && opt.tamper == Tamper::kSkipPoint) continue;
      if (here && opt.tamper == Tamper::kShiftWeights) {
        for (auto& layer : w) {
          for (auto& x : layer) x.v += Fp(1);
        }
        for (auto& layer : b) {
          for (auto& x : layer) x.v += Fp(1);
        }
      }
    }

    // Inference.
    std::vector<W> a;
    if (hidden) {
      a = dense_committed<P>(p, w[0], b[0], dims[0], dims[1], hx[i], L > 1, fp);
    } else {
      a = dense_public<P>(p, w[0], b[0], dims[0], dims[1], (*in.xs)[i], L > 1, fp);
    }
    for (std::size_t k = 1; k < L; ++k) {
      a = dense_committed<P>(p, w[k], b[k], dims[k], dims[k + 1], a, k + 1 < L, fp);
    }
    const auto top = argmax_wire<P>(p, a, fp);
    W sum = p.constant(Fp{});
    for (std::size_t j = 0; j < C; ++j) sum += exp_wire(p, a[j] - top.max, fp);
    const W phat =
        reciprocal_wire(p, sum, fp, here && opt.tamper == Tamper::kConfidencePlusOne);

    // Bin selector from B-1 edge comparisons: ge[k] = [p_hat * B >= k * 2^f].
    const W scaled = phat * Fp(B);
    std::vector<W> ge(B + 1, p.constant(Fp{}));
    ge[0] = p.constant(Fp(1));
    for (std::size_t k = 1; k < B; ++k) {
      const bool flip = here && opt.tamper == Tamper::kFlipBinBit && k == 1;
      const W lt = less_than(p, scaled, p.constant(Fp(k) * pow2(f)), bin_bits, flip);
      ge[k] = p.add_const(p.constant(Fp{}) - lt, Fp(1));
    }
    std::vector<W> sel(B);
    W total = p.constant(Fp{});
    for (std::size_t k = 0; k < B; ++k) {
      sel[k] = ge[k] - ge[k + 1];
      total += sel[k];
    }
    p.assert_zero(p.add_const(total, -Fp(1)));

    const W y = hidden ? hy[i] : p.constant(Fp(static_cast<std::uint64_t>((*in.ys)[i])));
    const W correct = equal(p, top.index, y, label_bits + 1);

    bin.add_const(sel, Fp(1));
    conf.add(p, sel, phat);
    acc.add(p, sel, correct * pow2(f));
    ++points;
  }
  p.check();

  // Per-bin check: alpha * N_b >= |Acc_b - Conf_b|, all ANDed.
  const Fp alpha = fe(alpha_fixed(params.audit.alpha, fp));
  W pass = p.constant(Fp(1));
  for (std::size_t k = 0; k < B; ++k) {
    const W d = acc.e[k] - conf.e[k];
    std::int64_t neg = 0;
    if constexpr (P::kIsProver) neg = d.v.to_signed() < 0 ? 1 : 0;
    const W sigma = witness(p, neg);
    p.assert_zero(p.mul(sigma, p.add_const(sigma, -Fp(1))));
    const W abs = d - p.mul(sigma, d) * Fp(2);
    range_check(p, abs, l);
    const W over = less_than(p, bin.e[k] * alpha, abs, l);
    const W ok = p.add_const(p.constant(Fp{}) - over, Fp(1));
    pass = k == 0 ? ok : p.mul(pass, ok);
  }
  p.check();
  return p.reveal(pass).v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void fill_stats(AuditOutcome& out, Channel& ch, std::uint64_t mults,
                std::chrono::steady_clock::time_point t0) {
  out.seconds = seconds_since(t0);
  out.bytes = ch.bytes_sent() + ch.bytes_received();
  out.multiplications = mults;
}

}  // namespace

AuditOutcome run_prover(Channel& ch, const QuantizedModel& model, const data::Dataset& ref,
                        const AuditParams& params, const ProverOptions& opt) {
  params.validate();
  if (ref.rows == 0) throw InvalidInput("zk audit: empty reference set");
  if (ref.dims != model.input_dim()) throw InvalidInput("zk audit: reference dims != model input");
  // Catch overflow and bad labels before any message goes out.
  fixed_audit(model, ref, params.audit.bins, params.audit.alpha, params.fp);
  for (int y : ref.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= model.output_dim()) {
      throw InvalidInput("zk audit: reference label outside the model's classes");
    }
  }

  CircuitInputs in;
  in.shape.rows = ref.rows;
  in.shape.dims.push_back(model.input_dim());
  for (const auto& l : model.layers) in.shape.dims.push_back(l.out);
  std::vector<std::vector<std::int64_t>> xs;
  for (std::size_t i = 0; i < ref.rows; ++i) xs.push_back(quantize_input(ref.row(i), params.fp));
  in.model = &model;
  in.xs = &xs;
  in.ys = &ref.labels;

  AuditOutcome out;
  itmac::Prover p(ch, params.party);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto hash = params.hidden_ref ? std::array<std::uint64_t, 4>{}
                                        : reference_hash(ref, params.fp);
    ch.send({MsgType::kHello, hello_words(in.shape, params, hash)});
    p.setup();
    run_circuit(p, in, params, opt, out.points);
    Frame f = ch.recv();
    if (f.type == MsgType::kAbort) throw ProtocolAbort("verifier aborted the session");
    if (f.type != MsgType::kResult || f.payload.size() != 1) {
      throw SessionError("prover: expected the verdict");
    }
    out.outcome = f.payload[0] == 1 ? Outcome::kPass : Outcome::kFail;
  } catch (const ProtocolAbort& e) {
    out.outcome = Outcome::kAbort;
    out.message = e.what();
  } catch (const SessionError& e) {
    out.outcome = Outcome::kSessionError;
    out.message = e.what();
  }
  fill_stats(out, ch, p.stats().multiplications, t0);
  return out;
}

AuditOutcome run_verifier(Channel& ch, const data::Dataset* ref, const AuditParams& params,
                          const VerifierOptions& opt) {
  params.validate();
  if (!params.hidden_ref && (!ref || ref->rows == 0)) {
    throw InvalidInput("zk audit: public mode needs a non-empty reference set");
  }
  ch.record_transcript(opt.record_transcript);
  const auto seed = opt.seed ? itmac::seed_from_u64(*opt.seed, "verifier") : itmac::random_seed();
  itmac::Verifier v(ch, seed, params.party);
  AuditOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Frame hello = ch.recv();
    if (hello.type != MsgType::kHello) throw SessionError("verifier: expected hello");
    const auto& h = hello.payload;
    constexpr std::size_t kFixed = 13;
    if (h.size() < kFixed + 2 || h.size() != kFixed + h[12] || h[12] > 64) {
      throw SessionError("verifier: malformed hello");
    }
    CircuitInputs in;
    in.shape.rows = h[6];
    in.shape.dims.assign(h.begin() + kFixed, h.end());
    std::uint64_t params_total = 0;
    for (std::size_t k = 0; k + 1 < in.shape.dims.size(); ++k) {
      if (in.shape.dims[k] == 0 || in.shape.dims[k] > 4096) throw SessionError("verifier: bad layer size");
      params_total += in.shape.dims[k] * in.shape.dims[k + 1];
    }
    if (in.shape.dims.back() < 2 || in.shape.dims.back() > 4096 || params_total > (1u << 22) ||
        in.shape.rows == 0 || in.shape.rows > (1u << 20)) {
      throw SessionError("verifier: circuit shape out of bounds");
    }

    std::vector<std::vector<std::int64_t>> xs;
    const auto hash = params.hidden_ref ? std::array<std::uint64_t, 4>{}
                                        : reference_hash(*ref, params.fp);
    if (!params.hidden_ref) {
      if (in.shape.rows != ref->rows || in.shape.dims[0] != ref->dims) {
        v.abort("reference set shape differs from the prover's");
      }
      for (std::size_t i = 0; i < ref->rows; ++i) {
        xs.push_back(quantize_input(ref->row(i), params.fp));
        if (ref->labels[i] < 0 || static_cast<std::size_t>(ref->labels[i]) >= in.shape.dims.back()) {
          v.abort("reference label outside the model's classes");
        }
      }
      in.xs = &xs;
      in.ys = &ref->labels;
    }
    if (hello_words(in.shape, params, hash) != h) {
      try {
        ch.send({MsgType::kAbort, {}});
      } catch (const SessionError&) {
      }
      throw SessionError("verifier: public parameters differ from the prover's");
    }

    v.setup();
    const auto bit = run_circuit(v, in, params, ProverOptions{}, out.points);
    if (bit > 1) v.abort("revealed verdict is not a bit");
    ch.send({MsgType::kResult, {bit}});
    out.outcome = bit == 1 ? Outcome::kPass : Outcome::kFail;
  } catch (const ProtocolAbort& e) {
    out.outcome = Outcome::kAbort;
    out.message = e.what();
  } catch (const SessionError& e) {
    out.outcome = Outcome::kSessionError;
    out.message = e.what();
  }
  fill_stats(out, ch, v.stats().multiplications, t0);
  out.transcript = ch.transcript();
  return out;
}

LocalRun run_local(const QuantizedModel& model, const data::Dataset& ref, const AuditParams& params,
                   const ProverOptions& popt, const VerifierOptions& vopt) {
  auto [pc, vc] = itmac::memory_channel_pair();
  LocalRun r;
  std::exception_ptr prover_error;
  // The prover's channel dies with the lambda, so a prover that throws early
  // unblocks the verifier.
  std::thread prover([&, ch = std::move(pc)] {
    try {
      r.prover = run_prover(*ch, model, ref, params, popt);
    } catch (...) {
      prover_error = std::current_exception();
    }
  });
  try {
    r.verifier = run_verifier(*vc, params.hidden_ref ? nullptr : &ref, params, vopt);
  } catch (...) {
    vc.reset();
    prover.join();
    throw;
  }
  // Closing our end stops a prover that is still streaming after an abort.
  vc.reset();
  prover.join();
  if (prover_error) std::rethrow_exception(prover_error);
  return r;
}

}  // namespace calguard::zk
