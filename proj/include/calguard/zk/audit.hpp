#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "calguard/calibration.hpp"
#include "calguard/data.hpp"
#include "calguard/itmac/channel.hpp"
#include "calguard/itmac/party.hpp"
#include "calguard/zk/fixed_point.hpp"
#include "json.hpp"

namespace calguard::zk {

struct AuditParams {
  calib::AuditConfig audit;
  FixedPointParams fp;
  // The prover commits the reference set instead of sharing it.
  bool hidden_ref = false;
  itmac::PartyOptions party;

  void validate() const;
};

// Adversarial prover behaviours for soundness tests.
enum class Tamper {
  kNone,
  kConfidencePlusOne,  // commit p_hat + 1 for one point
  kFlipBinBit,         // flip the top bit of a bin-edge comparison
  kSkipPoint,          // leave one reference point out
  kShiftWeights,       // change committed weight values, keep the MACs
};

const char* to_string(Tamper t);

struct ProverOptions {
  Tamper tamper = Tamper::kNone;
  std::size_t tamper_point = 0;
};

struct VerifierOptions {
  // Fixed randomness for reproducible tests; OS entropy otherwise.
  std::optional<std::uint64_t> seed;
  bool record_transcript = true;
};

enum class Outcome { kPass, kFail, kAbort, kSessionError };

const char* to_string(Outcome o);

struct AuditOutcome {
  Outcome outcome = Outcome::kSessionError;
  std::string message;
  std::size_t points = 0;
  double seconds = 0.0;
  std::uint64_t bytes = 0;
  std::uint64_t multiplications = 0;
  std::vector<itmac::TranscriptEntry> transcript;

  double seconds_per_point() const { return points ? seconds / static_cast<double>(points) : 0.0; }
  double bytes_per_point() const {
    return points ? static_cast<double>(bytes) / static_cast<double>(points) : 0.0;
  }
  nlohmann::json to_json() const;
};

// `ref` holds the prover's reference set in both modes.
AuditOutcome run_prover(itmac::Channel& ch, const QuantizedModel& model, const data::Dataset& ref,
                        const AuditParams& params, const ProverOptions& opt = {});

// `ref` is required in public mode and ignored in hidden mode.
AuditOutcome run_verifier(itmac::Channel& ch, const data::Dataset* ref, const AuditParams& params,
                          const VerifierOptions& opt = {});

struct LocalRun {
  AuditOutcome prover;
  AuditOutcome verifier;
};

// Both roles over an in-process channel, prover on a worker thread.
LocalRun run_local(const QuantizedModel& model, const data::Dataset& ref, const AuditParams& params,
                   const ProverOptions& popt = {}, const VerifierOptions& vopt = {});

// True when the frames the verifier received disclose nothing in the clear
// except one three-word reveal (the pass bit and its MAC).
bool transcript_is_minimal(const std::vector<itmac::TranscriptEntry>& t, std::string* why = nullptr);

}  // namespace calguard::zk
