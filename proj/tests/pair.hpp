#pragma once

// Runs one circuit on both parties over an in-process channel. The prover
// side executes on a worker thread; exceptions on either side are rethrown
// from the calling thread, verifier first.

#include <exception>
#include <optional>
#include <thread>

#include "calguard/itmac/channel.hpp"
#include "calguard/itmac/party.hpp"
#include "calguard/itmac/prg.hpp"

namespace pair_run {

using namespace calguard::itmac;

struct Result {
  std::exception_ptr prover_error;
  std::exception_ptr verifier_error;
  std::vector<TranscriptEntry> transcript;
};

template <class ProverFn, class VerifierFn>
Result run(ProverFn pf, VerifierFn vf, std::uint64_t seed = 1, PartyOptions vopt = {},
           PartyOptions popt = {}) {
  auto [pc, vc] = memory_channel_pair();
  vc->record_transcript(true);
  Result res;
  std::thread t([&, pch = pc.get()] {
    try {
      Prover p(*pch, popt);
      p.setup();
      pf(p);
      p.flush();
    } catch (...) {
      res.prover_error = std::current_exception();
    }
  });
  try {
    Verifier v(*vc, seed_from_u64(seed, "test"), vopt);
    v.setup();
    vf(v);
  } catch (...) {
    res.verifier_error = std::current_exception();
  }
  res.transcript = vc->transcript();
  // Closing our end unblocks a prover still waiting after an abort.
  vc.reset();
  t.join();
  return res;
}

inline bool aborted(const Result& r) {
  if (!r.verifier_error) return false;
  try {
    std::rethrow_exception(r.verifier_error);
  } catch (const ProtocolAbort&) {
    return true;
  } catch (...) {
    return false;
  }
}

inline void rethrow(const Result& r) {
  if (r.verifier_error) std::rethrow_exception(r.verifier_error);
  if (r.prover_error) std::rethrow_exception(r.prover_error);
}

}  // namespace pair_run
