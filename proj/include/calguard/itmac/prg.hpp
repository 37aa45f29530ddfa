#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "calguard/itmac/field.hpp"

namespace calguard::itmac {

using PrgSeed = std::array<std::uint8_t, 16>;

// AES-128 in counter mode over an all-zero stream.
class Prg {
 public:
  explicit Prg(const PrgSeed& seed);
  ~Prg();
  Prg(Prg&&) noexcept;
  Prg& operator=(Prg&&) noexcept;

  std::uint64_t next_u64();
  // Uniform in [0, p) by rejection on 61-bit draws.
  Fp next_fp();
  Fp2 next_fp2() {
    const Fp a = next_fp();
    return {a, next_fp()};
  }

 private:
  void refill();

  struct Ctx;
  std::unique_ptr<Ctx> ctx_;
  std::vector<std::uint64_t> buf_;
  std::size_t pos_ = 0;
};

// Fresh seed from the OS.
PrgSeed random_seed();
// Deterministic seed for reproducible test sessions.
PrgSeed seed_from_u64(std::uint64_t seed, const char* stream);

}  // namespace calguard::itmac
