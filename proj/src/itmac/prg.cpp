#include "calguard/itmac/prg.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <cstring>
#include <stdexcept>

#include "calguard/rng.hpp"

namespace calguard::itmac {

namespace {
constexpr std::size_t kBlockWords = 1024;
}

struct Prg::Ctx {
  EVP_CIPHER_CTX* evp = nullptr;
  ~Ctx() { EVP_CIPHER_CTX_free(evp); }
};

Prg::Prg(const PrgSeed& seed) : ctx_(std::make_unique<Ctx>()), buf_(kBlockWords) {
  ctx_->evp = EVP_CIPHER_CTX_new();
  const unsigned char iv[16] = {};
  if (!ctx_->evp ||
      EVP_EncryptInit_ex(ctx_->evp, EVP_aes_128_ctr(), nullptr, seed.data(), iv) != 1) {
    throw std::runtime_error("prg: AES-CTR init failed");
  }
  refill();
}

Prg::~Prg() = default;
Prg::Prg(Prg&&) noexcept = default;
Prg& Prg::operator=(Prg&&) noexcept = default;

void Prg::refill() {
  static const unsigned char zeros[kBlockWords * 8] = {};
  int len = 0;
  if (EVP_EncryptUpdate(ctx_->evp, reinterpret_cast<unsigned char*>(buf_.data()), &len, zeros,
                        static_cast<int>(sizeof zeros)) != 1) {
    throw std::runtime_error("prg: AES-CTR update failed");
  }
  pos_ = 0;
}

std::uint64_t Prg::next_u64() {
  if (pos_ == buf_.size()) refill();
  return buf_[pos_++];
}

Fp Prg::next_fp() {
  for (;;) {
    const std::uint64_t x = next_u64() & Fp::kP;
    if (x != Fp::kP) return Fp::raw(x);
  }
}

PrgSeed random_seed() {
  PrgSeed s{};
  if (RAND_bytes(s.data(), static_cast<int>(s.size())) != 1) {
    throw std::runtime_error("prg: RAND_bytes failed");
  }
  return s;
}

PrgSeed seed_from_u64(std::uint64_t seed, const char* stream) {
  PrgSeed s{};
  const std::uint64_t a = derive_seed(seed, stream);
  const std::uint64_t b = splitmix64(a);
  std::memcpy(s.data(), &a, 8);
  std::memcpy(s.data() + 8, &b, 8);
  return s;
}

}  // namespace calguard::itmac
