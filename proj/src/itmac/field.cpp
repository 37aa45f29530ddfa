#include "calguard/itmac/field.hpp"

#include "calguard/errors.hpp"

namespace calguard::itmac {

Fp Fp::pow(std::uint64_t e) const {
  Fp base = *this;
  Fp acc(1);
  while (e) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  return acc;
}

Fp Fp::inv() const {
  if (v == 0) throw InvalidInput("field: zero has no inverse");
  return pow(kP - 2);
}

std::string to_string(Fp x) { return std::to_string(x.v); }

std::string to_string(Fp2 x) { return "(" + to_string(x.re) + " + " + to_string(x.im) + "i)"; }

}  // namespace calguard::itmac
