#pragma once

#include <cstdint>
#include <string>

namespace calguard::itmac {

// Prime field modulo the Mersenne prime 2^61 - 1.
struct Fp {
  static constexpr std::uint64_t kP = (std::uint64_t{1} << 61) - 1;

  std::uint64_t v = 0;

  constexpr Fp() = default;
  constexpr explicit Fp(std::uint64_t x) : v(reduce(x)) {}

  static constexpr Fp raw(std::uint64_t x) {
    Fp r;
    r.v = x;
    return r;
  }
  static constexpr Fp from_signed(std::int64_t x) {
    if (x >= 0) return Fp(static_cast<std::uint64_t>(x));
    return -Fp(static_cast<std::uint64_t>(-(x + 1)) + 1);
  }
  // Centered representative in (-p/2, p/2].
  constexpr std::int64_t to_signed() const {
    return v > kP / 2 ? static_cast<std::int64_t>(v) - static_cast<std::int64_t>(kP)
                      : static_cast<std::int64_t>(v);
  }

  static constexpr std::uint64_t reduce(std::uint64_t x) {
    x = (x & kP) + (x >> 61);
    return x >= kP ? x - kP : x;
  }

  friend constexpr Fp operator+(Fp a, Fp b) {
    const std::uint64_t s = a.v + b.v;
    return raw(s >= kP ? s - kP : s);
  }
  friend constexpr Fp operator-(Fp a, Fp b) { return raw(a.v >= b.v ? a.v - b.v : a.v + kP - b.v); }
  constexpr Fp operator-() const { return raw(v == 0 ? 0 : kP - v); }
  friend constexpr Fp operator*(Fp a, Fp b) {
    const unsigned __int128 t = static_cast<unsigned __int128>(a.v) * b.v;
    const std::uint64_t lo = static_cast<std::uint64_t>(t) & kP;
    const std::uint64_t hi = static_cast<std::uint64_t>(t >> 61);
    return raw(reduce(lo + hi));
  }
  Fp& operator+=(Fp o) { return *this = *this + o; }
  Fp& operator-=(Fp o) { return *this = *this - o; }
  Fp& operator*=(Fp o) { return *this = *this * o; }
  friend constexpr bool operator==(Fp a, Fp b) { return a.v == b.v; }

  Fp pow(std::uint64_t e) const;
  // Throws InvalidInput for zero.
  Fp inv() const;
};

// Quadratic extension F_p[i] / (i^2 + 1); valid because p = 3 mod 4.
struct Fp2 {
  Fp re;
  Fp im;

  friend constexpr Fp2 operator+(Fp2 a, Fp2 b) { return {a.re + b.re, a.im + b.im}; }
  friend constexpr Fp2 operator-(Fp2 a, Fp2 b) { return {a.re - b.re, a.im - b.im}; }
  constexpr Fp2 operator-() const { return {-re, -im}; }
  friend constexpr Fp2 operator*(Fp2 a, Fp2 b) {
    const Fp ac = a.re * b.re;
    const Fp bd = a.im * b.im;
    const Fp cross = (a.re + a.im) * (b.re + b.im);
    return {ac - bd, cross - ac - bd};
  }
  friend constexpr Fp2 operator*(Fp2 a, Fp s) { return {a.re * s, a.im * s}; }
  friend constexpr Fp2 operator*(Fp s, Fp2 a) { return {a.re * s, a.im * s}; }
  Fp2& operator+=(Fp2 o) { return *this = *this + o; }
  Fp2& operator-=(Fp2 o) { return *this = *this - o; }
  friend constexpr bool operator==(Fp2 a, Fp2 b) { return a.re == b.re && a.im == b.im; }
};

std::string to_string(Fp x);
std::string to_string(Fp2 x);

}  // namespace calguard::itmac
