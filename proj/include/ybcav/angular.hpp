#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdlib>
#include <string>

#include "ybcav/units.hpp"

namespace ybcav {

/// Half-integer quantum number stored as twice its value so that all
/// arithmetic on angular momenta stays exact.
class HalfInt {
 public:
  constexpr HalfInt() = default;

  static constexpr HalfInt from_twice(int twice) { return HalfInt(twice); }
  static constexpr HalfInt from_int(int value) { return HalfInt(2 * value); }

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }

  constexpr HalfInt operator-() const { return HalfInt(-twice_); }
  friend constexpr HalfInt operator+(HalfInt a, HalfInt b) { return HalfInt(a.twice_ + b.twice_); }
  friend constexpr HalfInt operator-(HalfInt a, HalfInt b) { return HalfInt(a.twice_ - b.twice_); }
  friend constexpr auto operator<=>(HalfInt, HalfInt) = default;

  std::string str() const {
    if (is_integer()) return std::to_string(twice_ / 2);
    return std::to_string(twice_) + "/2";
  }

 private:
  constexpr explicit HalfInt(int twice) : twice_(twice) {}
  int twice_ = 0;
};

/// numerator / 2, e.g. half(3) == 3/2, half(-1) == -1/2.
constexpr HalfInt half(int numerator) { return HalfInt::from_twice(numerator); }

constexpr HalfInt abs(HalfInt h) { return h.twice() < 0 ? -h : h; }

namespace detail {

inline double factorial(int n) {
  static const auto table = [] {
    std::array<double, 64> t{};
    t[0] = 1.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<double>(i);
    return t;
  }();
  if (n < 0 || n >= static_cast<int>(table.size())) throw DomainError("factorial argument out of range");
  return table[static_cast<std::size_t>(n)];
}

// (a + b + ...) / 2 for sums of twice-values that must be integral.
inline int halve(int twice_sum) {
  if (twice_sum % 2 != 0) throw DomainError("non-integral angular momentum combination");
  return twice_sum / 2;
}

inline bool triangle(HalfInt a, HalfInt b, HalfInt c) {
  const int ta = a.twice(), tb = b.twice(), tc = c.twice();
  if ((ta + tb + tc) % 2 != 0) return false;
  return tc >= std::abs(ta - tb) && tc <= ta + tb;
}

inline double triangle_coefficient(HalfInt a, HalfInt b, HalfInt c) {
  const int ta = a.twice(), tb = b.twice(), tc = c.twice();
  return std::sqrt(factorial(halve(ta + tb - tc)) * factorial(halve(ta - tb + tc)) *
                   factorial(halve(-ta + tb + tc)) / factorial(halve(ta + tb + tc) + 1));
}

inline double phase(int exponent) { return (exponent % 2 == 0) ? 1.0 : -1.0; }

// Racah sum and squared prefactor of the 3j symbol, kept apart so that
// squared coefficients can be formed without a square root.
struct ThreeJParts {
  double sign_sum = 0.0;
  double squared_prefactor = 0.0;
};

inline ThreeJParts three_j_parts(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3) {
  if ((m1 + m2 + m3).twice() != 0) return {};
  if (!triangle(j1, j2, j3)) return {};
  if (abs(m1) > j1 || abs(m2) > j2 || abs(m3) > j3) return {};
  if (!(j1 - m1).is_integer() || !(j2 - m2).is_integer() || !(j3 - m3).is_integer()) return {};

  const int a1 = halve(j3.twice() - j2.twice() + m1.twice());
  const int a2 = halve(j3.twice() - j1.twice() - m2.twice());
  const int b1 = halve(j1.twice() + j2.twice() - j3.twice());
  const int b2 = halve(j1.twice() - m1.twice());
  const int b3 = halve(j2.twice() + m2.twice());

  const int k_min = std::max({0, -a1, -a2});
  const int k_max = std::min({b1, b2, b3});
  double sum = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    sum += phase(k) / (factorial(k) * factorial(a1 + k) * factorial(a2 + k) * factorial(b1 - k) *
                       factorial(b2 - k) * factorial(b3 - k));
  }
  const double tri = factorial(halve(j1.twice() + j2.twice() - j3.twice())) *
                     factorial(halve(j1.twice() - j2.twice() + j3.twice())) *
                     factorial(halve(-j1.twice() + j2.twice() + j3.twice())) /
                     factorial(halve(j1.twice() + j2.twice() + j3.twice()) + 1);
  const double norm = factorial(halve(j1.twice() + m1.twice())) * factorial(halve(j1.twice() - m1.twice())) *
                      factorial(halve(j2.twice() + m2.twice())) * factorial(halve(j2.twice() - m2.twice())) *
                      factorial(halve(j3.twice() + m3.twice())) * factorial(halve(j3.twice() - m3.twice()));
  const int sign_exp = halve(j1.twice() - j2.twice() - m3.twice());
  return {phase(sign_exp) * sum, tri * norm};
}

}  // namespace detail

/// Square of the Wigner 3j symbol, evaluated without a square root.
inline double wigner_3j_squared(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3) {
  const auto p = detail::three_j_parts(j1, j2, j3, m1, m2, m3);
  return p.squared_prefactor * p.sign_sum * p.sign_sum;
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3) by the Racah formula.
inline double wigner_3j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3) {
  const auto p = detail::three_j_parts(j1, j2, j3, m1, m2, m3);
  return std::sqrt(p.squared_prefactor) * p.sign_sum;
}

/// |<j1 m1; j2 m2 | J M>|^2 without a square root.
inline double clebsch_gordan_squared(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M) {
  return (J.twice() + 1.0) * wigner_3j_squared(j1, j2, J, m1, m2, -M);
}

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M>.
inline double clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M) {
  const int sign_exp = detail::halve(j1.twice() - j2.twice() + M.twice());
  return detail::phase(sign_exp) * std::sqrt(J.twice() + 1.0) * wigner_3j(j1, j2, J, m1, m2, -M);
}

/// Wigner 6j symbol {a b c; d e f} by the Racah formula.
inline double wigner_6j(HalfInt a, HalfInt b, HalfInt c, HalfInt d, HalfInt e, HalfInt f) {
  using detail::factorial;
  using detail::halve;
  if (!detail::triangle(a, b, c) || !detail::triangle(a, e, f) || !detail::triangle(d, b, f) ||
      !detail::triangle(d, e, c))
    return 0.0;
  const int t1 = halve(a.twice() + b.twice() + c.twice());
  const int t2 = halve(a.twice() + e.twice() + f.twice());
  const int t3 = halve(d.twice() + b.twice() + f.twice());
  const int t4 = halve(d.twice() + e.twice() + c.twice());
  const int u1 = halve(a.twice() + b.twice() + d.twice() + e.twice());
  const int u2 = halve(a.twice() + c.twice() + d.twice() + f.twice());
  const int u3 = halve(b.twice() + c.twice() + e.twice() + f.twice());

  const int t_min = std::max({t1, t2, t3, t4});
  const int t_max = std::min({u1, u2, u3});
  double sum = 0.0;
  for (int t = t_min; t <= t_max; ++t) {
    sum += detail::phase(t) * factorial(t + 1) /
           (factorial(t - t1) * factorial(t - t2) * factorial(t - t3) * factorial(t - t4) * factorial(u1 - t) *
            factorial(u2 - t) * factorial(u3 - t));
  }
  return detail::triangle_coefficient(a, b, c) * detail::triangle_coefficient(a, e, f) *
         detail::triangle_coefficient(d, b, f) * detail::triangle_coefficient(d, e, c) * sum;
}

/// Squared hyperfine dipole matrix element |<J' F' m'| d_q | J F m>|^2 in
/// units of the squared reduced fine-structure element |<J'||d||J>|^2.
inline double hyperfine_line_strength(HalfInt j_lower, HalfInt f_lower, HalfInt m_lower, HalfInt j_upper,
                                      HalfInt f_upper, HalfInt nuclear_spin, int q) {
  const HalfInt one = HalfInt::from_int(1);
  const HalfInt m_upper = m_lower + HalfInt::from_int(q);
  if (abs(m_upper) > f_upper) return 0.0;
  const double six_j = wigner_6j(j_upper, f_upper, nuclear_spin, f_lower, j_lower, one);
  const double three_j_sq = wigner_3j_squared(f_upper, one, f_lower, -m_upper, HalfInt::from_int(q), m_lower);
  return (f_lower.twice() + 1.0) * (f_upper.twice() + 1.0) * six_j * six_j * three_j_sq;
}

}  // namespace ybcav
