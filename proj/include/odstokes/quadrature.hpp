#pragma once

#include <array>
#include <cmath>

namespace odstokes::quadrature {

/// Point in barycentric coordinates with a weight normalized to sum 1 over the triangle.
struct TrianglePoint {
  std::array<double, 3> bary;
  double weight;
};

/// 6-point symmetric rule, exact for total degree 4.
inline constexpr std::array<TrianglePoint, 6> triangle_degree4() {
  constexpr double a1 = 0.44594849091596488631832925388305;
  constexpr double b1 = 0.10810301816807022736334149223390;
  constexpr double w1 = 0.22338158967801146569500700843312;
  constexpr double a2 = 0.09157621350977074345957146340220;
  constexpr double b2 = 0.81684757298045851308085707319560;
  constexpr double w2 = 0.10995174365532186763832632490021;
  return {{
      {{a1, a1, b1}, w1},
      {{a1, b1, a1}, w1},
      {{b1, a1, a1}, w1},
      {{a2, a2, b2}, w2},
      {{a2, b2, a2}, w2},
      {{b2, a2, a2}, w2},
  }};
}

/// 7-point rule, exact for total degree 5. Used for error norms of non-polynomial fields.
inline std::array<TrianglePoint, 7> triangle_degree5() {
  const double s = std::sqrt(15.0);
  const double a1 = (6.0 - s) / 21.0;
  const double b1 = 1.0 - 2.0 * a1;
  const double w1 = (155.0 - s) / 1200.0;
  const double a2 = (6.0 + s) / 21.0;
  const double b2 = 1.0 - 2.0 * a2;
  const double w2 = (155.0 + s) / 1200.0;
  return {{
      {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
      {{a1, a1, b1}, w1},
      {{a1, b1, a1}, w1},
      {{b1, a1, a1}, w1},
      {{a2, a2, b2}, w2},
      {{a2, b2, a2}, w2},
      {{b2, a2, a2}, w2},
  }};
}

/// Gauss point on [0,1] with weight normalized to sum 1.
struct LinePoint {
  double s;
  double weight;
};

/// 3-point Gauss-Legendre, exact for degree 5.
inline std::array<LinePoint, 3> line_gauss3() {
  const double d = std::sqrt(15.0) / 10.0;
  return {{{0.5 - d, 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 + d, 5.0 / 18.0}}};
}

}  // namespace odstokes::quadrature
