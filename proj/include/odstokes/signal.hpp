#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "odstokes/errors.hpp"

namespace odstokes {

/// Time signals with a first derivative available everywhere on [0, T].
namespace signals {

struct Constant {
  double value = 0.0;
  bool operator==(const Constant&) const = default;
};

/// a + b t
struct Ramp {
  double offset = 0.0;
  double slope = 0.0;
  bool operator==(const Ramp&) const = default;
};

/// A sin(omega t + phase)
struct Sinusoid {
  double amplitude = 1.0;
  double omega = 1.0;
  double phase = 0.0;
  bool operator==(const Sinusoid&) const = default;
};

/// C1 cubic transition from `from` to `to` over [t0, t1].
struct SmoothStep {
  double from = 0.0;
  double to = 1.0;
  double t0 = 0.0;
  double t1 = 1.0;
  bool operator==(const SmoothStep&) const = default;
};

/// Natural cubic spline through strictly increasing knots.
struct Sampled {
  std::vector<double> knots;
  std::vector<double> values;
  bool operator==(const Sampled& o) const { return knots == o.knots && values == o.values; }
};

}  // namespace signals

class Signal {
 public:
  using Kind = std::variant<signals::Constant, signals::Ramp, signals::Sinusoid, signals::SmoothStep, signals::Sampled>;

  Signal() : Signal(signals::Constant{0.0}) {}

  explicit Signal(Kind kind, double horizon = std::numeric_limits<double>::infinity())
      : kind_(std::move(kind)), horizon_(horizon) {
    if (!(horizon_ > 0.0)) throw InvalidParameter("signal horizon must be positive");
    if (const auto* s = std::get_if<signals::SmoothStep>(&kind_)) {
      if (!(s->t1 > s->t0)) throw InvalidParameter("smooth-step needs t1 > t0");
    }
    if (const auto* s = std::get_if<signals::Sampled>(&kind_)) prepare_spline(*s);
  }

  static Signal constant(double c) { return Signal(signals::Constant{c}); }
  static Signal ramp(double offset, double slope) { return Signal(signals::Ramp{offset, slope}); }
  static Signal sinusoid(double amplitude, double omega, double phase = 0.0) {
    return Signal(signals::Sinusoid{amplitude, omega, phase});
  }
  static Signal smooth_step(double from, double to, double t0, double t1) {
    return Signal(signals::SmoothStep{from, to, t0, t1});
  }
  static Signal sampled(std::vector<double> knots, std::vector<double> values) {
    return Signal(signals::Sampled{std::move(knots), std::move(values)});
  }

  /// Same signal restricted to [0, T].
  Signal with_horizon(double horizon) const { return Signal(kind_, horizon); }
  double horizon() const { return horizon_; }
  const Kind& kind() const { return kind_; }

  /// Same signal multiplied by a constant factor.
  Signal scaled(double factor) const {
    Kind k = std::visit(
        [factor](auto s) -> Kind {
          using T = decltype(s);
          if constexpr (std::is_same_v<T, signals::Constant>) {
            s.value *= factor;
          } else if constexpr (std::is_same_v<T, signals::Ramp>) {
            s.offset *= factor;
            s.slope *= factor;
          } else if constexpr (std::is_same_v<T, signals::Sinusoid>) {
            s.amplitude *= factor;
          } else if constexpr (std::is_same_v<T, signals::SmoothStep>) {
            s.from *= factor;
            s.to *= factor;
          } else {
            for (double& v : s.values) v *= factor;
          }
          return s;
        },
        kind_);
    return Signal(std::move(k), horizon_);
  }

  double eval(double t) const {
    check_domain(t);
    return std::visit([&](const auto& s) { return value_of(s, t); }, kind_);
  }

  double derivative(double t) const {
    check_domain(t);
    return std::visit([&](const auto& s) { return derivative_of(s, t); }, kind_);
  }

  bool operator==(const Signal& o) const { return kind_ == o.kind_ && horizon_ == o.horizon_; }

 private:
  void check_domain(double t) const {
    const double slack = 1e-9 * (std::isfinite(horizon_) ? std::max(1.0, horizon_) : 1.0);
    if (!(t >= -slack) || t > horizon_ + slack)
      throw DomainError("signal evaluated at t=" + std::to_string(t) + " outside [0, " + std::to_string(horizon_) + "]");
  }

  static double value_of(const signals::Constant& s, double) { return s.value; }
  static double derivative_of(const signals::Constant&, double) { return 0.0; }

  static double value_of(const signals::Ramp& s, double t) { return s.offset + s.slope * t; }
  static double derivative_of(const signals::Ramp& s, double) { return s.slope; }

  static double value_of(const signals::Sinusoid& s, double t) { return s.amplitude * std::sin(s.omega * t + s.phase); }
  static double derivative_of(const signals::Sinusoid& s, double t) {
    return s.amplitude * s.omega * std::cos(s.omega * t + s.phase);
  }

  static double value_of(const signals::SmoothStep& s, double t) {
    if (t <= s.t0) return s.from;
    if (t >= s.t1) return s.to;
    const double x = (t - s.t0) / (s.t1 - s.t0);
    return s.from + (s.to - s.from) * x * x * (3.0 - 2.0 * x);
  }
  static double derivative_of(const signals::SmoothStep& s, double t) {
    if (t <= s.t0 || t >= s.t1) return 0.0;
    const double x = (t - s.t0) / (s.t1 - s.t0);
    return (s.to - s.from) * 6.0 * x * (1.0 - x) / (s.t1 - s.t0);
  }

  void prepare_spline(const signals::Sampled& s) {
    const std::size_t n = s.knots.size();
    if (n < 2 || s.values.size() != n) throw InvalidParameter("sampled signal needs >= 2 knots with matching values");
    for (std::size_t i = 1; i < n; ++i)
      if (!(s.knots[i] > s.knots[i - 1])) throw InvalidParameter("sampled signal knots must be strictly increasing");
    // natural spline second derivatives, tridiagonal solve
    second_.assign(n, 0.0);
    if (n > 2) {
      std::vector<double> c(n, 0.0), d(n, 0.0);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = s.knots[i] - s.knots[i - 1];
        const double h1 = s.knots[i + 1] - s.knots[i];
        const double rhs = 6.0 * ((s.values[i + 1] - s.values[i]) / h1 - (s.values[i] - s.values[i - 1]) / h0);
        const double diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
        c[i] = h1 / diag;
        d[i] = (rhs - h0 * d[i - 1]) / diag;
      }
      for (std::size_t i = n - 2; i >= 1; --i) second_[i] = d[i] - c[i] * second_[i + 1];
    }
  }

  std::size_t segment(const signals::Sampled& s, double t) const {
    if (t < s.knots.front() - 1e-12 || t > s.knots.back() + 1e-12)
      throw DomainError("sampled signal evaluated outside its knot range");
    auto it = std::upper_bound(s.knots.begin(), s.knots.end(), t);
    std::size_t i = it == s.knots.begin() ? 0 : static_cast<std::size_t>(it - s.knots.begin()) - 1;
    return std::min(i, s.knots.size() - 2);
  }

  double value_of(const signals::Sampled& s, double t) const {
    const std::size_t i = segment(s, t);
    const double h = s.knots[i + 1] - s.knots[i];
    const double a = (s.knots[i + 1] - t) / h;
    const double b = (t - s.knots[i]) / h;
    return a * s.values[i] + b * s.values[i + 1] +
           ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * h * h / 6.0;
  }

  double derivative_of(const signals::Sampled& s, double t) const {
    const std::size_t i = segment(s, t);
    const double h = s.knots[i + 1] - s.knots[i];
    const double a = (s.knots[i + 1] - t) / h;
    const double b = (t - s.knots[i]) / h;
    return (s.values[i + 1] - s.values[i]) / h +
           (-(3.0 * a * a - 1.0) * second_[i] + (3.0 * b * b - 1.0) * second_[i + 1]) * h / 6.0;
  }

  Kind kind_;
  double horizon_;
  std::vector<double> second_;
};

}  // namespace odstokes
