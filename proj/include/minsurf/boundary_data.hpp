#pragma once

#include "geometry.hpp"

#include <string_view>
#include <variant>

namespace minsurf {

// Registry of bounded, uniformly continuous (and C^1) perturbations. Each entry
// knows its exact sup norm.

struct ZeroPerturbation {
  double operator()(const Vec2&) const { return 0.0; }
  double sup_norm() const { return 0.0; }
};

/// amp * exp(-|x - center|^2 / (2 width^2))
struct GaussianBump {
  double amp{1.0};
  Vec2 center = Vec2::Zero();
  double width{1.0};
  double operator()(const Vec2& x) const { return amp * std::exp(-(x - center).squaredNorm() / (2.0 * width * width)); }
  double sup_norm() const { return std::abs(amp); }
};

/// amp * sin(freq * x1)
struct BoundedSine {
  double amp{1.0};
  double freq{1.0};
  double operator()(const Vec2& x) const { return amp * std::sin(freq * x.x()); }
  double sup_norm() const { return freq == 0.0 ? 0.0 : std::abs(amp); }
};

/// amp * (1 - s^2)^2 for s = |x - center| / radius < 1, zero outside.
struct CompactHat {
  double amp{1.0};
  Vec2 center = Vec2::Zero();
  double radius{1.0};
  double operator()(const Vec2& x) const {
    const double s2 = (x - center).squaredNorm() / (radius * radius);
    if (s2 >= 1.0) return 0.0;
    const double w = 1.0 - s2;
    return amp * w * w;
  }
  double sup_norm() const { return std::abs(amp); }
};

using Perturbation = std::variant<ZeroPerturbation, GaussianBump, BoundedSine, CompactHat>;

inline double evaluate(const Perturbation& phi, const Vec2& x) {
  return std::visit([&](const auto& f) { return f(x); }, phi);
}

inline double sup_norm(const Perturbation& phi) {
  return std::visit([](const auto& f) { return f.sup_norm(); }, phi);
}

inline std::string_view perturbation_name(const Perturbation& phi) {
  struct Name {
    std::string_view operator()(const ZeroPerturbation&) const { return "zero"; }
    std::string_view operator()(const GaussianBump&) const { return "gaussian_bump"; }
    std::string_view operator()(const BoundedSine&) const { return "bounded_sine"; }
    std::string_view operator()(const CompactHat&) const { return "compact_hat"; }
  };
  return std::visit(Name{}, phi);
}

/// g(x) = p.x + q + c x2 + phi(x)
struct BoundaryData {
  Vec2 p = Vec2::Zero();
  double q{0.0};
  double c{0.0};
  Perturbation phi{ZeroPerturbation{}};

  double linear(const Vec2& x) const { return p.dot(x) + q; }
  /// Far-field plane l(x) + c x2.
  double plane(const Vec2& x) const { return linear(x) + c * x.y(); }
  double operator()(const Vec2& x) const { return plane(x) + evaluate(phi, x); }
  double phi_sup() const { return sup_norm(phi); }
};

} // namespace minsurf
