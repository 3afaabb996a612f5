#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <span>

#include <Eigen/Dense>

#include "triplet/error.hpp"

namespace triplet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kMinNorm = 1e-12;
inline constexpr double kColinearTol = 1e-9;

inline double clamp_unit(double s) { return std::clamp(s, -1.0, 1.0); }

// sqrt(1 - s^2) with the radicand clamped at zero.
inline double sine_of(double s) { return std::sqrt(std::max(0.0, 1.0 - s * s)); }

// A point on the unit hypersphere of dimension >= 2. Only obtainable
// through normalize(), so the unit-norm invariant always holds.
class UnitVector {
 public:
  const Vector& components() const noexcept { return v_; }
  Eigen::Index dim() const noexcept { return v_.size(); }
  double operator[](Eigen::Index i) const { return v_[i]; }

  UnitVector operator-() const { return UnitVector(-v_); }

  friend UnitVector normalize(const Vector& v);

 private:
  explicit UnitVector(Vector v) : v_(std::move(v)) {}
  Vector v_;
};

inline UnitVector normalize(const Vector& v) {
  if (v.size() < 2) throw InvalidArgument("unit vectors need dimension >= 2");
  const double n = v.norm();
  if (!(n > kMinNorm)) throw DegenerateVector();
  return UnitVector(v / n);
}

inline UnitVector normalize(std::span<const double> v) {
  return normalize(Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))));
}

inline UnitVector normalize(std::initializer_list<double> v) {
  return normalize(std::span<const double>(v.begin(), v.size()));
}

inline double cosine(const UnitVector& u, const UnitVector& v) {
  if (u.dim() != v.dim()) throw DimensionMismatch(u.dim(), v.dim());
  return clamp_unit(u.components().dot(v.components()));
}

struct TripletFeatures {
  UnitVector anchor;
  UnitVector positive;
  UnitVector negative;

  TripletFeatures(UnitVector a, UnitVector p, UnitVector n)
      : anchor(std::move(a)), positive(std::move(p)), negative(std::move(n)) {
    if (positive.dim() != anchor.dim()) throw DimensionMismatch(anchor.dim(), positive.dim());
    if (negative.dim() != anchor.dim()) throw DimensionMismatch(anchor.dim(), negative.dim());
  }

  Eigen::Index dim() const noexcept { return anchor.dim(); }
};

// A triplet's location on the diagram: anchor-positive and anchor-negative
// cosine similarity.
struct TripletCoord {
  double s_ap = 0.0;
  double s_an = 0.0;

  bool valid(double tol = 1e-9) const {
    return std::isfinite(s_ap) && std::isfinite(s_an) && std::abs(s_ap) <= 1.0 + tol &&
           std::abs(s_an) <= 1.0 + tol;
  }

  friend bool operator==(const TripletCoord&, const TripletCoord&) = default;
};

inline TripletCoord coord_of(const TripletFeatures& t) {
  return {cosine(t.anchor, t.positive), cosine(t.anchor, t.negative)};
}

// Cosine between the components of positive and negative orthogonal to the
// anchor. 1 when all three are co-planar with positive and negative on the
// same side of the anchor, 0 when the two tangent directions are orthogonal.
inline double gamma(const TripletFeatures& t) {
  const Vector& a = t.anchor.components();
  const double s_ap = a.dot(t.positive.components());
  const double s_an = a.dot(t.negative.components());
  if (std::abs(s_ap) >= 1.0 - kColinearTol || std::abs(s_an) >= 1.0 - kColinearTol) {
    throw UndefinedGamma();
  }
  const Vector p_perp = t.positive.components() - s_ap * a;
  const Vector n_perp = t.negative.components() - s_an * a;
  const double denom = p_perp.norm() * n_perp.norm();
  if (!(denom > 0.0)) throw UndefinedGamma();
  return clamp_unit(p_perp.dot(n_perp) / denom);
}

// Positive-negative similarity implied by the diagram coordinate and gamma.
inline double s_pn_from(const TripletCoord& c, double g) {
  return c.s_ap * c.s_an + g * sine_of(c.s_ap) * sine_of(c.s_an);
}

}  // namespace triplet
