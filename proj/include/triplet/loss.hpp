#pragma once

#include <cmath>
#include <string_view>

#include "triplet/geometry.hpp"

namespace triplet {

enum class LossKind { NCA, Margin, SCT };

// Loss selection and its parameters. `margin` is the hinge offset of the
// margin loss, not a learning rate.
struct LossSpec {
  LossKind kind = LossKind::NCA;
  double lambda = 1.0;
  double margin = 0.0;
  LossKind base = LossKind::NCA;  // SCT easy branch: NCA or Margin
  bool freeze_anchor_on_hard = false;  // SCT hard branch: drop the anchor gradient

  void validate() const {
    if (!std::isfinite(lambda) || lambda < 0.0) throw InvalidArgument("lambda must be finite and >= 0");
    if (!std::isfinite(margin) || margin < 0.0) throw InvalidArgument("margin must be finite and >= 0");
    if (base == LossKind::SCT) throw InvalidArgument("SCT base loss must be NCA or Margin");
  }

  static LossSpec nca() { return {}; }
  static LossSpec margin_loss(double m) { return {LossKind::Margin, 1.0, m}; }
  static LossSpec sct(double lambda = 1.0, LossKind base = LossKind::NCA, double m = 0.0) {
    return {LossKind::SCT, lambda, m, base};
  }
};

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::NCA: return "nca";
    case LossKind::Margin: return "margin";
    case LossKind::SCT: return "sct";
  }
  return "?";
}

// dL/dS_ap and dL/dS_an.
struct CoordGrad {
  double d_sap = 0.0;
  double d_san = 0.0;
};

struct FeatureGrads {
  Vector g_a;
  Vector g_p;
  Vector g_n;
};

// Softmax weight on the negative, exp(S_an) / (exp(S_ap) + exp(S_an)).
inline double nca_weight(const TripletCoord& c) { return 1.0 / (1.0 + std::exp(c.s_ap - c.s_an)); }

inline double nca_loss(const TripletCoord& c) { return std::log1p(std::exp(c.s_an - c.s_ap)); }

// Hinge argument on the unit sphere: |a-p|^2 - |a-n|^2 + margin.
inline double margin_argument(const TripletCoord& c, double margin) {
  return 2.0 * (c.s_an - c.s_ap) + margin;
}

inline double margin_loss(const TripletCoord& c, double margin) {
  return std::max(margin_argument(c, margin), 0.0);
}

// Hard triplet: the negative is strictly more similar than the positive.
inline bool is_hard(const TripletCoord& c) { return c.s_an > c.s_ap; }

namespace detail {

inline double base_loss(const TripletCoord& c, LossKind base, double margin) {
  return base == LossKind::Margin ? margin_loss(c, margin) : nca_loss(c);
}

inline CoordGrad base_coord_grad(const TripletCoord& c, LossKind base, double margin) {
  if (base == LossKind::Margin) {
    if (margin_argument(c, margin) > 0.0) return {-2.0, 2.0};
    return {0.0, 0.0};
  }
  const double sigma = nca_weight(c);
  return {-sigma, sigma};
}

inline FeatureGrads base_feature_grads(const TripletFeatures& t, const TripletCoord& c, LossKind base,
                                       double margin) {
  const Vector& a = t.anchor.components();
  const Vector& p = t.positive.components();
  const Vector& n = t.negative.components();
  if (base == LossKind::Margin) {
    if (margin_argument(c, margin) > 0.0) {
      return {2.0 * (n - p), -2.0 * (a - p), 2.0 * (a - n)};
    }
    const Vector zero = Vector::Zero(a.size());
    return {zero, zero, zero};
  }
  const double sigma = nca_weight(c);
  return {sigma * (n - p), -sigma * a, sigma * a};
}

}  // namespace detail

inline double sct_loss(const TripletCoord& c, const LossSpec& spec) {
  if (is_hard(c)) return spec.lambda * c.s_an;
  return detail::base_loss(c, spec.base, spec.margin);
}

inline double loss_value(const TripletCoord& c, const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::NCA: return nca_loss(c);
    case LossKind::Margin: return margin_loss(c, spec.margin);
    case LossKind::SCT: return sct_loss(c, spec);
  }
  return 0.0;
}

// Margin subgradient at D == 0 is zero.
inline CoordGrad coord_grad(const TripletCoord& c, const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::NCA: return detail::base_coord_grad(c, LossKind::NCA, spec.margin);
    case LossKind::Margin: return detail::base_coord_grad(c, LossKind::Margin, spec.margin);
    case LossKind::SCT:
      if (is_hard(c)) return {0.0, spec.lambda};
      return detail::base_coord_grad(c, spec.base, spec.margin);
  }
  return {};
}

// Gradients with respect to the three feature vectors, without any
// learning-rate factor. The margin branch uses the squared-distance form, so
// its gradients carry radial components the NCA branch does not.
inline FeatureGrads feature_grads(const TripletFeatures& t, const LossSpec& spec) {
  const TripletCoord c = coord_of(t);
  switch (spec.kind) {
    case LossKind::NCA:
    case LossKind::Margin: return detail::base_feature_grads(t, c, spec.kind, spec.margin);
    case LossKind::SCT:
      if (is_hard(c)) {
        const Vector& a = t.anchor.components();
        const Vector& n = t.negative.components();
        Vector g_a = spec.freeze_anchor_on_hard ? Vector(Vector::Zero(a.size())) : Vector(spec.lambda * n);
        return {std::move(g_a), Vector::Zero(a.size()), spec.lambda * a};
      }
      return detail::base_feature_grads(t, c, spec.base, spec.margin);
  }
  return {};
}

}  // namespace triplet
