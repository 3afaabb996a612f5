#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "triplet/geometry.hpp"
#include "triplet/loss.hpp"

namespace triplet {

struct StepParams {
  double learning_rate = 0.1;
  double gamma = 1.0;           // plane projection factor between the ap and an planes
  double entanglement_p = 0.0;  // coupling strength; q = S_ap * S_an is computed per cell
  LossSpec loss;

  void validate() const {
    if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
      throw InvalidArgument("learning rate must be finite and >= 0");
    }
    if (!std::isfinite(gamma) || std::abs(gamma) > 1.0) throw InvalidArgument("gamma must lie in [-1, 1]");
    if (!std::isfinite(entanglement_p) || entanglement_p < 0.0) {
      throw InvalidArgument("entanglement p must be finite and >= 0");
    }
    loss.validate();
  }
};

// One feature-space gradient step seen through the diagram.
struct SimilarityUpdate {
  double beta = 0.0;
  double s_ap_new = 0.0;  // dot products before renormalization
  double s_an_new = 0.0;
  double norm_a = 1.0;
  double norm_p = 1.0;
  double norm_n = 1.0;
  double d_sap = 0.0;  // change in cosine after renormalization
  double d_san = 0.0;
  double d_sap_total = 0.0;  // with entanglement
  double d_san_total = 0.0;
};

namespace detail {

inline SimilarityUpdate identity_update(const TripletCoord& c) {
  SimilarityUpdate u;
  u.s_ap_new = c.s_ap;
  u.s_an_new = c.s_an;
  return u;
}

// Shared tail of both steps: anchor norm, renormalized deltas, entanglement.
inline void finish_update(SimilarityUpdate& u, const TripletCoord& c, double g, double p) {
  const double b = u.beta;
  const double sin_ap = sine_of(c.s_ap);
  const double sin_an = sine_of(c.s_an);
  const double along = 1.0 + b * c.s_ap - b * c.s_an;
  const double in_plane = b * sin_ap - g * b * sin_an;
  const double off_plane = b * sine_of(g) * sin_an;
  u.norm_a = std::sqrt(along * along + in_plane * in_plane + off_plane * off_plane);
  u.d_sap = u.s_ap_new / (u.norm_a * u.norm_p) - c.s_ap;
  u.d_san = u.s_an_new / (u.norm_a * u.norm_n) - c.s_an;
  const double q = c.s_ap * c.s_an;
  u.d_sap_total = u.d_sap + p * q * u.d_san;
  u.d_san_total = u.d_san + p * q * u.d_sap;
}

}  // namespace detail

// NCA step with an explicit beta (learning rate times the softmax weight).
inline SimilarityUpdate step_nca_beta(const TripletCoord& c, double g, double beta, double p) {
  SimilarityUpdate u;
  u.beta = beta;
  const double b = beta;
  const double s_pn = s_pn_from(c, g);
  u.s_ap_new = (1.0 + b * b) * c.s_ap + 2.0 * b - b * s_pn - b * b * c.s_an;
  u.s_an_new = (1.0 + b * b) * c.s_an - 2.0 * b + b * s_pn - b * b * c.s_ap;
  const double sin_ap = sine_of(c.s_ap);
  const double sin_an = sine_of(c.s_an);
  u.norm_p = std::hypot(1.0 + b * c.s_ap, b * sin_ap);
  u.norm_n = std::hypot(1.0 - b * c.s_an, b * sin_an);
  detail::finish_update(u, c, g, p);
  return u;
}

// Margin step with an explicit beta (2 times the learning rate). Assumes the
// hinge is active; step_margin handles the inactive side.
inline SimilarityUpdate step_margin_beta(const TripletCoord& c, double g, double beta, double p) {
  SimilarityUpdate u;
  u.beta = beta;
  const double b = beta;
  const double s_pn = s_pn_from(c, g);
  u.s_ap_new = (1.0 - b + b * b) * c.s_ap + 2.0 * b - b * b - b * (1.0 - b) * s_pn - b * b * c.s_an;
  u.s_an_new = (1.0 + b + b * b) * c.s_an - 2.0 * b - b * b + b * (1.0 + b) * s_pn - b * b * c.s_ap;
  const double sin_ap = sine_of(c.s_ap);
  const double sin_an = sine_of(c.s_an);
  u.norm_p = std::hypot(1.0 - b + b * c.s_ap, b * sin_ap);
  u.norm_n = std::hypot(1.0 + b - b * c.s_an, b * sin_an);
  detail::finish_update(u, c, g, p);
  return u;
}

inline SimilarityUpdate step_nca(const TripletCoord& c, const StepParams& params) {
  const double beta = params.learning_rate * nca_weight(c);
  return step_nca_beta(c, params.gamma, beta, params.entanglement_p);
}

inline SimilarityUpdate step_margin(const TripletCoord& c, const StepParams& params) {
  if (margin_argument(c, params.loss.margin) <= 0.0) return detail::identity_update(c);
  return step_margin_beta(c, params.gamma, 2.0 * params.learning_rate, params.entanglement_p);
}

// Dispatches on params.loss.kind. SCT has no closed-form diagram step.
inline SimilarityUpdate step(const TripletCoord& c, const StepParams& params) {
  switch (params.loss.kind) {
    case LossKind::NCA: return step_nca(c, params);
    case LossKind::Margin: return step_margin(c, params);
    case LossKind::SCT: break;
  }
  throw InvalidArgument("diagram dynamics support the nca and margin losses only");
}

struct GridSpec {
  double s_ap_min = -1.0;
  double s_ap_max = 1.0;
  double s_an_min = -1.0;
  double s_an_max = 1.0;
  std::size_t resolution = 41;

  void validate() const {
    if (resolution < 2) throw InvalidArgument("grid resolution must be >= 2");
    auto in_range = [](double lo, double hi) { return -1.0 <= lo && lo < hi && hi <= 1.0; };
    if (!in_range(s_ap_min, s_ap_max) || !in_range(s_an_min, s_an_max)) {
      throw InvalidArgument("grid ranges must be increasing and inside [-1, 1]");
    }
  }

  // Endpoints are hit exactly.
  static double tick(double lo, double hi, std::size_t i, std::size_t n) {
    if (i + 1 == n) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
};

struct FieldCell {
  TripletCoord coord;
  SimilarityUpdate update;
};

struct VectorField {
  GridSpec grid;
  StepParams params;
  std::vector<FieldCell> cells;  // s_ap major, s_an minor
};

inline VectorField vector_field(const GridSpec& grid, const StepParams& params) {
  grid.validate();
  params.validate();
  VectorField field{grid, params, {}};
  const std::size_t n = grid.resolution;
  field.cells.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s_ap = GridSpec::tick(grid.s_ap_min, grid.s_ap_max, i, n);
    for (std::size_t j = 0; j < n; ++j) {
      const TripletCoord c{s_ap, GridSpec::tick(grid.s_an_min, grid.s_an_max, j, n)};
      field.cells.push_back({c, step(c, params)});
    }
  }
  return field;
}

// Rolls a coordinate forward by the entangled deltas. Returns steps + 1
// points, starting with `start`.
inline std::vector<TripletCoord> trajectory(const TripletCoord& start, const StepParams& params,
                                            std::size_t steps) {
  if (steps < 1) throw InvalidArgument("trajectory needs at least one step");
  params.validate();
  std::vector<TripletCoord> path;
  path.reserve(steps + 1);
  path.push_back(start);
  TripletCoord c = start;
  for (std::size_t k = 0; k < steps; ++k) {
    const SimilarityUpdate u = step(c, params);
    c = {clamp_unit(c.s_ap + u.d_sap_total), clamp_unit(c.s_an + u.d_san_total)};
    path.push_back(c);
  }
  return path;
}

}  // namespace triplet
