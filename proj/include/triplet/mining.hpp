#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "triplet/geometry.hpp"
#include "triplet/loss.hpp"

namespace triplet {

using Label = int;

// Embeddings with parallel class labels.
struct Batch {
  std::vector<UnitVector> embeddings;
  std::vector<Label> labels;

  Batch() = default;
  Batch(std::vector<UnitVector> e, std::vector<Label> l) : embeddings(std::move(e)), labels(std::move(l)) {
    validate();
  }

  std::size_t size() const noexcept { return embeddings.size(); }

  void validate() const {
    if (embeddings.size() != labels.size()) throw InvalidArgument("embeddings and labels differ in length");
    if (embeddings.size() < 2) throw InvalidArgument("a batch needs at least two items");
    for (const auto& e : embeddings) {
      if (e.dim() != embeddings.front().dim()) throw DimensionMismatch(embeddings.front().dim(), e.dim());
    }
  }
};

using SimilarityMatrix = Matrix;

inline SimilarityMatrix similarity_matrix(const Batch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  SimilarityMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      m(i, j) = m(j, i) = cosine(batch.embeddings[i], batch.embeddings[j]);
    }
  }
  return m;
}

enum class MiningStrategy { Random, HardNegative, SemiHardNegative, EasyPositive, EasyPositiveHardNegative };

inline std::string_view to_string(MiningStrategy s) {
  switch (s) {
    case MiningStrategy::Random: return "random";
    case MiningStrategy::HardNegative: return "hn";
    case MiningStrategy::SemiHardNegative: return "shn";
    case MiningStrategy::EasyPositive: return "ep";
    case MiningStrategy::EasyPositiveHardNegative: return "ephn";
  }
  return "?";
}

struct MinedTriplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  TripletCoord coord;
};

namespace detail {

inline std::size_t uniform_pick(std::mt19937_64& rng, const std::vector<std::size_t>& from) {
  std::uniform_int_distribution<std::size_t> pick(0, from.size() - 1);
  return from[pick(rng)];
}

// Lowest index wins ties.
inline std::size_t argmax_row(const SimilarityMatrix& m, std::size_t row, const std::vector<std::size_t>& from) {
  std::size_t best = from.front();
  for (std::size_t j : from) {
    if (m(row, j) > m(row, best)) best = j;
  }
  return best;
}

inline std::size_t argmin_row(const SimilarityMatrix& m, std::size_t row, const std::vector<std::size_t>& from) {
  std::size_t best = from.front();
  for (std::size_t j : from) {
    if (m(row, j) < m(row, best)) best = j;
  }
  return best;
}

}  // namespace detail

// One triplet per anchor that has both a same-class partner and a
// different-class example; other anchors are skipped. Random choices draw
// from a single stream seeded by `seed`, anchors in index order, positive
// before negative.
inline std::vector<MinedTriplet> mine(const Batch& batch, const SimilarityMatrix& sim, MiningStrategy strategy,
                                      std::uint64_t seed) {
  batch.validate();
  const std::size_t n = batch.size();
  if (static_cast<std::size_t>(sim.rows()) != n || static_cast<std::size_t>(sim.cols()) != n) {
    throw DimensionMismatch(static_cast<std::size_t>(sim.rows()), n);
  }
  bool two_classes = false;
  for (std::size_t i = 1; i < n && !two_classes; ++i) two_classes = batch.labels[i] != batch.labels[0];
  if (!two_classes) throw NoNegatives();

  const bool easy_positive =
      strategy == MiningStrategy::EasyPositive || strategy == MiningStrategy::EasyPositiveHardNegative;

  std::mt19937_64 rng(seed);
  std::vector<MinedTriplet> out;
  std::vector<std::size_t> positives, negatives, feasible;
  for (std::size_t a = 0; a < n; ++a) {
    positives.clear();
    negatives.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      (batch.labels[j] == batch.labels[a] ? positives : negatives).push_back(j);
    }
    if (positives.empty() || negatives.empty()) continue;

    const std::size_t p =
        easy_positive ? detail::argmax_row(sim, a, positives) : detail::uniform_pick(rng, positives);

    std::size_t neg = 0;
    switch (strategy) {
      case MiningStrategy::Random:
      case MiningStrategy::EasyPositive: neg = detail::uniform_pick(rng, negatives); break;
      case MiningStrategy::HardNegative:
      case MiningStrategy::EasyPositiveHardNegative: neg = detail::argmax_row(sim, a, negatives); break;
      case MiningStrategy::SemiHardNegative: {
        feasible.clear();
        for (std::size_t j : negatives) {
          if (sim(a, j) < sim(a, p)) feasible.push_back(j);
        }
        neg = feasible.empty() ? detail::argmin_row(sim, a, negatives) : detail::argmax_row(sim, a, feasible);
        break;
      }
    }
    out.push_back({a, p, neg, {sim(a, p), sim(a, neg)}});
  }
  return out;
}

inline std::vector<MinedTriplet> mine(const Batch& batch, MiningStrategy strategy, std::uint64_t seed) {
  return mine(batch, similarity_matrix(batch), strategy, seed);
}

inline double hard_fraction(std::span<const MinedTriplet> triplets) {
  if (triplets.empty()) throw InvalidArgument("hard fraction of an empty triplet list");
  std::size_t hard = 0;
  for (const auto& t : triplets) hard += is_hard(t.coord) ? 1 : 0;
  return static_cast<double>(hard) / static_cast<double>(triplets.size());
}

}  // namespace triplet
