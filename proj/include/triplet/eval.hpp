#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "triplet/geometry.hpp"
#include "triplet/loss.hpp"
#include "triplet/mining.hpp"

namespace triplet {

struct RetrievalResult {
  std::size_t k = 1;
  double recall = 0.0;
  std::size_t num_queries = 0;
};

// Fraction of queries with at least one same-label item among the k most
// similar gallery items. With exclude_self the gallery is the query set
// itself and gallery item i is never retrieved for query i. Equal
// similarities rank the lower gallery index first.
inline RetrievalResult recall_at_k(const Batch& queries, const Batch& gallery, std::size_t k, bool exclude_self) {
  if (queries.size() == 0) throw InvalidArgument("recall@k needs at least one query");
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (exclude_self) {
    if (gallery.size() != queries.size()) {
      throw InvalidArgument("exclude_self requires the gallery to be the query set");
    }
    if (gallery.size() <= k) throw InvalidArgument("gallery must hold more than k items when excluding self");
  } else if (gallery.size() < k) {
    throw InvalidArgument("gallery smaller than k");
  }

  const std::size_t n = gallery.size();
  std::vector<double> sims(n);
  std::vector<std::size_t> order(n);
  std::size_t hits = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t g = 0; g < n; ++g) sims[g] = cosine(queries.embeddings[q], gallery.embeddings[g]);
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (exclude_self) order.erase(order.begin() + static_cast<std::ptrdiff_t>(q));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return sims[a] > sims[b] || (sims[a] == sims[b] && a < b); });
    for (std::size_t r = 0; r < k; ++r) {
      if (gallery.labels[order[r]] == queries.labels[q]) {
        ++hits;
        break;
      }
    }
  }
  return {k, static_cast<double>(hits) / static_cast<double>(queries.size()), queries.size()};
}

// Mean pairwise cosine over distinct items; 1 when every embedding coincides.
inline double collapse_metric(const std::vector<UnitVector>& embeddings) {
  const std::size_t n = embeddings.size();
  if (n < 2) throw InvalidArgument("collapse metric needs at least two embeddings");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sum += cosine(embeddings[i], embeddings[j]);
  }
  return 2.0 * sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

inline double collapse_metric(const Batch& batch) { return collapse_metric(batch.embeddings); }

struct DiagramPoint {
  std::size_t index = 0;
  TripletCoord coord;
};

// Per item: similarity to its easiest (most similar) positive and its
// hardest (most similar) negative. Items without a same-class partner or
// without any different-class item are skipped.
inline std::vector<DiagramPoint> diagram_extract(const Batch& batch, const SimilarityMatrix& sim) {
  const std::size_t n = batch.size();
  std::vector<DiagramPoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    bool has_pos = false, has_neg = false;
    double best_pos = -1.0, best_neg = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double s = sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (batch.labels[j] == batch.labels[i]) {
        best_pos = has_pos ? std::max(best_pos, s) : s;
        has_pos = true;
      } else {
        best_neg = has_neg ? std::max(best_neg, s) : s;
        has_neg = true;
      }
    }
    if (has_pos && has_neg) out.push_back({i, {best_pos, best_neg}});
  }
  return out;
}

inline std::vector<DiagramPoint> diagram_extract(const Batch& batch) {
  return diagram_extract(batch, similarity_matrix(batch));
}

}  // namespace triplet
