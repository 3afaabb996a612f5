#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "triplet/dynamics.hpp"
#include "triplet/eval.hpp"
#include "triplet/synthdata.hpp"
#include "triplet/trainer.hpp"

namespace triplet {

using Json = nlohmann::ordered_json;

inline void write_field_csv(std::ostream& os, const VectorField& field) {
  os << "s_ap,s_an,d_sap,d_san,d_sap_total,d_san_total\n";
  for (const auto& c : field.cells) {
    os << format_real(c.coord.s_ap) << ',' << format_real(c.coord.s_an) << ',' << format_real(c.update.d_sap) << ','
       << format_real(c.update.d_san) << ',' << format_real(c.update.d_sap_total) << ','
       << format_real(c.update.d_san_total) << '\n';
  }
}

inline void write_trajectory_csv(std::ostream& os, std::span<const TripletCoord> path) {
  os << "step,s_ap,s_an\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    os << i << ',' << format_real(path[i].s_ap) << ',' << format_real(path[i].s_an) << '\n';
  }
}

// Triplet indices refer to the dataset rows.
inline void write_triplets_csv(std::ostream& os, std::span<const MinedTriplet> triplets) {
  os << "anchor,positive,negative,s_ap,s_an,hard\n";
  for (const auto& t : triplets) {
    os << t.anchor << ',' << t.positive << ',' << t.negative << ',' << format_real(t.coord.s_ap) << ','
       << format_real(t.coord.s_an) << ',' << (is_hard(t.coord) ? 1 : 0) << '\n';
  }
}

inline void write_diagram_csv(std::ostream& os, std::span<const DiagramPoint> points, std::span<const Label> labels) {
  os << "index,label,s_ap,s_an,hard\n";
  for (const auto& p : points) {
    os << p.index << ',' << labels[p.index] << ',' << format_real(p.coord.s_ap) << ',' << format_real(p.coord.s_an)
       << ',' << (is_hard(p.coord) ? 1 : 0) << '\n';
  }
}

inline void write_epoch_csv(std::ostream& os, std::span<const EpochLog> logs) {
  os << "epoch,mean_loss,hard_fraction,recall_at_1,collapse\n";
  for (const auto& l : logs) {
    os << l.epoch << ',' << format_real(l.mean_loss) << ',' << format_real(l.hard_fraction) << ','
       << format_real(l.recall_at_1) << ',' << format_real(l.collapse) << '\n';
  }
}

inline Json to_json(const EpochLog& l) {
  Json j;
  j["epoch"] = l.epoch;
  j["mean_loss"] = l.mean_loss;
  j["hard_fraction"] = l.hard_fraction;
  j["recall_at_1"] = l.recall_at_1;
  j["collapse"] = l.collapse;
  if (l.snapshot) j["snapshot_size"] = l.snapshot->size();
  return j;
}

inline Json to_json(std::span<const EpochLog> logs) {
  Json j = Json::array();
  for (const auto& l : logs) j.push_back(to_json(l));
  return j;
}

inline Json to_json(const RetrievalResult& r) {
  return Json{{"k", r.k}, {"recall", r.recall}, {"num_queries", r.num_queries}};
}

namespace detail {

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& rows, const char* name) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw ParseError(0, std::string(name) + ": expected a non-empty array of rows");
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Json& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) {
      throw ParseError(0, std::string(name) + ": ragged rows");
    }
    for (Eigen::Index k = 0; k < c; ++k) {
      if (!row[static_cast<std::size_t>(k)].is_number()) throw ParseError(0, std::string(name) + ": non-numeric entry");
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return m;
}

}  // namespace detail

// Weights are stored at full double precision so a reloaded model embeds
// bit-identically.
inline Json to_json(const Model& m) {
  Json j;
  j["input_dim"] = m.input_dim();
  j["embed_dim"] = m.embed_dim();
  j["weight"] = detail::matrix_to_json(m.weight);
  if (m.has_hidden()) {
    j["hidden_weight"] = detail::matrix_to_json(m.hidden_weight);
    j["hidden_bias"] = detail::matrix_to_json(Matrix(m.hidden_bias.transpose()));
  }
  return j;
}

inline Model model_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("weight")) throw ParseError(0, "model: missing 'weight'");
  Model m;
  m.weight = detail::matrix_from_json(j["weight"], "weight");
  if (j.contains("hidden_weight")) {
    m.hidden_weight = detail::matrix_from_json(j["hidden_weight"], "hidden_weight");
    if (!j.contains("hidden_bias")) throw ParseError(0, "model: missing 'hidden_bias'");
    const Matrix b = detail::matrix_from_json(j["hidden_bias"], "hidden_bias");
    if (b.rows() != 1 || b.cols() != m.hidden_weight.cols() || m.weight.rows() != m.hidden_weight.cols()) {
      throw ParseError(0, "model: hidden layer shapes disagree");
    }
    m.hidden_bias = b.row(0).transpose();
  }
  if (m.embed_dim() < 2) throw ParseError(0, "model: embed_dim must be >= 2");
  if (!m.weight.allFinite() || (m.has_hidden() && !(m.hidden_weight.allFinite() && m.hidden_bias.allFinite()))) {
    throw ParseError(0, "model: non-finite entries");
  }
  return m;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

}  // namespace triplet
