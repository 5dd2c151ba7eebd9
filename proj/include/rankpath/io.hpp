#pragma once

// JSON encodings shared by the CLI and reports.
//
//   Matrix:     {"m", "n", "field": "real"|"complex", "entries": row-major;
//                real entries are numbers, complex entries are [re, im]}
//   Descriptor: {"m", "n", "t", "field"}
//   Path:       {"descriptor", "breakpoints": [Matrix...], "certificate": {...}}

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "geooracle.hpp"
#include "pathbuilder.hpp"
#include "variety.hpp"

namespace rankpath {

using Json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Json to_json(const Matrix& a) {
  Json entries = Json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      const Scalar z = a(i, j);
      if (a.field() == ScalarField::Real) entries.push_back(z.real());
      else entries.push_back(Json::array({z.real(), z.imag()}));
    }
  }
  return Json{{"m", a.rows()}, {"n", a.cols()}, {"field", to_string(a.field())}, {"entries", std::move(entries)}};
}

inline Matrix matrix_from_json(const Json& j) {
  const Index m = j.at("m").get<Index>();
  const Index n = j.at("n").get<Index>();
  const ScalarField field = field_from_string(j.at("field").get<std::string>());
  const Json& e = j.at("entries");
  if (m <= 0 || n <= 0) throw std::invalid_argument("matrix dimensions must be positive");
  if (!e.is_array() || static_cast<Index>(e.size()) != m * n)
    throw std::invalid_argument("matrix entries must be a row-major array of length m*n");
  DenseMatrix a(m, n);
  for (Index k = 0; k < m * n; ++k) {
    const Json& v = e[static_cast<std::size_t>(k)];
    Scalar z;
    if (v.is_number()) {
      z = Scalar(v.get<double>(), 0.0);
    } else if (v.is_array() && v.size() == 2) {
      z = Scalar(v[0].get<double>(), v[1].get<double>());
    } else {
      throw std::invalid_argument("matrix entry must be a number or an [re, im] pair");
    }
    a(k / n, k % n) = z;
  }
  return Matrix(std::move(a), field);
}

inline Json to_json(const VarietyDescriptor& d) {
  return Json{{"m", d.m}, {"n", d.n}, {"t", d.t}, {"field", to_string(d.field)}};
}

inline VarietyDescriptor descriptor_from_json(const Json& j) {
  const ScalarField field = j.contains("field") ? field_from_string(j.at("field").get<std::string>()) : ScalarField::Complex;
  return VarietyDescriptor(j.at("m").get<int>(), j.at("n").get<int>(), j.at("t").get<int>(), field);
}

inline Json to_json(const BranchTrace& trace) {
  Json out = Json::array();
  for (const auto& b : trace) out.push_back(Json{{"kind", to_string(b.kind)}, {"depth", b.depth}});
  return out;
}

inline BranchTrace trace_from_json(const Json& j) {
  BranchTrace t;
  for (const auto& b : j) t.push_back(BranchTag{branch_kind_from_string(b.at("kind").get<std::string>()), b.at("depth").get<int>()});
  return t;
}

inline Json to_json(const PathCertificate& c) {
  return Json{{"outer_distance", c.outer_distance},
              {"length", c.length},
              {"ratio", c.ratio},
              {"certified_bound", c.certified_bound},
              {"branch_trace", to_json(c.branch_trace)},
              {"max_relative_residual", c.max_relative_residual},
              {"samples_per_segment", c.samples_per_segment}};
}

inline PathCertificate certificate_from_json(const Json& j) {
  PathCertificate c;
  c.outer_distance = j.at("outer_distance").get<double>();
  c.length = j.at("length").get<double>();
  c.ratio = j.at("ratio").get<double>();
  c.certified_bound = j.at("certified_bound").get<double>();
  c.branch_trace = trace_from_json(j.at("branch_trace"));
  c.max_relative_residual = j.at("max_relative_residual").get<double>();
  c.samples_per_segment = j.at("samples_per_segment").get<int>();
  return c;
}

inline Json path_to_json(const VarietyDescriptor& d, const BuiltPath& b) {
  Json pts = Json::array();
  for (const auto& m : b.path.breakpoints) pts.push_back(to_json(m));
  return Json{{"descriptor", to_json(d)}, {"breakpoints", std::move(pts)}, {"certificate", to_json(b.certificate)}};
}

inline Json to_json(const OracleConfig& c) {
  return Json{{"n_samples", c.n_samples},
              {"edge_membership_tol", c.edge_membership_tol},
              {"midpoint_checks_per_edge", c.midpoint_checks_per_edge},
              {"shorten_iterations", c.shorten_iterations},
              {"seed", c.seed}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

/// Writes text followed by a newline; throws IoError naming the path.
inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2)); }

}  // namespace rankpath
