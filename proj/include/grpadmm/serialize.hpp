#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "grpadmm/problem.hpp"

namespace grpadmm {

using json = nlohmann::json;

// Arrays are stored as {"shape": [...], "data": [flat row-major values]}.

inline json array_to_json(const Vector& v) {
  return json{{"shape", {v.size()}}, {"data", std::vector<double>(v.data(), v.data() + v.size())}};
}

inline json array_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

/// Flat vector with an explicit 2-D shape (images, transport plans).
inline json array_to_json(const Vector& v, Index rows, Index cols) {
  require_size(v.size(), rows * cols, "array_to_json");
  return json{{"shape", {rows, cols}}, {"data", std::vector<double>(v.data(), v.data() + v.size())}};
}

inline Vector vector_from_json(const json& j) {
  const auto data = j.at("data").get<std::vector<double>>();
  Index expected = 1;
  for (const auto& d : j.at("shape")) expected *= d.get<Index>();
  require_size(static_cast<Index>(data.size()), expected, "array data");
  return Eigen::Map<const Vector>(data.data(), static_cast<Index>(data.size()));
}

inline Matrix matrix_from_json(const json& j) {
  const auto& shape = j.at("shape");
  if (shape.size() != 2) throw std::runtime_error("matrix array must be 2-D");
  const Index rows = shape[0].get<Index>();
  const Index cols = shape[1].get<Index>();
  const Vector flat = vector_from_json(j);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index jj = 0; jj < cols; ++jj) m(i, jj) = flat[i * cols + jj];
  return m;
}

inline json to_json(const LinearMap& op) {
  json j{{"kind", to_string(op.kind())}, {"domain_dim", op.domain_dim()}, {"codomain_dim", op.codomain_dim()}};
  switch (op.kind()) {
    case OperatorKind::dense: j["matrix"] = array_to_json(*op.dense_matrix()); break;
    case OperatorKind::identity:
    case OperatorKind::negated_identity: break;
    case OperatorKind::scaled_identity: j["scale"] = *op.identity_scale(); break;
    case OperatorKind::grad2d_periodic:
    case OperatorKind::div2d_periodic:
      j["height"] = op.image_shape()->height;
      j["width"] = op.image_shape()->width;
      break;
    case OperatorKind::blur_periodic:
      j["height"] = op.image_shape()->height;
      j["width"] = op.image_shape()->width;
      j["kernel"] = array_to_json(*op.blur_kernel());
      break;
    case OperatorKind::ot_marginal:
      j["sources"] = op.ot_sizes()->first;
      j["targets"] = op.ot_sizes()->second;
      break;
  }
  return j;
}

inline LinearMap linear_map_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  auto shape = [&j] { return ImageShape{j.at("height").get<Index>(), j.at("width").get<Index>()}; };
  if (kind == "dense") return LinearMap::dense(matrix_from_json(j.at("matrix")));
  if (kind == "identity") return LinearMap::identity(j.at("domain_dim").get<Index>());
  if (kind == "negated-identity") return LinearMap::negated_identity(j.at("domain_dim").get<Index>());
  if (kind == "scaled-identity") {
    return LinearMap::scaled_identity(j.at("domain_dim").get<Index>(), j.at("scale").get<double>());
  }
  if (kind == "grad2d-periodic") return LinearMap::grad2d(shape());
  if (kind == "div2d-periodic") return LinearMap::div2d(shape());
  if (kind == "blur-periodic") return LinearMap::blur(shape(), matrix_from_json(j.at("kernel")));
  if (kind == "ot-marginal") {
    return LinearMap::ot_marginal(j.at("sources").get<Index>(), j.at("targets").get<Index>());
  }
  throw std::runtime_error("unknown operator kind '" + kind + "'");
}

inline json to_json(const ProxTerm& term) {
  json j{{"kind", to_string(term.kind())}};
  std::visit(
      [&j](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, terms::L1>) {
          j["weight"] = t.weight;
        } else if constexpr (std::is_same_v<T, terms::SquaredL2Shift>) {
          j["weight"] = t.weight;
          if (t.shift.size()) j["shift"] = array_to_json(t.shift);
        } else if constexpr (std::is_same_v<T, terms::GroupL21>) {
          j["weight"] = t.weight;
          j["group_dim"] = t.group_dim;
        } else if constexpr (std::is_same_v<T, terms::LinearNonneg>) {
          j["cost"] = array_to_json(t.cost);
        } else if constexpr (std::is_same_v<T, terms::QuadData>) {
          j["weight"] = t.weight;
          j["operator"] = to_json(t.op);
          j["data"] = array_to_json(t.data);
        }
      },
      term.impl());
  return j;
}

inline ProxTerm prox_term_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return ProxTerm::zero();
  if (kind == "l1") return ProxTerm::l1(j.at("weight").get<double>());
  if (kind == "sql2-shift") {
    return ProxTerm::sql2_shift(j.contains("shift") ? vector_from_json(j["shift"]) : Vector(),
                                j.at("weight").get<double>());
  }
  if (kind == "group-l21") return ProxTerm::group_l21(j.at("weight").get<double>(), j.at("group_dim").get<Index>());
  if (kind == "linear-plus-nonneg") return ProxTerm::linear_plus_nonneg(vector_from_json(j.at("cost")));
  if (kind == "quad-data") {
    return ProxTerm::quad_data(linear_map_from_json(j.at("operator")), vector_from_json(j.at("data")),
                               j.at("weight").get<double>());
  }
  throw std::runtime_error("unknown prox term kind '" + kind + "'");
}

inline constexpr const char* kProblemSchema = "grpadmm-problem/1";

inline json to_json(const SplitProblem& p) {
  json j{{"schema", kProblemSchema}, {"name", p.name}, {"g", to_json(p.g)}, {"f", to_json(p.f)},
         {"A", to_json(p.A)},        {"B", to_json(p.B)}, {"b", array_to_json(p.b)}};
  if (p.image) j["image"] = {{"height", p.image->height}, {"width", p.image->width}};
  if (p.x_true) {
    j["x_true"] = p.image ? array_to_json(*p.x_true, p.image->height, p.image->width) : array_to_json(*p.x_true);
  }
  if (p.w_true) j["w_true"] = array_to_json(*p.w_true);
  if (p.observation) {
    j["observation"] =
        p.image ? array_to_json(*p.observation, p.image->height, p.image->width) : array_to_json(*p.observation);
  }
  return j;
}

inline SplitProblem problem_from_json(const json& j) {
  if (j.value("schema", "") != kProblemSchema) {
    throw std::runtime_error("problem file: expected schema " + std::string(kProblemSchema));
  }
  SplitProblem p{j.at("name").get<std::string>(), prox_term_from_json(j.at("g")), prox_term_from_json(j.at("f")),
                 linear_map_from_json(j.at("A")),  linear_map_from_json(j.at("B")), vector_from_json(j.at("b"))};
  if (j.contains("image")) p.image = ImageShape{j["image"].at("height").get<Index>(), j["image"].at("width").get<Index>()};
  if (j.contains("x_true")) p.x_true = vector_from_json(j["x_true"]);
  if (j.contains("w_true")) p.w_true = vector_from_json(j["w_true"]);
  if (j.contains("observation")) p.observation = vector_from_json(j["observation"]);
  p.validate();
  return p;
}

inline void save_problem(const std::string& path, const SplitProblem& p) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << to_json(p).dump() << '\n';
}

inline SplitProblem load_problem(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return problem_from_json(json::parse(is));
}

}  // namespace grpadmm
