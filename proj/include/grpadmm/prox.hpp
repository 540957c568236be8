#pragma once

#include <optional>
#include <string>
#include <variant>

#include "grpadmm/core.hpp"
#include "grpadmm/linops.hpp"

namespace grpadmm {

enum class ProxKind { zero, l1, sql2_shift, group_l21, linear_plus_nonneg, quad_data };

inline std::string to_string(ProxKind kind) {
  switch (kind) {
    case ProxKind::zero: return "zero";
    case ProxKind::l1: return "l1";
    case ProxKind::sql2_shift: return "sql2-shift";
    case ProxKind::group_l21: return "group-l21";
    case ProxKind::linear_plus_nonneg: return "linear-plus-nonneg";
    case ProxKind::quad_data: return "quad-data";
  }
  return "unknown";
}

/// The inner linear solve of a quad-data prox stopped short of its tolerance.
class ProxSolveError : public std::runtime_error {
 public:
  ProxSolveError(const std::string& msg, double residual, int iterations)
      : std::runtime_error(msg), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Per-run scratch for terms whose prox is computed iteratively.
struct ProxWorkspace {
  Vector warm_start;
  int last_iterations = 0;
  double last_relative_residual = 0.0;
};

struct CgOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 500;
};

namespace terms {

struct Zero {};

struct L1 {
  double weight;
};

/// (weight/2) * ||v - shift||^2; an empty shift means zero.
struct SquaredL2Shift {
  double weight;
  Vector shift;
};

/// weight * sum_g ||v_g||, where group g collects v[g + j*num_groups] for
/// j < group_dim (stacked planes, e.g. the two gradient components per pixel).
struct GroupL21 {
  double weight;
  Index group_dim;
};

/// <cost, v> + indicator(v >= 0).
struct LinearNonneg {
  Vector cost;
};

/// (weight/2) * ||K v - data||^2.
struct QuadData {
  LinearMap op;
  Vector data;
  double weight;
  CgOptions cg;
};

}  // namespace terms

/// A closed convex function with evaluation and proximal mapping.
class ProxTerm {
 public:
  using Impl = std::variant<terms::Zero, terms::L1, terms::SquaredL2Shift, terms::GroupL21,
                            terms::LinearNonneg, terms::QuadData>;

  static ProxTerm zero() { return ProxTerm(terms::Zero{}); }
  static ProxTerm l1(double weight) {
    if (!(weight >= 0.0)) throw std::invalid_argument("l1: weight must be nonnegative");
    return ProxTerm(terms::L1{weight});
  }
  static ProxTerm sql2_shift(Vector shift, double weight = 1.0) {
    if (!(weight > 0.0)) throw std::invalid_argument("sql2-shift: weight must be positive");
    return ProxTerm(terms::SquaredL2Shift{weight, std::move(shift)});
  }
  /// (weight/2)||v||^2 with no shift.
  static ProxTerm sql2(double weight) { return sql2_shift(Vector(), weight); }
  static ProxTerm group_l21(double weight, Index group_dim = 2) {
    if (!(weight >= 0.0)) throw std::invalid_argument("group-l21: weight must be nonnegative");
    if (group_dim < 1) throw std::invalid_argument("group-l21: group_dim must be >= 1");
    return ProxTerm(terms::GroupL21{weight, group_dim});
  }
  static ProxTerm linear_plus_nonneg(Vector cost) {
    return ProxTerm(terms::LinearNonneg{std::move(cost)});
  }
  static ProxTerm quad_data(LinearMap op, Vector data, double weight, CgOptions cg = {}) {
    if (!(weight > 0.0)) throw std::invalid_argument("quad-data: weight must be positive");
    require_size(data.size(), op.codomain_dim(), "quad-data data vector");
    return ProxTerm(terms::QuadData{std::move(op), std::move(data), weight, cg});
  }

  ProxKind kind() const { return static_cast<ProxKind>(impl_.index()); }
  const Impl& impl() const { return impl_; }

  /// Required input length, or nullopt if any length is accepted.
  std::optional<Index> dim() const {
    return std::visit(
        [](const auto& t) -> std::optional<Index> {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, terms::SquaredL2Shift>) {
            if (t.shift.size() > 0) return t.shift.size();
            return std::nullopt;
          } else if constexpr (std::is_same_v<T, terms::LinearNonneg>) {
            return t.cost.size();
          } else if constexpr (std::is_same_v<T, terms::QuadData>) {
            return t.op.domain_dim();
          } else {
            return std::nullopt;
          }
        },
        impl_);
  }

  /// Function value; +inf outside the domain.
  double eval(const Vector& v) const {
    check_dim(v);
    return std::visit(
        [&v](const auto& t) -> double {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, terms::Zero>) {
            return 0.0;
          } else if constexpr (std::is_same_v<T, terms::L1>) {
            return t.weight * v.lpNorm<1>();
          } else if constexpr (std::is_same_v<T, terms::SquaredL2Shift>) {
            const double sq = t.shift.size() ? (v - t.shift).squaredNorm() : v.squaredNorm();
            return 0.5 * t.weight * sq;
          } else if constexpr (std::is_same_v<T, terms::GroupL21>) {
            const Index groups = num_groups(t, v.size());
            double sum = 0.0;
            for (Index g = 0; g < groups; ++g) {
              double sq = 0.0;
              for (Index j = 0; j < t.group_dim; ++j) sq += v[g + j * groups] * v[g + j * groups];
              sum += std::sqrt(sq);
            }
            return t.weight * sum;
          } else if constexpr (std::is_same_v<T, terms::LinearNonneg>) {
            if ((v.array() < 0.0).any()) return kInf;
            return t.cost.dot(v);
          } else {
            return 0.5 * t.weight * (t.op.apply(v) - t.data).squaredNorm();
          }
        },
        impl_);
  }

  /// argmin_z eval(z) + ||z - v||^2 / (2 step).
  Vector prox(const Vector& v, double step, ProxWorkspace* workspace = nullptr) const {
    if (!(step > 0.0)) throw std::invalid_argument("prox: step must be positive");
    check_dim(v);
    return std::visit(
        [&](const auto& t) -> Vector {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, terms::Zero>) {
            return v;
          } else if constexpr (std::is_same_v<T, terms::L1>) {
            const double thr = t.weight * step;
            Vector z(v.size());
            for (Index i = 0; i < v.size(); ++i) {
              const double a = std::abs(v[i]);
              z[i] = a <= thr ? 0.0 : std::copysign(a - thr, v[i]);
            }
            return z;
          } else if constexpr (std::is_same_v<T, terms::SquaredL2Shift>) {
            const double ts = step * t.weight;
            if (t.shift.size() == 0) return v / (1.0 + ts);
            return (v + ts * t.shift) / (1.0 + ts);
          } else if constexpr (std::is_same_v<T, terms::GroupL21>) {
            const Index groups = num_groups(t, v.size());
            const double thr = t.weight * step;
            Vector z(v.size());
            for (Index g = 0; g < groups; ++g) {
              double sq = 0.0;
              for (Index j = 0; j < t.group_dim; ++j) sq += v[g + j * groups] * v[g + j * groups];
              const double nrm = std::sqrt(sq);
              const double factor = nrm <= thr ? 0.0 : 1.0 - thr / nrm;
              for (Index j = 0; j < t.group_dim; ++j) z[g + j * groups] = factor * v[g + j * groups];
            }
            return z;
          } else if constexpr (std::is_same_v<T, terms::LinearNonneg>) {
            return (v - step * t.cost).cwiseMax(0.0);
          } else {
            return quad_data_prox(t, v, step, workspace);
          }
        },
        impl_);
  }

 private:
  explicit ProxTerm(Impl impl) : impl_(std::move(impl)) {}

  void check_dim(const Vector& v) const {
    if (auto d = dim()) require_size(v.size(), *d, ("ProxTerm " + to_string(kind())).c_str());
  }

  static Index num_groups(const terms::GroupL21& t, Index n) {
    if (n % t.group_dim != 0) {
      throw DimensionError("group-l21: length " + std::to_string(n) + " not divisible by group size " +
                           std::to_string(t.group_dim));
    }
    return n / t.group_dim;
  }

  // Preconditioned conjugate gradients on (I + step*w*K^T K) z = v + step*w*K^T data.
  // When K is diagonalized by the identity or the DFT the preconditioner is the
  // exact inverse and the iteration terminates after one step.
  static Vector quad_data_prox(const terms::QuadData& t, const Vector& v, double step,
                               ProxWorkspace* ws) {
    const double c = step * t.weight;
    const Vector rhs = v + c * t.op.adjoint(t.data);
    const double rhs_norm = rhs.norm();
    auto normal = [&](const Vector& z) -> Vector { return z + c * t.op.adjoint(t.op.apply(z)); };
    const bool precondition = t.op.has_shifted_normal_inverse();
    auto apply_prec = [&](const Vector& r) -> Vector {
      return precondition ? t.op.solve_shifted_normal(c, r) : r;
    };

    Vector z = (ws && ws->warm_start.size() == v.size()) ? ws->warm_start : v;
    if (rhs_norm == 0.0) {
      z.setZero();
      if (ws) ws->warm_start = z;
      return z;
    }
    const double target = t.cg.relative_tolerance * rhs_norm;
    Vector r = rhs - normal(z);
    double res = r.norm();
    int it = 0;
    if (res > target) {
      Vector s = apply_prec(r);
      Vector p = s;
      double rs = r.dot(s);
      for (it = 1; it <= t.cg.max_iterations; ++it) {
        const Vector mp = normal(p);
        const double alpha = rs / p.dot(mp);
        z += alpha * p;
        r -= alpha * mp;
        // Recompute the true residual when the recursive one says we are done.
        res = r.norm();
        if (res <= target) {
          r = rhs - normal(z);
          res = r.norm();
          if (res <= target) break;
        }
        s = apply_prec(r);
        const double rs_next = r.dot(s);
        p = s + (rs_next / rs) * p;
        rs = rs_next;
      }
    }
    if (ws) {
      ws->warm_start = z;
      ws->last_iterations = it;
      ws->last_relative_residual = res / rhs_norm;
    }
    if (res > target) {
      throw ProxSolveError("quad-data prox: conjugate gradients stopped at relative residual " +
                               std::to_string(res / rhs_norm),
                           res / rhs_norm, t.cg.max_iterations);
    }
    return z;
  }

  Impl impl_;
};

}  // namespace grpadmm
