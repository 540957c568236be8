#pragma once

#include <unsupported/Eigen/FFT>

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "grpadmm/core.hpp"
#include "grpadmm/image.hpp"
#include "grpadmm/random.hpp"

namespace grpadmm {

enum class OperatorKind {
  dense,
  identity,
  negated_identity,
  scaled_identity,
  grad2d_periodic,
  div2d_periodic,
  blur_periodic,
  ot_marginal,
};

inline std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::dense: return "dense";
    case OperatorKind::identity: return "identity";
    case OperatorKind::negated_identity: return "negated-identity";
    case OperatorKind::scaled_identity: return "scaled-identity";
    case OperatorKind::grad2d_periodic: return "grad2d-periodic";
    case OperatorKind::div2d_periodic: return "div2d-periodic";
    case OperatorKind::blur_periodic: return "blur-periodic";
    case OperatorKind::ot_marginal: return "ot-marginal";
  }
  return "unknown";
}

namespace detail {

using Complex = std::complex<double>;

// In-place 2-D DFT over a row-major height x width grid, separable passes.
// The inverse transform is normalized by 1/(height*width).
inline void fft2(std::vector<Complex>& data, Index height, Index width, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<Complex> in, out;
  in.resize(static_cast<std::size_t>(width));
  for (Index r = 0; r < height; ++r) {
    std::copy_n(data.begin() + r * width, width, in.begin());
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    std::copy_n(out.begin(), width, data.begin() + r * width);
  }
  in.resize(static_cast<std::size_t>(height));
  for (Index c = 0; c < width; ++c) {
    for (Index r = 0; r < height; ++r) in[r] = data[r * width + c];
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Index r = 0; r < height; ++r) data[r * width + c] = out[r];
  }
}

inline Index wrap(Index i, Index n) {
  const Index r = i % n;
  return r < 0 ? r + n : r;
}

struct DenseOp {
  Matrix matrix;
};

struct IdentityOp {
  Index dim;
  double scale;  // 1 for identity, -1 for negated identity
  OperatorKind kind;
};

struct Grad2DOp {
  ImageShape shape;
};

struct Div2DOp {
  ImageShape shape;
};

struct BlurOp {
  ImageShape shape;
  Matrix kernel;  // odd x odd, centered
  std::vector<Complex> transfer;  // DFT of the wrapped kernel
};

struct OtMarginalOp {
  Index sources;
  Index targets;
};

using OperatorImpl = std::variant<DenseOp, IdentityOp, Grad2DOp, Div2DOp, BlurOp, OtMarginalOp>;

// Forward differences with periodic wrap; output planes are [horizontal; vertical].
inline Vector gradient(const ImageShape& s, const Vector& x) {
  const Index n = s.size();
  Vector g(2 * n);
  for (Index i = 0; i < s.height; ++i) {
    const Index down = (i + 1 == s.height) ? 0 : i + 1;
    for (Index j = 0; j < s.width; ++j) {
      const Index right = (j + 1 == s.width) ? 0 : j + 1;
      const Index p = i * s.width + j;
      g[p] = x[i * s.width + right] - x[p];
      g[n + p] = x[down * s.width + j] - x[p];
    }
  }
  return g;
}

// Exact transpose of gradient().
inline Vector gradient_adjoint(const ImageShape& s, const Vector& g) {
  const Index n = s.size();
  Vector x(n);
  for (Index i = 0; i < s.height; ++i) {
    const Index up = (i == 0) ? s.height - 1 : i - 1;
    for (Index j = 0; j < s.width; ++j) {
      const Index left = (j == 0) ? s.width - 1 : j - 1;
      const Index p = i * s.width + j;
      x[p] = (g[i * s.width + left] - g[p]) + (g[n + up * s.width + j] - g[n + p]);
    }
  }
  return x;
}

inline std::vector<Complex> blur_transfer(const ImageShape& s, const Matrix& kernel) {
  const Index half_r = kernel.rows() / 2;
  const Index half_c = kernel.cols() / 2;
  std::vector<Complex> h(static_cast<std::size_t>(s.size()), Complex(0.0, 0.0));
  for (Index p = 0; p < kernel.rows(); ++p) {
    for (Index q = 0; q < kernel.cols(); ++q) {
      h[wrap(p - half_r, s.height) * s.width + wrap(q - half_c, s.width)] += kernel(p, q);
    }
  }
  fft2(h, s.height, s.width, false);
  return h;
}

inline Vector blur_spectral(const BlurOp& op, const Vector& x, bool adjoint) {
  std::vector<Complex> data(x.data(), x.data() + x.size());
  fft2(data, op.shape.height, op.shape.width, false);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] *= adjoint ? std::conj(op.transfer[i]) : op.transfer[i];
  }
  fft2(data, op.shape.height, op.shape.width, true);
  Vector y(x.size());
  for (Index i = 0; i < y.size(); ++i) y[i] = data[static_cast<std::size_t>(i)].real();
  return y;
}

}  // namespace detail

/// Immutable matrix-free linear operator R^domain_dim -> R^codomain_dim.
///
/// Copies share the underlying (immutable) representation, so a LinearMap
/// can be handed to several concurrent runs.
class LinearMap {
 public:
  static LinearMap dense(Matrix m) {
    if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("dense operator must be non-empty");
    return LinearMap(detail::DenseOp{std::move(m)});
  }
  static LinearMap identity(Index n) { return scaled(n, 1.0, OperatorKind::identity); }
  static LinearMap negated_identity(Index n) {
    return scaled(n, -1.0, OperatorKind::negated_identity);
  }
  static LinearMap scaled_identity(Index n, double s) {
    return scaled(n, s, OperatorKind::scaled_identity);
  }
  static LinearMap grad2d(ImageShape shape) {
    check_shape(shape);
    return LinearMap(detail::Grad2DOp{shape});
  }
  /// div = -grad^T, mapping two stacked difference planes back to an image.
  static LinearMap div2d(ImageShape shape) {
    check_shape(shape);
    return LinearMap(detail::Div2DOp{shape});
  }
  static LinearMap blur(ImageShape shape, Matrix kernel) {
    check_shape(shape);
    if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0) {
      throw std::invalid_argument("blur kernel must have odd dimensions");
    }
    auto transfer = detail::blur_transfer(shape, kernel);
    return LinearMap(detail::BlurOp{shape, std::move(kernel), std::move(transfer)});
  }
  static LinearMap ot_marginal(Index sources, Index targets) {
    if (sources <= 0 || targets <= 0) throw std::invalid_argument("ot-marginal needs positive sizes");
    return LinearMap(detail::OtMarginalOp{sources, targets});
  }

  OperatorKind kind() const {
    return std::visit(
        [](const auto& op) -> OperatorKind {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, detail::DenseOp>) return OperatorKind::dense;
          else if constexpr (std::is_same_v<T, detail::IdentityOp>) return op.kind;
          else if constexpr (std::is_same_v<T, detail::Grad2DOp>) return OperatorKind::grad2d_periodic;
          else if constexpr (std::is_same_v<T, detail::Div2DOp>) return OperatorKind::div2d_periodic;
          else if constexpr (std::is_same_v<T, detail::BlurOp>) return OperatorKind::blur_periodic;
          else return OperatorKind::ot_marginal;
        },
        *impl_);
  }

  Index domain_dim() const {
    return std::visit(
        [](const auto& op) -> Index {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, detail::DenseOp>) return op.matrix.cols();
          else if constexpr (std::is_same_v<T, detail::IdentityOp>) return op.dim;
          else if constexpr (std::is_same_v<T, detail::Div2DOp>) return 2 * op.shape.size();
          else if constexpr (std::is_same_v<T, detail::OtMarginalOp>) return op.sources * op.targets;
          else return op.shape.size();
        },
        *impl_);
  }

  Index codomain_dim() const {
    return std::visit(
        [](const auto& op) -> Index {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, detail::DenseOp>) return op.matrix.rows();
          else if constexpr (std::is_same_v<T, detail::IdentityOp>) return op.dim;
          else if constexpr (std::is_same_v<T, detail::Grad2DOp>) return 2 * op.shape.size();
          else if constexpr (std::is_same_v<T, detail::OtMarginalOp>) return op.sources + op.targets;
          else return op.shape.size();
        },
        *impl_);
  }

  /// Scale s when the operator is s*I (identity kinds), otherwise nullopt.
  std::optional<double> identity_scale() const {
    if (const auto* op = std::get_if<detail::IdentityOp>(impl_.get())) return op->scale;
    return std::nullopt;
  }

  Vector apply(const Vector& v) const {
    require_size(v.size(), domain_dim(), "LinearMap::apply");
    return std::visit(
        [&v](const auto& op) -> Vector {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, detail::DenseOp>) {
            return op.matrix * v;
          } else if constexpr (std::is_same_v<T, detail::IdentityOp>) {
            return op.scale == 1.0 ? Vector(v) : Vector(op.scale * v);
          } else if constexpr (std::is_same_v<T, detail::Grad2DOp>) {
            return detail::gradient(op.shape, v);
          } else if constexpr (std::is_same_v<T, detail::Div2DOp>) {
            return -detail::gradient_adjoint(op.shape, v);
          } else if constexpr (std::is_same_v<T, detail::BlurOp>) {
            return detail::blur_spectral(op, v, false);
          } else {
            Vector out = Vector::Zero(op.sources + op.targets);
            for (Index i = 0; i < op.sources; ++i) {
              for (Index j = 0; j < op.targets; ++j) {
                const double xij = v[i * op.targets + j];
                out[i] += xij;
                out[op.sources + j] += xij;
              }
            }
            return out;
          }
        },
        *impl_);
  }

  Vector adjoint(const Vector& u) const {
    require_size(u.size(), codomain_dim(), "LinearMap::adjoint");
    return std::visit(
        [&u](const auto& op) -> Vector {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, detail::DenseOp>) {
            return op.matrix.transpose() * u;
          } else if constexpr (std::is_same_v<T, detail::IdentityOp>) {
            return op.scale == 1.0 ? Vector(u) : Vector(op.scale * u);
          } else if constexpr (std::is_same_v<T, detail::Grad2DOp>) {
            return detail::gradient_adjoint(op.shape, u);
          } else if constexpr (std::is_same_v<T, detail::Div2DOp>) {
            return -detail::gradient(op.shape, u);
          } else if constexpr (std::is_same_v<T, detail::BlurOp>) {
            return detail::blur_spectral(op, u, true);
          } else {
            Vector out(op.sources * op.targets);
            for (Index i = 0; i < op.sources; ++i) {
              for (Index j = 0; j < op.targets; ++j) {
                out[i * op.targets + j] = u[i] + u[op.sources + j];
              }
            }
            return out;
          }
        },
        *impl_);
  }

  /// Direct (spatial-domain) periodic convolution; only defined for blur.
  Vector convolve_direct(const Vector& v, bool adjoint = false) const {
    const auto* op = std::get_if<detail::BlurOp>(impl_.get());
    if (op == nullptr) throw std::logic_error("convolve_direct: not a blur operator");
    require_size(v.size(), op->shape.size(), "LinearMap::convolve_direct");
    const ImageShape& s = op->shape;
    const Index half_r = op->kernel.rows() / 2;
    const Index half_c = op->kernel.cols() / 2;
    const double sign = adjoint ? 1.0 : -1.0;
    Vector out = Vector::Zero(s.size());
    for (Index i = 0; i < s.height; ++i) {
      for (Index j = 0; j < s.width; ++j) {
        double acc = 0.0;
        for (Index p = 0; p < op->kernel.rows(); ++p) {
          const Index row = detail::wrap(i + static_cast<Index>(sign) * (p - half_r), s.height);
          for (Index q = 0; q < op->kernel.cols(); ++q) {
            const Index col = detail::wrap(j + static_cast<Index>(sign) * (q - half_c), s.width);
            acc += op->kernel(p, q) * v[row * s.width + col];
          }
        }
        out[i * s.width + j] = acc;
      }
    }
    return out;
  }

  /// Whether solve_shifted_normal() is available for this operator.
  bool has_shifted_normal_inverse() const {
    return std::holds_alternative<detail::IdentityOp>(*impl_) ||
           std::holds_alternative<detail::BlurOp>(*impl_);
  }

  /// Returns (I + c * A^T A)^{-1} v for operators diagonalized by the identity
  /// or the 2-D DFT. Used as a preconditioner by iterative solvers.
  Vector solve_shifted_normal(double c, const Vector& v) const {
    require_size(v.size(), domain_dim(), "LinearMap::solve_shifted_normal");
    if (const auto* op = std::get_if<detail::IdentityOp>(impl_.get())) {
      return v / (1.0 + c * op->scale * op->scale);
    }
    if (const auto* op = std::get_if<detail::BlurOp>(impl_.get())) {
      std::vector<detail::Complex> data(v.data(), v.data() + v.size());
      detail::fft2(data, op->shape.height, op->shape.width, false);
      for (std::size_t i = 0; i < data.size(); ++i) data[i] /= 1.0 + c * std::norm(op->transfer[i]);
      detail::fft2(data, op->shape.height, op->shape.width, true);
      Vector out(v.size());
      for (Index i = 0; i < out.size(); ++i) out[i] = data[static_cast<std::size_t>(i)].real();
      return out;
    }
    throw std::logic_error("solve_shifted_normal: unsupported operator kind " + to_string(kind()));
  }

  /// Materialized matrix; intended for tests and small problems only.
  Matrix to_dense() const {
    Matrix m(codomain_dim(), domain_dim());
    Vector e = Vector::Zero(domain_dim());
    for (Index j = 0; j < domain_dim(); ++j) {
      e[j] = 1.0;
      m.col(j) = apply(e);
      e[j] = 0.0;
    }
    return m;
  }

  const Matrix* dense_matrix() const {
    const auto* op = std::get_if<detail::DenseOp>(impl_.get());
    return op ? &op->matrix : nullptr;
  }
  const Matrix* blur_kernel() const {
    const auto* op = std::get_if<detail::BlurOp>(impl_.get());
    return op ? &op->kernel : nullptr;
  }
  std::optional<ImageShape> image_shape() const {
    return std::visit(
        [](const auto& op) -> std::optional<ImageShape> {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, detail::Grad2DOp> || std::is_same_v<T, detail::Div2DOp> ||
                        std::is_same_v<T, detail::BlurOp>) {
            return op.shape;
          } else {
            return std::nullopt;
          }
        },
        *impl_);
  }
  std::optional<std::pair<Index, Index>> ot_sizes() const {
    const auto* op = std::get_if<detail::OtMarginalOp>(impl_.get());
    if (!op) return std::nullopt;
    return std::pair{op->sources, op->targets};
  }

 private:
  explicit LinearMap(detail::OperatorImpl impl)
      : impl_(std::make_shared<const detail::OperatorImpl>(std::move(impl))) {}

  static LinearMap scaled(Index n, double s, OperatorKind kind) {
    if (n <= 0) throw std::invalid_argument("identity operator needs a positive dimension");
    return LinearMap(detail::IdentityOp{n, s, kind});
  }
  static void check_shape(const ImageShape& s) {
    if (s.height <= 0 || s.width <= 0) throw std::invalid_argument("image operator needs a positive shape");
  }

  std::shared_ptr<const detail::OperatorImpl> impl_;
};

/// Normalized size x size Gaussian point-spread function (sums to 1).
inline Matrix gaussian_kernel(Index size, double stddev) {
  if (size <= 0 || size % 2 == 0) throw std::invalid_argument("gaussian_kernel: size must be odd");
  Matrix k(size, size);
  const Index half = size / 2;
  if (stddev <= 0.0) {
    k.setZero();
    k(half, half) = 1.0;
    return k;
  }
  for (Index p = 0; p < size; ++p) {
    for (Index q = 0; q < size; ++q) {
      const double dy = static_cast<double>(p - half);
      const double dx = static_cast<double>(q - half);
      k(p, q) = std::exp(-(dx * dx + dy * dy) / (2.0 * stddev * stddev));
    }
  }
  return k / k.sum();
}

/// Power iteration on A^T A from a seeded Gaussian start. Stops when two
/// successive norm estimates differ by less than tol.
inline double estimate_spectral_norm(const LinearMap& op, double tol = 1e-9, int max_iter = 5000,
                                     std::uint64_t seed = 0) {
  if (!(tol > 0.0)) throw std::invalid_argument("estimate_spectral_norm: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("estimate_spectral_norm: max_iter must be >= 1");
  Rng rng(seed);
  Vector v = rng.normal_vector(op.domain_dim());
  double nv = v.norm();
  if (nv == 0.0) return 0.0;
  v /= nv;
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vector av = op.apply(v);
    const double next = av.norm();  // sqrt of the Rayleigh quotient of A^T A at unit v
    if (next == 0.0) return 0.0;
    Vector w = op.adjoint(av);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    if (it > 0 && std::abs(next - estimate) < tol) return next;
    estimate = next;
  }
  return estimate;
}

/// ||A x_new - A x_old|| / ||x_new - x_old||, or nullopt when the iterates
/// coincide exactly.
inline std::optional<double> local_curvature(const LinearMap& op, const Vector& x_new,
                                             const Vector& x_old) {
  require_size(x_new.size(), op.domain_dim(), "local_curvature x_new");
  require_size(x_old.size(), op.domain_dim(), "local_curvature x_old");
  const Vector dx = x_new - x_old;
  const double ndx = dx.norm();
  if (ndx == 0.0) return std::nullopt;
  return op.apply(dx).norm() / ndx;
}

/// Same ratio from precomputed differences, for callers caching A x.
inline std::optional<double> local_curvature_from_diffs(const Vector& dx, const Vector& adx) {
  const double ndx = dx.norm();
  if (ndx == 0.0) return std::nullopt;
  return adx.norm() / ndx;
}

}  // namespace grpadmm
