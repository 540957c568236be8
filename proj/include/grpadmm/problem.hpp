#pragma once

#include <optional>
#include <string>

#include "grpadmm/core.hpp"
#include "grpadmm/image.hpp"
#include "grpadmm/linops.hpp"
#include "grpadmm/prox.hpp"

namespace grpadmm {

/// min g(x) + f(w)  subject to  A x + B w = b.
///
/// B is restricted to s*I so that the w-subproblem has a closed form.
struct SplitProblem {
  std::string name;
  ProxTerm g;
  ProxTerm f;
  LinearMap A;
  LinearMap B;
  Vector b;

  std::optional<Vector> x_true;
  std::optional<Vector> w_true;
  /// Set for imaging problems: x is an image of this shape and PSNR is tracked.
  std::optional<ImageShape> image;
  /// Observed (noisy / blurred) image, kept for PSNR baselines.
  std::optional<Vector> observation;

  Index q() const { return A.domain_dim(); }
  Index p() const { return B.domain_dim(); }
  Index m() const { return A.codomain_dim(); }

  double b_scale() const { return *B.identity_scale(); }

  /// Throws DimensionError / invalid_argument when the pieces do not fit.
  void validate() const {
    if (!B.identity_scale()) {
      throw std::invalid_argument("SplitProblem: B must be identity, negated-identity or scaled-identity "
                                  "(got " + to_string(B.kind()) + "); supply a custom w-solver instead");
    }
    if (*B.identity_scale() == 0.0) throw std::invalid_argument("SplitProblem: B must be nonzero");
    require_size(B.codomain_dim(), m(), "SplitProblem B rows");
    require_size(b.size(), m(), "SplitProblem b");
    if (auto d = g.dim()) require_size(*d, q(), "SplitProblem g dimension");
    if (auto d = f.dim()) require_size(*d, p(), "SplitProblem f dimension");
    if (x_true) require_size(x_true->size(), q(), "SplitProblem x_true");
    if (w_true) require_size(w_true->size(), p(), "SplitProblem w_true");
    if (image) require_size(image->size(), q(), "SplitProblem image shape");
  }
};

/// Phi(x, w) = g(x) + f(w); +inf propagates.
inline double objective(const SplitProblem& problem, const Vector& x, const Vector& w) {
  const double gx = problem.g.eval(x);
  if (gx == kInf) return kInf;
  return gx + problem.f.eval(w);
}

/// ||A x + B w - b||.
inline double fes_gap(const SplitProblem& problem, const Vector& x, const Vector& w) {
  return (problem.A.apply(x) + problem.B.apply(w) - problem.b).norm();
}

/// 10 log10(1 / MSE) after clipping x to [0,1]; +inf when MSE is zero.
inline double psnr(const Image2D& x, const Image2D& x_true) {
  if (!(x.shape() == x_true.shape())) throw DimensionError("psnr: image shapes differ");
  const double mse = (x.clipped().pixels() - x_true.pixels()).squaredNorm() /
                     static_cast<double>(x.shape().size());
  if (mse == 0.0) return kInf;
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace grpadmm
