#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "grpadmm/core.hpp"
#include "grpadmm/image.hpp"
#include "grpadmm/linops.hpp"
#include "grpadmm/problem.hpp"
#include "grpadmm/prox.hpp"
#include "grpadmm/random.hpp"

namespace grpadmm {

enum class ProblemKind { lasso, rof, deblur, uot };

inline std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::lasso: return "lasso";
    case ProblemKind::rof: return "rof";
    case ProblemKind::deblur: return "deblur";
    case ProblemKind::uot: return "uot";
  }
  return "unknown";
}

inline ProblemKind parse_problem_kind(const std::string& s) {
  if (s == "lasso") return ProblemKind::lasso;
  if (s == "rof") return ProblemKind::rof;
  if (s == "deblur") return ProblemKind::deblur;
  if (s == "uot") return ProblemKind::uot;
  throw std::invalid_argument("unknown problem kind '" + s + "' (expected lasso, rof, deblur, uot)");
}

/// Generator parameters. rows/cols mean (m, n) for LASSO, (height, width)
/// for the imaging problems and (n_s, n_t) for UOT.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::lasso;
  Index rows = 200;
  Index cols = 1000;
  double lambda = 0.1;
  double gamma = 1.0;
  double noise = 0.0;
  Index psf_size = 15;
  double psf_sigma = 2.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("ProblemSpec: sizes must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("ProblemSpec: lambda must be positive");
    if (!(gamma > 0.0)) throw std::invalid_argument("ProblemSpec: gamma must be positive");
    if (!(noise >= 0.0)) throw std::invalid_argument("ProblemSpec: noise must be nonnegative");
    if ((kind == ProblemKind::rof || kind == ProblemKind::uot) && (rows < 2 || cols < 2)) {
      throw std::invalid_argument("ProblemSpec: " + to_string(kind) + " needs sizes >= 2");
    }
    if (kind == ProblemKind::deblur && psf_size % 2 == 0) {
      throw std::invalid_argument("ProblemSpec: psf_size must be odd");
    }
  }

  /// Full-size instance for each kind.
  static ProblemSpec paper(ProblemKind kind, std::uint64_t seed = 0) {
    ProblemSpec s;
    s.kind = kind;
    s.seed = seed;
    switch (kind) {
      case ProblemKind::lasso: s.rows = 200; s.cols = 1000; s.lambda = 0.1; break;
      case ProblemKind::rof: s.rows = 256; s.cols = 256; s.noise = 0.08; s.lambda = 0.1; break;
      case ProblemKind::deblur:
        s.rows = 512; s.cols = 512; s.psf_size = 15; s.psf_sigma = 2.0; s.noise = 0.02; s.lambda = 0.048;
        break;
      case ProblemKind::uot: s.rows = 30; s.cols = 30; s.gamma = 1.0; break;
    }
    return s;
  }

  /// Reduced sizes that run in seconds.
  static ProblemSpec desk(ProblemKind kind, std::uint64_t seed = 0) {
    ProblemSpec s = paper(kind, seed);
    if (kind == ProblemKind::rof) s.rows = s.cols = 64;
    if (kind == ProblemKind::deblur) s.rows = s.cols = 128;
    return s;
  }
};

// ---------------------------------------------------------------------------
// Phantoms

/// Piecewise-constant test image: background 0.2, rectangle rows 0.15-0.45 x
/// cols 0.2-0.6 at 0.8, rectangle rows 0.55-0.85 x cols 0.3-0.7 at 0.5, and
/// a centered disk of radius 0.12 (relative to the shorter side) at 1.0.
/// Coordinates are relative pixel centers.
inline Image2D blocks_phantom(ImageShape shape) {
  Image2D img(shape, 0.2);
  const double h = static_cast<double>(shape.height);
  const double w = static_cast<double>(shape.width);
  const double side = std::min(h, w);
  for (Index i = 0; i < shape.height; ++i) {
    const double r = (static_cast<double>(i) + 0.5) / h;
    for (Index j = 0; j < shape.width; ++j) {
      const double c = (static_cast<double>(j) + 0.5) / w;
      double v = 0.2;
      if (r >= 0.15 && r <= 0.45 && c >= 0.2 && c <= 0.6) v = 0.8;
      if (r >= 0.55 && r <= 0.85 && c >= 0.3 && c <= 0.7) v = 0.5;
      const double dy = (static_cast<double>(i) + 0.5 - h / 2.0) / side;
      const double dx = (static_cast<double>(j) + 0.5 - w / 2.0) / side;
      if (dx * dx + dy * dy <= 0.12 * 0.12) v = 1.0;
      img(i, j) = v;
    }
  }
  return img;
}

struct Ellipse {
  double intensity;
  double semi_x;
  double semi_y;
  double center_x;
  double center_y;
  double angle_deg;
};

/// Modified (Toft) Shepp-Logan ellipse table on [-1,1]^2.
inline constexpr std::array<Ellipse, 10> kModifiedSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

/// Sum of ellipse indicators, rescaled to [0,1]. Row 0 is the top (y = +1).
inline Image2D shepp_logan_phantom(ImageShape shape) {
  constexpr double kPi = 3.14159265358979323846;
  Image2D img(shape, 0.0);
  for (Index i = 0; i < shape.height; ++i) {
    const double y = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(shape.height);
    for (Index j = 0; j < shape.width; ++j) {
      const double x = -1.0 + 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(shape.width);
      double v = 0.0;
      for (const auto& e : kModifiedSheppLogan) {
        const double th = e.angle_deg * kPi / 180.0;
        const double xr = (x - e.center_x) * std::cos(th) + (y - e.center_y) * std::sin(th);
        const double yr = -(x - e.center_x) * std::sin(th) + (y - e.center_y) * std::cos(th);
        if ((xr * xr) / (e.semi_x * e.semi_x) + (yr * yr) / (e.semi_y * e.semi_y) <= 1.0) v += e.intensity;
      }
      img(i, j) = v;
    }
  }
  const double lo = img.pixels().minCoeff();
  const double hi = img.pixels().maxCoeff();
  if (hi > lo) img.pixels() = (img.pixels().array() - lo) / (hi - lo);
  return img;
}

// ---------------------------------------------------------------------------
// Generators

/// lambda ||x||_1 + 1/2 ||w - d||^2  s.t.  A x + w = b, with b = A x_true + d.
inline SplitProblem gen_lasso(Index m, Index n, double lambda, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("gen_lasso: sizes must be >= 1");
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix a(m, n);
  // Row-major fill so the draw order matches the problem's row layout.
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = rng.normal(0.0, stddev);
  Vector x_true = rng.normal_vector(n);
  Vector d = rng.normal_vector(m);
  for (Index i = 0; i < m; ++i) {
    if (rng.bernoulli(0.8)) d[i] = 0.0;
  }
  LinearMap op = LinearMap::dense(std::move(a));
  Vector b = op.apply(x_true) + d;
  SplitProblem p{
      "lasso", ProxTerm::l1(lambda), ProxTerm::sql2_shift(d), op, LinearMap::identity(m), std::move(b),
  };
  p.x_true = std::move(x_true);
  p.w_true = std::move(d);
  p.validate();
  return p;
}

/// Explicit-data LASSO (used for hand-checkable instances).
inline SplitProblem make_lasso(Matrix a, Vector d, Vector b, double lambda) {
  const Index m = a.rows();
  SplitProblem p{"lasso", ProxTerm::l1(lambda), ProxTerm::sql2_shift(std::move(d)),
                 LinearMap::dense(std::move(a)), LinearMap::identity(m), std::move(b)};
  p.validate();
  return p;
}

/// mu/2 ||x - c||^2 + lambda ||w||_{2,1}  s.t.  grad x - w = 0 (mu = 1).
inline SplitProblem make_rof(const Image2D& clean, Vector noisy, double lambda) {
  const ImageShape shape = clean.shape();
  require_size(noisy.size(), shape.size(), "make_rof observation");
  SplitProblem p{"rof",
                 ProxTerm::sql2_shift(noisy, 1.0),
                 ProxTerm::group_l21(lambda, 2),
                 LinearMap::grad2d(shape),
                 LinearMap::negated_identity(2 * shape.size()),
                 Vector::Zero(2 * shape.size())};
  p.x_true = clean.pixels();
  p.image = shape;
  p.observation = std::move(noisy);
  p.validate();
  return p;
}

inline SplitProblem gen_rof(Index height, Index width, double noise, double lambda, std::uint64_t seed) {
  if (height < 2 || width < 2) throw std::invalid_argument("gen_rof: sizes must be >= 2");
  const ImageShape shape{height, width};
  const Image2D clean = blocks_phantom(shape);
  Rng rng(seed);
  Vector noisy = clean.pixels();
  for (Index i = 0; i < noisy.size(); ++i) noisy[i] += noise * rng.normal();
  noisy = noisy.cwiseMax(0.0).cwiseMin(1.0);
  return make_rof(clean, std::move(noisy), lambda);
}

/// mu/2 ||K x - b||^2 + lambda ||w||_{2,1}  s.t.  grad x - w = 0 (mu = 1),
/// K a normalized Gaussian PSF under periodic convolution.
inline SplitProblem gen_deblur(Index height, Index width, Index psf_size, double psf_sigma, double noise,
                               double lambda, std::uint64_t seed) {
  if (psf_size % 2 == 0) throw std::invalid_argument("gen_deblur: psf_size must be odd");
  if (height < 2 || width < 2) throw std::invalid_argument("gen_deblur: sizes must be >= 2");
  const ImageShape shape{height, width};
  const Image2D clean = shepp_logan_phantom(shape);
  LinearMap blur = LinearMap::blur(shape, gaussian_kernel(psf_size, psf_sigma));
  Rng rng(seed);
  Vector observed = blur.apply(clean.pixels());
  for (Index i = 0; i < observed.size(); ++i) observed[i] += noise * rng.normal();
  SplitProblem p{"deblur",
                 ProxTerm::quad_data(blur, observed, 1.0),
                 ProxTerm::group_l21(lambda, 2),
                 LinearMap::grad2d(shape),
                 LinearMap::negated_identity(2 * shape.size()),
                 Vector::Zero(2 * shape.size())};
  p.x_true = clean.pixels();
  p.image = shape;
  p.observation = std::move(observed);
  p.validate();
  return p;
}

/// Quadratic cost (s_i - t_j)^2 on uniform grids of [0,1], row-major.
inline Vector uot_cost(Index ns, Index nt) {
  Vector c(ns * nt);
  for (Index i = 0; i < ns; ++i) {
    const double s = ns > 1 ? static_cast<double>(i) / static_cast<double>(ns - 1) : 0.0;
    for (Index j = 0; j < nt; ++j) {
      const double t = nt > 1 ? static_cast<double>(j) / static_cast<double>(nt - 1) : 0.0;
      c[i * nt + j] = (s - t) * (s - t);
    }
  }
  return c;
}

/// <c, x> + indicator(x >= 0) + gamma/2 ||w||^2  s.t.  A x + w = [a; b].
inline SplitProblem make_uot(const Vector& source, const Vector& target, double gamma) {
  const Index ns = source.size();
  const Index nt = target.size();
  Vector rhs(ns + nt);
  rhs << source, target;
  SplitProblem p{"uot",
                 ProxTerm::linear_plus_nonneg(uot_cost(ns, nt)),
                 ProxTerm::sql2(gamma),
                 LinearMap::ot_marginal(ns, nt),
                 LinearMap::identity(ns + nt),
                 std::move(rhs)};
  p.validate();
  return p;
}

inline SplitProblem gen_uot(Index ns, Index nt, double gamma, std::uint64_t seed) {
  if (ns < 2 || nt < 2) throw std::invalid_argument("gen_uot: sizes must be >= 2");
  Rng rng(seed);
  Vector a(ns), b(nt);
  for (Index i = 0; i < ns; ++i) a[i] = rng.uniform();
  for (Index j = 0; j < nt; ++j) b[j] = rng.uniform();
  a /= a.sum();
  b /= b.sum();
  return make_uot(a, b, gamma);
}

inline SplitProblem generate(const ProblemSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ProblemKind::lasso: return gen_lasso(spec.rows, spec.cols, spec.lambda, spec.seed);
    case ProblemKind::rof: return gen_rof(spec.rows, spec.cols, spec.noise, spec.lambda, spec.seed);
    case ProblemKind::deblur:
      return gen_deblur(spec.rows, spec.cols, spec.psf_size, spec.psf_sigma, spec.noise, spec.lambda, spec.seed);
    case ProblemKind::uot: return gen_uot(spec.rows, spec.cols, spec.gamma, spec.seed);
  }
  throw std::logic_error("generate: unhandled problem kind");
}

}  // namespace grpadmm
