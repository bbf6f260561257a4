#pragma once

// The Gaussian limit process V_beta: its covariance kernel, a Cholesky
// sampler on a grid, and a sampler built from a Brownian sheet integral
// over the region {x <= u, z < (u - x)^-beta}.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gginf/error.hpp"
#include "gginf/numeric.hpp"
#include "gginf/rng.hpp"

namespace gginf {

// Rows are samples, columns grid points.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class CovKernel {
 public:
  explicit CovKernel(double beta) : beta_(beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("kernel beta must lie in [0, 1)");
  }

  double beta() const noexcept { return beta_; }

  // E V(u) V(s) = u^{1-beta} - (u-s)^{1-beta} for s <= u, symmetric.
  double operator()(double u, double s) const {
    if (u < 0.0 || s < 0.0) throw ConfigError("kernel arguments must be nonnegative");
    const double hi = std::max(u, s), lo = std::min(u, s);
    if (beta_ == 0.0) return lo;
    const double a = 1.0 - beta_;
    return std::pow(hi, a) - std::pow(hi - lo, a);
  }

  Eigen::MatrixXd matrix(std::span<const double> grid) const {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) c(i, j) = (*this)(grid[i], grid[j]);
    return c;
  }

 private:
  double beta_;
};

inline double cov(const CovKernel& k, double u, double s) { return k(u, s); }

namespace detail {

inline void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("grid must not be empty");
  if (!(grid[0] >= 0.0)) throw ConfigError("grid values must be nonnegative");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw ConfigError("grid values must be finite");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError("grid must be strictly increasing");
  }
}

// Index of the first strictly positive grid point.
inline std::size_t first_positive(std::span<const double> grid) {
  return grid[0] > 0.0 ? 0 : 1;
}

}  // namespace detail

// Lower Cholesky factor of the kernel restricted to the positive grid points,
// with the diagonal jitter ladder 0, 1e-14, 1e-12, 1e-10.
inline Eigen::MatrixXd kernel_factor(const CovKernel& kernel, std::span<const double> positive_grid) {
  const Eigen::MatrixXd c = kernel.matrix(positive_grid);
  for (double jitter : {0.0, 1e-14, 1e-12, 1e-10}) {
    Eigen::MatrixXd cj = c;
    cj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(cj);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd l = llt.matrixL();
    if ((l.diagonal().array() > 0.0).all() && l.allFinite()) return l;
  }
  throw RuntimeError("Cholesky factorization of the kernel matrix failed after jitter 1e-10");
}

// n_samples Gaussian vectors with covariance kernel(grid_i, grid_j). Sample r
// uses the child stream r of `seed`; u = 0 columns are exactly zero.
inline SampleMatrix sample_cholesky(const CovKernel& kernel, std::span<const double> grid, std::size_t n_samples,
                                    std::uint64_t seed) {
  detail::check_grid(grid);
  const std::size_t off = detail::first_positive(grid);
  SampleMatrix out = SampleMatrix::Zero(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(grid.size()));
  if (off == grid.size()) return out;
  const auto pos = grid.subspan(off);
  const Eigen::MatrixXd l = kernel_factor(kernel, pos);
  const auto m = static_cast<Eigen::Index>(pos.size());
  Eigen::VectorXd z(m);
  for (std::size_t r = 0; r < n_samples; ++r) {
    Engine eng = child_engine(seed, r);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < m; ++i) z(i) = normal(eng);
    out.row(static_cast<Eigen::Index>(r)).tail(m) = (l.triangularView<Eigen::Lower>() * z).transpose();
  }
  return out;
}

// Standard Brownian motion on the grid from independent increments.
inline SampleMatrix sample_brownian(std::span<const double> grid, std::size_t n_samples, std::uint64_t seed) {
  detail::check_grid(grid);
  SampleMatrix out(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t r = 0; r < n_samples; ++r) {
    Engine eng = child_engine(seed, r);
    std::normal_distribution<double> normal;
    double w = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] > 0.0) w += std::sqrt(grid[i] - prev) * normal(eng);
      prev = grid[i];
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = w;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brownian sheet route
// ---------------------------------------------------------------------------

// Area of {(x, z) in [x_lo, x_hi] x [z_lo, z_hi] : x <= u, z < (u - x)^-beta}.
// Integrates in the distance y = u - x so cells hugging x = u, where the
// boundary curve blows up, keep full precision. z_hi may be +infinity.
inline double region_area(double beta, double u, double x_lo, double x_hi, double z_lo, double z_hi) {
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("region_area: beta must lie in (0, 1)");
  if (!(x_hi >= x_lo) || !(z_hi >= z_lo) || z_lo < 0.0) throw ConfigError("region_area: invalid cell bounds");
  if (x_lo >= u || x_hi == x_lo || z_hi == z_lo) return 0.0;
  const double a = 1.0 - beta;
  const double y_lo = u - std::min(x_hi, u);
  const double y_hi = u - x_lo;
  // Curve y^-beta crosses z_hi at y_top and z_lo at y_bottom.
  const double y_top = std::isinf(z_hi) ? 0.0 : std::pow(z_hi, -1.0 / beta);
  const double y_bottom = z_lo > 0.0 ? std::pow(z_lo, -1.0 / beta) : std::numeric_limits<double>::infinity();

  double area = 0.0;
  // Columns where the whole cell height lies under the curve.
  const double full_hi = std::min(y_hi, y_top);
  if (full_hi > y_lo) area += (z_hi - z_lo) * (full_hi - y_lo);
  // Columns cut by the curve.
  const double p = std::max(y_lo, y_top), q = std::min(y_hi, y_bottom);
  if (q > p) area += (std::pow(q, a) - std::pow(p, a)) / a - z_lo * (q - p);
  return std::max(area, 0.0);
}

struct SheetDiscretization {
  int x_cells = 256;       // uniform cells on [0, max u]; grid points are added as breakpoints
  int z_cells = 128;       // uniform cells on [0, z_split]
  int z_tail_cells = 256;  // geometric cells on [z_split, z_max]
  double z_split = 0.0;    // 0: max over positive grid u of u^-beta
  double z_max = 0.0;      // 0: chosen so the analytic remainder is ~1e-6 of the variance
};

// Remainder variance above this fraction of u^{1-beta} means the sampler
// loses too much cross-grid covariance.
inline constexpr double kSheetRemainderTolerance = 1e-3;

// Gaussian masses of the sheet over the cells, aggregated by which grid
// points' regions contain them. Within one x-column the curves z = (u-x)^-beta
// of the grid points are nested, so each cell splits exactly into pieces
// whose membership is a contiguous run of grid indices; pieces with the same
// run are independent and merge into one Gaussian of summed variance.
class SheetSampler {
 public:
  struct Atom {
    std::size_t first;  // membership run over positive grid indices
    std::size_t last;
    double variance;  // (1 - beta) * area
  };

  SheetSampler(const CovKernel& kernel, std::vector<double> grid, SheetDiscretization disc = {})
      : beta_(kernel.beta()), grid_(std::move(grid)), disc_(disc) {
    if (beta_ == 0.0)
      throw ConfigError("sheet sampler needs beta > 0; at beta = 0 the limit is Brownian motion, use the Cholesky route");
    detail::check_grid(grid_);
    if (disc_.x_cells < 1 || disc_.z_cells < 1 || disc_.z_tail_cells < 0)
      throw ConfigError("sheet discretization needs positive cell counts");
    offset_ = detail::first_positive(grid_);
    pos_.assign(grid_.begin() + static_cast<std::ptrdiff_t>(offset_), grid_.end());
    if (!pos_.empty()) build();
  }

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const SheetDiscretization& discretization() const noexcept { return disc_; }
  // Per grid point (0 for u = 0).
  const std::vector<double>& shared_variance() const noexcept { return shared_; }
  const std::vector<double>& remainder_variance() const noexcept { return remainder_; }

  // Covariance of the sampler's shared (cell) part between grid points i, j.
  double shared_covariance(std::size_t i, std::size_t j) const {
    if (i < offset_ || j < offset_) return 0.0;
    const std::size_t a = std::min(i, j) - offset_, b = std::max(i, j) - offset_;
    double c = 0.0;
    for (const auto& at : atoms_)
      if (at.first <= a && b <= at.last) c += at.variance;
    return c;
  }

  SampleMatrix sample(std::size_t n_samples, std::uint64_t seed) const {
    SampleMatrix out = SampleMatrix::Zero(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(grid_.size()));
    std::vector<double> sd(atoms_.size());
    for (std::size_t k = 0; k < atoms_.size(); ++k) sd[k] = std::sqrt(atoms_[k].variance);
    for (std::size_t r = 0; r < n_samples; ++r) {
      Engine eng = child_engine(seed, r);
      std::normal_distribution<double> normal;
      auto row = out.row(static_cast<Eigen::Index>(r));
      for (std::size_t k = 0; k < atoms_.size(); ++k) {
        const double g = sd[k] * normal(eng);
        for (std::size_t i = atoms_[k].first; i <= atoms_[k].last; ++i)
          row(static_cast<Eigen::Index>(i + offset_)) += g;
      }
      for (std::size_t i = offset_; i < grid_.size(); ++i)
        row(static_cast<Eigen::Index>(i)) += std::sqrt(remainder_[i]) * normal(eng);
    }
    return out;
  }

 private:
  void build() {
    const double a = 1.0 - beta_;
    const double u_min = pos_.front(), u_max = pos_.back();
    if (disc_.z_split <= 0.0) disc_.z_split = std::pow(u_min, -beta_);
    if (disc_.z_max <= 0.0) {
      // Remainder variance above z_max is beta * z_max^{-(1-beta)/beta}.
      const double target = 1e-6 * std::pow(u_min, a) / beta_;
      disc_.z_max = std::min(std::pow(target, -beta_ / a), 1e250);
    }
    if (!(disc_.z_max > disc_.z_split)) throw ConfigError("sheet z_max must exceed z_split");

    std::vector<double> xs;
    for (int k = 0; k <= disc_.x_cells; ++k) xs.push_back(u_max * k / disc_.x_cells);
    xs.insert(xs.end(), pos_.begin(), pos_.end());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    std::vector<double> zs;
    for (int k = 0; k <= disc_.z_cells; ++k) zs.push_back(disc_.z_split * k / disc_.z_cells);
    const double ratio = std::pow(disc_.z_max / disc_.z_split, 1.0 / std::max(disc_.z_tail_cells, 1));
    for (int k = 1; k <= disc_.z_tail_cells; ++k)
      zs.push_back(k == disc_.z_tail_cells ? disc_.z_max : disc_.z_split * std::pow(ratio, k));

    const std::size_t n = pos_.size();
    std::map<std::pair<std::size_t, std::size_t>, KahanSum> pieces;
    std::vector<double> area(n + 1);
    for (std::size_t cx = 0; cx + 1 < xs.size(); ++cx) {
      const double x_lo = xs[cx], x_hi = xs[cx + 1];
      const auto i0 = static_cast<std::size_t>(std::lower_bound(pos_.begin(), pos_.end(), x_hi) - pos_.begin());
      if (i0 == n) continue;
      for (std::size_t cz = 0; cz + 1 < zs.size(); ++cz) {
        for (std::size_t j = i0; j < n; ++j) area[j] = region_area(beta_, pos_[j], x_lo, x_hi, zs[cz], zs[cz + 1]);
        area[n] = 0.0;
        for (std::size_t j = i0; j < n; ++j) {
          const double piece = area[j] - area[j + 1];
          if (piece > 0.0) pieces[{i0, j}] += piece;
        }
      }
    }
    for (const auto& [key, sum] : pieces) atoms_.push_back({key.first, key.second, a * sum.value()});

    shared_.assign(grid_.size(), 0.0);
    remainder_.assign(grid_.size(), 0.0);
    const double w = std::pow(disc_.z_max, -1.0 / beta_);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = pos_[i];
      const double target = std::pow(u, a);
      const double wi = std::min(w, u);
      remainder_[i + offset_] = std::max(std::pow(wi, a) - a * disc_.z_max * wi, 0.0);
      shared_[i + offset_] = shared_covariance(i + offset_, i + offset_);
      const double total = shared_[i + offset_] + remainder_[i + offset_];
      if (std::abs(total - target) > 1e-6 * target)
        throw RuntimeError("sheet cell variances at u = " + std::to_string(u) + " sum to " + std::to_string(total) +
                           ", expected " + std::to_string(target));
      if (remainder_[i + offset_] > kSheetRemainderTolerance * target)
        throw RuntimeError("sheet discretization too coarse at u = " + std::to_string(u) +
                           ": analytic remainder holds " + std::to_string(remainder_[i + offset_] / target) +
                           " of the variance; raise z_max");
    }
  }

  double beta_;
  std::vector<double> grid_;
  SheetDiscretization disc_;
  std::size_t offset_ = 0;
  std::vector<double> pos_;
  std::vector<Atom> atoms_;
  std::vector<double> shared_;
  std::vector<double> remainder_;
};

inline SampleMatrix sample_sheet(const CovKernel& kernel, std::span<const double> grid, const SheetDiscretization& disc,
                                 std::size_t n_samples, std::uint64_t seed) {
  return SheetSampler(kernel, std::vector<double>(grid.begin(), grid.end()), disc).sample(n_samples, seed);
}

}  // namespace gginf
