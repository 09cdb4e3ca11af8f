#pragma once

#include <winfty/rational.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace winfty {

using Point = std::vector<double>;

/// Axis-aligned box in the plane.
struct Box {
  Point lo;
  Point hi;

  double width(std::size_t axis) const { return hi.at(axis) - lo.at(axis); }
};

/// Finite target measure: N distinct points with positive weights summing to one.
class TargetMeasure {
 public:
  TargetMeasure(std::vector<Point> points, std::vector<Rational> weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty()) throw Error("target measure needs at least one point");
    if (points_.size() != weights_.size())
      throw Error("target measure: " + std::to_string(points_.size()) + " points but " +
                  std::to_string(weights_.size()) + " weights");
    const std::size_t dim = points_.front().size();
    if (dim == 0) throw Error("target points must have positive dimension");
    Rational total = 0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (points_[i].size() != dim) throw Error("target points have mixed dimensions");
      if (weights_[i] <= 0)
        throw Error("target weight " + std::to_string(i) + " is not positive: " + to_string(weights_[i]));
      total += weights_[i];
      for (std::size_t j = 0; j < i; ++j)
        if (points_[j] == points_[i])
          throw Error("target points " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
    }
    if (total != 1)
      throw MassError("target weights sum to " + to_string(total) + ", deficit " + to_string(1 - total),
                      1 - total);
  }

  std::size_t size() const { return points_.size(); }
  std::size_t dimension() const { return points_.front().size(); }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<Rational>& weights() const { return weights_; }
  const Point& point(std::size_t i) const { return points_[i]; }
  const Rational& weight(std::size_t i) const { return weights_[i]; }

 private:
  std::vector<Point> points_;
  std::vector<Rational> weights_;
};

/// Regular grid over a planar box. Pixels are stored row-major starting at the
/// lower-left corner: index = iy * nx + ix.
struct GridSpec {
  Box box;
  std::size_t nx = 0;
  std::size_t ny = 0;

  std::size_t pixel_count() const { return nx * ny; }
  double pixel_width() const { return box.width(0) / static_cast<double>(nx); }
  double pixel_height() const { return box.width(1) / static_cast<double>(ny); }
  Point center(std::size_t ix, std::size_t iy) const {
    return {box.lo[0] + (static_cast<double>(ix) + 0.5) * pixel_width(),
            box.lo[1] + (static_cast<double>(iy) + 0.5) * pixel_height()};
  }
};

/// Source measure, either a rasterized density or a finite sum of atoms. In
/// both cases it is a list of sample points with exact masses; a grid is the
/// atomic measure on its pixel centers.
class SourceMeasure {
 public:
  enum class Kind { Grid, Atomic };

  Kind kind() const { return kind_; }
  bool is_grid() const { return kind_ == Kind::Grid; }
  const std::optional<GridSpec>& grid() const { return grid_; }

  std::size_t size() const { return points_.size(); }
  std::size_t dimension() const { return points_.front().size(); }
  const std::vector<Point>& points() const { return points_; }
  const Point& point(std::size_t k) const { return points_[k]; }
  const std::vector<Rational>& masses() const { return masses_; }
  const Rational& mass(std::size_t k) const { return masses_[k]; }

  /// Atoms of zero mass are kept in place; this flags them.
  bool is_null(std::size_t k) const { return masses_[k] == 0; }

  /// Every mass equals scaled()[k] / common_denominator().
  const BigInt& common_denominator() const { return denominator_; }
  const std::vector<BigInt>& scaled() const { return scaled_; }

  friend SourceMeasure make_uniform_grid(const Box& box, std::size_t nx, std::size_t ny);
  friend SourceMeasure make_grid(const GridSpec& grid, std::vector<Rational> masses);
  friend SourceMeasure make_atomic(std::vector<Point> points, std::vector<Rational> weights);

 private:
  SourceMeasure() = default;

  void finish() {
    denominator_ = 1;
    for (const auto& m : masses_) denominator_ = lcm(denominator_, denom(m));
    scaled_.clear();
    scaled_.reserve(masses_.size());
    for (const auto& m : masses_) scaled_.push_back(numer(m) * (denominator_ / denom(m)));
  }

  Kind kind_ = Kind::Atomic;
  std::optional<GridSpec> grid_;
  std::vector<Point> points_;
  std::vector<Rational> masses_;
  BigInt denominator_ = 1;
  std::vector<BigInt> scaled_;
};

namespace detail {
inline void check_total(std::span<const Rational> masses, const char* what) {
  Rational total = 0;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    if (masses[k] < 0) throw Error(std::string(what) + " mass " + std::to_string(k) + " is negative");
    total += masses[k];
  }
  if (total != 1)
    throw MassError(std::string(what) + " masses sum to " + to_string(total) + ", deficit " +
                        to_string(1 - total),
                    1 - total);
}

inline void check_box(const Box& box) {
  if (box.lo.size() != 2 || box.hi.size() != 2) throw Error("grid box must be two-dimensional");
  if (!(box.width(0) > 0) || !(box.width(1) > 0)) throw Error("grid box has zero area");
}
}  // namespace detail

/// Grid with arbitrary exact pixel masses (row-major, lower-left first).
inline SourceMeasure make_grid(const GridSpec& grid, std::vector<Rational> masses) {
  detail::check_box(grid.box);
  if (grid.nx == 0 || grid.ny == 0) throw Error("grid resolution must be at least 1x1");
  if (masses.size() != grid.pixel_count())
    throw Error("grid has " + std::to_string(grid.pixel_count()) + " pixels but " +
                std::to_string(masses.size()) + " masses");
  detail::check_total(masses, "pixel");
  SourceMeasure mu;
  mu.kind_ = SourceMeasure::Kind::Grid;
  mu.grid_ = grid;
  mu.points_.reserve(grid.pixel_count());
  for (std::size_t iy = 0; iy < grid.ny; ++iy)
    for (std::size_t ix = 0; ix < grid.nx; ++ix) mu.points_.push_back(grid.center(ix, iy));
  mu.masses_ = std::move(masses);
  mu.finish();
  return mu;
}

/// Normalized Lebesgue measure on the box, one sample per pixel center.
inline SourceMeasure make_uniform_grid(const Box& box, std::size_t nx, std::size_t ny) {
  if (nx == 0 || ny == 0) throw Error("grid resolution must be at least 1x1");
  const GridSpec grid{box, nx, ny};
  const Rational each(1, static_cast<long long>(nx * ny));
  return make_grid(grid, std::vector<Rational>(nx * ny, each));
}

inline SourceMeasure make_atomic(std::vector<Point> points, std::vector<Rational> weights) {
  if (points.empty()) throw Error("atomic measure needs at least one atom");
  if (points.size() != weights.size()) throw Error("atomic measure: point and weight counts differ");
  const std::size_t dim = points.front().size();
  if (dim == 0) throw Error("atoms must have positive dimension");
  for (const auto& p : points)
    if (p.size() != dim) throw Error("atoms have mixed dimensions");
  detail::check_total(weights, "atom");
  SourceMeasure mu;
  mu.kind_ = SourceMeasure::Kind::Atomic;
  mu.points_ = std::move(points);
  mu.masses_ = std::move(weights);
  mu.finish();
  return mu;
}

}  // namespace winfty
