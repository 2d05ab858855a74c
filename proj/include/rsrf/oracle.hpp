#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rsrf/cell.hpp"
#include "rsrf/dataset.hpp"
#include "rsrf/random.hpp"

namespace rsrf {

struct ZeroMassCell : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box, the cell shape every closed-form quantity lives on.
struct Rect {
  std::vector<Interval> sides;

  static Rect unit(std::size_t dim) {
    return Rect{std::vector<Interval>(dim, Interval{0.0, 1.0})};
  }

  std::size_t dim() const { return sides.size(); }
  const Interval& side(std::size_t j) const { return sides[j]; }

  double volume() const {
    double v = 1.0;
    for (const auto& iv : sides) v *= iv.length();
    return v;
  }

  bool valid() const {
    for (const auto& iv : sides)
      if (iv.degenerate()) return false;
    return true;
  }

  /// Sub-box obtained by cutting side `axis` at `pos`; side kLeft keeps <=.
  Rect cut(std::size_t axis, double pos, Side side) const {
    Rect r = *this;
    if (side == Side::kLeft)
      r.sides[axis].hi = pos;
    else
      r.sides[axis].lo = pos;
    return r;
  }
};

inline std::optional<Rect> cell_rect(const Cell& cell) {
  if (!cell.is_box()) return std::nullopt;
  return Rect{*cell.bbox()};
}

// ---------------------------------------------------------------------------
// Closed forms for m(x) = (x1 - 0.5)(x2 - 0.5) + x3 under the uniform design.
// All quantities are conditional on X lying in the box [a1,a2]x[b1,b2]x[c1,c2].
// ---------------------------------------------------------------------------

namespace example_interaction {

inline double quad_h(double x, double y) {
  return (x - 0.5) * (x - 0.5) + (x - 0.5) * (y - 0.5) + (y - 0.5) * (y - 0.5);
}

struct CellForms {
  Interval a, b, c;

  /// E[(X1-0.5)(X2-0.5) | box] = (a1+a2-1)(b1+b2-1)/4
  double mean12() const {
    return 0.25 * (a.lo + a.hi - 1.0) * (b.lo + b.hi - 1.0);
  }

  /// E[X3 | box] = (c1+c2)/2
  double mean3() const { return c.midpoint(); }

  double mean() const { return mean12() + mean3(); }

  /// Var(m(X) | box) = H(a1,a2)H(b1,b2)/9 - (a1+a2-1)^2(b1+b2-1)^2/16
  ///                   + (c2-c1)^2/12
  double variance() const {
    const double am = a.lo + a.hi - 1.0;
    const double bm = b.lo + b.hi - 1.0;
    return quad_h(a.lo, a.hi) * quad_h(b.lo, b.hi) / 9.0 -
           am * am * bm * bm / 16.0 + c.length() * c.length() / 12.0;
  }

  /// One-step impurity decrease for a cut of the box at coordinate 1, 2 or 3.
  double s1(double pos) const {
    const double bm = b.lo + b.hi - 1.0;
    return (pos - a.lo) * (a.hi - pos) / 16.0 * bm * bm;
  }
  double s2(double pos) const {
    const double am = a.lo + a.hi - 1.0;
    return (pos - b.lo) * (b.hi - pos) / 16.0 * am * am;
  }
  double s3(double pos) const { return (pos - c.lo) * (c.hi - pos) / 4.0; }

  // Suprema over the cut position; each is attained at the side midpoint.
  double s1max() const {
    const double bm = b.lo + b.hi - 1.0;
    return a.length() * a.length() / 64.0 * bm * bm;
  }
  double s2max() const {
    const double am = a.lo + a.hi - 1.0;
    return b.length() * b.length() / 64.0 * am * am;
  }
  double s3max() const { return c.length() * c.length() / 16.0; }
};

inline CellForms closed_forms(const Rect& rect) {
  if (rect.dim() < 3)
    throw std::invalid_argument("example closed forms need dim >= 3");
  if (!rect.valid()) throw std::invalid_argument("degenerate box");
  return CellForms{rect.side(0), rect.side(1), rect.side(2)};
}

}  // namespace example_interaction

// ---------------------------------------------------------------------------
// Regression functions
// ---------------------------------------------------------------------------

enum class ComponentShape { kLinear, kQuadratic, kSine };

struct AdditiveComponent {
  std::size_t axis;
  ComponentShape shape;
  double weight;
};

namespace detail {

inline double component_value(ComponentShape shape, double x) {
  switch (shape) {
    case ComponentShape::kLinear: return x;
    case ComponentShape::kQuadratic: return x * x;
    case ComponentShape::kSine: return std::sin(2.0 * std::numbers::pi * x);
  }
  throw std::logic_error("component_value: bad shape");
}

inline double component_mean(ComponentShape shape, const Interval& iv) {
  const double len = iv.length();
  switch (shape) {
    case ComponentShape::kLinear:
      return iv.midpoint();
    case ComponentShape::kQuadratic:
      return (iv.hi * iv.hi + iv.hi * iv.lo + iv.lo * iv.lo) / 3.0;
    case ComponentShape::kSine: {
      const double w = 2.0 * std::numbers::pi;
      return (std::cos(w * iv.lo) - std::cos(w * iv.hi)) / (w * len);
    }
  }
  throw std::logic_error("component_mean: bad shape");
}

inline double component_variance(ComponentShape shape, const Interval& iv) {
  const double len = iv.length();
  const double mean = component_mean(shape, iv);
  switch (shape) {
    case ComponentShape::kLinear:
      return len * len / 12.0;
    case ComponentShape::kQuadratic: {
      // E[x^4] on the interval
      double e4 = 0.0, p = 1.0;
      for (int k = 0; k <= 4; ++k) {
        e4 += p * std::pow(iv.lo, 4 - k);
        p *= iv.hi;
      }
      e4 /= 5.0;
      return e4 - mean * mean;
    }
    case ComponentShape::kSine: {
      const double w = 4.0 * std::numbers::pi;
      const double e2 = 0.5 - (std::sin(w * iv.hi) - std::sin(w * iv.lo)) / (2.0 * w * len);
      return e2 - mean * mean;
    }
  }
  throw std::logic_error("component_variance: bad shape");
}

}  // namespace detail

/// Tagged regression function m: [0,1]^d -> R. The example interaction model
/// and additive models expose exact conditional moments on boxes; custom
/// callables fall back to Monte Carlo.
class RegressionFunction {
 public:
  static RegressionFunction example_interaction() {
    RegressionFunction f;
    f.kind_ = Kind::kExampleInteraction;
    f.bound_ = 1.25;  // sup |(x1-.5)(x2-.5) + x3| on the cube
    f.name_ = "example_interaction";
    return f;
  }

  static RegressionFunction additive(double intercept,
                                     std::vector<AdditiveComponent> components) {
    RegressionFunction f;
    f.kind_ = Kind::kAdditive;
    f.intercept_ = intercept;
    f.components_ = std::move(components);
    f.bound_ = std::abs(intercept);
    for (const auto& c : f.components_) f.bound_ += std::abs(c.weight);
    f.name_ = "additive";
    return f;
  }

  static RegressionFunction constant(double value) {
    auto f = additive(value, {});
    f.name_ = "constant";
    return f;
  }

  static RegressionFunction custom(std::string name,
                                   std::function<double(std::span<const double>)> fn,
                                   double bound) {
    RegressionFunction f;
    f.kind_ = Kind::kCustom;
    f.custom_ = std::move(fn);
    f.bound_ = bound;
    f.name_ = std::move(name);
    return f;
  }

  double operator()(std::span<const double> x) const {
    switch (kind_) {
      case Kind::kExampleInteraction:
        return (x[0] - 0.5) * (x[1] - 0.5) + x[2];
      case Kind::kAdditive: {
        double v = intercept_;
        for (const auto& c : components_)
          v += c.weight * detail::component_value(c.shape, x[c.axis]);
        return v;
      }
      case Kind::kCustom:
        return custom_(x);
    }
    throw std::logic_error("RegressionFunction: bad kind");
  }

  /// sup |m|, the boundedness constant of the model.
  double bound() const { return bound_; }
  const std::string& name() const { return name_; }

  bool has_rect_moments() const {
    if (kind_ == Kind::kExampleInteraction) return true;
    if (kind_ != Kind::kAdditive) return false;
    for (std::size_t i = 0; i < components_.size(); ++i)
      for (std::size_t j = i + 1; j < components_.size(); ++j)
        if (components_[i].axis == components_[j].axis) return false;
    return true;
  }

  /// mu(box) = E[m(X) | X in box] for the uniform design, exact.
  double rect_mean(const Rect& rect) const {
    require_rect_moments();
    if (kind_ == Kind::kExampleInteraction)
      return example_interaction::closed_forms(rect).mean();
    double v = intercept_;
    for (const auto& c : components_)
      v += c.weight * detail::component_mean(c.shape, rect.side(c.axis));
    return v;
  }

  /// Var(m(X) | X in box), exact.
  double rect_variance(const Rect& rect) const {
    require_rect_moments();
    if (kind_ == Kind::kExampleInteraction)
      return example_interaction::closed_forms(rect).variance();
    double v = 0.0;
    for (const auto& c : components_)
      v += c.weight * c.weight *
           detail::component_variance(c.shape, rect.side(c.axis));
    return v;
  }

 private:
  enum class Kind { kExampleInteraction, kAdditive, kCustom };

  void require_rect_moments() const {
    if (!has_rect_moments())
      throw OracleUnavailable("no exact box moments for regression '" + name_ + "'");
  }

  Kind kind_ = Kind::kExampleInteraction;
  double intercept_ = 0.0;
  std::vector<AdditiveComponent> components_;
  std::function<double(std::span<const double>)> custom_;
  double bound_ = 0.0;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Population model: uniform design + regression + symmetric noise
// ---------------------------------------------------------------------------

struct NoiseSpec {
  enum class Kind { kGaussian, kUniformSymmetric } kind = Kind::kGaussian;
  double scale = 0.0;  // std dev for gaussian, half-width for uniform
};

struct CellMoments {
  double mass = 0.0;      // P(X in cell)
  double mean = 0.0;      // E[m(X) | X in cell]
  double variance = 0.0;  // Var(m(X) | X in cell)
  double se_mean = 0.0;
  double se_variance = 0.0;
  std::size_t accepted = 0;
  bool exact = false;
};

class PopulationModel {
 public:
  PopulationModel(std::size_t dim, RegressionFunction regression, NoiseSpec noise)
      : dim_(dim), regression_(std::move(regression)), noise_(noise) {
    if (dim_ == 0) throw std::invalid_argument("PopulationModel: dim >= 1");
  }

  std::size_t dim() const { return dim_; }
  const RegressionFunction& regression() const { return regression_; }
  const NoiseSpec& noise() const { return noise_; }

  double noise_draw(RandomStream& stream) const {
    if (noise_.scale == 0.0) return 0.0;
    switch (noise_.kind) {
      case NoiseSpec::Kind::kGaussian:
        return noise_.scale * stream.normal();
      case NoiseSpec::Kind::kUniformSymmetric:
        return noise_.scale * (2.0 * stream.uniform01() - 1.0);
    }
    throw std::logic_error("noise_draw: bad kind");
  }

  /// X_i iid uniform on [0,1]^d, Y_i = m(X_i) + eps_i.
  Dataset sample_dataset(std::size_t n, RandomStream stream) const {
    auto xs = stream.derive(stream_tag::kData);
    auto es = stream.derive(stream_tag::kNoise);
    std::vector<double> features(n * dim_);
    std::vector<double> responses(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dim_; ++j) features[i * dim_ + j] = xs.uniform01();
      responses[i] =
          regression_(std::span<const double>(&features[i * dim_], dim_)) +
          noise_draw(es);
    }
    return Dataset(std::move(features), std::move(responses), dim_);
  }

  bool has_exact_rect_moments() const { return regression_.has_rect_moments(); }

  CellMoments exact_moments(const Rect& rect) const {
    CellMoments m;
    m.mass = rect.volume();
    if (m.mass <= 0.0) throw ZeroMassCell("exact_moments: zero-volume box");
    m.mean = regression_.rect_mean(rect);
    m.variance = regression_.rect_variance(rect);
    m.exact = true;
    return m;
  }

  /// Conditional moments of m(X) on an arbitrary cell. Axis boxes are sampled
  /// directly (mass exact); other shapes are rejection sampled from the unit
  /// cube and report the acceptance fraction as the mass estimate.
  CellMoments conditional_moments_mc(const Cell& cell, std::size_t n_samples,
                                     RandomStream stream) const {
    if (n_samples == 0)
      throw std::invalid_argument("conditional_moments_mc: n_samples >= 1");
    const bool box = cell.is_box();
    if (box)
      for (const auto& iv : *cell.bbox())
        if (iv.degenerate())
          throw ZeroMassCell("conditional_moments_mc: empty box cell");
    std::vector<double> x(dim_);
    double sum = 0.0, sum2 = 0.0, sum3 = 0.0, sum4 = 0.0;
    std::size_t accepted = 0;
    for (std::size_t s = 0; s < n_samples; ++s) {
      if (box) {
        const auto& bb = *cell.bbox();
        for (std::size_t j = 0; j < dim_; ++j)
          x[j] = stream.uniform(bb[j].lo, bb[j].hi);
      } else {
        for (std::size_t j = 0; j < dim_; ++j) x[j] = stream.uniform01();
        if (!cell.contains(x)) continue;
      }
      const double v = regression_(x);
      sum += v;
      sum2 += v * v;
      sum3 += v * v * v;
      sum4 += v * v * v * v;
      ++accepted;
    }
    if (accepted == 0) throw ZeroMassCell("conditional_moments_mc: no accepted samples");
    CellMoments m;
    m.accepted = accepted;
    m.mass = box ? Rect{*cell.bbox()}.volume()
                 : static_cast<double>(accepted) / static_cast<double>(n_samples);
    const double n = static_cast<double>(accepted);
    m.mean = sum / n;
    const double e2 = sum2 / n;
    m.variance = std::max(0.0, e2 - m.mean * m.mean);
    m.se_mean = std::sqrt(m.variance / n);
    // asymptotic s.e. of the sample variance: sqrt((mu4 - var^2)/n) around mean
    const double e3 = sum3 / n, e4 = sum4 / n;
    const double mu = m.mean;
    const double mu4 = e4 - 4.0 * mu * e3 + 6.0 * mu * mu * e2 - 3.0 * mu * mu * mu * mu;
    m.se_variance = std::sqrt(std::max(0.0, mu4 - m.variance * m.variance) / n);
    return m;
  }

 private:
  std::size_t dim_;
  RegressionFunction regression_;
  NoiseSpec noise_;
};

}  // namespace rsrf
