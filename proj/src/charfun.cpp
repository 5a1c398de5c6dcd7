#include "brw/charfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "brw/errors.hpp"

namespace brw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBisectIters = 200;

double g_or_inf(const OffspringModel& model, const LambdaFrame& frame, double p) {
  const auto g = log_f_ratio(model, frame, p);
  return g ? *g : kInf;
}

struct Refined {
  double p;
  double g;
};

// Minimum of log f on [lo, hi] around a grid minimum, by bisection on the slope.
Refined refine_minimum(const OffspringModel& model, const LambdaFrame& frame, double lo,
                       double hi, double p_grid, double g_grid) {
  Refined best{p_grid, g_grid};
  auto consider = [&](double p) {
    const double g = g_or_inf(model, frame, p);
    if (g < best.g) best = {p, g};
  };
  const auto s_lo = log_f_slope(model, frame, lo);
  const auto s_hi = log_f_slope(model, frame, hi);
  if (s_lo && s_hi && *s_lo < 0.0 && *s_hi > 0.0) {
    double a = lo, b = hi;
    for (int it = 0; it < kBisectIters && b - a > 1e-16; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      const auto s = log_f_slope(model, frame, mid);
      if (!s) break;
      if (*s < 0.0)
        a = mid;
      else
        b = mid;
    }
    consider(a);
    consider(b);
  } else {
    consider(lo);
    consider(hi);
  }
  return best;
}

// Root of log f in [a, b] with log f(a) > 0 >= log f(b).
double bisect_crossing(const OffspringModel& model, const LambdaFrame& frame, double a,
                       double b) {
  if (g_or_inf(model, frame, a) <= 0.0) return a;
  for (int it = 0; it < kBisectIters && b - a > 1e-16; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (g_or_inf(model, frame, mid) > 0.0)
      a = mid;
    else
      b = mid;
  }
  return b;
}

std::vector<double> grid_points(int grid) {
  if (grid < 3) throw DomainError("ratio grid needs at least 3 points");
  std::vector<double> ps(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i) ps[static_cast<std::size_t>(i)] = 1.0 + static_cast<double>(i) / (grid - 1);
  ps.back() = 2.0;
  return ps;
}

}  // namespace

LambdaFrame LambdaFrame::make(const OffspringModel& model, ComplexParam lambda) {
  const auto lg = model.log_laplace(lambda);
  if (!lg) throw DomainError("m(lambda) diverges: theta outside the model's domain");
  if (!(lg->real() > kLogUnderflow)) throw ZeroTransform("|m(lambda)| underflows; Z_n undefined");
  return LambdaFrame{lambda, lg->real(), lg->imag()};
}

std::optional<double> log_f_ratio(const OffspringModel& model, const LambdaFrame& frame,
                                  double p) {
  const auto jet = model.log_laplace_real(p * frame.lambda.theta);
  if (!jet) return std::nullopt;
  return jet->value - p * frame.log_abs_m;
}

std::optional<double> log_f_ratio(const OffspringModel& model, ComplexParam lambda, double p) {
  return log_f_ratio(model, LambdaFrame::make(model, lambda), p);
}

std::optional<double> f_ratio(const OffspringModel& model, ComplexParam lambda, double p) {
  const auto g = log_f_ratio(model, lambda, p);
  if (!g) return std::nullopt;
  return std::exp(*g);
}

std::optional<double> log_f_slope(const OffspringModel& model, const LambdaFrame& frame,
                                  double p) {
  const auto jet = model.log_laplace_real(p * frame.lambda.theta);
  if (!jet) return std::nullopt;
  return frame.lambda.theta * jet->d1 - frame.log_abs_m;
}

double log_moment_functional(const OffspringModel& model, ComplexParam lambda, double alpha) {
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  const auto g = log_f_ratio(model, frame, alpha);
  const auto s = log_f_slope(model, frame, alpha);
  if (!g || !s) throw DomainError("f(alpha) diverges");
  return std::exp(*g) * *s;
}

double log2_moment_functional(const OffspringModel& model, ComplexParam lambda, double alpha) {
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  const double theta = lambda.theta;
  const auto jet = model.log_laplace_real(alpha * theta);
  if (!jet) throw DomainError("f(alpha) diverges");
  const double f = std::exp(jet->value - alpha * frame.log_abs_m);
  const double centred = theta * jet->d1 - frame.log_abs_m;
  return f * (theta * theta * jet->d2 + centred * centred);
}

std::optional<AlphaRoot> alpha_root(const OffspringModel& model, ComplexParam lambda, double tol,
                                    int grid) {
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  const std::vector<double> ps = grid_points(grid);
  std::vector<double> gs(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) gs[i] = g_or_inf(model, frame, ps[i]);

  auto make_root = [&](double alpha, bool tangency) {
    return AlphaRoot{alpha, log_moment_functional(model, lambda, alpha), tangency};
  };

  if (std::abs(gs[0]) <= tol) {
    const auto s = log_f_slope(model, frame, 1.0);
    return make_root(1.0, s && *s >= -tol);
  }

  const std::size_t last = ps.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    if (i > 0 && gs[i] < -tol)
      return make_root(bisect_crossing(model, frame, ps[i - 1], ps[i]), false);
    const bool local_min = (i == 0 || gs[i] <= gs[i - 1]) && (i == last || gs[i] <= gs[i + 1]);
    if (!local_min) continue;
    const double lo = ps[i == 0 ? 0 : i - 1];
    const double hi = ps[std::min(i + 1, last)];
    const Refined m = refine_minimum(model, frame, lo, hi, ps[i], gs[i]);
    if (std::abs(m.g) <= tol) return make_root(m.p, true);
    if (m.g < -tol) {
      // The dip falls between grid points; the crossing precedes the refined minimum.
      const double left = m.p > ps[i] ? ps[i] : lo;
      return make_root(bisect_crossing(model, frame, left, m.p), false);
    }
  }
  return std::nullopt;
}

std::optional<RatioMinimum> ratio_minimum(const OffspringModel& model, ComplexParam lambda,
                                          int grid) {
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  const std::vector<double> ps = grid_points(grid);
  std::vector<double> gs(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) gs[i] = g_or_inf(model, frame, ps[i]);

  const std::size_t last = ps.size() - 1;
  std::optional<RatioMinimum> best;
  for (std::size_t i = 0; i <= last; ++i) {
    const bool left_ok = i == 0 || gs[i] <= gs[i - 1];
    const bool right_ok = i == last || gs[i] <= gs[i + 1];
    if (!(left_ok && right_ok) || !std::isfinite(gs[i])) continue;
    const double lo = ps[i == 0 ? 0 : i - 1];
    const double hi = ps[std::min(i + 1, last)];
    const Refined m = refine_minimum(model, frame, lo, hi, ps[i], gs[i]);
    if (!best || m.g < best->log_f) best = RatioMinimum{m.p, m.g};
  }
  return best;
}

RatioCurve ratio_curve(const OffspringModel& model, ComplexParam lambda, int grid, double tol) {
  RatioCurve curve;
  curve.lambda = lambda;
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  for (double p : grid_points(grid)) {
    const auto g = log_f_ratio(model, frame, p);
    curve.samples.push_back({p, g ? std::optional<double>(std::exp(*g)) : std::nullopt});
  }
  curve.root = alpha_root(model, lambda, tol, grid);
  return curve;
}

C3Result c3_check(const OffspringModel& model, ComplexParam lambda, double alpha) {
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  for (int k = 10; k >= 0; --k) {
    const double vartheta = k / 10.0;
    if (vartheta >= alpha) continue;
    if (log_f_ratio(model, frame, vartheta)) return {true, vartheta};
  }
  return {false, 0.0};
}

}  // namespace brw
