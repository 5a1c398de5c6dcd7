#include "brw/spine.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "brw/errors.hpp"

namespace brw {

namespace {

struct WeightedValue {
  double w;
  double v;
};

// Self-normalised reduction is not wanted: the tilt already has mean weight 1,
// so the estimate is the plain mean of w·v.
Estimate weighted_mean(const std::vector<WeightedValue>& xs) {
  MeanAccumulator acc;
  for (const auto& x : xs) acc.add(x.w * x.v);
  return to_estimate(acc);
}

}  // namespace

void require_normalized(const OffspringModel& model, ComplexParam lambda, double alpha,
                        double tol) {
  const auto f = f_ratio(model, lambda, alpha);
  if (!f || std::abs(*f - 1.0) > tol)
    throw NotNormalized("f(alpha) = " + (f ? std::to_string(*f) : std::string("inf")) +
                        " is not 1; the alpha-tilt is not a probability measure");
}

Estimate spine_expectation(const OffspringModel& model, ComplexParam lambda, double alpha,
                           const std::function<double(double)>& g, std::size_t reps, Rng& rng,
                           double tol) {
  require_normalized(model, lambda, alpha, tol);
  if (reps < 2) throw DomainError("spine_expectation needs at least 2 replicates");
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  MeanAccumulator acc;
  std::vector<Atom> atoms;
  for (std::size_t r = 0; r < reps; ++r) {
    model.sample_atoms(rng, atoms);
    CompensatedSum s;
    for (const Atom& a : atoms) {
      const double step = lambda.theta * a.x + frame.log_abs_m;
      s.add(static_cast<double>(a.count) * std::exp(-alpha * step) * g(step));
    }
    acc.add(s.value());
  }
  return to_estimate(acc);
}

bool has_closed_form_spine(const OffspringModel& model) {
  return model.kind() == ModelKind::GaussianBinary;
}

SpinePath spine_sample(const OffspringModel& model, ComplexParam lambda, double alpha, int n,
                       Rng& rng, std::optional<SpineSampler> sampler, double tol) {
  require_normalized(model, lambda, alpha, tol);
  if (n < 0) throw DomainError("path length must be nonnegative");
  const SpineSampler kind = sampler.value_or(has_closed_form_spine(model)
                                                 ? SpineSampler::ClosedForm
                                                 : SpineSampler::WeightedResampling);
  if (kind == SpineSampler::ClosedForm && !has_closed_form_spine(model))
    throw DomainError("no closed-form tilted step law for model " + std::string(model.name()));
  const LambdaFrame frame = LambdaFrame::make(model, lambda);

  SpinePath path;
  path.lambda = lambda;
  path.alpha = alpha;
  path.sampler = kind;
  path.steps.reserve(static_cast<std::size_t>(n) + 1);
  path.steps.push_back(0.0);
  const double theta = lambda.theta;

  if (kind == SpineSampler::ClosedForm) {
    // Tilting N(0,1) by e^{-αθx} gives N(-αθ, 1).
    std::normal_distribution<double> x(-alpha * theta, 1.0);
    for (int k = 0; k < n; ++k) path.steps.push_back(path.steps.back() + theta * x(rng) + frame.log_abs_m);
    return path;
  }

  std::vector<Atom> atoms;
  std::vector<double> w;
  for (int k = 0; k < n; ++k) {
    model.sample_atoms(rng, atoms);
    w.resize(atoms.size());
    double total = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      const double step = theta * atoms[j].x + frame.log_abs_m;
      w[j] = static_cast<double>(atoms[j].count) * std::exp(-alpha * step);
      total += w[j];
    }
    if (!(total > 0.0)) {
      // Extinct generation: the path carries zero weight from here on.
      path.log_weight = -std::numeric_limits<double>::infinity();
      path.steps.resize(static_cast<std::size_t>(n) + 1, path.steps.back());
      return path;
    }
    path.log_weight += std::log(total);
    double u = uniform_open(rng) * total;
    std::size_t pick = 0;
    while (pick + 1 < atoms.size() && u >= w[pick]) u -= w[pick++];
    path.steps.push_back(path.steps.back() + theta * atoms[pick].x + frame.log_abs_m);
  }
  return path;
}

Estimate spine_path_expectation(const OffspringModel& model, ComplexParam lambda, double alpha,
                                int n, const std::function<double(const SpinePath&)>& g,
                                std::size_t reps, std::uint64_t seed,
                                std::optional<SpineSampler> sampler) {
  require_normalized(model, lambda, alpha);
  std::vector<WeightedValue> xs(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng = make_stream(seed, {r});
    const SpinePath p = spine_sample(model, lambda, alpha, n, rng, sampler);
    xs[r] = {std::exp(p.log_weight), g(p)};
  }
  return weighted_mean(xs);
}

LadderEpochs ladder_epochs(const std::vector<double>& path) {
  LadderEpochs out;
  if (path.empty()) return out;
  double low = path[0];   // S at the last strict descending epoch
  double high = path[0];  // S at the last weak ascending epoch
  for (std::size_t k = 1; k < path.size(); ++k) {
    if (path[k] < low) {
      out.descending.push_back(k);
      low = path[k];
    }
    if (path[k] >= high) {
      out.weak_ascending.push_back(k);
      high = path[k];
    }
  }
  return out;
}

DriReport dri_check(const TVFunction& tv, double x_max, int grid) {
  if (!(x_max > 0.0) || grid < 2) throw DomainError("dri_check needs x_max > 0 and grid >= 2");
  // ℓ(e^{-x}) through its logarithm: e^{-x} underflows long before x_max.
  auto h = [&](double x) { return std::exp(log_ell_at_log(tv, -x)); };
  DriReport r;
  double prev = h(0.0);
  for (int i = 1; i < grid; ++i) {
    const double x = x_max * i / (grid - 1);
    const double v = h(x);
    if (v > prev + 1e-12)
      throw MonotonicityViolation("l(e^-x) increases between grid points near x = " +
                                  std::to_string(x));
    prev = v;
  }

  // Nonincreasing integrand: the supremum on each cell sits at its left end.
  auto upper_sum = [&](double mesh) {
    CompensatedSum s;
    const auto cells = static_cast<long>(std::ceil(x_max / mesh));
    for (long k = 0; k < cells; ++k) {
      const double a = k * mesh;
      const double b = std::min(x_max, a + mesh);
      s.add((b - a) * h(a));
    }
    return s.value();
  };
  r.riemann_h1 = upper_sum(1.0);
  r.riemann_h05 = upper_sum(0.5);
  r.riemann_h025 = upper_sum(0.25);
  r.difference_ratio =
      std::abs(r.riemann_h025 - r.riemann_h05) / std::abs(r.riemann_h05 - r.riemann_h1);
  r.sums_converge = r.difference_ratio <= 0.6;

  // Least squares of log ℓ(e^{-x}) against log x on a log grid.
  const int m = 200;
  const double lo = std::log(10.0 * tv.u0), hi = std::log(1e4 * tv.u0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    const double lx = lo + (hi - lo) * i / (m - 1);
    const double ly = std::log(h(std::exp(lx)));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  r.tail_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  r.tail_intercept = (sy - r.tail_slope * sx) / m;
  return r;
}

DualityReport duality_check(const OffspringModel& model, ComplexParam lambda, double alpha,
                            const TVFunction& tv, std::size_t horizon, std::size_t reps,
                            std::uint64_t seed) {
  require_normalized(model, lambda, alpha);
  if (reps < 2) throw DomainError("duality_check needs at least 2 replicates");
  std::vector<WeightedValue> lhs(reps), rhs(reps);
  std::vector<double> unfinished(reps, 0.0), tail(reps, 0.0);
  auto h = [&](double s) { return std::exp(log_ell_at_log(tv, -s)); };
  const auto n = static_cast<std::int64_t>(reps);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    Rng rng = make_stream(seed, {ru});
    const SpinePath p = spine_sample(model, lambda, alpha, static_cast<int>(horizon), rng);
    const double w = std::exp(p.log_weight);
    const LadderEpochs e = ladder_epochs(p.steps);
    const std::size_t tau1 = e.descending.empty() ? horizon + 1 : e.descending.front();
    CompensatedSum a, b;
    for (std::size_t j = 0; j < tau1 && j <= horizon; ++j) a.add(h(p.steps[j]));
    b.add(h(p.steps[0]));  // σ_0 = 0
    for (std::size_t s : e.weak_ascending) b.add(h(p.steps[s]));
    lhs[ru] = {w, a.value()};
    rhs[ru] = {w, b.value()};
    if (tau1 > horizon) {
      unfinished[ru] = w;
      tail[ru] = w * h(p.steps[horizon]);
    }
  }
  DualityReport out;
  out.horizon = horizon;
  out.before_descent = weighted_mean(lhs);
  out.weak_ascending = weighted_mean(rhs);
  const double se = std::hypot(out.before_descent.std_error, out.weak_ascending.std_error);
  const double diff = out.before_descent.value - out.weak_ascending.value;
  out.z_score = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  CompensatedSum u, t;
  for (std::size_t r = 0; r < reps; ++r) {
    u.add(unfinished[r]);
    t.add(tail[r]);
  }
  out.unfinished = u.value() / static_cast<double>(reps);
  out.horizon_term = t.value() / static_cast<double>(reps);
  return out;
}

}  // namespace brw
