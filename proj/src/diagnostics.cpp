#include "brw/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "brw/errors.hpp"
#include "brw/summation.hpp"

namespace brw {

namespace {

double median(std::vector<double> v) {
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
  const double hi = v[h];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
  return 0.5 * (lo + hi);
}

double upper_normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

int common_generations(const std::vector<MartingaleTrace>& traces) {
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const auto& t : traces) len = std::min(len, t.records.size());
  return len == 0 ? -1 : static_cast<int>(len) - 1;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "Converged";
    case Verdict::Diverged: return "Diverged";
    case Verdict::Indeterminate: return "Indeterminate";
  }
  return "?";
}

MannKendall mann_kendall(const std::vector<double>& xs) {
  MannKendall mk;
  const std::size_t n = xs.size();
  if (n < 2) return mk;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) mk.s += (xs[j] > xs[i]) - (xs[j] < xs[i]);

  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * (t - 1) * (2 * t + 5);
    i = j;
  }
  const double nd = static_cast<double>(n);
  mk.variance = (nd * (nd - 1) * (2 * nd + 5) - ties) / 18.0;
  if (mk.variance > 0.0) {
    const double sd = std::sqrt(mk.variance);
    mk.z = mk.s > 0 ? (mk.s - 1) / sd : mk.s < 0 ? (mk.s + 1) / sd : 0.0;
  }
  mk.p_increasing = upper_normal_tail(mk.z);
  mk.p_decreasing = upper_normal_tail(-mk.z);
  return mk;
}

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y, double level) {
  if (x.size() != y.size() || x.size() < 3)
    throw InsufficientData("slope fit needs at least 3 paired points");
  const auto m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientData("slope fit needs distinct abscissae");
  SlopeFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ssr += r * r;
  }
  const double se = std::sqrt(ssr / (m - 2) / sxx);
  const boost::math::students_t dist(m - 2);
  const double q = boost::math::quantile(dist, 0.5 + level / 2);
  f.ci_low = f.slope - q * se;
  f.ci_high = f.slope + q * se;
  return f;
}

ConvergenceReport convergence_verdict(const std::vector<MartingaleTrace>& traces,
                                      const ConvergenceOptions& opts) {
  if (!(opts.p > 1.0)) throw DomainError("convergence_verdict needs p > 1");
  if (opts.lag < 1) throw DomainError("increment lag must be at least 1");
  if (traces.size() < kMinReplicates)
    throw InsufficientData("need at least " + std::to_string(kMinReplicates) + " replicates, got " +
                           std::to_string(traces.size()));
  const int N = common_generations(traces);
  if (N < kMinGenerations)
    throw InsufficientData("need at least " + std::to_string(kMinGenerations) +
                           " generations, got " + std::to_string(std::max(N, 0)));
  if (opts.lag >= N) throw DomainError("increment lag must be below the generation count");

  ConvergenceReport rep;
  rep.p = opts.p;
  rep.lag = opts.lag;
  rep.replicates = traces.size();
  rep.generations = N;
  rep.ui_threshold = opts.ui_threshold;

  const std::size_t R = traces.size();
  auto z = [&](std::size_t r, int n) { return traces[r].records[static_cast<std::size_t>(n)].z; };

  rep.degenerate = true;
  std::vector<double> buf(R);
  for (int n = opts.lag; n <= N; ++n) {
    for (std::size_t r = 0; r < R; ++r) {
      buf[r] = std::abs(z(r, n) - z(r, n - opts.lag));
      if (buf[r] > kDegenerateIncrement) rep.degenerate = false;
    }
    rep.increment_medians.push_back(median(buf));
  }

  for (int n = 0; n <= N; ++n) {
    MeanAccumulator acc;
    for (std::size_t r = 0; r < R; ++r) acc.add(std::pow(std::abs(z(r, n) - 1.0), opts.p));
    rep.moment_curve.push_back(acc.mean());
    rep.moment_stderr.push_back(acc.stderr_of_mean());
  }

  rep.trend = mann_kendall(rep.increment_medians);

  std::vector<double> lx, ly;
  for (int n = std::max(1, (N + 1) / 2); n <= N; ++n) {
    const double mom = rep.moment_curve[static_cast<std::size_t>(n)];
    if (mom > 0.0) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(mom));
    }
  }
  if (rep.degenerate) rep.growth.points = lx.size();  // round-off only: report a flat curve
  else if (lx.size() >= 3) rep.growth = fit_slope(lx, ly);
  else rep.growth.points = lx.size();  // flat zero curve: slope 0 with an empty interval

  CompensatedSum ui;
  for (std::size_t r = 0; r < R; ++r) {
    const double v = std::pow(std::abs(z(r, N)), opts.p);
    if (v > opts.ui_threshold) ui.add(v);
  }
  rep.ui_tail_mass = ui.value() / static_cast<double>(R);

  if (rep.degenerate) {
    rep.verdict = Verdict::Converged;
    rep.note = "deterministic martingale: every increment is zero up to round-off";
  } else if (rep.trend.p_decreasing < 0.05 && rep.growth.ci_high <= kConvergedSlopeMax) {
    rep.verdict = Verdict::Converged;
    rep.note = "increment medians decrease and the p-th moment curve is flat; "
               "a finite-sample surrogate for almost-sure convergence";
  } else if (rep.growth.ci_low >= kDivergedSlopeMin) {
    rep.verdict = Verdict::Diverged;
    rep.note = "p-th moment of Z_n - 1 grows polynomially in n";
  } else {
    rep.verdict = Verdict::Indeterminate;
    rep.note = "neither gate is met";
  }
  return rep;
}

nlohmann::ordered_json to_json(const ConvergenceReport& r) {
  nlohmann::ordered_json j;
  j["verdict"] = to_string(r.verdict);
  j["p"] = r.p;
  j["lag"] = r.lag;
  j["replicates"] = r.replicates;
  j["generations"] = r.generations;
  j["degenerate"] = r.degenerate;
  j["increment_medians"] = r.increment_medians;
  j["moment_curve"] = r.moment_curve;
  j["moment_stderr"] = r.moment_stderr;
  j["mann_kendall"] = {{"s", r.trend.s},
                       {"z", r.trend.z},
                       {"p_decreasing", r.trend.p_decreasing},
                       {"p_increasing", r.trend.p_increasing}};
  j["growth_slope"] = {{"slope", r.growth.slope},
                       {"ci_low", r.growth.ci_low},
                       {"ci_high", r.growth.ci_high},
                       {"points", r.growth.points}};
  j["ui_tail_mass"] = r.ui_tail_mass;
  j["ui_threshold"] = r.ui_threshold;
  j["note"] = r.note;
  return j;
}

TailSurvey tail_survey(const std::vector<MartingaleTrace>& traces, const std::vector<double>& t_grid) {
  TailSurvey out;
  const int N = common_generations(traces);
  if (N < 0 || t_grid.empty()) return out;
  const auto R = static_cast<double>(traces.size());
  std::vector<double> lt, ls;
  for (int n = 0; n <= N; ++n)
    for (double t : t_grid) {
      double hits = 0.0;
      for (const auto& tr : traces)
        if (std::abs(tr.records[static_cast<std::size_t>(n)].z) > t) hits += 1.0;
      const double s = hits / R;
      out.rows.push_back({n, t, s, std::sqrt(s * (1 - s) / R)});
      if (n == N && s > 0.0 && t > 0.0) {
        lt.push_back(std::log(t));
        ls.push_back(std::log(s));
      }
    }
  if (lt.size() >= 3) {
    try {
      out.final_fit = fit_slope(lt, ls);
      out.fit_available = true;
      out.heavy = out.final_fit.slope > -1.0;
    } catch (const InsufficientData&) {
      // repeated t values: leave the fit unavailable
    }
  }
  return out;
}

EnergyTest energy_test(const std::vector<std::complex<double>>& a,
                       const std::vector<std::complex<double>>& b, std::size_t permutations,
                       std::uint64_t seed) {
  const std::size_t na = a.size(), nb = b.size(), N = na + nb;
  if (na < 2 || nb < 2) throw InsufficientData("energy test needs at least 2 points per sample");
  std::vector<std::complex<double>> pts(a);
  pts.insert(pts.end(), b.begin(), b.end());

  // Packed upper triangle of pairwise distances; row i holds j = i+1..N-1.
  std::vector<std::size_t> row_start(N + 1, 0);
  for (std::size_t i = 0; i < N; ++i) row_start[i + 1] = row_start[i] + (N - 1 - i);
  std::vector<double> d(row_start[N]);
  std::vector<double> row_total(N, 0.0);
  const auto n_signed = static_cast<std::int64_t>(N);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t is = 0; is < n_signed; ++is) {
    const auto i = static_cast<std::size_t>(is);
    double s = 0.0;
    for (std::size_t j = i + 1; j < N; ++j) {
      const double v = std::abs(pts[i] - pts[j]);
      d[row_start[i] + j - i - 1] = v;
      s += v;
    }
    row_total[i] = s;
  }
  double total = 0.0;
  for (double v : row_total) total += v;

  const double fa = static_cast<double>(na), fb = static_cast<double>(nb);
  auto statistic = [&](const std::vector<double>& in_a) {
    double saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double* row = d.data() + row_start[i];
      double ra = 0.0;
      for (std::size_t j = i + 1; j < N; ++j) ra += row[j - i - 1] * in_a[j];
      saa += in_a[i] * ra;
      sbb += (1.0 - in_a[i]) * (row_total[i] - ra);
    }
    const double sab = total - saa - sbb;
    const double e = 2.0 * sab / (fa * fb) - 2.0 * saa / (fa * fa) - 2.0 * sbb / (fb * fb);
    return fa * fb / (fa + fb) * e;
  };

  std::vector<double> labels(N, 0.0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(na), 1.0);
  EnergyTest out;
  out.permutations = permutations;
  out.statistic = statistic(labels);

  std::vector<std::uint8_t> exceed(permutations, 0);
  const auto n_perm = static_cast<std::int64_t>(permutations);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t k = 0; k < n_perm; ++k) {
    Rng rng = make_stream(seed, {static_cast<std::uint64_t>(k)});
    std::vector<double> lab = labels;
    for (std::size_t i = N - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(lab[i], lab[pick(rng)]);
    }
    // Relative slack so that exact ties in a degenerate sample count as exceedances.
    exceed[static_cast<std::size_t>(k)] =
        statistic(lab) >= out.statistic - 1e-12 * std::abs(out.statistic) ? 1 : 0;
  }
  const double hits = std::accumulate(exceed.begin(), exceed.end(), 0.0);
  out.p_value = (1.0 + hits) / (static_cast<double>(permutations) + 1.0);
  return out;
}

namespace {

Generation run_generations(const OffspringModel& model, const LambdaFrame& frame, int n,
                           std::uint64_t seed, std::size_t cap) {
  Generation g = Generation::root();
  StepOptions so;
  so.cap = cap;
  for (int k = 1; k <= n; ++k)
    g = step(g, model, frame, derive_seed(seed, {static_cast<std::uint64_t>(k)}), so).next;
  return g;
}

}  // namespace

FixedPointSamples fixed_point_samples(const OffspringModel& model, ComplexParam lambda, int n,
                                      std::size_t reps, std::uint64_t seed, std::size_t cap) {
  if (n < 1) throw InsufficientData("fixed-point samples need n >= 1");
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  FixedPointSamples out;
  out.direct.resize(reps);
  out.assembled.resize(reps);
  std::vector<std::exception_ptr> errors(reps);
  const auto n_reps = static_cast<std::int64_t>(reps);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t rs = 0; rs < n_reps; ++rs) {
    const auto r = static_cast<std::size_t>(rs);
    try {
      out.direct[r] = martingale(run_generations(model, frame, n, derive_seed(seed, {0, r}), cap));

      StepOptions so;
      so.cap = cap;
      const Generation first =
          step(Generation::root(), model, frame, derive_seed(seed, {1, r}), so).next;
      CompensatedComplexSum s;
      for (std::size_t j = 0; j < first.size(); ++j) {
        const std::complex<double> sub =
            martingale(run_generations(model, frame, n - 1, derive_seed(seed, {2, r, j}), cap));
        s.add(std::polar(std::exp(first.logweights[j]), first.phases[j]) * sub);
      }
      out.assembled[r] = s.value();
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

SelfConsistency fixed_point_selfconsistency(const OffspringModel& model, ComplexParam lambda, int n,
                                            std::size_t reps, std::uint64_t seed,
                                            std::size_t permutations) {
  if (reps < 20) throw InsufficientData("self-consistency test needs at least 20 replicates");
  const FixedPointSamples s = fixed_point_samples(model, lambda, n, reps, seed);
  SelfConsistency out;
  out.reps = reps;
  out.n = n;
  out.test = energy_test(s.direct, s.assembled, permutations, derive_seed(seed, {3}));
  return out;
}

}  // namespace brw
