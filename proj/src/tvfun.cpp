#include "brw/tvfun.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "brw/errors.hpp"

namespace brw {

TVFunction TVFunction::make(double alpha, double delta, double u0) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw DomainError("alpha must lie in (1, 2)");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("delta must be positive");
  if (!(u0 > 0.0) || !std::isfinite(u0)) throw DomainError("u0 must be positive");
  return TVFunction{alpha, delta, u0};
}

double TVFunction::tail_constant() const { return std::exp(delta) * std::pow(u0, -delta); }

double epsilon(const TVFunction& tv, double u) {
  const double a = std::abs(u);
  return a <= tv.u0 ? tv.delta / tv.u0 : tv.delta / a;
}

double log_ell_at_log(const TVFunction& tv, double t) {
  const double a = std::abs(t);
  const double v = a <= tv.u0 ? tv.delta * a / tv.u0 : tv.delta * (1.0 + std::log(a / tv.u0));
  return t < 0.0 ? -v : v;
}

double ell(const TVFunction& tv, double x) {
  if (!(x > 0.0)) throw DomainError("ell needs x > 0");
  if (x < 1.0) return 1.0 / ell(tv, 1.0 / x);
  const double lx = std::log(x);
  if (lx <= tv.u0) return std::pow(x, tv.delta / tv.u0);
  return std::exp(tv.delta) * std::pow(lx / tv.u0, tv.delta);
}

double phi(const TVFunction& tv, double x) {
  if (x == 0.0) return 0.0;
  const double a = std::abs(x);
  return std::pow(a, tv.alpha) * ell(tv, a);
}

double phi(const TVFunction& tv, std::complex<double> z) {
  return phi(tv, z.real()) + phi(tv, z.imag());
}

double phi_prime(const TVFunction& tv, double x) {
  if (!(x > 0.0)) throw DomainError("phi_prime needs x > 0");
  return std::pow(x, tv.alpha - 1.0) * ell(tv, x) * (tv.alpha + epsilon(tv, std::log(x)));
}

namespace {

// Second divided difference of values g at points y (three each), times 2.
double divided2(const double* y, const double* g) {
  const double s1 = (g[1] - g[0]) / (y[1] - y[0]);
  const double s2 = (g[2] - g[1]) / (y[2] - y[1]);
  return 2.0 * (s2 - s1) / (y[2] - y[0]);
}

}  // namespace

TVGridCheck check_grid(const TVFunction& tv, int points, double tol) {
  if (points < 3) throw DomainError("check_grid needs at least 3 points");
  TVGridCheck r;
  r.points = points;
  const double lo = -3.0 * tv.u0;
  const double h = 6.0 * tv.u0 / (points - 1);
  std::vector<double> t(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) t[static_cast<std::size_t>(i)] = lo + h * i;

  // log φ(e^t) and log φ'(e^t), both overflow-free.
  auto log_phi = [&](double s) { return tv.alpha * s + log_ell_at_log(tv, s); };
  auto log_dphi = [&](double s) {
    return (tv.alpha - 1.0) * s + log_ell_at_log(tv, s) + std::log(tv.alpha + epsilon(tv, s));
  };

  for (int i = 1; i + 1 < points; ++i) {
    const double t0 = t[static_cast<std::size_t>(i - 1)];
    const double t1 = t[static_cast<std::size_t>(i)];
    const double t2 = t[static_cast<std::size_t>(i + 1)];
    const bool near_kink = (t0 <= tv.u0 && tv.u0 <= t2) || (t0 <= -tv.u0 && -tv.u0 <= t2);
    if (near_kink) continue;
    // Scaling x by e^{-t1} and φ by its value at e^{t1} keeps the sign and
    // makes the tolerance relative.
    const double y[3] = {std::exp(t0 - t1), 1.0, std::exp(t2 - t1)};
    const double f1 = log_phi(t1);
    const double g[3] = {std::exp(log_phi(t0) - f1), 1.0, std::exp(log_phi(t2) - f1)};
    const double c = divided2(y, g);
    r.worst_convexity = std::min(r.worst_convexity, c);
    if (c < -tol) r.convex = false;

    const double d1 = log_dphi(t1);
    const double k[3] = {std::exp(log_dphi(t0) - d1), 1.0, std::exp(log_dphi(t2) - d1)};
    const double cc = divided2(y, k);
    r.worst_concavity = std::max(r.worst_concavity, cc);
    if (cc > tol) r.concave_derivative = false;
  }
  return r;
}

double select_u0(double alpha, double delta) {
  for (int k = 0; k <= 20; ++k) {
    const double u0 = std::ldexp(1.0, k);
    if (check_grid(TVFunction::make(alpha, delta, u0)).ok()) return u0;
  }
  throw SearchExhausted("no u0 up to 2^20 passes the convexity checks");
}

}  // namespace brw
