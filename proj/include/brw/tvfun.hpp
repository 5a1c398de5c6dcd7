#pragma once

// The regularly varying pair (φ, ℓ) with φ(x) = |x|^α ℓ(|x|), where
//   ℓ(x) = exp(∫_0^{log x} ε(u) du),
//   ε(u) = δ/u₀ on |u| <= u₀ and δ/|u| beyond.
// ℓ is evaluated in closed form; φ extends to complex arguments by
// φ(x + iy) = φ(x) + φ(y).

#include <complex>
#include <string>

namespace brw {

struct TVFunction {
  double alpha = 1.5;  // in (1, 2)
  double delta = 1.0;  // > 0
  double u0 = 1.0;     // > 0

  /// Validates the parameter ranges; throws DomainError.
  static TVFunction make(double alpha, double delta, double u0);

  /// The constant c in ℓ(x) = c·log^δ(x) for x > e^{u₀}.
  double tail_constant() const;
};

double epsilon(const TVFunction& tv, double u);
/// log ℓ(e^t), the integral of ε over [0, t].
double log_ell_at_log(const TVFunction& tv, double t);

/// Throws DomainError for x <= 0.
double ell(const TVFunction& tv, double x);
double phi(const TVFunction& tv, double x);
double phi(const TVFunction& tv, std::complex<double> z);
/// φ'(x) = x^{α-1} ℓ(x) (α + ε(log x)) for x > 0.
double phi_prime(const TVFunction& tv, double x);

struct TVGridCheck {
  bool convex = true;             // φ'' >= 0 on the grid
  bool concave_derivative = true; // φ''' <= 0 on the grid
  double worst_convexity = 0.0;   // most negative scaled second difference of φ
  double worst_concavity = 0.0;   // most positive scaled second difference of φ'
  int points = 0;
  bool ok() const { return convex && concave_derivative; }
};

/// Second divided differences on `points` log-spaced points over
/// [e^{-3u₀}, e^{3u₀}], each scaled by the local size of the function so the
/// test is relative. Triples straddling the kinks at e^{±u₀} are skipped.
TVGridCheck check_grid(const TVFunction& tv, int points = 1000, double tol = 1e-9);

/// First u₀ in 1, 2, 4, ..., 2^20 whose TVFunction passes check_grid;
/// throws SearchExhausted otherwise.
double select_u0(double alpha, double delta);

}  // namespace brw
