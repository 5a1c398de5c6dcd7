#pragma once

// Characteristic functionals of a complex parameter λ:
//   f(p) = m(pθ) / |m(λ)|^p,
// the α-log-moment E[Σ_{|u|=1} |L(u)|^α log|L(u)|], the minimal root α of
// f(α) = 1 in [1, 2], and the finiteness check for E[Σ|L(u)|^ϑ], ϑ < α.
//
// All evaluations go through g(p) = log f(p) = log m(pθ) - p·log|m(λ)|.

#include <optional>
#include <vector>

#include "brw/models.hpp"

namespace brw {

/// log|m(λ)| below this is treated as m(λ) = 0.
inline constexpr double kLogUnderflow = -690.0;

/// Constants of λ that every weight computation needs.
struct LambdaFrame {
  ComplexParam lambda;
  double log_abs_m = 0.0;  // log|m(λ)|
  double arg_m = 0.0;      // arg m(λ) in (-π, π]

  /// Throws DomainError when m(λ) diverges and ZeroTransform when |m(λ)| underflows.
  static LambdaFrame make(const OffspringModel& model, ComplexParam lambda);
};

/// log f(p); nullopt when m(pθ) diverges.
std::optional<double> log_f_ratio(const OffspringModel& model, const LambdaFrame& frame,
                                  double p);
std::optional<double> log_f_ratio(const OffspringModel& model, ComplexParam lambda, double p);

/// f(p) = m(pθ)/|m(λ)|^p; nullopt means Divergent.
std::optional<double> f_ratio(const OffspringModel& model, ComplexParam lambda, double p);

/// d/dp log f(p), i.e. θ·(log m)'(pθ) - log|m(λ)|; nullopt when m(pθ) diverges.
std::optional<double> log_f_slope(const OffspringModel& model, const LambdaFrame& frame,
                                  double p);

/// E[Σ_{|u|=1} |L(u)|^α log|L(u)|] = f(α)·(θ (log m)'(αθ) - log|m(λ)|).
/// Exact for every built-in kind (tables are finite sums). Throws DomainError
/// if f(α) diverges.
double log_moment_functional(const OffspringModel& model, ComplexParam lambda, double alpha);

/// E[Σ_{|u|=1} |L(u)|^α log²|L(u)|] = f(α)·(θ² (log m)''(αθ) + (θ (log m)'(αθ) - log|m(λ)|)²).
double log2_moment_functional(const OffspringModel& model, ComplexParam lambda, double alpha);

struct AlphaRoot {
  double alpha = 0.0;
  double derivative = 0.0;  // log_moment_functional at α
  bool tangency = false;    // f touches 1 without crossing
};

inline constexpr double kDefaultRootTol = 1e-10;
inline constexpr int kDefaultRatioGrid = 257;

/// Smallest α ∈ [1, 2] with f(α) = 1 (within `tol`), or nullopt.
///
/// f is scanned on a uniform grid; local grid minima are refined by bisection
/// on the closed-form slope of log f. A refined minimum within `tol` of 1 is
/// a tangency root; one below 1 - tol brackets a crossing, which is refined by
/// bisection on log f itself.
std::optional<AlphaRoot> alpha_root(const OffspringModel& model, ComplexParam lambda,
                                    double tol = kDefaultRootTol, int grid = kDefaultRatioGrid);

/// Minimum of f over [1, 2] with its location.
struct RatioMinimum {
  double p = 1.0;
  double log_f = 0.0;
};
std::optional<RatioMinimum> ratio_minimum(const OffspringModel& model, ComplexParam lambda,
                                          int grid = kDefaultRatioGrid);

struct RatioSample {
  double p = 0.0;
  std::optional<double> f;  // nullopt means Divergent
};

/// Samples of f on [1, 2] plus the α root, for reporting.
struct RatioCurve {
  ComplexParam lambda;
  std::vector<RatioSample> samples;
  std::optional<AlphaRoot> root;
};
RatioCurve ratio_curve(const OffspringModel& model, ComplexParam lambda,
                       int grid = kDefaultRatioGrid, double tol = kDefaultRootTol);

struct C3Result {
  bool holds = false;
  double witness = 0.0;  // largest grid ϑ < α with E[Σ|L|^ϑ] finite
};

/// Scans ϑ ∈ {1.0, 0.9, ..., 0.0} ∩ [0, α) from the top.
C3Result c3_check(const OffspringModel& model, ComplexParam lambda, double alpha);

}  // namespace brw
