#pragma once

// The associated random walk of the many-to-one formula. With
//   S-step = -log|L(u)| = θX + log|m(λ)|
// drawn from the α-tilted first generation, E[g(S_1)] equals
// E[Σ_{|u|=1} |L(u)|^α g(-log|L(u)|)] whenever f(α) = 1.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "brw/charfun.hpp"
#include "brw/models.hpp"
#include "brw/rng.hpp"
#include "brw/summation.hpp"
#include "brw/tvfun.hpp"

namespace brw {

enum class SpineSampler { ClosedForm, WeightedResampling };

struct SpinePath {
  std::vector<double> steps;  // S_0 = 0, S_1, ..., S_n
  ComplexParam lambda;
  double alpha = 1.0;
  SpineSampler sampler = SpineSampler::ClosedForm;
  // log of the importance weight Π_k Σ_j |L_j|^α (0 for closed-form paths).
  double log_weight = 0.0;
};

inline constexpr double kSpineNormTol = 1e-8;

/// Throws NotNormalized unless |f(α) - 1| <= tol.
void require_normalized(const OffspringModel& model, ComplexParam lambda, double alpha,
                        double tol = kSpineNormTol);

/// Weighted Monte Carlo of E[Σ_{|u|=1} |L(u)|^α g(-log|L(u)|)].
Estimate spine_expectation(const OffspringModel& model, ComplexParam lambda, double alpha,
                           const std::function<double(double)>& g, std::size_t reps, Rng& rng,
                           double tol = kSpineNormTol);

/// True when the model has a closed-form tilted step law (GaussianBinary).
bool has_closed_form_spine(const OffspringModel& model);

/// A path of n steps. `sampler` defaults to ClosedForm when available.
SpinePath spine_sample(const OffspringModel& model, ComplexParam lambda, double alpha, int n,
                       Rng& rng, std::optional<SpineSampler> sampler = std::nullopt,
                       double tol = kSpineNormTol);

/// Importance-weighted mean of g(path) over `reps` paths of n steps; path r
/// uses the stream derive_seed(seed, {r}).
Estimate spine_path_expectation(const OffspringModel& model, ComplexParam lambda, double alpha,
                                int n, const std::function<double(const SpinePath&)>& g,
                                std::size_t reps, std::uint64_t seed,
                                std::optional<SpineSampler> sampler = std::nullopt);

struct LadderEpochs {
  std::vector<std::size_t> descending;      // τ_1 < τ_2 < ...: strict new minima
  std::vector<std::size_t> weak_ascending;  // σ_1 < σ_2 < ...: S_k >= S_{σ_{n-1}}
};

/// Single pass over the path; σ_0 = τ_0 = 0 are not listed.
LadderEpochs ladder_epochs(const std::vector<double>& path);

struct DriReport {
  bool monotone = true;
  double riemann_h1 = 0.0;     // upper sums of x ↦ ℓ(e^{-x}) on [0, x_max]
  double riemann_h05 = 0.0;
  double riemann_h025 = 0.0;
  double difference_ratio = 0.0;  // |U_{1/4} - U_{1/2}| / |U_{1/2} - U_1|
  bool sums_converge = false;     // ratio <= 0.6
  double tail_slope = 0.0;        // log-log fit over [10u₀, 10⁴u₀]
  double tail_intercept = 0.0;    // fitted log of the constant 1/c
};

/// Numerical direct-Riemann-integrability check of x ↦ ℓ(e^{-x}) on
/// [0, x_max]. Throws MonotonicityViolation if an adjacent grid pair
/// increases by more than 1e-12.
DriReport dri_check(const TVFunction& tv, double x_max, int grid);

struct DualityReport {
  Estimate before_descent;   // E[Σ_{j<τ_1, j<=J} h(S_j)]
  Estimate weak_ascending;   // E[Σ_{σ_n<=J} h(S_{σ_n})]
  double z_score = 0.0;      // difference over the combined standard error
  double unfinished = 0.0;   // fraction of paths with τ_1 > J
  double horizon_term = 0.0; // mean of h(S_J) on {τ_1 > J}: size of one missing term
  std::size_t horizon = 0;
};

/// Both sides of the duality identity with h(s) = ℓ(e^{-s}), truncated at
/// the same horizon J, where the identity holds exactly in expectation.
DualityReport duality_check(const OffspringModel& model, ComplexParam lambda, double alpha,
                            const TVFunction& tv, std::size_t horizon, std::size_t reps,
                            std::uint64_t seed);

}  // namespace brw
