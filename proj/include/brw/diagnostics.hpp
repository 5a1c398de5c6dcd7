#pragma once

// Statistics over ensembles of martingale traces. Almost-sure convergence is
// not observable from finite runs; the Converged verdict stands for decaying
// Cauchy increments together with a flat p-th moment curve.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "brw/charfun.hpp"
#include "brw/models.hpp"
#include "brw/simulator.hpp"

namespace brw {

enum class Verdict { Converged, Diverged, Indeterminate };
const char* to_string(Verdict v);

struct MannKendall {
  double s = 0.0;        // Σ_{i<j} sign(x_j - x_i)
  double variance = 0.0; // tie-corrected
  double z = 0.0;        // continuity-corrected normal score
  double p_decreasing = 1.0;  // one-sided p-value for a downward trend
  double p_increasing = 1.0;
};

MannKendall mann_kendall(const std::vector<double>& xs);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;   // 95% Student-t interval
  double ci_high = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of y on x. Needs at least 3 points.
SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y, double level = 0.95);

inline constexpr std::size_t kMinReplicates = 100;
inline constexpr int kMinGenerations = 12;
inline constexpr double kConvergedSlopeMax = 0.05;
inline constexpr double kDivergedSlopeMin = 0.1;
/// Increments at or below this size count as zero (Z_n ≡ 1 is built from
/// exp(-n log m), which is exact only up to rounding).
inline constexpr double kDegenerateIncrement = 1e-12;

struct ConvergenceOptions {
  double p = 1.5;
  int lag = 1;                 // k in |Z_n - Z_{n-k}|
  double ui_threshold = 10.0;  // K in E[|Z_N|^p; |Z_N|^p > K]
};

struct ConvergenceReport {
  Verdict verdict = Verdict::Indeterminate;
  double p = 0.0;
  int lag = 1;
  std::size_t replicates = 0;
  int generations = 0;
  std::vector<double> increment_medians;  // index i ↔ n = lag + i
  std::vector<double> moment_curve;       // index n ↔ E|Z_n - 1|^p, n = 0..N
  std::vector<double> moment_stderr;
  MannKendall trend;
  SlopeFit growth;  // log moment against log n over n ∈ [⌈N/2⌉, N]
  double ui_tail_mass = 0.0;
  double ui_threshold = 0.0;
  bool degenerate = false;  // every increment at most kDegenerateIncrement
  std::string note;
};

/// Throws InsufficientData for fewer than 100 replicates or 12 generations,
/// DomainError unless p > 1.
ConvergenceReport convergence_verdict(const std::vector<MartingaleTrace>& traces,
                                      const ConvergenceOptions& opts);

nlohmann::ordered_json to_json(const ConvergenceReport& r);

struct TailRow {
  int n = 0;
  double t = 0.0;
  double survival = 0.0;  // fraction of replicates with |Z_n| > t
  double std_error = 0.0;
};

struct TailSurvey {
  std::vector<TailRow> rows;  // every n, then every t
  SlopeFit final_fit;         // log survival against log t at the final n, over t with survival > 0
  bool fit_available = false;
  bool heavy = false;         // fitted slope above -1
};

TailSurvey tail_survey(const std::vector<MartingaleTrace>& traces, const std::vector<double>& t_grid);

struct EnergyTest {
  double statistic = 0.0;  // n·m/(n+m) times the energy distance
  double p_value = 1.0;
  std::size_t permutations = 0;
};

/// Two-sample energy-distance permutation test on points of ℝ². Permutation k
/// shuffles labels with the stream make_stream(seed, {k}).
EnergyTest energy_test(const std::vector<std::complex<double>>& a,
                       const std::vector<std::complex<double>>& b, std::size_t permutations,
                       std::uint64_t seed);

struct FixedPointSamples {
  std::vector<std::complex<double>> direct;     // Z_n
  std::vector<std::complex<double>> assembled;  // Σ_{|u|=1} L(u)·[Z_{n-1}]_u
};

/// Sample r of `direct` runs n generations from derive_seed(seed, {0, r}).
/// Sample r of `assembled` draws one first generation with derive_seed(seed, {1, r})
/// and an independent depth-(n-1) run per child j from derive_seed(seed, {2, r, j}).
FixedPointSamples fixed_point_samples(const OffspringModel& model, ComplexParam lambda, int n,
                                      std::size_t reps, std::uint64_t seed,
                                      std::size_t cap = kDefaultPopulationCap);

struct SelfConsistency {
  EnergyTest test;
  std::size_t reps = 0;
  int n = 0;
};

inline constexpr std::size_t kDefaultPermutations = 499;

/// Throws InsufficientData for fewer than 20 replicates or n < 1.
SelfConsistency fixed_point_selfconsistency(const OffspringModel& model, ComplexParam lambda, int n,
                                            std::size_t reps, std::uint64_t seed,
                                            std::size_t permutations = kDefaultPermutations);

}  // namespace brw
