#pragma once

// Similarity-matrix weights: L(u) = s·Q with s > 0 and Q orthogonal. In two
// dimensions Q = R(angle)·F^reflect with F = diag(1, -1), which realises the
// complex weights a + bi as [[a, -b], [b, a]].

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "brw/charfun.hpp"
#include "brw/models.hpp"
#include "brw/rng.hpp"
#include "brw/simulator.hpp"

namespace brw {

struct Similarity2 {
  double scale = 1.0;
  double angle = 0.0;  // in (-π, π]
  bool reflect = false;

  static Similarity2 identity() { return {}; }
  Eigen::Matrix2d matrix() const;
  /// Operator norm; equal to scale because the orthogonal factor is an isometry.
  double norm() const { return scale; }
};

/// a∘b, the similarity with matrix a.matrix()·b.matrix().
Similarity2 compose(const Similarity2& a, const Similarity2& b);

/// General dimension: scale times an orthogonal matrix.
struct SimilarityD {
  double scale = 1.0;
  Eigen::MatrixXd orthogonal;

  static SimilarityD identity(int d);
  int dim() const { return static_cast<int>(orthogonal.rows()); }
  Eigen::MatrixXd matrix() const { return scale * orthogonal; }
};

/// Throws DimensionMismatch when the dimensions differ.
SimilarityD compose(const SimilarityD& a, const SimilarityD& b);

/// Children of one offspring draw; `count` identical copies of each.
struct SimAtom {
  double log_scale = 0.0;
  double angle = 0.0;
  bool reflect = false;
  std::uint64_t count = 1;
};

struct SimilarityRow {
  double prob = 0.0;
  std::vector<Similarity2> children;
};

class SimilarityModel {
 public:
  using Sampler = std::function<void(Rng&, std::vector<SimAtom>&)>;

  /// Finite law over lists of similarities; M is the exact mean.
  static SimilarityModel table(std::vector<SimilarityRow> rows);
  static SimilarityModel from_sampler(Sampler sampler, std::optional<Eigen::Matrix2d> mean);

  void sample(Rng& rng, std::vector<SimAtom>& out) const { sampler_(rng, out); }
  /// M = E[Σ_{|u|=1} L(u)] when declared.
  const std::optional<Eigen::Matrix2d>& mean_matrix() const { return mean_; }
  /// Monte Carlo estimate of M with componentwise standard errors.
  std::pair<Eigen::Matrix2d, Eigen::Matrix2d> estimate_mean(std::size_t reps, Rng& rng) const;

 private:
  Sampler sampler_;
  std::optional<Eigen::Matrix2d> mean_;
};

/// Child weight e^{-λx}/m(λ) ↦ Similarity2(|·|, arg(·), no reflection).
/// The sampler draws exactly what OffspringModel::sample_atoms draws, so both
/// engines see the same random stream. M = I.
SimilarityModel complex_to_similarity(const OffspringModel& model, ComplexParam lambda);

struct EigenResult {
  Eigen::VectorXd w;        // unit norm, first nonzero entry positive
  double residual = 0.0;    // |Mw - w|
  int eigenspace_dim = 0;   // dimension of ker(M - I)
};

/// Right eigenvector of M for eigenvalue 1: e_1 projected onto ker(M - I)
/// (computed by SVD), else the first null vector. Throws NoUnitEigenvalue
/// when no eigenvalue lies within `tol` of 1.
EigenResult mean_matrix_eigvec(const Eigen::MatrixXd& m, double tol = 1e-8);
EigenResult mean_matrix_eigvec(const SimilarityModel& model, double tol = 1e-8);

struct SimGeneration {
  int n = 0;
  std::vector<double> log_scale;
  std::vector<double> angle;
  std::vector<std::uint8_t> reflect;

  static SimGeneration root();
  std::size_t size() const noexcept { return log_scale.size(); }
};

/// Same chunked stream layout as the complex engine's step().
SimGeneration sim_step(const SimGeneration& gen, const SimilarityModel& model,
                       std::uint64_t step_seed, std::size_t cap = kDefaultPopulationCap);

/// Z_n w = Σ L(u) w with compensated per-component sums.
Eigen::Vector2d vector_martingale(const SimGeneration& gen, const Eigen::Vector2d& w);
/// Σ scale(u)^α.
double sim_w_martingale(const SimGeneration& gen, double alpha);

struct SimRecord {
  int n = 0;
  Eigen::Vector2d zw;
  double w = 0.0;
  std::size_t pop = 0;
};

std::vector<SimRecord> run_similarity(const SimilarityModel& model, const Eigen::Vector2d& w,
                                      int generations, double alpha,
                                      std::uint64_t replicate_seed,
                                      std::size_t cap = kDefaultPopulationCap);

struct EquivalenceRecord {
  int n = 0;
  double max_z_diff = 0.0;  // max over replicates of |(Re Z_n, Im Z_n) - Z_n w|_∞
  double max_w_diff = 0.0;  // max over replicates of |W_n (complex) - W_n (similarity)|
};

/// Runs both engines on the same seeds (replicate r uses derive_seed(seed, {r})).
std::vector<EquivalenceRecord> compare_engines(const OffspringModel& model, ComplexParam lambda,
                                               int generations, double alpha, std::size_t reps,
                                               std::uint64_t seed,
                                               std::size_t cap = kDefaultPopulationCap);

}  // namespace brw
