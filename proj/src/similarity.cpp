#include "brw/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <string>

#include <omp.h>

#include "brw/errors.hpp"
#include "brw/summation.hpp"

namespace brw {

namespace {

double wrap_angle(double a) {
  const double r = std::remainder(a, 2.0 * std::numbers::pi);
  return r <= -std::numbers::pi ? r + 2.0 * std::numbers::pi : r;
}

Eigen::Matrix2d rotation_reflection(double angle, bool reflect) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix2d q;
  // R(angle)·diag(1, -1) flips the sign of the second column.
  q << c, reflect ? s : -s, s, reflect ? -c : c;
  return q;
}

}  // namespace

Eigen::Matrix2d Similarity2::matrix() const { return scale * rotation_reflection(angle, reflect); }

Similarity2 compose(const Similarity2& a, const Similarity2& b) {
  // F·R(φ) = R(-φ)·F.
  return {a.scale * b.scale, wrap_angle(a.angle + (a.reflect ? -b.angle : b.angle)),
          a.reflect != b.reflect};
}

SimilarityD SimilarityD::identity(int d) { return {1.0, Eigen::MatrixXd::Identity(d, d)}; }

SimilarityD compose(const SimilarityD& a, const SimilarityD& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("cannot compose similarities of dimension " +
                            std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  return {a.scale * b.scale, a.orthogonal * b.orthogonal};
}

SimilarityModel SimilarityModel::table(std::vector<SimilarityRow> rows) {
  if (rows.empty()) throw DomainError("similarity table needs at least one row");
  double total = 0.0;
  Eigen::Matrix2d mean = Eigen::Matrix2d::Zero();
  std::vector<double> cdf;
  for (const auto& r : rows) {
    if (!(r.prob >= 0.0)) throw DomainError("similarity table probabilities must be nonnegative");
    total += r.prob;
    cdf.push_back(total);
    for (const auto& s : r.children) {
      if (!(s.scale > 0.0)) throw DomainError("similarity scale must be positive");
      mean += r.prob * s.matrix();
    }
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("similarity table probabilities must sum to 1");
  SimilarityModel m;
  m.mean_ = mean;
  m.sampler_ = [rows = std::move(rows), cdf = std::move(cdf)](Rng& rng,
                                                              std::vector<SimAtom>& out) {
    out.clear();
    const double u = uniform_open(rng) * cdf.back();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const auto& row = rows[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                                 rows.size() - 1)];
    for (const auto& s : row.children) out.push_back({std::log(s.scale), s.angle, s.reflect, 1});
  };
  return m;
}

SimilarityModel SimilarityModel::from_sampler(Sampler sampler,
                                              std::optional<Eigen::Matrix2d> mean) {
  SimilarityModel m;
  m.sampler_ = std::move(sampler);
  m.mean_ = mean;
  return m;
}

std::pair<Eigen::Matrix2d, Eigen::Matrix2d> SimilarityModel::estimate_mean(std::size_t reps,
                                                                           Rng& rng) const {
  MeanAccumulator acc[2][2];
  std::vector<SimAtom> atoms;
  for (std::size_t r = 0; r < reps; ++r) {
    sample(rng, atoms);
    Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
    for (const auto& a : atoms)
      s += static_cast<double>(a.count) * std::exp(a.log_scale) *
           rotation_reflection(a.angle, a.reflect);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) acc[i][j].add(s(i, j));
  }
  Eigen::Matrix2d mean, se;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      mean(i, j) = acc[i][j].mean();
      se(i, j) = acc[i][j].stderr_of_mean();
    }
  return {mean, se};
}

SimilarityModel complex_to_similarity(const OffspringModel& model, ComplexParam lambda) {
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  auto sampler = [model, frame](Rng& rng, std::vector<SimAtom>& out) {
    thread_local std::vector<Atom> atoms;
    model.sample_atoms(rng, atoms);
    out.clear();
    for (const Atom& a : atoms)
      out.push_back({-frame.lambda.theta * a.x - frame.log_abs_m,
                     -frame.lambda.eta * a.x - frame.arg_m, false, a.count});
  };
  // E[Σ e^{-λX}/m(λ)] = 1, i.e. the identity matrix.
  return SimilarityModel::from_sampler(std::move(sampler), Eigen::Matrix2d::Identity());
}

EigenResult mean_matrix_eigvec(const Eigen::MatrixXd& m, double tol) {
  const auto d = m.rows();
  if (d == 0 || m.cols() != d) throw DimensionMismatch("mean matrix must be square");
  if (!m.allFinite()) throw DomainError("mean matrix has non-finite entries");
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues();
  double closest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d; ++i) closest = std::min(closest, std::abs(ev(i) - 1.0));
  if (closest > tol) throw NoUnitEigenvalue("no eigenvalue of M within tolerance of 1");

  const Eigen::MatrixXd a = m - Eigen::MatrixXd::Identity(d, d);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();  // descending
  int dim = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (sv(i) <= tol) ++dim;
  const int kept = std::max(dim, 1);
  const Eigen::MatrixXd basis = svd.matrixV().rightCols(kept);

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d);
  e1(0) = 1.0;
  Eigen::VectorXd w = basis * (basis.transpose() * e1);
  if (w.norm() < 1e-12) w = basis.col(0);
  w.normalize();
  for (Eigen::Index i = 0; i < d; ++i)
    if (std::abs(w(i)) > 1e-14) {
      if (w(i) < 0) w = -w;
      break;
    }
  return {w, (m * w - w).norm(), dim};
}

EigenResult mean_matrix_eigvec(const SimilarityModel& model, double tol) {
  if (!model.mean_matrix()) throw DomainError("model has no declared mean matrix");
  return mean_matrix_eigvec(Eigen::MatrixXd(*model.mean_matrix()), tol);
}

SimGeneration SimGeneration::root() {
  SimGeneration g;
  g.log_scale = {0.0};
  g.angle = {0.0};
  g.reflect = {0};
  return g;
}

SimGeneration sim_step(const SimGeneration& gen, const SimilarityModel& model,
                       std::uint64_t step_seed, std::size_t cap) {
  const std::size_t pop = gen.size();
  const std::size_t nchunks = (pop + kChunkSize - 1) / kChunkSize;
  std::vector<std::vector<std::pair<std::size_t, SimAtom>>> chunks(nchunks);
  std::vector<std::uint64_t> totals(nchunks, 0);
  const auto n_chunks = static_cast<std::int64_t>(nchunks);
#pragma omp parallel for schedule(static) if (nchunks > 1 && !omp_in_parallel())
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    Rng rng = make_stream(step_seed, {cu});
    std::vector<SimAtom> atoms;
    const std::size_t begin = cu * kChunkSize, end = std::min(pop, begin + kChunkSize);
    for (std::size_t i = begin; i < end; ++i) {
      model.sample(rng, atoms);
      for (const auto& a : atoms) {
        if (a.count == 0) continue;
        chunks[cu].push_back({i, a});
        totals[cu] += a.count;
      }
    }
  }
  std::vector<std::size_t> offset(nchunks + 1, 0);
  for (std::size_t c = 0; c < nchunks; ++c) offset[c + 1] = offset[c] + totals[c];
  if (offset[nchunks] > cap)
    throw PopulationCapExceeded("similarity generation " + std::to_string(gen.n + 1) +
                                " would hold " + std::to_string(offset[nchunks]) + " particles");

  SimGeneration next;
  next.n = gen.n + 1;
  next.log_scale.resize(offset[nchunks]);
  next.angle.resize(offset[nchunks]);
  next.reflect.resize(offset[nchunks]);
#pragma omp parallel for schedule(static) if (nchunks > 1 && !omp_in_parallel())
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    std::size_t o = offset[cu];
    for (const auto& [i, a] : chunks[cu]) {
      // L(uj) = L(u)·L_j: angles add, or subtract after a reflection.
      const bool r = gen.reflect[i] != 0;
      const double ls = gen.log_scale[i] + a.log_scale;
      const double ang = wrap_angle(gen.angle[i] + (r ? -a.angle : a.angle));
      const std::uint8_t refl = (r != a.reflect) ? 1 : 0;
      for (std::uint64_t k = 0; k < a.count; ++k, ++o) {
        next.log_scale[o] = ls;
        next.angle[o] = ang;
        next.reflect[o] = refl;
      }
    }
  }
  return next;
}

Eigen::Vector2d vector_martingale(const SimGeneration& gen, const Eigen::Vector2d& w) {
  CompensatedSum x, y;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const double s = std::exp(gen.log_scale[i]);
    const double c = std::cos(gen.angle[i]), sn = std::sin(gen.angle[i]);
    const double w2 = gen.reflect[i] ? -w(1) : w(1);
    x.add(s * (c * w(0) - sn * w2));
    y.add(s * (sn * w(0) + c * w2));
  }
  return {x.value(), y.value()};
}

double sim_w_martingale(const SimGeneration& gen, double alpha) {
  CompensatedSum s;
  for (double ls : gen.log_scale) s.add(std::exp(alpha * ls));
  return s.value();
}

std::vector<SimRecord> run_similarity(const SimilarityModel& model, const Eigen::Vector2d& w,
                                      int generations, double alpha,
                                      std::uint64_t replicate_seed, std::size_t cap) {
  std::vector<SimRecord> out;
  SimGeneration g = SimGeneration::root();
  out.push_back({0, vector_martingale(g, w), sim_w_martingale(g, alpha), g.size()});
  for (int k = 1; k <= generations; ++k) {
    g = sim_step(g, model, derive_seed(replicate_seed, {static_cast<std::uint64_t>(k)}), cap);
    out.push_back({k, vector_martingale(g, w), sim_w_martingale(g, alpha), g.size()});
  }
  return out;
}

std::vector<EquivalenceRecord> compare_engines(const OffspringModel& model, ComplexParam lambda,
                                               int generations, double alpha, std::size_t reps,
                                               std::uint64_t seed, std::size_t cap) {
  const SimilarityModel sim = complex_to_similarity(model, lambda);
  const EigenResult eig = mean_matrix_eigvec(sim);
  const Eigen::Vector2d w = eig.w;
  std::vector<EquivalenceRecord> out(static_cast<std::size_t>(generations) + 1);
  for (int n = 0; n <= generations; ++n) out[static_cast<std::size_t>(n)].n = n;
  RunOptions opts;
  opts.generations = generations;
  opts.alpha = alpha;
  opts.cap = cap;
  for (std::size_t r = 0; r < reps; ++r) {
    const std::uint64_t rs = derive_seed(seed, {r});
    const MartingaleTrace ct = run_replicate(model, lambda, opts, rs, r);
    const auto st = run_similarity(sim, w, generations, alpha, rs, cap);
    for (std::size_t n = 0; n < out.size(); ++n) {
      const auto& c = ct.records[n];
      const auto& s = st[n];
      const double dz = std::max(std::abs(c.z.real() - s.zw(0)), std::abs(c.z.imag() - s.zw(1)));
      out[n].max_z_diff = std::max(out[n].max_z_diff, dz);
      out[n].max_w_diff = std::max(out[n].max_w_diff, std::abs(c.w - s.w));
      if (c.pop != s.pop) out[n].max_z_diff = std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

}  // namespace brw
