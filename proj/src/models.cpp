#include "brw/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "brw/errors.hpp"

namespace brw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

OffspringModel OffspringModel::gaussian_binary() {
  OffspringModel m;
  m.kind_ = ModelKind::GaussianBinary;
  m.domain_ = ThetaDomain{};
  m.moment_pred_ = [](double, double) -> std::optional<bool> { return true; };
  return m;
}

OffspringModel OffspringModel::lattice_pathological(std::int64_t cap) {
  if (cap < 1) throw DomainError("lattice cap must be at least 1");
  OffspringModel m;
  m.kind_ = ModelKind::LatticePathological;
  m.lattice_cap_ = cap;
  m.domain_ = ThetaDomain{0.0, true, kInf, true};
  // E[Z_1(θ)^2] < ∞ for every θ > 0, hence every γ ∈ (1, 2].
  m.moment_pred_ = [](double theta, double gamma) -> std::optional<bool> {
    if (theta > 0.0 && gamma <= 2.0) return true;
    return std::nullopt;
  };
  return m;
}

OffspringModel OffspringModel::table(std::vector<TableRow> rows, Criticality check) {
  if (rows.empty()) throw DomainError("table model needs at least one row");
  double total = 0.0;
  double mean_n = 0.0;
  for (const auto& r : rows) {
    if (!(r.prob >= 0.0) || !std::isfinite(r.prob))
      throw DomainError("table probabilities must be finite and nonnegative");
    for (double x : r.displacements)
      if (!std::isfinite(x)) throw DomainError("table displacements must be finite");
    total += r.prob;
    mean_n += r.prob * static_cast<double>(r.displacements.size());
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("table probabilities must sum to 1");
  if (check == Criticality::RequireSupercritical && !(mean_n > 1.0))
    throw DomainError("table model is not supercritical (E[N] <= 1)");

  OffspringModel m;
  m.kind_ = ModelKind::Table;
  m.rows_ = std::move(rows);
  m.row_cdf_.reserve(m.rows_.size());
  double acc = 0.0;
  for (const auto& r : m.rows_) {
    acc += r.prob;
    m.row_cdf_.push_back(acc);
  }
  m.row_cdf_.back() = 1.0;
  m.domain_ = ThetaDomain{};
  m.moment_pred_ = [](double, double) -> std::optional<bool> { return true; };
  return m;
}

std::string OffspringModel::name() const {
  switch (kind_) {
    case ModelKind::GaussianBinary:
      return "gaussian-binary";
    case ModelKind::LatticePathological:
      return "lattice";
    case ModelKind::Table:
      return "table";
  }
  return "unknown";
}

double OffspringModel::mean_offspring() const {
  switch (kind_) {
    case ModelKind::GaussianBinary:
      return 2.0;
    case ModelKind::LatticePathological:
      return kInf;
    case ModelKind::Table: {
      double s = 0.0;
      for (const auto& r : rows_) s += r.prob * static_cast<double>(r.displacements.size());
      return s;
    }
  }
  return 0.0;
}

void OffspringModel::sample_atoms(Rng& rng, std::vector<Atom>& out) const {
  out.clear();
  switch (kind_) {
    case ModelKind::GaussianBinary: {
      std::normal_distribution<double> normal;
      const double x1 = normal(rng);
      const double x2 = normal(rng);
      out.push_back({x1, 1});
      out.push_back({x2, 1});
      return;
    }
    case ModelKind::LatticePathological: {
      // Inverse CDF of P(n) = 1/(n(n+1)): F(n) = 1 - 1/(n+1).
      const double u = uniform_open(rng);
      const double tail = 1.0 - u;
      double n_real = std::ceil(1.0 / tail - 1.0);
      if (n_real < 1.0) n_real = 1.0;
      const auto cap = static_cast<double>(lattice_cap_);
      const auto n = static_cast<std::uint64_t>(std::min(n_real, cap));
      out.push_back({static_cast<double>(n), n * (n + 1)});
      return;
    }
    case ModelKind::Table: {
      const double u = uniform_open(rng);
      const auto it = std::lower_bound(row_cdf_.begin(), row_cdf_.end(), u);
      const auto idx = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(it - row_cdf_.begin(), std::ssize(row_cdf_) - 1));
      for (double x : rows_[idx].displacements) out.push_back({x, 1});
      return;
    }
  }
}

void OffspringModel::sample(Rng& rng, std::vector<double>& out) const {
  thread_local std::vector<Atom> atoms;
  sample_atoms(rng, atoms);
  out.clear();
  for (const auto& a : atoms) out.insert(out.end(), a.count, a.x);
}

OffspringSample OffspringModel::sample(Rng& rng) const {
  OffspringSample s;
  sample(rng, s.displacements);
  return s;
}

std::optional<std::complex<double>> OffspringModel::log_laplace(ComplexParam lambda) const {
  if (!in_domain(lambda.theta)) return std::nullopt;
  const std::complex<double> l = lambda.value();
  switch (kind_) {
    case ModelKind::GaussianBinary: {
      std::complex<double> v = std::log(2.0) + 0.5 * l * l;
      return std::complex<double>(v.real(), std::remainder(v.imag(), 2.0 * std::numbers::pi));
    }
    case ModelKind::LatticePathological: {
      // m(λ) = e^{-λ}/(1 - e^{-λ}); 2πi-periodic, so reduce η first.
      const double eta = std::remainder(lambda.eta, 2.0 * std::numbers::pi);
      if (eta == 0.0) return std::complex<double>(log_laplace_real(lambda.theta)->value, 0.0);
      const std::complex<double> z(lambda.theta, eta);
      const std::complex<double> v = -z - std::log(1.0 - std::exp(-z));
      return std::complex<double>(v.real(), std::remainder(v.imag(), 2.0 * std::numbers::pi));
    }
    case ModelKind::Table: {
      double peak = -kInf;
      for (const auto& r : rows_)
        if (r.prob > 0.0)
          for (double x : r.displacements) peak = std::max(peak, -lambda.theta * x);
      if (peak == -kInf) return std::complex<double>(-kInf, 0.0);
      CompensatedComplexSum acc;
      double total = 0.0;
      for (const auto& r : rows_) {
        if (r.prob == 0.0) continue;
        for (double x : r.displacements) {
          const double mag = r.prob * std::exp(-lambda.theta * x - peak);
          const double ph = -lambda.eta * x;
          acc.add(mag * std::cos(ph), mag * std::sin(ph));
          total += mag;
        }
      }
      const std::complex<double> s = acc.value();
      // A modulus at the level of rounding noise in the phases is an exact zero.
      if (std::abs(s) <= 64.0 * std::numeric_limits<double>::epsilon() * total)
        return std::complex<double>(-kInf, 0.0);
      return std::complex<double>(peak + std::log(std::abs(s)), std::arg(s));
    }
  }
  return std::nullopt;
}

std::optional<std::complex<double>> OffspringModel::laplace(ComplexParam lambda) const {
  const auto lg = log_laplace(lambda);
  if (!lg) return std::nullopt;
  if (kind_ == ModelKind::GaussianBinary) {
    const std::complex<double> l = lambda.value();
    return 2.0 * std::exp(0.5 * l * l);
  }
  if (lg->real() == -kInf) return std::complex<double>(0.0, 0.0);
  return std::polar(std::exp(lg->real()), lg->imag());
}

std::optional<LogLaplaceJet> OffspringModel::log_laplace_real(double x) const {
  if (!in_domain(x)) return std::nullopt;
  switch (kind_) {
    case ModelKind::GaussianBinary:
      return LogLaplaceJet{std::log(2.0) + 0.5 * x * x, x, 1.0};
    case ModelKind::LatticePathological: {
      // log m = -x - log(1 - e^{-x}); (log m)' = -1/(1-e^{-x}); (log m)'' = e^{-x}/(1-e^{-x})^2.
      const double q = -std::expm1(-x);
      const double e = std::exp(-x);
      return LogLaplaceJet{-x - std::log(q), -1.0 / q, e / (q * q)};
    }
    case ModelKind::Table: {
      double peak = -kInf;
      for (const auto& r : rows_)
        if (r.prob > 0.0)
          for (double d : r.displacements) peak = std::max(peak, -x * d);
      if (peak == -kInf) return LogLaplaceJet{-kInf, 0.0, 0.0};
      // m = Σ w, m' = -Σ w d, m'' = Σ w d² with w = p e^{-x d}.
      CompensatedSum s0, s1, s2;
      for (const auto& r : rows_) {
        if (r.prob == 0.0) continue;
        for (double d : r.displacements) {
          const double w = r.prob * std::exp(-x * d - peak);
          s0.add(w);
          s1.add(-w * d);
          s2.add(w * d * d);
        }
      }
      const double m0 = s0.value();
      const double g1 = s1.value() / m0;
      const double g2 = s2.value() / m0 - g1 * g1;
      return LogLaplaceJet{peak + std::log(m0), g1, std::max(g2, 0.0)};
    }
  }
  return std::nullopt;
}

std::optional<bool> OffspringModel::gamma_moment_finite(double theta, double gamma) const {
  if (!in_domain(theta)) return false;
  if (!moment_pred_) return std::nullopt;
  return moment_pred_(theta, gamma);
}

ComplexEstimate laplace_mc(const OffspringModel& model, ComplexParam lambda, std::size_t reps,
                           Rng& rng) {
  if (reps < 2) throw DomainError("laplace_mc needs at least 2 replicates");
  if (!model.in_domain(lambda.theta)) throw DomainError("theta outside the model's domain");
  MeanAccumulator re, im;
  std::vector<Atom> atoms;
  for (std::size_t r = 0; r < reps; ++r) {
    model.sample_atoms(rng, atoms);
    CompensatedComplexSum s;
    for (const auto& a : atoms) {
      const double mag = static_cast<double>(a.count) * std::exp(-lambda.theta * a.x);
      const double ph = -lambda.eta * a.x;
      s.add(mag * std::cos(ph), mag * std::sin(ph));
    }
    re.add(s.value().real());
    im.add(s.value().imag());
  }
  return {{re.mean(), im.mean()}, re.stderr_of_mean(), im.stderr_of_mean()};
}

}  // namespace brw
