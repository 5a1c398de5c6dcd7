#pragma once

// Reproduction laws for the branching random walk: the point process
// 𝒵 = Σ_{j≤N} δ_{X_j} of children displacements, its Laplace transform
// m(λ) = E[Σ_j e^{-λ X_j}], and the analytic facts the classifier needs.

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "brw/rng.hpp"
#include "brw/summation.hpp"

namespace brw {

/// λ = θ + iη.
struct ComplexParam {
  double theta = 0.0;
  double eta = 0.0;

  constexpr ComplexParam() = default;
  constexpr ComplexParam(double re, double im) : theta(re), eta(im) {}
  explicit ComplexParam(std::complex<double> z) : theta(z.real()), eta(z.imag()) {}

  std::complex<double> value() const { return {theta, eta}; }
  bool operator==(const ComplexParam&) const = default;
};

/// One realisation of 𝒵: displacements of the children relative to the parent.
struct OffspringSample {
  std::vector<double> displacements;
  std::size_t size() const { return displacements.size(); }
};

/// Children sharing one displacement. Samplers emit atoms so that laws with
/// huge offspring counts (the lattice example) can be integrated without
/// materialising every child.
struct Atom {
  double x = 0.0;
  std::uint64_t count = 0;
};

enum class Criticality { RequireSupercritical, AllowAny };

enum class ModelKind { GaussianBinary, LatticePathological, Table };

struct TableRow {
  double prob = 0.0;
  std::vector<double> displacements;
};

/// The set {θ : m(θ) < ∞} as an interval.
struct ThetaDomain {
  double lower = -std::numeric_limits<double>::infinity();
  bool lower_open = true;
  double upper = std::numeric_limits<double>::infinity();
  bool upper_open = true;

  bool contains(double theta) const {
    const bool above = lower_open ? theta > lower : theta >= lower;
    const bool below = upper_open ? theta < upper : theta <= upper;
    return above && below;
  }
};

/// log m and its first two derivatives at a real argument.
struct LogLaplaceJet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Returns true / false when E[Z_1(θ)^γ] is known to be finite / infinite,
/// nullopt when the model cannot decide.
using MomentPredicate = std::function<std::optional<bool>(double theta, double gamma)>;

class OffspringModel {
 public:
  static constexpr std::int64_t kDefaultLatticeCap = 1'000'000;

  static OffspringModel gaussian_binary();
  /// P(N = n(n+1)) = 1/(n(n+1)), all children at n; n is capped at `cap`
  /// with the residual mass P(n > cap) placed on the cap.
  static OffspringModel lattice_pathological(std::int64_t cap = kDefaultLatticeCap);
  /// Finite mixture of deterministic displacement multisets. Throws
  /// DomainError on invalid probabilities or a subcritical law.
  /// Unary or subcritical tables are accepted only with AllowAny; they are
  /// useful as exact oracles but never come from user configuration.
  static OffspringModel table(std::vector<TableRow> rows,
                              Criticality check = Criticality::RequireSupercritical);

  ModelKind kind() const { return kind_; }
  std::string name() const;
  const std::vector<TableRow>& rows() const { return rows_; }
  std::int64_t lattice_cap() const { return lattice_cap_; }

  const ThetaDomain& domain() const { return domain_; }
  bool in_domain(double theta) const { return domain_.contains(theta); }

  /// E[N]; +inf for the lattice law.
  double mean_offspring() const;
  bool has_closed_laplace() const { return true; }

  void sample_atoms(Rng& rng, std::vector<Atom>& out) const;
  /// Appends the displacements of one realisation to `out` (after clearing it).
  void sample(Rng& rng, std::vector<double>& out) const;
  OffspringSample sample(Rng& rng) const;

  /// Principal complex logarithm of m(λ); nullopt when m(λ) diverges.
  /// Returns -inf real part when m(λ) = 0.
  std::optional<std::complex<double>> log_laplace(ComplexParam lambda) const;
  /// m(λ); nullopt when divergent.
  std::optional<std::complex<double>> laplace(ComplexParam lambda) const;
  /// log m(x) with derivatives for real x; nullopt when m(x) = ∞.
  std::optional<LogLaplaceJet> log_laplace_real(double x) const;

  std::optional<bool> gamma_moment_finite(double theta, double gamma) const;
  /// Replaces the analytic moment predicate (for user-supplied facts).
  void set_moment_predicate(MomentPredicate pred) { moment_pred_ = std::move(pred); }

 private:
  OffspringModel() = default;

  ModelKind kind_ = ModelKind::Table;
  std::vector<TableRow> rows_;
  std::vector<double> row_cdf_;
  std::int64_t lattice_cap_ = kDefaultLatticeCap;
  ThetaDomain domain_;
  MomentPredicate moment_pred_;
};

/// Monte Carlo estimate of m(λ): mean of Σ_j e^{-λ X_j} over `reps` samples.
struct ComplexEstimate {
  std::complex<double> value;
  double stderr_re = 0.0;
  double stderr_im = 0.0;
};

ComplexEstimate laplace_mc(const OffspringModel& model, ComplexParam lambda, std::size_t reps,
                           Rng& rng);

}  // namespace brw
