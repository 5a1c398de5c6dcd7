#pragma once

// Region classification of λ against the phase region Λ and the pieces of
// its boundary, plus the side conditions used by the convergence results.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "brw/charfun.hpp"
#include "brw/models.hpp"
#include "brw/rng.hpp"

namespace brw {

enum class RegionTag {
  OutsideDomain,  // θ ∉ {m(θ) < ∞}
  Interior,       // λ ∈ Λ
  Boundary1,      // (C1) with α = 1
  Boundary12,     // (C1) with α ∈ (1, 2)
  Boundary2,      // (C1) with α = 2
  MomentBlowup,   // E[Z_1(θ)^γ] = ∞ for every γ > 1
  Exterior,
  Indeterminate,
};

enum class DerivativeSign { Negative, Zero };

std::string_view to_string(RegionTag tag);
std::optional<RegionTag> parse_region_tag(std::string_view s);
std::string_view to_string(DerivativeSign sign);

struct ClassifierTolerance {
  double f = 1e-9;           // |f - 1| band treated as equality
  double derivative = 1e-9;  // |E[Σ|L|^α log|L|]| below this counts as zero
  double bucket = 1e-6;      // α within this of 1 or 2 snaps to that endpoint
};

struct RegionVerdict {
  ComplexParam lambda;
  RegionTag tag = RegionTag::Indeterminate;
  std::optional<double> alpha;
  std::optional<double> derivative;
  std::optional<DerivativeSign> derivative_sign;
  // f-curve summary
  std::optional<double> witness_p;  // argmin of f on [1, 2]
  std::optional<double> min_f;
  std::string reason;
};

RegionVerdict classify(const OffspringModel& model, ComplexParam lambda,
                       const ClassifierTolerance& tol = {});

/// Cheap membership test used for boundary tracing: true iff classify()
/// would return Interior.
bool is_interior(const OffspringModel& model, ComplexParam lambda,
                 const ClassifierTolerance& tol = {});

/// `{"lambda":[θ,η],"tag":...,"alpha":...,"derivative":...,"witness_p":...}`
std::string to_ndjson(const RegionVerdict& v);

// ---------------------------------------------------------------------------
// Side conditions

enum class ValueKind { AnalyticFinite, Exact, MonteCarlo };

/// An expectation that is either known finite, computed exactly, or estimated.
/// `std_error` is present iff kind == MonteCarlo; MC values cannot certify
/// finiteness.
struct ConditionValue {
  ValueKind kind = ValueKind::Exact;
  double value = 0.0;
  std::optional<double> std_error;
};

/// E[|Z_1(λ)|^α log_+^{2+ε}|Z_1(λ)|].
ConditionValue check_c2(const OffspringModel& model, ComplexParam lambda, double alpha,
                        double epsilon, std::size_t reps, Rng& rng);

struct ConditionReport {
  std::optional<ConditionValue> c2;
  ConditionValue sum_l2_log;       // E[Σ|L|² log|L|]
  ConditionValue w1_log_w1;        // E[W_1 log_+ W_1]
  ConditionValue sum_l2_log2;      // E[Σ|L|² log²|L|]
  ConditionValue w1_log2_w1;       // E[W_1 log_+² W_1]
  ConditionValue wtilde_log_wtilde;  // E[W̃_1 log_+ W̃_1], W̃_1 = Σ|L|² log_-|L|
  std::optional<DerivativeSign> derivative_sign;
  bool case_i = false;   // negative derivative with E[W_1 log_+ W_1] finite
  bool case_ii = false;  // zero derivative, (C3), and the three log moments finite
};

/// Functionals of the α = 2 divergence criteria at λ.
ConditionReport prop1_conditions(const OffspringModel& model, ComplexParam lambda,
                                 std::size_t reps, Rng& rng,
                                 const ClassifierTolerance& tol = {});

}  // namespace brw
