#include "brw/classifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <json.hpp>

#include "brw/errors.hpp"
#include "brw/summation.hpp"

namespace brw {

namespace {

constexpr std::array<RegionTag, 8> kAllTags = {
    RegionTag::OutsideDomain, RegionTag::Interior,     RegionTag::Boundary1,
    RegionTag::Boundary12,    RegionTag::Boundary2,    RegionTag::MomentBlowup,
    RegionTag::Exterior,      RegionTag::Indeterminate};

bool moment_blows_up(const OffspringModel& model, double theta) {
  for (int k = 1; k <= 20; ++k) {
    const double gamma = 1.0 + 0.05 * k;
    const auto finite = model.gamma_moment_finite(theta, gamma);
    if (!finite || *finite) return false;
  }
  return true;
}

double log_plus(double y) { return y > 1.0 ? std::log(y) : 0.0; }

// Z_1, W_1 = Σ|L|^α and W̃_1 = Σ|L|² log_-|L| for one first generation.
struct FirstGeneration {
  std::complex<double> z1;
  double w1 = 0.0;
  double wtilde = 0.0;
};

template <typename Atoms>
FirstGeneration first_generation(const LambdaFrame& frame, double alpha, const Atoms& atoms) {
  CompensatedComplexSum z;
  CompensatedSum w, wt;
  for (const auto& a : atoms) {
    const double c = static_cast<double>(a.count);
    const double log_l = -frame.lambda.theta * a.x - frame.log_abs_m;
    const double phase = -frame.lambda.eta * a.x - frame.arg_m;
    const double mag = std::exp(log_l);
    z.add(c * mag * std::cos(phase), c * mag * std::sin(phase));
    w.add(c * std::exp(alpha * log_l));
    if (log_l < 0.0) wt.add(c * std::exp(2.0 * log_l) * (-log_l));
  }
  return {z.value(), w.value(), wt.value()};
}

std::vector<Atom> row_atoms(const TableRow& row) {
  std::vector<Atom> atoms;
  atoms.reserve(row.displacements.size());
  for (double x : row.displacements) atoms.push_back({x, 1});
  return atoms;
}

// E[h(first generation)] exactly for tables, by Monte Carlo otherwise.
template <typename H>
ConditionValue first_generation_expectation(const OffspringModel& model,
                                            const LambdaFrame& frame, double alpha,
                                            std::size_t reps, Rng& rng, H h) {
  if (model.kind() == ModelKind::Table) {
    CompensatedSum s;
    for (const auto& row : model.rows()) {
      if (row.prob == 0.0) continue;
      s.add(row.prob * h(first_generation(frame, alpha, row_atoms(row))));
    }
    return {ValueKind::Exact, s.value(), std::nullopt};
  }
  if (reps < 2) throw DomainError("Monte Carlo functional needs at least 2 replicates");
  MeanAccumulator acc;
  std::vector<Atom> atoms;
  for (std::size_t r = 0; r < reps; ++r) {
    model.sample_atoms(rng, atoms);
    acc.add(h(first_generation(frame, alpha, atoms)));
  }
  return {ValueKind::MonteCarlo, acc.mean(), acc.stderr_of_mean()};
}

std::optional<DerivativeSign> sign_of(double derivative, double tol) {
  if (std::abs(derivative) <= tol) return DerivativeSign::Zero;
  if (derivative < 0.0) return DerivativeSign::Negative;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(RegionTag tag) {
  switch (tag) {
    case RegionTag::OutsideDomain:
      return "OutsideDomain";
    case RegionTag::Interior:
      return "Interior";
    case RegionTag::Boundary1:
      return "Boundary1";
    case RegionTag::Boundary12:
      return "Boundary12";
    case RegionTag::Boundary2:
      return "Boundary2";
    case RegionTag::MomentBlowup:
      return "MomentBlowup";
    case RegionTag::Exterior:
      return "Exterior";
    case RegionTag::Indeterminate:
      return "Indeterminate";
  }
  return "Indeterminate";
}

std::optional<RegionTag> parse_region_tag(std::string_view s) {
  for (RegionTag t : kAllTags)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::string_view to_string(DerivativeSign sign) {
  return sign == DerivativeSign::Zero ? "Zero" : "Negative";
}

bool is_interior(const OffspringModel& model, ComplexParam lambda,
                 const ClassifierTolerance& tol) {
  if (!model.in_domain(lambda.theta) || moment_blows_up(model, lambda.theta)) return false;
  try {
    const auto min = ratio_minimum(model, lambda);
    return min && min->log_f < std::log1p(-tol.f);
  } catch (const ZeroTransform&) {
    return false;
  }
}

RegionVerdict classify(const OffspringModel& model, ComplexParam lambda,
                       const ClassifierTolerance& tol) {
  RegionVerdict v;
  v.lambda = lambda;
  if (!model.in_domain(lambda.theta)) {
    v.tag = RegionTag::OutsideDomain;
    v.reason = "m(theta) diverges";
    return v;
  }
  if (moment_blows_up(model, lambda.theta)) {
    v.tag = RegionTag::MomentBlowup;
    v.reason = "E[Z_1(theta)^gamma] infinite for all gamma > 1";
    return v;
  }
  try {
    const auto min = ratio_minimum(model, lambda);
    if (!min) {
      v.tag = RegionTag::Indeterminate;
      v.reason = "f diverges on [1,2]";
      return v;
    }
    v.witness_p = min->p;
    v.min_f = std::exp(min->log_f);
    if (min->log_f < std::log1p(-tol.f)) {
      v.tag = RegionTag::Interior;
      return v;
    }

    const auto root = alpha_root(model, lambda, tol.f);
    if (root && root->derivative <= tol.derivative) {
      v.alpha = root->alpha;
      v.derivative = root->derivative;
      v.derivative_sign = std::abs(root->derivative) <= tol.derivative ? DerivativeSign::Zero
                                                                        : DerivativeSign::Negative;
      if (std::abs(root->alpha - 1.0) <= tol.bucket)
        v.tag = RegionTag::Boundary1;
      else if (std::abs(root->alpha - 2.0) <= tol.bucket)
        v.tag = RegionTag::Boundary2;
      else
        v.tag = RegionTag::Boundary12;
      return v;
    }
    // f > 1 on all of (1, 2]: either strictly above 1, or touching 1 only at
    // p = 1 and leaving it upwards (real λ beyond the boundary case).
    const bool above = min->log_f > std::log1p(tol.f);
    const bool leaves_at_one = root && root->alpha == 1.0 && root->derivative > tol.derivative;
    if (above || leaves_at_one) {
      v.tag = RegionTag::Exterior;
      if (root) {
        v.alpha = root->alpha;
        v.derivative = root->derivative;
      }
      return v;
    }
    v.tag = RegionTag::Indeterminate;
    v.reason = "no bucket matched within tolerance";
    return v;
  } catch (const ZeroTransform& e) {
    v.tag = RegionTag::Indeterminate;
    v.reason = e.what();
    return v;
  }
}

std::string to_ndjson(const RegionVerdict& v) {
  nlohmann::ordered_json j;
  j["lambda"] = {v.lambda.theta, v.lambda.eta};
  j["tag"] = std::string(to_string(v.tag));
  j["alpha"] = v.alpha ? nlohmann::ordered_json(*v.alpha) : nlohmann::ordered_json(nullptr);
  j["derivative"] =
      v.derivative ? nlohmann::ordered_json(*v.derivative) : nlohmann::ordered_json(nullptr);
  j["witness_p"] =
      v.witness_p ? nlohmann::ordered_json(*v.witness_p) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

ConditionValue check_c2(const OffspringModel& model, ComplexParam lambda, double alpha,
                        double epsilon, std::size_t reps, Rng& rng) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (model.kind() == ModelKind::GaussianBinary)
    return {ValueKind::AnalyticFinite, 0.0, std::nullopt};
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  return first_generation_expectation(model, frame, alpha, reps, rng,
                                      [&](const FirstGeneration& g) {
                                        const double z = std::abs(g.z1);
                                        return std::pow(z, alpha) *
                                               std::pow(log_plus(z), 2.0 + epsilon);
                                      });
}

ConditionReport prop1_conditions(const OffspringModel& model, ComplexParam lambda,
                                 std::size_t reps, Rng& rng, const ClassifierTolerance& tol) {
  constexpr double alpha = 2.0;
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  ConditionReport r;
  r.sum_l2_log = {ValueKind::Exact, log_moment_functional(model, lambda, alpha), std::nullopt};
  r.sum_l2_log2 = {ValueKind::Exact, log2_moment_functional(model, lambda, alpha), std::nullopt};
  r.w1_log_w1 = first_generation_expectation(
      model, frame, alpha, reps, rng,
      [](const FirstGeneration& g) { return g.w1 * log_plus(g.w1); });
  r.w1_log2_w1 = first_generation_expectation(model, frame, alpha, reps, rng,
                                              [](const FirstGeneration& g) {
                                                const double l = log_plus(g.w1);
                                                return g.w1 * l * l;
                                              });
  r.wtilde_log_wtilde = first_generation_expectation(
      model, frame, alpha, reps, rng,
      [](const FirstGeneration& g) { return g.wtilde * log_plus(g.wtilde); });
  r.c2 = check_c2(model, lambda, alpha, 1.0, reps, rng);

  r.derivative_sign = sign_of(r.sum_l2_log.value, tol.derivative);
  const auto finite = [](const ConditionValue& c) { return std::isfinite(c.value); };
  if (r.derivative_sign == DerivativeSign::Negative)
    r.case_i = std::isfinite(r.sum_l2_log.value) && finite(r.w1_log_w1);
  if (r.derivative_sign == DerivativeSign::Zero)
    r.case_ii = c3_check(model, lambda, alpha).holds && finite(r.sum_l2_log2) &&
                finite(r.w1_log2_w1) && finite(r.wtilde_log_wtilde);
  return r;
}

}  // namespace brw
