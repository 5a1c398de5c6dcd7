#include <doctest.h>

#include <cmath>
#include <numbers>

#include "brw/classifier.hpp"
#include "brw/errors.hpp"
#include "brw/spine.hpp"

using namespace brw;

namespace {

const double kLog2 = std::log(2.0);
const double kA = std::sqrt(2.0 * kLog2);
const double kCorner = std::sqrt(kLog2 / 2.0);

ComplexParam red_arc(double th) { return {th, std::sqrt(kLog2 - th * th)}; }
ComplexParam blue_line(double th) { return {th, kA - th}; }

// Brute-force definitions: τ_k is the k-th index below every earlier value,
// σ_k the k-th index at or above every earlier value.
LadderEpochs ladder_oracle(const std::vector<double>& s) {
  LadderEpochs out;
  for (std::size_t k = 1; k < s.size(); ++k) {
    bool below = true, above = true;
    for (std::size_t j = 0; j < k; ++j) {
      if (!(s[k] < s[j])) below = false;
      if (!(s[k] >= s[j])) above = false;
    }
    if (below) out.descending.push_back(k);
    if (above) out.weak_ascending.push_back(k);
  }
  return out;
}

}  // namespace

TEST_CASE("spine_expectation examples") {
  const auto g = OffspringModel::gaussian_binary();
  Rng rng(12);
  const auto one = spine_expectation(g, blue_line(1.0), kA, [](double) { return 1.0; }, 200000, rng);
  CHECK(std::abs(one.value - 1.0) <= 5 * one.std_error);

  const auto blue = spine_expectation(g, blue_line(1.0), kA, [](double s) { return s; }, 200000, rng);
  CHECK(std::abs(blue.value) <= 5 * blue.std_error);

  const auto red = spine_expectation(g, red_arc(0.4), 2.0, [](double s) { return s; }, 200000, rng);
  CHECK(std::abs(kLog2 / 2 - 0.16 - 0.186574) < 1e-6);
  CHECK(std::abs(red.value - 0.186574) <= 5 * red.std_error);

  CHECK_THROWS_AS(spine_expectation(g, {0.3, 0.4}, 1.5, [](double) { return 1.0; }, 100, rng),
                  NotNormalized);
}

TEST_CASE("many-to-one against the closed-form derivative") {
  const auto g = OffspringModel::gaussian_binary();
  const std::vector<ComplexParam> points = {red_arc(0.2), red_arc(0.5), {kCorner, kCorner},
                                            blue_line(0.8), blue_line(1.1)};
  Rng rng(99);
  for (const auto& lam : points) {
    const auto root = alpha_root(g, lam);
    REQUIRE(root);
    const auto est = spine_expectation(g, lam, root->alpha, [](double s) { return s; }, 200000, rng);
    INFO(lam.theta, " ", lam.eta);
    CHECK(std::abs(est.value + root->derivative) <= 5 * est.std_error);
  }
}

TEST_CASE("spine_sample examples") {
  const auto g = OffspringModel::gaussian_binary();
  Rng rng(4);
  MeanAccumulator s1;
  for (int i = 0; i < 100000; ++i) {
    const auto p = spine_sample(g, blue_line(1.0), kA, 1, rng);
    REQUIRE(p.steps.size() == 2);
    CHECK(p.steps[0] == 0.0);
    CHECK(p.sampler == SpineSampler::ClosedForm);
    s1.add(p.steps[1]);
  }
  CHECK(std::abs(s1.mean()) <= 5 * s1.stderr_of_mean());

  const double th = 0.4;
  MeanAccumulator v;
  const int n = 100000;
  for (int i = 0; i < n; ++i) v.add(spine_sample(g, red_arc(th), 2.0, 1, rng).steps[1]);
  // Normal sample variance has standard error σ²·sqrt(2/(n-1)).
  CHECK(std::abs(v.variance() - th * th) <= 5 * th * th * std::sqrt(2.0 / (n - 1)));

  const auto unary = OffspringModel::table({{1.0, {0.8}}}, Criticality::AllowAny);
  const auto p = spine_sample(unary, {0.6, 0.9}, 1.3, 5, rng);
  CHECK(p.sampler == SpineSampler::WeightedResampling);
  for (double s : p.steps) CHECK(std::abs(s) < 1e-12);
  CHECK(std::abs(p.log_weight) < 1e-12);

  CHECK_THROWS_AS(spine_sample(unary, {0.6, 0.9}, 1.3, 5, rng, SpineSampler::ClosedForm),
                  DomainError);
}

TEST_CASE("closed-form and resampling samplers agree on E[S_1]") {
  const auto g = OffspringModel::gaussian_binary();
  auto first = [](const SpinePath& p) { return p.steps[1]; };
  for (const auto& [lam, alpha] :
       {std::pair{blue_line(1.0), kA}, std::pair{red_arc(0.4), 2.0}, std::pair{red_arc(0.1), 2.0}}) {
    const auto cf = spine_path_expectation(g, lam, alpha, 1, first, 100000, 1, SpineSampler::ClosedForm);
    const auto wr = spine_path_expectation(g, lam, alpha, 1, first, 100000, 2,
                                           SpineSampler::WeightedResampling);
    CHECK(std::abs(cf.value - wr.value) <= 5 * std::hypot(cf.std_error, wr.std_error));
  }
  // Lattice boundary point: only the resampling sampler exists; compare with
  // the exact derivative.
  const auto lat = OffspringModel::lattice_pathological(2000);
  const ComplexParam lb{1.0, std::acos(std::exp(-1.0))};
  const auto wr = spine_path_expectation(lat, lb, 2.0, 1, first, 100000, 3);
  CHECK(std::abs(wr.value + log_moment_functional(lat, lb, 2.0)) <= 5 * wr.std_error);

  // Table model: exact derivative again.
  const auto t = OffspringModel::table({{0.5, {0.0, 1.0}}, {0.5, {0.3, -0.4, 0.9}}});
  const ComplexParam tl{0.7, 0.0};
  // Real λ: f(1) = 1, so α = 1 is a valid tilt.
  const auto tw = spine_path_expectation(t, tl, 1.0, 1, first, 100000, 4);
  CHECK(std::abs(tw.value + log_moment_functional(t, tl, 1.0)) <= 5 * tw.std_error);
}

TEST_CASE("ladder epoch examples and brute-force oracle") {
  auto e = ladder_epochs({0.0, 1.0, 2.0, 3.5, 4.0});
  CHECK(e.descending.empty());
  CHECK(e.weak_ascending == std::vector<std::size_t>{1, 2, 3, 4});

  e = ladder_epochs({0.0, -1.0, -0.5, -2.0});
  CHECK(e.descending == std::vector<std::size_t>{1, 3});
  CHECK(e.weak_ascending.empty());

  e = ladder_epochs({0.0, 0.0, -1.0, 0.0, 0.0});
  CHECK(e.descending == std::vector<std::size_t>{2});
  CHECK(e.weak_ascending == std::vector<std::size_t>{1, 3, 4});

  Rng rng(31);
  std::normal_distribution<double> step(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(-2, 2);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<double> s = {0.0};
    for (int k = 0; k < 10000; ++k)
      s.push_back(s.back() + (trial % 2 ? coarse(rng) : step(rng)));  // odd trials have ties
    const auto fast = ladder_epochs(s);
    const auto slow = ladder_oracle(s);
    CHECK(fast.descending == slow.descending);
    CHECK(fast.weak_ascending == slow.weak_ascending);
  }
}

TEST_CASE("dri_check examples") {
  const double u0 = select_u0(1.5, 1.5);
  const auto tv = TVFunction::make(1.5, 1.5, u0);
  CHECK(ell(tv, std::exp(-0.0)) == 1.0);
  const auto r = dri_check(tv, 1e4, 100001);
  CHECK(r.monotone);
  CHECK(r.sums_converge);
  CHECK(r.difference_ratio <= 0.6);
  CHECK(std::abs(r.tail_slope + 1.5) < 1e-6);
  CHECK(std::abs(r.tail_intercept - std::log(1.0 / tv.tail_constant())) < 1e-6);
  CHECK(r.riemann_h1 > r.riemann_h05);
  CHECK(r.riemann_h05 > r.riemann_h025);
  CHECK_THROWS_AS(dri_check(tv, 0.0, 10), DomainError);
}

TEST_CASE("duality identity on the zero-drift Gaussian spine") {
  const auto g = OffspringModel::gaussian_binary();
  const auto tv = TVFunction::make(1.5, 1.5, select_u0(1.5, 1.5));
  const auto d = duality_check(g, blue_line(1.0), kA, tv, 1000, 4000, 17);
  INFO("lhs=", d.before_descent.value, " rhs=", d.weak_ascending.value, " z=", d.z_score);
  CHECK(std::abs(d.z_score) <= 5.0);
  CHECK(d.unfinished > 0.0);  // zero drift: τ_1 is often beyond the horizon
  CHECK(d.unfinished < 0.1);
  CHECK(d.horizon == 1000);

  // Same identity for a drifting walk (red arc, E[S_1] > 0).
  const auto r = duality_check(g, red_arc(0.4), 2.0, tv, 300, 4000, 18);
  CHECK(std::abs(r.z_score) <= 5.0);
}
