#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "brw/charfun.hpp"
#include "brw/errors.hpp"

using namespace brw;

namespace {

const double kLog2 = std::log(2.0);
const double kA = std::sqrt(2.0 * kLog2);  // √(2 log 2)

// Independent closed forms, written out from the model definitions rather than
// through OffspringModel.
double gaussian_log_f(double theta, double eta, double p) {
  return (1.0 - p) * kLog2 + p * p * theta * theta / 2.0 - p * (theta * theta - eta * eta) / 2.0;
}

double lattice_f(double theta, double eta, double p) {
  const double m_p = std::exp(-p * theta) / (1.0 - std::exp(-p * theta));
  const double abs_den = std::sqrt(1.0 - 2.0 * std::exp(-theta) * std::cos(eta) + std::exp(-2.0 * theta));
  const double abs_m = std::exp(-theta) / abs_den;
  return m_p / std::pow(abs_m, p);
}

}  // namespace

TEST_CASE("f_ratio examples") {
  const auto g = OffspringModel::gaussian_binary();
  for (double th : {-1.2, 0.0, 0.4, 2.0}) CHECK(*f_ratio(g, {th, 0.0}, 1.0) == 1.0);

  const ComplexParam blue{1.0, kA - 1.0};
  CHECK(std::abs(gaussian_log_f(blue.theta, blue.eta, kA)) < 1e-14);
  CHECK(std::abs(*f_ratio(g, blue, kA) - 1.0) < 1e-10);

  const auto lat = OffspringModel::lattice_pathological();
  const ComplexParam red{1.0, std::acos(std::exp(-1.0))};
  CHECK(std::abs(lattice_f(red.theta, red.eta, 2.0) - 1.0) < 1e-12);
  CHECK(std::abs(*f_ratio(lat, red, 2.0) - 1.0) < 1e-10);

  // Divergent when m(pθ) = ∞: p = 0 on the lattice.
  CHECK_FALSE(f_ratio(lat, {0.5, 0.1}, 0.0).has_value());
  CHECK_THROWS_AS(f_ratio(lat, {0.0, 0.1}, 1.5), DomainError);
}

TEST_CASE("f_ratio matches the independent closed forms") {
  const auto g = OffspringModel::gaussian_binary();
  const auto lat = OffspringModel::lattice_pathological();
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5), pos(0.05, 4.0), pp(0.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double th = u(rng), et = u(rng), p = pp(rng);
    CHECK(std::abs(*log_f_ratio(g, {th, et}, p) - gaussian_log_f(th, et, p)) < 1e-12);
    const double tl = pos(rng);
    const double fl = lattice_f(tl, et, p);
    CHECK(std::abs(*f_ratio(lat, {tl, et}, p) - fl) <= 1e-10 * fl);
  }
}

TEST_CASE("ZeroTransform when |m(lambda)| underflows") {
  // m(λ) = 1 + e^{-λ} vanishes at λ = iπ.
  const auto t = OffspringModel::table({{1.0, {0.0, 1.0}}});
  CHECK_THROWS_AS(f_ratio(t, {0.0, std::numbers::pi}, 1.5), ZeroTransform);
}

TEST_CASE("log_moment_functional examples") {
  const auto g = OffspringModel::gaussian_binary();
  CHECK(std::abs(log_moment_functional(g, {1.0, kA - 1.0}, kA)) < 1e-10);

  const double th = 0.4;
  const ComplexParam red{th, std::sqrt(kLog2 - th * th)};
  CHECK(std::abs(log_moment_functional(g, red, 2.0) - (th * th - kLog2 / 2.0)) < 1e-9);
  CHECK(std::abs(th * th - kLog2 / 2.0 - (-0.186574)) < 1e-6);

  const double c = std::sqrt(kLog2 / 2.0);
  CHECK(std::abs(log_moment_functional(g, {c, c}, 2.0)) < 1e-10);
}

TEST_CASE("log_moment_functional equals a direct first-generation sum for tables") {
  // Brute force: E[Σ|L|^α log|L|] = Σ_rows p Σ_j |L_j|^α log|L_j| with L_j = e^{-λx_j}/m(λ).
  const std::vector<TableRow> rows = {{0.3, {-0.4, 0.9}}, {0.7, {0.1, 0.5, 1.7}}};
  const auto t = OffspringModel::table(rows);
  const ComplexParam lam{0.6, 0.8};
  std::complex<double> m = 0.0;
  for (const auto& r : rows)
    for (double x : r.displacements) m += r.prob * std::exp(-lam.value() * x);
  for (double alpha : {1.0, 1.3, 2.0}) {
    double brute = 0.0;
    double brute2 = 0.0;
    for (const auto& r : rows)
      for (double x : r.displacements) {
        const double l = std::abs(std::exp(-lam.value() * x) / m);
        brute += r.prob * std::pow(l, alpha) * std::log(l);
        brute2 += r.prob * std::pow(l, alpha) * std::log(l) * std::log(l);
      }
    CHECK(std::abs(log_moment_functional(t, lam, alpha) - brute) < 1e-12);
    CHECK(std::abs(log2_moment_functional(t, lam, alpha) - brute2) < 1e-12);
  }
}

TEST_CASE("alpha_root examples") {
  const auto g = OffspringModel::gaussian_binary();
  auto r = alpha_root(g, {kA, 0.0});
  REQUIRE(r);
  CHECK(std::abs(r->alpha - 1.0) < 1e-9);
  CHECK(std::abs(r->derivative) < 1e-9);

  r = alpha_root(g, {1.0, kA - 1.0});
  REQUIRE(r);
  CHECK(std::abs(r->alpha - 1.177410) < 1e-6);
  CHECK(std::abs(r->alpha - kA) < 1e-9);
  CHECK(std::abs(r->derivative) < 1e-9);
  CHECK(r->tangency);

  r = alpha_root(g, {0.4, std::sqrt(kLog2 - 0.16)});
  REQUIRE(r);
  CHECK(std::abs(r->alpha - 2.0) < 1e-9);
  CHECK(std::abs(r->derivative - (0.16 - kLog2 / 2.0)) < 1e-9);

  // Strictly outside Λ: no root.
  CHECK_FALSE(alpha_root(g, {0.5, 1.2}).has_value());
}

TEST_CASE("alpha_root finds a transversal crossing") {
  // Lattice: f(p) = 1 is crossed inside (1, 2] for λ in the interior; the
  // returned α is the smallest root.
  const auto lat = OffspringModel::lattice_pathological();
  const ComplexParam lam{1.0, 0.5};
  const auto r = alpha_root(lat, lam);
  REQUIRE(r);
  CHECK(std::abs(*f_ratio(lat, lam, r->alpha) - 1.0) < 1e-10);
  for (double p = 1.0; p < r->alpha - 1e-6; p += 1e-3) CHECK(*f_ratio(lat, lam, p) > 1.0);
  CHECK(r->derivative < 0.0);
}

TEST_CASE("c3_check examples") {
  const auto g = OffspringModel::gaussian_binary();
  auto c = c3_check(g, {0.3, 1.1}, 2.0);
  CHECK(c.holds);
  CHECK(c.witness == 1.0);

  const auto lat = OffspringModel::lattice_pathological();
  c = c3_check(lat, {1.0, 0.0}, 2.0);
  CHECK(c.holds);
  CHECK(c.witness == 1.0);

  c = c3_check(lat, {0.01, 0.0}, 2.0);
  CHECK(c.holds);
  CHECK(c.witness > 0.0);
  CHECK_FALSE(f_ratio(lat, {0.01, 0.0}, 0.0).has_value());

  c = c3_check(g, {0.3, 0.1}, 1.0);
  CHECK(c.witness == doctest::Approx(0.9));
}

TEST_CASE("ratio invariants on random parameters") {
  const auto g = OffspringModel::gaussian_binary();
  const auto lat = OffspringModel::lattice_pathological();
  const auto tab = OffspringModel::table({{0.5, {-0.3, 0.4}}, {0.5, {0.2, 0.2, 1.1}}});
  Rng rng(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5), pos(0.05, 3.0);
  for (int i = 0; i < 300; ++i) {
    const double et = u(rng);
    for (const auto& [model, th] : {std::pair{&g, u(rng)}, std::pair{&lat, pos(rng)},
                                    std::pair{&tab, u(rng)}}) {
      CHECK(*f_ratio(*model, {th, et}, 1.0) >= 1.0 - 1e-12);
      CHECK(*f_ratio(*model, {th, 0.0}, 1.0) == 1.0);

      const auto root = alpha_root(*model, {th, et});
      if (root) {
        CHECK(std::abs(*f_ratio(*model, {th, et}, root->alpha) - 1.0) <= 1e-10);
        CHECK(std::abs(log_moment_functional(*model, {th, et}, root->alpha) - root->derivative) <=
              1e-9);
      }

      // Closed-form slope against a centred difference of log f.
      const double h = 1e-5;
      for (double a : {1.2, 1.6, 1.9}) {
        const double fd = (*log_f_ratio(*model, {th, et}, a + h) -
                           *log_f_ratio(*model, {th, et}, a - h)) /
                          (2 * h);
        const double f = *f_ratio(*model, {th, et}, a);
        CHECK(std::abs(log_moment_functional(*model, {th, et}, a) / f - fd) <= 1e-6);
      }
    }
  }
}
