#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "brw/errors.hpp"
#include "brw/phase.hpp"

using namespace brw;

namespace {

const double kLog2 = std::log(2.0);
const double kA = std::sqrt(2.0 * kLog2);
const double kCorner = std::sqrt(kLog2 / 2.0);

bool gaussian_inside(double th, double et) {
  th = std::abs(th);
  et = std::abs(et);
  return th <= kCorner ? th * th + et * et < kLog2 : et < kA - th;
}

bool lattice_inside(double th, double et) { return th > 0.0 && std::exp(-th) < std::cos(et); }

struct Agreement {
  std::size_t inside = 0, inside_ok = 0, outside = 0, outside_ok = 0, band = 0;
};

// Cells whose 3×3 neighbourhood mixes closed-form membership form the band.
template <class Inside>
Agreement agreement(const PhaseGrid& g, Inside inside) {
  Agreement a;
  const auto& s = g.spec;
  for (int j = 0; j < s.n_eta; ++j)
    for (int i = 0; i < s.n_theta; ++i) {
      const bool me = inside(s.theta(i), s.eta(j));
      bool mixed = false;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= s.n_theta || jj >= s.n_eta) continue;
          if (inside(s.theta(ii), s.eta(jj)) != me) mixed = true;
        }
      if (mixed) {
        ++a.band;
        continue;
      }
      const bool tagged = g.at(i, j).verdict.tag == RegionTag::Interior;
      if (me) {
        ++a.inside;
        a.inside_ok += tagged;
      } else {
        ++a.outside;
        a.outside_ok += !tagged;
      }
    }
  return a;
}

const PhaseGrid& gaussian_grid() {
  static const PhaseGrid g = phase_raster(OffspringModel::gaussian_binary(), GridSpec{}, {}, 1);
  return g;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("Gaussian raster examples") {
  const auto& g = gaussian_grid();
  CHECK(g.cells.size() == 201u * 201u);
  CHECK(g.spec.theta(120) == doctest::Approx(0.3));
  CHECK(g.nearest({0.3, 0.4}).verdict.tag == RegionTag::Interior);

  const auto& corner = g.nearest({0.5887, 0.5887}).verdict;
  CHECK(corner.tag == RegionTag::Boundary2);
  REQUIRE(corner.derivative_sign);
  CHECK(*corner.derivative_sign == DerivativeSign::Zero);

  CHECK(g.nearest({1.177410, 0.0}).verdict.tag == RegionTag::Boundary1);
  for (const auto& c : g.cells) CHECK(c.verdict.tag != RegionTag::Indeterminate);
}

TEST_CASE("Gaussian raster agrees with the closed-form region outside a one-cell band") {
  const auto a = agreement(gaussian_grid(), gaussian_inside);
  INFO("inside ", a.inside_ok, "/", a.inside, " outside ", a.outside_ok, "/", a.outside);
  CHECK(a.inside > 1000);
  CHECK(a.inside_ok >= 0.99 * a.inside);
  CHECK(a.outside_ok >= 0.99 * a.outside);
  // Reflection symmetry of the picture.
  const auto& g = gaussian_grid();
  for (int j = 0; j < 201; ++j)
    for (int i = 0; i < 201; ++i) CHECK(g.at(i, j).verdict.tag == g.at(200 - i, 200 - j).verdict.tag);
}

TEST_CASE("lattice raster: membership and the periodic copy") {
  const auto lat = OffspringModel::lattice_pathological();
  GridSpec s{0.02, 4.0, -2.0, 8.0, 201, 201};
  const auto g = phase_raster(lat, s, {}, 1);
  const auto a = agreement(g, lattice_inside);
  INFO("inside ", a.inside_ok, "/", a.inside, " outside ", a.outside_ok, "/", a.outside);
  CHECK(a.inside_ok >= 0.99 * a.inside);
  CHECK(a.outside_ok >= 0.99 * a.outside);
  // Both copies (around η = 0 and η = 2π) contain Interior cells.
  CHECK(g.nearest({2.0, 0.0}).verdict.tag == RegionTag::Interior);
  CHECK(g.nearest({2.0, 2 * std::numbers::pi}).verdict.tag == RegionTag::Interior);
  CHECK(g.nearest({2.0, std::numbers::pi}).verdict.tag != RegionTag::Interior);

  CHECK(classify(lat, {0.0, 0.0}).tag == RegionTag::OutsideDomain);
  CHECK(classify(lat, {0.0, 2 * std::numbers::pi}).tag == RegionTag::OutsideDomain);
}

TEST_CASE("overlays") {
  const auto& g = gaussian_grid();
  int arcs = 0, segs = 0, pts = 0;
  for (const auto& o : g.overlays) {
    arcs += o.kind == OverlayKind::Arc;
    segs += o.kind == OverlayKind::Segment;
    pts += o.kind == OverlayKind::Point;
    for (const auto& p : o.points) {
      const double th = std::abs(p.theta), et = std::abs(p.eta);
      // Every overlay point lies on the closed-form boundary.
      const double on = th <= kCorner + 1e-12 ? th * th + et * et - kLog2 : et - (kA - th);
      CHECK(std::abs(on) < 1e-12);
    }
  }
  CHECK(arcs == 2);
  CHECK(segs == 4);
  CHECK(pts == 2);

  std::ostringstream svg;
  write_svg(svg, g);
  CHECK(count(svg.str(), "<polyline class=\"arc\"") == 2);
  CHECK(count(svg.str(), "<polyline class=\"segment\"") == 4);
  CHECK(count(svg.str(), "<circle class=\"point\"") == 2);

  const auto lo = model_overlays(OffspringModel::lattice_pathological(), GridSpec{-1.0, 4.0, -2.0, 8.0, 11, 11});
  int lp = 0;
  for (const auto& o : lo) {
    if (o.kind == OverlayKind::Point) {
      ++lp;
      CHECK(o.points[0].theta == 0.0);
      CHECK(std::abs(std::remainder(o.points[0].eta, 2 * std::numbers::pi)) < 1e-12);
    } else {
      for (const auto& p : o.points) CHECK(std::abs(std::exp(-p.theta) - std::cos(p.eta)) < 1e-12);
    }
  }
  CHECK(lp == 2);  // η = 0 and η = 2π
  CHECK(model_overlays(OffspringModel::table({{0.5, {0.0}}, {0.5, {0.0, 1.0}}}), GridSpec{}).empty());
}

TEST_CASE("render formats") {
  const auto g = phase_raster(OffspringModel::gaussian_binary(), GridSpec{-1, 1, -1, 1, 2, 2}, {}, 1);
  std::ostringstream csv;
  write_csv(csv, g);
  std::istringstream in(csv.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "theta,eta,tag,alpha,derivative");

  const auto big = phase_raster(OffspringModel::gaussian_binary(), GridSpec{-1, 1, -0.5, 0.5, 7, 4}, {}, 1);
  std::ostringstream pgm;
  write_pgm(pgm, big);
  const std::string p = pgm.str();
  CHECK(p.rfind("P5\n7 4\n255\n", 0) == 0);
  CHECK(p.size() == std::string("P5\n7 4\n255\n").size() + 28);

  CHECK_THROWS_AS(render(g, RenderFormat::Csv, "/nonexistent-dir/x.csv"), IoError);
  CHECK_THROWS_AS(phase_raster(OffspringModel::gaussian_binary(), GridSpec{-1, 1, -1, 1, 1, 2}), DomainError);
}

TEST_CASE("raster CSV is byte-identical across runs and thread counts") {
  const GridSpec s{-1.5, 1.5, -1.5, 1.5, 61, 41};
  auto run = [&] {
    std::ostringstream os;
    write_csv(os, phase_raster(OffspringModel::gaussian_binary(), s, {}, 3));
    return os.str();
  };
  omp_set_num_threads(1);
  const auto a = run();
  omp_set_num_threads(4);
  const auto b = run();
  const auto c = run();
  CHECK(a == b);
  CHECK(b == c);
}
