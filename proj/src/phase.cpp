#include "brw/phase.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>

#include "brw/errors.hpp"

namespace brw {

namespace {

constexpr int kOverlaySamples = 200;
constexpr int kBisectionSteps = 60;

int boundary_rank(const RegionVerdict& v) {
  switch (v.tag) {
    case RegionTag::Boundary1: return 5;
    case RegionTag::Boundary2:
      return v.derivative_sign == DerivativeSign::Zero ? 4 : 3;
    case RegionTag::Boundary12: return 2;
    case RegionTag::MomentBlowup: return 1;
    default: return 0;
  }
}

ComplexParam lerp(ComplexParam a, ComplexParam b, double t) {
  return {a.theta + t * (b.theta - a.theta), a.eta + t * (b.eta - a.eta)};
}

// Bisects the segment centre→edge for the membership change and returns the
// endpoint of the final bracket that is not Interior.
ComplexParam bisect_boundary(const OffspringModel& model, ComplexParam centre, bool centre_in,
                             ComplexParam edge, const ClassifierTolerance& tol) {
  double lo = 0.0, hi = 1.0;  // status(lo) == centre_in, status(hi) != centre_in
  for (int k = 0; k < kBisectionSteps; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (is_interior(model, lerp(centre, edge, mid), tol) == centre_in) lo = mid;
    else hi = mid;
  }
  return lerp(centre, edge, centre_in ? hi : lo);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

const char* svg_fill(RegionTag tag) {
  switch (tag) {
    case RegionTag::Interior: return "#f2d64b";
    case RegionTag::Boundary1: return "#000000";
    case RegionTag::Boundary12: return "#2f5fd0";
    case RegionTag::Boundary2: return "#d03a2f";
    case RegionTag::MomentBlowup: return "#8a3fb8";
    case RegionTag::OutsideDomain: return "#9a9a9a";
    case RegionTag::Exterior: return "#ffffff";
    case RegionTag::Indeterminate: return "#3fb86a";
  }
  return "#3fb86a";
}

void clip_polyline(std::vector<Overlay>& out, OverlayKind kind, const std::vector<ComplexParam>& pts,
                   const GridSpec& s) {
  // Split into runs inside the window so no polyline jumps across a gap.
  Overlay cur{kind, {}};
  auto inside = [&](ComplexParam p) {
    return p.theta >= s.theta_min && p.theta <= s.theta_max && p.eta >= s.eta_min &&
           p.eta <= s.eta_max;
  };
  for (const auto& p : pts) {
    if (inside(p)) {
      cur.points.push_back(p);
    } else if (!cur.points.empty()) {
      if (cur.points.size() > 1) out.push_back(cur);
      cur.points.clear();
    }
  }
  if (cur.points.size() > 1) out.push_back(cur);
}

}  // namespace

double GridSpec::theta_step() const { return (theta_max - theta_min) / (n_theta - 1); }
double GridSpec::eta_step() const { return (eta_max - eta_min) / (n_eta - 1); }
double GridSpec::theta(int i) const { return i == n_theta - 1 ? theta_max : theta_min + i * theta_step(); }
double GridSpec::eta(int j) const { return j == n_eta - 1 ? eta_max : eta_min + j * eta_step(); }

const char* to_string(OverlayKind k) {
  switch (k) {
    case OverlayKind::Arc: return "arc";
    case OverlayKind::Segment: return "segment";
    case OverlayKind::Curve: return "curve";
    case OverlayKind::Point: return "point";
  }
  return "curve";
}

const PhaseCell& PhaseGrid::nearest(ComplexParam lambda) const {
  auto idx = [](double v, double lo, double step, int n) {
    const long k = std::lround((v - lo) / step);
    return static_cast<int>(std::clamp<long>(k, 0, n - 1));
  };
  return at(idx(lambda.theta, spec.theta_min, spec.theta_step(), spec.n_theta),
            idx(lambda.eta, spec.eta_min, spec.eta_step(), spec.n_eta));
}

PhaseGrid phase_raster(const OffspringModel& model, const GridSpec& spec,
                       const ClassifierTolerance& tol, std::uint64_t seed) {
  if (spec.n_theta < 2 || spec.n_eta < 2) throw DomainError("phase grid needs at least 2x2 cells");
  if (!(spec.theta_max > spec.theta_min) || !(spec.eta_max > spec.eta_min))
    throw DomainError("phase grid ranges must be nonempty");
  PhaseGrid grid;
  grid.spec = spec;
  grid.seed = seed;
  grid.cells.resize(static_cast<std::size_t>(spec.n_theta) * static_cast<std::size_t>(spec.n_eta));
  const double ht = spec.theta_step() / 2, he = spec.eta_step() / 2;
  const auto total = static_cast<std::int64_t>(grid.cells.size());

#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t k = 0; k < total; ++k) {
    const int i = static_cast<int>(k % spec.n_theta), j = static_cast<int>(k / spec.n_theta);
    const ComplexParam c{spec.theta(i), spec.eta(j)};
    PhaseCell& cell = grid.cells[static_cast<std::size_t>(k)];
    cell.verdict = classify(model, c, tol);
    const bool c_in = cell.verdict.tag == RegionTag::Interior;

    RegionVerdict best;
    int best_rank = 0;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        const ComplexParam q{c.theta + di * ht, c.eta + dj * he};
        if (is_interior(model, q, tol) == c_in) continue;
        const RegionVerdict v = classify(model, bisect_boundary(model, c, c_in, q, tol), tol);
        const int r = boundary_rank(v);
        if (r > best_rank) {
          best_rank = r;
          best = v;
        }
      }
    if (best_rank > 0) {
      best.lambda = c;
      best.reason = "boundary traced inside cell: " + best.reason;
      cell.verdict = best;
      cell.boundary_marked = true;
    }
  }
  grid.overlays = model_overlays(model, spec);
  return grid;
}

std::vector<Overlay> model_overlays(const OffspringModel& model, const GridSpec& spec) {
  std::vector<Overlay> out;
  const double pi = std::numbers::pi;
  if (model.kind() == ModelKind::GaussianBinary) {
    const double log2 = std::log(2.0);
    const double a = std::sqrt(2 * log2), c = std::sqrt(log2 / 2);
    for (double sgn : {1.0, -1.0}) {
      Overlay arc{OverlayKind::Arc, {}};
      for (int k = 0; k <= kOverlaySamples; ++k) {
        const double th = -c + 2 * c * k / kOverlaySamples;
        arc.points.push_back({th, sgn * std::sqrt(std::max(0.0, log2 - th * th))});
      }
      out.push_back(arc);
    }
    for (double st : {1.0, -1.0})
      for (double se : {1.0, -1.0})
        out.push_back({OverlayKind::Segment, {{st * c, se * (a - c)}, {st * a, 0.0}}});
    out.push_back({OverlayKind::Point, {{a, 0.0}}});
    out.push_back({OverlayKind::Point, {{-a, 0.0}}});
  } else if (model.kind() == ModelKind::LatticePathological) {
    const double t_lo = std::max(spec.theta_min, 0.0);
    if (spec.theta_max > 0.0) {
      const long k_lo = static_cast<long>(std::floor((spec.eta_min - pi) / (2 * pi)));
      const long k_hi = static_cast<long>(std::ceil((spec.eta_max + pi) / (2 * pi)));
      for (long k = k_lo; k <= k_hi; ++k)
        for (double sgn : {1.0, -1.0}) {
          std::vector<ComplexParam> pts;
          for (int s = 0; s <= kOverlaySamples; ++s) {
            const double th = t_lo + (spec.theta_max - t_lo) * s / kOverlaySamples;
            pts.push_back({th, sgn * std::acos(std::exp(-th)) + 2 * pi * static_cast<double>(k)});
          }
          clip_polyline(out, OverlayKind::Curve, pts, spec);
        }
      if (spec.theta_min <= 0.0)
        for (long k = k_lo; k <= k_hi; ++k) {
          const double eta = 2 * pi * static_cast<double>(k);
          if (eta >= spec.eta_min && eta <= spec.eta_max) out.push_back({OverlayKind::Point, {{0.0, eta}}});
        }
    }
  }
  return out;
}

std::uint8_t gray_level(RegionTag tag) {
  switch (tag) {
    case RegionTag::Interior: return 255;
    case RegionTag::Boundary1: return 0;
    case RegionTag::Boundary12: return 64;
    case RegionTag::Boundary2: return 96;
    case RegionTag::MomentBlowup: return 128;
    case RegionTag::OutsideDomain: return 160;
    case RegionTag::Exterior: return 208;
    case RegionTag::Indeterminate: return 32;
  }
  return 32;
}

void write_csv(std::ostream& os, const PhaseGrid& grid) {
  os << "theta,eta,tag,alpha,derivative\n";
  for (int j = 0; j < grid.spec.n_eta; ++j)
    for (int i = 0; i < grid.spec.n_theta; ++i) {
      const auto& v = grid.at(i, j).verdict;
      os << fmt(grid.spec.theta(i)) << ',' << fmt(grid.spec.eta(j)) << ',' << to_string(v.tag) << ','
         << (v.alpha ? fmt(*v.alpha) : "") << ',' << (v.derivative ? fmt(*v.derivative) : "") << '\n';
    }
}

void write_pgm(std::ostream& os, const PhaseGrid& grid) {
  const int w = grid.spec.n_theta, h = grid.spec.n_eta;
  os << "P5\n" << w << ' ' << h << "\n255\n";
  // Top row is the largest η.
  std::vector<char> row(static_cast<std::size_t>(w));
  for (int j = h - 1; j >= 0; --j) {
    for (int i = 0; i < w; ++i) row[static_cast<std::size_t>(i)] = static_cast<char>(gray_level(grid.at(i, j).verdict.tag));
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

void write_svg(std::ostream& os, const PhaseGrid& grid) {
  const auto& s = grid.spec;
  const double px = 4.0;
  const double width = s.n_theta * px, height = s.n_eta * px;
  auto X = [&](double th) { return (th - s.theta_min) / s.theta_step() * px + px / 2; };
  auto Y = [&](double et) { return height - ((et - s.eta_min) / s.eta_step() * px + px / 2); };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
     << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\">\n";
  os << "<g class=\"cells\" shape-rendering=\"crispEdges\">\n";
  for (int j = 0; j < s.n_eta; ++j)
    for (int i = 0; i < s.n_theta; ++i)
      os << "<rect x=\"" << fmt(i * px) << "\" y=\"" << fmt(height - (j + 1) * px) << "\" width=\""
         << fmt(px) << "\" height=\"" << fmt(px) << "\" fill=\""
         << svg_fill(grid.at(i, j).verdict.tag) << "\"/>\n";
  os << "</g>\n<g class=\"overlays\" fill=\"none\" stroke-width=\"1.5\">\n";
  for (const auto& o : grid.overlays) {
    if (o.kind == OverlayKind::Point) {
      os << "<circle class=\"point\" cx=\"" << fmt(X(o.points[0].theta)) << "\" cy=\""
         << fmt(Y(o.points[0].eta)) << "\" r=\"4\" fill=\"#000000\"/>\n";
      continue;
    }
    const char* stroke = o.kind == OverlayKind::Arc ? "#b01010" : o.kind == OverlayKind::Segment ? "#1030b0" : "#108030";
    os << "<polyline class=\"" << to_string(o.kind) << "\" stroke=\"" << stroke << "\" points=\"";
    for (std::size_t k = 0; k < o.points.size(); ++k)
      os << (k ? " " : "") << fmt(X(o.points[k].theta)) << ',' << fmt(Y(o.points[k].eta));
    os << "\"/>\n";
  }
  os << "</g>\n</svg>\n";
}

void render(const PhaseGrid& grid, RenderFormat format, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  switch (format) {
    case RenderFormat::Csv: write_csv(f, grid); break;
    case RenderFormat::Pgm: write_pgm(f, grid); break;
    case RenderFormat::Svg: write_svg(f, grid); break;
  }
  f.flush();
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace brw
