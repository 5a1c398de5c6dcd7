#pragma once

// Phase-diagram rasters over the λ-plane with closed-form boundary overlays
// for the built-in models, and CSV / PGM / SVG output.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "brw/classifier.hpp"
#include "brw/models.hpp"

namespace brw {

struct GridSpec {
  double theta_min = -1.5;
  double theta_max = 1.5;
  double eta_min = -1.5;
  double eta_max = 1.5;
  int n_theta = 201;
  int n_eta = 201;

  /// Node i sits at theta_min + i·(theta_max - theta_min)/(n_theta - 1).
  double theta(int i) const;
  double eta(int j) const;
  double theta_step() const;
  double eta_step() const;
};

enum class OverlayKind { Arc, Segment, Curve, Point };
const char* to_string(OverlayKind k);

struct Overlay {
  OverlayKind kind = OverlayKind::Curve;
  std::vector<ComplexParam> points;  // a single point for OverlayKind::Point
};

struct PhaseCell {
  RegionVerdict verdict;  // verdict.lambda is the node, even when the tag came from a boundary point
  bool boundary_marked = false;
};

struct PhaseGrid {
  GridSpec spec;
  std::vector<PhaseCell> cells;  // index j·n_theta + i
  std::vector<Overlay> overlays;
  std::uint64_t seed = 0;

  const PhaseCell& at(int i, int j) const {
    return cells[static_cast<std::size_t>(j) * static_cast<std::size_t>(spec.n_theta) +
                 static_cast<std::size_t>(i)];
  }
  /// Cell whose node is nearest to λ.
  const PhaseCell& nearest(ComplexParam lambda) const;
};

/// Classifies every node. A cell whose centre and eight perimeter points
/// (at half a step) disagree on Interior membership is traced to the
/// boundary by bisection and takes the tag found there, by priority
/// Boundary1 > Boundary2 with zero derivative > Boundary2 > Boundary12 > MomentBlowup.
/// The classifier is deterministic; `seed` is recorded for provenance.
PhaseGrid phase_raster(const OffspringModel& model, const GridSpec& spec,
                       const ClassifierTolerance& tol = {}, std::uint64_t seed = 0);

/// Closed-form boundary pieces of the built-in models clipped to the grid
/// window. Table models have none.
std::vector<Overlay> model_overlays(const OffspringModel& model, const GridSpec& spec);

/// Gray level per tag, fixed palette.
std::uint8_t gray_level(RegionTag tag);

void write_csv(std::ostream& os, const PhaseGrid& grid);
void write_pgm(std::ostream& os, const PhaseGrid& grid);
void write_svg(std::ostream& os, const PhaseGrid& grid);

enum class RenderFormat { Csv, Pgm, Svg };

/// Writes to `path`; throws IoError when the file cannot be written.
void render(const PhaseGrid& grid, RenderFormat format, const std::string& path);

}  // namespace brw
