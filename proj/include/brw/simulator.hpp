#pragma once

// Forward particle engine for the branching random walk.
//
// A generation is a flat structure of arrays. Each particle u carries its
// position S(u), log|L(u)| and arg L(u), where L(u) = m(λ)^{-n} e^{-λS(u)}.
// Magnitudes and phases are kept apart so that weights spanning many decades
// never cancel inside a complex product.
//
// Randomness: a generation step draws from streams derived from
// (step seed, chunk index) with a fixed chunk size, so the children of a
// generation do not depend on how many threads process the chunks.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "brw/charfun.hpp"
#include "brw/models.hpp"
#include "brw/summation.hpp"

namespace brw {

inline constexpr std::size_t kChunkSize = 4096;
inline constexpr std::size_t kDefaultPopulationCap = 20'000'000;

struct Generation {
  int n = 0;
  std::vector<double> positions;
  std::vector<double> logweights;  // log|L(u)|
  std::vector<double> phases;      // arg L(u) in (-π, π]
  // Membership of the truncated stream: the parent of u was alive and had
  // |L| <= t. All ones unless a truncation level is in force.
  std::vector<std::uint8_t> alive;
  // Index of each particle's parent in the previous generation; filled only
  // when StepOptions::track_parents is set.
  std::vector<std::uint32_t> parent;

  static Generation root();
  std::size_t size() const noexcept { return positions.size(); }
};

enum class CapPolicy {
  Throw,  // PopulationCapExceeded
  Stop,   // end the replicate at the last complete generation
  Thin,   // Bernoulli subsampling with weights rescaled by 1/keep-probability
};

struct StepOptions {
  std::size_t cap = kDefaultPopulationCap;
  CapPolicy on_cap = CapPolicy::Throw;
  // Truncation level t for the alive flags; children of a parent with
  // |L| > t are not alive. Absent means no truncation.
  std::optional<double> truncate;
  // Particles with log|L| below this are dropped from the next generation.
  std::optional<double> min_logweight;
  bool track_parents = false;
};

struct StepResult {
  Generation next;
  bool thinned = false;
};

/// One generation of the process. Throws PopulationCapExceeded when the
/// children would exceed `opts.cap` and the policy is Throw or Stop.
StepResult step(const Generation& gen, const OffspringModel& model, const LambdaFrame& frame,
                std::uint64_t step_seed, const StepOptions& opts = {});

/// Z_n = Σ |L(u)| e^{i arg L(u)}, summed in array order with compensation.
std::complex<double> martingale(const Generation& gen);

/// W_n = Σ |L(u)|^α.
double w_martingale(const Generation& gen, double alpha);

/// Largest log|L(u)| in the generation (-inf when empty).
double max_logweight(const Generation& gen);

struct TraceRecord {
  int n = 0;
  std::complex<double> z;
  double w = 0.0;
  std::optional<std::complex<double>> zt;  // truncated martingale
  std::size_t pop = 0;
};

struct MartingaleTrace {
  std::uint64_t replicate = 0;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> records;
  bool biased = false;       // thinning was applied
  bool stopped_at_cap = false;
  double max_logweight = 0.0;  // over all generated particles
};

struct RunOptions {
  int generations = 10;
  double alpha = 1.0;
  std::optional<double> truncate;  // t >= 1
  std::size_t cap = kDefaultPopulationCap;
  CapPolicy on_cap = CapPolicy::Throw;
};

/// One replicate seeded with `replicate_seed`; generation k uses step seed
/// derive_seed(replicate_seed, {k}).
MartingaleTrace run_replicate(const OffspringModel& model, ComplexParam lambda,
                              const RunOptions& opts, std::uint64_t replicate_seed,
                              std::uint64_t replicate_id = 0);

/// Replicates r = 0..reps-1 with seeds derive_seed(master_seed, {r}); the
/// result is ordered by replicate id whatever the thread count.
std::vector<MartingaleTrace> run_replicates(const OffspringModel& model, ComplexParam lambda,
                                            const RunOptions& opts, std::size_t reps,
                                            std::uint64_t master_seed);

/// Trace carrying Z_n^{(t)} = 1 + Σ_{k<=n} D_k^{(t)} next to Z_n; lineages are
/// cut from the truncated stream after the first ancestor with |L| > t.
MartingaleTrace truncated_run(const OffspringModel& model, ComplexParam lambda, double t,
                              int n_max, std::uint64_t replicate_seed,
                              std::size_t cap = kDefaultPopulationCap);

/// Fraction of replicates in which some lineage weight exceeds t within
/// n_max generations. Lineages with |L| < floor_factor·t are abandoned (a pruned lineage reaches t with
/// probability at most floor_factor^α), so
/// this is a lower bound of P(sup_u |L(u)| > t).
Estimate sup_weight_tail(const OffspringModel& model, ComplexParam lambda, double t,
                         std::size_t reps, int n_max, std::uint64_t master_seed,
                         double floor_factor = 1e-3, std::size_t cap = kDefaultPopulationCap);

/// `{"rep":k,"n":n,"z":[re,im],"w":w,"zt":[re,im]|null,"pop":p}` per line.
void write_trace_ndjson(std::ostream& out, const MartingaleTrace& trace);
void write_trace_ndjson(std::ostream& out, const std::vector<MartingaleTrace>& traces);
/// Inverse of write_trace_ndjson; groups consecutive records by "rep".
std::vector<MartingaleTrace> read_trace_ndjson(std::istream& in);

}  // namespace brw
