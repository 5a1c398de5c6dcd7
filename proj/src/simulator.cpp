#include "brw/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include <omp.h>

#include <json.hpp>

#include "brw/errors.hpp"
#include "brw/rng.hpp"

namespace brw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double wrap_phase(double ph) {
  const double r = std::remainder(ph, 2.0 * std::numbers::pi);
  return r <= -std::numbers::pi ? r + 2.0 * std::numbers::pi : r;
}

// Offspring of one chunk of parents, kept as atoms until the generation size
// is known.
struct ChunkAtoms {
  std::vector<std::uint32_t> parent;  // index within the chunk
  std::vector<double> x;
  std::vector<std::uint64_t> count;
  std::uint64_t total = 0;
};

}  // namespace

Generation Generation::root() {
  Generation g;
  g.positions = {0.0};
  g.logweights = {0.0};
  g.phases = {0.0};
  g.alive = {1};
  return g;
}

StepResult step(const Generation& gen, const OffspringModel& model, const LambdaFrame& frame,
                std::uint64_t step_seed, const StepOptions& opts) {
  const std::size_t pop = gen.size();
  const std::size_t nchunks = (pop + kChunkSize - 1) / kChunkSize;
  const double theta = frame.lambda.theta;
  const double eta = frame.lambda.eta;
  const double log_t = opts.truncate ? std::log(*opts.truncate) : 0.0;
  const double floor = opts.min_logweight.value_or(kNegInf);

  std::vector<ChunkAtoms> chunks(nchunks);
  const auto n_chunks = static_cast<std::int64_t>(nchunks);
#pragma omp parallel for schedule(static) if (nchunks > 1 && !omp_in_parallel())
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    Rng rng = make_stream(step_seed, {static_cast<std::uint64_t>(c)});
    ChunkAtoms& out = chunks[static_cast<std::size_t>(c)];
    std::vector<Atom> atoms;
    const std::size_t begin = static_cast<std::size_t>(c) * kChunkSize;
    const std::size_t end = std::min(pop, begin + kChunkSize);
    for (std::size_t i = begin; i < end; ++i) {
      model.sample_atoms(rng, atoms);
      for (const Atom& a : atoms) {
        if (a.count == 0) continue;
        if (gen.logweights[i] - theta * a.x - frame.log_abs_m < floor) continue;
        out.parent.push_back(static_cast<std::uint32_t>(i - begin));
        out.x.push_back(a.x);
        out.count.push_back(a.count);
        out.total += a.count;
      }
    }
  }

  std::uint64_t total = 0;
  for (const auto& c : chunks) total += c.total;

  StepResult result;
  double keep = 1.0;
  if (total > opts.cap) {
    if (opts.on_cap != CapPolicy::Thin)
      throw PopulationCapExceeded("generation " + std::to_string(gen.n + 1) + " would hold " +
                                  std::to_string(total) + " particles (cap " +
                                  std::to_string(opts.cap) + ")");
    keep = static_cast<double>(opts.cap) / static_cast<double>(total);
    result.thinned = true;
    // Thinning draws come from their own streams so that the atom draws above
    // stay identical with and without thinning.
    for (std::size_t c = 0; c < nchunks; ++c) {
      Rng rng = make_stream(step_seed, {c, 1});
      auto& ch = chunks[c];
      ch.total = 0;
      for (auto& k : ch.count) {
        std::binomial_distribution<std::uint64_t> bin(k, keep);
        k = bin(rng);
        ch.total += k;
      }
    }
  }

  std::vector<std::size_t> offset(nchunks + 1, 0);
  for (std::size_t c = 0; c < nchunks; ++c) offset[c + 1] = offset[c] + chunks[c].total;
  const std::size_t children = offset[nchunks];

  Generation& next = result.next;
  next.n = gen.n + 1;
  next.positions.resize(children);
  next.logweights.resize(children);
  next.phases.resize(children);
  next.alive.resize(children);
  if (opts.track_parents) {
    if (pop > std::numeric_limits<std::uint32_t>::max())
      throw DomainError("parent tracking supports at most 2^32 - 1 parents");
    next.parent.resize(children);
  }
  const double log_keep = std::log(keep);

#pragma omp parallel for schedule(static) if (nchunks > 1 && !omp_in_parallel())
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    const ChunkAtoms& ch = chunks[cu];
    std::size_t o = offset[cu];
    const std::size_t base = cu * kChunkSize;
    for (std::size_t a = 0; a < ch.x.size(); ++a) {
      const std::size_t i = base + ch.parent[a];
      const double x = ch.x[a];
      const double s = gen.positions[i] + x;
      const double lw = gen.logweights[i] - theta * x - frame.log_abs_m - log_keep;
      const double ph = wrap_phase(gen.phases[i] - eta * x - frame.arg_m);
      const bool parent_good = gen.alive[i] && (!opts.truncate || gen.logweights[i] <= log_t);
      for (std::uint64_t k = 0; k < ch.count[a]; ++k, ++o) {
        next.positions[o] = s;
        next.logweights[o] = lw;
        next.phases[o] = ph;
        next.alive[o] = parent_good ? 1 : 0;
        if (opts.track_parents) next.parent[o] = static_cast<std::uint32_t>(i);
      }
    }
  }
  return result;
}

std::complex<double> martingale(const Generation& gen) {
  CompensatedComplexSum s;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const double r = std::exp(gen.logweights[i]);
    s.add(r * std::cos(gen.phases[i]), r * std::sin(gen.phases[i]));
  }
  return s.value();
}

double w_martingale(const Generation& gen, double alpha) {
  CompensatedSum s;
  for (double lw : gen.logweights) s.add(std::exp(alpha * lw));
  return s.value();
}

double max_logweight(const Generation& gen) {
  double m = kNegInf;
  for (double lw : gen.logweights) m = std::max(m, lw);
  return m;
}

MartingaleTrace run_replicate(const OffspringModel& model, ComplexParam lambda,
                              const RunOptions& opts, std::uint64_t replicate_seed,
                              std::uint64_t replicate_id) {
  if (opts.truncate && !(*opts.truncate >= 1.0))
    throw DomainError("truncation level t must be at least 1");
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  MartingaleTrace trace;
  trace.replicate = replicate_id;
  trace.seed = replicate_seed;

  StepOptions so;
  so.cap = opts.cap;
  so.on_cap = opts.on_cap;
  so.truncate = opts.truncate;
  const double log_t = opts.truncate ? std::log(*opts.truncate) : 0.0;

  Generation gen = Generation::root();
  CompensatedComplexSum frozen;
  auto record = [&](const Generation& g) {
    TraceRecord r;
    r.n = g.n;
    r.z = martingale(g);
    r.w = w_martingale(g, opts.alpha);
    r.pop = g.size();
    if (opts.truncate) {
      CompensatedComplexSum live;
      CompensatedComplexSum newly_frozen;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.alive[i]) continue;
        const double m = std::exp(g.logweights[i]);
        const double re = m * std::cos(g.phases[i]);
        const double im = m * std::sin(g.phases[i]);
        live.add(re, im);
        if (g.logweights[i] > log_t) newly_frozen.add(re, im);
      }
      r.zt = live.value() + frozen.value();
      frozen.add(newly_frozen.value());
    }
    trace.max_logweight = std::max(trace.max_logweight, max_logweight(g));
    trace.records.push_back(r);
  };

  record(gen);
  for (int k = 1; k <= opts.generations; ++k) {
    StepResult res;
    try {
      res = step(gen, model, frame, derive_seed(replicate_seed, {static_cast<std::uint64_t>(k)}),
                 so);
    } catch (const PopulationCapExceeded&) {
      if (opts.on_cap != CapPolicy::Stop) throw;
      trace.stopped_at_cap = true;
      break;
    }
    trace.biased = trace.biased || res.thinned;
    gen = std::move(res.next);
    record(gen);
  }
  return trace;
}

std::vector<MartingaleTrace> run_replicates(const OffspringModel& model, ComplexParam lambda,
                                            const RunOptions& opts, std::size_t reps,
                                            std::uint64_t master_seed) {
  std::vector<MartingaleTrace> out(reps);
  std::vector<std::exception_ptr> errors(reps);
  const auto n = static_cast<std::int64_t>(reps);
#pragma omp parallel for schedule(dynamic, 1) if (reps > 1)
  for (std::int64_t r = 0; r < n; ++r) {
    const auto ru = static_cast<std::uint64_t>(r);
    try {
      out[ru] = run_replicate(model, lambda, opts, derive_seed(master_seed, {ru}), ru);
    } catch (...) {
      errors[ru] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

MartingaleTrace truncated_run(const OffspringModel& model, ComplexParam lambda, double t,
                              int n_max, std::uint64_t replicate_seed, std::size_t cap) {
  RunOptions opts;
  opts.generations = n_max;
  opts.truncate = t;
  opts.cap = cap;
  return run_replicate(model, lambda, opts, replicate_seed);
}

Estimate sup_weight_tail(const OffspringModel& model, ComplexParam lambda, double t,
                         std::size_t reps, int n_max, std::uint64_t master_seed,
                         double floor_factor, std::size_t cap) {
  if (!(t > 1.0)) throw DomainError("sup_weight_tail needs t > 1");
  if (reps < 2) throw DomainError("sup_weight_tail needs at least 2 replicates");
  const LambdaFrame frame = LambdaFrame::make(model, lambda);
  const double log_t = std::log(t);
  StepOptions so;
  so.cap = cap;
  so.min_logweight = std::log(floor_factor * t);

  std::vector<std::uint8_t> hit(reps, 0);
  std::vector<std::exception_ptr> errors(reps);
  const auto n = static_cast<std::int64_t>(reps);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t r = 0; r < n; ++r) {
    const auto ru = static_cast<std::uint64_t>(r);
    try {
      const std::uint64_t seed = derive_seed(master_seed, {ru});
      Generation gen = Generation::root();
      for (int k = 1; k <= n_max && gen.size() > 0; ++k) {
        gen = step(gen, model, frame, derive_seed(seed, {static_cast<std::uint64_t>(k)}), so).next;
        if (max_logweight(gen) > log_t) {
          hit[ru] = 1;
          break;
        }
      }
    } catch (...) {
      errors[ru] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  const double hits = static_cast<double>(std::count(hit.begin(), hit.end(), 1));
  const double p = hits / static_cast<double>(reps);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(reps))};
}

void write_trace_ndjson(std::ostream& out, const MartingaleTrace& trace) {
  for (const auto& r : trace.records) {
    nlohmann::ordered_json j;
    j["rep"] = trace.replicate;
    j["n"] = r.n;
    j["z"] = {r.z.real(), r.z.imag()};
    j["w"] = r.w;
    j["zt"] = r.zt ? nlohmann::ordered_json{r.zt->real(), r.zt->imag()}
                   : nlohmann::ordered_json(nullptr);
    j["pop"] = r.pop;
    out << j.dump() << '\n';
  }
}

void write_trace_ndjson(std::ostream& out, const std::vector<MartingaleTrace>& traces) {
  for (const auto& t : traces) write_trace_ndjson(out, t);
}

std::vector<MartingaleTrace> read_trace_ndjson(std::istream& in) {
  std::vector<MartingaleTrace> traces;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const auto rep = j.at("rep").get<std::uint64_t>();
      if (traces.empty() || traces.back().replicate != rep) {
        traces.emplace_back();
        traces.back().replicate = rep;
      }
      TraceRecord r;
      r.n = j.at("n").get<int>();
      r.z = {j.at("z").at(0).get<double>(), j.at("z").at(1).get<double>()};
      r.w = j.at("w").get<double>();
      if (!j.at("zt").is_null())
        r.zt = std::complex<double>(j["zt"].at(0).get<double>(), j["zt"].at(1).get<double>());
      r.pop = j.at("pop").get<std::size_t>();
      traces.back().records.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return traces;
}

}  // namespace brw
