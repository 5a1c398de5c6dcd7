// Command-line front end. Settings resolve as: flag, then config file, then
// built-in default.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "brw/classifier.hpp"
#include "brw/diagnostics.hpp"
#include "brw/errors.hpp"
#include "brw/phase.hpp"
#include "brw/similarity.hpp"
#include "brw/simulator.hpp"
#include "brw/spine.hpp"
#include "brw/tvfun.hpp"
#include "config.hpp"

namespace {

using namespace brw;
using brw::cli::Config;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIndeterminate = 3;

template <class T>
T pick(const std::optional<T>& flag, const std::optional<T>& cfg, T fallback) {
  if (flag) return *flag;
  if (cfg) return *cfg;
  return fallback;
}

std::optional<std::uint64_t> to_u64(const std::optional<std::int64_t>& v, const char* key) {
  if (!v) return std::nullopt;
  if (*v < 0) throw ConfigError(std::string(key) + " must be nonnegative");
  return static_cast<std::uint64_t>(*v);
}

std::optional<int> to_int(const std::optional<std::int64_t>& v) {
  if (!v) return std::nullopt;
  return static_cast<int>(*v);
}

std::optional<ComplexParam> flag_lambda(const std::optional<std::string>& s) {
  if (!s) return std::nullopt;
  return cli::parse_lambda(*s);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Globals {
  std::optional<std::string> config_path;
  std::optional<std::int64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<int> threads;
  bool strict = false;
  std::optional<std::string> model;
  std::optional<std::int64_t> lattice_cap;

  Config cfg;
  std::uint64_t seed_value = 1;
  std::string format_value;

  std::unique_ptr<std::ofstream> file;
  std::ostream* os = &std::cout;
};

struct Sub {
  std::optional<std::string> lambda;
  std::vector<std::string> lambdas;
  std::optional<std::string> versus;
  std::optional<std::string> theta_range, eta_range, resolution;
  std::optional<int> gens, steps, lag, points, duality_horizon;
  std::optional<std::int64_t> reps, cap, permutations;
  std::optional<double> alpha, truncate, p, delta, x_max, tv_alpha, tv_delta;
  std::optional<std::string> u0;
  std::optional<int> paths;
  std::optional<std::string> on_cap, traces, tail, sampler;
  bool fixed_point = false, compare = false, from_complex = false, dri = false, check = false;
};

OffspringModel make_model(const Globals& g) {
  const std::string kind = pick(g.model, g.cfg.string("model.kind"), std::string("gaussian"));
  if (kind == "gaussian") return OffspringModel::gaussian_binary();
  if (kind == "lattice")
    return OffspringModel::lattice_pathological(
        pick(g.lattice_cap, g.cfg.integer("model.lattice_cap"), OffspringModel::kDefaultLatticeCap));
  if (kind == "table") {
    const auto rows = g.cfg.table_rows("model.rows");
    if (!rows) throw ConfigError("model kind 'table' needs [[model.rows]] in the config file");
    try {
      return OffspringModel::table(*rows);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("invalid table model: ") + e.what());
    }
  }
  throw ConfigError("unknown model kind '" + kind + "' (gaussian, lattice, table)");
}

std::string format_for(const Globals& g, const std::string& fallback,
                       std::initializer_list<const char*> allowed) {
  const std::string f = g.format_value.empty() ? fallback : g.format_value;
  for (const char* a : allowed)
    if (f == a) return f;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  throw ConfigError("format '" + f + "' is not available here (" + list + ")");
}

ComplexParam require_lambda(const Sub& s, const Config& cfg, const char* section) {
  if (auto l = flag_lambda(s.lambda)) return *l;
  if (auto l = cfg.lambda(std::string(section) + ".lambda")) return *l;
  throw ConfigError(std::string(section) + " needs --lambda theta,eta");
}

double default_alpha(const OffspringModel& model, ComplexParam lambda) {
  const auto root = alpha_root(model, lambda);
  return root ? root->alpha : 1.0;
}

int cmd_classify(Globals& g, const Sub& s) {
  const OffspringModel model = make_model(g);
  std::vector<ComplexParam> pts;
  for (const auto& l : s.lambdas) pts.push_back(cli::parse_lambda(l));
  if (pts.empty()) pts = g.cfg.lambdas("classify.lambdas").value_or(std::vector<ComplexParam>{});
  if (pts.empty()) throw ConfigError("classify needs at least one --lambda theta,eta");
  const std::string fmt = format_for(g, "ndjson", {"ndjson", "csv"});
  bool all_indeterminate = true;
  if (fmt == "csv") *g.os << "theta,eta,tag,alpha,derivative\n";
  for (const auto& l : pts) {
    const RegionVerdict v = classify(model, l);
    all_indeterminate = all_indeterminate && v.tag == RegionTag::Indeterminate;
    if (fmt == "ndjson") {
      *g.os << to_ndjson(v) << '\n';
    } else {
      *g.os << num(l.theta) << ',' << num(l.eta) << ',' << to_string(v.tag) << ','
            << (v.alpha ? num(*v.alpha) : "") << ',' << (v.derivative ? num(*v.derivative) : "")
            << '\n';
    }
  }
  return g.strict && all_indeterminate ? kExitIndeterminate : kExitOk;
}

int cmd_phase(Globals& g, const Sub& s) {
  const OffspringModel model = make_model(g);
  GridSpec spec;
  if (model.kind() == ModelKind::LatticePathological) spec = GridSpec{0.02, 4.0, -2.0, 8.0, 201, 201};
  auto range = [&](const std::optional<std::string>& flag, const char* key,
                   std::pair<double, double> def) {
    if (flag) return cli::parse_pair(*flag);
    if (auto v = g.cfg.numbers(key)) {
      if (v->size() != 2) throw ConfigError(std::string(key) + " must be [lo, hi]");
      return std::make_pair((*v)[0], (*v)[1]);
    }
    return def;
  };
  std::tie(spec.theta_min, spec.theta_max) =
      range(s.theta_range, "phase.theta", {spec.theta_min, spec.theta_max});
  std::tie(spec.eta_min, spec.eta_max) = range(s.eta_range, "phase.eta", {spec.eta_min, spec.eta_max});
  const auto res = range(s.resolution, "phase.resolution",
                         {static_cast<double>(spec.n_theta), static_cast<double>(spec.n_eta)});
  spec.n_theta = static_cast<int>(res.first);
  spec.n_eta = static_cast<int>(res.second);
  if (spec.n_theta < 2 || spec.n_eta < 2 || res.first != spec.n_theta || res.second != spec.n_eta)
    throw ConfigError("phase resolution must be integers of at least 2x2");
  if (!(spec.theta_max > spec.theta_min) || !(spec.eta_max > spec.eta_min))
    throw ConfigError("phase ranges must satisfy lo < hi");

  const PhaseGrid grid = phase_raster(model, spec, {}, g.seed_value);
  const std::string fmt = format_for(g, "csv", {"csv", "pgm", "svg", "ndjson"});
  if (fmt == "csv") write_csv(*g.os, grid);
  else if (fmt == "pgm") write_pgm(*g.os, grid);
  else if (fmt == "svg") write_svg(*g.os, grid);
  else
    for (const auto& c : grid.cells) *g.os << to_ndjson(c.verdict) << '\n';

  bool all_indeterminate = true;
  for (const auto& c : grid.cells) all_indeterminate = all_indeterminate && c.verdict.tag == RegionTag::Indeterminate;
  return g.strict && all_indeterminate ? kExitIndeterminate : kExitOk;
}

CapPolicy parse_cap_policy(const std::string& s) {
  if (s == "throw") return CapPolicy::Throw;
  if (s == "stop") return CapPolicy::Stop;
  if (s == "thin") return CapPolicy::Thin;
  throw ConfigError("on_cap must be throw, stop or thin");
}

int cmd_simulate(Globals& g, const Sub& s) {
  const OffspringModel model = make_model(g);
  const ComplexParam lambda = require_lambda(s, g.cfg, "simulate");
  RunOptions opts;
  opts.generations = pick(s.gens, to_int(g.cfg.integer("simulate.gens")), 10);
  opts.alpha = pick(s.alpha, g.cfg.number("simulate.alpha"), default_alpha(model, lambda));
  opts.truncate = s.truncate ? s.truncate : g.cfg.number("simulate.truncate");
  opts.cap = static_cast<std::size_t>(
      pick(s.cap, g.cfg.integer("simulate.cap"), static_cast<std::int64_t>(kDefaultPopulationCap)));
  opts.on_cap = parse_cap_policy(pick(s.on_cap, g.cfg.string("simulate.on_cap"), std::string("throw")));
  const auto reps = pick(to_u64(s.reps, "reps"), to_u64(g.cfg.integer("simulate.reps"), "reps"),
                         std::uint64_t{100});
  if (opts.generations < 0) throw ConfigError("gens must be nonnegative");

  const auto traces = run_replicates(model, lambda, opts, reps, g.seed_value);
  const std::string fmt = format_for(g, "ndjson", {"ndjson", "csv"});
  if (fmt == "ndjson") {
    write_trace_ndjson(*g.os, traces);
  } else {
    *g.os << "rep,n,z_re,z_im,w,zt_re,zt_im,pop\n";
    for (const auto& t : traces)
      for (const auto& r : t.records)
        *g.os << t.replicate << ',' << r.n << ',' << num(r.z.real()) << ',' << num(r.z.imag()) << ','
              << num(r.w) << ',' << (r.zt ? num(r.zt->real()) : "") << ','
              << (r.zt ? num(r.zt->imag()) : "") << ',' << r.pop << '\n';
  }
  return kExitOk;
}

int cmd_diagnose(Globals& g, const Sub& s) {
  format_for(g, "ndjson", {"ndjson"});
  const bool fixed = s.fixed_point || g.cfg.boolean("diagnose.fixed_point").value_or(false);
  if (fixed) {
    const OffspringModel model = make_model(g);
    const ComplexParam lambda = require_lambda(s, g.cfg, "diagnose");
    const int n = pick(s.gens, to_int(g.cfg.integer("diagnose.gens")), 10);
    const auto reps = pick(to_u64(s.reps, "reps"), to_u64(g.cfg.integer("diagnose.reps"), "reps"),
                           std::uint64_t{2000});
    const auto perms = pick(to_u64(s.permutations, "permutations"),
                            to_u64(g.cfg.integer("diagnose.permutations"), "permutations"),
                            std::uint64_t{kDefaultPermutations});
    std::optional<ComplexParam> versus = flag_lambda(s.versus);
    if (!versus) versus = g.cfg.lambda("diagnose.versus");
    json j;
    j["lambda"] = {lambda.theta, lambda.eta};
    j["n"] = n;
    j["reps"] = reps;
    j["permutations"] = perms;
    EnergyTest t;
    if (versus) {
      const auto a = fixed_point_samples(model, lambda, n, reps, derive_seed(g.seed_value, {0}));
      const auto b = fixed_point_samples(model, *versus, n, reps, derive_seed(g.seed_value, {1}));
      t = energy_test(a.direct, b.assembled, perms, derive_seed(g.seed_value, {2}));
      j["versus"] = {versus->theta, versus->eta};
    } else {
      t = fixed_point_selfconsistency(model, lambda, n, reps, g.seed_value, perms).test;
    }
    j["statistic"] = t.statistic;
    j["p_value"] = t.p_value;
    *g.os << j.dump() << '\n';
    return kExitOk;
  }

  const auto path = s.traces ? s.traces : g.cfg.string("diagnose.traces");
  if (!path) throw ConfigError("diagnose needs --traces file.ndjson (or --fixed-point)");
  std::ifstream in(*path);
  if (!in) throw IoError("cannot open " + *path);
  const auto traces = read_trace_ndjson(in);
  ConvergenceOptions co;
  co.p = pick(s.p, g.cfg.number("diagnose.p"), 1.5);
  co.lag = pick(s.lag, to_int(g.cfg.integer("diagnose.lag")), 1);
  const ConvergenceReport rep = convergence_verdict(traces, co);
  json j = to_json(rep);
  std::optional<std::vector<double>> tail;
  if (s.tail) tail = cli::parse_list(*s.tail);
  else tail = g.cfg.numbers("diagnose.tail");
  if (tail) {
    const TailSurvey ts = tail_survey(traces, *tail);
    json rows = json::array();
    for (const auto& r : ts.rows)
      if (r.n == rep.generations)
        rows.push_back({{"t", r.t}, {"survival", r.survival}, {"stderr", r.std_error}});
    j["tail"] = {{"n", rep.generations}, {"survival", rows}};
    if (ts.fit_available) j["tail"]["slope"] = ts.final_fit.slope;
    j["tail"]["heavy"] = ts.heavy;
  }
  *g.os << j.dump() << '\n';
  return g.strict && rep.verdict == Verdict::Indeterminate ? kExitIndeterminate : kExitOk;
}

std::optional<SpineSampler> parse_sampler(const std::string& s) {
  if (s == "auto") return std::nullopt;
  if (s == "closed") return SpineSampler::ClosedForm;
  if (s == "resampling") return SpineSampler::WeightedResampling;
  throw ConfigError("sampler must be auto, closed or resampling");
}

int cmd_spine(Globals& g, const Sub& s) {
  format_for(g, "ndjson", {"ndjson"});
  const OffspringModel model = make_model(g);
  const ComplexParam lambda = require_lambda(s, g.cfg, "spine");
  const double alpha = pick(s.alpha, g.cfg.number("spine.alpha"), default_alpha(model, lambda));
  const auto reps = pick(to_u64(s.reps, "reps"), to_u64(g.cfg.integer("spine.reps"), "reps"),
                         std::uint64_t{100000});
  const int steps = pick(s.steps, to_int(g.cfg.integer("spine.steps")), 1);
  const auto sampler = parse_sampler(pick(s.sampler, g.cfg.string("spine.sampler"), std::string("auto")));
  if (steps < 1) throw ConfigError("steps must be at least 1");

  const Estimate e = spine_path_expectation(
      model, lambda, alpha, steps, [steps](const SpinePath& p) { return p.steps[static_cast<std::size_t>(steps)]; },
      reps, g.seed_value, sampler);
  const int paths = pick(s.paths, to_int(g.cfg.integer("spine.paths")), 0);
  for (int r = 0; r < paths; ++r) {
    Rng rng = make_stream(g.seed_value, {2, static_cast<std::uint64_t>(r)});
    const SpinePath path = spine_sample(model, lambda, alpha, steps, rng, sampler);
    const LadderEpochs lad = ladder_epochs(path.steps);
    json pj;
    pj["path"] = r;
    pj["steps"] = path.steps;
    pj["log_weight"] = path.log_weight;
    pj["descending"] = lad.descending;
    pj["weak_ascending"] = lad.weak_ascending;
    *g.os << pj.dump() << '\n';
  }

  json j;
  j["lambda"] = {lambda.theta, lambda.eta};
  j["alpha"] = alpha;
  j["steps"] = steps;
  j["sampler"] = sampler ? (*sampler == SpineSampler::ClosedForm ? "closed" : "resampling") : "auto";
  j["mean_s_n"] = e.value;
  j["stderr"] = e.std_error;
  j["expected_s_n"] = -steps * log_moment_functional(model, lambda, alpha);

  const auto horizon = s.duality_horizon ? s.duality_horizon : to_int(g.cfg.integer("spine.duality_horizon"));
  if (horizon) {
    const double ta = pick(s.tv_alpha, g.cfg.number("spine.tv_alpha"), 1.5);
    const double td = pick(s.tv_delta, g.cfg.number("spine.tv_delta"), 1.5);
    const auto tv = TVFunction::make(ta, td, select_u0(ta, td));
    const auto d = duality_check(model, lambda, alpha, tv, static_cast<std::size_t>(*horizon),
                                 std::min<std::uint64_t>(reps, 4000), derive_seed(g.seed_value, {1}));
    j["duality"] = {{"horizon", d.horizon},
                    {"before_descent", d.before_descent.value},
                    {"before_descent_stderr", d.before_descent.std_error},
                    {"weak_ascending", d.weak_ascending.value},
                    {"weak_ascending_stderr", d.weak_ascending.std_error},
                    {"z_score", d.z_score},
                    {"unfinished", d.unfinished}};
  }
  *g.os << j.dump() << '\n';
  return kExitOk;
}

int cmd_tv(Globals& g, const Sub& s) {
  const double alpha = pick(s.alpha, g.cfg.number("tv.alpha"), 1.5);
  const double delta = pick(s.delta, g.cfg.number("tv.delta"), 1.5);
  double u0 = 0.0;
  if (s.u0 && *s.u0 != "auto") {
    const auto v = cli::parse_list(*s.u0);
    if (v.size() != 1) throw ConfigError("--u0 takes 'auto' or a single number");
    u0 = v[0];
  } else if (auto c = g.cfg.number("tv.u0"); c && !s.u0) {
    u0 = *c;
  } else {
    u0 = select_u0(alpha, delta);
  }
  const TVFunction tv = TVFunction::make(alpha, delta, u0);
  const int points = pick(s.points, to_int(g.cfg.integer("tv.points")), 1000);
  const double x_max = pick(s.x_max, g.cfg.number("tv.x_max"), 1e4);
  if (points < 2 || !(x_max > 1.0)) throw ConfigError("tv needs points >= 2 and x_max > 1");
  const bool check = s.check || g.cfg.boolean("tv.check").value_or(false);
  const std::string fmt = format_for(g, check ? "ndjson" : "csv", {"csv", "ndjson"});
  if (fmt == "csv") {
    *g.os << "x,ell,phi,phi_prime\n";
    const double lo = -std::log(x_max), hi = std::log(x_max);
    for (int k = 0; k < points; ++k) {
      const double x = std::exp(lo + (hi - lo) * k / (points - 1));
      *g.os << num(x) << ',' << num(ell(tv, x)) << ',' << num(phi(tv, x)) << ','
            << num(phi_prime(tv, x)) << '\n';
    }
    return kExitOk;
  }
  const TVGridCheck c = check_grid(tv, points);
  json j;
  j["alpha"] = alpha;
  j["delta"] = delta;
  j["u0"] = u0;
  j["tail_constant"] = tv.tail_constant();
  j["convex"] = c.convex;
  j["concave_derivative"] = c.concave_derivative;
  j["worst_convexity"] = c.worst_convexity;
  j["worst_concavity"] = c.worst_concavity;
  bool pass = c.ok();
  if (s.dri || g.cfg.boolean("tv.dri").value_or(false)) {
    const DriReport d = dri_check(tv, x_max, 100001);
    j["dri"] = {{"monotone", d.monotone},       {"riemann_h1", d.riemann_h1},
                {"riemann_h05", d.riemann_h05}, {"riemann_h025", d.riemann_h025},
                {"difference_ratio", d.difference_ratio}, {"sums_converge", d.sums_converge},
                {"tail_slope", d.tail_slope},   {"tail_intercept", d.tail_intercept}};
    pass = pass && d.monotone && d.sums_converge;
  }
  j["pass"] = pass;
  *g.os << j.dump() << '\n';
  return check && !pass ? kExitError : kExitOk;
}

int cmd_similarity(Globals& g, const Sub& s) {
  const bool from_complex = s.from_complex || g.cfg.boolean("similarity.from_complex").value_or(false);
  if (!from_complex)
    throw ConfigError("similarity currently builds its model from a complex one; pass --from-complex");
  const OffspringModel model = make_model(g);
  const ComplexParam lambda = require_lambda(s, g.cfg, "similarity");
  const int gens = pick(s.gens, to_int(g.cfg.integer("similarity.gens")), 10);
  const auto reps = pick(to_u64(s.reps, "reps"), to_u64(g.cfg.integer("similarity.reps"), "reps"),
                         std::uint64_t{10});
  const double alpha = pick(s.alpha, g.cfg.number("similarity.alpha"), default_alpha(model, lambda));
  const bool compare = s.compare || g.cfg.boolean("similarity.compare").value_or(false);
  const std::string fmt = format_for(g, "ndjson", {"ndjson", "csv"});

  if (compare) {
    const auto recs = compare_engines(model, lambda, gens, alpha, reps, g.seed_value);
    if (fmt == "csv") *g.os << "n,max_z_diff,max_w_diff\n";
    for (const auto& r : recs) {
      if (fmt == "csv") {
        *g.os << r.n << ',' << num(r.max_z_diff) << ',' << num(r.max_w_diff) << '\n';
      } else {
        json j;
        j["n"] = r.n;
        j["max_z_diff"] = r.max_z_diff;
        j["max_w_diff"] = r.max_w_diff;
        *g.os << j.dump() << '\n';
      }
    }
    return kExitOk;
  }
  const SimilarityModel sim = complex_to_similarity(model, lambda);
  const EigenResult eig = mean_matrix_eigvec(sim);
  if (fmt == "csv") *g.os << "rep,n,zw_0,zw_1,w,pop\n";
  for (std::uint64_t r = 0; r < reps; ++r) {
    const auto recs = run_similarity(sim, eig.w, gens, alpha, derive_seed(g.seed_value, {r}));
    for (const auto& rec : recs) {
      if (fmt == "csv") {
        *g.os << r << ',' << rec.n << ',' << num(rec.zw(0)) << ',' << num(rec.zw(1)) << ','
              << num(rec.w) << ',' << rec.pop << '\n';
      } else {
        json j;
        j["rep"] = r;
        j["n"] = rec.n;
        j["zw"] = {rec.zw(0), rec.zw(1)};
        j["w"] = rec.w;
        j["pop"] = rec.pop;
        *g.os << j.dump() << '\n';
      }
    }
  }
  return kExitOk;
}

void resolve_globals(Globals& g) {
  if (g.config_path) g.cfg = Config::load(*g.config_path);
  g.seed_value = pick(to_u64(g.seed, "seed"), to_u64(g.cfg.integer("seed"), "seed"), std::uint64_t{1});
  g.format_value = pick(g.format, g.cfg.string("format"), std::string());
  g.strict = g.strict || g.cfg.boolean("strict").value_or(false);
  const auto threads = g.threads ? g.threads : to_int(g.cfg.integer("threads"));
  if (threads) {
    if (*threads < 1) throw ConfigError("threads must be at least 1");
    omp_set_num_threads(*threads);
  }
  const auto out = g.out ? g.out : g.cfg.string("out");
  if (out && *out != "-") {
    g.file = std::make_unique<std::ofstream>(*out, std::ios::binary);
    if (!*g.file) throw IoError("cannot open " + *out + " for writing");
    g.os = g.file.get();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching random walk martingales: phase diagrams, simulation and diagnostics"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  Sub s;
  app.add_option("--config", g.config_path, "TOML configuration file");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output file (default stdout)");
  app.add_option("--format", g.format, "csv | ndjson | pgm | svg");
  app.add_option("--threads", g.threads, "OpenMP thread count");
  app.add_flag("--strict", g.strict, "exit 3 when every result is Indeterminate");
  app.add_option("--model", g.model, "gaussian | lattice | table");
  app.add_option("--lattice-cap", g.lattice_cap, "largest lattice displacement");

  auto* classify_cmd = app.add_subcommand("classify", "classify λ against the phase region");
  classify_cmd->add_option("--lambda", s.lambdas, "theta,eta (repeatable)");

  auto* phase_cmd = app.add_subcommand("phase", "rasterise the phase diagram");
  phase_cmd->add_option("--theta-range", s.theta_range, "lo,hi");
  phase_cmd->add_option("--eta-range", s.eta_range, "lo,hi");
  phase_cmd->add_option("--resolution", s.resolution, "n_theta,n_eta");

  auto* sim_cmd = app.add_subcommand("simulate", "simulate martingale traces");
  sim_cmd->add_option("--lambda", s.lambda, "theta,eta");
  sim_cmd->add_option("--gens", s.gens);
  sim_cmd->add_option("--reps", s.reps);
  sim_cmd->add_option("--alpha", s.alpha, "exponent of W_n (default: the characteristic index)");
  sim_cmd->add_option("--truncate", s.truncate, "also record the truncated martingale at this t");
  sim_cmd->add_option("--cap", s.cap, "population cap");
  sim_cmd->add_option("--on-cap", s.on_cap, "throw | stop | thin");

  auto* diag_cmd = app.add_subcommand("diagnose", "convergence verdicts and self-consistency tests");
  diag_cmd->add_option("--traces", s.traces, "NDJSON traces from simulate");
  diag_cmd->add_option("--p", s.p, "moment order");
  diag_cmd->add_option("--lag", s.lag, "increment lag k");
  diag_cmd->add_option("--tail", s.tail, "comma-separated t grid for the tail survey");
  diag_cmd->add_flag("--fixed-point", s.fixed_point, "run the fixed-point self-consistency test");
  diag_cmd->add_option("--lambda", s.lambda, "theta,eta (fixed-point test)");
  diag_cmd->add_option("--versus", s.versus, "second λ for a mismatched comparison");
  diag_cmd->add_option("--gens", s.gens);
  diag_cmd->add_option("--reps", s.reps);
  diag_cmd->add_option("--permutations", s.permutations);

  auto* spine_cmd = app.add_subcommand("spine", "many-to-one spine estimates");
  spine_cmd->add_option("--lambda", s.lambda, "theta,eta");
  spine_cmd->add_option("--alpha", s.alpha);
  spine_cmd->add_option("--reps", s.reps);
  spine_cmd->add_option("--steps", s.steps);
  spine_cmd->add_option("--sampler", s.sampler, "auto | closed | resampling");
  spine_cmd->add_option("--paths", s.paths, "also print this many sample paths with their ladder epochs");
  spine_cmd->add_option("--duality-horizon", s.duality_horizon);
  spine_cmd->add_option("--tv-alpha", s.tv_alpha);
  spine_cmd->add_option("--tv-delta", s.tv_delta);

  auto* tv_cmd = app.add_subcommand("tv", "the regularly varying test function");
  tv_cmd->add_option("--alpha", s.alpha);
  tv_cmd->add_option("--delta", s.delta);
  tv_cmd->add_option("--u0", s.u0, "auto | value");
  tv_cmd->add_flag("--check", s.check, "print the pass/fail property report; exit 1 on failure");
  tv_cmd->add_option("--points", s.points);
  tv_cmd->add_option("--x-max", s.x_max);
  tv_cmd->add_flag("--dri", s.dri, "include the direct Riemann integrability check");

  auto* simil_cmd = app.add_subcommand("similarity", "similarity-matrix engine");
  simil_cmd->add_flag("--from-complex", s.from_complex, "realise the complex model as 2x2 similarities");
  simil_cmd->add_option("--lambda", s.lambda, "theta,eta");
  simil_cmd->add_option("--gens", s.gens);
  simil_cmd->add_option("--reps", s.reps);
  simil_cmd->add_option("--alpha", s.alpha);
  simil_cmd->add_flag("--compare", s.compare, "print per-generation discrepancies against the complex engine");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    resolve_globals(g);
    int code = kExitOk;
    if (*classify_cmd) code = cmd_classify(g, s);
    else if (*phase_cmd) code = cmd_phase(g, s);
    else if (*sim_cmd) code = cmd_simulate(g, s);
    else if (*diag_cmd) code = cmd_diagnose(g, s);
    else if (*spine_cmd) code = cmd_spine(g, s);
    else if (*tv_cmd) code = cmd_tv(g, s);
    else if (*simil_cmd) code = cmd_similarity(g, s);
    g.os->flush();
    if (!*g.os) throw IoError("failed writing output");
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "brw: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "brw: " << e.what() << '\n';
    return kExitError;
  }
}
