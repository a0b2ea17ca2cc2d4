#include "canon/cli.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "canon/ensemble.hpp"
#include "canon/io.hpp"
#include "canon/sampler.hpp"
#include "canon/solver.hpp"
#include "canon/verify.hpp"

namespace canon {

using nlohmann::json;

namespace {

struct GenerateArgs {
  int cells = 0;
  int particles = 0;
  int order = 2;
  std::uint64_t seed = 1;
  std::vector<double> potential_range{-1.0, 1.0};
  std::vector<double> w_range{-1.0, 1.0};
  int w_order = 2;
  std::vector<double> weights;
  bool include_p = false;
  std::uint64_t budget = ExactOptions{}.budget;
  std::string out;
  std::string answer;
};

struct CommonArgs {
  std::string instance;
  std::string out;
  std::string answer;
};

struct SolverOverrides {
  std::optional<std::string> method;
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::optional<std::string> engine;
  std::optional<std::uint64_t> seed;
};

struct SamplerOverrides {
  std::optional<int> chains;
  std::optional<int> sweeps;
  std::optional<int> burn_in;
  std::optional<std::uint64_t> seed;
};

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SymmetricTable potential_from(const InstanceDocument& doc, const std::string& answer) {
  if (!answer.empty()) {
    const auto a = read_json_file(answer);
    if (!a.contains("u")) throw InputError("answer file has no 'u' table");
    return table_from_json(a.at("u"), &doc.space, doc.order);
  }
  if (doc.u) return *doc.u;
  throw InputError("instance has no potential 'u' and no --answer file was given");
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  if (a.potential_range.size() != 2 || a.w_range.size() != 2)
    throw InputError("ranges take exactly two values");
  StateSpace space = a.weights.empty() ? StateSpace::uniform(a.cells)
                                       : StateSpace(a.weights);
  if (!a.weights.empty() && static_cast<int>(a.weights.size()) != a.cells)
    throw InputError("--weights must list one weight per cell");

  ExactOptions opts;
  opts.budget = a.budget;
  PotentialSpec W;
  if (a.w_order > 0) {
    if (a.w_order > a.particles) throw InputError("--w-order exceeds the particle count");
    W.add_term(random_table(space, a.w_order, a.w_range[0], a.w_range[1],
                            derived_seed(a.seed, 1)));
  }
  const CanonicalSystem sys(space, a.particles, a.order, W, opts);
  if (!sys.enumerable())
    throw BudgetError("generate needs exact enumeration of " +
                      std::to_string(sys.num_configurations()) +
                      " configurations; raise --budget to at least that");

  const auto u_star = random_table(space, a.order, a.potential_range[0],
                                   a.potential_range[1], derived_seed(a.seed, 0));
  InstanceDocument doc{space};
  doc.particles = a.particles;
  doc.order = a.order;
  doc.potential = W;
  doc.budget = a.budget;
  doc.target = m_density(sys, u_star);
  if (a.include_p) doc.P = configuration_density(sys, u_star);
  doc.solver_seed = a.seed;
  doc.sampler.seed = a.seed;

  write_json_file(a.out, to_json(doc));
  write_json_file(a.answer, json{{"u", table_to_json(u_star)},
                                 {"u_gauge_fixed", table_to_json(gauge_fix(u_star))}});
  out << "wrote " << a.out << " and " << a.answer << '\n';
  return kExitOk;
}

int cmd_forward(const CommonArgs& a, std::ostream& out) {
  const auto doc = instance_from_json(read_json_file(a.instance));
  const auto u = potential_from(doc, a.answer);
  const auto sys = doc.system();
  const auto summary = summarize(sys, u, doc.target ? &*doc.target : nullptr,
                                 doc.P ? &*doc.P : nullptr);
  json j{{"density", table_to_json(summary.density)},
         {"log_Z", summary.log_z},
         {"integral", integrate(summary.density)}};
  if (summary.log_f) j["log_F"] = *summary.log_f;
  if (summary.upper_bound_log) j["upper_bound_log"] = *summary.upper_bound_log;
  if (!a.out.empty()) write_json_file(a.out, j);
  out << "log_Z = " << summary.log_z << '\n';
  if (summary.log_f) out << "log_F = " << *summary.log_f << '\n';
  return kExitOk;
}

void apply(const SolverOverrides& o, InstanceDocument& doc) {
  if (o.method) doc.solver.method = parse_method(*o.method);
  if (o.tol) doc.solver.tol = *o.tol;
  if (o.max_iters) doc.solver.max_iters = *o.max_iters;
  if (o.engine) doc.solver.engine = parse_engine(*o.engine);
  if (o.seed) doc.solver_seed = *o.seed;
  doc.solver.sampler = doc.sampler;
  doc.solver.sampler.seed = doc.solver_seed;
}

void apply(const SamplerOverrides& o, InstanceDocument& doc) {
  if (o.chains) doc.sampler.num_chains = *o.chains;
  if (o.sweeps) doc.sampler.sweeps = *o.sweeps;
  if (o.burn_in) doc.sampler.burn_in = *o.burn_in;
  if (o.seed) doc.sampler.seed = *o.seed;
}

int cmd_invert(const CommonArgs& a, const SolverOverrides& so,
               const SamplerOverrides& mo, std::ostream& out) {
  auto doc = instance_from_json(read_json_file(a.instance));
  apply(mo, doc);
  apply(so, doc);
  if (!doc.target) throw InputError("instance has no target density");
  const auto sys = doc.system();
  const auto report = invert(sys, *doc.target, doc.solver);
  if (!a.out.empty()) write_json_file(a.out, to_json(report, doc.solver));
  out << (report.converged ? "converged" : "not converged") << " after "
      << report.iterations << " iterations, residual " << report.final_residual << '\n';
  return report.converged ? kExitOk : kExitNotConverged;
}

int cmd_sample(const CommonArgs& a, const SamplerOverrides& mo, std::ostream& out) {
  auto doc = instance_from_json(read_json_file(a.instance));
  apply(mo, doc);
  const auto u = potential_from(doc, a.answer);
  const auto sys = doc.system();
  const auto est = run_chain(sys, u, doc.sampler);
  json j{{"mean", table_to_json(est.mean)},
         {"std_error", table_to_json(est.std_error)},
         {"acceptance_rate", est.acceptance_rate}};
  if (doc.target) {
    auto g = est.mean - *doc.target;
    g *= static_cast<double>(sys.num_subsets());
    auto ge = est.std_error;
    ge *= static_cast<double>(sys.num_subsets());
    j["gradient"] = table_to_json(g);
    j["gradient_std_error"] = table_to_json(ge);
  }
  if (sys.enumerable()) {
    const auto exact = m_density(sys, u);
    std::size_t within = 0;
    for (std::size_t r = 0; r < exact.size(); ++r)
      if (std::abs(est.mean[r] - exact[r]) <= 3.0 * est.std_error[r]) ++within;
    j["exact"] = table_to_json(exact);
    j["fraction_within_3se"] =
        static_cast<double>(within) / static_cast<double>(exact.size());
  }
  if (!a.out.empty()) write_json_file(a.out, j);
  out << "acceptance rate " << est.acceptance_rate << '\n';
  return kExitOk;
}

int cmd_verify(const CommonArgs& a, std::ostream& out) {
  const auto doc = instance_from_json(read_json_file(a.instance));
  const auto sys = doc.system();
  std::optional<SymmetricTable> target = doc.target;
  if (!target && doc.P)
    target = doc.order == doc.particles ? *doc.P : reduce_density(*doc.P, doc.order);
  if (!target) throw InputError("verify needs a target or P");

  const auto seed = doc.solver_seed;
  auto rnd = [&](std::uint64_t stream, double lo = -1.0, double hi = 1.0) {
    return random_table(doc.space, doc.order, lo, hi, derived_seed(seed, stream));
  };
  std::vector<CheckReport> reports;
  const std::vector<double> grid{0.1, 0.25, 0.5, 0.75, 0.9};

  if (doc.P) {
    reports.push_back(check_condition_P(*doc.P));
    reports.push_back(check_consistency(*target, *doc.P));
    std::vector<SymmetricTable> us;
    for (std::uint64_t i = 0; i < 20; ++i) us.push_back(rnd(100 + i, -3.0, 3.0));
    reports.push_back(check_bound(sys, *doc.P, us));
  }
  const auto u0 = rnd(1);
  const auto u1 = rnd(2);
  auto generic = check_concavity(sys, *target, u0, u1, grid);
  generic.name = "concavity_generic";
  reports.push_back(std::move(generic));
  auto shifted = check_concavity(sys, *target, u0, u0 + 3.0, grid);
  shifted.name = "concavity_constant_shift";
  reports.push_back(std::move(shifted));

  std::vector<SymmetricTable> dirs{SymmetricTable::constant(doc.space, doc.order, 1.0)};
  for (std::uint64_t i = 0; i < 5; ++i) dirs.push_back(rnd(200 + i));
  reports.push_back(check_gradient_fd(sys, *target, u0, dirs));
  reports.push_back(check_hessian(sys, *target, u0, dirs));

  const auto r = rnd(3);
  const std::vector<SymmetricTable> inits{SymmetricTable(doc.space, doc.order), r, -1.0 * r};
  reports.push_back(check_uniqueness(sys, *target, inits, doc.solver));

  json checks = json::array();
  bool failed = false, inconclusive = false;
  for (const auto& rep : reports) {
    checks.push_back(to_json(rep));
    failed = failed || rep.status == CheckStatus::Fail;
    inconclusive = inconclusive || rep.status == CheckStatus::Inconclusive;
    out << to_string(rep.status) << "  " << rep.name << '\n';
  }
  if (!a.out.empty())
    write_json_file(a.out, json{{"checks", checks}, {"passed", !failed && !inconclusive}});
  if (failed) return kExitVerificationFailed;
  if (inconclusive) return kExitNotConverged;
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Canonical-ensemble inverse solver for m-body potentials"};
  app.name("canon");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a random feasible instance and its answer");
  g->add_option("--cells", gen.cells, "Number of cells K")->required();
  g->add_option("--particles", gen.particles, "Particle count N")->required();
  g->add_option("--order", gen.order, "Interaction order m");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--potential-range", gen.potential_range, "Range of u*")->expected(2);
  g->add_option("--w-range", gen.w_range, "Range of the W term")->expected(2);
  g->add_option("--w-order", gen.w_order, "Order of the random W term (0 for W = 0)");
  g->add_option("--weights", gen.weights, "Cell weights");
  g->add_flag("--include-p", gen.include_p, "Also store the N-particle density P");
  g->add_option("--budget", gen.budget, "Exact enumeration budget");
  g->add_option("--out", gen.out, "Instance file")->required();
  g->add_option("--answer", gen.answer, "Answer sidecar file")->required();

  CommonArgs fwd;
  auto* f = app.add_subcommand("forward", "Compute the m-density, log Z and log F");
  f->add_option("instance", fwd.instance)->required();
  f->add_option("--answer", fwd.answer, "Take u from an answer file");
  f->add_option("--out", fwd.out, "Output file");

  CommonArgs inv;
  SolverOverrides inv_solver;
  SamplerOverrides inv_sampler;
  auto* i = app.add_subcommand("invert", "Recover the potential reproducing the target");
  i->add_option("instance", inv.instance)->required();
  i->add_option("--out", inv.out, "Report file");
  i->add_option("--method", inv_solver.method, "newton | gradient-ascent");
  i->add_option("--tol", inv_solver.tol, "Density residual tolerance");
  i->add_option("--max-iters", inv_solver.max_iters, "Iteration limit");
  i->add_option("--engine", inv_solver.engine, "exact | sampled");
  i->add_option("--seed", inv_solver.seed, "Seed for the sampled engine");
  i->add_option("--chains", inv_sampler.chains);
  i->add_option("--sweeps", inv_sampler.sweeps);
  i->add_option("--burn-in", inv_sampler.burn_in);

  CommonArgs smp;
  SamplerOverrides smp_opts;
  auto* s = app.add_subcommand("sample", "Monte Carlo estimate of the m-density");
  s->add_option("instance", smp.instance)->required();
  s->add_option("--answer", smp.answer, "Take u from an answer file");
  s->add_option("--out", smp.out, "Output file");
  s->add_option("--chains", smp_opts.chains);
  s->add_option("--sweeps", smp_opts.sweeps);
  s->add_option("--burn-in", smp_opts.burn_in);
  s->add_option("--seed", smp_opts.seed);

  CommonArgs ver;
  auto* v = app.add_subcommand("verify", "Run the property checks on an instance");
  v->add_option("instance", ver.instance)->required();
  v->add_option("--out", ver.out, "Report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (f->parsed()) return cmd_forward(fwd, out);
    if (i->parsed()) return cmd_invert(inv, inv_solver, inv_sampler, out);
    if (s->parsed()) return cmd_sample(smp, smp_opts, out);
    if (v->parsed()) return cmd_verify(ver, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace canon
