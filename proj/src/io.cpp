#include "canon/io.hpp"

#include <fstream>
#include <sstream>

namespace canon {

using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

template <class Fn>
auto guarded(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

json space_to_json(const StateSpace& space) {
  json j{{"num_cells", space.num_cells()},
         {"weights", std::vector<double>(space.weights().begin(), space.weights().end())}};
  if (!space.labels().empty())
    j["labels"] = std::vector<std::string>(space.labels().begin(), space.labels().end());
  return j;
}

StateSpace space_from_json(const json& j) {
  return guarded("state space", [&] {
    const int k = j.at("num_cells").get<int>();
    std::vector<double> weights;
    if (j.contains("weights"))
      weights = j.at("weights").get<std::vector<double>>();
    else
      weights.assign(static_cast<std::size_t>(std::max(k, 0)), 1.0);
    if (static_cast<int>(weights.size()) != k)
      throw InputError("weights length does not match num_cells");
    auto labels = get_or<std::vector<std::string>>(j, "labels", {});
    return StateSpace(std::move(weights), std::move(labels));
  });
}

json table_to_json(const SymmetricTable& t, bool with_space) {
  json j{{"order", t.order()},
         {"values", std::vector<double>(t.values().begin(), t.values().end())}};
  if (with_space) {
    j["num_cells"] = t.space().num_cells();
    j["weights"] =
        std::vector<double>(t.space().weights().begin(), t.space().weights().end());
  }
  return j;
}

SymmetricTable table_from_json(const json& j, const StateSpace* space,
                               std::optional<int> default_order) {
  return guarded("table", [&] {
    int order = 0;
    if (j.contains("order"))
      order = j.at("order").get<int>();
    else if (default_order)
      order = *default_order;
    else
      throw InputError("table is missing 'order'");
    auto values = j.at("values").get<std::vector<double>>();
    if (space) {
      if (j.contains("num_cells") && j.at("num_cells").get<int>() != space->num_cells())
        throw InputError("table num_cells does not match the state space");
      return SymmetricTable(*space, order, std::move(values));
    }
    return SymmetricTable(space_from_json(j), order, std::move(values));
  });
}

CanonicalSystem InstanceDocument::system() const {
  ExactOptions opts;
  opts.budget = budget;
  return CanonicalSystem(space, particles, order, potential, opts);
}

InstanceDocument instance_from_json(const json& j) {
  return guarded("instance", [&] {
    InstanceDocument doc{space_from_json(j.at("space"))};
    const auto& sys = j.at("system");
    doc.particles = sys.at("N").get<int>();
    doc.order = sys.at("m").get<int>();
    doc.budget = get_or<std::uint64_t>(sys, "budget", doc.budget);
    if (doc.order < 1 || doc.order > doc.particles)
      throw InputError("system requires 1 <= m <= N");

    if (j.contains("W")) {
      const auto& w = j.at("W");
      const json terms = w.is_array() ? w : json::array({w});
      for (const auto& term : terms) {
        if (term.contains("full")) {
          doc.potential.set_full(
              SymmetricTable(doc.space, doc.particles, term.at("full").get<std::vector<double>>()));
        } else {
          auto t = table_from_json(term, &doc.space);
          if (t.order() > doc.particles) throw InputError("W term order exceeds N");
          doc.potential.add_term(std::move(t));
        }
      }
    }
    if (j.contains("u")) doc.u = table_from_json(j.at("u"), &doc.space, doc.order);
    if (j.contains("target"))
      doc.target = table_from_json(j.at("target"), &doc.space, doc.order);
    if (j.contains("P")) doc.P = table_from_json(j.at("P"), &doc.space, doc.particles);
    if (doc.u && doc.u->order() != doc.order) throw InputError("u must have order m");
    if (doc.target && doc.target->order() != doc.order)
      throw InputError("target must have order m");
    if (doc.P && doc.P->order() != doc.particles) throw InputError("P must have order N");

    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      doc.solver.method = parse_method(get_or<std::string>(s, "method", "newton"));
      doc.solver.tol = get_or<double>(s, "tol", doc.solver.tol);
      doc.solver.max_iters = get_or<int>(s, "max_iters", doc.solver.max_iters);
      doc.solver.engine = parse_engine(get_or<std::string>(s, "engine", "exact"));
      doc.solver_seed = get_or<std::uint64_t>(s, "seed", doc.solver_seed);
    }
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      doc.sampler.num_chains = get_or<int>(s, "num_chains", doc.sampler.num_chains);
      doc.sampler.sweeps = get_or<int>(s, "sweeps", doc.sampler.sweeps);
      doc.sampler.burn_in = get_or<int>(s, "burn_in", doc.sampler.burn_in);
      doc.sampler.seed = get_or<std::uint64_t>(s, "seed", doc.sampler.seed);
    }
    doc.solver.sampler = doc.sampler;
    doc.solver.sampler.seed = doc.solver_seed;
    return doc;
  });
}

json to_json(const InstanceDocument& doc) {
  json j;
  j["space"] = space_to_json(doc.space);
  j["system"] = {{"N", doc.particles}, {"m", doc.order}};
  if (doc.budget != ExactOptions{}.budget) j["system"]["budget"] = doc.budget;
  json w = json::array();
  for (const auto& t : doc.potential.terms()) w.push_back(table_to_json(t, false));
  if (const auto& full = doc.potential.full())
    w.push_back({{"full", std::vector<double>(full->values().begin(), full->values().end())}});
  j["W"] = w;
  if (doc.u) j["u"] = table_to_json(*doc.u, false);
  if (doc.target) j["target"] = table_to_json(*doc.target, false);
  if (doc.P)
    j["P"] = {{"values", std::vector<double>(doc.P->values().begin(), doc.P->values().end())}};
  j["solver"] = {{"method", to_string(doc.solver.method)},
                 {"tol", doc.solver.tol},
                 {"max_iters", doc.solver.max_iters},
                 {"seed", doc.solver_seed},
                 {"engine", to_string(doc.solver.engine)}};
  j["sampler"] = {{"num_chains", doc.sampler.num_chains},
                  {"sweeps", doc.sampler.sweeps},
                  {"burn_in", doc.sampler.burn_in},
                  {"seed", doc.sampler.seed}};
  return j;
}

json to_json(const SolveReport& report, const SolverConfig& cfg) {
  json j{{"converged", report.converged},
         {"iterations", report.iterations},
         {"final_residual", report.final_residual},
         {"final_l1", report.final_l1},
         {"log_F_trace", report.log_F_trace},
         {"u_sup_norm", report.u_sup_norm},
         {"stop_reason", report.stop_reason},
         {"method", to_string(cfg.method)},
         {"engine", to_string(cfg.engine)},
         {"tol", cfg.tol},
         {"u", table_to_json(report.u)}};
  if (cfg.engine == Engine::Exact) j["log_Z"] = report.log_z;
  if (report.final_std_error) j["final_std_error"] = *report.final_std_error;
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace canon
