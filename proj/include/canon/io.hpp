#pragma once

// JSON documents for state spaces, tables, instances and reports. Tables list
// their values in multiset rank order. Doubles are written in shortest
// round-trip form, so a value read back is bit-identical to the one written.

#include <cstdint>
#include <filesystem>
#include <optional>

#include "canon/ensemble.hpp"
#include "canon/sampler.hpp"
#include "canon/solver.hpp"
#include "canon/space.hpp"
#include "json.hpp"

namespace canon {

nlohmann::json space_to_json(const StateSpace& space);
StateSpace space_from_json(const nlohmann::json& j);

/// {order, num_cells, weights, values}; the space fields are omitted when
/// `with_space` is false (tables embedded in an instance).
nlohmann::json table_to_json(const SymmetricTable& t, bool with_space = true);

/// Reads a table. Uses `space` when given, otherwise the document's own
/// num_cells and weights. `default_order` applies when `order` is absent.
SymmetricTable table_from_json(const nlohmann::json& j,
                               const StateSpace* space = nullptr,
                               std::optional<int> default_order = std::nullopt);

struct InstanceDocument {
  StateSpace space;
  int particles = 2;
  int order = 2;
  PotentialSpec potential;
  std::optional<SymmetricTable> u;
  std::optional<SymmetricTable> target;
  std::optional<SymmetricTable> P;
  SolverConfig solver;
  std::uint64_t solver_seed = 1;
  ChainConfig sampler;
  std::uint64_t budget = ExactOptions{}.budget;

  CanonicalSystem system() const;
};

InstanceDocument instance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const InstanceDocument& doc);

nlohmann::json to_json(const SolveReport& report, const SolverConfig& cfg);

/// Throws InputError on unreadable or malformed files.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace canon
