#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "canon/cli.hpp"
#include "canon/io.hpp"
#include "doctest.h"

using namespace canon;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "canon");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("canon_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

json ln2_instance() {
  return {{"space", {{"num_cells", 2}, {"weights", {1.0, 1.0}}}},
          {"system", {{"N", 2}, {"m", 2}}},
          {"u", {{"order", 2}, {"values", {std::log(2.0), 0.0, 0.0}}}},
          {"target", {{"order", 2}, {"values", {1.0 / 7, 2.0 / 7, 2.0 / 7}}}}};
}

}  // namespace

TEST_CASE("generate is deterministic") {
  TempDir d("generate");
  const std::vector<std::string> base{"generate", "--cells", "5", "--particles", "4",
                                      "--order", "2", "--seed", "7"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", d / "a.json", "--answer", d / "a_ans.json"});
  b.insert(b.end(), {"--out", d / "b.json", "--answer", d / "b_ans.json"});
  REQUIRE(run(a).code == kExitOk);
  REQUIRE(run(b).code == kExitOk);
  CHECK(slurp(d / "a.json") == slurp(d / "b.json"));
  CHECK(slurp(d / "a_ans.json") == slurp(d / "b_ans.json"));

  auto c = base;
  c[8] = "8";
  c.insert(c.end(), {"--out", d / "c.json", "--answer", d / "c_ans.json"});
  REQUIRE(run(c).code == kExitOk);
  CHECK(slurp(d / "a.json") != slurp(d / "c.json"));

  const auto doc = instance_from_json(read_json_file(d / "a.json"));
  CHECK(doc.space.num_cells() == 5);
  CHECK(doc.particles == 4);
  REQUIRE(doc.target);
  CHECK(integrate(*doc.target) == doctest::Approx(1.0).epsilon(1e-12));
  // the answer is not leaked into the instance
  CHECK_FALSE(read_json_file(d / "a.json").contains("u"));
}

TEST_CASE("zero potential range gives u* = 0") {
  TempDir d("zero");
  REQUIRE(run({"generate", "--cells", "3", "--particles", "3", "--potential-range", "0", "0",
               "--w-order", "0", "--out", d / "i.json", "--answer", d / "a.json"})
              .code == kExitOk);
  const auto ans = read_json_file(d / "a.json");
  for (const auto& v : ans["u"]["values"]) CHECK(v.get<double>() == 0.0);
  const auto doc = instance_from_json(read_json_file(d / "i.json"));
  for (double v : doc.target->values()) CHECK(v == doctest::Approx(1.0 / 9).epsilon(1e-14));
}

TEST_CASE("generate then invert recovers the answer") {
  TempDir d("roundtrip");
  REQUIRE(run({"generate", "--cells", "4", "--particles", "4", "--order", "2", "--seed", "3",
               "--weights", "1", "0.5", "2", "1.5", "--out", d / "i.json", "--answer",
               d / "a.json"})
              .code == kExitOk);
  const auto r = run({"invert", d / "i.json", "--out", d / "r.json"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("converged") == 0);
  const auto rep = read_json_file(d / "r.json");
  CHECK(rep["converged"] == true);
  const auto doc = instance_from_json(read_json_file(d / "i.json"));
  const auto u = table_from_json(rep["u"]);
  const auto ans = table_from_json(read_json_file(d / "a.json")["u_gauge_fixed"]);
  CHECK(sup_distance(u, ans) <= 1e-8);

  const auto ga = run({"invert", d / "i.json", "--method", "gradient-ascent", "--max-iters",
                       "20000", "--out", d / "g.json"});
  CHECK(ga.code == kExitOk);
  CHECK(sup_distance(table_from_json(read_json_file(d / "g.json")["u"]), ans) <= 1e-6);

  const auto stuck = run({"invert", d / "i.json", "--max-iters", "0", "--out", d / "s.json"});
  CHECK(stuck.code == kExitNotConverged);
  const auto srep = read_json_file(d / "s.json");
  CHECK(srep["converged"] == false);
  CHECK(srep["final_residual"].get<double>() > 0.0);
}

TEST_CASE("m = N instance matches the closed form") {
  TempDir d("full");
  REQUIRE(run({"generate", "--cells", "3", "--particles", "3", "--order", "3", "--seed", "4",
               "--out", d / "i.json", "--answer", d / "a.json"})
              .code == kExitOk);
  REQUIRE(run({"invert", d / "i.json", "--out", d / "r.json"}).code == kExitOk);
  const auto doc = instance_from_json(read_json_file(d / "i.json"));
  const auto closed = trivial_invert(doc.system(), *doc.target);
  CHECK(sup_distance(table_from_json(read_json_file(d / "r.json")["u"]), closed) <= 1e-8);
}

TEST_CASE("forward") {
  TempDir d("forward");
  write_json_file(d / "ln2.json", ln2_instance());
  const auto r = run({"forward", d / "ln2.json", "--out", d / "f.json"});
  REQUIRE(r.code == kExitOk);
  const auto f = read_json_file(d / "f.json");
  CHECK(f["log_Z"].get<double>() == doctest::Approx(std::log(3.5)).epsilon(1e-15));
  const auto rho = table_from_json(f["density"]);
  CHECK(rho[0] == doctest::Approx(1.0 / 7).epsilon(1e-15));
  CHECK(rho[1] == doctest::Approx(2.0 / 7).epsilon(1e-15));
  CHECK(rho[2] == doctest::Approx(2.0 / 7).epsilon(1e-15));
  CHECK(std::abs(integrate(rho) - 1.0) <= 1e-10);
  CHECK(f.contains("log_F"));

  auto zero = ln2_instance();
  zero["u"]["values"] = {0.0, 0.0, 0.0};
  zero.erase("target");
  write_json_file(d / "zero.json", zero);
  REQUIRE(run({"forward", d / "zero.json", "--out", d / "z.json"}).code == kExitOk);
  const auto zf = read_json_file(d / "z.json");
  for (const auto& v : zf["density"]["values"])
    CHECK(v.get<double>() == doctest::Approx(0.25));

  zero.erase("u");
  write_json_file(d / "none.json", zero);
  const auto missing = run({"forward", d / "none.json"});
  CHECK(missing.code == kExitInputError);
  CHECK(missing.err.find("potential") != std::string::npos);
}

TEST_CASE("sample agrees with exact enumeration") {
  TempDir d("sample");
  write_json_file(d / "ln2.json", ln2_instance());
  const auto r = run({"sample", d / "ln2.json", "--sweeps", "20000", "--seed", "5", "--out",
                      d / "s.json"});
  REQUIRE(r.code == kExitOk);
  const auto s = read_json_file(d / "s.json");
  CHECK(s["fraction_within_3se"].get<double>() == 1.0);
  CHECK(s.contains("gradient"));
  const auto again = run({"sample", d / "ln2.json", "--sweeps", "20000", "--seed", "5",
                          "--out", d / "t.json"});
  CHECK(slurp(d / "s.json") == slurp(d / "t.json"));
}

TEST_CASE("verify") {
  TempDir d("verify");
  REQUIRE(run({"generate", "--cells", "3", "--particles", "3", "--potential-range", "0", "0",
               "--w-order", "0", "--include-p", "--out", d / "u.json", "--answer",
               d / "a.json"})
              .code == kExitOk);
  const auto ok = run({"verify", d / "u.json", "--out", d / "v.json"});
  CHECK(ok.code == kExitOk);
  const auto v = read_json_file(d / "v.json");
  CHECK(v["passed"] == true);
  CHECK(v["checks"].size() == 8);

  REQUIRE(run({"generate", "--cells", "3", "--particles", "3", "--seed", "9", "--include-p",
               "--out", d / "r.json", "--answer", d / "ra.json"})
              .code == kExitOk);
  CHECK(run({"verify", d / "r.json"}).code == kExitOk);

  auto doc = read_json_file(d / "r.json");
  auto& vals = doc["target"]["values"];
  vals[2] = vals[2].get<double>() + 1e-3;
  double total = 0.0;
  const auto parsed = instance_from_json(doc);
  total = integrate(*parsed.target);
  for (auto& x : vals) x = x.get<double>() / total;
  write_json_file(d / "bad.json", doc);
  const auto bad = run({"verify", d / "bad.json", "--out", d / "bv.json"});
  CHECK(bad.code == kExitVerificationFailed);
  bool consistency_failed = false;
  const auto report = read_json_file(d / "bv.json");
  for (const auto& c : report["checks"])
    if (c["name"] == "consistency") {
      consistency_failed = c["passed"] == false;
      CHECK(c["witness"]["worst_rank"] == 2);
    }
  CHECK(consistency_failed);
}

TEST_CASE("input errors") {
  TempDir d("errors");
  CHECK(run({"forward", d / "missing.json"}).code == kExitInputError);
  CHECK(run({"frobnicate"}).code == kExitInputError);
  CHECK(run({"generate", "--cells", "3"}).code == kExitInputError);

  const auto budget = run({"generate", "--cells", "8", "--particles", "9", "--out",
                           d / "i.json", "--answer", d / "a.json"});
  CHECK(budget.code == kExitInputError);
  CHECK(budget.err.find("134217728") != std::string::npos);

  auto unnorm = ln2_instance();
  unnorm["target"]["values"] = {0.3, 0.3, 0.3};
  write_json_file(d / "u.json", unnorm);
  const auto r = run({"invert", d / "u.json"});
  CHECK(r.code == kExitInputError);
  CHECK(r.err.find("integrate") != std::string::npos);

  auto hole = ln2_instance();
  hole["target"]["values"] = {0.0, 0.25, 0.5};
  write_json_file(d / "h.json", hole);
  CHECK(run({"invert", d / "h.json"}).code == kExitInputError);
  CHECK(run({"invert", d / "h.json", "--method", "simplex"}).code == kExitInputError);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("the executable reports the same exit statuses") {
  TempDir d("binary");
  write_json_file(d / "ln2.json", ln2_instance());
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  const std::string tool = CANON_TOOL;
  CHECK(status(tool + " forward " + (d / "ln2.json")) == 0);
  CHECK(status(tool + " invert " + (d / "ln2.json") + " --max-iters 0") == 2);
  CHECK(status(tool + " forward " + (d / "nope.json")) == 1);
}
