#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "haar/cli.hpp"
#include "json.hpp"

namespace {

using json = nlohmann::json;

std::string data(const std::string& name) { return std::string(HAAR_TEST_DATA) + "/" + name; }

struct Result {
  int code;
  std::string out;
  std::string err;
  json report() const { return json::parse(out); }
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "haar");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = haar::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "haar_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

TEST_CASE("pressure on G4") {
  const Result r = run({"pressure", "--groupoid", data("g4.json"), "--potential", data("u.json")});
  REQUIRE(r.code == 0);
  const json j = r.report();
  CHECK(std::abs(j["value"].get<double>() - 1.098612) <= 1e-6);
  CHECK(j["argmax_classes"] == json::array({"C1"}));
  CHECK(j["outputs"]["pressure"]["provenance"] == "closed_form");
  CHECK(j["diagnostics"]["seed"] == haar::cli::kDefaultSeed);
  CHECK(j["inputs"][0]["sha256"].get<std::string>().size() == 64);
}

TEST_CASE("entropy on G4 from delta:p1") {
  const Result r = run({"entropy", "--groupoid", data("g4.json"), "--potential", data("u.json"),
                        "--seed-measure", "delta:p1"});
  REQUIRE(r.code == 0);
  CHECK(std::abs(r.report()["value"].get<double>() - (-0.056633)) <= 1e-6);
}

TEST_CASE("verify quasi on the negative control exits 2 with the worst pair") {
  const Result r = run({"verify", "quasi", "--groupoid", data("g4.json"), "--measure", data("bad.json"),
                        "--modular", data("v.json")});
  CHECK(r.code == 2);
  const json j = r.report();
  CHECK(j["status"] == "failed");
  CHECK(j["failure"].get<std::string>().find("quasi") != std::string::npos);
  CHECK(j.dump().find("p2") != std::string::npos);
  CHECK(j.dump().find("p1") != std::string::npos);
}

TEST_CASE("reports are byte-identical for identical inputs and seed") {
  const std::vector<std::string> args{"entropy", "--groupoid", data("g4.json"), "--potential",
                                      data("u.json"), "--samples", "50", "--seed", "7"};
  const Result a = run(args);
  const Result b = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.report()["diagnostics"]["seed"] == 7);
}

TEST_CASE("equilibrium output feeds verify haar") {
  const Result eq = run({"equilibrium", "--groupoid", data("g4.json"), "--potential", data("u.json")});
  REQUIRE(eq.code == 0);
  const auto path = scratch("equilibrium.json");
  write(path, eq.out);
  const Result v = run({"verify", "haar", "--groupoid", data("g4.json"), "--measure", path.string(),
                        "--potential", path.string()});
  CHECK(v.code == 0);
  CHECK(v.report()["status"] == "ok");

  const Result n = run({"normalize", "--groupoid", data("g4.json"), "--potential", data("u.json")});
  REQUIRE(n.code == 0);
  const auto vpath = scratch("normalized.json");
  write(vpath, n.out);
  const Result inv = run({"invariant", "--groupoid", data("g4.json"), "--potential", vpath.string(),
                          "--seed-measure", "uniform"});
  REQUIRE(inv.code == 0);
  const auto mpath = scratch("invariant.json");
  write(mpath, inv.out);
  CHECK(run({"verify", "quasi", "--groupoid", data("g4.json"), "--measure", mpath.string(), "--modular",
             vpath.string()})
            .code == 0);
}

TEST_CASE("every verb runs on the fixtures") {
  const std::string g = data("g4.json"), u = data("u.json"), v = data("v.json");
  const std::vector<std::vector<std::string>> ok{
      {"normalize", "--groupoid", g, "--potential", u},
      {"verify", "saturation", "--groupoid", g, "--measure", data("bad.json")},
      {"lambda", "eval", "--groupoid", g, "--potential", v, "--measure", data("m.json"), "--nu",
       data("nu.json")},
      {"lambda", "coco-check", "--groupoid", g, "--potential", v, "--measure", data("m.json"), "--nu",
       data("nu.json")},
      {"pressure", "--groupoid", g, "--nu", data("nu.json")},
      {"involution-check", "--groupoid", g, "--potential", v, "--measure", data("m.json")},
      {"lambda", "roundtrip", "--groupoid", g, "--potential", v, "--measure", data("m.json")},
      {"extremal", "--groupoid", data("pair.json"), "--potential", data("pair_u.json"), "--case", "pair"},
      {"xy", "eigen", "--xy", data("xy.json"), "--depth", "3"},
      {"xy", "limit-quotient", "--xy", data("xy.json"), "--function", data("h.json"), "--iters", "60"},
      {"xy", "normalize", "--xy", data("xy.json")},
      {"xy", "verify-quasi", "--xy", data("xy.json")},
      {"dyn", "disintegrate", "--map", data("shift_map.json"), "--measure", data("shift_measure.json")},
      {"dyn", "jacobian", "--markov", data("markov.json")},
      {"dyn", "jacobian", "--map", data("shift_map.json"), "--measure", data("shift_measure.json")},
      {"dyn", "ks-entropy", "--markov", data("markov.json")},
  };
  for (const auto& args : ok) {
    const Result r = run(args);
    INFO(args[0] << " " << args[1]);
    INFO(r.err);
    CHECK(r.code == 0);
  }
  // bad.json is not Haar-invariant for V.
  CHECK(run({"lambda", "roundtrip", "--groupoid", g, "--potential", v, "--measure", data("bad.json")}).code ==
        2);
}

TEST_CASE("ks-entropy value and xy unit-delta control") {
  const Result ks = run({"dyn", "ks-entropy", "--markov", data("markov.json")});
  REQUIRE(ks.code == 0);
  CHECK(std::abs(ks.report()["value"].get<double>() - 0.386427) <= 1e-6);
  const Result unit = run({"xy", "verify-quasi", "--xy", data("xy.json"), "--delta", "unit"});
  CHECK(unit.code == 2);
}

TEST_CASE("csv format") {
  const Result r =
      run({"pressure", "--groupoid", data("g4.json"), "--potential", data("u.json"), "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("key,value\n", 0) == 0);
  CHECK(r.out.find("\nvalue,1.0986122886681098\n") != std::string::npos);
}

TEST_CASE("usage and input errors exit 1") {
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"pressure", "--groupoid", data("g4.json"), "--potential", data("u.json"), "--bogus"}).code == 1);
  CHECK(run({"pressure", "--groupoid", data("missing.json"), "--potential", data("u.json")}).code == 1);
  CHECK(run({"pressure", "--groupoid", data("g4.json")}).code == 1);
  CHECK(run({"entropy", "--groupoid", data("g4.json"), "--potential", data("u.json"), "--seed-measure",
             "delta:nowhere"})
            .code == 1);
  const auto broken = scratch("broken.json");
  write(broken, "{\"points\": [");
  CHECK(run({"normalize", "--groupoid", broken.string(), "--potential", data("u.json")}).code == 1);
  const Result help = run({"frobnicate"});
  CHECK_FALSE(help.err.empty());
}
