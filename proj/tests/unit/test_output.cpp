#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kamlattice/output.hpp"

using namespace kamlattice;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kamlattice_test_output";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("doubles round-trip through text") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv writer") {
  const auto p = scratch("a.csv");
  {
    CsvWriter w(p, {"n", "R", "S"});
    w.row(std::vector<double>{1.0, 0.25, -3.0});
    w.row(std::vector<std::string>{"2", "x", "y"});
  }
  CHECK(slurp(p) == "n,R,S\n1,0.25,-3\n2,x,y\n");
  CsvWriter w(p, {"a", "b"});
  CHECK_THROWS(w.row(std::vector<double>{1.0}));
  CHECK_THROWS(CsvWriter(scratch("missing_dir/x/y.csv").parent_path() / "nope" / "z.csv", {"a"}));
}

TEST_CASE("sha-256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto p = scratch("abc.txt");
  write_text(p, "abc");
  CHECK(sha256_file(p) == sha256_hex("abc"));
}

TEST_CASE("svg is well formed and deterministic") {
  SvgPlot plot;
  plot.title = "R < S & more";
  plot.x_min = -1.0;
  plot.x_max = 1.0;
  plot.series.push_back({{{0.0, 0.5}, {0.2, 0.7}}, "#000000", false, 1.0, "dots"});
  plot.series.push_back({{{0.0, 0.0}, {1.0, 1.0}}, "#ff0000", true, 1.0, "line"});
  const auto a = render_svg(plot);
  CHECK(a == render_svg(plot));
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  CHECK(a.find("R &lt; S &amp; more") != std::string::npos);
  CHECK(a.find("<circle") != std::string::npos);
  CHECK(a.find("<polyline") != std::string::npos);
}

TEST_CASE("manifest lists outputs with hashes") {
  const auto out = scratch("data.csv");
  write_text(out, "n,R,S\n");
  Manifest m("simulate", {{"n", 10}}, 42);
  m.add_output(out, "csv");
  m.set_status("ok");
  const auto mp = scratch("manifest.json");
  m.write(mp);
  const auto j = nlohmann::json::parse(slurp(mp));
  CHECK(j["schema"] == kManifestSchema);
  CHECK(j["version"] == kVersion);
  CHECK(j["command"] == "simulate");
  CHECK(j["seed"] == 42);
  CHECK(j["config"]["n"] == 10);
  CHECK(j["status"] == "ok");
  REQUIRE(j["outputs"].size() == 1);
  CHECK(j["outputs"][0]["path"] == "data.csv");
  CHECK(j["outputs"][0]["kind"] == "csv");
  CHECK(j["outputs"][0]["sha256"] == sha256_hex("n,R,S\n"));
  CHECK(j["outputs"][0]["bytes"] == 6);
}
