#include <doctest.h>

#include "ptm/cli.hpp"
#include "ptm/dataio.hpp"

#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace ptm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("ptm_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Small, fast settings shared by the end-to-end cases.
std::string write_config(const fs::path& dir, const json& extra = json::object()) {
  json c = {{"rows", 16},           {"cols", 16},        {"model", "translate2"}, {"atoms_per_class", {2}},
            {"train_per_class", 6}, {"max_atoms", 2},    {"coarse_points", 4},    {"dc_max_iters", 2},
            {"gd_max_iters", 10},   {"seed", 5}};
  c.update(extra);
  const std::string path = (dir / "config.json").string();
  write_file(path, c.dump());
  return path;
}

}  // namespace

TEST_CASE("synth, learn and project") {
  const fs::path d = scratch_dir("learn");
  const std::string cfg = write_config(d);
  Run r = cli({"synth", "--config", cfg, "--out-dir", d.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(d / "train.json"));
  CHECK(fs::exists(d / "truth.json"));
  CHECK(json::parse(r.out).at("snr_db").is_null());

  r = cli({"learn", (d / "train.json").string(), "--config", cfg, "--out-dir", (d / "a").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("config: ") != std::string::npos);
  const LearnedModel m = load_model((d / "a" / "model.json").string());
  CHECK(m.pattern.size() >= 1);
  const auto rows = parse_csv(read_file((d / "a" / "error.csv").string()));
  CHECK(rows.size() == m.error_trace.size());

  // Same inputs, same bytes.
  r = cli({"learn", (d / "train.json").string(), "--config", cfg, "--out-dir", (d / "b").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(read_file((d / "a" / "model.json").string()) == read_file((d / "b" / "model.json").string()));
  CHECK(read_file((d / "a" / "error.csv").string()) == read_file((d / "b" / "error.csv").string()));

  // An image rendered from the model lies on its manifold.
  const Image u = render(m.pattern, TransformParams(0, 0.7, -1.2, 1, 1), m.grid);
  save_manifest((d / "img.json").string(), manifest_of({{u}}, false));
  r = cli({"project", (d / "a" / "model.json").string(), (d / "img.json").string()});
  REQUIRE(r.code == kExitOk);
  const json p = json::parse(r.out);
  REQUIRE(p.size() == 1);
  CHECK(p[0].at("distance").get<double>() < 1e-4 * u.norm());

  // Flags win over the config file, and the resolved value is logged.
  r = cli({"learn", (d / "train.json").string(), "--config", cfg, "--max-atoms", "1", "--out-dir",
           (d / "c").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("\"max_atoms\":1") != std::string::npos);
  CHECK(load_model((d / "c" / "model.json").string()).pattern.size() <= 1);
}

TEST_CASE("learn-multi and classify") {
  const fs::path d = scratch_dir("multi");
  const std::string cfg = write_config(d, {{"atoms_per_class", {1, 1}}, {"train_per_class", 4},
                                           {"test_per_class", 3}, {"max_atoms", 1}});
  REQUIRE(cli({"synth", "--config", cfg, "--out-dir", d.string()}).code == kExitOk);
  Run r = cli({"learn-multi", (d / "train.json").string(), "--config", cfg, "--out-dir", d.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(d / "misclassification.csv"));
  CHECK(fs::exists(d / "error.csv"));

  r = cli({"classify", (d / "class_model.json").string(), (d / "test.json").string(), "--threshold", "0"});
  REQUIRE(r.code == kExitOk);
  const json s = json::parse(r.out);
  CHECK(s.at("outlier_pct").get<double>() == 100.0);
  CHECK(s.at("predictions").size() == 6);
  for (const json& p : s.at("predictions")) CHECK(p.at("predicted") == "outlier");

  r = cli({"classify", (d / "class_model.json").string(), (d / "test.json").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(json::parse(r.out).at("outlier_pct").get<double>() == 0.0);

  r = cli({"project", (d / "class_model.json").string(), (d / "test.json").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(json::parse(r.out).at(0).size() == 2);

  // A single-pattern model cannot classify.
  r = cli({"learn-multi", (d / "train.json").string(), "--config", cfg, "--max-atoms", "0"});
  CHECK(r.code == kExitUsage);
}

TEST_CASE("exit codes") {
  const fs::path d = scratch_dir("codes");
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"learn"}).code == kExitUsage);
  CHECK(cli({"learn", "x.json", "--bogus"}).code == kExitUsage);
  CHECK(cli({"learn", "x.json", "--model", "affine"}).code == kExitUsage);
  CHECK(cli({"learn", (d / "missing.json").string()}).code == kExitParse);
  CHECK(cli({"learn", "x.json", "--config", (d / "missing.json").string()}).code == kExitUsage);

  write_file((d / "broken.json").string(), "{\"kind\": ");
  CHECK(cli({"learn", (d / "broken.json").string()}).code == kExitParse);
  CHECK(cli({"project", (d / "broken.json").string(), "img.pgm"}).code == kExitParse);

  write_file((d / "unknown.json").string(), "{\"max_atom\": 3}");
  const Run r = cli({"synth", "--config", (d / "unknown.json").string(), "--out-dir", d.string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("max_atom") != std::string::npos);

  write_file((d / "bad.pgm").string(), "P2\n1 1\n255\n0\n");
  write_file((d / "model.json").string(), model_to_json(LearnedModel{Pattern(MotherFunction::gaussian()),
                                                                     TransformModel::Translate2,
                                                                     default_transform_domain(TransformModel::Translate2, 1, 1),
                                                                     SamplingGrid::centered(1, 1),
                                                                     {}, {{0, 1.0}}, PatsStop::MaxAtoms, {}}));
  CHECK(cli({"project", (d / "model.json").string(), (d / "bad.pgm").string()}).code == kExitParse);
  CHECK(cli({"--help"}).code == kExitOk);
}
