#include "ptm/cli.hpp"

#include "ptm/dataio.hpp"
#include "ptm/error.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <set>

namespace ptm {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const std::set<std::string> kKeys = {
    "seed",          "max_atoms",       "model",           "mother",         "mu",
    "alpha_start",   "alpha_end",       "alpha_center",    "alpha_slope",    "threshold",
    "out_dir",       "tol_e",           "coarse_points",   "coef_significance", "beta",
    "lambda_domain", "gamma_domain",    "c_range",         "reference",      "rows",
    "cols",          "atoms_per_class", "train_per_class", "test_per_class", "noise_variance",
    "signal_power",  "lambda_range",    "gamma_range",     "normalize",      "dc_max_iters",
    "gd_max_iters"};

json defaults() {
  return {{"seed", 0},
          {"max_atoms", 15},
          {"model", "full5"},
          {"mother", "gaussian"},
          {"mu", -3.0},
          {"alpha_start", 0.5},
          {"alpha_end", 10.0},
          {"alpha_center", 6.0},
          {"alpha_slope", 1.0},
          {"out_dir", "."},
          {"tol_e", 1e-3},
          {"coarse_points", 5},
          {"coef_significance", 0.05},
          {"reference", "nearest"},
          {"rows", 32},
          {"cols", 32},
          {"atoms_per_class", json::array({10})},
          {"train_per_class", 50},
          {"test_per_class", 0},
          {"noise_variance", 0.0},
          {"normalize", false},
          {"dc_max_iters", PatsConfig{}.dc_options.max_iters},
          {"gd_max_iters", PatsConfig{}.gd_options.max_iters}};
}

ParamDomain domain_of(const json& j) {
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto hi = j.at("hi").get<std::vector<double>>();
  return ParamDomain(Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                     Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size())));
}

MotherFunction mother_of(const json& c) {
  const MotherKind k = mother_kind_from_string(c.at("mother").get<std::string>());
  return k == MotherKind::Gaussian ? MotherFunction::gaussian()
                                   : MotherFunction::inverse_multiquadric(c.at("mu").get<double>());
}

PatsConfig pats_config(const json& c) {
  PatsConfig p;
  p.max_atoms = c.at("max_atoms").get<int>();
  p.model = transform_model_from_string(c.at("model").get<std::string>());
  p.mother = mother_of(c);
  p.tol_E = c.at("tol_e").get<double>();
  p.coarse_points = c.at("coarse_points").get<int>();
  p.dc_options.max_iters = c.at("dc_max_iters").get<int>();
  p.gd_options.max_iters = c.at("gd_max_iters").get<int>();
  if (c.contains("lambda_domain")) p.lambda_domain = domain_of(c.at("lambda_domain"));
  if (c.contains("gamma_domain")) p.gamma_domain = domain_of(c.at("gamma_domain"));
  if (c.contains("c_range")) {
    const auto r = c.at("c_range").get<std::vector<double>>();
    if (r.size() != 2) throw DomainError("c_range needs two values");
    p.c_range = std::make_pair(r[0], r[1]);
  }
  const json& ref = c.at("reference");
  if (ref.is_number_integer()) {
    p.reference = {ReferenceKind::Index, ref.get<int>()};
  } else {
    const std::string r = ref.get<std::string>();
    if (r == "nearest") p.reference.kind = ReferenceKind::CentroidNearest;
    else if (r == "farthest") p.reference.kind = ReferenceKind::CentroidFarthest;
    else throw DomainError("reference must be 'nearest', 'farthest' or an index");
  }
  p.validate();
  return p;
}

JpatsConfig jpats_config(const json& c) {
  JpatsConfig j;
  j.base = pats_config(c);
  j.alpha.start = c.at("alpha_start").get<double>();
  j.alpha.end = c.at("alpha_end").get<double>();
  j.alpha.center = c.at("alpha_center").get<double>();
  j.alpha.slope = c.at("alpha_slope").get<double>();
  j.coef_significance = c.at("coef_significance").get<double>();
  if (c.contains("beta")) j.beta = {BetaKind::Fixed, c.at("beta").get<double>()};
  j.validate();
  return j;
}

SynthSpec synth_spec(const json& c) {
  SynthSpec s;
  s.grid = SamplingGrid::centered(c.at("rows").get<int>(), c.at("cols").get<int>());
  s.mother = mother_of(c);
  s.atoms_per_class = c.at("atoms_per_class").get<std::vector<int>>();
  s.train_per_class = c.at("train_per_class").get<int>();
  s.test_per_class = c.at("test_per_class").get<int>();
  s.model = transform_model_from_string(c.at("model").get<std::string>());
  if (c.contains("lambda_range")) s.lambda_range = domain_of(c.at("lambda_range"));
  if (c.contains("gamma_range")) s.gamma_range = domain_of(c.at("gamma_range"));
  s.noise_variance = c.at("noise_variance").get<double>();
  if (c.contains("signal_power")) s.signal_power = c.at("signal_power").get<double>();
  s.seed = c.at("seed").get<std::uint64_t>();
  s.validate();
  return s;
}

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  int max_atoms = 0;
  std::string model, mother;
  double mu = 0, alpha_start = 0, alpha_end = 0, alpha_center = 0, threshold = 0;
  std::string out_dir;
  std::vector<CLI::Option*> opts;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON file with option values")->check(CLI::ExistingFile);
  f.opts.push_back(sub->add_option("--seed", f.seed, "random seed"));
  f.opts.push_back(sub->add_option("--max-atoms", f.max_atoms, "atoms per pattern"));
  f.opts.push_back(sub->add_option("--model", f.model, "full5|translate2|scale2|sim4"));
  f.opts.push_back(sub->add_option("--mother", f.mother, "gaussian|imq"));
  f.opts.push_back(sub->add_option("--mu", f.mu, "exponent of the imq mother function"));
  f.opts.push_back(sub->add_option("--alpha-start", f.alpha_start, "initial classification weight"));
  f.opts.push_back(sub->add_option("--alpha-end", f.alpha_end, "final classification weight"));
  f.opts.push_back(sub->add_option("--alpha-center", f.alpha_center, "iteration of the weight midpoint"));
  f.opts.push_back(sub->add_option("--threshold", f.threshold, "outlier distance threshold"));
  f.opts.push_back(sub->add_option("--out-dir", f.out_dir, "output directory"));
}

json resolve(const Flags& f) {
  json c = defaults();
  if (!f.config.empty()) {
    json file;
    try {
      file = json::parse(read_file(f.config));
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid config: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
    }
    if (!file.is_object()) throw SchemaError("config must be a JSON object");
    for (auto it = file.begin(); it != file.end(); ++it) {
      if (!kKeys.count(it.key())) throw DomainError("unknown config key '" + it.key() + "'");
      c[it.key()] = it.value();
    }
  }
  auto given = [&](const char* name) {
    for (CLI::Option* o : f.opts)
      if (o->check_lname(name) && o->count() > 0) return true;
    return false;
  };
  if (given("seed")) c["seed"] = f.seed;
  if (given("max-atoms")) c["max_atoms"] = f.max_atoms;
  if (given("model")) c["model"] = f.model;
  if (given("mother")) c["mother"] = f.mother;
  if (given("mu")) c["mu"] = f.mu;
  if (given("alpha-start")) c["alpha_start"] = f.alpha_start;
  if (given("alpha-end")) c["alpha_end"] = f.alpha_end;
  if (given("alpha-center")) c["alpha_center"] = f.alpha_center;
  if (given("threshold")) c["threshold"] = f.threshold;
  if (given("out-dir")) c["out_dir"] = f.out_dir;
  return c;
}

std::string out_path(const json& c, const std::string& name) {
  const fs::path dir = c.at("out_dir").get<std::string>();
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string base_dir(const std::string& path) {
  fs::path p = fs::path(path).parent_path();
  return p.empty() ? "." : p.string();
}

json lambda_out(const TransformParams& l, double distance) {
  return {{"theta", l.theta()}, {"tx", l.tx()}, {"ty", l.ty()}, {"sx", l.sx()}, {"sy", l.sy()}, {"distance", distance}};
}

json pattern_out(const Pattern& p) {
  json atoms = json::array();
  for (const Atom& a : p.atoms())
    atoms.push_back(json::array({a.params.psi(), a.params.tau_x(), a.params.tau_y(), a.params.sigma_x(),
                                 a.params.sigma_y(), a.coefficient}));
  return atoms;
}

int cmd_synth(const json& c, std::ostream& out) {
  const SynthSpec spec = synth_spec(c);
  const SynthResult r = generate_synthetic(spec);
  DatasetManifest train = manifest_of(r.train, spec.atoms_per_class.size() > 1);
  train.normalize = c.at("normalize").get<bool>();
  save_manifest(out_path(c, "train.json"), train);
  if (spec.test_per_class > 0) {
    DatasetManifest test = manifest_of(r.test, spec.atoms_per_class.size() > 1);
    test.normalize = train.normalize;
    save_manifest(out_path(c, "test.json"), test);
  }
  json truth = {{"schema_version", kModelSchemaVersion}, {"kind", "truth"}, {"mother", to_string(spec.mother)},
                {"patterns", json::array()}, {"train_lambda", json::array()}, {"test_lambda", json::array()}};
  for (const Pattern& p : r.patterns) truth["patterns"].push_back(pattern_out(p));
  for (const auto& ls : r.train_lambda) {
    json a = json::array();
    for (const TransformParams& l : ls) a.push_back(json::array({l.theta(), l.tx(), l.ty(), l.sx(), l.sy()}));
    truth["train_lambda"].push_back(a);
  }
  for (const auto& ls : r.test_lambda) {
    json a = json::array();
    for (const TransformParams& l : ls) a.push_back(json::array({l.theta(), l.tx(), l.ty(), l.sx(), l.sy()}));
    truth["test_lambda"].push_back(a);
  }
  write_file(out_path(c, "truth.json"), truth.dump(1) + "\n");
  json summary = {{"signal_power", r.signal_power}, {"snr_db", std::isfinite(r.snr_db) ? json(r.snr_db) : json()}};
  out << summary.dump() << "\n";
  return kExitOk;
}

int cmd_learn(const json& c, const std::string& dataset, std::ostream& out, std::ostream& err) {
  const PatsConfig cfg = pats_config(c);
  const DatasetManifest man = load_manifest(dataset);
  const std::vector<Image> images = load_images(man, base_dir(dataset));
  PatsHooks hooks;
  hooks.progress = [&](const std::string& s) { err << s << "\n"; };
  const LearnedModel m = run_pats(images, cfg, hooks);
  for (std::size_t i = 1; i < m.error_trace.size(); ++i)
    if (m.error_trace[i].value > m.error_trace[i - 1].value)
      throw NumericalError("accepted error increased at iteration " + std::to_string(i));
  save_model(out_path(c, "model.json"), m);
  write_file(out_path(c, "error.csv"), error_csv(m.error_trace));
  out << json{{"atoms", m.pattern.size()},
              {"normalized_error", m.error_trace.back().value},
              {"stop", to_string(m.stop)}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_learn_multi(const json& c, const std::string& dataset, std::ostream& out, std::ostream& err) {
  const JpatsConfig cfg = jpats_config(c);
  const DatasetManifest man = load_manifest(dataset);
  if (man.classes() < 2) throw DomainError("the dataset needs labels of at least two classes");
  const LabeledSet images = load_labeled(man, base_dir(dataset));
  JpatsHooks hooks;
  hooks.progress = [&](const std::string& s) { err << s << "\n"; };
  const ClassModel m = run_jpats(images, cfg, hooks);
  for (std::size_t i = 1; i < m.trace.size(); ++i)
    if (m.trace[i].E_c > m.trace[i - 1].E_c)
      throw NumericalError("accepted classification error increased at iteration " + std::to_string(i));
  save_class_model(out_path(c, "class_model.json"), m);
  write_file(out_path(c, "misclassification.csv"), misclassification_csv(m));

  double total = 0.0;
  for (const auto& cls : images)
    for (const Image& u : cls) total += u.values.squaredNorm();
  std::vector<TracePoint> approx;
  for (const JpatsTracePoint& t : m.trace)
    approx.push_back({*std::max_element(t.atoms.begin(), t.atoms.end()), total > 0 ? t.E_a / total : 0.0});
  write_file(out_path(c, "error.csv"), error_csv(approx));

  json atoms = json::array();
  for (const Pattern& p : m.patterns) atoms.push_back(p.size());
  out << json{{"atoms", atoms}, {"misclassified", m.trace.back().E_c}, {"iterations", m.iterations}}.dump() << "\n";
  return kExitOk;
}

std::vector<Image> inputs(const std::string& path, const SamplingGrid& grid) {
  std::vector<Image> raw;
  if (fs::path(path).extension() == ".json") {
    const DatasetManifest man = load_manifest(path);
    raw = load_images(man, base_dir(path));
  } else {
    raw.push_back(load_pgm(path));
  }
  std::vector<Image> out;
  for (const Image& u : raw) {
    if (u.grid.rows() != grid.rows() || u.grid.cols() != grid.cols())
      throw SchemaError("image size does not match the model grid");
    out.emplace_back(grid, u.values);
  }
  return out;
}

int cmd_project(const std::string& model_path, const std::string& image_path, std::ostream& out) {
  const std::string text = read_file(model_path);
  const std::string kind = model_kind(text);
  json result = json::array();
  if (kind == "pats") {
    const LearnedModel m = learned_model_from_json(text);
    for (const Image& u : inputs(image_path, m.grid)) {
      const Projection p = project(u, m.pattern, m.model, m.lambda_domain);
      result.push_back(lambda_out(p.lambda, p.distance));
    }
  } else if (kind == "jpats") {
    const ClassModel m = class_model_from_json(text);
    for (const Image& u : inputs(image_path, m.grid)) {
      json per_class = json::array();
      for (const Pattern& pat : m.patterns) {
        const Projection p = project(u, pat, m.model, m.lambda_domain);
        per_class.push_back(lambda_out(p.lambda, p.distance));
      }
      result.push_back(per_class);
    }
  } else {
    throw SchemaError("'" + model_path + "' is not a model file");
  }
  out << result.dump() << "\n";
  return kExitOk;
}

int cmd_classify(const json& c, const std::string& model_path, const std::string& dataset, std::ostream& out) {
  const ClassModel m = load_class_model(model_path);
  const DatasetManifest man = load_manifest(dataset);
  std::vector<Image> images;
  for (const Image& u : load_images(man, base_dir(dataset))) {
    if (u.grid.rows() != m.grid.rows() || u.grid.cols() != m.grid.cols())
      throw SchemaError("image size does not match the model grid");
    images.emplace_back(m.grid, u.values);
  }
  std::optional<double> threshold;
  if (c.contains("threshold")) threshold = c.at("threshold").get<double>();
  const std::vector<Classification> res = classify_all(images, m, threshold);
  const bool labeled = man.classes() > 0;
  const std::vector<int> truth = manifest_labels(man);
  json preds = json::array();
  std::size_t wrong = 0, outliers = 0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    json p = {{"index", i}, {"predicted", res[i].label == kOutlier ? json("outlier") : json(res[i].label)},
              {"distances", res[i].distances}};
    if (labeled) p["label"] = truth[i];
    if (res[i].label == kOutlier) ++outliers;
    if (labeled && res[i].label != truth[i]) ++wrong;
    preds.push_back(p);
  }
  const double n = res.empty() ? 1.0 : static_cast<double>(res.size());
  json summary = {{"predictions", preds}, {"outlier_pct", 100.0 * outliers / n}};
  if (labeled) summary["misclassification_pct"] = 100.0 * wrong / n;
  out << summary.dump() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pattern transformation manifold learning", "ptm"};
  app.require_subcommand(1);
  Flags f;
  std::string dataset, model_path, image_path;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, f);
  CLI::App* learn = app.add_subcommand("learn", "learn one manifold from a dataset");
  add_common(learn, f);
  learn->add_option("dataset", dataset, "dataset manifest")->required();
  CLI::App* multi = app.add_subcommand("learn-multi", "learn one manifold per class");
  add_common(multi, f);
  multi->add_option("dataset", dataset, "labeled dataset manifest")->required();
  CLI::App* proj = app.add_subcommand("project", "project images onto a learned manifold");
  add_common(proj, f);
  proj->add_option("model_file", model_path, "model file")->required();
  proj->add_option("image", image_path, "PGM image or dataset manifest")->required();
  CLI::App* cls = app.add_subcommand("classify", "classify a dataset with a class model");
  add_common(cls, f);
  cls->add_option("model_file", model_path, "class model file")->required();
  cls->add_option("dataset", dataset, "dataset manifest")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const json c = resolve(f);
    err << "config: " << c.dump() << "\n";
    if (synth->parsed()) return cmd_synth(c, out);
    if (learn->parsed()) return cmd_learn(c, dataset, out, err);
    if (multi->parsed()) return cmd_learn_multi(c, dataset, out, err);
    if (proj->parsed()) return cmd_project(model_path, image_path, out);
    if (cls->parsed()) return cmd_classify(c, model_path, dataset, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    err << "error: bad option value: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  }
  return kExitUsage;
}

}  // namespace ptm
