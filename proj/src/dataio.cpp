#include "ptm/dataio.hpp"

#include "ptm/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace ptm {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------- PGM

namespace {

struct PgmReader {
  std::string_view s;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < s.size()) {
      const char c = s[pos];
      if (c == '#') {
        while (pos < s.size() && s[pos] != '\n' && s[pos] != '\r') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space();
    if (pos >= s.size()) throw ParseError(std::string("header ends before ") + what, pos);
    if (!std::isdigit(static_cast<unsigned char>(s[pos]))) throw ParseError(std::string("bad ") + what, pos);
    long v = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      v = v * 10 + (s[pos] - '0');
      if (v > 1'000'000'000) throw ParseError(std::string(what) + " is too large", pos);
      ++pos;
    }
    return v;
  }
};

}  // namespace

Image parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw ParseError("not a PGM file", 0);
  if (bytes[1] != '5') throw ParseError("unsupported PGM magic 'P" + std::string(1, bytes[1]) + "'", 0);
  PgmReader r{bytes, 2};
  const std::size_t header_start = r.pos;
  if (r.pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[r.pos])) && bytes[r.pos] != '#')
    throw ParseError("bad PGM magic", header_start);
  const long w = r.number("width");
  const long h = r.number("height");
  const std::size_t maxval_at = r.pos;
  const long maxval = r.number("maxval");
  if (w < 1 || h < 1) throw ParseError("image has no pixels", maxval_at);
  if (maxval < 1 || maxval > 65535) throw ParseError("maxval out of range", maxval_at);
  if (r.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[r.pos])))
    throw ParseError("missing separator after header", r.pos);
  ++r.pos;

  const std::size_t bpp = maxval < 256 ? 1 : 2;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - r.pos < n * bpp) throw ParseError("truncated pixel data", bytes.size());
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + r.pos);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned k = bpp == 1 ? p[i] : (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1];
    if (k > static_cast<unsigned>(maxval)) throw ParseError("sample exceeds maxval", r.pos + i * bpp);
    v[static_cast<Eigen::Index>(i)] = static_cast<double>(k) / static_cast<double>(maxval);
  }
  return Image(SamplingGrid::centered(static_cast<int>(h), static_cast<int>(w)), std::move(v));
}

Image load_pgm(const std::string& path) { return parse_pgm(read_file(path)); }

std::string encode_pgm(const Image& img, int maxval) {
  if (maxval < 1 || maxval > 65535) throw DomainError("maxval out of range");
  std::string out = "P5\n" + std::to_string(img.grid.cols()) + " " + std::to_string(img.grid.rows()) + "\n" +
                    std::to_string(maxval) + "\n";
  for (Eigen::Index i = 0; i < img.values.size(); ++i) {
    const double c = std::clamp(img.values[i], 0.0, 1.0);
    const auto k = static_cast<unsigned>(std::lround(c * maxval));
    if (maxval > 255) out.push_back(static_cast<char>(k >> 8));
    out.push_back(static_cast<char>(k & 0xFF));
  }
  return out;
}

void save_pgm(const std::string& path, const Image& img, int maxval) { write_file(path, encode_pgm(img, maxval)); }

// ---------------------------------------------------------------- JSON helpers

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd json_vec(const json& a) {
  if (!a.is_array()) throw SchemaError("expected a number array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

json grid_json(const SamplingGrid& g) {
  return {{"origin_x", g.origin_x()}, {"origin_y", g.origin_y()}, {"width", g.width()},
          {"height", g.height()},     {"rows", g.rows()},         {"cols", g.cols()}};
}

SamplingGrid json_grid(const json& j) {
  return SamplingGrid(j.at("origin_x").get<double>(), j.at("origin_y").get<double>(), j.at("width").get<double>(),
                      j.at("height").get<double>(), j.at("rows").get<int>(), j.at("cols").get<int>());
}

json domain_json(const ParamDomain& d) { return {{"lo", vec_json(d.lo())}, {"hi", vec_json(d.hi())}}; }
ParamDomain json_domain(const json& j) { return ParamDomain(json_vec(j.at("lo")), json_vec(j.at("hi"))); }

json mother_json(const MotherFunction& m) { return {{"kind", to_string(m)}, {"mu", m.mu}}; }

MotherFunction json_mother(const json& j) {
  const MotherKind k = mother_kind_from_string(j.at("kind").get<std::string>());
  return k == MotherKind::Gaussian ? MotherFunction::gaussian()
                                   : MotherFunction::inverse_multiquadric(j.at("mu").get<double>());
}

json pattern_json(const Pattern& p) {
  json atoms = json::array();
  for (const Atom& a : p.atoms())
    atoms.push_back({{"psi", a.params.psi()},
                     {"tau_x", a.params.tau_x()},
                     {"tau_y", a.params.tau_y()},
                     {"sigma_x", a.params.sigma_x()},
                     {"sigma_y", a.params.sigma_y()},
                     {"c", a.coefficient}});
  return {{"atoms", atoms}};
}

Pattern json_pattern(const json& j, const MotherFunction& m) {
  Pattern p(m);
  for (const json& a : j.at("atoms")) {
    AtomParams g(a.at("psi").get<double>(), a.at("tau_x").get<double>(), a.at("tau_y").get<double>(),
                 a.at("sigma_x").get<double>(), a.at("sigma_y").get<double>());
    if (!p.add(Atom{g, a.at("c").get<double>()})) throw SchemaError("atom with zero coefficient");
  }
  return p;
}

json lambda_json(const TransformParams& l) {
  return json::array({l.theta(), l.tx(), l.ty(), l.sx(), l.sy()});
}

TransformParams json_lambda(const json& a) {
  if (!a.is_array() || a.size() != 5) throw SchemaError("transform must have five entries");
  return TransformParams(a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>(),
                         a[4].get<double>());
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
}

// Runs `f`, turning library type/key errors into schema errors.
template <class F>
auto with_schema(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schema violation: ") + e.what());
  } catch (const DomainError& e) {
    throw SchemaError(std::string("schema violation: ") + e.what());
  }
}

void check_header(const json& j, const char* kind) {
  if (!j.is_object()) throw SchemaError("top level must be an object");
  if (!j.contains("schema_version")) throw SchemaError("missing schema_version");
  const int v = j.at("schema_version").get<int>();
  if (v != kModelSchemaVersion) throw SchemaError("unsupported schema_version " + std::to_string(v));
  if (kind && j.at("kind").get<std::string>() != kind)
    throw SchemaError(std::string("expected a '") + kind + "' file");
}

}  // namespace

// ---------------------------------------------------------------- manifests

void DatasetManifest::validate() const {
  std::size_t labeled = 0;
  int mx = -1;
  for (const ManifestEntry& e : entries) {
    if (e.values && e.values->size() != grid.size()) throw SchemaError("inline image does not match the grid");
    if (!e.values && e.path.empty()) throw SchemaError("entry has neither a path nor values");
    if (e.label) {
      if (*e.label < 0) throw SchemaError("negative label");
      ++labeled;
      mx = std::max(mx, *e.label);
    }
  }
  if (labeled != 0 && labeled != entries.size()) throw SchemaError("labels must be given for all entries or none");
  if (labeled) {
    std::vector<bool> seen(static_cast<std::size_t>(mx) + 1, false);
    for (const ManifestEntry& e : entries) seen[static_cast<std::size_t>(*e.label)] = true;
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
      throw SchemaError("labels must be contiguous from 0");
  }
}

int DatasetManifest::classes() const {
  int mx = -1;
  for (const ManifestEntry& e : entries)
    if (e.label) mx = std::max(mx, *e.label);
  return mx + 1;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json entries = json::array();
  for (const ManifestEntry& e : m.entries) {
    json je = json::object();
    if (e.values) je["values"] = vec_json(*e.values);
    else je["path"] = e.path;
    if (e.label) je["label"] = *e.label;
    entries.push_back(je);
  }
  json j = {{"schema_version", kModelSchemaVersion},
            {"kind", "dataset"},
            {"grid", grid_json(m.grid)},
            {"normalize", m.normalize},
            {"entries", entries}};
  return j.dump(1) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
  const json j = parse_json(text);
  return with_schema([&] {
    check_header(j, "dataset");
    DatasetManifest m;
    m.grid = json_grid(j.at("grid"));
    m.normalize = j.value("normalize", false);
    for (const json& je : j.at("entries")) {
      ManifestEntry e;
      if (je.contains("values")) e.values = json_vec(je.at("values"));
      else e.path = je.at("path").get<std::string>();
      if (je.contains("label")) e.label = je.at("label").get<int>();
      m.entries.push_back(std::move(e));
    }
    m.validate();
    return m;
  });
}

void save_manifest(const std::string& path, const DatasetManifest& m) { write_file(path, manifest_to_json(m)); }
DatasetManifest load_manifest(const std::string& path) { return manifest_from_json(read_file(path)); }

Image normalized(const Image& u) {
  const double n = u.norm();
  if (!(n > 0.0)) throw DomainError("cannot normalize a zero image");
  return Image(u.grid, u.values / n);
}

std::vector<Image> load_images(const DatasetManifest& m, const std::string& base_dir) {
  m.validate();
  std::vector<Image> out;
  out.reserve(m.entries.size());
  for (const ManifestEntry& e : m.entries) {
    Image u;
    if (e.values) {
      u = Image(m.grid, *e.values);
    } else {
      const std::filesystem::path p = std::filesystem::path(e.path).is_absolute()
                                          ? std::filesystem::path(e.path)
                                          : std::filesystem::path(base_dir) / e.path;
      Image raw = load_pgm(p.string());
      if (raw.grid.rows() != m.grid.rows() || raw.grid.cols() != m.grid.cols())
        throw SchemaError("image '" + e.path + "' does not match the grid");
      u = Image(m.grid, raw.values);
    }
    out.push_back(m.normalize ? normalized(u) : u);
  }
  return out;
}

std::vector<int> manifest_labels(const DatasetManifest& m) {
  std::vector<int> out;
  for (const ManifestEntry& e : m.entries) out.push_back(e.label ? *e.label : 0);
  return out;
}

LabeledSet load_labeled(const DatasetManifest& m, const std::string& base_dir) {
  std::vector<Image> imgs = load_images(m, base_dir);
  const int M = std::max(1, m.classes());
  LabeledSet out(static_cast<std::size_t>(M));
  const std::vector<int> labels = manifest_labels(m);
  for (std::size_t i = 0; i < imgs.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(imgs[i]);
  return out;
}

DatasetManifest manifest_of(const LabeledSet& images, bool with_labels) {
  DatasetManifest m;
  bool first = true;
  for (std::size_t k = 0; k < images.size(); ++k)
    for (const Image& u : images[k]) {
      if (first) m.grid = u.grid;
      first = false;
      ManifestEntry e;
      e.values = u.values;
      if (with_labels) e.label = static_cast<int>(k);
      m.entries.push_back(std::move(e));
    }
  return m;
}

// ---------------------------------------------------------------- synthetic data

void SynthSpec::validate() const {
  if (atoms_per_class.empty()) throw DomainError("at least one class is required");
  for (int a : atoms_per_class)
    if (a < 1) throw DomainError("every planted pattern needs at least one atom");
  if (train_per_class < 1 || test_per_class < 0) throw DomainError("image counts must be positive");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) throw DomainError("noise variance must be >= 0");
  if (signal_power && !(*signal_power > 0.0)) throw DomainError("signal power must be positive");
  if (!lambda_range.empty() && lambda_range.dim() != model_dimension(model))
    throw DomainError("transform range does not match the model");
  if (!gamma_range.empty() && gamma_range.dim() != AtomParams::kDim)
    throw DomainError("atom range must have five dimensions");
}

SynthResult generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&](double lo, double hi) {
    return hi > lo ? std::uniform_real_distribution<double>(lo, hi)(rng) : lo;
  };
  const ParamDomain lam = spec.lambda_range.empty()
                              ? default_transform_domain(spec.model, spec.grid.width(), spec.grid.height())
                              : spec.lambda_range;
  const ParamDomain gam =
      spec.gamma_range.empty() ? default_atom_domain(spec.grid.width(), spec.grid.height()) : spec.gamma_range;
  const std::size_t M = spec.atoms_per_class.size();

  SynthResult out;
  for (std::size_t m = 0; m < M; ++m) {
    Pattern p(spec.mother);
    for (int k = 0; k < spec.atoms_per_class[m]; ++k) {
      Eigen::VectorXd g(AtomParams::kDim);
      for (int d = 0; d < AtomParams::kDim; ++d) g[d] = uniform(gam.lo(d), gam.hi(d));
      const double c = uniform(0.5, 1.5);
      p.add(Atom{AtomParams::from_vector(g), c});
    }
    out.patterns.push_back(std::move(p));
  }

  auto draw_lambdas = [&](int count) {
    std::vector<TransformParams> ls;
    for (int i = 0; i < count; ++i) {
      Eigen::VectorXd v(lam.dim());
      for (int d = 0; d < lam.dim(); ++d) v[d] = uniform(lam.lo(d), lam.hi(d));
      ls.push_back(from_vector(spec.model, v));
    }
    return ls;
  };
  for (std::size_t m = 0; m < M; ++m) out.train_lambda.push_back(draw_lambdas(spec.train_per_class));
  for (std::size_t m = 0; m < M; ++m) out.test_lambda.push_back(draw_lambdas(spec.test_per_class));

  out.train.resize(M);
  out.test.resize(M);
  double power = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < M; ++m) {
    for (const TransformParams& l : out.train_lambda[m]) out.train[m].push_back(render(out.patterns[m], l, spec.grid));
    for (const TransformParams& l : out.test_lambda[m]) out.test[m].push_back(render(out.patterns[m], l, spec.grid));
    for (const auto* set : {&out.train[m], &out.test[m]})
      for (const Image& u : *set) {
        power += u.values.squaredNorm();
        count += static_cast<std::size_t>(u.values.size());
      }
  }
  power /= static_cast<double>(count);

  if (spec.signal_power) {
    const double s = std::sqrt(*spec.signal_power / power);
    for (std::size_t m = 0; m < M; ++m) {
      out.patterns[m] = out.patterns[m].scaled(s);
      for (auto* set : {&out.train[m], &out.test[m]})
        for (Image& u : *set) u.values *= s;
    }
    power *= s * s;
  }
  out.signal_power = power;

  if (spec.noise_variance > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(spec.noise_variance));
    for (auto* sets : {&out.train, &out.test})
      for (auto& cls : *sets)
        for (Image& u : cls)
          for (Eigen::Index i = 0; i < u.values.size(); ++i) u.values[i] += noise(rng);
    out.snr_db = 10.0 * std::log10(power / spec.noise_variance);
  } else {
    out.snr_db = std::numeric_limits<double>::infinity();
  }
  return out;
}

// ---------------------------------------------------------------- models

std::string model_to_json(const LearnedModel& m) {
  json proj = json::array();
  for (const TransformParams& l : m.projections) proj.push_back(lambda_json(l));
  json trace = json::array();
  for (const TracePoint& t : m.error_trace) trace.push_back({{"atoms", t.atoms}, {"normalized_error", t.value}});
  json j = {{"schema_version", kModelSchemaVersion},
            {"kind", "pats"},
            {"mother", mother_json(m.pattern.mother())},
            {"pattern", pattern_json(m.pattern)},
            {"transform_model", to_string(m.model)},
            {"lambda_domain", domain_json(m.lambda_domain)},
            {"grid", grid_json(m.grid)},
            {"projections", proj},
            {"error_trace", trace},
            {"stop", to_string(m.stop)}};
  return j.dump(1) + "\n";
}

LearnedModel learned_model_from_json(std::string_view text) {
  const json j = parse_json(text);
  return with_schema([&] {
    check_header(j, "pats");
    LearnedModel m;
    const MotherFunction mother = json_mother(j.at("mother"));
    m.pattern = json_pattern(j.at("pattern"), mother);
    m.model = transform_model_from_string(j.at("transform_model").get<std::string>());
    m.lambda_domain = json_domain(j.at("lambda_domain"));
    if (m.lambda_domain.dim() != model_dimension(m.model)) throw SchemaError("domain does not match the model");
    m.grid = json_grid(j.at("grid"));
    for (const json& l : j.at("projections")) m.projections.push_back(json_lambda(l));
    for (const json& t : j.at("error_trace"))
      m.error_trace.push_back({t.at("atoms").get<int>(), t.at("normalized_error").get<double>()});
    const std::string stop = j.at("stop").get<std::string>();
    if (stop == "max_atoms") m.stop = PatsStop::MaxAtoms;
    else if (stop == "converged") m.stop = PatsStop::Converged;
    else if (stop == "rejected") m.stop = PatsStop::Rejected;
    else throw SchemaError("unknown stop reason '" + stop + "'");
    return m;
  });
}

std::string class_model_to_json(const ClassModel& m) {
  if (m.patterns.empty()) throw ContractError("class model is empty");
  json patterns = json::array();
  for (const Pattern& p : m.patterns) patterns.push_back(pattern_json(p));
  json lambdas = json::array(), dists = json::array();
  for (std::size_t k = 0; k < m.cross.lambda.size(); ++k) {
    json lk = json::array(), dk = json::array();
    for (std::size_t i = 0; i < m.cross.lambda[k].size(); ++i) {
      json li = json::array();
      for (const TransformParams& l : m.cross.lambda[k][i]) li.push_back(lambda_json(l));
      lk.push_back(li);
      dk.push_back(m.cross.distance[k][i]);
    }
    lambdas.push_back(lk);
    dists.push_back(dk);
  }
  json trace = json::array();
  for (const JpatsTracePoint& t : m.trace)
    trace.push_back({{"iteration", t.iteration}, {"atoms", t.atoms}, {"E_a", t.E_a}, {"E_c", t.E_c},
                     {"E", t.E}, {"alpha", t.alpha}, {"beta", t.beta}});
  json j = {{"schema_version", kModelSchemaVersion},
            {"kind", "jpats"},
            {"mother", mother_json(m.patterns.front().mother())},
            {"patterns", patterns},
            {"transform_model", to_string(m.model)},
            {"lambda_domain", domain_json(m.lambda_domain)},
            {"grid", grid_json(m.grid)},
            {"cross_lambda", lambdas},
            {"cross_distance", dists},
            {"trace", trace},
            {"iterations", m.iterations}};
  return j.dump(1) + "\n";
}

ClassModel class_model_from_json(std::string_view text) {
  const json j = parse_json(text);
  return with_schema([&] {
    check_header(j, "jpats");
    ClassModel m;
    const MotherFunction mother = json_mother(j.at("mother"));
    for (const json& p : j.at("patterns")) m.patterns.push_back(json_pattern(p, mother));
    if (m.patterns.empty()) throw SchemaError("class model has no patterns");
    m.model = transform_model_from_string(j.at("transform_model").get<std::string>());
    m.lambda_domain = json_domain(j.at("lambda_domain"));
    if (m.lambda_domain.dim() != model_dimension(m.model)) throw SchemaError("domain does not match the model");
    m.grid = json_grid(j.at("grid"));
    const json& L = j.at("cross_lambda");
    const json& D = j.at("cross_distance");
    if (L.size() != D.size()) throw SchemaError("cross tables differ in size");
    for (std::size_t k = 0; k < L.size(); ++k) {
      if (L[k].size() != D[k].size()) throw SchemaError("cross tables differ in size");
      m.cross.lambda.emplace_back();
      m.cross.distance.emplace_back();
      for (std::size_t i = 0; i < L[k].size(); ++i) {
        std::vector<TransformParams> li;
        for (const json& l : L[k][i]) li.push_back(json_lambda(l));
        std::vector<double> di = D[k][i].get<std::vector<double>>();
        if (li.size() != m.patterns.size() || di.size() != m.patterns.size())
          throw SchemaError("cross table row has the wrong width");
        m.cross.lambda.back().push_back(std::move(li));
        m.cross.distance.back().push_back(std::move(di));
      }
    }
    for (const json& t : j.at("trace")) {
      JpatsTracePoint p;
      p.iteration = t.at("iteration").get<int>();
      p.atoms = t.at("atoms").get<std::vector<int>>();
      p.E_a = t.at("E_a").get<double>();
      p.E_c = t.at("E_c").get<int>();
      p.E = t.at("E").get<double>();
      p.alpha = t.at("alpha").get<double>();
      p.beta = t.at("beta").get<double>();
      m.trace.push_back(std::move(p));
    }
    m.iterations = j.at("iterations").get<int>();
    return m;
  });
}

void save_model(const std::string& path, const LearnedModel& m) { write_file(path, model_to_json(m)); }
LearnedModel load_model(const std::string& path) { return learned_model_from_json(read_file(path)); }
void save_class_model(const std::string& path, const ClassModel& m) { write_file(path, class_model_to_json(m)); }
ClassModel load_class_model(const std::string& path) { return class_model_from_json(read_file(path)); }

std::string model_kind(std::string_view text) {
  const json j = parse_json(text);
  return with_schema([&] {
    check_header(j, nullptr);
    return j.at("kind").get<std::string>();
  });
}

// ---------------------------------------------------------------- CSV

std::string format_csv(const std::string& header, const std::vector<std::pair<int, double>>& rows) {
  std::string out = header + "\n";
  char buf[64];
  for (const auto& [a, v] : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", a, v);
    out += buf;
  }
  return out;
}

std::vector<std::pair<int, double>> parse_csv(std::string_view text, std::string* header) {
  std::vector<std::pair<int, double>> rows;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line(text.substr(pos, end - pos));
    if (first) {
      if (header) *header = line;
      first = false;
    } else if (!line.empty()) {
      const std::size_t comma = line.find(',');
      if (comma == std::string::npos) throw ParseError("CSV row without a comma", pos);
      try {
        std::size_t used = 0;
        const int a = std::stoi(line.substr(0, comma), &used);
        if (used != comma) throw ParseError("bad atom count", pos);
        const std::string rest = line.substr(comma + 1);
        const double v = std::stod(rest, &used);
        if (used != rest.size()) throw ParseError("bad value", pos + comma + 1);
        rows.emplace_back(a, v);
      } catch (const std::logic_error&) {
        throw ParseError("bad CSV row", pos);
      }
    }
    pos = end + 1;
  }
  if (first) throw ParseError("CSV has no header", 0);
  return rows;
}

std::string error_csv(const std::vector<TracePoint>& trace) {
  std::vector<std::pair<int, double>> rows;
  for (const TracePoint& t : trace) rows.emplace_back(t.atoms, t.value);
  return format_csv(kErrorHeader, rows);
}

std::string misclassification_csv(const ClassModel& m) {
  std::size_t total = 0;
  for (const auto& cls : m.cross.distance) total += cls.size();
  std::vector<std::pair<int, double>> rows;
  for (const JpatsTracePoint& t : m.trace) {
    const int atoms = t.atoms.empty() ? 0 : *std::max_element(t.atoms.begin(), t.atoms.end());
    rows.emplace_back(atoms, total ? 100.0 * t.E_c / static_cast<double>(total) : 0.0);
  }
  return format_csv(kMisclassificationHeader, rows);
}

}  // namespace ptm
