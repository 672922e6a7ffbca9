// YAML case files. Every key is optional when `base:` names a builtin case;
// otherwise beam, parameters and data.frequencies_hz are required.

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "beamupdate/errors.hpp"
#include "beamupdate/harness.hpp"

namespace beamupdate {

namespace {

int line_of(const YAML::Node& n) {
  const auto mark = n.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const YAML::Node& map, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!map.IsMap()) throw ConfigError(path.empty() ? "<document>" : path, line_of(map), "expected a mapping");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!ok.contains(key)) throw ConfigError(join(path, key), line_of(kv.first), "unknown key");
  }
}

template <class T>
T convert(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(key, line_of(node), "expected a scalar value");
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    throw ConfigError(key, line_of(node), "malformed value '" + node.Scalar() + "'");
  }
}

template <class T>
T required(const YAML::Node& map, const char* key, const std::string& path) {
  const YAML::Node n = map[key];
  if (!n) throw ConfigError(join(path, key), line_of(map), "missing required key");
  return convert<T>(n, join(path, key));
}

template <class T>
void optional_into(const YAML::Node& map, const char* key, const std::string& path, T& target) {
  if (const YAML::Node n = map[key]) target = convert<T>(n, join(path, key));
}

// Scalar or sequence of numbers.
std::vector<double> number_list(const YAML::Node& node, const std::string& key) {
  if (node.IsScalar()) return {convert<double>(node, key)};
  if (!node.IsSequence()) throw ConfigError(key, line_of(node), "expected a number or a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(convert<double>(node[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

void require_positive(double v, const YAML::Node& map, const char* key, const std::string& path) {
  if (!(v > 0.0)) throw ConfigError(join(path, key), line_of(map[key] ? map[key] : map), "must be > 0");
}

void parse_beam(const YAML::Node& node, bool have_base, BeamModel& beam) {
  const std::string path = "beam";
  check_keys(node, path,
             {"length", "width", "thickness", "youngs_modulus", "poisson_ratio", "density", "n_elements", "clamped",
              "point_masses"});
  if (!have_base) {
    beam.length = required<double>(node, "length", path);
    beam.width = required<double>(node, "width", path);
    beam.thickness = required<double>(node, "thickness", path);
    beam.youngs_modulus_nominal = required<double>(node, "youngs_modulus", path);
    beam.density = required<double>(node, "density", path);
    beam.n_elements = required<int>(node, "n_elements", path);
  } else {
    optional_into(node, "length", path, beam.length);
    optional_into(node, "width", path, beam.width);
    optional_into(node, "thickness", path, beam.thickness);
    optional_into(node, "youngs_modulus", path, beam.youngs_modulus_nominal);
    optional_into(node, "density", path, beam.density);
    optional_into(node, "n_elements", path, beam.n_elements);
  }
  optional_into(node, "poisson_ratio", path, beam.poisson_ratio);
  optional_into(node, "clamped", path, beam.clamped_end);
  require_positive(beam.length, node, "length", path);
  require_positive(beam.width, node, "width", path);
  require_positive(beam.thickness, node, "thickness", path);
  require_positive(beam.youngs_modulus_nominal, node, "youngs_modulus", path);
  require_positive(beam.density, node, "density", path);
  if (beam.n_elements < 1) throw ConfigError("beam.n_elements", line_of(node), "must be >= 1");

  if (const YAML::Node pms = node["point_masses"]) {
    if (!pms.IsSequence()) throw ConfigError("beam.point_masses", line_of(pms), "expected a list");
    beam.point_masses.clear();
    for (std::size_t i = 0; i < pms.size(); ++i) {
      const std::string p = "beam.point_masses[" + std::to_string(i) + "]";
      check_keys(pms[i], p, {"position", "mass"});
      PointMass pm{required<double>(pms[i], "position", p), required<double>(pms[i], "mass", p)};
      if (!(pm.position >= 0.0 && pm.position <= beam.length)) {
        throw ConfigError(p + ".position", line_of(pms[i]), "must lie in [0, beam.length]");
      }
      if (!(pm.mass >= 0.0)) throw ConfigError(p + ".mass", line_of(pms[i]), "must be >= 0");
      beam.point_masses.push_back(pm);
    }
  }
}

ParameterSpace parse_parameters(const YAML::Node& node, int n_elements) {
  if (!node.IsSequence() || node.size() == 0) {
    throw ConfigError("parameters", line_of(node), "expected a non-empty list of parameters");
  }
  std::vector<Parameter> entries;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const YAML::Node n = node[i];
    const std::string path = "parameters[" + std::to_string(i) + "]";
    check_keys(n, path, {"name", "kind", "elements", "sigma", "lower", "upper", "initial"});
    Parameter p;
    p.name = required<std::string>(n, "name", path);
    const auto kind = required<std::string>(n, "kind", path);
    try {
      p.kind = quantity_kind_from_string(kind);
    } catch (const InvalidInput& e) {
      throw ConfigError(path + ".kind", line_of(n["kind"]), e.what());
    }
    const YAML::Node el = n["elements"];
    if (!el) throw ConfigError(path + ".elements", line_of(n), "missing required key");
    if (!el.IsSequence() || el.size() != 2) {
      throw ConfigError(path + ".elements", line_of(el), "expected [first, last) as a two-element list");
    }
    p.first_element = convert<int>(el[0], path + ".elements[0]");
    p.last_element = convert<int>(el[1], path + ".elements[1]");
    p.sigma = required<double>(n, "sigma", path);
    p.lower = required<double>(n, "lower", path);
    p.upper = required<double>(n, "upper", path);
    p.initial = required<double>(n, "initial", path);

    if (!(p.sigma > 0.0)) throw ConfigError(path + ".sigma", line_of(n["sigma"]), "must be > 0");
    if (!(p.lower < p.upper)) {
      throw ConfigError(path + ".lower", line_of(n["lower"]), "lower bound must be < upper bound");
    }
    if (!(p.initial >= p.lower && p.initial <= p.upper)) {
      throw ConfigError(path + ".initial", line_of(n["initial"]), "must lie within [lower, upper]");
    }
    if (p.first_element < 0 || p.first_element >= p.last_element || p.last_element > n_elements) {
      throw ConfigError(path + ".elements", line_of(el), "must satisfy 0 <= first < last <= beam.n_elements");
    }
    entries.push_back(std::move(p));
  }
  ParameterSpace space(std::move(entries));
  try {
    space.validate(n_elements);
  } catch (const InvalidInput& e) {
    throw ConfigError("parameters", line_of(node), e.what());
  }
  return space;
}

void parse_data(const YAML::Node& node, bool have_base, CaseStudy& cs) {
  const std::string path = "data";
  check_keys(node, path, {"frequencies_hz", "measurement_points", "beta", "metric"});
  if (const YAML::Node f = node["frequencies_hz"]) {
    cs.data.frequencies_hz = number_list(f, "data.frequencies_hz");
  } else if (!have_base) {
    throw ConfigError("data.frequencies_hz", line_of(node), "missing required key");
  }
  optional_into(node, "measurement_points", path, cs.data.measurement_points);
  if (const YAML::Node b = node["beta"]) cs.data.beta = number_list(b, "data.beta");
  if (const YAML::Node m = node["metric"]) {
    try {
      cs.metric = error_metric_from_string(convert<std::string>(m, "data.metric"));
    } catch (const InvalidInput& e) {
      if (dynamic_cast<const ConfigError*>(&e)) throw;
      throw ConfigError("data.metric", line_of(m), e.what());
    }
  }
  try {
    cs.data.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError("data", line_of(node), e.what());
  }
}

void parse_sampler(const YAML::Node& node, SamplerSettings& s) {
  check_keys(node, "sampler", {"kind", "mh", "slice", "hmc", "gradient"});
  if (const YAML::Node k = node["kind"]) {
    try {
      s.kind = sampler_kind_from_string(convert<std::string>(k, "sampler.kind"));
    } catch (const UsageError& e) {
      throw ConfigError("sampler.kind", line_of(k), e.what());
    }
  }
  if (const YAML::Node mh = node["mh"]) {
    check_keys(mh, "sampler.mh", {"widths"});
    if (mh["widths"]) s.mh.widths = number_list(mh["widths"], "sampler.mh.widths");
  }
  if (const YAML::Node sl = node["slice"]) {
    check_keys(sl, "sampler.slice", {"widths", "max_shrink"});
    if (sl["widths"]) s.slice.widths = number_list(sl["widths"], "sampler.slice.widths");
    optional_into(sl, "max_shrink", "sampler.slice", s.slice.max_shrink);
  }
  if (const YAML::Node h = node["hmc"]) {
    check_keys(h, "sampler.hmc", {"step_size", "leapfrog_steps", "mass"});
    optional_into(h, "step_size", "sampler.hmc", s.hmc.step_size);
    optional_into(h, "leapfrog_steps", "sampler.hmc", s.hmc.leapfrog_steps);
    if (const YAML::Node m = h["mass"]) {
      if (!m.IsSequence() || m.size() == 0) {
        throw ConfigError("sampler.hmc.mass", line_of(m), "expected a square matrix as a list of rows");
      }
      const auto q = static_cast<Eigen::Index>(m.size());
      s.hmc.mass.resize(q, q);
      for (Eigen::Index r = 0; r < q; ++r) {
        const auto row = number_list(m[static_cast<std::size_t>(r)], "sampler.hmc.mass");
        if (static_cast<Eigen::Index>(row.size()) != q) {
          throw ConfigError("sampler.hmc.mass", line_of(m[static_cast<std::size_t>(r)]), "matrix must be square");
        }
        for (Eigen::Index c = 0; c < q; ++c) s.hmc.mass(r, c) = row[static_cast<std::size_t>(c)];
      }
    }
    if (!(s.hmc.step_size > 0.0)) throw ConfigError("sampler.hmc.step_size", line_of(h), "must be > 0");
    if (s.hmc.leapfrog_steps < 1) throw ConfigError("sampler.hmc.leapfrog_steps", line_of(h), "must be >= 1");
  }
  if (const YAML::Node g = node["gradient"]) {
    check_keys(g, "sampler.gradient", {"h", "delta"});
    optional_into(g, "h", "sampler.gradient", s.gradient.h);
    if (g["delta"]) s.gradient.delta = number_list(g["delta"], "sampler.gradient.delta");
    if (!(s.gradient.h > 0.0)) throw ConfigError("sampler.gradient.h", line_of(g), "must be > 0");
  }
}

void parse_run(const YAML::Node& node, CaseStudy& cs) {
  check_keys(node, "run", {"samples", "seed", "burn_in", "output"});
  optional_into(node, "samples", "run", cs.n_samples);
  optional_into(node, "seed", "run", cs.seed);
  if (const YAML::Node b = node["burn_in"]) cs.burn_in = convert<int>(b, "run.burn_in");
  if (const YAML::Node o = node["output"]) cs.output_dir = convert<std::string>(o, "run.output");
  if (cs.n_samples < 1) throw ConfigError("run.samples", line_of(node["samples"]), "must be >= 1");
  const int b = cs.effective_burn_in();
  if (b < 0 || b >= cs.n_samples) throw ConfigError("run.burn_in", line_of(node), "must lie in [0, samples)");
}

}  // namespace

CaseStudy parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("<document>", e.mark.line + 1, e.msg);
  }
  check_keys(root, "", {"base", "name", "beam", "parameters", "data", "prior", "sampler", "run", "notes"});

  CaseStudy cs;
  const bool have_base = static_cast<bool>(root["base"]);
  if (have_base) {
    const auto base = convert<std::string>(root["base"], "base");
    try {
      cs = builtin_case(base);
    } catch (const UsageError& e) {
      throw ConfigError("base", line_of(root["base"]), e.what());
    }
  } else {
    cs.name = "custom";
  }
  optional_into(root, "name", "", cs.name);

  if (const YAML::Node beam = root["beam"]) {
    parse_beam(beam, have_base, cs.beam);
  } else if (!have_base) {
    throw ConfigError("beam", line_of(root), "missing required key");
  }
  if (const YAML::Node params = root["parameters"]) {
    cs.space = parse_parameters(params, cs.beam.n_elements);
  } else if (!have_base) {
    throw ConfigError("parameters", line_of(root), "missing required key");
  } else {
    try {
      cs.space.validate(cs.beam.n_elements);
    } catch (const InvalidInput& e) {
      throw ConfigError("parameters", 0, e.what());
    }
  }
  if (const YAML::Node data = root["data"]) {
    parse_data(data, have_base, cs);
  } else if (!have_base) {
    throw ConfigError("data", line_of(root), "missing required key");
  }
  if (const YAML::Node prior = root["prior"]) {
    check_keys(prior, "prior", {"mean"});
    if (const YAML::Node m = prior["mean"]) {
      try {
        cs.prior_mean = prior_mean_from_string(convert<std::string>(m, "prior.mean"));
      } catch (const InvalidInput& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw ConfigError("prior.mean", line_of(m), e.what());
      }
    }
  }
  if (const YAML::Node s = root["sampler"]) parse_sampler(s, cs.sampler);
  if (const YAML::Node r = root["run"]) parse_run(r, cs);
  if (const YAML::Node n = root["notes"]) {
    if (!n.IsSequence()) throw ConfigError("notes", line_of(n), "expected a list of strings");
    cs.notes.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      cs.notes.push_back(convert<std::string>(n[i], "notes[" + std::to_string(i) + "]"));
    }
  }

  cs.validate();
  return cs;
}

CaseStudy parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

void emit_list(YAML::Emitter& out, const std::vector<double>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double x : v) out << x;
  out << YAML::EndSeq;
}

}  // namespace

std::string dump_config(const CaseStudy& cs) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << cs.name;

  out << YAML::Key << "beam" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "length" << YAML::Value << cs.beam.length;
  out << YAML::Key << "width" << YAML::Value << cs.beam.width;
  out << YAML::Key << "thickness" << YAML::Value << cs.beam.thickness;
  out << YAML::Key << "youngs_modulus" << YAML::Value << cs.beam.youngs_modulus_nominal;
  out << YAML::Key << "poisson_ratio" << YAML::Value << cs.beam.poisson_ratio;
  out << YAML::Key << "density" << YAML::Value << cs.beam.density;
  out << YAML::Key << "n_elements" << YAML::Value << cs.beam.n_elements;
  out << YAML::Key << "clamped" << YAML::Value << cs.beam.clamped_end;
  out << YAML::Key << "point_masses" << YAML::Value << YAML::BeginSeq;
  for (const auto& pm : cs.beam.point_masses) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "position" << YAML::Value << pm.position << YAML::Key
        << "mass" << YAML::Value << pm.mass << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "parameters" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : cs.space.entries()) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << p.name;
    out << YAML::Key << "kind" << YAML::Value << std::string(to_string(p.kind));
    out << YAML::Key << "elements" << YAML::Value << YAML::Flow << YAML::BeginSeq << p.first_element
        << p.last_element << YAML::EndSeq;
    out << YAML::Key << "sigma" << YAML::Value << p.sigma;
    out << YAML::Key << "lower" << YAML::Value << p.lower;
    out << YAML::Key << "upper" << YAML::Value << p.upper;
    out << YAML::Key << "initial" << YAML::Value << p.initial;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "frequencies_hz" << YAML::Value;
  emit_list(out, cs.data.frequencies_hz);
  out << YAML::Key << "measurement_points" << YAML::Value << cs.data.measurement_points;
  out << YAML::Key << "beta" << YAML::Value;
  emit_list(out, cs.data.beta);
  out << YAML::Key << "metric" << YAML::Value << std::string(to_string(cs.metric));
  out << YAML::EndMap;

  out << YAML::Key << "prior" << YAML::Value << YAML::BeginMap << YAML::Key << "mean" << YAML::Value
      << std::string(to_string(cs.prior_mean)) << YAML::EndMap;

  out << YAML::Key << "sampler" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(cs.sampler.kind));
  out << YAML::Key << "mh" << YAML::Value << YAML::BeginMap;
  if (!cs.sampler.mh.widths.empty()) {
    out << YAML::Key << "widths" << YAML::Value;
    emit_list(out, cs.sampler.mh.widths);
  }
  out << YAML::EndMap;
  out << YAML::Key << "slice" << YAML::Value << YAML::BeginMap;
  if (!cs.sampler.slice.widths.empty()) {
    out << YAML::Key << "widths" << YAML::Value;
    emit_list(out, cs.sampler.slice.widths);
  }
  out << YAML::Key << "max_shrink" << YAML::Value << cs.sampler.slice.max_shrink << YAML::EndMap;
  out << YAML::Key << "hmc" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "step_size" << YAML::Value << cs.sampler.hmc.step_size;
  out << YAML::Key << "leapfrog_steps" << YAML::Value << cs.sampler.hmc.leapfrog_steps;
  if (cs.sampler.hmc.mass.size() > 0) {
    out << YAML::Key << "mass" << YAML::Value << YAML::BeginSeq;
    for (Eigen::Index r = 0; r < cs.sampler.hmc.mass.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < cs.sampler.hmc.mass.cols(); ++c) row.push_back(cs.sampler.hmc.mass(r, c));
      emit_list(out, row);
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  out << YAML::Key << "gradient" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "h" << YAML::Value << cs.sampler.gradient.h;
  if (!cs.sampler.gradient.delta.empty()) {
    out << YAML::Key << "delta" << YAML::Value;
    emit_list(out, cs.sampler.gradient.delta);
  }
  out << YAML::EndMap << YAML::EndMap;

  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "samples" << YAML::Value << cs.n_samples;
  out << YAML::Key << "seed" << YAML::Value << cs.seed;
  out << YAML::Key << "burn_in" << YAML::Value << cs.effective_burn_in();
  out << YAML::Key << "output" << YAML::Value << cs.output_dir.string();
  out << YAML::EndMap;
  if (!cs.notes.empty()) out << YAML::Key << "notes" << YAML::Value << cs.notes;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace beamupdate
