#include "dgboltz/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace dgboltz {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text)
{
  const std::string t = trim(text);
  if (t == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + text + "'");
  }
}

long to_long(const std::string& key, const std::string& text)
{
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const long v = std::stol(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects an integer, got '" + text + "'");
  }
}

bool to_bool(const std::string& key, const std::string& text)
{
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("config: " + key + " expects true or false, got '" + text + "'");
}

std::vector<double> numbers(const std::string& key, const std::string& text)
{
  std::vector<double> out;
  for (const auto& tok : split(text, ' ')) out.push_back(to_double(key, tok));
  return out;
}

Vec3 to_vec3(const std::string& key, const std::string& text)
{
  const auto v = numbers(key, text);
  if (v.size() != 3) throw ConfigError("config: " + key + " expects three numbers");
  return {v[0], v[1], v[2]};
}

std::string fmt(double x)
{
  if (std::isinf(x)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const Vec3& v) { return fmt(v[0]) + " " + fmt(v[1]) + " " + fmt(v[2]); }

// Header names in order of appearance; the INI reader drops empty sections.
std::vector<std::string> section_names(const std::string& text)
{
  std::vector<std::string> names;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    line = trim(line);
    if (line.size() > 2 && line.front() == '[' && line.back() == ']') names.push_back(trim(line.substr(1, line.size() - 2)));
  }
  return names;
}

const pt::ptree& block(const pt::ptree& root, const std::vector<std::string>& headers, const std::string& name)
{
  static const pt::ptree empty;
  const auto it = root.find(name);
  if (it != root.not_found()) return it->second;
  if (std::find(headers.begin(), headers.end(), name) != headers.end()) return empty;
  throw ConfigError("config: missing [" + name + "] block");
}

std::optional<std::string> get(const pt::ptree& b, const std::string& key)
{
  if (auto v = b.get_optional<std::string>(pt::ptree::path_type(key, '\0'))) return trim(*v);
  return std::nullopt;
}

}  // namespace

void RunConfig::validate() const
{
  grid.validate();
  model.validate();
  if (truncation_radius < 0.0 || std::isnan(truncation_radius)) {
    throw ConfigError("kernel: truncation_radius must be > 0 (or 0 for the default)");
  }
  if (n_theta < 2 || n_epsilon < 4) throw ConfigError("kernel: need n_theta >= 2 and n_epsilon >= 4");
  if (memory_cap == 0) throw ConfigError("kernel: memory cap must be positive");
  if (scenario == "custom") {
    if (maxwellians.empty()) throw ConfigError("run: custom scenario needs at least one maxwellian");
    for (const auto& p : maxwellians) p.validate();
  } else {
    preset_scenario(scenario);
  }
  relax.validate();
  for (const auto& f : formats) {
    if (f != "csv" && f != "binary") throw ConfigError("output: unknown format '" + f + "'");
  }
}

double RunConfig::effective_truncation_radius() const
{
  return truncation_radius > 0.0 ? truncation_radius : default_truncation_radius(grid);
}

std::vector<MaxwellianParams> RunConfig::initial_components() const
{
  return scenario == "custom" ? maxwellians : preset_scenario(scenario).components;
}

RunConfig parse_config(const std::string& text)
{
  pt::ptree root;
  std::istringstream in(text);
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  RunConfig c;
  const auto headers = section_names(text);
  const pt::ptree& run = block(root, headers, "run");
  const pt::ptree& grid = block(root, headers, "grid");
  const pt::ptree& model = block(root, headers, "model");
  const pt::ptree& kernel = block(root, headers, "kernel");
  const pt::ptree& output = block(root, headers, "output");

  if (auto v = get(run, "scenario")) c.scenario = *v;
  if (auto v = get(run, "maxwellians")) {
    for (const auto& part : split(*v, ';')) {
      const auto x = numbers("run.maxwellians", part);
      if (x.size() != 5) throw ConfigError("config: each maxwellian needs n ux uy uz T");
      c.maxwellians.push_back({x[0], {x[1], x[2], x[3]}, x[4]});
    }
  }
  if (c.scenario != "custom") {
    c.grid = preset_scenario(c.scenario).grid;
  } else if (!get(grid, "domain_min") || !get(grid, "domain_max") || !get(grid, "cells_per_dim")) {
    throw ConfigError("config: custom scenario needs grid bounds and cells_per_dim");
  }

  if (auto v = get(grid, "domain_min")) c.grid.domain_min = to_vec3("grid.domain_min", *v);
  if (auto v = get(grid, "domain_max")) c.grid.domain_max = to_vec3("grid.domain_max", *v);
  if (auto v = get(grid, "cells_per_dim")) c.grid.cells_per_dim = static_cast<int>(to_long("grid.cells_per_dim", *v));
  if (auto v = get(grid, "nodes_per_dim")) {
    const auto s = numbers("grid.nodes_per_dim", *v);
    if (s.size() == 1) {
      c.grid.nodes_per_dim = {static_cast<int>(s[0]), static_cast<int>(s[0]), static_cast<int>(s[0])};
    } else if (s.size() == 3) {
      c.grid.nodes_per_dim = {static_cast<int>(s[0]), static_cast<int>(s[1]), static_cast<int>(s[2])};
    } else {
      throw ConfigError("config: grid.nodes_per_dim expects one or three integers");
    }
  }

  if (auto v = get(model, "alpha")) c.model.alpha = to_double("model.alpha", *v);
  if (auto v = get(model, "b0")) c.model.b0 = to_double("model.b0", *v);

  if (auto v = get(kernel, "truncation_radius")) {
    c.truncation_radius = *v == "default" ? 0.0 : to_double("kernel.truncation_radius", *v);
  }
  if (auto v = get(kernel, "n_theta")) c.n_theta = static_cast<int>(to_long("kernel.n_theta", *v));
  if (auto v = get(kernel, "n_epsilon")) c.n_epsilon = static_cast<int>(to_long("kernel.n_epsilon", *v));
  if (auto v = get(kernel, "form")) c.form = parse_operator_form(*v);
  if (auto v = get(kernel, "memory_cap_mib")) {
    const long mib = to_long("kernel.memory_cap_mib", *v);
    if (mib <= 0) throw ConfigError("config: kernel.memory_cap_mib must be positive");
    c.memory_cap = static_cast<std::size_t>(mib) << 20;
  }

  if (auto v = get(run, "dt")) c.relax.dt = to_double("run.dt", *v);
  if (auto v = get(run, "t_final")) c.relax.t_final = to_double("run.t_final", *v);
  if (auto v = get(run, "scheme")) c.relax.scheme = parse_time_scheme(*v);
  if (auto v = get(run, "engine")) c.engine = parse_engine(*v);
  if (auto v = get(run, "decompose")) c.relax.decompose = to_bool("run.decompose", *v);
  if (auto v = get(run, "record_every")) c.relax.record_every = static_cast<int>(to_long("run.record_every", *v));
  if (auto v = get(run, "moment_correction")) c.relax.moment_correction = to_bool("run.moment_correction", *v);

  if (auto v = get(output, "directory")) c.output_directory = *v;
  if (auto v = get(output, "formats")) c.formats = split(*v, ',');

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c)
{
  std::ostringstream o;
  o << "[grid]\n"
    << "domain_min = " << fmt(c.grid.domain_min) << "\n"
    << "domain_max = " << fmt(c.grid.domain_max) << "\n"
    << "cells_per_dim = " << c.grid.cells_per_dim << "\n"
    << "nodes_per_dim = " << c.grid.nodes_per_dim[0] << " " << c.grid.nodes_per_dim[1] << " "
    << c.grid.nodes_per_dim[2] << "\n\n";
  o << "[model]\n"
    << "alpha = " << fmt(c.model.alpha) << "\n"
    << "b0 = " << fmt(c.model.b0) << "\n\n";
  o << "[kernel]\n"
    << "truncation_radius = " << (c.truncation_radius == 0.0 ? std::string("default") : fmt(c.truncation_radius))
    << "\n"
    << "n_theta = " << c.n_theta << "\n"
    << "n_epsilon = " << c.n_epsilon << "\n"
    << "form = " << to_string(c.form) << "\n"
    << "memory_cap_mib = " << (c.memory_cap >> 20) << "\n\n";
  o << "[run]\n"
    << "scenario = " << c.scenario << "\n";
  if (!c.maxwellians.empty()) {
    o << "maxwellians = ";
    for (std::size_t k = 0; k < c.maxwellians.size(); ++k) {
      const auto& p = c.maxwellians[k];
      o << (k ? "; " : "") << fmt(p.density) << " " << fmt(p.bulk_velocity) << " " << fmt(p.temperature);
    }
    o << "\n";
  }
  o << "dt = " << fmt(c.relax.dt) << "\n"
    << "t_final = " << fmt(c.relax.t_final) << "\n"
    << "scheme = " << to_string(c.relax.scheme) << "\n"
    << "engine = " << to_string(c.engine) << "\n"
    << "decompose = " << (c.relax.decompose ? "true" : "false") << "\n"
    << "record_every = " << c.relax.record_every << "\n"
    << "moment_correction = " << (c.relax.moment_correction ? "true" : "false") << "\n\n";
  o << "[output]\n"
    << "directory = " << c.output_directory << "\n"
    << "formats = ";
  for (std::size_t k = 0; k < c.formats.size(); ++k) o << (k ? "," : "") << c.formats[k];
  o << "\n";
  return o.str();
}

}  // namespace dgboltz
