#include "difftomo/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace difftomo {

using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::cisor: return "cisor";
    case Method::ista: return "ista";
    case Method::fista: return "fista";
    case Method::fb: return "fb";
    case Method::il: return "il";
  }
  return "cisor";
}

Method parse_method(const std::string& s) {
  if (s == "cisor") return Method::cisor;
  if (s == "ista") return Method::ista;
  if (s == "fista") return Method::fista;
  if (s == "fb") return Method::fb;
  if (s == "il") return Method::il;
  throw ConfigError("unknown method '" + s + "' (expected cisor, ista, fista, fb or il)");
}

namespace {

// ---- strict JSON reading ----

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void check_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!keys.count(it.key())) fail(join(path, it.key()), "unknown key");
  }
}

double read_number(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail(path, "expected a number");
}

int read_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(path, "integer out of range");
  return static_cast<int>(v);
}

bool read_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

template <class T, class F>
void maybe(const json& j, const std::string& path, const char* key, T& target, F read) {
  if (j.contains(key)) target = read(j.at(key), join(path, key));
}

Point read_point(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) fail(path, "expected [x, y] or [x, y, z]");
  Point p{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < j.size(); ++i) p[i] = read_number(j[i], path + "[" + std::to_string(i) + "]");
  return p;
}

std::vector<Point> read_points(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of points");
  std::vector<Point> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_point(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> read_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

KrylovOptions read_krylov(const json& j, const std::string& path, KrylovOptions k) {
  check_object(j, path, {"tolerance", "max_iterations", "method"});
  maybe(j, path, "tolerance", k.tolerance, read_number);
  maybe(j, path, "max_iterations", k.max_iterations, read_int);
  if (j.contains("method")) {
    const auto m = read_string(j["method"], join(path, "method"));
    if (m == "bicgstab") {
      k.method = KrylovMethod::bicgstab;
    } else if (m == "cgnr") {
      k.method = KrylovMethod::cgnr;
    } else {
      fail(join(path, "method"), "expected bicgstab or cgnr");
    }
  }
  return k;
}

json write_krylov(const KrylovOptions& k) {
  return {{"tolerance", k.tolerance},
          {"max_iterations", k.max_iterations},
          {"method", k.method == KrylovMethod::bicgstab ? "bicgstab" : "cgnr"}};
}

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json point_json(const Point& p, int dim) {
  if (dim == 2) return json::array({p[0], p[1]});
  return json::array({p[0], p[1], p[2]});
}

void range(bool ok, const std::string& path, const std::string& what) {
  if (!ok) fail(path, what);
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
  range(c.physics.wavelength > 0.0 && std::isfinite(c.physics.wavelength), "physics.wavelength", "must be positive");
  range(c.physics.eps_b > 0.0 && std::isfinite(c.physics.eps_b), "physics.eps_b", "must be positive");
  range(c.grid.dim == 2 || c.grid.dim == 3, "grid.dim", "must be 2 or 3");
  range(c.grid.J >= 2, "grid.J", "must be at least 2");
  range(c.grid.pitch > 0.0 && std::isfinite(c.grid.pitch), "grid.pitch", "must be positive");
  static const std::set<std::string> presets{"simulated_2d", "halved_2d", "spherical_3d", "explicit"};
  range(presets.count(c.layout.preset) == 1, "layout.preset",
        "unknown preset '" + c.layout.preset + "' (expected simulated_2d, halved_2d, spherical_3d or explicit)");
  if (c.layout.preset == "explicit") {
    range(!c.layout.transmitters.empty(), "layout.transmitters", "explicit layouts need transmitters");
    range(!c.layout.receivers.empty(), "layout.receivers", "explicit layouts need receivers");
    if (!c.layout.active.empty()) {
      range(c.layout.active.size() == c.layout.transmitters.size(), "layout.active", "needs one mask per transmitter");
      for (const auto& m : c.layout.active) {
        range(m.size() == c.layout.receivers.size(), "layout.active", "mask length must equal the receiver count");
      }
    }
  } else {
    range(c.layout.transmitters.empty() && c.layout.receivers.empty() && c.layout.active.empty(), "layout",
          "positions are only accepted with the explicit preset");
    const bool three = c.layout.preset == "spherical_3d";
    range(three == (c.grid.dim == 3), "layout.preset", "preset does not match grid.dim");
  }
  for (int i : c.layout.use_transmitters) range(i >= 0, "layout.use_transmitters", "indices must be nonnegative");
  static const std::set<std::string> incidents{"", "point_source", "plane_wave", "dipole"};
  range(incidents.count(c.incident) == 1, "incident", "expected point_source, plane_wave or dipole");
  range(c.grid.dim == 3 || c.incident.empty() || c.incident == "point_source", "incident",
        "2D problems use point_source incidence");
  range(c.grid.dim == 2 || c.incident != "point_source", "incident",
        "the vectorial model needs plane_wave or dipole incidence");
  static const std::set<std::string> kinds{"shepp-logan", "two-spheres", "two-cubes", "custom"};
  range(kinds.count(c.phantom.kind) == 1, "phantom.kind", "expected shepp-logan, two-spheres, two-cubes or custom");
  range(c.phantom.contrast > 0.0 && std::isfinite(c.phantom.contrast), "phantom.contrast", "must be positive");
  range(c.phantom.kind != "shepp-logan" || c.grid.dim == 2, "phantom.kind", "shepp-logan is a 2D phantom");
  range(c.phantom.kind == "shepp-logan" || c.grid.dim == 3, "phantom.kind", "sphere and cube phantoms are 3D");
  range(c.phantom.kind != "shepp-logan" || c.grid.J >= 8, "grid.J", "shepp-logan needs J >= 8");
  range(!std::isnan(c.simulation.snr_db), "simulation.snr_db", "must be a number or \"inf\"");
  range(c.simulation.anti_crime_factor == 1 || c.simulation.anti_crime_factor == 2, "simulation.anti_crime_factor",
        "must be 1 or 2");
  range(c.simulation.krylov.tolerance > 0.0, "simulation.krylov.tolerance", "must be positive");
  range(c.simulation.krylov.max_iterations >= 1, "simulation.krylov.max_iterations", "must be at least 1");
  const auto& s = c.solver;
  range(s.alpha >= 0.0 && s.alpha <= 1.0, "solver.alpha", "must lie in [0, 1]");
  range(s.step_rule != StepRule::fixed || (s.gamma > 0.0 && std::isfinite(s.gamma)), "solver.gamma",
        "must be positive");
  range(s.step_rule != StepRule::automatic || s.alpha < 1.0, "solver.alpha",
        "the auto step (1 - alpha^2) / (2 L) needs alpha < 1");
  range(s.gamma_scale > 0.0 && std::isfinite(s.gamma_scale), "solver.gamma_scale", "must be positive");
  range(!s.tau || (*s.tau >= 0.0 && std::isfinite(*s.tau)), "solver.tau", "must be nonnegative");
  range(s.tau_rel >= 0.0 && std::isfinite(s.tau_rel), "solver.tau_rel", "must be nonnegative");
  range(std::isfinite(s.box_min), "solver.box_min", "must be finite");
  range(!s.box_max || (std::isfinite(*s.box_max) && *s.box_max >= s.box_min), "solver.box_max",
        "must be finite and at least box_min");
  range(s.max_iterations >= 1, "solver.max_iterations", "must be at least 1");
  range(s.tolerance >= 0.0, "solver.tolerance", "must be nonnegative");
  range(s.prox_iterations >= 1, "solver.prox_iterations", "must be at least 1");
  range(s.prox_tolerance >= 0.0, "solver.prox_tolerance", "must be nonnegative");
  range(s.krylov.tolerance > 0.0, "solver.krylov.tolerance", "must be positive");
  range(s.krylov.max_iterations >= 1, "solver.krylov.max_iterations", "must be at least 1");
  range(s.lipschitz_samples >= 2, "solver.lipschitz.samples", "must be at least 2");
  range(s.lipschitz_safety > 0.0, "solver.lipschitz.safety", "must be positive");
  range(s.lipschitz_fraction > 0.0 && s.lipschitz_fraction <= 1.0, "solver.lipschitz.fraction", "must lie in (0, 1]");
  range(c.il.outer_rounds >= 1, "il.outer_rounds", "must be at least 1");
  range(c.il.inner_iterations >= 1, "il.inner_iterations", "must be at least 1");
  range(!c.sweep.contrasts.empty(), "sweep.contrasts", "must not be empty");
  for (double v : c.sweep.contrasts) range(v > 0.0 && std::isfinite(v), "sweep.contrasts", "must be positive");
  range(!c.sweep.methods.empty(), "sweep.methods", "must not be empty");
  range(!c.sweep.tau_rel.empty(), "sweep.tau_rel", "must not be empty");
  for (double v : c.sweep.tau_rel) range(v >= 0.0 && std::isfinite(v), "sweep.tau_rel", "must be nonnegative");
  for (const auto& [name, list] : c.sweep.tau_rel_by_method) {
    try {
      parse_method(name);
    } catch (const ConfigError&) {
      fail("sweep.tau_rel_by_method." + name, "unknown method");
    }
    range(!list.empty(), "sweep.tau_rel_by_method." + name, "must not be empty");
    for (double v : list) range(v >= 0.0 && std::isfinite(v), "sweep.tau_rel_by_method." + name, "must be nonnegative");
  }
  range(!c.output.directory.empty(), "output.directory", "must not be empty");
  for (const auto& [axis, pos] : c.output.slices) {
    range(axis == 'x' || axis == 'y' || axis == 'z', "output.slices", "axis must be x, y or z");
    range(std::isfinite(pos), "output.slices", "position must be finite");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: malformed JSON: ") + e.what());
  }
  check_object(j, "", {"physics", "grid", "layout", "incident", "phantom", "simulation", "solver", "il", "sweep",
                       "output", "method", "seed"});
  if (!j.contains("grid")) fail("grid", "required key is missing");
  if (!j.contains("method")) fail("method", "required key is missing");

  ExperimentConfig c;
  if (j.contains("physics")) {
    const auto& p = j["physics"];
    check_object(p, "physics", {"wavelength", "eps_b", "dyadic_uses_background_k"});
    maybe(p, "physics", "wavelength", c.physics.wavelength, read_number);
    maybe(p, "physics", "eps_b", c.physics.eps_b, read_number);
    maybe(p, "physics", "dyadic_uses_background_k", c.physics.dyadic_uses_background_k, read_bool);
  }
  {
    const auto& g = j["grid"];
    check_object(g, "grid", {"dim", "J", "pitch"});
    for (const char* key : {"dim", "J", "pitch"}) {
      if (!g.contains(key)) fail(join("grid", key), "required key is missing");
    }
    c.grid.dim = read_int(g["dim"], "grid.dim");
    c.grid.J = read_int(g["J"], "grid.J");
    c.grid.pitch = read_number(g["pitch"], "grid.pitch");
  }
  // Layout default follows the dimension unless given.
  c.layout.preset = c.grid.dim == 3 ? "spherical_3d" : "simulated_2d";
  if (c.grid.dim == 3) c.phantom.kind = "two-spheres";
  if (j.contains("layout")) {
    const auto& l = j["layout"];
    check_object(l, "layout", {"preset", "transmitters", "receivers", "active", "use_transmitters"});
    maybe(l, "layout", "preset", c.layout.preset, read_string);
    maybe(l, "layout", "transmitters", c.layout.transmitters, read_points);
    maybe(l, "layout", "receivers", c.layout.receivers, read_points);
    if (l.contains("active")) {
      const auto& a = l["active"];
      if (!a.is_array()) fail("layout.active", "expected an array of masks");
      for (std::size_t p = 0; p < a.size(); ++p) {
        const std::string path = "layout.active[" + std::to_string(p) + "]";
        if (!a[p].is_array()) fail(path, "expected an array of 0/1 values");
        std::vector<std::uint8_t> mask;
        for (std::size_t m = 0; m < a[p].size(); ++m) {
          const int v = read_int(a[p][m], path + "[" + std::to_string(m) + "]");
          if (v != 0 && v != 1) fail(path + "[" + std::to_string(m) + "]", "expected 0 or 1");
          mask.push_back(static_cast<std::uint8_t>(v));
        }
        c.layout.active.push_back(std::move(mask));
      }
    }
    if (l.contains("use_transmitters")) {
      const auto& u = l["use_transmitters"];
      if (!u.is_array()) fail("layout.use_transmitters", "expected an array of indices");
      for (std::size_t i = 0; i < u.size(); ++i) {
        c.layout.use_transmitters.push_back(read_int(u[i], "layout.use_transmitters[" + std::to_string(i) + "]"));
      }
    }
  }
  maybe(j, "", "incident", c.incident, read_string);
  if (j.contains("phantom")) {
    const auto& p = j["phantom"];
    check_object(p, "phantom", {"kind", "contrast", "spheres", "cubes"});
    maybe(p, "phantom", "kind", c.phantom.kind, read_string);
    maybe(p, "phantom", "contrast", c.phantom.contrast, read_number);
    if (p.contains("spheres")) {
      if (!p["spheres"].is_array()) fail("phantom.spheres", "expected an array");
      for (std::size_t i = 0; i < p["spheres"].size(); ++i) {
        const std::string path = "phantom.spheres[" + std::to_string(i) + "]";
        const auto& s = p["spheres"][i];
        check_object(s, path, {"center", "radius", "value"});
        for (const char* key : {"center", "radius", "value"}) {
          if (!s.contains(key)) fail(join(path, key), "required key is missing");
        }
        c.phantom.spheres.push_back({read_point(s["center"], path + ".center"), read_number(s["radius"], path + ".radius"),
                                     read_number(s["value"], path + ".value")});
      }
    }
    if (p.contains("cubes")) {
      if (!p["cubes"].is_array()) fail("phantom.cubes", "expected an array");
      for (std::size_t i = 0; i < p["cubes"].size(); ++i) {
        const std::string path = "phantom.cubes[" + std::to_string(i) + "]";
        const auto& s = p["cubes"][i];
        check_object(s, path, {"center", "side", "value"});
        for (const char* key : {"center", "side", "value"}) {
          if (!s.contains(key)) fail(join(path, key), "required key is missing");
        }
        c.phantom.cubes.push_back({read_point(s["center"], path + ".center"), read_number(s["side"], path + ".side"),
                                   read_number(s["value"], path + ".value")});
      }
    }
  }
  if (j.contains("simulation")) {
    const auto& s = j["simulation"];
    check_object(s, "simulation", {"snr_db", "anti_crime_factor", "include_self_term", "krylov"});
    maybe(s, "simulation", "snr_db", c.simulation.snr_db, read_number);
    maybe(s, "simulation", "anti_crime_factor", c.simulation.anti_crime_factor, read_int);
    maybe(s, "simulation", "include_self_term", c.simulation.include_self_term, read_bool);
    if (s.contains("krylov")) c.simulation.krylov = read_krylov(s["krylov"], "simulation.krylov", c.simulation.krylov);
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    const std::string P = "solver";
    check_object(s, P, {"alpha", "gamma", "gamma_scale", "tau", "tau_rel", "box", "max_iterations", "tolerance",
                        "prox_iterations", "prox_tolerance", "monitor", "krylov", "lipschitz"});
    maybe(s, P, "alpha", c.solver.alpha, read_number);
    if (s.contains("gamma")) {
      const auto& g = s["gamma"];
      if (g.is_string()) {
        const auto v = g.get<std::string>();
        if (v == "auto") {
          c.solver.step_rule = StepRule::automatic;
        } else if (v == "born") {
          c.solver.step_rule = StepRule::born;
        } else {
          fail("solver.gamma", "expected a number, \"auto\" or \"born\"");
        }
      } else {
        c.solver.step_rule = StepRule::fixed;
        c.solver.gamma = read_number(g, "solver.gamma");
      }
    }
    maybe(s, P, "gamma_scale", c.solver.gamma_scale, read_number);
    if (s.contains("tau") && !s["tau"].is_null()) c.solver.tau = read_number(s["tau"], "solver.tau");
    maybe(s, P, "tau_rel", c.solver.tau_rel, read_number);
    if (s.contains("box")) {
      const auto& b = s["box"];
      if (!b.is_array() || b.size() != 2) fail("solver.box", "expected [min, max]");
      c.solver.box_min = read_number(b[0], "solver.box[0]");
      if (!b[1].is_null()) c.solver.box_max = read_number(b[1], "solver.box[1]");
    }
    maybe(s, P, "max_iterations", c.solver.max_iterations, read_int);
    maybe(s, P, "tolerance", c.solver.tolerance, read_number);
    maybe(s, P, "prox_iterations", c.solver.prox_iterations, read_int);
    maybe(s, P, "prox_tolerance", c.solver.prox_tolerance, read_number);
    maybe(s, P, "monitor", c.solver.monitor, read_bool);
    if (s.contains("krylov")) c.solver.krylov = read_krylov(s["krylov"], "solver.krylov", c.solver.krylov);
    if (s.contains("lipschitz")) {
      const auto& l = s["lipschitz"];
      check_object(l, "solver.lipschitz", {"samples", "safety", "fraction"});
      maybe(l, "solver.lipschitz", "samples", c.solver.lipschitz_samples, read_int);
      maybe(l, "solver.lipschitz", "safety", c.solver.lipschitz_safety, read_number);
      maybe(l, "solver.lipschitz", "fraction", c.solver.lipschitz_fraction, read_number);
    }
  }
  if (j.contains("il")) {
    const auto& s = j["il"];
    check_object(s, "il", {"outer_rounds", "inner_iterations"});
    maybe(s, "il", "outer_rounds", c.il.outer_rounds, read_int);
    maybe(s, "il", "inner_iterations", c.il.inner_iterations, read_int);
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    check_object(s, "sweep", {"contrasts", "methods", "tau_rel", "tau_rel_by_method"});
    maybe(s, "sweep", "contrasts", c.sweep.contrasts, read_numbers);
    if (s.contains("methods")) {
      const auto& m = s["methods"];
      if (!m.is_array()) fail("sweep.methods", "expected an array of method names");
      c.sweep.methods.clear();
      for (std::size_t i = 0; i < m.size(); ++i) {
        const std::string path = "sweep.methods[" + std::to_string(i) + "]";
        try {
          c.sweep.methods.push_back(parse_method(read_string(m[i], path)));
        } catch (const ConfigError& e) {
          if (std::string(e.what()).rfind(path, 0) == 0) throw;
          fail(path, e.what());
        }
      }
    }
    maybe(s, "sweep", "tau_rel", c.sweep.tau_rel, read_numbers);
    if (s.contains("tau_rel_by_method")) {
      const auto& m = s["tau_rel_by_method"];
      if (!m.is_object()) fail("sweep.tau_rel_by_method", "expected an object");
      for (auto it = m.begin(); it != m.end(); ++it) {
        c.sweep.tau_rel_by_method[it.key()] = read_numbers(it.value(), "sweep.tau_rel_by_method." + it.key());
      }
    }
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    check_object(o, "output", {"directory", "slices"});
    maybe(o, "output", "directory", c.output.directory, read_string);
    if (o.contains("slices")) {
      const auto& sl = o["slices"];
      if (!sl.is_array()) fail("output.slices", "expected an array");
      c.output.slices.clear();
      for (std::size_t i = 0; i < sl.size(); ++i) {
        const std::string path = "output.slices[" + std::to_string(i) + "]";
        check_object(sl[i], path, {"axis", "position"});
        if (!sl[i].contains("axis") || !sl[i].contains("position")) fail(path, "needs axis and position");
        const auto axis = read_string(sl[i]["axis"], path + ".axis");
        if (axis.size() != 1) fail(path + ".axis", "expected x, y or z");
        c.output.slices.emplace_back(axis[0], read_number(sl[i]["position"], path + ".position"));
      }
    }
  }
  try {
    c.method = parse_method(read_string(j["method"], "method"));
  } catch (const ConfigError& e) {
    if (std::string(e.what()).rfind("method:", 0) == 0) throw;
    fail("method", e.what());
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
      fail("seed", "expected a nonnegative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["physics"] = {{"wavelength", c.physics.wavelength},
                  {"eps_b", c.physics.eps_b},
                  {"dyadic_uses_background_k", c.physics.dyadic_uses_background_k}};
  j["grid"] = {{"dim", c.grid.dim}, {"J", c.grid.J}, {"pitch", c.grid.pitch}};
  json layout = {{"preset", c.layout.preset}};
  if (c.layout.preset == "explicit") {
    json tx = json::array(), rx = json::array();
    for (const auto& p : c.layout.transmitters) tx.push_back(point_json(p, 3));
    for (const auto& p : c.layout.receivers) rx.push_back(point_json(p, 3));
    layout["transmitters"] = tx;
    layout["receivers"] = rx;
    if (!c.layout.active.empty()) {
      json a = json::array();
      for (const auto& m : c.layout.active) {
        json row = json::array();
        for (auto v : m) row.push_back(static_cast<int>(v));
        a.push_back(row);
      }
      layout["active"] = a;
    }
  }
  if (!c.layout.use_transmitters.empty()) layout["use_transmitters"] = c.layout.use_transmitters;
  j["layout"] = layout;
  if (!c.incident.empty()) j["incident"] = c.incident;
  json phantom = {{"kind", c.phantom.kind}, {"contrast", c.phantom.contrast}};
  if (!c.phantom.spheres.empty()) {
    json a = json::array();
    for (const auto& s : c.phantom.spheres) a.push_back({{"center", point_json(s.center, 3)}, {"radius", s.radius}, {"value", s.value}});
    phantom["spheres"] = a;
  }
  if (!c.phantom.cubes.empty()) {
    json a = json::array();
    for (const auto& s : c.phantom.cubes) a.push_back({{"center", point_json(s.center, 3)}, {"side", s.side}, {"value", s.value}});
    phantom["cubes"] = a;
  }
  j["phantom"] = phantom;
  j["simulation"] = {{"snr_db", number_or_inf(c.simulation.snr_db)},
                     {"anti_crime_factor", c.simulation.anti_crime_factor},
                     {"include_self_term", c.simulation.include_self_term},
                     {"krylov", write_krylov(c.simulation.krylov)}};
  json solver = {{"alpha", c.solver.alpha},
                 {"gamma_scale", c.solver.gamma_scale},
                 {"tau_rel", c.solver.tau_rel},
                 {"box", json::array({c.solver.box_min, c.solver.box_max ? json(*c.solver.box_max) : json(nullptr)})},
                 {"max_iterations", c.solver.max_iterations},
                 {"tolerance", c.solver.tolerance},
                 {"prox_iterations", c.solver.prox_iterations},
                 {"prox_tolerance", c.solver.prox_tolerance},
                 {"monitor", c.solver.monitor},
                 {"krylov", write_krylov(c.solver.krylov)},
                 {"lipschitz",
                  {{"samples", c.solver.lipschitz_samples},
                   {"safety", c.solver.lipschitz_safety},
                   {"fraction", c.solver.lipschitz_fraction}}}};
  switch (c.solver.step_rule) {
    case StepRule::automatic: solver["gamma"] = "auto"; break;
    case StepRule::born: solver["gamma"] = "born"; break;
    case StepRule::fixed: solver["gamma"] = c.solver.gamma; break;
  }
  solver["tau"] = c.solver.tau ? json(*c.solver.tau) : json(nullptr);
  j["solver"] = solver;
  j["il"] = {{"outer_rounds", c.il.outer_rounds}, {"inner_iterations", c.il.inner_iterations}};
  json methods = json::array();
  for (auto m : c.sweep.methods) methods.push_back(to_string(m));
  json by_method = json::object();
  for (const auto& [k, v] : c.sweep.tau_rel_by_method) by_method[k] = v;
  j["sweep"] = {{"contrasts", c.sweep.contrasts}, {"methods", methods}, {"tau_rel", c.sweep.tau_rel},
                {"tau_rel_by_method", by_method}};
  json slices = json::array();
  for (const auto& [axis, pos] : c.output.slices) slices.push_back({{"axis", std::string(1, axis)}, {"position", pos}});
  j["output"] = {{"directory", c.output.directory}, {"slices", slices}};
  j["method"] = to_string(c.method);
  j["seed"] = c.seed;
  return j.dump(2);
}

// ---- datasets ----

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": cannot parse number '" + s + "'");
  }
  if (used != s.size()) throw std::runtime_error(where + ": trailing characters in '" + s + "'");
  if (!std::isfinite(v)) throw std::runtime_error(where + ": non-finite value");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string dataset_header(int dim) { return dim == 3 ? "tx,rx,rx_x,rx_y,rx_z,re,im" : "tx,rx,rx_x,rx_y,re,im"; }

void write_rows(const Layout& layout, const std::vector<CVector>& values, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << dataset_header(layout.dim) << '\n';
  for (std::size_t p = 0; p < values.size(); ++p) {
    const auto rows = layout.active_receivers(p);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Point& r = layout.receivers[rows[i]];
      const Complex v = values[p][static_cast<Eigen::Index>(i)];
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw std::runtime_error(path + ": refusing to write a non-finite measurement");
      }
      out << p << ',' << rows[i] << ',' << fmt17(r[0]) << ',' << fmt17(r[1]);
      if (layout.dim == 3) out << ',' << fmt17(r[2]);
      out << ',' << fmt17(v.real()) << ',' << fmt17(v.imag()) << '\n';
    }
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::vector<CVector> read_rows(const Layout& layout, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open dataset");
  std::string line;
  if (!std::getline(in, line) || line != dataset_header(layout.dim)) {
    throw std::runtime_error(path + ": header must be '" + dataset_header(layout.dim) + "'");
  }
  std::vector<CVector> values(layout.transmitter_count());
  std::vector<std::vector<std::size_t>> expected(layout.transmitter_count());
  for (std::size_t p = 0; p < values.size(); ++p) {
    expected[p] = layout.active_receivers(p);
    values[p] = CVector::Zero(static_cast<Eigen::Index>(expected[p].size()));
  }
  std::size_t p_cur = 0, i_cur = 0, line_no = 1;
  const std::size_t width = layout.dim == 3 ? 7 : 6;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto cells = split_csv(line);
    if (cells.size() != width) throw std::runtime_error(where + ": expected " + std::to_string(width) + " columns");
    while (p_cur < values.size() && i_cur == expected[p_cur].size()) {
      ++p_cur;
      i_cur = 0;
    }
    if (p_cur >= values.size()) throw std::runtime_error(where + ": more rows than active receivers");
    const auto tx = static_cast<std::size_t>(parse_double(cells[0], where));
    const auto rx = static_cast<std::size_t>(parse_double(cells[1], where));
    if (tx != p_cur || rx != expected[p_cur][i_cur]) {
      throw std::runtime_error(where + ": rows must list active pairs in transmitter then receiver order");
    }
    const Point& r = layout.receivers[rx];
    for (std::size_t a = 0; a < static_cast<std::size_t>(layout.dim); ++a) {
      if (parse_double(cells[2 + a], where) != r[a]) throw std::runtime_error(where + ": receiver position mismatch");
    }
    values[p_cur][static_cast<Eigen::Index>(i_cur)] =
        Complex(parse_double(cells[width - 2], where), parse_double(cells[width - 1], where));
    ++i_cur;
  }
  while (p_cur < values.size() && i_cur == expected[p_cur].size()) {
    ++p_cur;
    i_cur = 0;
  }
  if (p_cur != values.size()) throw std::runtime_error(path + ": fewer rows than active receivers");
  return values;
}

}  // namespace

void write_dataset(const ScatteringDataset& data, const std::string& path) {
  data.validate();
  write_rows(data.layout, data.measurements, path);
  json side;
  side["physics"] = {{"wavelength", data.physics.wavelength()},
                     {"eps_b", data.physics.background_permittivity()},
                     {"dyadic_uses_background_k", data.physics.dyadic_uses_background_k}};
  json tx = json::array(), rx = json::array(), active = json::array();
  for (const auto& p : data.layout.transmitters) tx.push_back(point_json(p, 3));
  for (const auto& p : data.layout.receivers) rx.push_back(point_json(p, 3));
  for (const auto& m : data.layout.active) {
    json row = json::array();
    for (auto v : m) row.push_back(static_cast<int>(v));
    active.push_back(row);
  }
  side["layout"] = {{"dim", data.layout.dim}, {"transmitters", tx}, {"receivers", rx}, {"active", active}};
  const bool noisy = !data.noise.empty();
  side["noise_file"] = noisy ? json(std::filesystem::path(path + ".noise.csv").filename().string()) : json(nullptr);
  std::ofstream out(path + ".json");
  if (!out) throw std::runtime_error(path + ".json: cannot open for writing");
  // dump() prints doubles in shortest round-trip form
  out << side.dump(2) << '\n';
  if (noisy) write_rows(data.layout, data.noise, path + ".noise.csv");
}

ScatteringDataset read_dataset(const std::string& path) {
  std::ifstream in(path + ".json");
  if (!in) throw std::runtime_error(path + ".json: cannot open dataset sidecar");
  json side;
  try {
    side = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ".json: malformed JSON: " + e.what());
  }
  try {
    const auto& ph = side.at("physics");
    PhysicsConfig physics(ph.at("wavelength").get<double>(), ph.at("eps_b").get<double>());
    physics.dyadic_uses_background_k = ph.at("dyadic_uses_background_k").get<bool>();
    const auto& l = side.at("layout");
    Layout layout;
    layout.dim = l.at("dim").get<int>();
    if (layout.dim != 2 && layout.dim != 3) throw std::runtime_error("layout.dim must be 2 or 3");
    for (const auto& p : l.at("transmitters")) layout.transmitters.push_back(read_point(p, "layout.transmitters"));
    for (const auto& p : l.at("receivers")) layout.receivers.push_back(read_point(p, "layout.receivers"));
    for (const auto& m : l.at("active")) {
      std::vector<std::uint8_t> mask;
      for (const auto& v : m) mask.push_back(static_cast<std::uint8_t>(v.get<int>() != 0));
      if (mask.size() != layout.receivers.size()) throw std::runtime_error("active mask length mismatch");
      layout.active.push_back(std::move(mask));
    }
    if (layout.active.size() != layout.transmitters.size()) throw std::runtime_error("one active mask per transmitter");
    ScatteringDataset data;
    data.layout = std::move(layout);
    data.physics = physics;
    data.measurements = read_rows(data.layout, path);
    if (side.contains("noise_file") && !side["noise_file"].is_null()) {
      data.noise = read_rows(data.layout, path + ".noise.csv");
    }
    data.validate();
    return data;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ".json: schema mismatch: " + e.what());
  } catch (const ConfigError& e) {
    throw std::runtime_error(path + ".json: " + e.what());
  }
}

// ---- images ----

void write_image_csv(const RVector& image, const Grid& grid, const std::string& path) {
  detail::check_length(static_cast<std::size_t>(image.size()), grid.size(), "write_image_csv");
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  const auto J = static_cast<Eigen::Index>(grid.side());
  const Eigen::Index rows = image.size() / J;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index i = 0; i < J; ++i) {
      if (i) out << ',';
      out << fmt17(image[r * J + i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

RVector read_image_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open image");
  std::vector<double> values;
  std::string line;
  std::size_t width = 0, line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (width == 0) width = cells.size();
    if (cells.size() != width) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": ragged row");
    for (const auto& c : cells) values.push_back(parse_double(c, path + ":" + std::to_string(line_no)));
  }
  return Eigen::Map<const RVector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_pgm(const RVector& image, int width, int height, const std::string& path) {
  if (width < 1 || height < 1 || static_cast<Eigen::Index>(width) * height != image.size()) {
    throw std::invalid_argument("write_pgm: image size does not match width x height");
  }
  const double lo = image.minCoeff();
  const double hi = image.maxCoeff();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "P5\n# min=" << fmt17(lo) << " max=" << fmt17(hi) << "\n" << width << ' ' << height << "\n65535\n";
  const double span = hi - lo;
  for (int row = height - 1; row >= 0; --row) {
    for (int col = 0; col < width; ++col) {
      const double v = image[static_cast<Eigen::Index>(row) * width + col];
      const auto level = span > 0.0 ? static_cast<unsigned>(std::lround((v - lo) / span * 65535.0)) : 0u;
      const unsigned char bytes[2] = {static_cast<unsigned char>(level >> 8), static_cast<unsigned char>(level & 0xff)};
      out.write(reinterpret_cast<const char*>(bytes), 2);
    }
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

int nearest_index(const Grid& grid, double position) {
  const double raw = position / grid.pitch() + 0.5 * (grid.side() - 1);
  return std::clamp(static_cast<int>(std::lround(raw)), 0, grid.side() - 1);
}

RVector extract_slice(const RVector& volume, const Grid& grid, char axis, int index) {
  if (grid.dim() != 3) throw std::invalid_argument("extract_slice needs a 3D grid");
  detail::check_length(static_cast<std::size_t>(volume.size()), grid.size(), "extract_slice");
  const int J = grid.side();
  if (index < 0 || index >= J) throw std::invalid_argument("slice index outside the grid");
  RVector out(static_cast<Eigen::Index>(J) * J);
  for (int b = 0; b < J; ++b) {
    for (int a = 0; a < J; ++a) {
      std::size_t n = 0;
      switch (axis) {
        case 'x': n = grid.linear(index, a, b); break;
        case 'y': n = grid.linear(a, index, b); break;
        case 'z': n = grid.linear(a, b, index); break;
        default: throw std::invalid_argument("slice axis must be x, y or z");
      }
      out[static_cast<Eigen::Index>(b) * J + a] = volume[static_cast<Eigen::Index>(n)];
    }
  }
  return out;
}

std::vector<std::string> write_image(const RVector& image, const Grid& grid, const std::string& stem,
                                     const std::vector<std::pair<char, double>>& slices) {
  std::vector<std::string> written;
  write_image_csv(image, grid, stem + ".csv");
  written.push_back(stem + ".csv");
  if (grid.dim() == 2) {
    write_pgm(image, grid.side(), grid.side(), stem + ".pgm");
    written.push_back(stem + ".pgm");
    return written;
  }
  for (const auto& [axis, pos] : slices) {
    const int idx = nearest_index(grid, pos);
    const std::string path = stem + "_" + axis + std::to_string(idx) + ".pgm";
    write_pgm(extract_slice(image, grid, axis, idx), grid.side(), grid.side(), path);
    written.push_back(path);
  }
  return written;
}

void write_telemetry(const std::vector<TelemetryRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "k,F,D,TV,grad_map_norm\n";
  for (const auto& r : rows) {
    out << r.k << ',' << fmt17(r.F) << ',' << fmt17(r.D) << ',' << fmt17(r.tv) << ',' << fmt17(r.grad_map_norm) << '\n';
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

void write_timing(const std::vector<TelemetryRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "k,seconds\n";
  for (const auto& r : rows) out << r.k << ',' << fmt17(r.seconds) << '\n';
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace difftomo
