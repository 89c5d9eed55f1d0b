#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "phaseflow/cli.hpp"
#include "phaseflow/oracles.hpp"

namespace phaseflow::cli {

std::string_view to_string(TreatmentKind k) {
  switch (k) {
    case TreatmentKind::ensemble:
      return "ensemble";
    case TreatmentKind::schrodinger:
      return "schrodinger";
    case TreatmentKind::liouville:
      return "liouville";
    case TreatmentKind::hierarchy:
      return "hierarchy";
    case TreatmentKind::tdvp:
      return "tdvp";
    case TreatmentKind::tga:
      return "tga";
    case TreatmentKind::heller:
      return "heller";
    case TreatmentKind::mtga:
      return "mtga";
    case TreatmentKind::lyapunov:
      return "lyapunov";
  }
  return "unknown";
}

namespace {

// Map reader that remembers which keys were consumed so typos are reported
// instead of silently ignored.
class Table {
 public:
  Table(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a table");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull(); }

  std::optional<YAML::Node> raw(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return node_[key];
  }

  template <class T>
  std::optional<T> get(const std::string& key) {
    auto n = raw(key);
    if (!n) return std::nullopt;
    try {
      return n->as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(field(key), "cannot read value '" + YAML::Dump(*n) + "'");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return get<T>(key).value_or(fallback);
  }

  template <class T>
  T require(const std::string& key) {
    auto v = get<T>(key);
    if (!v) throw ConfigError(field(key), "missing required value");
    return *v;
  }

  double number(const std::string& key, double fallback) {
    const double v = get<double>(key, fallback);
    if (!std::isfinite(v)) throw ConfigError(field(key), "must be finite");
    return v;
  }

  Table sub(const std::string& key) { return Table(raw(key).value_or(YAML::Node()), field(key)); }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

TreatmentKind kind_from(const std::string& s, const std::string& field) {
  for (auto k : {TreatmentKind::ensemble, TreatmentKind::schrodinger, TreatmentKind::liouville, TreatmentKind::hierarchy,
                 TreatmentKind::tdvp, TreatmentKind::tga, TreatmentKind::heller, TreatmentKind::mtga,
                 TreatmentKind::lyapunov})
    if (s == to_string(k)) return k;
  throw ConfigError(field, "unknown treatment kind '" + s + "'");
}

Closure closure_from(const std::string& s, const std::string& field) {
  if (s == "gaussian-wick" || s == "gaussian") return Closure::gaussian_wick;
  if (s == "zero-central-above-M" || s == "zero-central") return Closure::zero_central;
  throw ConfigError(field, "unknown closure '" + s + "' (gaussian-wick | zero-central-above-M)");
}

MomentFlavor flavor_from(const std::string& s, const std::string& field) {
  if (s == "classical") return MomentFlavor::classical;
  if (s == "quantum") return MomentFlavor::quantum_weyl;
  throw ConfigError(field, "unknown flavor '" + s + "' (classical | quantum)");
}

GaussianRule rule_from(const std::string& s, const std::string& field) {
  for (auto r : {GaussianRule::tdvp, GaussianRule::heller, GaussianRule::consistent_tga})
    if (s == to_string(r)) return r;
  throw ConfigError(field, "unknown Gaussian rule '" + s + "' (tdvp | tga | heller)");
}

LyapunovSystem system_from(const std::string& s, const std::string& field) {
  for (auto sys : {LyapunovSystem::tangent_2d, LyapunovSystem::gaussian_4d})
    if (s == to_string(sys)) return sys;
  throw ConfigError(field, "unknown Lyapunov system '" + s + "' (tangent-2d | gaussian-4d)");
}

PolynomialPotential read_potential(Table t) {
  auto coeffs = t.get<std::vector<double>>("coeffs");
  if (!coeffs || coeffs->empty()) throw ConfigError(t.field("coeffs"), "need at least one coefficient");
  if (static_cast<int>(coeffs->size()) - 1 > PolynomialPotential::kMaxDegree)
    throw ConfigError(t.field("coeffs"), "degree exceeds " + std::to_string(PolynomialPotential::kMaxDegree));
  for (double c : *coeffs)
    if (!std::isfinite(c)) throw ConfigError(t.field("coeffs"), "coefficients must be finite");
  const double mass = t.number("mass", 1.0);
  if (!(mass > 0.0)) throw ConfigError(t.field("mass"), "must be positive");
  std::vector<CoefficientDrive> drives;
  if (auto dn = t.raw("drive")) {
    const YAML::Node& d = *dn;
    if (!d.IsSequence()) throw ConfigError(t.field("drive"), "expected a list");
    for (std::size_t i = 0; i < d.size(); ++i) {
      Table dt(d[i], t.field("drive") + "[" + std::to_string(i) + "]");
      CoefficientDrive c;
      c.k = dt.require<int>("k");
      c.amplitude = dt.number("amp", 0.0);
      c.omega = dt.number("omega", 0.0);
      c.phase = dt.number("phase", 0.0);
      dt.finish();
      if (c.k < 0 || c.k > PolynomialPotential::kMaxDegree) throw ConfigError(dt.field("k"), "out of range");
      if (c.amplitude != 0.0) drives.push_back(c);
    }
  }
  t.finish();
  // a drive on a higher power than the static coefficients extends the degree
  for (const auto& c : drives)
    if (c.k >= static_cast<int>(coeffs->size())) coeffs->resize(static_cast<std::size_t>(c.k) + 1, 0.0);
  try {
    return PolynomialPotential(*coeffs, mass, drives);
  } catch (const std::exception& e) {
    throw ConfigError("potential", e.what());
  }
}

Treatment read_treatment(Table t, double dynamical_time) {
  Treatment tr;
  tr.kind = kind_from(t.require<std::string>("kind"), t.field("kind"));
  tr.label = t.get<std::string>("label", std::string(to_string(tr.kind)));
  tr.dt = t.get<double>("dt");
  tr.output_interval = t.get<double>("output_interval");
  if (t.has("t_final") && t.has("dynamical_times"))
    throw ConfigError(t.field("t_final"), "give either t_final or dynamical_times, not both");
  tr.t_final = t.get<double>("t_final");
  if (auto n = t.get<double>("dynamical_times")) tr.t_final = *n * dynamical_time;
  switch (tr.kind) {
    case TreatmentKind::ensemble:
      tr.particles = t.get<std::size_t>("particles", tr.particles);
      tr.escape_bound = t.number("escape_bound", tr.escape_bound);
      break;
    case TreatmentKind::schrodinger:
      tr.points = t.get<int>("points", tr.points);
      tr.x_half_width = t.number("half_width", tr.x_half_width);
      tr.x_center = t.number("center", tr.x_center);
      tr.cat_separation = t.number("cat_separation", 0.0);
      tr.wigner_diagnostics = t.get<bool>("wigner_diagnostics", true);
      break;
    case TreatmentKind::liouville:
      tr.points = t.get<int>("points", tr.points);
      tr.p_points = t.get<int>("p_points", 0);
      tr.x_half_width = t.number("x_half_width", tr.x_half_width);
      tr.x_center = t.number("x_center", tr.x_center);
      tr.p_half_width = t.number("p_half_width", tr.p_half_width);
      tr.p_center = t.number("p_center", tr.p_center);
      tr.substeps = t.get<int>("substeps", tr.substeps);
      break;
    case TreatmentKind::hierarchy:
      tr.order = t.get<int>("order", tr.order);
      tr.closure = closure_from(t.get<std::string>("closure", "gaussian-wick"), t.field("closure"));
      tr.flavor = flavor_from(t.get<std::string>("flavor", "classical"), t.field("flavor"));
      break;
    case TreatmentKind::tdvp:
      tr.rule = GaussianRule::tdvp;
      break;
    case TreatmentKind::tga:
      tr.rule = GaussianRule::consistent_tga;
      break;
    case TreatmentKind::heller:
      tr.rule = GaussianRule::heller;
      break;
    case TreatmentKind::mtga: {
      tr.rule = rule_from(t.get<std::string>("rule", "tdvp"), t.field("rule"));
      tr.packets = t.get<int>("packets", tr.packets);
      tr.radius = t.number("radius", tr.radius);
      if (auto ln = t.raw("members")) {
        const YAML::Node& list = *ln;
        if (!list.IsSequence()) throw ConfigError(t.field("members"), "expected a list");
        for (std::size_t i = 0; i < list.size(); ++i) {
          Table m(list[i], t.field("members") + "[" + std::to_string(i) + "]");
          tr.explicit_sum.weights.push_back(m.require<double>("weight"));
          tr.explicit_sum.packets.push_back(
              {m.require<double>("xbar"), m.require<double>("pbar"), m.require<double>("cxx"), m.number("cxp", 0.0),
               m.require<double>("cpp")});
          m.finish();
        }
      }
      break;
    }
    case TreatmentKind::lyapunov: {
      const YAML::Node sys = t.raw("systems").value_or(YAML::Load("[gaussian-4d, tangent-2d]"));
      if (!sys.IsSequence()) throw ConfigError(t.field("systems"), "expected a list");
      for (std::size_t i = 0; i < sys.size(); ++i)
        tr.systems.push_back(system_from(sys[i].as<std::string>(), t.field("systems")));
      tr.t_total = t.number("t_total", tr.t_total);
      tr.renorm_interval = t.number("renorm_interval", tr.renorm_interval);
      tr.transient_fraction = t.number("transient_fraction", tr.transient_fraction);
      tr.blocks = t.get<int>("blocks", tr.blocks);
      if (auto sn = t.raw("scan")) {
        const YAML::Node& scan = *sn;
        if (!scan.IsSequence()) throw ConfigError(t.field("scan"), "expected a list");
        for (std::size_t i = 0; i < scan.size(); ++i) {
          Table p(scan[i], t.field("scan") + "[" + std::to_string(i) + "]");
          tr.scan.push_back({p.require<double>("xbar"), p.number("pbar", 0.0), p.require<double>("cxx")});
          p.finish();
        }
      }
      break;
    }
  }
  t.finish();
  return tr;
}

bool quantum(const Treatment& t) {
  return t.kind == TreatmentKind::schrodinger ||
         (t.kind == TreatmentKind::hierarchy && t.flavor == MomentFlavor::quantum_weyl);
}

}  // namespace

Scenario parse_scenario(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError("<file>", std::string("malformed YAML: ") + e.what());
  }
  if (!root || !root.IsMap()) throw ConfigError("<file>", "expected a table at the top level");
  Table top(root, "");
  Scenario s;
  s.name = top.get<std::string>("name", "scenario");
  s.seed = top.get<std::uint64_t>("seed", 1);
  s.hbar = top.number("hbar", 1.0);
  if (!(s.hbar > 0.0)) throw ConfigError("hbar", "must be positive");
  s.moment_order = top.get<int>("moment_order", 2);
  s.potential = read_potential(top.sub("potential"));

  Table init = top.sub("initial");
  s.initial.mean_x = init.number("xbar", 0.0);
  s.initial.mean_p = init.number("pbar", 0.0);
  s.initial.cxx = init.require<double>("cxx");
  s.initial.cxp = init.number("cxp", 0.0);
  s.pure = init.get<bool>("pure", false);
  if (!(s.initial.cxx > 0.0)) throw ConfigError("initial.cxx", "position variance must be positive");
  if (init.has("cpp")) {
    s.initial.cpp = init.require<double>("cpp");
  } else if (s.pure) {
    s.initial.cpp = (s.hbar * s.hbar / 4.0 + s.initial.cxp * s.initial.cxp) / s.initial.cxx;
  } else {
    throw ConfigError("initial.cpp", "missing required value (only pure states derive it)");
  }
  init.finish();

  Table integ = top.sub("integrator");
  if (integ.has("t_final") && integ.has("dynamical_times"))
    throw ConfigError("integrator.t_final", "give either t_final or dynamical_times, not both");
  // the dynamical time needs a valid state; validate() reports the details
  s.dynamical_time = s.initial.cxx > 0.0 && s.initial.cpp > 0.0 ? dynamical_time(s.initial, s.potential) : 1.0;
  s.dt = integ.number("dt", 1e-3 * s.dynamical_time);
  if (integ.has("t_final"))
    s.t_final = integ.number("t_final", 0.0);
  else
    s.t_final = integ.number("dynamical_times", 10.0) * s.dynamical_time;
  s.output_interval = integ.number("output_interval", s.t_final / 100.0);
  integ.finish();

  const auto list = top.raw("treatments");
  if (list && !list->IsSequence()) throw ConfigError("treatments", "expected a list");
  if (list)
    for (std::size_t i = 0; i < list->size(); ++i)
      s.treatments.push_back(read_treatment(Table((*list)[i], "treatments[" + std::to_string(i) + "]"), s.dynamical_time));
  s.output = top.get<std::string>("output", "runs/" + s.name);
  top.finish();
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void validate(const Scenario& s) {
  const GaussianState& g = s.initial;
  if (s.name.empty()) throw ConfigError("name", "must not be empty");
  if (!(s.hbar > 0.0)) throw ConfigError("hbar", "must be positive");
  if (s.moment_order < 1 || s.moment_order > 6) throw ConfigError("moment_order", "must lie in 1..6");
  if (!(g.cxx > 0.0)) throw ConfigError("initial.cxx", "position variance must be positive");
  if (!(g.cpp > 0.0)) throw ConfigError("initial.cpp", "momentum variance must be positive");
  if (!(g.det() > 0.0)) throw ConfigError("initial.cxp", "covariance must be positive definite (cxx cpp > cxp^2)");
  const double floor = s.hbar * s.hbar / 4.0;
  if (s.pure && !g.is_pure(s.hbar, 1e-10))
    throw ConfigError("initial.pure", "pure-tagged state violates the purity constraint det C = hbar^2/4 (det C = " +
                                          std::to_string(g.det()) + ", hbar^2/4 = " + std::to_string(floor) + ")");
  if (!(s.dt > 0.0)) throw ConfigError("integrator.dt", "must be positive");
  if (!(s.t_final > 0.0)) throw ConfigError("integrator.t_final", "must be positive");
  if (!(s.output_interval > 0.0) || s.output_interval > s.t_final)
    throw ConfigError("integrator.output_interval", "must lie in (0, t_final]");
  if (s.treatments.empty()) throw ConfigError("treatments", "at least one treatment is required");

  std::set<std::string> labels;
  for (std::size_t i = 0; i < s.treatments.size(); ++i) {
    const Treatment& t = s.treatments[i];
    const std::string f = "treatments[" + std::to_string(i) + "]";
    if (t.label.empty() || t.label.find_first_of("/\\,. ") != std::string::npos)
      throw ConfigError(f + ".label", "labels must be non-empty and free of '/', '\\', ',', '.' and spaces");
    if (!labels.insert(t.label).second) throw ConfigError(f + ".label", "duplicate label '" + t.label + "'");
    if (t.dt && !(*t.dt > 0.0)) throw ConfigError(f + ".dt", "must be positive");
    if (t.output_interval && !(*t.output_interval > 0.0)) throw ConfigError(f + ".output_interval", "must be positive");
    if (t.t_final && !(*t.t_final > 0.0 && *t.t_final <= s.t_final))
      throw ConfigError(f + ".t_final", "must lie in (0, integrator t_final]");
    if (quantum(t) && g.det() < floor * (1.0 - 1e-12))
      throw ConfigError("initial.cxx", "state with det C = " + std::to_string(g.det()) +
                                           " is not realizable for quantum treatment '" + t.label +
                                           "' (needs det C >= hbar^2/4 = " + std::to_string(floor) + ")");
    switch (t.kind) {
      case TreatmentKind::ensemble:
        if (t.particles < 2) throw ConfigError(f + ".particles", "need at least 2 particles");
        if (!(t.escape_bound > 0.0)) throw ConfigError(f + ".escape_bound", "must be positive");
        break;
      case TreatmentKind::schrodinger: {
        if (!s.pure) throw ConfigError("initial.pure", "treatment '" + t.label + "' evolves a wavefunction and needs a pure state");
        if (t.points < 64 || (t.points & (t.points - 1)) != 0)
          throw ConfigError(f + ".points", "must be a power of two >= 64");
        if (!(t.x_half_width > 0.0)) throw ConfigError(f + ".half_width", "must be positive");
        if (t.cat_separation < 0.0) throw ConfigError(f + ".cat_separation", "must be non-negative");
        try {
          const auto axis = GridAxis::centered(t.points, t.x_half_width, t.x_center);
          auto w = wavefunction_from_gaussian(g, axis, s.hbar, s.potential.mass());
          if (t.cat_separation > 0.0) {
            const double shift = 0.5 * t.cat_separation * std::sqrt(g.cxx);
            GaussianState a = g, b = g;
            a.mean_x -= shift;
            b.mean_x += shift;
            w = superpose(wavefunction_from_gaussian(a, axis, s.hbar, s.potential.mass()),
                          wavefunction_from_gaussian(b, axis, s.hbar, s.potential.mass()));
          }
          (void)moments_from_wavefunction(w, 1);
        } catch (const std::exception& e) {
          throw ConfigError(f + ".points", std::string("grid does not resolve the initial state: ") + e.what());
        }
        break;
      }
      case TreatmentKind::liouville: {
        const int np = t.p_points > 0 ? t.p_points : t.points;
        if (t.points < 16 || np < 16) throw ConfigError(f + ".points", "need at least 16 points per axis");
        if (!(t.x_half_width > 0.0)) throw ConfigError(f + ".x_half_width", "must be positive");
        if (!(t.p_half_width > 0.0)) throw ConfigError(f + ".p_half_width", "must be positive");
        if (t.substeps < 1) throw ConfigError(f + ".substeps", "must be at least 1");
        const auto grid = phase_grid_from_gaussian(g, GridAxis::centered(t.points, t.x_half_width, t.x_center),
                                                   GridAxis::centered(np, t.p_half_width, t.p_center));
        const LiouvilleOptions opts;
        if (boundary_mass_fraction(grid, opts.boundary_band) > opts.boundary_tolerance)
          throw ConfigError(f + ".x_half_width", "initial state has boundary mass above the abort tolerance");
        break;
      }
      case TreatmentKind::hierarchy:
        if (t.order < HierarchySpec::kMinOrder || t.order > HierarchySpec::kMaxOrder)
          throw ConfigError(f + ".order", "must lie in 2..6");
        try {
          HierarchySpec{s.potential, t.order, t.flavor, s.hbar, t.closure}.validate();
        } catch (const std::exception& e) {
          throw ConfigError(f + ".closure", e.what());
        }
        break;
      case TreatmentKind::mtga:
        if (t.explicit_sum.packets.empty()) {
          if (t.packets < 3) throw ConfigError(f + ".packets", "auto tiling needs at least 3 packets");
          if (!(t.radius > 0.0 && t.radius < std::sqrt(2.0))) throw ConfigError(f + ".radius", "must lie in (0, sqrt 2)");
        } else {
          try {
            t.explicit_sum.validate();
          } catch (const std::exception& e) {
            throw ConfigError(f + ".members", e.what());
          }
        }
        break;
      case TreatmentKind::lyapunov: {
        if (t.systems.empty()) throw ConfigError(f + ".systems", "need at least one system");
        if (!(t.renorm_interval > 0.0)) throw ConfigError(f + ".renorm_interval", "must be positive");
        if (!(t.transient_fraction >= 0.0 && t.transient_fraction < 1.0))
          throw ConfigError(f + ".transient_fraction", "must lie in [0, 1)");
        if (t.blocks < 10) throw ConfigError(f + ".blocks", "need at least 10 blocks");
        if (!(t.t_total > 0.0)) throw ConfigError(f + ".t_total", "must be positive");
        const double kept = t.t_total * (1.0 - t.transient_fraction) / (t.renorm_interval * s.dynamical_time);
        if (kept < t.blocks) throw ConfigError(f + ".t_total", "fewer renormalization intervals after the transient than blocks");
        for (std::size_t j = 0; j < t.scan.size(); ++j)
          if (!(t.scan[j].cxx > 0.0))
            throw ConfigError(f + ".scan[" + std::to_string(j) + "].cxx", "position variance must be positive");
        break;
      }
      case TreatmentKind::tdvp:
      case TreatmentKind::tga:
      case TreatmentKind::heller:
        break;
    }
  }
}

}  // namespace phaseflow::cli
