#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ns2d/cylinder.hpp"
#include "ns2d/solver.hpp"

namespace ns2d {

static_assert(std::endian::native == std::endian::little,
              "snapshot files are little-endian; big-endian hosts need byte swaps");

// ---------------------------------------------------------------------------
// Snapshot binary format:
//   magic "NS2D" | u32 version=1 | u32 n | f64 t | u1 | u2 | p
// with the three fields as row-major f64 arrays of n^2 entries.
// ---------------------------------------------------------------------------

constexpr std::uint32_t kSnapshotVersion = 1;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write("NS2D", 4);
  const std::uint32_t version = kSnapshotVersion;
  const std::uint32_t n = static_cast<std::uint32_t>(snap.u.grid.n);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&snap.t), 8);
  auto write_field = [&](const ScalarField& f) {
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  };
  write_field(snap.u.comp[0]);
  write_field(snap.u.comp[1]);
  write_field(snap.p);
  if (!out) throw IoError("short write to " + path.string());
}

inline Snapshot read_snapshot(const std::filesystem::path& path, double length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "NS2D", 4) != 0)
    throw IoError(path.string() + ": bad magic, not a snapshot file");
  std::uint32_t version = 0, n = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  if (version != kSnapshotVersion)
    throw IoError(path.string() + ": unsupported snapshot version " + std::to_string(version));
  Snapshot snap;
  in.read(reinterpret_cast<char*>(&snap.t), 8);
  Grid g(static_cast<int>(n), length);
  snap.u = VectorField(g);
  snap.p = ScalarField(g);
  auto read_field = [&](ScalarField& f) {
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  };
  read_field(snap.u.comp[0]);
  read_field(snap.u.comp[1]);
  read_field(snap.p);
  if (!in) throw IoError(path.string() + ": truncated snapshot");
  return snap;
}

// ---------------------------------------------------------------------------
// Flat sectioned key-value files (configs and manifests)
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int line_, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

/// Parsed key-value file: per section, ordered (key, value, line) entries.
struct KeyValueFile {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::map<std::string, std::vector<Entry>> sections;

  const Entry* find(const std::string& section, const std::string& key) const {
    auto it = sections.find(section);
    if (it == sections.end()) return nullptr;
    for (const auto& e : it->second)
      if (e.key == key) return &e;
    return nullptr;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(e->value, &pos);
      if (pos != e->value.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError(e->line, "expected a number for '" + key + "', got '" + e->value + "'");
    }
  }

  long get_int(const std::string& section, const std::string& key, long fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    try {
      std::size_t pos = 0;
      const long v = std::stol(e->value, &pos);
      if (pos != e->value.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError(e->line, "expected an integer for '" + key + "', got '" + e->value + "'");
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    if (e->value == "on" || e->value == "true" || e->value == "1") return true;
    if (e->value == "off" || e->value == "false" || e->value == "0") return false;
    throw ConfigError(e->line, "expected on/off for '" + key + "', got '" + e->value + "'");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline KeyValueFile parse_keyvalue(std::istream& in) {
  KeyValueFile file;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(lineno, "unterminated section header");
      section = detail::trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ConfigError(lineno, "empty section name");
      file.sections[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, "empty key");
    if (section.empty()) throw ConfigError(lineno, "key outside of any [section]");
    file.sections[section].push_back({key, value, lineno});
  }
  return file;
}

inline KeyValueFile parse_keyvalue_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_keyvalue(in);
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct DiagnosticsOptions {
  double margin_s = 0.0;      // interior time margin
  double tau = 0.5;           // Theta coupling radius ratio
  double gamma = 0.5;         // forcing regularity parameter for reports
  int ladder_depth = 4;
  double stride_factor = 0.5;
  std::size_t max_top_times = 3;
};

struct ExperimentConfig {
  SolverConfig solver;
  DiagnosticsOptions diagnostics;
  std::vector<std::string> suites;
  std::filesystem::path output_dir = "out";
};

namespace detail {

inline ForcingKind forcing_kind_from(const std::string& s, int line) {
  if (s == "zero") return ForcingKind::Zero;
  if (s == "indicator_stress") return ForcingKind::IndicatorStress;
  if (s == "hoelder_random") return ForcingKind::HoelderRandomStress;
  if (s == "lq_stress") return ForcingKind::LqStress;
  if (s == "smooth") return ForcingKind::SmoothStress;
  throw ConfigError(line, "unknown forcing kind '" + s + "'");
}

inline const char* forcing_kind_name(ForcingKind k) {
  switch (k) {
    case ForcingKind::Zero: return "zero";
    case ForcingKind::IndicatorStress: return "indicator_stress";
    case ForcingKind::HoelderRandomStress: return "hoelder_random";
    case ForcingKind::LqStress: return "lq_stress";
    case ForcingKind::SmoothStress: return "smooth";
  }
  return "zero";
}

inline InitialKind initial_kind_from(const std::string& s, int line) {
  if (s == "zero") return InitialKind::Zero;
  if (s == "taylor_green") return InitialKind::TaylorGreen;
  if (s == "random_div_free") return InitialKind::RandomDivFree;
  if (s == "single_mode") return InitialKind::SingleMode;
  throw ConfigError(line, "unknown initial condition '" + s + "'");
}

inline const char* initial_kind_name(InitialKind k) {
  switch (k) {
    case InitialKind::Zero: return "zero";
    case InitialKind::TaylorGreen: return "taylor_green";
    case InitialKind::RandomDivFree: return "random_div_free";
    case InitialKind::SingleMode: return "single_mode";
  }
  return "zero";
}

inline int entry_line(const KeyValueFile& kv, const std::string& sec, const std::string& key) {
  const KeyValueFile::Entry* e = kv.find(sec, key);
  return e ? e->line : 0;
}

}  // namespace detail

inline ForcingSpec forcing_from_keyvalue(const KeyValueFile& kv, const std::string& sec) {
  ForcingSpec f;
  if (const auto* e = kv.find(sec, "kind")) f.kind = detail::forcing_kind_from(e->value, e->line);
  f.gamma = kv.get_double(sec, "gamma", f.gamma);
  f.amplitude = kv.get_double(sec, "amplitude", f.amplitude);
  f.seed = static_cast<std::uint64_t>(kv.get_int(sec, "seed", 0));
  f.disk_center.x = kv.get_double(sec, "disk_center_x", f.disk_center.x);
  f.disk_center.y = kv.get_double(sec, "disk_center_y", f.disk_center.y);
  f.disk_radius = kv.get_double(sec, "disk_radius", f.disk_radius);
  f.cutoff = static_cast<int>(kv.get_int(sec, "cutoff", f.cutoff));
  f.q = kv.get_double(sec, "q", f.q);
  const std::string td = kv.get_string(sec, "time", "static");
  if (td == "static")
    f.time_dependence = TimeDependence::Static;
  else if (td == "modulated")
    f.time_dependence = TimeDependence::Modulated;
  else
    throw ConfigError(detail::entry_line(kv, sec, "time"), "time must be static or modulated");
  f.frequency = kv.get_double(sec, "frequency", f.frequency);
  return f;
}

inline ExperimentConfig experiment_from_keyvalue(const KeyValueFile& kv) {
  ExperimentConfig cfg;
  const int n = static_cast<int>(kv.get_int("solver", "n", 64));
  const double length = kv.get_double("solver", "length", 2.0 * std::numbers::pi);
  try {
    cfg.solver.grid = Grid(n, length);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(detail::entry_line(kv, "solver", "n"), e.what());
  }
  cfg.solver.dt = kv.get_double("solver", "dt", cfg.solver.dt);
  cfg.solver.t_end = kv.get_double("solver", "t_end", cfg.solver.t_end);
  cfg.solver.viscosity = kv.get_double("solver", "viscosity", 1.0);
  cfg.solver.output_every = static_cast<int>(kv.get_int("solver", "output_every", 1));
  cfg.solver.nonlinearity = kv.get_bool("solver", "nonlinearity", true);
  cfg.solver.snapshot_start = kv.get_double("solver", "snapshot_start", 0.0);

  if (const auto* e = kv.find("initial", "kind"))
    cfg.solver.initial.kind = detail::initial_kind_from(e->value, e->line);
  cfg.solver.initial.seed = static_cast<std::uint64_t>(kv.get_int("initial", "seed", 0));
  cfg.solver.initial.spectrum_slope =
      kv.get_double("initial", "spectrum_slope", cfg.solver.initial.spectrum_slope);
  cfg.solver.initial.k1 = static_cast<int>(kv.get_int("initial", "k1", 1));
  cfg.solver.initial.k2 = static_cast<int>(kv.get_int("initial", "k2", 0));
  cfg.solver.initial.mean_velocity.x = kv.get_double("initial", "mean_u1", 0.0);
  cfg.solver.initial.mean_velocity.y = kv.get_double("initial", "mean_u2", 0.0);

  cfg.solver.forcing = forcing_from_keyvalue(kv, "forcing");

  cfg.diagnostics.margin_s = kv.get_double("diagnostics", "margin", 0.0);
  cfg.diagnostics.tau = kv.get_double("diagnostics", "tau", 0.5);
  cfg.diagnostics.gamma = kv.get_double("diagnostics", "gamma", 0.5);
  cfg.diagnostics.ladder_depth = static_cast<int>(kv.get_int("diagnostics", "ladder_depth", 4));
  cfg.diagnostics.stride_factor = kv.get_double("diagnostics", "stride_factor", 0.5);
  cfg.diagnostics.max_top_times =
      static_cast<std::size_t>(kv.get_int("diagnostics", "top_times", 3));

  if (const auto* e = kv.find("suites", "enabled")) {
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (!item.empty() && item != "none") cfg.suites.push_back(item);
    }
  }
  cfg.output_dir = kv.get_string("output", "directory", "out");

  try {
    cfg.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Trajectory directory: snapshots + manifest + energy log
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_energy_csv(const std::filesystem::path& path,
                             const std::vector<EnergyRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string());
  out << "# schema ns2d.energy v1\n";
  out << "t,kinetic,diss_rate,work_rate,grad_norm_sq,forcing_power,nl_transfer,f_l2_sq\n";
  for (const auto& r : rows)
    out << format_double(r.t) << ',' << format_double(r.kinetic) << ','
        << format_double(r.diss_rate) << ',' << format_double(r.work_rate) << ','
        << format_double(r.grad_norm_sq) << ',' << format_double(r.forcing_power) << ','
        << format_double(r.nl_transfer) << ',' << format_double(r.f_l2_sq) << '\n';
}

inline void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj) {
  std::filesystem::create_directories(dir);
  std::ofstream man(dir / "manifest.txt");
  if (!man) throw IoError("cannot open manifest in " + dir.string());
  man << "# ns2d trajectory manifest\n";
  man << "[format]\nschema = ns2d.trajectory.v1\n\n";
  const SolverConfig& c = traj.config;
  man << "[solver]\n";
  man << "n = " << c.grid.n << "\n";
  man << "length = " << format_double(c.grid.length) << "\n";
  man << "dt = " << format_double(c.dt) << "\n";
  man << "t_end = " << format_double(c.t_end) << "\n";
  man << "viscosity = " << format_double(c.viscosity) << "\n";
  man << "nonlinearity = " << (c.nonlinearity ? "on" : "off") << "\n";
  man << "output_every = " << c.output_every << "\n";
  man << "snapshot_start = " << format_double(c.snapshot_start) << "\n\n";
  man << "[initial]\n";
  man << "kind = " << detail::initial_kind_name(c.initial.kind) << "\n";
  man << "seed = " << c.initial.seed << "\n";
  man << "spectrum_slope = " << format_double(c.initial.spectrum_slope) << "\n";
  man << "k1 = " << c.initial.k1 << "\nk2 = " << c.initial.k2 << "\n";
  man << "mean_u1 = " << format_double(c.initial.mean_velocity.x) << "\n";
  man << "mean_u2 = " << format_double(c.initial.mean_velocity.y) << "\n\n";
  man << "[forcing]\n";
  man << "kind = " << detail::forcing_kind_name(c.forcing.kind) << "\n";
  man << "gamma = " << format_double(c.forcing.gamma) << "\n";
  man << "amplitude = " << format_double(c.forcing.amplitude) << "\n";
  man << "seed = " << c.forcing.seed << "\n";
  man << "disk_center_x = " << format_double(c.forcing.disk_center.x) << "\n";
  man << "disk_center_y = " << format_double(c.forcing.disk_center.y) << "\n";
  man << "disk_radius = " << format_double(c.forcing.disk_radius) << "\n";
  man << "cutoff = " << c.forcing.cutoff << "\n";
  man << "q = " << format_double(c.forcing.q) << "\n";
  man << "time = " << (c.forcing.is_static() ? "static" : "modulated") << "\n";
  man << "frequency = " << format_double(c.forcing.frequency) << "\n\n";
  man << "[status]\n";
  man << "aborted = " << (traj.aborted ? "true" : "false") << "\n";
  if (traj.aborted) man << "abort_reason = " << traj.abort_reason << "\n";
  man << "\n[snapshots]\n";
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "snap_%06zu.bin", i);
    man << "snapshot = " << name << ' ' << format_double(traj.snapshots[i].t) << "\n";
    write_snapshot(dir / name, traj.snapshots[i]);
  }
  write_energy_csv(dir / "energy.csv", traj.energy_log);
}

/// Lazily loaded trajectory directory with a one-snapshot cache; the
/// level-major evaluator sweeps read each snapshot once per pass.
class DiskTrajectory {
 public:
  explicit DiskTrajectory(const std::filesystem::path& dir) : dir_(dir) {
    KeyValueFile kv = parse_keyvalue_file(dir / "manifest.txt");
    const std::string schema = kv.get_string("format", "schema", "");
    if (schema != "ns2d.trajectory.v1")
      throw IoError("unsupported trajectory schema '" + schema + "' in " + dir.string());
    const int n = static_cast<int>(kv.get_int("solver", "n", 0));
    const double length = kv.get_double("solver", "length", 2.0 * std::numbers::pi);
    grid_ = Grid(n, length);
    forcing_ = forcing_from_keyvalue(kv, "forcing");
    auto it = kv.sections.find("snapshots");
    if (it == kv.sections.end() || it->second.empty())
      throw IoError("manifest lists no snapshots in " + dir.string());
    for (const auto& e : it->second) {
      if (e.key != "snapshot") continue;
      std::stringstream ss(e.value);
      std::string name;
      double t = 0.0;
      ss >> name >> t;
      if (name.empty()) throw ConfigError(e.line, "malformed snapshot entry");
      files_.push_back(name);
      times_.push_back(t);
    }
  }

  const Grid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  const ForcingSpec& forcing_spec() const { return forcing_; }
  std::size_t count() const { return times_.size(); }

  const Snapshot& at(std::size_t j) const {
    if (j >= files_.size()) throw std::out_of_range("snapshot index");
    if (!cached_ || cached_index_ != j) {
      cached_ = read_snapshot(dir_ / files_[j], grid_.length);
      cached_index_ = j;
    }
    return *cached_;
  }

 private:
  std::filesystem::path dir_;
  Grid grid_;
  ForcingSpec forcing_;
  std::vector<std::string> files_;
  std::vector<double> times_;
  mutable std::optional<Snapshot> cached_;
  mutable std::size_t cached_index_ = static_cast<std::size_t>(-1);
};

struct DiskVelocity {
  const DiskTrajectory* traj;
  const Grid& grid() const { return traj->grid(); }
  const std::vector<double>& times() const { return traj->times(); }
  Vec2 value(std::size_t level, std::size_t node) const {
    const Snapshot& s = traj->at(level);
    return {s.u.comp[0].values[node], s.u.comp[1].values[node]};
  }
};

struct DiskPressure {
  const DiskTrajectory* traj;
  const Grid& grid() const { return traj->grid(); }
  const std::vector<double>& times() const { return traj->times(); }
  double value(std::size_t level, std::size_t node) const {
    return traj->at(level).p.values[node];
  }
};

}  // namespace ns2d
