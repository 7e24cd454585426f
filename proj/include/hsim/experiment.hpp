#pragma once

// Experiment runner behind the homodyne_sim tool: JSON configs, parameter
// sweeps, figure presets and CSV/manifest output.

#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hsim/criteria.hpp"
#include "hsim/homodyne.hpp"
#include "hsim/spin_bec.hpp"
#include "hsim/state_factory.hpp"

namespace hsim::experiment {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kConvergenceStep = 5;
inline constexpr double kConvergenceTolerance = 1e-8;

enum class Kind {
  criterion_eval,
  fluctuation_sweep,
  lo_sweep,
  second_order_compare,
  spin_bec_trajectory,
  sample_run
};

inline const std::vector<std::pair<Kind, const char*>>& kind_names() {
  static const std::vector<std::pair<Kind, const char*>> names{
      {Kind::criterion_eval, "criterion_eval"},
      {Kind::fluctuation_sweep, "fluctuation_sweep"},
      {Kind::lo_sweep, "lo_sweep"},
      {Kind::second_order_compare, "second_order_compare"},
      {Kind::spin_bec_trajectory, "spin_bec_trajectory"},
      {Kind::sample_run, "sample_run"}};
  return names;
}

inline const char* to_string(Kind k) {
  for (const auto& [kind, name] : kind_names())
    if (kind == k) return name;
  return "?";
}

struct Sweep {
  std::string target;     // signal | lo | lo_c | lo_d
  std::string parameter;  // alpha | r | theta | n_th | x | n | n_th_over_alpha_sq
  std::vector<double> grid;
};

struct SpinSettings {
  cplx pump_alpha = 0.0;
  std::optional<int> n_max;
  std::vector<double> lambda_t;
  std::optional<double> lo_mean_n;  // for the noise-floor annotation
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  Kind experiment = Kind::criterion_eval;
  std::string name = "run";
  std::optional<StateSpec> signal;
  std::optional<StateSpec> lo_c;
  std::optional<StateSpec> lo_d;
  CriterionId criterion = CriterionId::M1;
  int s = 1;
  int t = 1;
  Path path = Path::factored;
  std::optional<Sweep> sweep;
  std::optional<MeasurementBudget> budget;
  std::uint64_t seed = 0;
  bool check_convergence = true;
  SpinSettings spin;
};

struct ConfigIssue {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<ConfigIssue> errors;
  std::size_t estimated_dimension = 0;
  std::size_t estimated_memory_bytes = 0;
  bool ok() const { return errors.empty(); }
};

inline json to_json(const ValidationReport& r) {
  json errs = json::array();
  for (const auto& e : r.errors) errs.push_back({{"path", e.path}, {"message", e.message}});
  return {{"valid", r.ok()},
          {"errors", errs},
          {"estimated_dimension", r.estimated_dimension},
          {"estimated_memory_bytes", r.estimated_memory_bytes}};
}

struct ConfigError : std::invalid_argument {
  ValidationReport report;
  explicit ConfigError(ValidationReport r)
      : std::invalid_argument(r.errors.empty() ? "invalid config"
                                               : r.errors.front().path + ": " +
                                                     r.errors.front().message),
        report(std::move(r)) {}
};

// ---------------------------------------------------------------------------
// Sweeps

/// Grid as an explicit list, {start, stop, step} or {start, stop, count}.
inline std::vector<double> parse_grid(const json& j) {
  std::vector<double> g;
  if (j.is_array()) {
    for (const auto& v : j) g.push_back(v.get<double>());
  } else if (j.is_object()) {
    const double start = j.at("start").get<double>();
    const double stop = j.at("stop").get<double>();
    if (j.contains("count")) {
      const int n = j.at("count").get<int>();
      if (n < 1) throw std::invalid_argument("count must be >= 1");
      for (int i = 0; i < n; ++i)
        g.push_back(n == 1 ? start : start + (stop - start) * i / (n - 1));
    } else {
      const double step = j.at("step").get<double>();
      if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
      const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
      if (n < 0) throw std::invalid_argument("stop must be >= start");
      if (n > 1000000) throw std::invalid_argument("grid too long");
      for (long i = 0; i <= n; ++i) g.push_back(start + static_cast<double>(i) * step);
    }
  } else {
    throw std::invalid_argument("grid must be a list or {start, stop, step|count}");
  }
  if (g.empty()) throw std::invalid_argument("grid is empty");
  for (double v : g)
    if (!std::isfinite(v)) throw std::invalid_argument("grid values must be finite");
  return g;
}

inline bool parameter_applies(StateKind k, const std::string& p) {
  using K = StateKind;
  if (p == "alpha")
    return k == K::coherent || k == K::displaced_thermal || k == K::displaced_squeezed ||
           k == K::displaced_fock;
  if (p == "r" || p == "theta") return k == K::squeezed_vacuum || k == K::displaced_squeezed;
  if (p == "n_th") return k == K::thermal || k == K::displaced_thermal;
  if (p == "n_th_over_alpha_sq") return k == K::displaced_thermal;
  if (p == "x") return k == K::tmsv;
  if (p == "n") return k == K::fock || k == K::displaced_fock || k == K::binomial;
  return false;
}

inline void apply_parameter(StateSpec& s, const std::string& p, double v) {
  if (!parameter_applies(s.kind, p))
    throw std::invalid_argument("parameter '" + p + "' does not exist on " +
                                to_string(s.kind));
  if (p == "alpha") s.alpha = v;
  else if (p == "r") s.r = v;
  else if (p == "theta") s.theta = v;
  else if (p == "n_th") s.n_th = v;
  else if (p == "n_th_over_alpha_sq") s.n_th = v * std::norm(s.alpha);
  else if (p == "x") s.x = v;
  else if (p == "n") {
    if (v != std::round(v)) throw std::invalid_argument("n must be an integer");
    s.n = static_cast<int>(v);
  }
}

struct PointSpecs {
  std::optional<StateSpec> signal, lo_c, lo_d;
};

inline PointSpecs point_specs(const ExperimentConfig& c, std::optional<double> value) {
  PointSpecs p{c.signal, c.lo_c, c.lo_d};
  if (c.sweep && value) {
    const auto& sw = *c.sweep;
    if (sw.target == "signal") apply_parameter(*p.signal, sw.parameter, *value);
    if (sw.target == "lo" || sw.target == "lo_c") apply_parameter(*p.lo_c, sw.parameter, *value);
    if (sw.target == "lo" || sw.target == "lo_d") apply_parameter(*p.lo_d, sw.parameter, *value);
  }
  return p;
}

/// Applies --cutoff-override and the convergence-check increment.
inline StateSpec with_cutoff(StateSpec s, std::optional<int> override_cutoff, int extra) {
  if (s.kind == StateKind::custom) return s;
  if (override_cutoff) s.cutoff = *override_cutoff;
  if (extra > 0) s.cutoff = (s.cutoff ? *s.cutoff : auto_cutoff(s)) + extra;
  return s;
}

// ---------------------------------------------------------------------------
// Config parsing and validation

namespace detail {

struct Parser {
  std::vector<ConfigIssue> errors;

  template <class F>
  void guard(const std::string& path, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      errors.push_back({path, e.what()});
    }
  }

  void known_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& path) {
    if (!j.is_object()) return;
    for (const auto& item : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || item.key() == a;
      if (!ok)
        errors.push_back({path.empty() ? item.key() : path + "." + item.key(), "unknown key"});
    }
  }

  std::optional<StateSpec> spec(const json& j, const std::string& path) {
    known_keys(j, {"kind", "n", "alpha", "r", "theta", "n_th", "x", "amplitudes", "cutoffs", "cutoff"},
               path);
    std::optional<StateSpec> out;
    guard(path, [&] {
      StateSpec s = state_spec_from_json(j);
      out = s;
      validate(s);
    });
    return out;
  }
};

inline bool needs_lo(Kind k, CriterionId id) {
  if (k == Kind::spin_bec_trajectory) return false;
  if (k == Kind::criterion_eval) return id != CriterionId::HZ1 && id != CriterionId::HZ2;
  return true;
}

inline bool needs_signal(Kind k) {
  return k != Kind::lo_sweep && k != Kind::spin_bec_trajectory;
}

inline std::size_t levels(const StateSpec& s) {
  const int c = s.cutoff ? *s.cutoff : auto_cutoff(s);
  return static_cast<std::size_t>(c) + 1;
}

inline std::size_t spec_dimension(const StateSpec& s) {
  if (s.kind == StateKind::custom) {
    if (s.custom_cutoffs.empty()) return s.amplitudes.size();
    std::size_t d = 1;
    for (int c : s.custom_cutoffs) d *= static_cast<std::size_t>(c) + 1;
    return d;
  }
  const std::size_t l = levels(s);
  return num_modes(s) == 2 ? l * l : l;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j, ValidationReport& report) {
  detail::Parser p;
  ExperimentConfig c;
  if (!j.is_object()) {
    report.errors.push_back({"", "config must be a JSON object"});
    return c;
  }
  p.known_keys(j,
               {"schema_version", "experiment", "name", "seed", "check_convergence", "criterion",
                "signal", "lo", "lo_d", "budget", "sweep", "spin_bec"},
               "");
  for (const char* key : {"criterion", "budget", "sweep", "spin_bec"})
    if (j.contains(key) && !j.at(key).is_object())
      p.errors.push_back({key, "must be an object"});
  if (j.contains("criterion")) p.known_keys(j.at("criterion"), {"id", "s", "t", "path"}, "criterion");
  if (j.contains("budget")) p.known_keys(j.at("budget"), {"samples", "excess_noise"}, "budget");
  if (j.contains("sweep")) p.known_keys(j.at("sweep"), {"target", "parameter", "grid"}, "sweep");
  if (j.contains("spin_bec"))
    p.known_keys(j.at("spin_bec"), {"pump_mean_n", "pump_alpha", "n_max", "lambda_t", "lo_mean_n"},
                 "spin_bec");
  p.guard("schema_version", [&] {
    if (!j.contains("schema_version")) throw std::invalid_argument("missing");
    c.schema_version = j.at("schema_version").get<int>();
    if (c.schema_version != kSchemaVersion)
      throw std::invalid_argument("unsupported version " + std::to_string(c.schema_version));
  });
  bool have_kind = false;
  p.guard("experiment", [&] {
    const auto name = j.at("experiment").get<std::string>();
    for (const auto& [k, n] : kind_names())
      if (name == n) {
        c.experiment = k;
        have_kind = true;
      }
    if (!have_kind) throw std::invalid_argument("unknown experiment '" + name + "'");
  });
  if (j.contains("name"))
    p.guard("name", [&] {
      c.name = j.at("name").get<std::string>();
      if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
        throw std::invalid_argument("name must be a plain file stem");
    });
  if (j.contains("seed")) p.guard("seed", [&] { c.seed = j.at("seed").get<std::uint64_t>(); });
  if (j.contains("check_convergence"))
    p.guard("check_convergence",
            [&] { c.check_convergence = j.at("check_convergence").get<bool>(); });
  if (j.contains("criterion"))
    p.guard("criterion", [&] {
      const auto& cr = j.at("criterion");
      if (cr.contains("id")) c.criterion = criterion_from_string(cr.at("id").get<std::string>());
      if (cr.contains("s")) c.s = cr.at("s").get<int>();
      if (cr.contains("t")) c.t = cr.at("t").get<int>();
      if (c.s < 1 || c.t < 1) throw std::invalid_argument("s and t must be >= 1");
      if (cr.contains("path")) {
        const auto path = cr.at("path").get<std::string>();
        if (path == "full") c.path = Path::full;
        else if (path != "factored") throw std::invalid_argument("path must be factored|full");
      }
    });
  if (j.contains("signal")) c.signal = p.spec(j.at("signal"), "signal");
  if (j.contains("lo")) {
    c.lo_c = p.spec(j.at("lo"), "lo");
    c.lo_d = c.lo_c;
  }
  if (j.contains("lo_d")) c.lo_d = p.spec(j.at("lo_d"), "lo_d");
  if (j.contains("budget"))
    p.guard("budget", [&] {
      MeasurementBudget b;
      const auto& bj = j.at("budget");
      if (bj.contains("samples")) b.samples = bj.at("samples").get<std::uint64_t>();
      if (bj.contains("excess_noise")) b.excess_noise = bj.at("excess_noise").get<double>();
      if (b.samples < 1) throw std::invalid_argument("samples must be >= 1");
      if (!(b.excess_noise >= 0.0)) throw std::invalid_argument("excess_noise must be >= 0");
      c.budget = b;
    });
  if (j.contains("sweep"))
    p.guard("sweep", [&] {
      const auto& sj = j.at("sweep");
      Sweep sw;
      sw.target = sj.value("target", std::string("lo"));
      sw.parameter = sj.at("parameter").get<std::string>();
      sw.grid = parse_grid(sj.at("grid"));
      c.sweep = std::move(sw);
    });
  if (j.contains("spin_bec"))
    p.guard("spin_bec", [&] {
      const auto& sj = j.at("spin_bec");
      if (sj.contains("pump_mean_n")) {
        const double m = sj.at("pump_mean_n").get<double>();
        if (!(m >= 0.0)) throw std::invalid_argument("pump_mean_n must be >= 0");
        c.spin.pump_alpha = std::sqrt(m);
      } else {
        c.spin.pump_alpha = hsim::detail::complex_from_json(sj.at("pump_alpha"));
      }
      if (sj.contains("n_max")) c.spin.n_max = sj.at("n_max").get<int>();
      c.spin.lambda_t = parse_grid(sj.at("lambda_t"));
      for (std::size_t i = 1; i < c.spin.lambda_t.size(); ++i)
        if (c.spin.lambda_t[i] < c.spin.lambda_t[i - 1])
          throw std::invalid_argument("lambda_t grid must be nondecreasing");
      if (sj.contains("lo_mean_n")) {
        c.spin.lo_mean_n = sj.at("lo_mean_n").get<double>();
        if (!(*c.spin.lo_mean_n > 0.0)) throw std::invalid_argument("lo_mean_n must be > 0");
      }
    });

  if (have_kind) {
    const Kind k = c.experiment;
    if (detail::needs_signal(k) && !j.contains("signal"))
      p.errors.push_back({"signal", "missing signal spec for " + std::string(to_string(k))});
    if (detail::needs_lo(k, c.criterion) && !j.contains("lo"))
      p.errors.push_back({"lo", "missing lo spec for " + std::string(to_string(k))});
    if (k == Kind::spin_bec_trajectory && !j.contains("spin_bec"))
      p.errors.push_back({"spin_bec", "missing spin_bec settings"});
    if (k == Kind::sample_run && c.sweep)
      p.errors.push_back({"sweep", "sample_run does not take a sweep"});
    if (k == Kind::spin_bec_trajectory && c.sweep)
      p.errors.push_back({"sweep", "spin_bec_trajectory does not take a sweep"});
    if (k == Kind::lo_sweep && c.sweep && c.sweep->target != "lo" && c.sweep->target != "lo_c")
      p.errors.push_back({"sweep.target", "lo_sweep sweeps the LO"});
    if (k == Kind::fluctuation_sweep && c.criterion != CriterionId::M1 &&
        c.criterion != CriterionId::M2)
      p.errors.push_back({"criterion.id", "fluctuation_sweep needs M1 or M2"});
    if (k == Kind::sample_run && c.criterion != CriterionId::M1 &&
        c.criterion != CriterionId::M2)
      p.errors.push_back({"criterion.id", "sample_run needs M1 or M2"});
    const bool hz = c.criterion == CriterionId::HZ1 || c.criterion == CriterionId::HZ2;
    if (!hz && (c.s != 1 || c.t != 1))
      p.errors.push_back({"criterion", "s and t apply to HZ1/HZ2 only"});
    if (c.signal && detail::needs_signal(k) && num_modes(*c.signal) != 2)
      p.errors.push_back({"signal", "signal must be a two-mode state"});
    for (const auto* lo : {&c.lo_c, &c.lo_d})
      if (*lo && num_modes(**lo) != 1) {
        p.errors.push_back({"lo", "LO must be a single-mode state"});
        break;
      }
    if (c.sweep) {
      const auto& sw = *c.sweep;
      std::vector<std::pair<std::string, const std::optional<StateSpec>*>> targets;
      if (sw.target == "signal") targets = {{"signal", &c.signal}};
      else if (sw.target == "lo") targets = {{"lo", &c.lo_c}, {"lo_d", &c.lo_d}};
      else if (sw.target == "lo_c") targets = {{"lo", &c.lo_c}};
      else if (sw.target == "lo_d") targets = {{"lo_d", &c.lo_d}};
      else p.errors.push_back({"sweep.target", "unknown target '" + sw.target + "'"});
      for (const auto& [name, spec] : targets) {
        if (!*spec) continue;
        if (!parameter_applies((*spec)->kind, sw.parameter)) {
          p.errors.push_back({"sweep.parameter", "parameter '" + sw.parameter +
                                                     "' does not exist on " + name + " (" +
                                                     to_string((*spec)->kind) + ")"});
          continue;
        }
        for (double v : {sw.grid.front(), sw.grid.back()})
          p.guard("sweep.grid", [&] {
            StateSpec s = **spec;
            apply_parameter(s, sw.parameter, v);
            validate(s);
          });
      }
    }
  }
  report.errors.insert(report.errors.end(), p.errors.begin(), p.errors.end());
  return c;
}

/// Always returns a report; never throws.
inline ValidationReport validate_config(const json& j) {
  ValidationReport r;
  ExperimentConfig c;
  try {
    c = parse_config(j, r);
  } catch (const std::exception& e) {
    r.errors.push_back({"", e.what()});
  }
  if (!r.ok()) return r;
  try {
    if (c.experiment == Kind::spin_bec_trajectory) {
      const int n_max = c.spin.n_max ? *c.spin.n_max : spin::default_n_max(c.spin.pump_alpha);
      std::size_t d = 0;
      for (int n = 0; n <= n_max; ++n) d += static_cast<std::size_t>(n / 2 + 1);
      r.estimated_dimension = d;
      r.estimated_memory_bytes = d * sizeof(cplx);
      return r;
    }
    std::vector<std::optional<double>> probes{std::nullopt};
    if (c.sweep) probes = {c.sweep->grid.front(), c.sweep->grid.back()};
    for (const auto& v : probes) {
      const PointSpecs ps = point_specs(c, v);
      std::size_t d = 1;
      if (ps.signal && detail::needs_signal(c.experiment)) d *= detail::spec_dimension(*ps.signal);
      if (detail::needs_lo(c.experiment, c.criterion)) {
        d *= detail::spec_dimension(*ps.lo_c);
        if (c.experiment != Kind::lo_sweep) d *= detail::spec_dimension(*ps.lo_d);
      }
      r.estimated_dimension = std::max(r.estimated_dimension, d);
    }
    r.estimated_memory_bytes = r.estimated_dimension * sizeof(cplx);
  } catch (const std::exception& e) {
    r.errors.push_back({"", std::string("dimension estimate failed: ") + e.what()});
  }
  return r;
}

inline ExperimentConfig parse_config(const json& j) {
  ValidationReport r;
  ExperimentConfig c = parse_config(j, r);
  if (!r.ok()) throw ConfigError(std::move(r));
  return c;
}

// ---------------------------------------------------------------------------
// Evaluation

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::optional<int> cutoff_override;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct RunResult {
  std::vector<std::filesystem::path> outputs;
  json manifest;
};

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_csv(const std::filesystem::path& file, const Table& t) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

/// Runs f(i) for i in [0, n) on up to `jobs` threads; results keep index
/// order. The first exception (by index) is rethrown after all workers stop.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, unsigned jobs, F&& f) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        out[i] = f(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

inline int criterion_type(CriterionId id) {
  return id == CriterionId::M2 || id == CriterionId::HZ2 ? 2 : 1;
}

struct Built {
  std::optional<QuantumState> signal, lo_c, lo_d;
};

inline Built build_point(const ExperimentConfig& c, const RunOptions& o,
                         std::optional<double> value, int extra) {
  const PointSpecs ps = point_specs(c, value);
  Built b;
  if (ps.signal && needs_signal(c.experiment))
    b.signal = build(with_cutoff(*ps.signal, o.cutoff_override, extra),
                     std::vector<std::string>{"a", "b"});
  if (needs_lo(c.experiment, c.criterion)) {
    StateSpec lo_c = *ps.lo_c;
    // The moment table is reported to full precision, which the population
    // rule behind the auto cutoff does not guarantee.
    if (c.experiment == Kind::lo_sweep && !lo_c.cutoff && !o.cutoff_override)
      lo_c.cutoff = moment_converged_cutoff(lo_c);
    b.lo_c = build(with_cutoff(lo_c, o.cutoff_override, extra), "c");
    if (c.experiment != Kind::lo_sweep)
      b.lo_d = build(with_cutoff(*ps.lo_d, o.cutoff_override, extra), "d");
  }
  return b;
}

inline std::vector<std::string> value_columns(const ExperimentConfig& c) {
  switch (c.experiment) {
    case Kind::criterion_eval: return {"lhs", "rhs", "margin", "violated"};
    case Kind::fluctuation_sweep: return {"delta_m_sq"};
    case Kind::lo_sweep:
      return {"mean_n", "mean_n_sq", "first_moment_sq", "second_moment_sq", "bound_A",
              "bound_16", "bound_18", "mandel_q", "selected_eq16"};
    case Kind::second_order_compare:
      return {"lhs", "rhs_eq16", "rhs_eq18", "margin_eq16", "margin_eq18", "selected_eq16"};
    default: return {};
  }
}

inline std::vector<double> evaluate_point(const ExperimentConfig& c, const RunOptions& o,
                                          std::optional<double> value, int extra) {
  const Built b = build_point(c, o, value, extra);
  switch (c.experiment) {
    case Kind::criterion_eval: {
      CriterionResult r;
      switch (c.criterion) {
        case CriterionId::HZ1: r = hz_original(*b.signal, 1, c.s, c.t); break;
        case CriterionId::HZ2: r = hz_original(*b.signal, 2, c.s, c.t); break;
        case CriterionId::M1:
        case CriterionId::M2:
          r = measured_first_order(*b.signal, *b.lo_c, *b.lo_d, criterion_type(c.criterion),
                                   c.path);
          break;
        case CriterionId::S1:
          r = measured_second_order(*b.signal, *b.lo_c, *b.lo_d, SecondOrderBound::eq16, c.path);
          break;
        case CriterionId::S2:
          r = measured_second_order(*b.signal, *b.lo_c, *b.lo_d, SecondOrderBound::eq18, c.path);
          break;
      }
      return {r.lhs, r.rhs, r.margin, r.violated ? 1.0 : 0.0};
    }
    case Kind::fluctuation_sweep:
      return {fluctuation_delta_m(*b.signal, *b.lo_c, *b.lo_d, criterion_type(c.criterion),
                                  c.path)};
    case Kind::lo_sweep: {
      const LOBoundReport r = lo_bounds(*b.lo_c);
      const double sel = std::isfinite(r.mandel_q)
                             ? (select_bound(r) == SecondOrderBound::eq16 ? 1.0 : 0.0)
                             : std::numeric_limits<double>::quiet_NaN();
      return {r.mean_n,   r.mean_n_sq, r.first_moment_sq, r.second_moment_sq, r.bound_A,
              r.bound_16, r.bound_18,  r.mandel_q,        sel};
    }
    case Kind::second_order_compare: {
      const HomodyneSetup setup(*b.signal, *b.lo_c, *b.lo_d);
      const auto r16 = measured_second_order(setup, SecondOrderBound::eq16, c.path);
      const auto r18 = measured_second_order(setup, SecondOrderBound::eq18, c.path);
      const bool sel = select_bound(lo_bounds(*b.lo_c)) == SecondOrderBound::eq16;
      return {r16.lhs, r16.rhs, r18.rhs, r16.margin, r18.margin, sel ? 1.0 : 0.0};
    }
    default: throw std::logic_error("evaluate_point: not a sweep experiment");
  }
}

struct RowOutcome {
  std::vector<double> values;
  bool converged = true;
  std::string status = "ok";
};

inline RowOutcome evaluate_row(const ExperimentConfig& c, const RunOptions& o,
                               std::optional<double> value) {
  RowOutcome row;
  const std::size_t width = value_columns(c).size();
  try {
    row.values = evaluate_point(c, o, value, 0);
  } catch (const CutoffError&) {
    row.values.assign(width, std::numeric_limits<double>::quiet_NaN());
    row.converged = false;
    row.status = "cutoff_error";
    return row;
  } catch (const DomainError&) {
    row.values.assign(width, std::numeric_limits<double>::quiet_NaN());
    row.converged = false;
    row.status = "domain_error";
    return row;
  }
  if (!c.check_convergence) return row;
  try {
    const auto refined = evaluate_point(c, o, value, kConvergenceStep);
    for (std::size_t i = 0; i < width; ++i) {
      const double a = row.values[i], b = refined[i];
      if (std::isnan(a) && std::isnan(b)) continue;
      if (!(std::abs(a - b) <= kConvergenceTolerance * std::max(1.0, std::abs(a))))
        row.converged = false;
    }
  } catch (const CutoffError&) {
    row.converged = false;
  }
  if (!row.converged) row.status = "unconverged";
  return row;
}

inline std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace detail

/// Sweep table for criterion_eval, fluctuation_sweep, lo_sweep and
/// second_order_compare. Rows are in grid order.
inline Table sweep_table(const ExperimentConfig& c, const RunOptions& o) {
  Table t;
  if (c.sweep) t.columns.push_back(c.sweep->parameter);
  for (auto& col : detail::value_columns(c)) t.columns.push_back(col);
  t.columns.push_back("converged");
  t.columns.push_back("status");
  std::vector<std::optional<double>> points{std::nullopt};
  if (c.sweep) points.assign(c.sweep->grid.begin(), c.sweep->grid.end());
  const auto rows = detail::parallel_map<detail::RowOutcome>(
      points.size(), o.jobs, [&](std::size_t i) { return detail::evaluate_row(c, o, points[i]); });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::string> r;
    if (points[i]) r.push_back(detail::fmt(*points[i]));
    for (double v : rows[i].values) r.push_back(detail::fmt(v));
    r.push_back(rows[i].converged ? "1" : "0");
    r.push_back(rows[i].status);
    t.rows.push_back(std::move(r));
  }
  return t;
}

/// Runs a validated config and writes its CSV tables and manifest into
/// o.out_dir.
inline RunResult run(const json& config_json, const RunOptions& o) {
  ExperimentConfig c = parse_config(config_json);
  if (o.seed) c.seed = *o.seed;
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = detail::timestamp_utc();
  std::filesystem::create_directories(o.out_dir);

  RunResult res;
  json summary = json::object();
  auto emit = [&](const std::string& suffix, const Table& t) {
    const auto file = o.out_dir / (c.name + suffix + ".csv");
    detail::write_csv(file, t);
    res.outputs.push_back(file);
  };

  switch (c.experiment) {
    case Kind::criterion_eval:
    case Kind::fluctuation_sweep:
    case Kind::lo_sweep:
    case Kind::second_order_compare: {
      const Table t = sweep_table(c, o);
      std::size_t flagged = 0;
      for (const auto& r : t.rows) flagged += r.back() != "ok";
      summary["rows"] = t.rows.size();
      summary["flagged_rows"] = flagged;
      emit("", t);
      break;
    }
    case Kind::spin_bec_trajectory: {
      const int n_max = c.spin.n_max ? *c.spin.n_max : spin::default_n_max(c.spin.pump_alpha);
      const auto initial = spin::coherent_pump(c.spin.pump_alpha, n_max);
      const spin::SpinDynamics dyn(initial);
      const auto tr = spin::trajectory(dyn, initial, c.spin.lambda_t);
      Table traj{{"lambda_t", "pop1", "pair_corr_re", "pair_corr_im", "margin"}, {}};
      Table dist{{"lambda_t", "k", "p"}, {}};
      for (std::size_t i = 0; i < tr.lambda_t.size(); ++i) {
        traj.rows.push_back({detail::fmt(tr.lambda_t[i]), detail::fmt(tr.pop1[i]),
                             detail::fmt(tr.pair_corr[i].real()),
                             detail::fmt(tr.pair_corr[i].imag()), detail::fmt(tr.margin[i])});
        for (std::size_t k = 0; k < tr.number_dist[i].size(); ++k)
          dist.rows.push_back({detail::fmt(tr.lambda_t[i]), std::to_string(k),
                               detail::fmt(tr.number_dist[i][k])});
      }
      emit("_trajectory", traj);
      emit("_number_dist", dist);
      summary["n_max"] = n_max;
      double worst_norm = 0.0;
      for (double nrm : tr.norm) worst_norm = std::max(worst_norm, std::abs(nrm - 1.0));
      summary["max_norm_defect"] = worst_norm;
      if (c.spin.lo_mean_n) {
        const double ex = c.budget ? c.budget->excess_noise : 0.0;
        summary["lo_mean_n"] = *c.spin.lo_mean_n;
        summary["excess_noise"] = ex;
        summary["quadrature_noise_floor"] = spin::lo_budget_check(*c.spin.lo_mean_n, ex);
      }
      break;
    }
    case Kind::sample_run: {
      const MeasurementBudget budget = c.budget.value_or(MeasurementBudget{100000, 0.0});
      const auto b = detail::build_point(c, o, std::nullopt, 0);
      const HomodyneSetup setup(*b.signal, *b.lo_c, *b.lo_d);
      const auto ops = first_order_settings(setup);
      const auto samples = sample_first_order(setup, budget, c.seed);
      Table t{{"setting", "exact", "mean", "std_error", "z_score", "samples"}, {}};
      std::array<cplx, 4> means{}, exact{};
      for (std::size_t k = 0; k < 4; ++k) {
        exact[k] = setup.expectation(ops[k], Path::factored);
        means[k] = samples[k].mean;
        const double se = samples[k].std_error;
        const double z = se > 0.0 ? (samples[k].mean - exact[k].real()) / se : 0.0;
        t.rows.push_back({kFirstOrderSettingNames[k], detail::fmt(exact[k].real()),
                          detail::fmt(samples[k].mean), detail::fmt(se), detail::fmt(z),
                          std::to_string(budget.samples)});
      }
      const cplx i(0.0, 1.0);
      auto combine = [&](const std::array<cplx, 4>& v) {
        return detail::criterion_type(c.criterion) == 1
                   ? v[0] + v[1] - i * v[2] + i * v[3]
                   : v[0] - v[1] + i * v[2] + i * v[3];
      };
      summary["lhs_estimate"] = std::norm(combine(means));
      summary["lhs_exact"] = std::norm(combine(exact));
      summary["samples"] = budget.samples;
      summary["excess_noise"] = budget.excess_noise;
      emit("", t);
      break;
    }
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json outputs = json::array();
  for (const auto& f : res.outputs) outputs.push_back(f.filename().string());
  res.manifest = {{"tool", "homodyne_sim"},
                  {"tool_version", kToolVersion},
                  {"schema_version", kSchemaVersion},
                  {"experiment", to_string(c.experiment)},
                  {"name", c.name},
                  {"config", config_json},
                  {"config_digest", fnv1a_hex(config_json.dump())},
                  {"seed", c.seed},
                  {"jobs", o.jobs},
                  {"cutoff_override", o.cutoff_override ? json(*o.cutoff_override) : json()},
                  {"started_at", started},
                  {"wall_time_s", wall},
                  {"outputs", outputs},
                  {"summary", summary}};
  const auto mfile = o.out_dir / (c.name + "_manifest.json");
  std::ofstream m(mfile);
  if (!m) throw std::runtime_error("cannot write " + mfile.string());
  m << res.manifest.dump(2) << '\n';
  res.outputs.push_back(mfile);
  return res;
}

// ---------------------------------------------------------------------------
// Presets

struct Preset {
  const char* name;
  const char* description;
  json config;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    const double x3db = 1.0 / 3.0;  // tanh(ln 2 / 2)
    std::vector<Preset> p;
    p.push_back({"fig2a", "single-excitation state: fluctuation vs coherent LO amplitude",
                 {{"schema_version", kSchemaVersion},
                  {"experiment", "fluctuation_sweep"},
                  {"name", "fig2a"},
                  {"signal", {{"kind", "single_excitation"}}},
                  {"lo", {{"kind", "coherent"}, {"alpha", 1.0}}},
                  {"criterion", {{"id", "M1"}}},
                  {"sweep",
                   {{"target", "lo"},
                    {"parameter", "alpha"},
                    {"grid", {{"start", 0.5}, {"stop", 16.0}, {"step", 0.5}}}}}}});
    p.push_back({"fig2b", "single-excitation state: M1 vs displaced-thermal LO noise",
                 {{"schema_version", kSchemaVersion},
                  {"experiment", "criterion_eval"},
                  {"name", "fig2b"},
                  {"signal", {{"kind", "single_excitation"}}},
                  {"lo", {{"kind", "displaced_thermal"}, {"alpha", 2.0}, {"n_th", 0.0}}},
                  {"criterion", {{"id", "M1"}}},
                  {"sweep",
                   {{"target", "lo"},
                    {"parameter", "n_th"},
                    {"grid", {{"start", 0.0}, {"stop", 4.0}, {"step", 0.1}}}}}}});
    p.push_back({"fig3a", "TMSV at 3 dB: fluctuation vs coherent LO amplitude",
                 {{"schema_version", kSchemaVersion},
                  {"experiment", "fluctuation_sweep"},
                  {"name", "fig3a"},
                  {"signal", {{"kind", "tmsv"}, {"x", x3db}}},
                  {"lo", {{"kind", "coherent"}, {"alpha", 1.0}}},
                  {"criterion", {{"id", "M2"}}},
                  {"sweep",
                   {{"target", "lo"},
                    {"parameter", "alpha"},
                    {"grid", {{"start", 0.5}, {"stop", 16.0}, {"step", 0.5}}}}}}});
    p.push_back({"fig3b", "TMSV at 3 dB: M2 vs N_th/|alpha|^2 of displaced-thermal LOs",
                 {{"schema_version", kSchemaVersion},
                  {"experiment", "criterion_eval"},
                  {"name", "fig3b"},
                  {"signal", {{"kind", "tmsv"}, {"x", x3db}}},
                  {"lo", {{"kind", "displaced_thermal"}, {"alpha", 1.0}, {"n_th", 0.0}}},
                  {"criterion", {{"id", "M2"}}},
                  {"sweep",
                   {{"target", "lo"},
                    {"parameter", "n_th_over_alpha_sq"},
                    {"grid", {{"start", 0.0}, {"stop", 4.0}, {"step", 0.02}}}}}}});
    p.push_back({"fig4a", "binomial(4): second-order tests with coherent LOs",
                 {{"schema_version", kSchemaVersion},
                  {"experiment", "second_order_compare"},
                  {"name", "fig4a"},
                  {"signal", {{"kind", "binomial"}, {"n", 4}}},
                  {"lo", {{"kind", "coherent"}, {"alpha", 1.0}}},
                  {"sweep",
                   {{"target", "lo"},
                    {"parameter", "alpha"},
                    {"grid", {{"start", 0.5}, {"stop", 4.0}, {"step", 0.05}}}}}}});
    p.push_back({"fig4b", "binomial(4): second-order tests with squeezed-vacuum LOs",
                 {{"schema_version", kSchemaVersion},
                  {"experiment", "second_order_compare"},
                  {"name", "fig4b"},
                  {"signal", {{"kind", "binomial"}, {"n", 4}}},
                  // The eq16 factor weights the number tail by n^4; the population-only
                  // auto cutoff leaves it unconverged at the 1e-8 level.
                  {"lo", {{"kind", "squeezed_vacuum"}, {"r", 0.5}, {"cutoff", 300}}},
                  {"sweep",
                   {{"target", "lo"},
                    {"parameter", "r"},
                    {"grid", {{"start", 0.1}, {"stop", 1.2}, {"step", 0.02}}}}}}});
    p.push_back({"fig5", "spin-1 BEC pair creation from a pump with <n0> = 50",
                 {{"schema_version", kSchemaVersion},
                  {"experiment", "spin_bec_trajectory"},
                  {"name", "fig5"},
                  {"spin_bec",
                   {{"pump_mean_n", 50.0},
                    {"lambda_t", {{"start", 0.0}, {"stop", 1.0}, {"step", 0.005}}},
                    {"lo_mean_n", 100.0}}},
                  {"budget", {{"samples", 1000}, {"excess_noise", 4.0}}}}});
    return p;
  }();
  return all;
}

inline const Preset& preset(const std::string& name) {
  for (const auto& p : presets())
    if (name == p.name) return p;
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace hsim::experiment
