#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"

#include "erm/cloud.hpp"
#include "erm/decay_matrix.hpp"
#include "erm/eigenvectors.hpp"
#include "erm/ensemble.hpp"
#include "erm/entry_moments.hpp"
#include "erm/errors.hpp"
#include "erm/fractal.hpp"
#include "erm/histogram.hpp"
#include "erm/scan.hpp"
#include "erm/spectrum.hpp"
#include "erm/surmise.hpp"
#include "erm/triangle.hpp"

namespace erm {

enum class ExperimentKind {
  spectrum,
  triangle_fit,
  nnsd_scan,
  eigvec_stats,
  fractal_scan,
  entry_moments,
  decay_rate,
};

inline const std::map<ExperimentKind, std::string>& experiment_names() {
  static const std::map<ExperimentKind, std::string> names{
      {ExperimentKind::spectrum, "spectrum"},         {ExperimentKind::triangle_fit, "triangle-fit"},
      {ExperimentKind::nnsd_scan, "nnsd-scan"},       {ExperimentKind::eigvec_stats, "eigvec-stats"},
      {ExperimentKind::fractal_scan, "fractal-scan"}, {ExperimentKind::entry_moments, "entry-moments"},
      {ExperimentKind::decay_rate, "decay-rate"}};
  return names;
}

inline std::string to_string(ExperimentKind k) { return experiment_names().at(k); }

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  for (const auto& [k, name] : experiment_names())
    if (name == s) return k;
  throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

enum class DecayState { symmetric, random, antisymmetric_pair };

inline std::string to_string(DecayState s) {
  switch (s) {
    case DecayState::symmetric: return "symmetric";
    case DecayState::random: return "random";
    case DecayState::antisymmetric_pair: return "antisymmetric-pair";
  }
  return "symmetric";
}

inline DecayState parse_decay_state(const std::string& s) {
  if (s == "symmetric") return DecayState::symmetric;
  if (s == "random") return DecayState::random;
  if (s == "antisymmetric-pair") return DecayState::antisymmetric_pair;
  throw std::invalid_argument("unknown decay-rate state '" + s + "'");
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::spectrum;
  std::size_t n_atoms = 1000;
  std::optional<double> b0 = 1.0;
  std::optional<double> mode_count;
  std::size_t realizations = 1;
  std::uint64_t master_seed = 0;
  BinningPolicy binning{};
  UnfoldingOptions unfolding{};
  std::size_t window_size = 1000;
  double goodness_threshold = 3.0;
  std::vector<std::size_t> sizes{500, 1000, 2000, 4000, 8000};
  std::vector<int> q_list{2, 3, 4, 5};
  std::size_t samples = 1000000;
  DecayState state = DecayState::symmetric;
  std::string output_dir = "out";
  std::size_t workers = 1;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.kind == b.kind && a.n_atoms == b.n_atoms && a.b0 == b.b0 && a.mode_count == b.mode_count &&
           a.realizations == b.realizations && a.master_seed == b.master_seed &&
           a.binning.width == b.binning.width && a.binning.bins == b.binning.bins &&
           a.binning.lower == b.binning.lower && a.binning.upper == b.binning.upper &&
           a.binning.max_bins == b.binning.max_bins && a.unfolding.method == b.unfolding.method &&
           a.unfolding.degree == b.unfolding.degree && a.window_size == b.window_size &&
           a.goodness_threshold == b.goodness_threshold && a.sizes == b.sizes && a.q_list == b.q_list &&
           a.samples == b.samples && a.state == b.state && a.output_dir == b.output_dir &&
           a.workers == b.workers;
  }

  /// The mode count M actually used: explicit M, or N / b0.
  double effective_mode_count() const {
    return mode_count ? *mode_count : static_cast<double>(n_atoms) / *b0;
  }
};

inline void validate(const ExperimentConfig& c) {
  if (c.n_atoms == 0) throw std::invalid_argument("n must be >= 1");
  if (c.realizations == 0) throw std::invalid_argument("realizations must be >= 1");
  if (c.workers == 0) throw std::invalid_argument("workers must be >= 1");
  if (c.b0.has_value() == c.mode_count.has_value())
    throw std::invalid_argument("exactly one of b0 and modes-m must be set");
  if (c.b0 && !(*c.b0 > 0.0 && std::isfinite(*c.b0))) throw std::invalid_argument("b0 must be > 0");
  if (c.mode_count && !(*c.mode_count > 0.0 && std::isfinite(*c.mode_count)))
    throw std::invalid_argument("modes-m must be > 0");
  if (c.binning.width && !(*c.binning.width > 0.0)) throw std::invalid_argument("bin width must be > 0");
  if (c.binning.bins && *c.binning.bins == 0) throw std::invalid_argument("bins must be >= 1");
  if (c.unfolding.degree < 1) throw std::invalid_argument("unfolding degree must be >= 1");
  if (c.window_size < 2) throw std::invalid_argument("window size must be >= 2");
  if (c.samples < 1000) throw std::invalid_argument("samples must be >= 1000");
  if (c.output_dir.empty()) throw std::invalid_argument("output directory must be set");
  if (c.kind == ExperimentKind::nnsd_scan && c.window_size > c.n_atoms)
    throw std::invalid_argument("window size must not exceed n");
  if (c.kind == ExperimentKind::fractal_scan) {
    FractalScanConfig f;
    f.sizes = c.sizes;
    f.q_list = c.q_list;
    validate(f);
  }
}

// Config schema with nested sections. Unset optionals are omitted.

template <class T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <class T>
void get_optional(const nlohmann::json& j, const char* key, std::optional<T>& v) {
  if (j.contains(key)) {
    if (j.at(key).is_null())
      v.reset();
    else
      v = j.at(key).get<T>();
  }
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment"] = to_string(c.kind);
  nlohmann::json ens{{"n", c.n_atoms}, {"realizations", c.realizations}, {"seed", c.master_seed}};
  put_optional(ens, "b0", c.b0);
  put_optional(ens, "modes_m", c.mode_count);
  j["ensemble"] = ens;
  nlohmann::json bin{{"max_bins", c.binning.max_bins}};
  put_optional(bin, "width", c.binning.width);
  put_optional(bin, "bins", c.binning.bins);
  put_optional(bin, "lower", c.binning.lower);
  put_optional(bin, "upper", c.binning.upper);
  j["binning"] = bin;
  j["unfolding"] = {{"method", c.unfolding.method == UnfoldingMethod::polynomial ? "polynomial" : "staircase"},
                    {"degree", c.unfolding.degree}};
  j["scan"] = {{"window_size", c.window_size}, {"goodness_threshold", c.goodness_threshold}};
  j["fractal"] = {{"sizes", c.sizes}, {"q", c.q_list}};
  j["entry_moments"] = {{"samples", c.samples}};
  j["decay_rate"] = {{"state", to_string(c.state)}};
  j["output"] = {{"dir", c.output_dir}, {"workers", c.workers}};
  return j;
}

/// Reads a config; sections and keys that are absent keep the values in `base`.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  ExperimentConfig c = std::move(base);
  if (j.contains("experiment")) c.kind = parse_experiment_kind(j.at("experiment").get<std::string>());
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    if (e.contains("n")) c.n_atoms = e.at("n").get<std::size_t>();
    if (e.contains("realizations")) c.realizations = e.at("realizations").get<std::size_t>();
    if (e.contains("seed")) c.master_seed = e.at("seed").get<std::uint64_t>();
    const bool has_b0 = e.contains("b0");
    const bool has_m = e.contains("modes_m");
    if (has_b0 || has_m) {
      c.b0.reset();
      c.mode_count.reset();
      get_optional(e, "b0", c.b0);
      get_optional(e, "modes_m", c.mode_count);
    }
  }
  if (j.contains("binning")) {
    const auto& b = j.at("binning");
    get_optional(b, "width", c.binning.width);
    get_optional(b, "bins", c.binning.bins);
    get_optional(b, "lower", c.binning.lower);
    get_optional(b, "upper", c.binning.upper);
    if (b.contains("max_bins")) c.binning.max_bins = b.at("max_bins").get<std::size_t>();
  }
  if (j.contains("unfolding")) {
    const auto& u = j.at("unfolding");
    if (u.contains("method")) {
      const auto m = u.at("method").get<std::string>();
      if (m == "polynomial")
        c.unfolding.method = UnfoldingMethod::polynomial;
      else if (m == "staircase")
        c.unfolding.method = UnfoldingMethod::staircase;
      else
        throw std::invalid_argument("unknown unfolding method '" + m + "'");
    }
    if (u.contains("degree")) c.unfolding.degree = u.at("degree").get<int>();
  }
  if (j.contains("scan")) {
    const auto& s = j.at("scan");
    if (s.contains("window_size")) c.window_size = s.at("window_size").get<std::size_t>();
    if (s.contains("goodness_threshold")) c.goodness_threshold = s.at("goodness_threshold").get<double>();
  }
  if (j.contains("fractal")) {
    const auto& f = j.at("fractal");
    if (f.contains("sizes")) c.sizes = f.at("sizes").get<std::vector<std::size_t>>();
    if (f.contains("q")) c.q_list = f.at("q").get<std::vector<int>>();
  }
  if (j.contains("entry_moments") && j.at("entry_moments").contains("samples"))
    c.samples = j.at("entry_moments").at("samples").get<std::size_t>();
  if (j.contains("decay_rate") && j.at("decay_rate").contains("state"))
    c.state = parse_decay_state(j.at("decay_rate").at("state").get<std::string>());
  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (o.contains("dir")) c.output_dir = o.at("dir").get<std::string>();
    if (o.contains("workers")) c.workers = o.at("workers").get<std::size_t>();
  }
  return c;
}

namespace detail {

inline nlohmann::json yaml_scalar_to_json(const YAML::Node& n) {
  const auto& text = n.Scalar();
  if (n.Tag() == "!") return text; // quoted
  if (text == "~" || text == "null" || text.empty()) return nullptr;
  if (text == "true") return true;
  if (text == "false") return false;
  const bool integral = text.find_first_not_of("+-0123456789") == std::string::npos;
  if (integral) {
    if (text.front() != '-') {
      std::uint64_t u = 0;
      if (YAML::convert<std::uint64_t>::decode(n, u)) return u;
    }
    std::int64_t i = 0;
    if (YAML::convert<std::int64_t>::decode(n, i)) return i;
  }
  double d = 0.0;
  if (YAML::convert<double>::decode(n, d)) return d;
  return text;
}

inline nlohmann::json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Map: {
      nlohmann::json j = nlohmann::json::object();
      for (const auto& kv : n) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return j;
    }
    case YAML::NodeType::Sequence: {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& v : n) j.push_back(yaml_to_json(v));
      return j;
    }
    case YAML::NodeType::Scalar: return yaml_scalar_to_json(n);
    default: return nullptr;
  }
}

inline void emit_yaml(YAML::Emitter& out, const nlohmann::json& j) {
  if (j.is_object()) {
    out << YAML::BeginMap;
    for (const auto& [k, v] : j.items()) {
      out << YAML::Key << k << YAML::Value;
      emit_yaml(out, v);
    }
    out << YAML::EndMap;
  } else if (j.is_array()) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& v : j) emit_yaml(out, v);
    out << YAML::EndSeq;
  } else if (j.is_string()) {
    out << YAML::DoubleQuoted << j.get<std::string>();
  } else if (j.is_boolean()) {
    out << j.get<bool>();
  } else if (j.is_number_unsigned()) {
    out << j.get<std::uint64_t>();
  } else if (j.is_number_integer()) {
    out << j.get<std::int64_t>();
  } else if (j.is_number_float()) {
    out << j.get<double>();
  } else {
    out << YAML::Null;
  }
}

} // namespace detail

/// Config file text in YAML (nested sections, same keys as config_to_json).
inline std::string config_to_yaml(const ExperimentConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  detail::emit_yaml(out, config_to_json(c));
  return std::string(out.c_str()) + "\n";
}

inline ExperimentConfig config_from_yaml(const std::string& text, ExperimentConfig base = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!root.IsMap()) throw std::invalid_argument("config: top level must be a mapping");
  try {
    return config_from_json(detail::yaml_to_json(root), std::move(base));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

/// Loads a YAML config file (JSON files parse as YAML too).
inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path.string());
  std::ostringstream text;
  text << is.rdbuf();
  try {
    return config_from_yaml(text.str(), std::move(base));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

/// Writes `content` to a temporary sibling and renames it over `path`, so the
/// final path never holds a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline void ensure_writable_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("output directory " + dir.string() + " cannot be created");
  const auto probe = dir / ".erm_write_probe";
  {
    std::ofstream os(probe);
    if (!os) throw IoError("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

struct EnsembleReport {
  nlohmann::json report;                       // written as report.json
  std::map<std::string, std::string> tables;   // extra files: name -> CSV/JSON text
  std::size_t failed_realizations = 0;
  std::size_t total_realizations = 0;

  double failure_fraction() const {
    return total_realizations == 0
               ? 0.0
               : static_cast<double>(failed_realizations) / static_cast<double>(total_realizations);
  }
  /// Runs with more than 5% failed realizations count as failed.
  bool acceptable() const { return failure_fraction() <= 0.05; }
};

namespace detail {

inline EnsembleSpec ensemble_spec(const ExperimentConfig& c) {
  EnsembleSpec s;
  s.n_atoms = c.n_atoms;
  s.b0 = c.b0;
  s.mode_count = c.mode_count;
  s.realizations = c.realizations;
  s.master_seed = c.master_seed;
  s.workers = c.workers;
  return s;
}

inline nlohmann::json estimate_json(const MeanEstimate& e) {
  return {{"mean", e.mean}, {"stderr", e.std_error}, {"count", e.count}};
}

inline nlohmann::json fit_json(const SurmiseFit& f) {
  return {{"q", f.q},         {"q_err", f.q_err()}, {"r", f.r},
          {"r_err", f.r_err()}, {"a", f.a},         {"b", f.b},
          {"goodness", f.goodness}, {"spacings", f.sample_count}};
}

inline std::string histogram_csv(const Histogram& h) {
  std::ostringstream os;
  write_histogram_csv(os, h);
  return os.str();
}

/// Seeds, failures and timings of an ensemble; fills the common report fields.
template <class T>
std::vector<const T*> collect(const std::vector<RealizationOutcome<T>>& outcomes, EnsembleReport& rep) {
  std::vector<const T*> ok;
  nlohmann::json seeds = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::array();
  nlohmann::json build = nlohmann::json::array();
  nlohmann::json solve = nlohmann::json::array();
  for (const auto& o : outcomes) {
    seeds.push_back(o.seed);
    build.push_back(o.build_seconds);
    solve.push_back(o.solve_seconds);
    if (o.ok())
      ok.push_back(&*o.value);
    else
      failures.push_back({{"index", o.index}, {"seed", o.seed}, {"error", o.error}});
  }
  rep.report["seeds"] = seeds;
  rep.report["failures"] = failures;
  rep.report["timing"]["build_seconds"] = build;
  rep.report["timing"]["solve_seconds"] = solve;
  rep.failed_realizations += failures.size();
  rep.total_realizations += outcomes.size();
  return ok;
}

inline std::vector<SpectrumResult> copy_spectra(const std::vector<const SpectrumResult*>& ptrs) {
  std::vector<SpectrumResult> out;
  for (const auto* p : ptrs) out.push_back(*p);
  return out;
}

inline void run_spectrum(const ExperimentConfig& c, EnsembleReport& rep) {
  const auto outcomes = simulate_ensemble(ensemble_spec(c));
  const auto specs = copy_spectra(collect(outcomes, rep));
  if (specs.empty()) return;

  nlohmann::json res;
  for (int m = 1; m <= 4; ++m) {
    std::vector<double> v;
    for (const auto& s : specs) v.push_back(spectral_moment(s, m));
    res["moments"][std::to_string(m)] = estimate_json(mean_estimate(v));
  }
  double trace_dev = 0.0, min_eig = specs.front().eigenvalues.front(), max_eig = 0.0;
  for (const auto& s : specs) {
    double sum = 0.0;
    for (double l : s.eigenvalues) sum += l;
    trace_dev = std::max(trace_dev, std::abs(sum - static_cast<double>(s.size())));
    min_eig = std::min(min_eig, s.eigenvalues.front());
    max_eig = std::max(max_eig, s.eigenvalues.back());
  }
  res["max_trace_deviation"] = trace_dev;
  res["min_eigenvalue"] = min_eig;
  res["max_eigenvalue"] = max_eig;
  if (c.b0) res["second_moment_limit"] = 1.0 + *c.b0 / 4.0;
  if (c.n_atoms * specs.size() <= 10000) {
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& s : specs) ev.push_back(s.eigenvalues);
    res["eigenvalues"] = ev;
  }
  const auto hist = eigenvalue_histogram(specs, c.binning);
  res["histogram"] = histogram_to_json(hist);
  rep.report["results"] = res;
  rep.tables["eigenvalue_histogram.csv"] = histogram_csv(hist);
}

inline void run_triangle_fit(const ExperimentConfig& c, EnsembleReport& rep) {
  auto spec = ensemble_spec(c);
  spec.centered = true;
  const auto outcomes = simulate_ensemble(spec);
  const auto q_specs = copy_spectra(collect(outcomes, rep));
  if (q_specs.empty()) return;

  const double b0 = c.b0 ? *c.b0 : static_cast<double>(c.n_atoms) / *c.mode_count;
  const double back = std::sqrt(1.5 * b0); // lambda = 1 + back * mu
  std::vector<SpectrumResult> s_specs = q_specs;
  for (auto& s : s_specs) {
    for (double& l : s.eigenvalues) l = 1.0 + back * l;
    s.kind = MatrixKind::decay;
  }
  const auto hist = eigenvalue_histogram(s_specs, c.binning);
  nlohmann::json res;
  res["histogram"] = histogram_to_json(hist);
  try {
    const auto fit = fit_triangular(hist);
    res["triangle"] = {{"a", fit.a}, {"a_err", fit.a_err}, {"a_theory", triangular_half_width_estimate(b0)}};
  } catch (const FitError& e) {
    res["triangle"] = {{"error", e.what()}};
  }
  res["q_fourth_moment"] = estimate_json(q_fourth_moment(q_specs));
  res["q_fourth_moment_limit"] = kCenteredFourthMomentLimit;
  res["triangular_fourth_moment"] = kTriangularFourthMoment;
  rep.report["results"] = res;
  rep.tables["eigenvalue_histogram.csv"] = histogram_csv(hist);
}

inline void run_nnsd_scan(const ExperimentConfig& c, EnsembleReport& rep) {
  const auto outcomes = simulate_ensemble(ensemble_spec(c));
  const auto specs = copy_spectra(collect(outcomes, rep));
  if (specs.empty()) return;

  ScanOptions opts;
  opts.window_size = c.window_size;
  opts.unfolding = c.unfolding;
  opts.goodness_threshold = c.goodness_threshold;
  const auto scan = windowed_surmise_scan(specs, opts);
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& w : scan) {
    nlohmann::json jw{{"center", w.center}, {"lo", w.lo}, {"hi", w.hi}, {"spacings", w.spacing_count},
                      {"flagged", w.flagged}, {"note", w.note}};
    if (w.fit) jw["fit"] = fit_json(*w.fit);
    windows.push_back(jw);
  }
  nlohmann::json res;
  res["windows"] = windows;

  const auto [lo, hi] = central_window(specs, c.window_size);
  const auto sp = window_spacings(specs, lo, hi, c.unfolding);
  res["central_window"] = {{"lo", lo}, {"hi", hi}, {"spacings", sp.size()}};
  try {
    res["central_window"]["fit"] = fit_json(fit_surmise(sp));
  } catch (const std::exception& e) {
    res["central_window"]["fit_error"] = e.what();
  }
  try {
    const auto grid = default_small_spacing_grid();
    const auto ex = small_spacing_exponent(sp, grid);
    res["central_window"]["small_spacing_q"] = {{"q", ex.q}, {"stderr", ex.std_error}};
  } catch (const std::exception& e) {
    res["central_window"]["small_spacing_error"] = e.what();
  }
  BinningPolicy sb;
  sb.lower = 0.0;
  const auto sh = make_histogram(sp, sb, true);
  res["central_window"]["histogram"] = histogram_to_json(sh);
  rep.report["results"] = res;

  std::ostringstream os;
  write_scan_csv(os, scan);
  rep.tables["scan.csv"] = os.str();
  rep.tables["spacing_histogram.csv"] = histogram_csv(sh);
}

struct EigvecReduction {
  std::vector<PrPoint> profile;
  PrMaxima maxima;
  std::vector<double> u_sub, u_super; // pooled amplitudes in the PR-maximum windows
  double min_eigenvalue_pr = 0.0;
};

inline void run_eigvec_stats(const ExperimentConfig& c, EnsembleReport& rep) {
  auto spec = ensemble_spec(c);
  spec.with_vectors = true;
  const auto outcomes = map_ensemble(spec, [](SpectrumResult&& s) {
    EigvecReduction r;
    r.profile = pr_profile(s);
    r.maxima = locate_pr_maxima(r.profile);
    r.min_eigenvalue_pr = r.profile.front().participation_ratio;
    const double scale = std::sqrt(static_cast<double>(s.size()));
    const auto& v = *s.eigenvectors;
    for (auto idx : r.maxima.subradiant.window)
      for (Eigen::Index j = 0; j < v.rows(); ++j) r.u_sub.push_back(scale * v(j, static_cast<Eigen::Index>(idx)));
    for (auto idx : r.maxima.superradiant.window)
      for (Eigen::Index j = 0; j < v.rows(); ++j) r.u_super.push_back(scale * v(j, static_cast<Eigen::Index>(idx)));
    return r;
  });
  const auto reds = collect(outcomes, rep);
  if (reds.empty()) return;

  const double n = static_cast<double>(c.n_atoms);
  std::vector<double> u_sub, u_super, min_pr, peak_pr, sep;
  std::ostringstream prof;
  prof << "realization,eigenvalue,pr,pr_over_n\n";
  prof.precision(12);
  for (std::size_t k = 0; k < reds.size(); ++k) {
    const auto& r = *reds[k];
    u_sub.insert(u_sub.end(), r.u_sub.begin(), r.u_sub.end());
    u_super.insert(u_super.end(), r.u_super.begin(), r.u_super.end());
    min_pr.push_back(r.min_eigenvalue_pr);
    for (const auto* peak : {&r.maxima.subradiant, &r.maxima.superradiant})
      for (auto idx : peak->window) peak_pr.push_back(r.profile[idx].participation_ratio / n);
    sep.push_back(r.maxima.separation());
    for (const auto& p : r.profile)
      prof << k << ',' << p.eigenvalue << ',' << p.participation_ratio << ',' << p.participation_ratio / n << '\n';
  }
  auto pt = [](std::vector<double> u) {
    const double ks = ks_statistic(u, standard_normal_cdf);
    BinningPolicy b;
    b.lower = -5.0;
    b.upper = 5.0;
    b.bins = 50;
    return std::pair{ks, make_histogram(std::move(u), b, true)};
  };
  const auto [ks_sub, h_sub] = pt(u_sub);
  const auto [ks_super, h_super] = pt(u_super);
  std::sort(min_pr.begin(), min_pr.end());

  nlohmann::json res;
  res["peak_window_pr_over_n"] = estimate_json(mean_estimate(peak_pr));
  res["min_eigenvalue_pr_median"] = sorted_quantile(min_pr, 0.5);
  res["min_eigenvalue_pr"] = min_pr;
  res["pr_maxima_separation"] = estimate_json(mean_estimate(sep));
  res["porter_thomas"] = {{"subradiant_ks", ks_sub},
                           {"superradiant_ks", ks_super},
                           {"threshold", kPorterThomasKsThreshold},
                           {"subradiant_flagged", !(ks_sub < kPorterThomasKsThreshold)},
                           {"superradiant_flagged", !(ks_super < kPorterThomasKsThreshold)}};
  rep.report["results"] = res;
  rep.tables["pr_profile.csv"] = prof.str();
  rep.tables["u_histogram_subradiant.csv"] = histogram_csv(h_sub);
  rep.tables["u_histogram_superradiant.csv"] = histogram_csv(h_super);
}

inline void run_fractal_scan(const ExperimentConfig& c, EnsembleReport& rep) {
  FractalScanConfig f;
  f.sizes = c.sizes;
  f.q_list = c.q_list;
  f.b0 = c.b0 ? *c.b0 : static_cast<double>(c.n_atoms) / *c.mode_count;
  f.realizations = {c.realizations};
  f.master_seed = c.master_seed;
  f.workers = c.workers;
  const auto t0 = std::chrono::steady_clock::now();
  const auto scaling = fractal_dimensions(f);
  rep.report["timing"]["total_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.total_realizations += c.realizations * c.sizes.size();

  nlohmann::json records = nlohmann::json::array();
  for (const auto& m : scaling)
    records.push_back({{"q", m.q},
                       {"sizes", m.sizes},
                       {"values", m.inverse_moments},
                       {"tau", m.tau},
                       {"stderr", m.tau_stderr},
                       {"D_q", m.fractal_dimension},
                       {"D_q_stderr", m.fractal_dimension_stderr}});
  rep.report["results"] = {{"b0", f.b0}, {"window", "superradiant-pr-maximum"}, {"fits", records}};
  rep.tables["fractal.json"] = records.dump(2) + "\n";
}

inline void run_entry_moments(const ExperimentConfig& c, EnsembleReport& rep) {
  const double M = c.effective_mode_count();
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  csv << "quantity,exact,monte_carlo,stderr,z\n";
  csv.precision(12);
  auto add = [&](const std::string& name, double exact, const MonteCarloEstimate& mc) {
    const double z = mc.std_error > 0.0 ? (mc.mean - exact) / mc.std_error : 0.0;
    rows.push_back({{"quantity", name}, {"exact", exact}, {"monte_carlo", mc.mean}, {"stderr", mc.std_error}, {"z", z}});
    csv << name << ',' << exact << ',' << mc.mean << ',' << mc.std_error << ',' << z << '\n';
  };
  for (int m = 1; m <= 3; ++m)
    add("S^" + std::to_string(m), entry_moment_exact(m, M),
        monte_carlo_entry_moment(EntryProduct::single, M, c.samples, realization_seed(c.master_seed, m), m));
  add("S_ij*S_il", correlated_entry_moment(M),
      monte_carlo_entry_moment(EntryProduct::shared_vertex, M, c.samples, realization_seed(c.master_seed, 4)));
  nlohmann::json coeffs;
  for (int m = 3; m <= 6; ++m) coeffs[std::to_string(m)] = entry_moment_asymptotic_coefficient(m);
  rep.report["results"] = {{"modes_m", M}, {"samples", c.samples}, {"moments", rows}, {"asymptotic_coefficients", coeffs}};
  rep.report["seeds"] = {realization_seed(c.master_seed, 1), realization_seed(c.master_seed, 2),
                         realization_seed(c.master_seed, 3), realization_seed(c.master_seed, 4)};
  rep.tables["entry_moments.csv"] = csv.str();
}

inline std::vector<std::complex<double>> decay_state(DecayState state, std::size_t n, std::uint64_t seed) {
  std::vector<std::complex<double>> beta(n, 0.0);
  switch (state) {
    case DecayState::symmetric:
      std::fill(beta.begin(), beta.end(), 1.0 / std::sqrt(static_cast<double>(n)));
      break;
    case DecayState::antisymmetric_pair:
      if (n < 2) throw std::invalid_argument("antisymmetric-pair state needs n >= 2");
      beta[0] = 1.0 / std::numbers::sqrt2;
      beta[1] = -1.0 / std::numbers::sqrt2;
      break;
    case DecayState::random: {
      Xoshiro256 gen(seed);
      std::normal_distribution<double> normal;
      double norm2 = 0.0;
      for (auto& b : beta) {
        b = {normal(gen), normal(gen)};
        norm2 += std::norm(b);
      }
      for (auto& b : beta) b /= std::sqrt(norm2);
      break;
    }
  }
  return beta;
}

inline void run_decay_rate(const ExperimentConfig& c, EnsembleReport& rep) {
  const auto spec = ensemble_spec(c);
  validate(spec);
  nlohmann::json seeds = nlohmann::json::array(), rates = nlohmann::json::array();
  std::vector<double> values;
  for (std::size_t i = 0; i < c.realizations; ++i) {
    const auto seed = realization_seed(c.master_seed, i);
    seeds.push_back(seed);
    const auto s = build_realization_matrix(spec, seed);
    const auto beta = decay_state(c.state, c.n_atoms, SplitMix64::mix(seed));
    const double rate = decay_rate(beta, s);
    rates.push_back(rate);
    values.push_back(rate);
  }
  rep.total_realizations += c.realizations;
  rep.report["seeds"] = seeds;
  rep.report["results"] = {{"state", to_string(c.state)}, {"rates", rates}, {"mean", estimate_json(mean_estimate(values))}};
}

} // namespace detail

/// Validates the config, checks the output directory, runs the experiment and
/// writes report.json plus the tabular outputs atomically.
inline EnsembleReport run_experiment(const ExperimentConfig& config) {
  validate(config);
  const std::filesystem::path dir(config.output_dir);
  ensure_writable_directory(dir);

  EnsembleReport rep;
  rep.report["config"] = config_to_json(config);
  rep.report["timing"] = nlohmann::json::object();
  const auto t0 = std::chrono::steady_clock::now();
  switch (config.kind) {
    case ExperimentKind::spectrum: detail::run_spectrum(config, rep); break;
    case ExperimentKind::triangle_fit: detail::run_triangle_fit(config, rep); break;
    case ExperimentKind::nnsd_scan: detail::run_nnsd_scan(config, rep); break;
    case ExperimentKind::eigvec_stats: detail::run_eigvec_stats(config, rep); break;
    case ExperimentKind::fractal_scan: detail::run_fractal_scan(config, rep); break;
    case ExperimentKind::entry_moments: detail::run_entry_moments(config, rep); break;
    case ExperimentKind::decay_rate: detail::run_decay_rate(config, rep); break;
  }
  rep.report["timing"]["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.report["realizations"] = {{"total", rep.total_realizations}, {"failed", rep.failed_realizations}};

  for (const auto& [name, content] : rep.tables) write_atomic(dir / name, content);
  write_atomic(dir / "report.json", rep.report.dump(2) + "\n");
  return rep;
}

} // namespace erm
