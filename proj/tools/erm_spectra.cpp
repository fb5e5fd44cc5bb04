// Command-line front end for the random decay-rate matrix experiments.
//
//   erm_spectra spectrum --n 1000 --b0 1 --realizations 5 --seed 42 --out run1
//   erm_spectra triangle-fit --n 4000 --b0 0.005 --realizations 10 --out tri
//   erm_spectra nnsd-scan --n 2000 --realizations 20 --window-size 500 --out scan
//   erm_spectra eigvec-stats --n 2000 --realizations 4 --out vec
//   erm_spectra fractal-scan --sizes 500,1000,2000 --realizations 4 --out frac
//   erm_spectra entry-moments --modes-m 1 --samples 1000000 --out moments
//   erm_spectra decay-rate --n 500 --b0 1 --state symmetric --out rates
//   erm_spectra spectrum --config run.yaml --n 2000
//
// Exit status: 0 success, 1 validation or I/O error, 2 usage error,
// 3 more than 5% of realizations failed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "erm/erm.hpp"

namespace {

struct Flags {
  std::string config;
  std::size_t n = 0;
  double b0 = 0.0;
  double modes_m = 0.0;
  std::size_t realizations = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t workers = 0;
  std::size_t samples = 0;
  std::size_t window_size = 0;
  double goodness_threshold = 0.0;
  std::vector<std::size_t> sizes;
  std::vector<int> q_list;
  std::string state;
  double bin_width = 0.0;
  std::size_t bins = 0;
  double lower = 0.0;
  double upper = 0.0;
  std::string unfolding;
  int degree = 0;
  std::string preset;
  std::string dump_matrix;
  std::string write_config;
};

void error_line(const char* kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

erm::ExperimentConfig defaults_for(erm::ExperimentKind kind, const std::string& preset) {
  erm::ExperimentConfig c;
  c.kind = kind;
  c.workers = erm::default_worker_count();
  if (kind == erm::ExperimentKind::triangle_fit) c.b0 = 0.005;
  if (preset == "paper") {
    c.n_atoms = 10000;
    c.realizations = 20;
    if (kind == erm::ExperimentKind::fractal_scan) c.realizations = 4;
  } else if (!preset.empty()) {
    throw std::invalid_argument("unknown preset '" + preset + "'");
  }
  return c;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra and eigenvectors of Euclidean random decay-rate matrices.", "erm_spectra"};
  app.require_subcommand(1);
  app.footer("Exit status: 0 ok, 1 validation/I-O error (JSON line on stderr), 2 usage error, "
             "3 more than 5% of realizations failed.\nERM_SPECTRA_WORKERS sets the default for --workers.");

  Flags f;
  app.add_option("--config", f.config, "YAML config file; explicit flags override its values");
  app.add_option("--preset", f.preset, "Parameter preset: 'paper' (N=10000, 20 realizations)");
  app.add_option("--n", f.n, "Number of atoms N");
  app.add_option("--b0", f.b0, "Cooperativeness b0 = N/M (default 1; 0.005 for triangle-fit)");
  app.add_option("--modes-m", f.modes_m, "Mode count M, instead of --b0");
  app.add_option("--realizations", f.realizations, "Number of cloud realizations");
  app.add_option("--seed", f.seed, "Master seed; realization seeds are derived from it");
  app.add_option("--out", f.out, "Output directory (default ./out)");
  app.add_option("--workers", f.workers, "Worker threads (default $ERM_SPECTRA_WORKERS or core count)");
  app.add_option("--samples", f.samples, "entry-moments: Monte Carlo samples (default 1000000)");
  app.add_option("--window-size", f.window_size, "nnsd-scan: eigenvalues per realization per window (default 1000)");
  app.add_option("--goodness-threshold", f.goodness_threshold,
                 "nnsd-scan: reduced chi-square above which a window is flagged (default 3)");
  app.add_option("--sizes", f.sizes, "fractal-scan: comma-separated sizes N (default 500,1000,2000,4000,8000)")
      ->delimiter(',');
  app.add_option("--q", f.q_list, "fractal-scan: comma-separated moment orders (default 2,3,4,5)")->delimiter(',');
  app.add_option("--state", f.state, "decay-rate: symmetric | random | antisymmetric-pair (default symmetric)");
  app.add_option("--bin-width", f.bin_width, "Histogram bin width (default Freedman-Diaconis)");
  app.add_option("--bins", f.bins, "Histogram bin count, instead of --bin-width");
  app.add_option("--lower", f.lower, "Histogram lower edge (default sample minimum)");
  app.add_option("--upper", f.upper, "Histogram upper edge (default sample maximum)");
  app.add_option("--unfolding", f.unfolding, "Unfolding method: polynomial | staircase (default polynomial)");
  app.add_option("--degree", f.degree, "Unfolding polynomial degree (default 7)");
  app.add_option("--dump-matrix", f.dump_matrix,
                 "Also write the first realization's S as binary (u64 N, f64 b0, row-major f64)");
  app.add_option("--write-config", f.write_config, "Write the merged config as YAML to this file and exit");

  for (const auto& [kind, name] : erm::experiment_names()) {
    std::string desc;
    switch (kind) {
      case erm::ExperimentKind::spectrum: desc = "Eigenvalue density and spectral moments of S"; break;
      case erm::ExperimentKind::triangle_fit: desc = "Triangular density fit and fourth moment at small b0"; break;
      case erm::ExperimentKind::nnsd_scan: desc = "Windowed nearest-neighbour spacing fits across the spectrum"; break;
      case erm::ExperimentKind::eigvec_stats: desc = "Participation ratios and amplitude statistics"; break;
      case erm::ExperimentKind::fractal_scan: desc = "Moment scaling exponents tau(q) and D_q over sizes"; break;
      case erm::ExperimentKind::entry_moments: desc = "Exact vs Monte Carlo moments of off-diagonal entries"; break;
      case erm::ExperimentKind::decay_rate: desc = "Collective decay rate of a fixed state per realization"; break;
    }
    app.add_subcommand(name, desc)->fallthrough();
  }

  const auto usage = [&] { return app.get_formatter()->make_help(&app, app.get_name(), CLI::AppFormatMode::Normal); };
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << usage();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << usage();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << usage();
    return 2;
  }

  const auto given = [&](const char* name) { return app.get_option(name)->count() > 0; };
  erm::ExperimentConfig cfg;
  try {
    const auto kind = erm::parse_experiment_kind(app.get_subcommands().front()->get_name());
    cfg = defaults_for(kind, f.preset);
    if (!f.config.empty()) cfg = erm::load_config(f.config, cfg);
    cfg.kind = kind;
    if (given("--n")) cfg.n_atoms = f.n;
    if (given("--b0") || given("--modes-m")) {
      cfg.b0.reset();
      cfg.mode_count.reset();
      if (given("--b0")) cfg.b0 = f.b0;
      if (given("--modes-m")) cfg.mode_count = f.modes_m;
    }
    if (given("--realizations")) cfg.realizations = f.realizations;
    if (given("--seed")) cfg.master_seed = f.seed;
    if (given("--out")) cfg.output_dir = f.out;
    if (given("--workers")) cfg.workers = f.workers;
    if (given("--samples")) cfg.samples = f.samples;
    if (given("--window-size")) cfg.window_size = f.window_size;
    if (given("--goodness-threshold")) cfg.goodness_threshold = f.goodness_threshold;
    if (given("--sizes")) cfg.sizes = f.sizes;
    if (given("--q")) cfg.q_list = f.q_list;
    if (given("--state")) cfg.state = erm::parse_decay_state(f.state);
    if (given("--bin-width")) cfg.binning.width = f.bin_width;
    if (given("--bins")) cfg.binning.bins = f.bins;
    if (given("--lower")) cfg.binning.lower = f.lower;
    if (given("--upper")) cfg.binning.upper = f.upper;
    if (given("--unfolding")) {
      if (f.unfolding == "polynomial")
        cfg.unfolding.method = erm::UnfoldingMethod::polynomial;
      else if (f.unfolding == "staircase")
        cfg.unfolding.method = erm::UnfoldingMethod::staircase;
      else
        throw std::invalid_argument("unknown unfolding method '" + f.unfolding + "'");
    }
    if (given("--degree")) cfg.unfolding.degree = f.degree;
    erm::validate(cfg);
  } catch (const erm::IoError& e) {
    error_line("io", e.what());
    return 1;
  } catch (const std::exception& e) {
    error_line("validation", e.what());
    return 1;
  }

  try {
    if (!f.write_config.empty()) {
      erm::write_atomic(f.write_config, erm::config_to_yaml(cfg));
      return 0;
    }
    const auto rep = erm::run_experiment(cfg);
    const std::filesystem::path dir(cfg.output_dir);
    if (!f.dump_matrix.empty()) {
      erm::EnsembleSpec spec;
      spec.n_atoms = cfg.n_atoms;
      spec.b0 = cfg.b0;
      spec.mode_count = cfg.mode_count;
      const auto s = erm::build_realization_matrix(spec, erm::realization_seed(cfg.master_seed, 0));
      const auto tmp = std::filesystem::path(f.dump_matrix + ".tmp");
      erm::write_decay_matrix(tmp, s);
      std::filesystem::rename(tmp, f.dump_matrix);
    }

    if (cfg.kind == erm::ExperimentKind::entry_moments) {
      std::cout << "M = " << rep.report["results"]["modes_m"].get<double>() << '\n';
      std::printf("%-12s %16s %16s %12s %8s\n", "quantity", "exact", "monte_carlo", "stderr", "z");
      for (const auto& row : rep.report["results"]["moments"])
        std::printf("%-12s %16.10f %16.10f %12.3e %8.2f\n", row["quantity"].get<std::string>().c_str(),
                    row["exact"].get<double>(), row["monte_carlo"].get<double>(), row["stderr"].get<double>(),
                    row["z"].get<double>());
    }
    std::cout << "wrote " << (dir / "report.json").string();
    for (const auto& [name, content] : rep.tables) std::cout << ", " << (dir / name).string();
    std::cout << '\n';
    if (rep.failed_realizations > 0)
      std::cerr << rep.failed_realizations << " of " << rep.total_realizations << " realizations failed\n";
    if (!rep.acceptable()) {
      error_line("realizations", "more than 5% of realizations failed");
      return 3;
    }
  } catch (const erm::IoError& e) {
    error_line("io", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    error_line("validation", e.what());
    return 1;
  } catch (const std::exception& e) {
    error_line("computation", e.what());
    return 1;
  }
  return 0;
}
