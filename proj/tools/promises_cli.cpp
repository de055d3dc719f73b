// Batch front end: align, simulate, connectivity, select-k.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "promises/aligner.hpp"
#include "promises/connectivity.hpp"
#include "promises/efficient_aligner.hpp"
#include "promises/errors.hpp"
#include "promises/io.hpp"
#include "promises/manifest.hpp"
#include "promises/select_k.hpp"
#include "promises/simgen.hpp"

namespace fs = std::filesystem;
using namespace promises;

namespace {

std::string numbered(const std::string& stem, std::size_t i, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%03zu", i + 1);
  return stem + buf + ext;
}

void write_manifest(const fs::path& out, const RunManifest& manifest) {
  io::write_file(out / "manifest.json", nlohmann::json(manifest).dump(2) + "\n");
}

struct FitOptions {
  std::string input;
  double k = 0.0;
  std::string prior = "identity";
  bool efficient = false;
  bool scaling = false;
  std::string cov = "identity";
  double tol = 1e-6;
  int max_iter = 30;
  double eps1 = 1e-8;
  double eps2 = 1e-8;
  int workers = 1;
  std::string out;
};

void add_fit_options(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--input", o.input, "Directory of subject matrices or a filename glob")
      ->required();
  cmd->add_option("--prior", o.prior,
                  "identity | euclidean:<coords.csv> | custom:<F.csv>")
      ->capture_default_str();
  cmd->add_flag("--efficient", o.efficient, "Align in the reduced n x n space (n < m)");
  cmd->add_flag("--scaling", o.scaling, "Estimate per-subject scales");
  cmd->add_option("--cov", o.cov, "Covariance estimator")
      ->check(CLI::IsMember({"identity", "dutilleul"}))
      ->capture_default_str();
  cmd->add_option("--tol", o.tol, "Threshold on ||M - M_old||^2")->capture_default_str();
  cmd->add_option("--max-iter", o.max_iter, "Iteration cap")->capture_default_str();
  cmd->add_option("--eps1", o.eps1, "Row covariance threshold")->capture_default_str();
  cmd->add_option("--eps2", o.eps2, "Column covariance threshold")->capture_default_str();
  cmd->add_option("--workers", o.workers, "Threads for the per-subject phase")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Output directory")->required();
}

AlignmentConfig make_config(const FitOptions& o) {
  AlignmentConfig config;
  config.tol = o.tol;
  config.max_iterations = o.max_iter;
  config.scaling_enabled = o.scaling;
  config.covariance_mode =
      o.cov == "dutilleul" ? CovarianceMode::dutilleul : CovarianceMode::identity;
  config.epsilon1 = o.eps1;
  config.epsilon2 = o.eps2;
  config.workers = o.workers;
  config.prior = io::parse_prior_option(o.prior, o.k);
  return config;
}

std::vector<Matrix> load_inputs(const std::vector<fs::path>& files) {
  std::vector<Matrix> Xs;
  for (const auto& f : files) Xs.push_back(io::load_matrix(f));
  return Xs;
}

int run_align(const FitOptions& o) {
  RunManifest manifest;
  manifest.command = "align";
  const fs::path out(o.out);

  std::vector<fs::path> files;
  std::vector<Matrix> Xs;
  AlignmentConfig config;
  {
    PhaseTimer t(manifest, "load");
    config = make_config(o);
    files = io::list_subject_files(o.input);
    Xs = load_inputs(files);
    manifest.record_inputs(files);
  }
  manifest.config = config_to_json(config);
  manifest.config["input"] = o.input;
  manifest.config["prior_option"] = o.prior;
  manifest.config["efficient"] = o.efficient;

  AlignmentResult result;
  {
    PhaseTimer t(manifest, "align");
    result = o.efficient ? align_efficient(Xs, config) : align(Xs, config);
  }
  manifest.record_result(result);

  {
    PhaseTimer t(manifest, "write");
    io::save_matrix(out / "reference.csv", result.reference);
    Matrix scales(static_cast<Index>(result.scales.size()), 1);
    for (std::size_t i = 0; i < result.scales.size(); ++i) {
      scales(static_cast<Index>(i), 0) = result.scales[i];
    }
    io::save_matrix(out / "scales.csv", scales);
    Matrix translations(static_cast<Index>(result.translations.size()),
                        Xs[0].cols());
    for (std::size_t i = 0; i < result.translations.size(); ++i) {
      translations.row(static_cast<Index>(i)) = result.translations[i].transpose();
    }
    io::save_matrix(out / "translations.csv", translations);
    for (std::size_t i = 0; i < Xs.size(); ++i) {
      io::save_matrix(out / "rotations" / numbered("R", i, ".csv"),
                      result.rotations[i]);
      io::save_matrix(out / "aligned" / numbered("subject", i, ".csv"),
                      result.aligned[i]);
      if (o.efficient) {
        io::save_matrix(out / "bases" / numbered("Q", i, ".csv"),
                        result.bases[i].Q);
      }
    }
    if (o.efficient) {
      io::save_matrix(out / "reduced_reference.csv", result.reduced_reference);
    }
    if (config.covariance_mode == CovarianceMode::dutilleul) {
      io::save_matrix(out / "sigma_n.csv", result.covariances.sigma_n);
      io::save_matrix(out / "sigma_m.csv", result.covariances.sigma_m);
    }
  }
  manifest.extra["subjects"] = files.size();
  manifest.extra["unique"] = result.unique;
  manifest.extra["min_crossprod_singular_value"] = result.min_crossprod_singular_value;
  write_manifest(out, manifest);

  std::cout << "aligned " << Xs.size() << " subjects in " << result.iterations_run
            << " iterations (" << (result.converged ? "converged" : "not converged")
            << ")\n";
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

struct SimulateOptions {
  Index n = 0;
  Index m = 0;
  Index subjects = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> alpha;
  std::string reference;
  std::string out;
};

int run_simulate(const SimulateOptions& o) {
  RunManifest manifest;
  manifest.command = "simulate";
  const fs::path out(o.out);

  Matrix M;
  if (!o.reference.empty()) {
    M = io::load_matrix(o.reference);
    manifest.record_inputs({o.reference});
  } else {
    // the shared matrix uses its own stream so it does not shift the data draws
    std::mt19937_64 rng(o.seed ^ 0x5eed5eed5eed5eedull);
    M = gaussian_matrix(o.n, o.m, rng);
  }
  SimulationSpec spec;
  spec.N = o.subjects;
  spec.n = o.n;
  spec.m = o.m;
  spec.noise_sigma = o.sigma;
  spec.scales = o.alpha;
  spec.seed = o.seed;

  SimulatedDataset data;
  {
    PhaseTimer t(manifest, "simulate");
    data = simulate_dataset(spec, M);
  }
  {
    PhaseTimer t(manifest, "write");
    for (std::size_t i = 0; i < data.Xs.size(); ++i) {
      io::save_matrix(out / numbered("subject", i, ".csv"), data.Xs[i]);
      io::save_matrix(out / "truth" / numbered("R", i, ".csv"), data.rotations[i]);
    }
    io::save_matrix(out / "truth" / "M.csv", M);
    Matrix scales(static_cast<Index>(data.scales.size()), 1);
    for (std::size_t i = 0; i < data.scales.size(); ++i) {
      scales(static_cast<Index>(i), 0) = data.scales[i];
    }
    io::save_matrix(out / "truth" / "scales.csv", scales);
  }
  manifest.config = {{"n", o.n},         {"m", o.m},         {"subjects", o.subjects},
                     {"sigma", o.sigma}, {"seed", o.seed},   {"alpha", o.alpha},
                     {"reference", o.reference}};
  write_manifest(out, manifest);
  std::cout << "wrote " << data.Xs.size() << " subjects to " << out.string() << "\n";
  return 0;
}

struct ConnectivityOptions {
  std::string reference;
  std::optional<Index> seed_col;
  std::string rois;
  std::string out;
};

int run_connectivity(const ConnectivityOptions& o) {
  if (!o.seed_col && o.rois.empty()) {
    throw ValidationError("connectivity needs --seed-col and/or --rois");
  }
  RunManifest manifest;
  manifest.command = "connectivity";
  const fs::path out(o.out);
  const Matrix M = io::load_matrix(o.reference);
  std::vector<fs::path> inputs{o.reference};

  if (o.seed_col) {
    PhaseTimer t(manifest, "seed");
    const auto map = seed_correlation(M, *o.seed_col);
    std::string csv = "column,correlation\n";
    char buf[32];
    std::size_t undefined = 0;
    for (std::size_t j = 0; j < map.size(); ++j) {
      csv += std::to_string(j) + ",";
      if (map[j]) {
        std::snprintf(buf, sizeof buf, "%.17g", *map[j]);
        csv += buf;
      } else {
        csv += "NA";
        ++undefined;
      }
      csv += "\n";
    }
    io::write_file(out / "seed_map.csv", csv);
    manifest.extra["undefined_columns"] = undefined;
  }
  if (!o.rois.empty()) {
    PhaseTimer t(manifest, "roi");
    inputs.emplace_back(o.rois);
    const RoiCorrelation roi = roi_correlation(M, io::load_roi_labels(o.rois));
    std::string csv = "region";
    for (int id : roi.region_ids) csv += "," + std::to_string(id);
    csv += "\n";
    const std::string body = io::format_csv_matrix(roi.matrix);
    std::size_t start = 0;
    for (int id : roi.region_ids) {
      const std::size_t end = body.find('\n', start);
      csv += std::to_string(id) + "," + body.substr(start, end - start) + "\n";
      start = end + 1;
    }
    io::write_file(out / "roi_matrix.csv", csv);
  }
  manifest.record_inputs(inputs);
  manifest.config = {{"reference", o.reference}, {"rois", o.rois}};
  if (o.seed_col) manifest.config["seed_col"] = *o.seed_col;
  write_manifest(out, manifest);
  return 0;
}

int run_select_k(const FitOptions& o, const std::vector<double>& grid) {
  RunManifest manifest;
  manifest.command = "select-k";
  const fs::path out(o.out);
  const AlignmentConfig config = make_config(o);
  const auto files = io::list_subject_files(o.input);
  const auto Xs = load_inputs(files);
  manifest.record_inputs(files);

  KSelection selection;
  {
    PhaseTimer t(manifest, "cross_validation");
    selection = select_k(Xs, grid, config, o.efficient);
  }

  std::string csv = "k,mean_score";
  for (std::size_t i = 0; i < Xs.size(); ++i) csv += ",fold_" + std::to_string(i + 1);
  csv += "\n";
  char buf[32];
  for (const KScore& s : selection.table) {
    std::snprintf(buf, sizeof buf, "%.17g", s.k);
    csv += buf;
    std::snprintf(buf, sizeof buf, ",%.17g", s.mean_score);
    csv += buf;
    for (double f : s.fold_scores) {
      std::snprintf(buf, sizeof buf, ",%.17g", f);
      csv += buf;
    }
    csv += "\n";
  }
  io::write_file(out / "scores.csv", csv);

  manifest.config = config_to_json(config);
  manifest.config["input"] = o.input;
  manifest.config["prior_option"] = o.prior;
  manifest.config["efficient"] = o.efficient;
  manifest.config["grid"] = grid;
  manifest.extra["k_best"] = selection.k_best;
  manifest.extra["criterion"] = selection.criterion;
  write_manifest(out, manifest);
  std::cout << "k_best = " << selection.k_best << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional alignment with von Mises-Fisher regularised Procrustes"};
  app.set_config("--config", "", "TOML/INI file whose keys mirror the flags");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  FitOptions align_opts;
  auto* align_cmd = app.add_subcommand("align", "Align subject matrices");
  add_fit_options(align_cmd, align_opts);
  align_cmd->add_option("--k", align_opts.k, "Prior concentration")->capture_default_str();

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a perturbation-model dataset");
  sim_cmd->add_option("--n", sim.n, "Rows (time points)")->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--m", sim.m, "Columns (variables)")->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--subjects", sim.subjects, "Number of subjects")
      ->required()
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--sigma", sim.sigma, "Noise standard deviation")->required();
  sim_cmd->add_option("--seed", sim.seed, "RNG seed")->required();
  sim_cmd->add_option("--alpha", sim.alpha, "Per-subject scales")->delimiter(',');
  sim_cmd->add_option("--reference", sim.reference, "Shared matrix M (default: Gaussian)");
  sim_cmd->add_option("--out", sim.out, "Output directory")->required();

  ConnectivityOptions conn;
  auto* conn_cmd = app.add_subcommand("connectivity", "Seed and ROI correlation maps");
  conn_cmd->add_option("--reference", conn.reference, "Group reference matrix")->required();
  conn_cmd->add_option("--seed-col", conn.seed_col, "Seed column (0-based)");
  conn_cmd->add_option("--rois", conn.rois, "Column labels CSV");
  conn_cmd->add_option("--out", conn.out, "Output directory")->required();

  FitOptions cv_opts;
  std::vector<double> grid;
  auto* cv_cmd = app.add_subcommand("select-k", "Choose k by leave-one-subject-out");
  add_fit_options(cv_cmd, cv_opts);
  cv_cmd->add_option("--grid", grid, "Candidate k values")->delimiter(',')->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*align_cmd) return run_align(align_opts);
    if (*sim_cmd) return run_simulate(sim);
    if (*conn_cmd) return run_connectivity(conn);
    if (*cv_cmd) return run_select_k(cv_opts, grid);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
