#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "spect/metrics.hpp"
#include "spect/nn/cnnr.hpp"
#include "spect/nn/trainer.hpp"
#include "spect/phantoms.hpp"
#include "spect/pipeline/commands.hpp"
#include "spect/pipeline/manifest.hpp"
#include "spect/projector.hpp"

namespace fs = std::filesystem;
namespace sp = spect::pipeline;

namespace {

std::vector<fs::path> to_paths(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

void print_paths(const std::vector<fs::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPECT simulation, reconstruction and evaluation"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(sp::kToolVersion));
  bool record_timings = false;
  app.add_flag("--record-timings", record_timings,
               "Add wall-clock timings to manifests (makes them non-reproducible)");

  // phantom
  auto* phantom = app.add_subcommand("phantom", "Write random or Shepp-Logan phantoms");
  std::string ph_out;
  std::size_t ph_n = 128, ph_count = 1;
  std::uint64_t ph_seed = 0;
  std::string ph_sl;
  phantom->add_option("--out", ph_out, "Output directory")->required();
  phantom->add_option("--n", ph_n, "Image side")->capture_default_str();
  phantom->add_option("--count", ph_count, "Number of random phantoms")->capture_default_str();
  phantom->add_option("--seed", ph_seed, "Seed")->capture_default_str();
  phantom->add_option("--shepp-logan", ph_sl, "Write the Shepp-Logan phantom instead")
      ->check(CLI::IsMember({"original", "modified"}));

  // project
  auto* project = app.add_subcommand("project", "Forward-project images into sinograms");
  std::vector<std::string> pr_in;
  std::string pr_out, pr_geom = "n=128,angles=24,arc=360";
  project->add_option("--input", pr_in, "Image files")->required()->expected(1, -1);
  project->add_option("--out", pr_out, "Output directory")->required();
  project->add_option("--geometry", pr_geom, "n=..,angles=..,bins=..,arc=..,pixel=..")
      ->capture_default_str();

  // noise
  auto* noise = app.add_subcommand("noise", "Apply Poisson noise to sinograms");
  std::vector<std::string> no_in;
  std::string no_out;
  double no_scale = 0.0;
  std::uint64_t no_seed = 0;
  noise->add_option("--input", no_in, "Sinogram files")->required()->expected(1, -1);
  noise->add_option("--out", no_out, "Output directory")->required();
  noise->add_option("--counts-scale", no_scale, "Expected counts per unit intensity")->required();
  noise->add_option("--seed", no_seed, "Seed")->capture_default_str();

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Generate a phantom/sinogram training set");
  sp::DatasetConfig ds;
  std::string ds_out, ds_geom = "n=64,angles=24,arc=360";
  dataset->add_option("--out", ds_out, "Output directory")->required();
  dataset->add_option("--count", ds.count, "Number of samples")->required();
  dataset->add_option("--geometry", ds_geom, "Scan geometry")->capture_default_str();
  dataset->add_option("--counts-scale", ds.counts_scale, "Expected counts per unit intensity")
      ->required();
  dataset->add_option("--seed", ds.seed, "Seed")->capture_default_str();
  dataset->add_option("--jobs", ds.jobs, "Worker threads")->capture_default_str();
  dataset->add_option("--min-shapes", ds.phantom.min_shapes)->capture_default_str();
  dataset->add_option("--max-shapes", ds.phantom.max_shapes)->capture_default_str();
  dataset->add_flag("--confirm-large", ds.confirm_large, "Allow very large datasets");

  // mlem
  auto* mlem = app.add_subcommand("mlem", "Reconstruct sinograms with MLEM");
  std::vector<std::string> ml_in;
  std::string ml_out, ml_geom = "n=64,angles=24,arc=360";
  sp::MlemOptions ml;
  double ml_init = 0.0;
  mlem->add_option("--input", ml_in, "Sinogram files")->required()->expected(1, -1);
  mlem->add_option("--out", ml_out, "Output directory")->required();
  mlem->add_option("--geometry", ml_geom, "Scan geometry")->capture_default_str();
  mlem->add_option("--iters", ml.iterations, "Iterations")->required();
  auto* ml_init_opt =
      mlem->add_option("--init", ml_init, "Uniform start value (default sum(y)/sum(s))");
  mlem->add_option("--jobs", ml.jobs, "Worker threads")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train the CNN reconstructor");
  spect::nn::TrainConfig tc;
  std::string tr_index, tr_ckpt, tr_preset = "desk-64";
  bool tr_keep_last = false;
  train->add_option("--index", tr_index, "Dataset index.json")->required();
  train->add_option("--checkpoint", tr_ckpt, "Checkpoint to write")->required();
  train->add_option("--preset", tr_preset, "Model scale")
      ->check(CLI::IsMember({"desk-64", "paper-128"}))
      ->capture_default_str();
  train->add_option("--epochs", tc.epochs)->capture_default_str();
  train->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train->add_option("--lr", tc.adam.learning_rate)->capture_default_str();
  train->add_option("--train-fraction", tc.train_fraction)->capture_default_str();
  train->add_option("--ssim-window", tc.ssim_window, "Loss SSIM window side; 0 = whole image")
      ->capture_default_str();
  train->add_option("--seed", tc.seed)->capture_default_str();
  train->add_flag("--keep-last", tr_keep_last, "Keep final weights instead of best-validation");

  // infer
  auto* infer = app.add_subcommand("infer", "Reconstruct sinograms with a trained model");
  std::vector<std::string> in_in;
  std::string in_out, in_ckpt, in_preset;
  infer->add_option("--input", in_in, "Sinogram files")->required()->expected(1, -1);
  infer->add_option("--out", in_out, "Output directory")->required();
  infer->add_option("--checkpoint", in_ckpt, "Checkpoint file")->required();
  infer->add_option("--preset", in_preset, "Model scale (default: from checkpoint sidecar)")
      ->check(CLI::IsMember({"desk-64", "paper-128"}));

  // eval
  auto* eval = app.add_subcommand("eval", "MSE, SSIM and PCC of an image against a reference");
  std::string ev_ref, ev_test, ev_mode = "window:8", ev_label = "test", ev_out;
  eval->add_option("--ref", ev_ref)->required();
  eval->add_option("--test", ev_test)->required();
  eval->add_option("--ssim-mode", ev_mode, "global or window:<w>")->capture_default_str();
  eval->add_option("--label", ev_label)->capture_default_str();
  eval->add_option("--out", ev_out, "Write the report here instead of stdout");

  // compare
  auto* compare = app.add_subcommand("compare", "Metrics table and montage for several methods");
  std::string cm_truth, cm_mode = "window:8", cm_json, cm_png;
  std::vector<std::string> cm_methods;
  compare->add_option("--truth", cm_truth)->required();
  compare->add_option("--method", cm_methods, "label=path, repeatable")->required();
  compare->add_option("--ssim-mode", cm_mode)->capture_default_str();
  compare->add_option("--out-json", cm_json, "Report file");
  compare->add_option("--out-png", cm_png, "Montage file");

  CLI11_PARSE(app, argc, argv);
  sp::set_record_timings(record_timings);

  try {
    if (phantom->parsed()) {
      std::optional<spect::SheppLoganVariant> v;
      if (!ph_sl.empty()) v = spect::parse_shepp_logan_variant(ph_sl);
      print_paths(sp::cmd_phantom(ph_out, ph_n, ph_count, ph_seed, v));
    } else if (project->parsed()) {
      print_paths(sp::cmd_project(to_paths(pr_in), pr_out, spect::parse_geometry(pr_geom)));
    } else if (noise->parsed()) {
      print_paths(sp::cmd_noise(to_paths(no_in), no_out, no_scale, no_seed));
    } else if (dataset->parsed()) {
      ds.geometry = spect::parse_geometry(ds_geom);
      if (ds.count >= sp::kLargeDatasetCount && !ds.confirm_large) {
        const double mib = sp::estimate_dataset_bytes(ds) / (1024.0 * 1024.0);
        std::cerr << "dataset: " << ds.count << " samples need about " << mib
                  << " MiB and roughly " << ds.count * 0.005 * ds.geometry.n / 64.0 / ds.jobs
                  << " s of CPU time; rerun with --confirm-large to proceed\n";
        return 2;
      }
      const auto r = sp::cmd_dataset(ds_out, ds, std::cerr);
      std::cout << "generated " << r.generated << ", kept " << r.skipped << "\n";
    } else if (mlem->parsed()) {
      ml.geometry = spect::parse_geometry(ml_geom);
      if (ml_init_opt->count() > 0) ml.init = ml_init;
      print_paths(sp::cmd_mlem(to_paths(ml_in), ml_out, ml));
    } else if (train->parsed()) {
      tc.preset = spect::nn::parse_preset(tr_preset);
      tc.restore_best = !tr_keep_last;
      const auto out = sp::cmd_train(tr_index, tr_ckpt, tc, std::cerr);
      std::cout << out.checkpoint.string() << "\n";
    } else if (infer->parsed()) {
      sp::InferOptions io;
      io.checkpoint = in_ckpt;
      if (!in_preset.empty()) io.preset = spect::nn::parse_preset(in_preset);
      print_paths(sp::cmd_infer(to_paths(in_in), in_out, io));
    } else if (eval->parsed()) {
      const auto report = sp::cmd_eval(ev_ref, ev_test, spect::parse_ssim_mode(ev_mode), ev_label);
      if (ev_out.empty()) {
        std::cout << report.to_json();
      } else {
        sp::write_text_atomic(ev_out, report.to_json());
        sp::RunManifest m("eval");
        m.set_config({{"reference", ev_ref}, {"test", ev_test}, {"ssim_mode", ev_mode},
                      {"label", ev_label}});
        m.add_input(ev_ref);
        m.add_input(ev_test);
        m.add_output(ev_out);
        m.write(ev_out + ".manifest.json");
      }
    } else if (compare->parsed()) {
      std::vector<std::pair<std::string, fs::path>> methods;
      for (const auto& m : cm_methods) {
        const auto eq = m.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == m.size()) {
          throw std::invalid_argument("--method expects label=path, got '" + m + "'");
        }
        methods.emplace_back(m.substr(0, eq), m.substr(eq + 1));
      }
      const auto r = sp::cmd_compare(cm_truth, methods, spect::parse_ssim_mode(cm_mode), cm_json,
                                     cm_png);
      if (cm_json.empty()) std::cout << r.report.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
