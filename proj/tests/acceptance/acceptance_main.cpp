// Acceptance suite: one PASS/FAIL line per criterion.
//
//   spect_acceptance                 run every criterion
//   spect_acceptance --only 1,2,9    run a subset
//   spect_acceptance --skip 8        run all but some

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spect/array_io.hpp"
#include "spect/error.hpp"
#include "spect/images.hpp"
#include "spect/metrics.hpp"
#include "spect/mlem.hpp"
#include "spect/noise.hpp"
#include "spect/nn/cnnr.hpp"
#include "spect/nn/layers.hpp"
#include "spect/nn/ssim_loss.hpp"
#include "spect/nn/trainer.hpp"
#include "spect/phantoms.hpp"
#include "spect/pipeline/commands.hpp"
#include "spect/projector.hpp"
#include "spect/rng.hpp"

namespace fs = std::filesystem;
using namespace spect;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1 -------------------------------------------------------------------------
Outcome adjoint_identity() {
  double worst = 0.0;
  for (std::size_t n : {16, 64}) {
    ScanGeometry g{n, 24, n, 360.0, 1.0};
    const SystemMatrix p = build_system_matrix(g);
    Rng rng(1000 + n);
    std::vector<double> f(p.num_cols()), y(p.num_rows()), pf(p.num_rows()), pty(p.num_cols());
    for (int trial = 0; trial < 100; ++trial) {
      for (auto& v : f) v = rng.uniform(0.0, 1.0);
      for (auto& v : y) v = rng.uniform(0.0, 1.0);
      p.apply(f, pf);
      p.apply_adjoint(y, pty);
      const double lhs = std::inner_product(pf.begin(), pf.end(), y.begin(), 0.0);
      const double rhs = std::inner_product(f.begin(), f.end(), pty.begin(), 0.0);
      worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
    }
  }
  return {worst < 1e-12, "max relative gap " + fmt("%.3e", worst) + " (tol 1e-12)"};
}

// 2 -------------------------------------------------------------------------
Outcome disk_radon() {
  const std::size_t n = 128;
  ScanGeometry g{n, 24, n, 360.0, 1.0};
  const SystemMatrix p = build_system_matrix(g);
  const double r_norm = 0.7;
  PhantomRecipe recipe{{EllipseSpec{0.0, 0.0, r_norm, r_norm, 0.0, 1.0}}, n};
  const Sinogram s = forward_project(p, rasterize(recipe));
  const double radius = r_norm * static_cast<double>(n) / 2.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < g.np_angles; ++k) {
    double num = 0, den = 0;
    for (std::size_t b = 0; b < g.nr_bins; ++b) {
      const double a = oracle::disk_chord(radius, g.bin_offset(b));
      num += (s.at(k, b) - a) * (s.at(k, b) - a);
      den += a * a;
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  return {worst < 0.02, "worst per-angle relative RMS " + fmt("%.4f", worst) + " (tol 0.02)"};
}

// 3 -------------------------------------------------------------------------
Outcome mlem_properties() {
  ScanGeometry g{64, 24, 64, 360.0, 1.0};
  const SystemMatrix p = build_system_matrix(g);
  const ActivityImage truth = shepp_logan(64, SheppLoganVariant::kModified);
  const Sinogram clean = forward_project(p, truth);
  const Sinogram noisy = poissonize(clean, {counts_scale_for_peak(clean, 500.0), 2024});
  const auto y = noisy.data();
  const double total = std::accumulate(y.begin(), y.end(), 0.0);

  MlemState st = mlem_init(p, y, mlem_default_init(p, y));
  double worst_ll = 0.0, worst_count = 0.0;
  bool nonneg = true;
  for (int it = 0; it < 200; ++it) {
    st = mlem_step(p, y, std::move(st));
    const auto& h = st.log_likelihood_history;
    const double prev = h[h.size() - 2], cur = h.back();
    worst_ll = std::max(worst_ll, (prev - cur) / std::abs(prev));
    double counted = 0.0;
    for (std::size_t j = 0; j < st.estimate.size(); ++j) {
      counted += st.sensitivity[j] * st.estimate[j];
      if (!(st.estimate[j] >= 0.0)) nonneg = false;
    }
    worst_count = std::max(worst_count, std::abs(counted - total) / total);
  }
  const bool pass = worst_ll <= 1e-9 && worst_count < 1e-10 && nonneg;
  return {pass, "max relative log-likelihood drop " + fmt("%.2e", std::max(0.0, worst_ll)) +
                    ", max count error " + fmt("%.2e", worst_count) +
                    (nonneg ? ", iterates nonnegative" : ", NEGATIVE iterate")};
}

// 4 -------------------------------------------------------------------------
Outcome mlem_toy() {
  const SystemMatrix p = SystemMatrix::from_rows(2, {{{0, 2.0}, {1, 1.0}}, {{0, 1.0}, {1, 3.0}}});
  // y = P f* with f* = (1, 2); the closed form is f* = P^{-1} y.
  const std::vector<double> y{4.0, 7.0};
  const double det = 2.0 * 3.0 - 1.0 * 1.0;
  const double f0 = (3.0 * y[0] - 1.0 * y[1]) / det, f1 = (-1.0 * y[0] + 2.0 * y[1]) / det;
  const MlemResult r = mlem_run(p, y, 500, 1.0);
  const double err = std::max(std::abs(r.estimate[0] - f0) / f0, std::abs(r.estimate[1] - f1) / f1);
  return {err < 1e-6, "max relative error after 500 iterations " + fmt("%.3e", err) + " (tol 1e-6)"};
}

// 5 -------------------------------------------------------------------------
Outcome gradient_suite() {
  using nn::Mode;
  using nn::Tensor;
  Rng rng(55);
  std::map<std::string, double> worst;
  std::map<std::string, int> shapes;
  auto record = [&](const std::string& name, double e) {
    worst[name] = std::max(worst[name], e);
    ++shapes[name];
  };
  const std::size_t conv_shapes[5][4] = {{1, 1, 4, 4}, {2, 3, 5, 6}, {1, 2, 7, 3}, {3, 1, 4, 4}, {2, 4, 3, 5}};
  const std::size_t outs[5] = {2, 3, 1, 4, 2};
  for (int s = 0; s < 5; ++s) {
    const auto* d = conv_shapes[s];
    for (std::size_t k : {3u, 1u}) {
      nn::Conv2d<double> conv(d[1], outs[s], k);
      nn::he_normal(conv.weight().value, d[1] * k * k, rng);
      for (auto& b : conv.bias().value.values()) b = rng.uniform(-0.5, 0.5);
      Tensor<double> x({d[0], d[1], d[2], d[3]});
      for (auto& v : x.values()) v = rng.normal();
      record(k == 3 ? "conv3x3" : "conv1x1",
             oracle::check_layer_gradients(conv, x, Mode::kTrain, rng).worst());
    }
    {
      nn::ConvTranspose2d<double> ct(d[1], outs[s]);
      nn::he_normal(ct.weight().value, d[1] * 9, rng);
      for (auto& b : ct.bias().value.values()) b = rng.uniform(-0.5, 0.5);
      Tensor<double> x({d[0], d[1], d[2], d[3]});
      for (auto& v : x.values()) v = rng.normal();
      record("conv_transpose", oracle::check_layer_gradients(ct, x, Mode::kTrain, rng).worst());
    }
    {
      nn::MaxPool2x2<double> pool;
      auto x = oracle::separated_tensor({d[0], d[1], d[2], d[3]}, rng);
      record("maxpool", oracle::check_layer_gradients(pool, x, Mode::kTrain, rng).worst());
    }
    {
      nn::BatchNorm<double> bn(d[1]);
      for (auto& v : bn.gamma().value.values()) v = rng.uniform(0.5, 1.5);
      for (auto& v : bn.beta().value.values()) v = rng.uniform(-0.5, 0.5);
      Tensor<double> x({d[0] + 1, d[1], d[2], d[3]});
      for (auto& v : x.values()) v = rng.normal();
      record("batchnorm", oracle::check_layer_gradients(bn, x, Mode::kTrain, rng).worst());
      nn::BatchNorm<double> bn2(d[2]);
      Tensor<double> x2({d[0] + 2, d[2]});
      for (auto& v : x2.values()) v = rng.normal();
      record("batchnorm", oracle::check_layer_gradients(bn2, x2, Mode::kTrain, rng).worst());
      record("batchnorm", oracle::check_layer_gradients(bn, x, Mode::kInference, rng).worst());
    }
    {
      nn::LeakyRelu<double> act(0.01);
      auto x = oracle::separated_tensor({d[0], d[1], d[2], d[3]}, rng, 1e-2);
      record("leaky_relu", oracle::check_layer_gradients(act, x, Mode::kTrain, rng).worst());
    }
    {
      nn::Dropout<double> drop(0.3, 7);
      Tensor<double> x({d[0], d[1], d[2], d[3]});
      for (auto& v : x.values()) v = rng.normal();
      record("dropout", oracle::check_layer_gradients(drop, x, Mode::kTrain, rng, 1e-5, 40,
                                                      [&] { drop.reseed(99 + s); })
                            .worst());
    }
    {
      const std::size_t in = d[1] * d[2], out = outs[s] + 2;
      nn::Dense<double> dense(in, out);
      nn::he_normal(dense.weight().value, in, rng);
      for (auto& b : dense.bias().value.values()) b = rng.uniform(-0.5, 0.5);
      Tensor<double> x({d[0], in});
      for (auto& v : x.values()) v = rng.normal();
      record("dense", oracle::check_layer_gradients(dense, x, Mode::kTrain, rng).worst());
    }
    {
      nn::Flatten<double> flat;
      Tensor<double> x({d[0], d[1], d[2], d[3]});
      for (auto& v : x.values()) v = rng.normal();
      record("flatten", oracle::check_layer_gradients(flat, x, Mode::kTrain, rng).worst());
      nn::Reshape<double> re({d[1] * d[2], d[3]});
      record("reshape", oracle::check_layer_gradients(re, x, Mode::kTrain, rng).worst());
    }
    {
      const std::size_t side = 8 + 3 * s, batch = 1 + s % 3;
      for (const char* mode : {"window:4", "global"}) {
        const SsimConfig cfg = parse_ssim_mode(mode);
        Tensor<double> pred({batch, 1, side, side}), target({batch, 1, side, side});
        for (auto& v : target.values()) v = rng.uniform(0.0, 1.0);
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = target[i] + 0.2 * rng.normal();
        const auto res = nn::ssim_loss(pred, target, cfg);
        std::vector<double> analytic, numeric;
        for (int probe = 0; probe < 40; ++probe) {
          const std::size_t i = rng.bounded(static_cast<std::uint32_t>(pred.size()));
          const double orig = pred[i], h = 1e-5;
          pred[i] = orig + h;
          const double lp = nn::ssim_loss(pred, target, cfg).loss;
          pred[i] = orig - h;
          const double lm = nn::ssim_loss(pred, target, cfg).loss;
          pred[i] = orig;
          analytic.push_back(res.grad[i]);
          numeric.push_back((lp - lm) / (2 * h));
        }
        record("ssim_loss", oracle::relative_error(analytic, numeric));
      }
    }
  }
  bool pass = true;
  std::ostringstream os;
  for (const auto& [name, e] : worst) {
    if (!(e < 1e-4) || shapes[name] < 5) pass = false;
    os << name << " " << fmt("%.1e", e) << " ";
  }
  return {pass, os.str() + "(tol 1e-4)"};
}

// 6 -------------------------------------------------------------------------
Outcome ssim_oracle() {
  Rng rng(66);
  double worst = 0.0, self = 0.0, sym = 0.0;
  for (int pair = 0; pair < 50; ++pair) {
    const std::size_t n = 8 + rng.bounded(25);
    std::vector<double> x(n * n), y(n * n);
    for (auto& v : x) v = rng.uniform(0.0, 1.0);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::clamp(x[i] + 0.3 * rng.normal(), 0.0, 1.5);
    const ImageView vx{x, n, n}, vy{y, n, n};
    for (std::size_t w : {std::size_t{0}, std::size_t{7}, std::size_t{8}, n}) {
      SsimConfig cfg;
      cfg.dynamic_range = 1.0 + 0.5 * pair / 50.0;
      if (w == 0) {
        cfg.window = SsimWindow::kGlobal;
      } else {
        cfg.window_size = w;
      }
      const double lib = ssim(vx, vy, cfg);
      const double ref = oracle::direct_ssim(x, y, n, n, w, cfg.k1, cfg.k2, cfg.dynamic_range);
      worst = std::max(worst, std::abs(lib - ref));
      self = std::max(self, std::abs(ssim(vx, vx, cfg) - 1.0));
      sym = std::max(sym, std::abs(lib - ssim(vy, vx, cfg)));
    }
  }
  const bool pass = worst < 1e-12 && self < 1e-12 && sym < 1e-12;
  return {pass, "max |lib - direct| " + fmt("%.1e", worst) + ", |ssim(x,x) - 1| " +
                    fmt("%.1e", self) + ", asymmetry " + fmt("%.1e", sym) + " (tol 1e-12)"};
}

// 7 -------------------------------------------------------------------------
std::vector<nn::TrainingSample> make_samples(std::size_t count, std::uint64_t seed,
                                             double counts_scale, std::size_t n = 64) {
  pipeline::DatasetConfig cfg;
  cfg.count = count;
  cfg.geometry = ScanGeometry{n, 24, n, 360.0, 1.0};
  cfg.counts_scale = counts_scale;
  cfg.seed = seed;
  const SystemMatrix p = build_system_matrix(cfg.geometry);
  std::vector<nn::TrainingSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto s = pipeline::generate_sample(p, cfg, i);
    out.push_back({std::move(s.noisy), std::move(s.phantom)});
  }
  return out;
}

Outcome overfit() {
  const auto samples = make_samples(8, 77, 10.0);
  nn::TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 8;
  cfg.seed = 7;
  cfg.preset = nn::ScalePreset::kDesk64;
  double ssim_runs[2], ssim_w8 = 0;
  std::string hist[2];
  for (int run = 0; run < 2; ++run) {
    auto model = nn::CnnrModel<float>::build(cfg.preset, cfg.seed);
    const auto h = nn::train(model, std::span<const nn::TrainingSample>(samples),
                             std::span<const nn::TrainingSample>(), cfg,
                             [](const nn::EpochRecord& r) {
                               if (r.epoch % 50 == 49) {
                                 std::cerr << "  [7] epoch " << r.epoch + 1 << " loss " << r.train_loss << "\n";
                               }
                             });
    ssim_runs[run] = nn::evaluate_ssim(model, std::span<const nn::TrainingSample>(samples), cfg.ssim_window);
    if (run == 0) ssim_w8 = nn::evaluate_ssim(model, std::span<const nn::TrainingSample>(samples), 8);
    hist[run] = h.to_json();
  }
  const bool same = hist[0] == hist[1] && ssim_runs[0] == ssim_runs[1];
  return {ssim_runs[0] > 0.98 && same,
          "training SSIM " + fmt("%.4f", ssim_runs[0]) + " (need > 0.98; 8x8-window " +
              fmt("%.4f", ssim_w8) + "), reruns " +
              (same ? "identical" : "DIFFER")};
}

// 8 -------------------------------------------------------------------------
struct MethodScores {
  double ssim = 0, mse = 0, pcc = 0, ssim_global = 0;
};

Outcome table_reproduction() {
  const ScanGeometry g{64, 24, 64, 360.0, 1.0};
  const SystemMatrix p = build_system_matrix(g);
  const ActivityImage sl = shepp_logan(64, SheppLoganVariant::kModified);
  const Sinogram sl_clean = forward_project(p, sl);
  const double scale = counts_scale_for_peak(sl_clean, 500.0);
  const Sinogram sl_noisy = poissonize(sl_clean, {scale, 4242});

  const auto train_set = make_samples(2000, 8001, scale);
  const auto test_set = make_samples(200, 8002, scale);

  nn::TrainConfig cfg;
  cfg.epochs = 100;
  cfg.batch_size = 32;
  cfg.seed = 8;
  cfg.preset = nn::ScalePreset::kDesk64;
  auto model = nn::CnnrModel<float>::build(cfg.preset, cfg.seed);
  const auto t0 = std::chrono::steady_clock::now();
  nn::train(model, std::span<const nn::TrainingSample>(train_set), cfg,
            [&](const nn::EpochRecord& r) {
              const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
              std::cerr << "  [8] epoch " << r.epoch + 1 << " loss " << fmt("%.4f", r.train_loss)
                        << " val_ssim " << fmt("%.4f", r.validation_ssim) << " (" << fmt("%.0f", el)
                        << " s)\n";
            });

  SsimConfig scfg;
  SsimConfig gcfg;
  gcfg.window = SsimWindow::kGlobal;
  MethodScores cnnr, mlem;
  std::vector<Sinogram> sinos;
  for (const auto& s : test_set) sinos.push_back(s.sinogram);
  const auto cnnr_images = nn::cnnr_forward_batch(model, std::span<const Sinogram>(sinos));
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto& truth = test_set[i].image;
    const auto y = test_set[i].sinogram.data();
    const ActivityImage m = mlem_reconstruct(p, test_set[i].sinogram, 50, mlem_default_init(p, y));
    const auto rc = evaluate_pair(truth, cnnr_images[i], scfg);
    const auto rm = evaluate_pair(truth, m, scfg);
    cnnr.ssim += rc.ssim; cnnr.mse += rc.mse; cnnr.pcc += rc.pcc;
    mlem.ssim += rm.ssim; mlem.mse += rm.mse; mlem.pcc += rm.pcc;
    cnnr.ssim_global += evaluate_pair(truth, cnnr_images[i], gcfg).ssim;
    mlem.ssim_global += evaluate_pair(truth, m, gcfg).ssim;
  }
  const double k = static_cast<double>(test_set.size());
  for (auto* s : {&cnnr, &mlem}) { s->ssim /= k; s->mse /= k; s->pcc /= k; s->ssim_global /= k; }

  const auto sl_c = evaluate_pair(sl, nn::cnnr_forward(model, sl_noisy), scfg);
  const auto sl_m = evaluate_pair(sl, mlem_reconstruct(p, sl_noisy, 50, mlem_default_init(p, sl_noisy.data())), scfg);

  std::ostringstream os;
  os << "held-out CNNR mse/ssim/pcc " << fmt("%.4f", cnnr.mse) << "/" << fmt("%.3f", cnnr.ssim) << "/"
     << fmt("%.3f", cnnr.pcc) << " vs MLEM " << fmt("%.4f", mlem.mse) << "/" << fmt("%.3f", mlem.ssim)
     << "/" << fmt("%.3f", mlem.pcc) << "; Shepp-Logan SSIM CNNR " << fmt("%.3f", sl_c.ssim)
     << " vs MLEM " << fmt("%.3f", sl_m.ssim) << " (global SSIM held-out " << fmt("%.3f", cnnr.ssim_global)
     << " vs " << fmt("%.3f", mlem.ssim_global) << ")";
  const bool pass = cnnr.ssim > mlem.ssim && cnnr.mse < mlem.mse && sl_c.ssim > sl_m.ssim;
  return {pass, os.str()};
}

// 9 -------------------------------------------------------------------------
Outcome poisson_moments() {
  const std::size_t draws = 1000000;
  bool pass = true;
  std::ostringstream os;
  for (double lambda : {0.5, 5.0, 1000.0}) {
    Rng rng(static_cast<std::uint64_t>(lambda * 1000) + 9);
    double sum = 0, sumsq = 0;
    for (std::size_t i = 0; i < draws; ++i) {
      const double k = static_cast<double>(sample_poisson(rng, lambda));
      sum += k;
      sumsq += k * k;
    }
    const double nd = static_cast<double>(draws);
    const double mean = sum / nd;
    const double var = (sumsq - nd * mean * mean) / (nd - 1);
    // Var(mean) = lambda / N; Var(s^2) ~ (mu4 - sigma^4 (N-3)/(N-1)) / N, mu4 = lambda (1 + 3 lambda).
    const double sd_mean = std::sqrt(lambda / nd);
    const double mu4 = lambda * (1 + 3 * lambda);
    const double sd_var = std::sqrt((mu4 - lambda * lambda * (nd - 3) / (nd - 1)) / nd);
    const double zm = (mean - lambda) / sd_mean, zv = (var - lambda) / sd_var;
    if (std::abs(zm) > 3 || std::abs(zv) > 3) pass = false;
    os << "lambda " << lambda << ": z_mean " << fmt("%+.2f", zm) << " z_var " << fmt("%+.2f", zv) << "; ";
  }
  return {pass, os.str() + "(bound 3 sigma)"};
}

// 10 ------------------------------------------------------------------------
bool same_directory(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<std::string> na, nb;
  for (const auto& e : fs::directory_iterator(a)) na.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) nb.insert(e.path().filename().string());
  if (na != nb) {
    why = "file lists differ";
    return false;
  }
  for (const auto& name : na) {
    if (read_file((a / name).string()) != read_file((b / name).string())) {
      why = name + " differs";
      return false;
    }
  }
  return true;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "spect_acceptance_determinism";
  fs::remove_all(root);
  pipeline::DatasetConfig cfg;
  cfg.count = 50;
  cfg.geometry = ScanGeometry{64, 24, 64, 360.0, 1.0};
  cfg.counts_scale = 10.0;
  cfg.seed = 1010;
  std::ostringstream sink;
  pipeline::cmd_dataset(root / "a", cfg, sink);
  cfg.jobs = 3;
  pipeline::cmd_dataset(root / "b", cfg, sink);
  std::string why;
  const bool same_dirs = same_directory(root / "a", root / "b", why);

  const auto samples = pipeline::load_training_samples(root / "a" / "index.json");
  const std::vector<nn::TrainingSample> subset(samples.begin(), samples.begin() + 12);
  nn::TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 4;
  tc.seed = 10;
  std::string hist[2];
  for (auto& h : hist) {
    auto model = nn::CnnrModel<float>::build(tc.preset, tc.seed);
    h = nn::train(model, std::span<const nn::TrainingSample>(subset), tc).to_json();
  }
  fs::remove_all(root);
  const bool same_hist = hist[0] == hist[1];
  return {same_dirs && same_hist,
          std::string("datasets ") + (same_dirs ? "byte-identical" : "DIFFER (" + why + ")") +
              " (jobs 1 vs 3), loss histories " + (same_hist ? "identical" : "DIFFER")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.insert(std::stoi(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, skip;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if ((a == "--only" || a == "--skip") && i + 1 < argc) {
      (a == "--only" ? only : skip) = parse_list(argv[++i]);
    } else {
      std::cerr << "usage: " << argv[0] << " [--only 1,2,...] [--skip 8,...]\n";
      return 2;
    }
  }
  const std::vector<Criterion> criteria = {
      {1, "adjoint identity", adjoint_identity},
      {2, "disk Radon profile", disk_radon},
      {3, "MLEM monotone likelihood, count preservation, nonnegativity", mlem_properties},
      {4, "MLEM exact recovery on 2x2 system", mlem_toy},
      {5, "finite-difference gradient suite", gradient_suite},
      {6, "SSIM against direct evaluation", ssim_oracle},
      {7, "desk-64 overfit on 8 pairs", overfit},
      {8, "desk benchmark CNNR vs MLEM", table_reproduction},
      {9, "Poisson sampler moments", poisson_moments},
      {10, "end-to-end determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if ((!only.empty() && !only.count(c.id)) || skip.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail
              << " [" << fmt("%.1f", secs) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
