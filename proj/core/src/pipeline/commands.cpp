#include "spect/pipeline/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "spect/array_io.hpp"
#include "spect/dataset_index.hpp"
#include "spect/error.hpp"
#include "spect/mlem.hpp"
#include "spect/noise.hpp"
#include "spect/nn/checkpoint.hpp"
#include "spect/pipeline/manifest.hpp"
#include "spect/pipeline/png_writer.hpp"
#include "spect/rng.hpp"

namespace spect::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

nlohmann::ordered_json geometry_json(const ScanGeometry& g) {
  nlohmann::ordered_json j;
  j["n"] = g.n;
  j["angles"] = g.np_angles;
  j["bins"] = g.nr_bins;
  j["arc_degrees"] = g.arc_degrees;
  j["pixel_size"] = g.pixel_size;
  j["spec"] = format_geometry(g);
  return j;
}

nlohmann::ordered_json phantom_config_json(const RandomPhantomConfig& c) {
  nlohmann::ordered_json j;
  j["min_shapes"] = c.min_shapes;
  j["max_shapes"] = c.max_shapes;
  j["center_radius"] = c.center_radius;
  j["min_axis"] = c.min_axis;
  j["max_axis"] = c.max_axis;
  j["min_intensity"] = c.min_intensity;
  j["max_intensity"] = c.max_intensity;
  return j;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw FormatError(FormatError::Kind::kIo, "cannot create directory: " + dir.string());
  }
}

void require_new(const fs::path& path) {
  if (fs::exists(path)) {
    throw Error("refusing to overwrite existing output: " + path.string());
  }
}

std::string stem_of(const fs::path& p) {
  std::string name = p.filename().string();
  if (name.size() > 5 && name.ends_with(".spct")) name.resize(name.size() - 5);
  return name;
}

void check_sinogram(const Sinogram& s, std::size_t np, std::size_t nr, const fs::path& path) {
  if (s.np_angles() != np || s.nr_bins() != nr) {
    throw ShapeError(path.string() + ": sinogram is " + std::to_string(s.np_angles()) + "x" +
                     std::to_string(s.nr_bins()) + ", expected " + std::to_string(np) + "x" +
                     std::to_string(nr));
  }
}

bool sample_complete(const fs::path& dir, const SampleFiles& f, const DatasetConfig& c) {
  try {
    for (const auto* name : {&f.phantom, &f.noiseless, &f.noisy}) {
      if (!fs::is_regular_file(dir / *name)) return false;
    }
    const ActivityImage img = load_image((dir / f.phantom).string());
    if (img.n() != c.geometry.n) return false;
    for (const auto* name : {&f.noiseless, &f.noisy}) {
      const Sinogram s = load_sinogram((dir / *name).string());
      if (s.np_angles() != c.geometry.np_angles || s.nr_bins() != c.geometry.nr_bins) return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard lock(mu);
        if (failure && failed_index < i) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------- dataset

void DatasetConfig::validate() const {
  if (count == 0) throw std::invalid_argument("dataset: count must be positive");
  geometry.validate();
  if (!(counts_scale > 0.0) || !std::isfinite(counts_scale)) {
    throw std::invalid_argument("dataset: counts_scale must be positive");
  }
  phantom.validate();
  if (jobs == 0) throw std::invalid_argument("dataset: jobs must be positive");
}

nlohmann::ordered_json DatasetConfig::to_json() const {
  nlohmann::ordered_json j;
  j["count"] = count;
  j["geometry"] = geometry_json(geometry);
  j["counts_scale"] = counts_scale;
  j["seed"] = seed;
  j["phantom"] = phantom_config_json(phantom);
  return j;
}

SampleFiles sample_files(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  const std::string s(buf);
  return {s + ".phantom.spct", s + ".sino.spct", s + ".noisy.spct"};
}

DatasetSample generate_sample(const SystemMatrix& matrix, const DatasetConfig& config,
                              std::size_t index) {
  Rng rng(child_seed(config.seed, 2 * index));
  auto [recipe, phantom] = random_phantom(rng, config.geometry.n, config.phantom);
  Sinogram noiseless = forward_project(matrix, phantom);
  Sinogram noisy = poissonize(noiseless, {config.counts_scale, child_seed(config.seed, 2 * index + 1)});
  return {std::move(recipe), std::move(phantom), std::move(noiseless), std::move(noisy)};
}

std::uint64_t estimate_dataset_bytes(const DatasetConfig& c) {
  const std::uint64_t header = 14;
  const std::uint64_t img = header + 4ULL * c.geometry.n * c.geometry.n;
  const std::uint64_t sino = header + 4ULL * c.geometry.np_angles * c.geometry.nr_bins;
  return c.count * (img + 2 * sino + 40);
}

DatasetResult cmd_dataset(const fs::path& out_dir, const DatasetConfig& config, std::ostream& log) {
  config.validate();
  if (config.count >= kLargeDatasetCount && !config.confirm_large) {
    throw Error("dataset: count " + std::to_string(config.count) +
                " needs --confirm-large (estimated " +
                std::to_string(estimate_dataset_bytes(config) / (1024 * 1024)) + " MiB on disk)");
  }
  ensure_dir(out_dir);
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    if (entry.path().extension() == ".tmp") fs::remove(entry.path());
  }

  const auto t0 = Clock::now();
  const SystemMatrix matrix = build_system_matrix(config.geometry);
  const double build_seconds = seconds_since(t0);

  std::vector<char> done(config.count, 0);
  for (std::size_t i = 0; i < config.count; ++i) {
    done[i] = sample_complete(out_dir, sample_files(i), config) ? 1 : 0;
  }
  DatasetResult result;
  for (char d : done) result.skipped += d ? 1 : 0;
  result.generated = config.count - result.skipped;
  if (result.skipped > 0) {
    log << "dataset: resuming, " << result.skipped << " of " << config.count
        << " samples already present\n";
  }

  const auto t1 = Clock::now();
  std::atomic<std::size_t> progress{0};
  std::mutex log_mu;
  const std::size_t step = std::max<std::size_t>(1, result.generated / 10);
  parallel_for(config.count, config.jobs, [&](std::size_t i) {
    if (done[i]) return;
    const DatasetSample s = generate_sample(matrix, config, i);
    const SampleFiles f = sample_files(i);
    save_image((out_dir / f.phantom).string(), s.phantom);
    save_sinogram((out_dir / f.noiseless).string(), s.noiseless);
    save_sinogram((out_dir / f.noisy).string(), s.noisy);
    const std::size_t k = progress.fetch_add(1) + 1;
    if (k % step == 0 || k == result.generated) {
      std::lock_guard lock(log_mu);
      log << "dataset: " << k << "/" << result.generated << " generated\n";
    }
  });

  DatasetIndex index;
  index.split_seed = config.seed;
  for (std::size_t i = 0; i < config.count; ++i) {
    const SampleFiles f = sample_files(i);
    index.pairs.push_back({f.noisy, f.phantom});
  }
  save_dataset_index((out_dir / "index.json").string(), index);

  RunManifest manifest("dataset");
  auto cfg = config.to_json();
  manifest.set_config(cfg);
  manifest.add_seed("dataset", config.seed);
  manifest.add_output("index.json");
  manifest.add_timing("system_matrix", build_seconds);
  manifest.add_timing("samples", seconds_since(t1));
  manifest.write(out_dir / "manifest.json");
  return result;
}

std::vector<nn::TrainingSample> load_training_samples(const fs::path& index_path) {
  const DatasetIndex index = load_dataset_index(index_path.string());
  const fs::path base = index_path.parent_path();
  std::vector<nn::TrainingSample> samples;
  samples.reserve(index.pairs.size());
  for (const auto& p : index.pairs) {
    const fs::path sino = fs::path(p.sino).is_absolute() ? fs::path(p.sino) : base / p.sino;
    const fs::path img = fs::path(p.img).is_absolute() ? fs::path(p.img) : base / p.img;
    samples.push_back({load_sinogram(sino.string()), load_image(img.string())});
  }
  return samples;
}

// ---------------------------------------------------------- reconstruction

std::vector<fs::path> cmd_mlem(const std::vector<fs::path>& inputs, const fs::path& out_dir,
                               const MlemOptions& options) {
  options.geometry.validate();
  if (options.iterations == 0) throw std::invalid_argument("mlem: iterations must be positive");
  if (options.init && !(*options.init > 0.0)) {
    throw std::invalid_argument("mlem: init must be positive");
  }
  ensure_dir(out_dir);
  std::vector<Sinogram> sinos;
  sinos.reserve(inputs.size());
  for (const auto& in : inputs) {
    sinos.push_back(load_sinogram(in.string()));
    check_sinogram(sinos.back(), options.geometry.np_angles, options.geometry.nr_bins, in);
  }
  std::vector<fs::path> outputs;
  for (const auto& in : inputs) {
    outputs.push_back(out_dir / (stem_of(in) + ".mlem.spct"));
    require_new(outputs.back());
  }

  const auto t0 = Clock::now();
  const SystemMatrix matrix = build_system_matrix(options.geometry);
  const auto t1 = Clock::now();
  parallel_for(inputs.size(), options.jobs, [&](std::size_t i) {
    const double init = options.init ? *options.init : mlem_default_init(matrix, sinos[i].data());
    std::vector<double> history;
    const ActivityImage img =
        mlem_reconstruct(matrix, sinos[i], options.iterations, init, &history);
    save_image(outputs[i].string(), img);
    nlohmann::ordered_json meta;
    meta["input"] = inputs[i].string();
    meta["iterations"] = options.iterations;
    meta["init"] = init;
    meta["log_likelihood"] = history;
    fs::path meta_path = outputs[i];
    meta_path.replace_extension(".json");
    write_text_atomic(meta_path, meta.dump(2) + "\n");
  });

  RunManifest manifest("mlem");
  nlohmann::ordered_json cfg;
  cfg["geometry"] = geometry_json(options.geometry);
  cfg["iterations"] = options.iterations;
  cfg["init"] = options.init ? nlohmann::ordered_json(*options.init)
                             : nlohmann::ordered_json("sum(y)/sum(s)");
  manifest.set_config(cfg);
  for (const auto& in : inputs) manifest.add_input(in.string());
  for (const auto& out : outputs) manifest.add_output(out.filename().string());
  manifest.add_timing("system_matrix", std::chrono::duration<double>(t1 - t0).count());
  manifest.add_timing("reconstruct", seconds_since(t1));
  manifest.write(out_dir / "mlem.manifest.json");
  return outputs;
}

fs::path checkpoint_sidecar(const fs::path& checkpoint) {
  return fs::path(checkpoint.string() + ".json");
}

std::vector<fs::path> cmd_infer(const std::vector<fs::path>& inputs, const fs::path& out_dir,
                                const InferOptions& options) {
  nn::ScalePreset preset;
  if (options.preset) {
    preset = *options.preset;
  } else {
    const auto side = nlohmann::json::parse(read_text(checkpoint_sidecar(options.checkpoint)));
    preset = nn::parse_preset(side.at("preset").get<std::string>());
  }
  auto model = nn::CnnrModel<float>::build(preset, 0);
  nn::load_checkpoint(options.checkpoint.string(), model);
  const nn::PresetInfo& info = model.info();

  ensure_dir(out_dir);
  std::vector<Sinogram> sinos;
  std::vector<fs::path> outputs;
  for (const auto& in : inputs) {
    sinos.push_back(load_sinogram(in.string()));
    check_sinogram(sinos.back(), info.np_angles, info.nr_bins, in);
    outputs.push_back(out_dir / (stem_of(in) + ".cnnr.spct"));
    require_new(outputs.back());
  }
  const auto t0 = Clock::now();
  const auto images = nn::cnnr_forward_batch(model, std::span<const Sinogram>(sinos));
  for (std::size_t i = 0; i < images.size(); ++i) save_image(outputs[i].string(), images[i]);

  RunManifest manifest("infer");
  nlohmann::ordered_json cfg;
  cfg["checkpoint"] = options.checkpoint.string();
  cfg["preset"] = nn::to_string(preset);
  cfg["output_scale"] = "clamp(0), sum(image) = sum(sinogram) / angles";
  manifest.set_config(cfg);
  for (const auto& in : inputs) manifest.add_input(in.string());
  for (const auto& out : outputs) manifest.add_output(out.filename().string());
  manifest.add_timing("inference", seconds_since(t0));
  manifest.write(out_dir / "infer.manifest.json");
  return outputs;
}

// ------------------------------------------------------------------ train

TrainOutputs cmd_train(const fs::path& index_path, const fs::path& checkpoint_path,
                       const nn::TrainConfig& config, std::ostream& log) {
  config.validate();
  const auto samples = load_training_samples(index_path);
  if (samples.size() < 2) throw std::invalid_argument("train: need at least two samples");
  auto model = nn::CnnrModel<float>::build(config.preset, config.seed);
  const nn::PresetInfo& info = model.info();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    check_sinogram(samples[i].sinogram, info.np_angles, info.nr_bins, index_path);
    if (samples[i].image.n() != info.image_n) {
      throw ShapeError("train: sample " + std::to_string(i) + " image is " +
                       std::to_string(samples[i].image.n()) + " wide, preset expects " +
                       std::to_string(info.image_n));
    }
  }
  log << "train: " << samples.size() << " samples, preset " << nn::to_string(config.preset)
      << ", " << model.parameter_count() << " parameters\n";

  const auto t0 = Clock::now();
  const nn::TrainHistory history =
      nn::train(model, std::span<const nn::TrainingSample>(samples), config,
                [&](const nn::EpochRecord& r) {
                  log << "epoch " << r.epoch << " loss " << r.train_loss << " val_ssim "
                      << r.validation_ssim << "\n";
                  log.flush();
                });

  if (checkpoint_path.has_parent_path()) ensure_dir(checkpoint_path.parent_path());
  TrainOutputs out;
  out.checkpoint = checkpoint_path;
  out.config = checkpoint_sidecar(checkpoint_path);
  out.history = fs::path(checkpoint_path.string() + ".history.json");
  nn::save_checkpoint(checkpoint_path.string(), model);

  nlohmann::ordered_json side;
  side["preset"] = nn::to_string(config.preset);
  side["parameters"] = model.parameter_count();
  side["train"] = nlohmann::ordered_json::parse(config.to_json());
  side["index"] = index_path.string();
  write_text_atomic(out.config, side.dump(2) + "\n");
  write_text_atomic(out.history, history.to_json());

  RunManifest manifest("train");
  nlohmann::ordered_json cfg = side["train"];
  cfg["index"] = index_path.string();
  cfg["checkpoint"] = checkpoint_path.string();
  manifest.set_config(cfg);
  manifest.add_seed("train", config.seed);
  manifest.add_input(index_path.string());
  manifest.add_output(out.checkpoint.string());
  manifest.add_output(out.config.string());
  manifest.add_output(out.history.string());
  manifest.add_timing("train", seconds_since(t0));
  manifest.write(fs::path(checkpoint_path.string() + ".manifest.json"));
  return out;
}

// ------------------------------------------------------- single-step tools

std::vector<fs::path> cmd_phantom(const fs::path& out_dir, std::size_t n, std::size_t count,
                                  std::uint64_t seed,
                                  const std::optional<SheppLoganVariant>& variant) {
  ensure_dir(out_dir);
  std::vector<fs::path> outputs;
  RunManifest manifest("phantom");
  nlohmann::ordered_json cfg;
  cfg["n"] = n;
  if (variant) {
    cfg["shepp_logan"] = to_string(*variant);
    const fs::path path = out_dir / ("shepp_logan_" + to_string(*variant) + ".spct");
    require_new(path);
    save_image(path.string(), shepp_logan(n, *variant));
    outputs.push_back(path);
  } else {
    if (count == 0) throw std::invalid_argument("phantom: count must be positive");
    cfg["count"] = count;
    cfg["seed"] = seed;
    manifest.add_seed("phantom", seed);
    for (std::size_t i = 0; i < count; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "phantom_%06zu", i);
      const fs::path path = out_dir / (std::string(buf) + ".spct");
      require_new(path);
      Rng rng(child_seed(seed, i));
      const auto [recipe, image] = random_phantom(rng, n);
      save_image(path.string(), image);
      write_text_atomic(out_dir / (std::string(buf) + ".json"), recipe_to_json(recipe));
      outputs.push_back(path);
    }
  }
  manifest.set_config(cfg);
  for (const auto& out : outputs) manifest.add_output(out.filename().string());
  manifest.write(out_dir / "phantom.manifest.json");
  return outputs;
}

std::vector<fs::path> cmd_project(const std::vector<fs::path>& inputs, const fs::path& out_dir,
                                  const ScanGeometry& geometry) {
  geometry.validate();
  ensure_dir(out_dir);
  const SystemMatrix matrix = build_system_matrix(geometry);
  std::vector<fs::path> outputs;
  for (const auto& in : inputs) {
    const ActivityImage img = load_image(in.string());
    if (img.n() != geometry.n) {
      throw ShapeError(in.string() + ": image is " + std::to_string(img.n()) +
                       " wide, geometry expects " + std::to_string(geometry.n));
    }
    const fs::path out = out_dir / (stem_of(in) + ".sino.spct");
    require_new(out);
    save_sinogram(out.string(), forward_project(matrix, img));
    outputs.push_back(out);
  }
  RunManifest manifest("project");
  nlohmann::ordered_json cfg;
  cfg["geometry"] = geometry_json(geometry);
  manifest.set_config(cfg);
  for (const auto& in : inputs) manifest.add_input(in.string());
  for (const auto& out : outputs) manifest.add_output(out.filename().string());
  manifest.write(out_dir / "project.manifest.json");
  return outputs;
}

std::vector<fs::path> cmd_noise(const std::vector<fs::path>& inputs, const fs::path& out_dir,
                                double counts_scale, std::uint64_t seed) {
  NoiseConfig{counts_scale, seed}.validate();
  ensure_dir(out_dir);
  std::vector<fs::path> outputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Sinogram s = load_sinogram(inputs[i].string());
    const fs::path out = out_dir / (stem_of(inputs[i]) + ".noisy.spct");
    require_new(out);
    save_sinogram(out.string(), poissonize(s, {counts_scale, child_seed(seed, i)}));
    outputs.push_back(out);
  }
  RunManifest manifest("noise");
  nlohmann::ordered_json cfg;
  cfg["counts_scale"] = counts_scale;
  cfg["seed"] = seed;
  manifest.set_config(cfg);
  manifest.add_seed("noise", seed);
  for (const auto& in : inputs) manifest.add_input(in.string());
  for (const auto& out : outputs) manifest.add_output(out.filename().string());
  manifest.write(out_dir / "noise.manifest.json");
  return outputs;
}

// ------------------------------------------------------------- evaluation

MetricsReport cmd_eval(const fs::path& reference, const fs::path& test, const SsimConfig& config,
                       const std::string& label) {
  const ActivityImage ref = load_image(reference.string());
  const ActivityImage img = load_image(test.string());
  if (ref.n() != img.n()) {
    throw ShapeError("eval: " + reference.string() + " and " + test.string() + " differ in size");
  }
  MetricsReport r = evaluate_pair(ref, img, config);
  r.method = label;
  r.reference_path = reference.string();
  r.test_path = test.string();
  return r;
}

CompareResult cmd_compare(const fs::path& truth,
                          const std::vector<std::pair<std::string, fs::path>>& methods,
                          const SsimConfig& config, const fs::path& out_json,
                          const fs::path& out_png) {
  if (methods.empty()) throw std::invalid_argument("compare: no reconstructions given");
  std::vector<ActivityImage> images;
  images.push_back(load_image(truth.string()));
  for (const auto& [label, path] : methods) {
    images.push_back(load_image(path.string()));
    if (images.back().n() != images.front().n()) {
      throw ShapeError("compare: " + path.string() + " differs in size from the truth image");
    }
  }

  CompareResult result;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < methods.size(); ++k) {
    MetricsReport r = evaluate_pair(images.front(), images[k + 1], config);
    r.method = methods[k].first;
    r.reference_path = truth.string();
    r.test_path = methods[k].second.string();
    rows.push_back(nlohmann::ordered_json::parse(r.to_json()));
  }
  result.report["truth"] = truth.string();
  result.report["n"] = images.front().n();
  result.report["methods"] = rows;

  RunManifest manifest("compare");
  nlohmann::ordered_json cfg;
  cfg["truth"] = truth.string();
  nlohmann::ordered_json m = nlohmann::ordered_json::array();
  for (const auto& [label, path] : methods) m.push_back({{"label", label}, {"path", path.string()}});
  cfg["methods"] = m;
  cfg["ssim_mode"] = format_ssim_mode(config);
  manifest.set_config(cfg);
  manifest.add_input(truth.string());
  for (const auto& [label, path] : methods) manifest.add_input(path.string());

  if (!out_png.empty()) {
    const Montage mont = build_montage(images);
    if (out_png.has_parent_path()) ensure_dir(out_png.parent_path());
    write_png_gray8(out_png, mont.pixels, mont.width, mont.height);
    result.montage_width = mont.width;
    result.montage_height = mont.height;
    nlohmann::ordered_json png;
    png["path"] = out_png.string();
    png["width"] = mont.width;
    png["height"] = mont.height;
    png["scale_low"] = mont.low;
    png["scale_high"] = mont.high;
    result.report["montage"] = png;
    manifest.config()["montage_scale"] = {{"low", mont.low}, {"high", mont.high}};
    manifest.add_output(out_png.string());
  }
  if (!out_json.empty()) {
    if (out_json.has_parent_path()) ensure_dir(out_json.parent_path());
    write_text_atomic(out_json, result.report.dump(2) + "\n");
    manifest.add_output(out_json.string());
    manifest.write(fs::path(out_json.string() + ".manifest.json"));
  } else if (!out_png.empty()) {
    manifest.write(fs::path(out_png.string() + ".manifest.json"));
  }
  return result;
}

}  // namespace spect::pipeline
