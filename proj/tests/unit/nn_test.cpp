#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "spect/error.hpp"
#include "spect/nn/adam.hpp"
#include "spect/nn/checkpoint.hpp"
#include "spect/nn/cnnr.hpp"
#include "spect/nn/layers.hpp"
#include "spect/nn/ssim_loss.hpp"
#include "spect/nn/trainer.hpp"
#include "spect/noise.hpp"
#include "spect/phantoms.hpp"
#include "spect/projector.hpp"

using namespace spect;
using namespace spect::nn;

namespace {

std::vector<TrainingSample> samples(std::size_t count, std::uint64_t seed) {
  const ScanGeometry g{64, 24, 64, 360.0, 1.0};
  const SystemMatrix p = build_system_matrix(g);
  std::vector<TrainingSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(child_seed(seed, i));
    auto [recipe, img] = random_phantom(rng, 64);
    const Sinogram y = forward_project(p, img);
    out.push_back({poissonize(y, {20.0, child_seed(seed ^ 1, i)}), std::move(img)});
  }
  return out;
}

Tensor<float> random_input(const CnnrModel<float>& model, std::size_t batch, std::uint64_t seed) {
  Shape dims{batch};
  for (auto d : model.input_shape()) dims.push_back(d);
  Tensor<float> x(dims);
  Rng rng(seed);
  for (auto& v : x.values()) v = static_cast<float>(rng.next_unit());
  return x;
}

}  // namespace

TEST(Layers, OutputShapes) {
  Conv2d<double> conv(3, 5, 3);
  EXPECT_EQ(conv.output_shape({3, 8, 6}), (Shape{5, 8, 6}));
  ConvTranspose2d<double> up(4, 2);
  EXPECT_EQ(up.output_shape({4, 3, 5}), (Shape{2, 6, 10}));
  MaxPool2x2<double> pool;
  EXPECT_EQ(pool.output_shape({2, 8, 6}), (Shape{2, 4, 3}));
  Dense<double> dense(12, 7);
  EXPECT_EQ(dense.output_shape({12}), (Shape{7}));
  Reshape<double> rs({3, 2, 2});
  EXPECT_EQ(rs.output_shape({12}), (Shape{3, 2, 2}));
  EXPECT_THROW(rs.output_shape({11}), ShapeError);
}

TEST(Layers, ConvMatchesDirectSum) {
  Conv2d<double> conv(2, 1, 3);
  Rng rng(4);
  for (auto& v : conv.weight().value.values()) v = rng.uniform(-1, 1);
  conv.bias().value[0] = 0.25;
  Tensor<double> x({1, 2, 4, 5});
  for (auto& v : x.values()) v = rng.uniform(-1, 1);
  const Tensor<double> y = conv.forward(x, Mode::kInference);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 5; ++c) {
      double s = 0.25;
      for (std::size_t ci = 0; ci < 2; ++ci)
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = static_cast<int>(r) + dr, cc = static_cast<int>(c) + dc;
            if (rr < 0 || rr >= 4 || cc < 0 || cc >= 5) continue;
            s += conv.weight().value[ci * 9 + (dr + 1) * 3 + (dc + 1)] * x[ci * 20 + rr * 5 + cc];
          }
      EXPECT_NEAR(y[r * 5 + c], s, 1e-12);
    }
}

TEST(Layers, GradientsAgreeWithFiniteDifferences) {
  Rng rng(17);
  auto init = [&](Layer<double>& l) {
    for (auto* p : l.parameters())
      for (auto& v : p->value.values()) v = rng.uniform(-0.5, 0.5);
  };
  Conv2d<double> conv(2, 3, 3);
  init(conv);
  EXPECT_LT(oracle::check_layer_gradients(conv, oracle::separated_tensor({2, 2, 5, 4}, rng), Mode::kTrain, rng).worst(), 1e-4);
  ConvTranspose2d<double> up(3, 2);
  init(up);
  EXPECT_LT(oracle::check_layer_gradients(up, oracle::separated_tensor({2, 3, 3, 2}, rng), Mode::kTrain, rng).worst(), 1e-4);
  Dense<double> dense(6, 4);
  init(dense);
  EXPECT_LT(oracle::check_layer_gradients(dense, oracle::separated_tensor({3, 6}, rng), Mode::kTrain, rng).worst(), 1e-4);
  BatchNorm<double> bn(3);
  init(bn);
  EXPECT_LT(oracle::check_layer_gradients(bn, oracle::separated_tensor({4, 3, 2, 2}, rng), Mode::kTrain, rng).worst(), 1e-4);
  MaxPool2x2<double> pool;
  EXPECT_LT(oracle::check_layer_gradients(pool, oracle::separated_tensor({2, 2, 4, 4}, rng), Mode::kTrain, rng).worst(), 1e-4);
  LeakyRelu<double> act(0.01);
  EXPECT_LT(oracle::check_layer_gradients(act, oracle::separated_tensor({2, 10}, rng), Mode::kTrain, rng).worst(), 1e-4);
  Dropout<double> drop(0.3, 5);
  EXPECT_LT(oracle::check_layer_gradients(drop, oracle::separated_tensor({2, 10}, rng), Mode::kTrain, rng, 1e-5, 40,
                                          [&] { drop.reseed(5); })
                .worst(),
            1e-4);
}

TEST(Layers, DropoutOnlyInTraining) {
  Dropout<double> drop(0.5, 1);
  Tensor<double> x({1, 1000}, 1.0);
  const Tensor<double> inf = drop.forward(x, Mode::kInference);
  for (double v : inf.values()) EXPECT_EQ(v, 1.0);
  const Tensor<double> tr = drop.forward(x, Mode::kTrain);
  std::size_t zeros = 0;
  for (double v : tr.values()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    zeros += v == 0.0;
  }
  EXPECT_NEAR(static_cast<double>(zeros) / 1000.0, 0.5, 0.06);
}

TEST(SsimLoss, GradientAndBounds) {
  Rng rng(8);
  Tensor<double> pred({2, 1, 8, 8}), target({2, 1, 8, 8});
  for (auto& v : pred.values()) v = rng.next_unit();
  for (auto& v : target.values()) v = rng.next_unit();
  SsimConfig cfg;
  cfg.window_size = 4;
  const auto r = ssim_loss(pred, target, cfg);
  EXPECT_GE(r.loss, 0.0);
  EXPECT_LE(r.loss, 2.0);
  std::vector<double> numeric, analytic;
  for (std::size_t i = 0; i < pred.size(); i += 3) {
    const double orig = pred[i];
    pred[i] = orig + 1e-5;
    const double lp = ssim_loss(pred, target, cfg).loss;
    pred[i] = orig - 1e-5;
    const double lm = ssim_loss(pred, target, cfg).loss;
    pred[i] = orig;
    numeric.push_back((lp - lm) / 2e-5);
    analytic.push_back(r.grad[i]);
  }
  EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-4);

  SsimConfig global;
  global.window = SsimWindow::kGlobal;
  const auto rg = ssim_loss(pred, target, global);
  numeric.clear();
  analytic.clear();
  for (std::size_t i = 1; i < pred.size(); i += 5) {
    const double orig = pred[i];
    pred[i] = orig + 1e-5;
    const double lp = ssim_loss(pred, target, global).loss;
    pred[i] = orig - 1e-5;
    const double lm = ssim_loss(pred, target, global).loss;
    pred[i] = orig;
    numeric.push_back((lp - lm) / 2e-5);
    analytic.push_back(rg.grad[i]);
  }
  EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-4);

  const auto same = ssim_loss(target, target, cfg);
  EXPECT_NEAR(same.loss, 0.0, 1e-12);
  for (double g : same.grad.values()) EXPECT_NEAR(g, 0.0, 1e-10);

  Tensor<double> neg(target.dims());
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = 1.0 - target[i];
  const double worst = ssim_loss(neg, target, cfg).loss;
  EXPECT_GT(worst, 1.0);
  EXPECT_LE(worst, 2.0);
  EXPECT_THROW(ssim_loss(pred, Tensor<double>({2, 1, 4, 4}), cfg), ShapeError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0}, g{0.0, 0.0};
  AdamSlot<double> slot;
  for (std::size_t t = 1; t <= 5; ++t) adam_step<double>(p, g, slot, t, {});
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], -2.0);
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  std::vector<double> p{0.0, 0.0}, g{0.3, -4.0};
  AdamSlot<double> slot;
  AdamConfig cfg;
  cfg.learning_rate = 1e-2;
  double prev0 = 0, prev1 = 0;
  for (std::size_t t = 1; t <= 2000; ++t) {
    prev0 = p[0];
    prev1 = p[1];
    adam_step<double>(p, g, slot, t, cfg);
  }
  EXPECT_NEAR(p[0] - prev0, -1e-2, 1e-7);
  EXPECT_NEAR(p[1] - prev1, 1e-2, 1e-7);
  std::vector<double> bad{std::nan("")};
  std::vector<double> q{0.0};
  AdamSlot<double> s2;
  EXPECT_THROW(adam_step<double>(q, bad, s2, 1, cfg), NumericError);
}

TEST(Cnnr, Preset128ShapeTrace) {
  const auto model = CnnrModel<float>::build(ScalePreset::kPaper128, 1);
  const auto trace = model.shape_trace();
  auto first_with = [&](std::size_t from, std::size_t rank) {
    for (std::size_t i = from; i < trace.size(); ++i)
      if (trace[i].size() == rank) return i;
    return trace.size();
  };
  EXPECT_EQ(trace.front(), (Shape{1, 32, 128}));
  EXPECT_EQ(trace.back(), (Shape{1, 128, 128}));
  // encoder widths and pooled extents
  std::vector<Shape> pooled;
  for (std::size_t i = 0; i < model.specs().size(); ++i)
    if (model.specs()[i].kind == LayerKind::kMaxPool2x2) pooled.push_back(trace[i + 1]);
  ASSERT_EQ(pooled.size(), 3u);
  EXPECT_EQ(pooled[0], (Shape{32, 16, 64}));
  EXPECT_EQ(pooled[1], (Shape{64, 8, 32}));
  EXPECT_EQ(pooled[2], (Shape{128, 4, 16}));
  const std::size_t flat = first_with(1, 1);
  EXPECT_EQ(trace[flat], (Shape{16384}));
  EXPECT_EQ(trace[flat + 1], (Shape{4096}));
  std::vector<Shape> ups;
  for (std::size_t i = 0; i < model.specs().size(); ++i)
    if (model.specs()[i].kind == LayerKind::kConvTranspose3x3S2) ups.push_back(trace[i + 1]);
  ASSERT_EQ(ups.size(), 5u);
  EXPECT_EQ(ups[0], (Shape{256, 8, 8}));
  EXPECT_EQ(ups[4][1], 128u);
  const std::size_t reshaped = first_with(flat + 1, 3);
  EXPECT_EQ(trace[reshaped], (Shape{256, 4, 4}));
}

TEST(Cnnr, BuildIsSeeded) {
  auto a = CnnrModel<float>::build(ScalePreset::kDesk64, 3);
  auto b = CnnrModel<float>::build(ScalePreset::kDesk64, 3);
  auto c = CnnrModel<float>::build(ScalePreset::kDesk64, 4);
  EXPECT_EQ(a.parameter_count(), b.parameter_count());
  const auto sa = a.state(), sb = b.state(), sc = c.state();
  bool differs = false;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    ASSERT_EQ(sa[i].name, sb[i].name);
    for (std::size_t k = 0; k < sa[i].tensor->size(); ++k) {
      ASSERT_EQ((*sa[i].tensor)[k], (*sb[i].tensor)[k]);
      differs |= (*sa[i].tensor)[k] != (*sc[i].tensor)[k];
    }
  }
  EXPECT_TRUE(differs);
}

TEST(Cnnr, ZeroHeadGivesZeroImage) {
  auto model = CnnrModel<float>::build(ScalePreset::kDesk64, 2);
  for (auto* p : model.layer(model.num_layers() - 1).parameters()) p->value.fill(0.0f);
  const ActivityImage out = cnnr_forward(model, Sinogram(24, 64));
  EXPECT_EQ(out.n(), 64u);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(Cnnr, InferenceIsDeterministicAndNonnegative) {
  auto model = CnnrModel<float>::build(ScalePreset::kDesk64, 2);
  const auto s = samples(2, 3);
  const ActivityImage a = cnnr_forward(model, s[0].sinogram);
  const ActivityImage b = cnnr_forward(model, s[0].sinogram);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.data()[i], b.data()[i]);
    EXPECT_GE(a.data()[i], 0.0);
  }
  std::vector<Sinogram> sinos{s[0].sinogram, s[1].sinogram};
  const auto batch = cnnr_forward_batch(model, std::span<const Sinogram>(sinos));
  ASSERT_EQ(batch.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(batch[0].data()[i], a.data()[i], 1e-5 * (1 + a.data()[i]));
  EXPECT_THROW(cnnr_forward(model, Sinogram(24, 128)), ShapeError);
}

TEST(Cnnr, CalibratedOutputCarriesSinogramCounts) {
  std::vector<double> raw{-1.0, 1.0, 2.0, 1.0};
  Sinogram y(3, 2, {1, 2, 3, 4, 5, 9});
  const ActivityImage img = calibrate_output(raw, 2, y);
  double sum = 0;
  for (double v : img.data()) sum += v;
  EXPECT_NEAR(sum, 24.0 / 3.0, 1e-12);
  EXPECT_EQ(img.data()[0], 0.0);
  EXPECT_NEAR(img.data()[2], 2 * img.data()[1], 1e-12);
}

TEST(Checkpoint, RoundTripReproducesInference) {
  auto model = CnnrModel<float>::build(ScalePreset::kDesk64, 5);
  model.forward(random_input(model, 4, 1), Mode::kTrain);  // moves batchnorm running stats
  const auto dir = std::filesystem::temp_directory_path() / "spect_unit_ckpt";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "m.spck").string();
  save_checkpoint(path, model);
  auto other = CnnrModel<float>::build(ScalePreset::kDesk64, 99);
  load_checkpoint(path, other);
  const auto x = random_input(model, 2, 7);
  const auto ya = model.forward(x, Mode::kInference);
  const auto yb = other.forward(x, Mode::kInference);
  for (std::size_t i = 0; i < ya.size(); ++i) ASSERT_EQ(ya[i], yb[i]);

  auto bytes = encode_checkpoint(model);
  bytes[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bytes, other), FormatError);
  auto wrong = CnnrModel<float>::build(ScalePreset::kPaper128, 1);
  EXPECT_THROW(decode_checkpoint(encode_checkpoint(model), wrong), Error);
}

TEST(Trainer, FirstEpochReducesLoss) {
  const auto data = samples(96, 11);
  auto model = CnnrModel<float>::build(ScalePreset::kDesk64, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  cfg.seed = 1;
  const TrainHistory h = train(model, std::span<const TrainingSample>(data),
                               std::span<const TrainingSample>(), cfg);
  ASSERT_EQ(h.epochs.size(), 1u);
  EXPECT_LT(h.epochs[0].train_loss, 0.95 * h.initial_loss);
}

TEST(Trainer, RejectsBadConfig) {
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.train_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  const TrainConfig back = TrainConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.batch_size, cfg.batch_size);
  EXPECT_EQ(back.adam.learning_rate, cfg.adam.learning_rate);
  auto model = CnnrModel<float>::build(ScalePreset::kDesk64, 1);
  EXPECT_THROW(train(model, std::span<const TrainingSample>(), cfg), std::invalid_argument);
}
