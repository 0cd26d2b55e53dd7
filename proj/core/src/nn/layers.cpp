#include "spect/nn/layers.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

#include "spect/error.hpp"

namespace spect::nn {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;
template <typename T>
using CVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using Vec = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void require_nchw(const Shape& d, std::size_t channels, const char* layer) {
  require(d.size() == 4 && d[0] > 0, std::string(layer) + ": expected a non-empty N x C x H x W batch");
  require(d[1] == channels, std::string(layer) + ": expected " + std::to_string(channels) +
                                " input channels, got " + std::to_string(d[1]));
}

// Rows indexed (c, ki, kj), columns (h, w); same padding for odd k.
template <typename T>
void im2col(const T* x, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            T* col) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* xc = x + c * hw;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        T* row = col + ((c * k + ki) * k + kj) * hw;
        const std::ptrdiff_t di = static_cast<std::ptrdiff_t>(ki) - pad;
        const std::ptrdiff_t dj = static_cast<std::ptrdiff_t>(kj) - pad;
        for (std::size_t i = 0; i < h; ++i) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i) + di;
          T* out = row + i * w;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(out, out + w, T{0});
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(si) * w;
          for (std::size_t j = 0; j < w; ++j) {
            const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j) + dj;
            out[j] = (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) ? T{0} : src[sj];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
                T* x) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    T* xc = x + c * hw;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const T* row = col + ((c * k + ki) * k + kj) * hw;
        const std::ptrdiff_t di = static_cast<std::ptrdiff_t>(ki) - pad;
        const std::ptrdiff_t dj = static_cast<std::ptrdiff_t>(kj) - pad;
        for (std::size_t i = 0; i < h; ++i) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i) + di;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
          T* dst = xc + static_cast<std::size_t>(si) * w;
          const T* in = row + i * w;
          for (std::size_t j = 0; j < w; ++j) {
            const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j) + dj;
            if (sj >= 0 && sj < static_cast<std::ptrdiff_t>(w)) dst[sj] += in[j];
          }
        }
      }
    }
  }
}

}  // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv3x3: return "conv3x3";
    case LayerKind::kConvTranspose3x3S2: return "conv_transpose3x3_s2";
    case LayerKind::kConv1x1: return "conv1x1";
    case LayerKind::kMaxPool2x2: return "maxpool2x2";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kLeakyRelu: return "leaky_relu";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kDense: return "dense";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kReshape: return "reshape";
  }
  return "unknown";
}

std::string LayerSpec::to_string() const {
  std::ostringstream os;
  os << spect::nn::to_string(kind);
  switch (kind) {
    case LayerKind::kConv3x3:
    case LayerKind::kConvTranspose3x3S2:
    case LayerKind::kConv1x1:
    case LayerKind::kDense:
      os << '(' << in_channels << "->" << out_channels << ')';
      break;
    case LayerKind::kBatchNorm:
      os << '(' << in_channels << ')';
      break;
    case LayerKind::kDropout:
    case LayerKind::kLeakyRelu:
      os << '(' << rate << ')';
      break;
    case LayerKind::kReshape:
      os << '(' << shape_to_string(reshape) << ')';
      break;
    default:
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : in_(in_channels), out_(out_channels), k_(kernel) {
  if (kernel != 1 && kernel != 3) throw std::invalid_argument("Conv2d: kernel must be 1 or 3");
  weight_.name = "weight";
  weight_.value = Tensor<T>({out_, in_, k_, k_});
  bias_.name = "bias";
  bias_.value = Tensor<T>({out_});
}

template <typename T>
LayerSpec Conv2d<T>::spec() const {
  return {k_ == 3 ? LayerKind::kConv3x3 : LayerKind::kConv1x1, in_, out_};
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
  require(in.size() == 3 && in[0] == in_, "Conv2d: bad input shape " + shape_to_string(in));
  return {out_, in[1], in[2]};
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, Mode) {
  require_nchw(x.dims(), in_, "Conv2d");
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3), hw = h * w;
  const std::size_t kk = in_ * k_ * k_;
  Tensor<T> y({n, out_, h, w});
  CMapR<T> wm(weight_.value.data(), out_, kk);
  CVec<T> b(bias_.value.data(), out_);
  MatR<T> col(kk, hw);
  for (std::size_t s = 0; s < n; ++s) {
    const T* xs = x.data() + s * in_ * hw;
    MapR<T> ys(y.data() + s * out_ * hw, out_, hw);
    if (k_ == 1) {
      ys.noalias() = wm * CMapR<T>(xs, in_, hw);
    } else {
      im2col(xs, in_, h, w, k_, col.data());
      ys.noalias() = wm * col;
    }
    ys.colwise() += b;
  }
  input_ = x;
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
  const std::size_t n = input_.dim(0), h = input_.dim(2), w = input_.dim(3), hw = h * w;
  require(grad_out.dims() == Shape({n, out_, h, w}), "Conv2d::backward: gradient shape mismatch");
  const std::size_t kk = in_ * k_ * k_;
  Tensor<T> grad_in(input_.dims());
  CMapR<T> wm(weight_.value.data(), out_, kk);
  MapR<T> dw(weight_.ensure_grad().data(), out_, kk);
  T* db = bias_.ensure_grad().data();
  MatR<T> col(kk, hw);
  MatR<T> dcol(kk, hw);
  for (std::size_t s = 0; s < n; ++s) {
    const T* xs = input_.data() + s * in_ * hw;
    CMapR<T> gs(grad_out.data() + s * out_ * hw, out_, hw);
    for (std::size_t o = 0; o < out_; ++o) {
      const T* go = grad_out.data() + (s * out_ + o) * hw;
      double acc = 0.0;
      for (std::size_t p = 0; p < hw; ++p) acc += go[p];
      db[o] += static_cast<T>(acc);
    }
    if (k_ == 1) {
      dw.noalias() += gs * CMapR<T>(xs, in_, hw).transpose();
      MapR<T>(grad_in.data() + s * in_ * hw, in_, hw).noalias() = wm.transpose() * gs;
    } else {
      im2col(xs, in_, h, w, k_, col.data());
      dw.noalias() += gs * col.transpose();
      dcol.noalias() = wm.transpose() * gs;
      col2im_add(dcol.data(), in_, h, w, k_, grad_in.data() + s * in_ * hw);
    }
  }
  return grad_in;
}

// ------------------------------------------------------- ConvTranspose2d

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(std::size_t in_channels, std::size_t out_channels)
    : in_(in_channels), out_(out_channels) {
  weight_.name = "weight";
  weight_.value = Tensor<T>({in_, out_, 3, 3});
  bias_.name = "bias";
  bias_.value = Tensor<T>({out_});
}

template <typename T>
LayerSpec ConvTranspose2d<T>::spec() const {
  return {LayerKind::kConvTranspose3x3S2, in_, out_};
}

template <typename T>
Shape ConvTranspose2d<T>::output_shape(const Shape& in) const {
  require(in.size() == 3 && in[0] == in_, "ConvTranspose2d: bad input shape " + shape_to_string(in));
  return {out_, 2 * in[1], 2 * in[2]};
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x, Mode) {
  require_nchw(x.dims(), in_, "ConvTranspose2d");
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3), hw = h * w;
  const std::size_t oh = 2 * h, ow = 2 * w, ohw = oh * ow;
  Tensor<T> y({n, out_, oh, ow});
  CMapR<T> wm(weight_.value.data(), in_, out_ * 9);
  MatR<T> cols(out_ * 9, hw);
  for (std::size_t s = 0; s < n; ++s) {
    cols.noalias() = wm.transpose() * CMapR<T>(x.data() + s * in_ * hw, in_, hw);
    T* ys = y.data() + s * out_ * ohw;
    for (std::size_t o = 0; o < out_; ++o) {
      T* yo = ys + o * ohw;
      std::fill(yo, yo + ohw, bias_.value[o]);
      for (std::size_t ki = 0; ki < 3; ++ki) {
        for (std::size_t kj = 0; kj < 3; ++kj) {
          const T* row = cols.data() + ((o * 3 + ki) * 3 + kj) * hw;
          for (std::size_t i = 0; i < h; ++i) {
            const std::ptrdiff_t yi = 2 * static_cast<std::ptrdiff_t>(i) - 1 + static_cast<std::ptrdiff_t>(ki);
            if (yi < 0 || yi >= static_cast<std::ptrdiff_t>(oh)) continue;
            T* dst = yo + static_cast<std::size_t>(yi) * ow;
            for (std::size_t j = 0; j < w; ++j) {
              const std::ptrdiff_t yj = 2 * static_cast<std::ptrdiff_t>(j) - 1 + static_cast<std::ptrdiff_t>(kj);
              if (yj >= 0 && yj < static_cast<std::ptrdiff_t>(ow)) dst[yj] += row[i * w + j];
            }
          }
        }
      }
    }
  }
  input_ = x;
  return y;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::backward(const Tensor<T>& grad_out) {
  const std::size_t n = input_.dim(0), h = input_.dim(2), w = input_.dim(3), hw = h * w;
  const std::size_t oh = 2 * h, ow = 2 * w, ohw = oh * ow;
  require(grad_out.dims() == Shape({n, out_, oh, ow}),
          "ConvTranspose2d::backward: gradient shape mismatch");
  Tensor<T> grad_in(input_.dims());
  CMapR<T> wm(weight_.value.data(), in_, out_ * 9);
  MapR<T> dw(weight_.ensure_grad().data(), in_, out_ * 9);
  T* db = bias_.ensure_grad().data();
  MatR<T> dcols(out_ * 9, hw);
  for (std::size_t s = 0; s < n; ++s) {
    const T* gs = grad_out.data() + s * out_ * ohw;
    for (std::size_t o = 0; o < out_; ++o) {
      const T* go = gs + o * ohw;
      double acc = 0.0;
      for (std::size_t p = 0; p < ohw; ++p) acc += go[p];
      db[o] += static_cast<T>(acc);
      for (std::size_t ki = 0; ki < 3; ++ki) {
        for (std::size_t kj = 0; kj < 3; ++kj) {
          T* row = dcols.data() + ((o * 3 + ki) * 3 + kj) * hw;
          for (std::size_t i = 0; i < h; ++i) {
            const std::ptrdiff_t yi = 2 * static_cast<std::ptrdiff_t>(i) - 1 + static_cast<std::ptrdiff_t>(ki);
            for (std::size_t j = 0; j < w; ++j) {
              const std::ptrdiff_t yj = 2 * static_cast<std::ptrdiff_t>(j) - 1 + static_cast<std::ptrdiff_t>(kj);
              const bool inside = yi >= 0 && yi < static_cast<std::ptrdiff_t>(oh) && yj >= 0 &&
                                  yj < static_cast<std::ptrdiff_t>(ow);
              row[i * w + j] = inside ? go[static_cast<std::size_t>(yi) * ow + static_cast<std::size_t>(yj)] : T{0};
            }
          }
        }
      }
    }
    CMapR<T> xs(input_.data() + s * in_ * hw, in_, hw);
    dw.noalias() += xs * dcols.transpose();
    MapR<T>(grad_in.data() + s * in_ * hw, in_, hw).noalias() = wm * dcols;
  }
  return grad_in;
}

// ------------------------------------------------------------ MaxPool2x2

template <typename T>
Shape MaxPool2x2<T>::output_shape(const Shape& in) const {
  require(in.size() == 3, "MaxPool2x2: bad input shape " + shape_to_string(in));
  return {in[0], (in[1] + 1) / 2, (in[2] + 1) / 2};
}

template <typename T>
Tensor<T> MaxPool2x2<T>::forward(const Tensor<T>& x, Mode) {
  require(x.rank() == 4 && x.size() > 0, "MaxPool2x2: expected a non-empty N x C x H x W batch");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
  Tensor<T> y({n, c, oh, ow});
  argmax_.assign(y.size(), 0);
  std::size_t out = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j, ++out) {
        // Odd edges reuse the last row/column, equivalent to replication padding.
        std::size_t best = base + (2 * i) * w + 2 * j;
        for (std::size_t di = 0; di < 2; ++di) {
          const std::size_t r = std::min(2 * i + di, h - 1);
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const std::size_t col = std::min(2 * j + dj, w - 1);
            const std::size_t idx = base + r * w + col;
            if (x[idx] > x[best]) best = idx;
          }
        }
        argmax_[out] = best;
        y[out] = x[best];
      }
    }
  }
  input_dims_ = x.dims();
  return y;
}

template <typename T>
Tensor<T> MaxPool2x2<T>::backward(const Tensor<T>& grad_out) {
  require(grad_out.size() == argmax_.size(), "MaxPool2x2::backward: gradient shape mismatch");
  Tensor<T> grad_in(input_dims_);
  for (std::size_t k = 0; k < argmax_.size(); ++k) grad_in[argmax_[k]] += grad_out[k];
  return grad_in;
}

// ------------------------------------------------------------- BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t channels, double eps, double momentum)
    : channels_(channels), eps_(eps), momentum_(momentum) {
  gamma_.name = "gamma";
  gamma_.value = Tensor<T>({channels_}, T{1});
  beta_.name = "beta";
  beta_.value = Tensor<T>({channels_}, T{0});
  running_mean_ = Tensor<T>({channels_}, T{0});
  running_var_ = Tensor<T>({channels_}, T{1});
}

template <typename T>
LayerSpec BatchNorm<T>::spec() const {
  return {LayerKind::kBatchNorm, channels_, channels_};
}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, Mode mode) {
  require((x.rank() == 2 || x.rank() == 4) && x.dim(1) == channels_,
          "BatchNorm: expected N x " + std::to_string(channels_) + " [x H x W], got " +
              shape_to_string(x.dims()));
  const std::size_t n = x.dim(0);
  if (n == 0) throw std::invalid_argument("BatchNorm: empty batch");
  const std::size_t spatial = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  const double count = static_cast<double>(n * spatial);
  Tensor<T> y(x.dims());
  xhat_.resize(x.size());
  inv_std_.assign(channels_, 0.0);
  for (std::size_t c = 0; c < channels_; ++c) {
    double mean, var;
    if (mode != Mode::kInference) {
      double acc = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        const T* p = x.data() + (s * channels_ + c) * spatial;
        for (std::size_t k = 0; k < spatial; ++k) acc += p[k];
      }
      mean = acc / count;
      double sq = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        const T* p = x.data() + (s * channels_ + c) * spatial;
        for (std::size_t k = 0; k < spatial; ++k) {
          const double d = p[k] - mean;
          sq += d * d;
        }
      }
      var = sq / count;
      if (mode == Mode::kTrain) {
        running_mean_[c] = static_cast<T>(momentum_ * running_mean_[c] + (1.0 - momentum_) * mean);
        running_var_[c] = static_cast<T>(momentum_ * running_var_[c] + (1.0 - momentum_) * var);
      } else if (!calib_mean_.empty()) {
        calib_mean_[c] += static_cast<double>(n) * mean;
        calib_var_[c] += static_cast<double>(n) * var;
      }
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv_std;
    const double g = gamma_.value[c];
    const double b = beta_.value[c];
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t off = (s * channels_ + c) * spatial;
      for (std::size_t k = 0; k < spatial; ++k) {
        const double xh = (x[off + k] - mean) * inv_std;
        xhat_[off + k] = static_cast<T>(xh);
        y[off + k] = static_cast<T>(g * xh + b);
      }
    }
  }
  if (mode == Mode::kCalibrate && !calib_mean_.empty()) calib_weight_ += static_cast<double>(n);
  mode_ = mode;
  dims_ = x.dims();
  return y;
}

template <typename T>
void BatchNorm<T>::begin_calibration() {
  calib_mean_.assign(channels_, 0.0);
  calib_var_.assign(channels_, 0.0);
  calib_weight_ = 0.0;
}

template <typename T>
void BatchNorm<T>::end_calibration() {
  if (calib_weight_ > 0.0) {
    for (std::size_t c = 0; c < channels_; ++c) {
      running_mean_[c] = static_cast<T>(calib_mean_[c] / calib_weight_);
      running_var_[c] = static_cast<T>(calib_var_[c] / calib_weight_);
    }
  }
  calib_mean_.clear();
  calib_var_.clear();
  calib_weight_ = 0.0;
}

template <typename T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& grad_out) {
  require(grad_out.dims() == dims_, "BatchNorm::backward: gradient shape mismatch");
  const std::size_t n = dims_[0];
  const std::size_t spatial = dims_.size() == 4 ? dims_[2] * dims_[3] : 1;
  const double count = static_cast<double>(n * spatial);
  Tensor<T> grad_in(dims_);
  T* dgamma = gamma_.ensure_grad().data();
  T* dbeta = beta_.ensure_grad().data();
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t off = (s * channels_ + c) * spatial;
      for (std::size_t k = 0; k < spatial; ++k) {
        sum_dy += grad_out[off + k];
        sum_dy_xhat += static_cast<double>(grad_out[off + k]) * xhat_[off + k];
      }
    }
    dgamma[c] += static_cast<T>(sum_dy_xhat);
    dbeta[c] += static_cast<T>(sum_dy);
    const double g = gamma_.value[c];
    const double scale = g * inv_std_[c];
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t off = (s * channels_ + c) * spatial;
      for (std::size_t k = 0; k < spatial; ++k) {
        if (mode_ != Mode::kInference) {
          grad_in[off + k] = static_cast<T>(
              scale / count * (count * grad_out[off + k] - sum_dy - xhat_[off + k] * sum_dy_xhat));
        } else {
          grad_in[off + k] = static_cast<T>(scale * grad_out[off + k]);
        }
      }
    }
  }
  return grad_in;
}

// ------------------------------------------------------------- LeakyRelu

template <typename T>
Tensor<T> LeakyRelu<T>::forward(const Tensor<T>& x, Mode) {
  Tensor<T> y(x.dims());
  const T a = static_cast<T>(alpha_);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] >= T{0} ? x[i] : a * x[i];
  input_ = x;
  return y;
}

template <typename T>
Tensor<T> LeakyRelu<T>::backward(const Tensor<T>& grad_out) {
  require(grad_out.dims() == input_.dims(), "LeakyRelu::backward: gradient shape mismatch");
  Tensor<T> g(grad_out.dims());
  const T a = static_cast<T>(alpha_);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = input_[i] >= T{0} ? grad_out[i] : a * grad_out[i];
  return g;
}

// --------------------------------------------------------------- Dropout

template <typename T>
Dropout<T>::Dropout(double p, std::uint64_t seed) : p_(p), rng_(seed) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("Dropout: p must lie in [0, 1)");
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& x, Mode mode) {
  masked_ = mode == Mode::kTrain && p_ > 0.0;
  if (!masked_) return x;
  const T keep = static_cast<T>(1.0 / (1.0 - p_));
  mask_.resize(x.size());
  Tensor<T> y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = rng_.next_unit() < p_ ? T{0} : keep;
    y[i] = x[i] * mask_[i];
  }
  return y;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_out) {
  if (!masked_) return grad_out;
  require(grad_out.size() == mask_.size(), "Dropout::backward: gradient shape mismatch");
  Tensor<T> g(grad_out.dims());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * mask_[i];
  return g;
}

// ----------------------------------------------------------------- Dense

template <typename T>
Dense<T>::Dense(std::size_t in_features, std::size_t out_features)
    : in_(in_features), out_(out_features) {
  weight_.name = "weight";
  weight_.value = Tensor<T>({out_, in_});
  bias_.name = "bias";
  bias_.value = Tensor<T>({out_});
}

template <typename T>
LayerSpec Dense<T>::spec() const {
  return {LayerKind::kDense, in_, out_};
}

template <typename T>
Shape Dense<T>::output_shape(const Shape& in) const {
  require(in.size() == 1 && in[0] == in_, "Dense: bad input shape " + shape_to_string(in));
  return {out_};
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x, Mode) {
  require(x.rank() == 2 && x.dim(1) == in_ && x.dim(0) > 0,
          "Dense: expected N x " + std::to_string(in_) + ", got " + shape_to_string(x.dims()));
  const std::size_t n = x.dim(0);
  Tensor<T> y({n, out_});
  MapR<T> ym(y.data(), n, out_);
  ym.noalias() = CMapR<T>(x.data(), n, in_) * CMapR<T>(weight_.value.data(), out_, in_).transpose();
  ym.rowwise() += CVec<T>(bias_.value.data(), out_).transpose();
  input_ = x;
  return y;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_out) {
  const std::size_t n = input_.dim(0);
  require(grad_out.dims() == Shape({n, out_}), "Dense::backward: gradient shape mismatch");
  CMapR<T> g(grad_out.data(), n, out_);
  CMapR<T> x(input_.data(), n, in_);
  MapR<T>(weight_.ensure_grad().data(), out_, in_).noalias() += g.transpose() * x;
  T* db = bias_.ensure_grad().data();
  for (std::size_t o = 0; o < out_; ++o) {
    double acc = 0.0;
    for (std::size_t s = 0; s < n; ++s) acc += grad_out[s * out_ + o];
    db[o] += static_cast<T>(acc);
  }
  Tensor<T> grad_in({n, in_});
  MapR<T>(grad_in.data(), n, in_).noalias() = g * CMapR<T>(weight_.value.data(), out_, in_);
  return grad_in;
}

// ------------------------------------------------------ Flatten / Reshape

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& x, Mode) {
  require(x.rank() >= 2, "Flatten: expected a batched tensor");
  input_dims_ = x.dims();
  Tensor<T> y = x;
  y.reshape({x.dim(0), x.size() / x.dim(0)});
  return y;
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  g.reshape(input_dims_);
  return g;
}

template <typename T>
LayerSpec Reshape<T>::spec() const {
  LayerSpec s{LayerKind::kReshape};
  s.reshape = target_;
  return s;
}

template <typename T>
Shape Reshape<T>::output_shape(const Shape& in) const {
  require(shape_size(in) == shape_size(target_), "Reshape: element count mismatch");
  return target_;
}

template <typename T>
Tensor<T> Reshape<T>::forward(const Tensor<T>& x, Mode) {
  require(x.rank() >= 1 && x.dim(0) > 0, "Reshape: expected a batched tensor");
  input_dims_ = x.dims();
  Shape dims{x.dim(0)};
  dims.insert(dims.end(), target_.begin(), target_.end());
  Tensor<T> y = x;
  y.reshape(std::move(dims));
  return y;
}

template <typename T>
Tensor<T> Reshape<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  g.reshape(input_dims_);
  return g;
}

// ------------------------------------------------------------- factories

template <typename T>
void he_normal(Tensor<T>& weight, std::size_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < weight.size(); ++i) weight[i] = static_cast<T>(stddev * rng.normal());
}

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case LayerKind::kConv3x3:
      return std::make_unique<Conv2d<T>>(spec.in_channels, spec.out_channels, 3);
    case LayerKind::kConv1x1:
      return std::make_unique<Conv2d<T>>(spec.in_channels, spec.out_channels, 1);
    case LayerKind::kConvTranspose3x3S2:
      return std::make_unique<ConvTranspose2d<T>>(spec.in_channels, spec.out_channels);
    case LayerKind::kMaxPool2x2:
      return std::make_unique<MaxPool2x2<T>>();
    case LayerKind::kBatchNorm:
      return std::make_unique<BatchNorm<T>>(spec.in_channels);
    case LayerKind::kLeakyRelu:
      return std::make_unique<LeakyRelu<T>>(spec.rate);
    case LayerKind::kDropout:
      return std::make_unique<Dropout<T>>(spec.rate, seed);
    case LayerKind::kDense:
      return std::make_unique<Dense<T>>(spec.in_channels, spec.out_channels);
    case LayerKind::kFlatten:
      return std::make_unique<Flatten<T>>();
    case LayerKind::kReshape:
      return std::make_unique<Reshape<T>>(spec.reshape);
  }
  throw std::invalid_argument("make_layer: unknown layer kind");
}

#define SPECT_INSTANTIATE_LAYERS(T)                                            \
  template class Conv2d<T>;                                                    \
  template class ConvTranspose2d<T>;                                           \
  template class MaxPool2x2<T>;                                                \
  template class BatchNorm<T>;                                                 \
  template class LeakyRelu<T>;                                                 \
  template class Dropout<T>;                                                   \
  template class Dense<T>;                                                     \
  template class Flatten<T>;                                                   \
  template class Reshape<T>;                                                   \
  template void he_normal<T>(Tensor<T>&, std::size_t, Rng&);                   \
  template std::unique_ptr<Layer<T>> make_layer<T>(const LayerSpec&, std::uint64_t);

SPECT_INSTANTIATE_LAYERS(float)
SPECT_INSTANTIATE_LAYERS(double)

#undef SPECT_INSTANTIATE_LAYERS

}  // namespace spect::nn
