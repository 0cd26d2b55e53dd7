#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spect::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

/// Dense row-major array. Batched activations use N x C x H x W or N x F.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape dims, T fill = T{0});
  Tensor(Shape dims, std::vector<T> values);

  const Shape& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }
  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Same element count required; throws ShapeError otherwise.
  void reshape(Shape dims);
  void fill(T value);
  bool all_finite() const noexcept;

 private:
  Shape dims_;
  std::vector<T> values_;
};

/// Trainable tensor and its gradient. The gradient is allocated on first use.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  void zero_grad();
  Tensor<T>& ensure_grad();
};

/// kCalibrate: batch statistics without dropout; batchnorm layers accumulate
/// population statistics between begin_calibration() and end_calibration().
enum class Mode { kTrain, kInference, kCalibrate };

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template struct Parameter<float>;
extern template struct Parameter<double>;

}  // namespace spect::nn
