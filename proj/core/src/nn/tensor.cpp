#include "spect/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spect/error.hpp"

namespace spect::nn {

std::size_t shape_size(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape dims, T fill) : dims_(std::move(dims)), values_(shape_size(dims_), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape dims, std::vector<T> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  if (values_.size() != shape_size(dims_)) {
    throw ShapeError("Tensor: " + std::to_string(values_.size()) + " values for shape " +
                     shape_to_string(dims_));
  }
}

template <typename T>
void Tensor<T>::reshape(Shape dims) {
  if (shape_size(dims) != values_.size()) {
    throw ShapeError("Tensor::reshape: cannot view " + shape_to_string(dims_) + " as " +
                     shape_to_string(dims));
  }
  dims_ = std::move(dims);
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(values_.begin(), values_.end(), value);
}

template <typename T>
bool Tensor<T>::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
void Parameter<T>::zero_grad() {
  ensure_grad().fill(T{0});
}

template <typename T>
Tensor<T>& Parameter<T>::ensure_grad() {
  if (grad.dims() != value.dims()) grad = Tensor<T>(value.dims());
  return grad;
}

template class Tensor<float>;
template class Tensor<double>;
template struct Parameter<float>;
template struct Parameter<double>;

}  // namespace spect::nn
