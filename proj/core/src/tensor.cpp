#include "kprune/tensor.hpp"

#include <cmath>
#include <sstream>

#include "kprune/errors.hpp"

namespace kprune {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
  for (std::size_t d : shape_) {
    if (d == 0) throw DimensionError("tensor shape " + shape_str(shape_) + " has a zero extent");
  }
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_str(shape_));
  }
  for (std::size_t d : shape_) {
    if (d == 0) throw DimensionError("tensor shape " + shape_str(shape_) + " has a zero extent");
  }
}

Tensor Tensor::from(Shape shape, std::initializer_list<float> values) {
  return Tensor(std::move(shape), std::vector<float>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape_));
  }
  return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::select(std::size_t axis, std::span<const std::size_t> keep) const {
  const std::size_t extent = dim(axis);
  if (keep.empty()) throw DimensionError("select would empty axis " + std::to_string(axis));
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape_[i];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < shape_.size(); ++i) inner *= shape_[i];

  Shape out_shape = shape_;
  out_shape[axis] = keep.size();
  std::vector<float> out;
  out.reserve(outer * keep.size() * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k : keep) {
      if (k >= extent) {
        throw DimensionError("select index " + std::to_string(k) + " out of range on axis " +
                             std::to_string(axis));
      }
      const float* src = data_.data() + (o * extent + k) * inner;
      out.insert(out.end(), src, src + inner);
    }
  }
  return Tensor(std::move(out_shape), std::move(out));
}

bool Tensor::all_finite() const noexcept {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace kprune
