#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpgd {

using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int e : shape) n *= e;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Dense row-major float32 tensor. 4-D tensors are laid out batch x channels
/// x rows x cols; lower ranks are plain vectors/scalars. Copies are shallow:
/// a Tensor is a shared handle onto its storage, so passing by value is cheap
/// and keeps autograd references alive. Use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false) : shape_(std::move(shape)) {
    for (int e : shape_) {
      if (e <= 0) throw std::invalid_argument("Tensor: non-positive extent in " + shape_str(shape_));
    }
    data_ = std::make_shared<std::vector<float>>(static_cast<std::size_t>(numel(shape_)), 0.0f);
    if (requires_grad) set_requires_grad(true);
  }

  static Tensor from_data(Shape shape, std::vector<float> values, bool requires_grad = false) {
    Tensor t(std::move(shape), requires_grad);
    if (values.size() != static_cast<std::size_t>(t.size()))
      throw std::invalid_argument("Tensor::from_data: value count does not match shape");
    *t.data_ = std::move(values);
    return t;
  }

  static Tensor full(Shape shape, float value, bool requires_grad = false) {
    Tensor t(std::move(shape), requires_grad);
    std::fill(t.data_->begin(), t.data_->end(), value);
    return t;
  }

  static Tensor scalar(float value, bool requires_grad = false) {
    return full({1}, value, requires_grad);
  }

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::int64_t size() const { return data_ ? static_cast<std::int64_t>(data_->size()) : 0; }

  float* data() { return data_->data(); }
  const float* data() const { return data_->data(); }

  bool requires_grad() const { return static_cast<bool>(grad_); }

  /// Allocates (or drops) the same-shape gradient buffer.
  void set_requires_grad(bool on) {
    if (on && !grad_) grad_ = std::make_shared<std::vector<float>>(data_->size(), 0.0f);
    if (!on) grad_.reset();
  }

  float* grad() { return grad_ ? grad_->data() : nullptr; }
  const float* grad() const { return grad_ ? grad_->data() : nullptr; }

  void zero_grad() {
    if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0f);
  }

  /// Value of a single-element tensor.
  float value() const {
    if (size() != 1) throw std::invalid_argument("Tensor::value: tensor is not scalar, shape " + shape_str(shape_));
    return (*data_)[0];
  }

  float& at(std::int64_t i) { return (*data_)[static_cast<std::size_t>(i)]; }
  float at(std::int64_t i) const { return (*data_)[static_cast<std::size_t>(i)]; }

  std::int64_t offset4(int b, int c, int h, int w) const {
    return ((static_cast<std::int64_t>(b) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }
  float& at4(int b, int c, int h, int w) { return (*data_)[static_cast<std::size_t>(offset4(b, c, h, w))]; }
  float at4(int b, int c, int h, int w) const { return (*data_)[static_cast<std::size_t>(offset4(b, c, h, w))]; }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.data_ = std::make_shared<std::vector<float>>(*data_);
    if (grad_) t.grad_ = std::make_shared<std::vector<float>>(*grad_);
    return t;
  }

  /// True iff both handles point at the same storage.
  bool same_storage(const Tensor& other) const { return data_ == other.data_; }

  const std::vector<float>& vec() const { return *data_; }
  std::vector<float>& vec() { return *data_; }

 private:
  Shape shape_;
  std::shared_ptr<std::vector<float>> data_;
  std::shared_ptr<std::vector<float>> grad_;
};

inline bool all_finite(const Tensor& t) {
  const float* p = t.data();
  for (std::int64_t i = 0, n = t.size(); i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

inline void require_shape(const Tensor& t, const Shape& want, const char* who) {
  if (t.shape() != want)
    throw std::invalid_argument(std::string(who) + ": expected shape " + shape_str(want) + ", got " + shape_str(t.shape()));
}

}  // namespace lpgd

// Forward outputs are scanned for non-finite values in debug builds only.
#ifndef NDEBUG
#define LPGD_DCHECK_FINITE(t, opname)                                                   \
  do {                                                                                  \
    if (!::lpgd::all_finite(t)) throw std::runtime_error(std::string(opname) + ": non-finite value in output"); \
  } while (0)
#else
#define LPGD_DCHECK_FINITE(t, opname) \
  do {                                \
  } while (0)
#endif
