#include "ldcvae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ldcvae/errors.hpp"

namespace ldc {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size()) {
    throw DimensionError("tensor: shape " + shape_str(shape_) + " does not hold " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(Shape{n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor(Shape{rows, cols}, std::move(data));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("tensor: ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 1;
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() < 2) return 1;
  return shape_[1];
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<double>(data_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

double Tensor::item() const {
  if (data_.size() != 1) throw DimensionError("tensor: item() on " + shape_str(shape_));
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::rows_at(std::span<const std::size_t> indices) const {
  require_matrix(*this, "rows_at");
  const std::size_t c = cols();
  Tensor out(Shape{indices.size(), c});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= rows()) throw DimensionError("rows_at: index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[k] * c), c,
                out.data_.begin() + static_cast<std::ptrdiff_t>(k * c));
  }
  return out;
}

Tensor Tensor::rows_range(std::size_t begin, std::size_t end) const {
  require_matrix(*this, "rows_range");
  if (begin > end || end > rows()) throw DimensionError("rows_range: bad range");
  const std::size_t c = cols();
  return Tensor(Shape{end - begin, c},
                std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(begin * c),
                                    data_.begin() + static_cast<std::ptrdiff_t>(end * c)));
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.shape(), 0.0); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + ": expected a matrix, got " + shape_str(t.shape()));
  }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace ldc
