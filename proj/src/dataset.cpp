#include "crpslab/dataset.hpp"

#include <cmath>

#include "crpslab/errors.hpp"

namespace crpslab {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw InputError("matrix storage size does not match its shape");
  }
}

void Matrix::append_row(std::span<const double> r) {
  if (rows_ == 0 && cols_ == 0) cols_ = r.size();
  if (r.size() != cols_) throw InputError("row length does not match matrix width");
  values_.insert(values_.end(), r.begin(), r.end());
  ++rows_;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.feature_names = feature_names;
  out.target_name = target_name;
  out.source = source;
  std::vector<double> values;
  values.reserve(indices.size() * dim());
  out.y.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw InputError("subset index out of range");
    const auto r = x.row(i);
    values.insert(values.end(), r.begin(), r.end());
    out.y.push_back(y[i]);
  }
  out.x = Matrix(indices.size(), dim(), std::move(values));
  return out;
}

void Dataset::validate() const {
  if (x.rows() != y.size()) throw InputError("covariate rows and responses differ in length");
  for (double v : x.values()) {
    if (!std::isfinite(v)) throw InputError("non-finite covariate value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw InputError("non-finite response value");
  }
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim()) throw InputError("cannot concatenate datasets of different dimension");
  Dataset out = a;
  for (std::size_t i = 0; i < b.size(); ++i) {
    out.x.append_row(b.x.row(i));
    out.y.push_back(b.y[i]);
  }
  return out;
}

}  // namespace crpslab
