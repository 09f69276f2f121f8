#ifndef OTA_MATRIX_HPP
#define OTA_MATRIX_HPP

#include <cassert>
#include <complex>
#include <cstddef>
#include <vector>

namespace ota {

using cplx = std::complex<double>;

// Dense column-major complex matrix. Columns are the natural unit in this
// problem: column i of a precoding matrix is sender i's coefficients across
// slots, column j of a decoding matrix is receiver j's.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(int rows, int cols)
      : rows_(rows),
        cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    assert(rows >= 0 && cols >= 0);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  cplx& operator()(int r, int c) { return data_[index(r, c)]; }
  const cplx& operator()(int r, int c) const { return data_[index(r, c)]; }

  cplx* col(int c) { return data_.data() + index(0, c); }
  const cplx* col(int c) const { return data_.data() + index(0, c); }

  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }

  void set_zero() { data_.assign(data_.size(), cplx{}); }

  bool same_shape(const CMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const CMatrix& other) const = default;

 private:
  std::size_t index(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(rows_) +
           static_cast<std::size_t>(r);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<cplx> data_;
};

}  // namespace ota

#endif
