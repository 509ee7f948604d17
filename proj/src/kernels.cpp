#include "stfm/kernels.hpp"

#include "stfm/error.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stfm::kernels {

namespace {

using Index = Eigen::Index;
using ConstMap = Eigen::Map<const Matrix>;

int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void check_aligned(const Slices& y1, const Slices& y2) {
  if (y1.empty() || y1.size() != y2.size()) {
    throw Error(ErrorKind::InvalidPartition, "both halves need the same, nonzero number of slices");
  }
  if (y1[0].rows() == 0 || y2[0].rows() == 0) {
    throw Error(ErrorKind::InvalidPartition, "partition half is empty");
  }
  for (std::size_t t = 0; t < y1.size(); ++t) {
    if (y1[t].cols() != y2[t].cols() || y1[t].rows() != y1[0].rows() ||
        y2[t].rows() != y2[0].rows()) {
      throw Error(ErrorKind::ShapeError, "slice shapes differ across time or halves");
    }
  }
}

// out = a * b, split into column blocks that run on separate threads. Eigen falls back to a
// single-threaded GEMM inside an active parallel region.
template <typename A, typename B>
Matrix blocked_product(const A& a, const B& b) {
  Matrix out(a.rows(), b.cols());
  const Index cols = b.cols();
  const Index blocks = std::max<Index>(1, std::min<Index>(worker_count(), cols));
  const Index width = (cols + blocks - 1) / std::max<Index>(blocks, 1);
#pragma omp parallel for schedule(static) if (blocks > 1)
  for (Index k = 0; k < blocks; ++k) {
    const Index c0 = k * width;
    const Index w = std::min(width, cols - c0);
    if (w > 0) out.middleCols(c0, w).noalias() = a * b.middleCols(c0, w);
  }
  return out;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Slices take_rows(const Slices& y, std::span<const std::size_t> rows) {
  Slices out;
  out.reserve(y.size());
  for (const auto& slice : y) {
    Matrix part(static_cast<Index>(rows.size()), slice.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      part.row(static_cast<Index>(k)) = slice.row(static_cast<Index>(rows[k]));
    }
    out.push_back(std::move(part));
  }
  return out;
}

Matrix flatten(const Slices& y) {
  if (y.empty()) return Matrix();
  const Index len = y[0].size();
  Matrix flat(len, static_cast<Index>(y.size()));
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < static_cast<Index>(y.size()); ++t) {
    flat.col(t) = Eigen::Map<const Vector>(y[static_cast<std::size_t>(t)].data(), len);
  }
  return flat;
}

Matrix gram(const Matrix& flat) {
  Matrix g = blocked_product(flat.transpose(), flat);
  return symmetrized(g);
}

Matrix cross_row_aggregate(const Slices& y1, const Slices& y2) {
  check_aligned(y1, y2);
  const Index T = static_cast<Index>(y1.size());
  const Index rows = y1[0].rows();
  const Index p = y1[0].cols();

  const Matrix weights = gram(flatten(y2));
  const Matrix flat1 = flatten(y1);
  // Column t' of mixed is vec(sum_t G(t,t') y1[t]).
  const Matrix mixed = blocked_product(flat1, weights);
  // Viewing a (rows*p) x T buffer as rows x (T*p) lines the slices up side by side.
  const ConstMap wide_mixed(mixed.data(), rows, T * p);
  const ConstMap wide_y1(flat1.data(), rows, T * p);
  const Matrix agg = blocked_product(wide_mixed, wide_y1.transpose());
  return symmetrized(agg) / static_cast<double>(T * T);
}

Matrix cross_col_aggregate(const Slices& y1, const Slices& y2) {
  check_aligned(y1, y2);
  const Index T = static_cast<Index>(y1.size());
  const Index rows = y1[0].rows();
  const Index p = y1[0].cols();

  const Matrix weights = gram(flatten(y2));
  const Matrix flat1 = flatten(y1);
  const Matrix mixed = blocked_product(flat1, weights);

  // Stack slices vertically: (T*rows) x p.
  Matrix tall_y1(T * rows, p);
  Matrix tall_mixed(T * rows, p);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < T; ++t) {
    tall_y1.middleRows(t * rows, rows) = ConstMap(flat1.col(t).data(), rows, p);
    tall_mixed.middleRows(t * rows, rows) = ConstMap(mixed.col(t).data(), rows, p);
  }
  const Matrix agg = blocked_product(tall_mixed.transpose(), tall_y1);
  return symmetrized(agg) / static_cast<double>(T * T);
}

Matrix second_moment(const Slices& x) {
  if (x.empty()) throw Error(ErrorKind::ShapeError, "second_moment of an empty stack");
  const Index T = static_cast<Index>(x.size());
  const Index rows = x[0].rows();
  const Index cols = x[0].cols();
  const Matrix flat = flatten(x);
  const ConstMap wide(flat.data(), rows, T * cols);
  return symmetrized(blocked_product(wide, wide.transpose())) / static_cast<double>(T);
}

namespace serial {

Matrix gram(const Slices& y) {
  const auto T = static_cast<Index>(y.size());
  Matrix g(T, T);
  for (Index t = 0; t < T; ++t) {
    for (Index s = 0; s < T; ++s) {
      g(t, s) = y[static_cast<std::size_t>(t)].cwiseProduct(y[static_cast<std::size_t>(s)]).sum();
    }
  }
  return g;
}

Matrix cross_row_aggregate(const Slices& y1, const Slices& y2) {
  check_aligned(y1, y2);
  const std::size_t T = y1.size();
  const Matrix g = gram(y2);
  Matrix agg = Matrix::Zero(y1[0].rows(), y1[0].rows());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < T; ++s) {
      agg += g(static_cast<Index>(t), static_cast<Index>(s)) * y1[t] * y1[s].transpose();
    }
  }
  return symmetrized(agg) / static_cast<double>(T * T);
}

Matrix cross_col_aggregate(const Slices& y1, const Slices& y2) {
  check_aligned(y1, y2);
  const std::size_t T = y1.size();
  const Matrix g = gram(y2);
  Matrix agg = Matrix::Zero(y1[0].cols(), y1[0].cols());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < T; ++s) {
      agg += g(static_cast<Index>(t), static_cast<Index>(s)) * y1[t].transpose() * y1[s];
    }
  }
  return symmetrized(agg) / static_cast<double>(T * T);
}

Matrix second_moment(const Slices& x) {
  if (x.empty()) throw Error(ErrorKind::ShapeError, "second_moment of an empty stack");
  Matrix m = Matrix::Zero(x[0].rows(), x[0].rows());
  for (const auto& slice : x) m += slice * slice.transpose();
  return symmetrized(m) / static_cast<double>(x.size());
}

}  // namespace serial

}  // namespace stfm::kernels
