#pragma once

// Covariance-aggregate kernels behind the loading-space estimators.
//
// For two aligned stacks of slices y1[t], y2[t] (same T and p) the aggregates are
//
//   cross_row_aggregate(y1, y2) = T^-2 sum_{t,t'} <y2[t], y2[t']>_F  y1[t] y1[t']'
//   cross_col_aggregate(y1, y2) = T^-2 sum_{t,t'} <y2[t], y2[t']>_F  y1[t]' y1[t']
//
// which are the Gram-weighted forms of sum_{i,j} Omega_ij Omega_ij' for the row-space and
// column-space cross covariances. The default entry points use blocked GEMMs parallelised with
// OpenMP; namespace `serial` keeps the literal double loop for testing and benchmarking.

#include "stfm/types.hpp"

#include <cstddef>
#include <span>

namespace stfm::kernels {

/// Rows `rows` of every slice, in the given order.
Slices take_rows(const Slices& y, std::span<const std::size_t> rows);

/// Column t holds vec(y[t]) (column-major), so the result is (rows * p) x T.
Matrix flatten(const Slices& y);

/// G(t, t') = <y[t], y[t']>_F from a flattened stack.
Matrix gram(const Matrix& flat);

Matrix cross_row_aggregate(const Slices& y1, const Slices& y2);
Matrix cross_col_aggregate(const Slices& y1, const Slices& y2);

/// (1/T) sum_t x[t] x[t]'.
Matrix second_moment(const Slices& x);

namespace serial {

Matrix gram(const Slices& y);
Matrix cross_row_aggregate(const Slices& y1, const Slices& y2);
Matrix cross_col_aggregate(const Slices& y1, const Slices& y2);
Matrix second_moment(const Slices& x);

}  // namespace serial

}  // namespace stfm::kernels
