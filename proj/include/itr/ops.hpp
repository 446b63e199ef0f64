#pragma once

#include "itr/tape.hpp"

#include <cstddef>
#include <span>
#include <vector>

// Differentiable primitives. Every function records one node (or a short,
// fixed chain of nodes) on the tape that owns its inputs.
//
// Axis convention follows numpy: axis 0 runs down the rows (one result per
// column), axis 1 runs across the columns (one result per row).
namespace itr {

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b);

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& a);

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b);

template <typename Scalar>
Var<Scalar> hadamard(const Var<Scalar>& a, const Var<Scalar>& b);

// x (r x c) plus column vector v (r x 1) added to every column.
template <typename Scalar>
Var<Scalar> add_colwise(const Var<Scalar>& x, const Var<Scalar>& v);

// x (r x c) plus row vector v (1 x c) added to every row.
template <typename Scalar>
Var<Scalar> add_rowwise(const Var<Scalar>& x, const Var<Scalar>& v);

// Column broadcast: v (r x 1) multiplied into every column of x (r x c).
template <typename Scalar>
Var<Scalar> mul_colwise(const Var<Scalar>& v, const Var<Scalar>& x);

// x times a 1x1 variable.
template <typename Scalar>
Var<Scalar> mul_scalar(const Var<Scalar>& x, const Var<Scalar>& s);

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x);

// Natural log of max(x, floor). Entries clamped to the floor get no gradient.
template <typename Scalar>
Var<Scalar> log(const Var<Scalar>& x, Scalar floor = Scalar(0));

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar factor);

// a * x + b elementwise.
template <typename Scalar>
Var<Scalar> affine(const Var<Scalar>& x, Scalar a, Scalar b);

// Max-shifted softmax; axis 0 normalizes each column, axis 1 each row.
template <typename Scalar>
Var<Scalar> softmax(const Var<Scalar>& x, int axis);

template <typename Scalar>
Var<Scalar> concat_rows(const std::vector<Var<Scalar>>& parts);

template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts);

template <typename Scalar>
Var<Scalar> slice_rows(const Var<Scalar>& x, Index start, Index count);

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& x, Index start, Index count);

// 1x1 view of one entry.
template <typename Scalar>
Var<Scalar> entry(const Var<Scalar>& x, Index row, Index col);

// Max reduction. The gradient goes to the first maximal element.
template <typename Scalar>
Var<Scalar> max_over_axis(const Var<Scalar>& x, int axis);

// Columns of x are split into consecutive segments of the given sizes; each
// segment reduces to one column by rowwise max. Output: rows x segments.
template <typename Scalar>
Var<Scalar> segment_max_cols(const Var<Scalar>& x, std::span<const Index> sizes);

// Rows of table (V x k) selected by index: output is |indices| x k. The
// gradient is routed back additively, so repeated indices sum.
template <typename Scalar>
Var<Scalar> gather(const Var<Scalar>& table, std::span<const std::size_t> indices);

// Column windows of width w for each segment of x's columns. A segment with
// L >= w yields L - w + 1 windows; shorter segments are zero padded to one
// window. Window j of a segment stacks columns j..j+w-1 top to bottom, so the
// output has (rows * w) rows.
template <typename Scalar>
Var<Scalar> unfold(const Var<Scalar>& x, Index window, std::span<const Index> segment_lengths);

// Number of windows unfold emits for a segment of length L.
inline Index window_count(Index length, Index window) {
  return length >= window ? length - window + 1 : 1;
}

// Valid-mode 1-D convolution over the columns of seq (e x L) with filters
// (k x e*w) and bias (k x 1), then max over positions. Returns the k x 1
// pre-activation.
template <typename Scalar>
Var<Scalar> conv1d_maxpool(const Var<Scalar>& seq, Index window, const Var<Scalar>& filters,
                           const Var<Scalar>& bias);

// Inverted dropout. Identity when !training or rate == 0. Mask bits come from
// the tape's generator.
template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, double rate, bool training);

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x);

// Same value, no gradient path.
template <typename Scalar>
Var<Scalar> detach(const Var<Scalar>& x);

// Cosine between every column of m (k x n) and v (k x 1), as an n x 1
// vector. A zero-norm operand gives cosine 0 and no gradient.
template <typename Scalar>
Var<Scalar> cosine_cols(const Var<Scalar>& m, const Var<Scalar>& v);

}  // namespace itr
