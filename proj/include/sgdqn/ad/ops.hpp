#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sgdqn/ad/tape.hpp"

namespace sgdqn::ad {

// Differentiable primitives. Every op records an exact vector-Jacobian
// product and throws ShapeError naming both shapes on a mismatch.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
// a (m x n) plus a 1 x n row vector on every row.
Var add_row(Var a, Var row);
Var scale(Var a, double factor);
// Column-wise concatenation of two matrices with equal row counts.
Var concat(Var a, Var b);
Var sum(Var a);
Var mean(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double negative_slope);
// axis 1 normalises each row, axis 0 each column.
Var softmax(Var a, int axis);
Var square(Var a);

// Structural helpers used by the graph layers.
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var select_rows(Var a, std::span<const std::size_t> rows);
// out[i] = a[i, cols[i]] as a column vector.
Var pick(Var a, std::span<const std::size_t> cols);
// For graphs of `group` consecutive rows: row (g*n + i)*n + j of the result is
// [q(g*n + i) | k(g*n + j)].
Var pairwise_concat(Var q, Var k, std::size_t group);
// out(g*n + i) = sum_j weights(g*n + i, j) * values(g*n + j).
Var group_matmul(Var weights, Var values, std::size_t group);
// Builds per-graph node lists [head_g, tail_{g*m}, ..., tail_{g*m+m-1}] from
// head (B x d) and tail (B*m x d).
Var interleave(Var head, Var tail, std::size_t tail_per_group);

}  // namespace sgdqn::ad
