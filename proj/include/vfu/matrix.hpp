#pragma once

#include <cstddef>
#include <vector>

#include "vfu/common.hpp"

namespace vfu {

// Row-major dense matrix of doubles. The one container behind batches,
// embeddings, logits and gradient payloads.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}
    DenseMatrix(std::size_t r, std::size_t c, std::vector<double> d);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool same_shape(const DenseMatrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

bool all_finite(const DenseMatrix& m);
void ensure_finite(const DenseMatrix& m, const char* context);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& m);

// Horizontal concatenation; all parts must have equal row counts.
DenseMatrix concat_cols(const std::vector<DenseMatrix>& parts);

// Columns [begin, begin+count).
DenseMatrix slice_cols(const DenseMatrix& m, std::size_t begin, std::size_t count);

// Copy with the given column indices removed.
DenseMatrix remove_cols(const DenseMatrix& m, const std::vector<std::size_t>& cols_to_drop);

// Copy with only the given column indices, in the given order.
DenseMatrix select_cols(const DenseMatrix& m, const std::vector<std::size_t>& cols_to_keep);

// Copy with only the given row indices, in the given order.
DenseMatrix select_rows(const DenseMatrix& m, const std::vector<std::size_t>& row_indices);

DenseMatrix vstack(const DenseMatrix& top, const DenseMatrix& bottom);

// Solves A x = b by Gaussian elimination with partial pivoting. A is n x n,
// b length n. Throws SingularMatrixError when a pivot underflows.
std::vector<double> solve_linear(DenseMatrix a, std::vector<double> b);

}  // namespace vfu
