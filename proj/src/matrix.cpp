#include "vfu/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace vfu {

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols)
        throw ShapeError("DenseMatrix: data length " + std::to_string(data.size()) +
                         " != " + std::to_string(rows) + "x" + std::to_string(cols));
}

bool all_finite(const DenseMatrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

void ensure_finite(const DenseMatrix& m, const char* context) {
    if (!all_finite(m))
        throw StateError(std::string("non-finite value produced in ") + context);
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                         " * " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    DenseMatrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j)
                out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix out(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j)
            out(j, i) = m(i, j);
    return out;
}

DenseMatrix concat_cols(const std::vector<DenseMatrix>& parts) {
    if (parts.empty()) return {};
    std::size_t total_cols = 0;
    for (const auto& p : parts) {
        if (p.rows != parts.front().rows)
            throw ShapeError("concat_cols: row-count mismatch across parts");
        total_cols += p.cols;
    }
    DenseMatrix out(parts.front().rows, total_cols);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < p.rows; ++i)
            std::copy_n(&p.data[i * p.cols], p.cols, &out.data[i * total_cols + offset]);
        offset += p.cols;
    }
    return out;
}

DenseMatrix slice_cols(const DenseMatrix& m, std::size_t begin, std::size_t count) {
    if (begin + count > m.cols)
        throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") exceeds " + std::to_string(m.cols));
    DenseMatrix out(m.rows, count);
    for (std::size_t i = 0; i < m.rows; ++i)
        std::copy_n(&m.data[i * m.cols + begin], count, &out.data[i * count]);
    return out;
}

DenseMatrix remove_cols(const DenseMatrix& m, const std::vector<std::size_t>& cols_to_drop) {
    std::vector<bool> drop(m.cols, false);
    for (std::size_t c : cols_to_drop) {
        if (c >= m.cols) throw ShapeError("remove_cols: column index out of range");
        drop[c] = true;
    }
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < m.cols; ++c)
        if (!drop[c]) keep.push_back(c);
    return select_cols(m, keep);
}

DenseMatrix select_cols(const DenseMatrix& m, const std::vector<std::size_t>& cols_to_keep) {
    DenseMatrix out(m.rows, cols_to_keep.size());
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < cols_to_keep.size(); ++j) {
            if (cols_to_keep[j] >= m.cols) throw ShapeError("select_cols: column index out of range");
            out(i, j) = m(i, cols_to_keep[j]);
        }
    return out;
}

DenseMatrix select_rows(const DenseMatrix& m, const std::vector<std::size_t>& row_indices) {
    DenseMatrix out(row_indices.size(), m.cols);
    for (std::size_t i = 0; i < row_indices.size(); ++i) {
        if (row_indices[i] >= m.rows) throw ShapeError("select_rows: row index out of range");
        std::copy_n(&m.data[row_indices[i] * m.cols], m.cols, &out.data[i * m.cols]);
    }
    return out;
}

DenseMatrix vstack(const DenseMatrix& top, const DenseMatrix& bottom) {
    if (top.rows == 0) return bottom;
    if (bottom.rows == 0) return top;
    if (top.cols != bottom.cols) throw ShapeError("vstack: column mismatch");
    DenseMatrix out(top.rows + bottom.rows, top.cols);
    std::copy(top.data.begin(), top.data.end(), out.data.begin());
    std::copy(bottom.data.begin(), bottom.data.end(), out.data.begin() + top.data.size());
    return out;
}

std::vector<double> solve_linear(DenseMatrix a, std::vector<double> b) {
    const std::size_t n = a.rows;
    if (a.cols != n || b.size() != n)
        throw ShapeError("solve_linear: expected square system");

    double scale = 0.0;
    for (double v : a.data) scale = std::max(scale, std::abs(v));
    const double tiny = std::max(scale, 1.0) * 1e-13;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        if (std::abs(a(pivot, col)) < tiny)
            throw SingularMatrixError(
                "solve_linear: matrix numerically singular at column " + std::to_string(col) +
                "; increase damping");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(pivot, j), a(col, j));
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

}  // namespace vfu
