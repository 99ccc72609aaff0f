#include "core/matrix.hpp"

#include <cmath>
#include <string>

namespace tkan {

Matrix::Matrix(int r, int c) : rows(r), cols(c) {
    require(r >= 0 && c >= 0, ErrorCode::invalid_argument, "matrix dimensions must be non-negative");
    data.assign(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, ErrorCode::dimension_mismatch,
            "matmul: inner dimensions differ (" + std::to_string(a.cols) + " vs " +
                std::to_string(b.rows) + ")");
    Matrix out(a.rows, b.cols);
    // i-k-j order keeps the inner loop contiguous in both b and out.
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = &b.data[static_cast<size_t>(k) * b.cols];
            double* orow = &out.data[static_cast<size_t>(i) * out.cols];
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

void matvec(const Matrix& w, std::span<const double> x, std::span<double> out) {
    require(static_cast<int>(x.size()) == w.cols && static_cast<int>(out.size()) == w.rows,
            ErrorCode::dimension_mismatch, "matvec: shape mismatch");
    for (int i = 0; i < w.rows; ++i) {
        const double* row = &w.data[static_cast<size_t>(i) * w.cols];
        double acc = 0.0;
        for (int j = 0; j < w.cols; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
}

void matvec_transposed_add(const Matrix& w, std::span<const double> y, std::span<double> out) {
    require(static_cast<int>(y.size()) == w.rows && static_cast<int>(out.size()) == w.cols,
            ErrorCode::dimension_mismatch, "matvec_transposed_add: shape mismatch");
    for (int i = 0; i < w.rows; ++i) {
        const double yi = y[i];
        if (yi == 0.0) continue;
        const double* row = &w.data[static_cast<size_t>(i) * w.cols];
        for (int j = 0; j < w.cols; ++j) out[j] += yi * row[j];
    }
}

void add_outer(Matrix& w, std::span<const double> y, std::span<const double> x, double scale) {
    require(static_cast<int>(y.size()) == w.rows && static_cast<int>(x.size()) == w.cols,
            ErrorCode::dimension_mismatch, "add_outer: shape mismatch");
    for (int i = 0; i < w.rows; ++i) {
        const double yi = y[i] * scale;
        if (yi == 0.0) continue;
        double* row = &w.data[static_cast<size_t>(i) * w.cols];
        for (int j = 0; j < w.cols; ++j) row[j] += yi * x[j];
    }
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace tkan
