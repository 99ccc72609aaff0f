#pragma once

#include <span>
#include <vector>

#include "core/error.hpp"

namespace tkan {

// Dense row-major double matrix. Deliberately minimal: the models only need
// products against vectors and small matrices, all in double precision.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(int r, int c);

    double& operator()(int r, int c) noexcept { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const noexcept { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const noexcept { return data.size(); }
};

Matrix matmul(const Matrix& a, const Matrix& b);

// out = W x  (out sized W.rows, x sized W.cols)
void matvec(const Matrix& w, std::span<const double> x, std::span<double> out);

// out += W^T y  (out sized W.cols, y sized W.rows)
void matvec_transposed_add(const Matrix& w, std::span<const double> y, std::span<double> out);

// w += scale * outer(y, x)
void add_outer(Matrix& w, std::span<const double> y, std::span<const double> x, double scale = 1.0);

bool all_finite(std::span<const double> v);

}  // namespace tkan
