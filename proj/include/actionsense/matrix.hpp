#pragma once

#include <cstddef>
#include <vector>

namespace actionsense {

// Row-major double matrix; just enough linear algebra for the head.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(size_t i, size_t j) { return a[i * cols + j]; }
    double operator()(size_t i, size_t j) const { return a[i * cols + j]; }
    size_t size() const { return a.size(); }
};

} // namespace actionsense
