#ifndef EDGEHYB_MATRIX_HPP
#define EDGEHYB_MATRIX_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace edgehyb {

/// Row-major real matrix; the flattened per-pixel feature table uses one row per pixel.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

}  // namespace edgehyb

#endif  // EDGEHYB_MATRIX_HPP
