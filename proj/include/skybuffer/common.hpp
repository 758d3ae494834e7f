#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace skybuffer {

inline constexpr const char* kToolVersion = "1.0.0";

// Input shape is wrong: missing column, unknown format version, bad header.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Content failed validation after parsing (degenerate labels, empty link set, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    void push_row(const std::vector<double>& row) {
        if (rows == 0 && cols == 0) cols = row.size();
        if (row.size() != cols) throw DataError("matrix row width mismatch");
        data.insert(data.end(), row.begin(), row.end());
        ++rows;
    }
};

// Copy of `m` with one extra trailing column.
inline Matrix with_column(const Matrix& m, const std::vector<double>& col) {
    if (col.size() != m.rows) throw DataError("column length mismatch");
    Matrix out(m.rows, m.cols + 1);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) out.at(r, c) = m.at(r, c);
        out.at(r, m.cols) = col[r];
    }
    return out;
}

}  // namespace skybuffer
