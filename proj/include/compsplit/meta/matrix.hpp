#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace compsplit::meta {

// Small dense row-major matrix; just enough linear algebra for the toy model.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    Matrix& operator+=(const Matrix& o) {
        check_shape(o);
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        check_shape(o);
        for (std::size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
        return *this;
    }

    Matrix& scale(double s) {
        for (double& v : data) v *= s;
        return *this;
    }

    // this += s * o
    Matrix& axpy(double s, const Matrix& o) {
        check_shape(o);
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += s * o.data[i];
        return *this;
    }

    double max_abs_diff(const Matrix& o) const {
        check_shape(o);
        double m = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            m = std::max(m, std::fabs(data[i] - o.data[i]));
        }
        return m;
    }

    double norm() const {
        double s = 0.0;
        for (double v : data) s += v * v;
        return std::sqrt(s);
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    void check_shape(const Matrix& o) const {
        if (rows != o.rows || cols != o.cols) throw std::invalid_argument("matrix shape mismatch");
    }
};

}  // namespace compsplit::meta
