#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>

#include "b2opt/error.hpp"

namespace b2opt {

/// Dense row-major matrix of doubles. Always at least 1x1.
class Matrix {
public:
    Matrix() : Matrix(1, 1) {}

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
        check_shape();
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), data_(std::move(values))
    {
        check_shape();
        if (data_.size() != rows_ * cols_)
            throw DimensionError(fmt::format("matrix {}x{} built from {} values", rows_, cols_, data_.size()));
    }

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    static Matrix column(std::span<const double> v) { return {v.size(), 1, std::vector<double>(v.begin(), v.end())}; }
    static Matrix row(std::span<const double> v) { return {1, v.size(), std::vector<double>(v.begin(), v.end())}; }
    static Matrix scalar(double v) { return {1, 1, v}; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape() const { return fmt::format("{}x{}", rows_, cols_); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row_span(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double item() const
    {
        if (size() != 1)
            throw ContractError(fmt::format("item() on {} matrix", shape()));
        return data_[0];
    }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    Matrix& operator+=(const Matrix& o)
    {
        require_same_shape(*this, o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] += o.data_[i];
        return *this;
    }

    Matrix& operator*=(double s)
    {
        for (double& v : data_)
            v *= s;
        return *this;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

    static void require_same_shape(const Matrix& a, const Matrix& b, const char* op)
    {
        if (!a.same_shape(b))
            throw DimensionError(fmt::format("{}: shape mismatch {} vs {}", op, a.shape(), b.shape()));
    }

private:
    void check_shape() const
    {
        if (rows_ == 0 || cols_ == 0)
            throw DimensionError(fmt::format("matrix dimensions must be positive, got {}x{}", rows_, cols_));
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

namespace linalg {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

inline ConstMap view(const Matrix& m) { return {m.values().data(), Eigen::Index(m.rows()), Eigen::Index(m.cols())}; }
inline MutMap view(Matrix& m) { return {m.values().data(), Eigen::Index(m.rows()), Eigen::Index(m.cols())}; }

// out = op(a) * op(b), with optional transposes; Eigen does the kernel.
inline Matrix matmul(const Matrix& a, const Matrix& b, bool transpose_a = false, bool transpose_b = false)
{
    const std::size_t inner_a = transpose_a ? a.rows() : a.cols();
    const std::size_t inner_b = transpose_b ? b.cols() : b.rows();
    if (inner_a != inner_b)
        throw DimensionError(fmt::format("matmul: shape mismatch {}{} * {}{}", a.shape(), transpose_a ? "^T" : "",
                                         b.shape(), transpose_b ? "^T" : ""));
    Matrix out(transpose_a ? a.cols() : a.rows(), transpose_b ? b.rows() : b.cols());
    auto o = view(out);
    if (!transpose_a && !transpose_b)
        o.noalias() = view(a) * view(b);
    else if (transpose_a && !transpose_b)
        o.noalias() = view(a).transpose() * view(b);
    else if (!transpose_a && transpose_b)
        o.noalias() = view(a) * view(b).transpose();
    else
        o.noalias() = view(a).transpose() * view(b).transpose();
    return out;
}

inline Matrix transpose(const Matrix& a)
{
    Matrix out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            out(c, r) = a(r, c);
    return out;
}

inline double frobenius(const Matrix& a)
{
    double s = 0.0;
    for (double v : a.values())
        s += v * v;
    return std::sqrt(s);
}

} // namespace linalg
} // namespace b2opt
