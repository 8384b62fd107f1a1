#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "b2opt/ad/matrix.hpp"
#include "b2opt/ad/tape.hpp"

// Differentiable primitives over Tape nodes. Every op checks shapes, computes the forward value
// eagerly and registers its adjoint rule. Kinks (|x|, relu, clamp, max) use a zero subgradient.

namespace b2opt::ad {

namespace detail {

inline Tape& same_tape(const char* op, Var a, Var b)
{
    if (&a.tape() != &b.tape())
        throw ContractError(fmt::format("{}: operands live on different tapes", op));
    return a.tape();
}

inline void require_same_shape(const char* op, const Matrix& a, const Matrix& b)
{
    if (!a.same_shape(b))
        throw DimensionError(fmt::format("{}: shape mismatch {} vs {}", op, a.shape(), b.shape()));
}

inline void require_scalar(const char* op, const Matrix& a)
{
    if (a.size() != 1)
        throw DimensionError(fmt::format("{}: expected 1x1 operand, got {}", op, a.shape()));
}

template <typename Fwd, typename Deriv>
Var unary(const char* op, Var a, Fwd fwd, Deriv deriv)
{
    const Matrix& av = a.value();
    Matrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i)
        out[i] = fwd(av[i]);
    const std::size_t ia = a.id();
    return a.tape().record(op, std::move(out), {a}, [ia, deriv](Tape& t, std::size_t self) {
        const Matrix& x = t.value(ia);
        const Matrix g = t.grad(self);
        Matrix ga(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i)
            ga[i] = g[i] * deriv(x[i]);
        t.accumulate(ia, ga);
    });
}

} // namespace detail

inline Var matmul(Var a, Var b)
{
    Tape& t = detail::same_tape("matmul", a, b);
    Matrix out = linalg::matmul(a.value(), b.value());
    const std::size_t ia = a.id(), ib = b.id();
    return t.record("matmul", std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix g = tp.grad(self);
        if (tp.requires_grad(ia))
            tp.accumulate(ia, linalg::matmul(g, tp.value(ib), false, true));
        if (tp.requires_grad(ib))
            tp.accumulate(ib, linalg::matmul(tp.value(ia), g, true, false));
    });
}

inline Var add(Var a, Var b)
{
    Tape& t = detail::same_tape("add", a, b);
    detail::require_same_shape("add", a.value(), b.value());
    Matrix out = a.value();
    out += b.value();
    const std::size_t ia = a.id(), ib = b.id();
    return t.record("add", std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix g = tp.grad(self);
        tp.accumulate(ia, g);
        tp.accumulate(ib, g);
    });
}

inline Var sub(Var a, Var b)
{
    Tape& t = detail::same_tape("sub", a, b);
    detail::require_same_shape("sub", a.value(), b.value());
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    Matrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = av[i] - bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return t.record("sub", std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        Matrix g = tp.grad(self);
        tp.accumulate(ia, g);
        g *= -1.0;
        tp.accumulate(ib, g);
    });
}

inline Var hadamard(Var a, Var b)
{
    Tape& t = detail::same_tape("hadamard", a, b);
    detail::require_same_shape("hadamard", a.value(), b.value());
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    Matrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = av[i] * bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return t.record("hadamard", std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix g = tp.grad(self);
        const Matrix& x = tp.value(ia);
        const Matrix& y = tp.value(ib);
        if (tp.requires_grad(ia)) {
            Matrix ga(x.rows(), x.cols());
            for (std::size_t i = 0; i < ga.size(); ++i)
                ga[i] = g[i] * y[i];
            tp.accumulate(ia, ga);
        }
        if (tp.requires_grad(ib)) {
            Matrix gb(y.rows(), y.cols());
            for (std::size_t i = 0; i < gb.size(); ++i)
                gb[i] = g[i] * x[i];
            tp.accumulate(ib, gb);
        }
    });
}

inline Var scale(Var a, double s)
{
    Matrix out = a.value();
    out *= s;
    const std::size_t ia = a.id();
    return a.tape().record("scale", std::move(out), {a}, [ia, s](Tape& tp, std::size_t self) {
        Matrix g = tp.grad(self);
        g *= s;
        tp.accumulate(ia, g);
    });
}

inline Var relu(Var a)
{
    return detail::unary(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var abs(Var a)
{
    return detail::unary(
        "abs", a, [](double x) { return std::abs(x); },
        [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

inline Var sin(Var a)
{
    return detail::unary("sin", a, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
}

inline Var cos(Var a)
{
    return detail::unary("cos", a, [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); });
}

/// Element-wise max(a, floor); gradient passes only where a > floor.
inline Var max_with(Var a, double floor)
{
    return detail::unary(
        "max_with", a, [floor](double x) { return std::max(x, floor); },
        [floor](double x) { return x > floor ? 1.0 : 0.0; });
}

inline Var softmax_rows(Var a)
{
    const Matrix& av = a.value();
    Matrix out(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        auto in = av.row_span(r);
        auto o = out.row_span(r);
        const double m = *std::max_element(in.begin(), in.end());
        double z = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            o[c] = std::exp(in[c] - m);
            z += o[c];
        }
        for (double& v : o)
            v /= z;
    }
    const std::size_t ia = a.id();
    return a.tape().record("softmax_rows", std::move(out), {a}, [ia](Tape& tp, std::size_t self) {
        const Matrix& y = tp.value(self);
        const Matrix g = tp.grad(self);
        Matrix ga(y.rows(), y.cols());
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c)
                dot += g(r, c) * y(r, c);
            for (std::size_t c = 0; c < y.cols(); ++c)
                ga(r, c) = y(r, c) * (g(r, c) - dot);
        }
        tp.accumulate(ia, ga);
    });
}

inline Var transpose(Var a)
{
    const std::size_t ia = a.id();
    return a.tape().record("transpose", linalg::transpose(a.value()), {a}, [ia](Tape& tp, std::size_t self) {
        tp.accumulate(ia, linalg::transpose(tp.grad(self)));
    });
}

/// Repeats an n x 1 column across `cols` columns.
inline Var tile(Var column, std::size_t cols)
{
    const Matrix& v = column.value();
    if (v.cols() != 1)
        throw DimensionError(fmt::format("tile: expected a column vector, got {}", v.shape()));
    Matrix out(v.rows(), cols);
    for (std::size_t r = 0; r < v.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out(r, c) = v[r];
    const std::size_t ia = column.id();
    return column.tape().record("tile", std::move(out), {column}, [ia](Tape& tp, std::size_t self) {
        const Matrix g = tp.grad(self);
        Matrix gv(g.rows(), 1);
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c)
                gv[r] += g(r, c);
        tp.accumulate(ia, gv);
    });
}

/// Adds a 1 x k row to every row of an n x k matrix.
inline Var add_row(Var x, Var bias)
{
    Tape& t = detail::same_tape("add_row", x, bias);
    const Matrix& xv = x.value();
    const Matrix& bv = bias.value();
    if (bv.rows() != 1 || bv.cols() != xv.cols())
        throw DimensionError(fmt::format("add_row: shape mismatch {} vs {}", xv.shape(), bv.shape()));
    Matrix out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
            out(r, c) += bv[c];
    const std::size_t ix = x.id(), ib = bias.id();
    return t.record("add_row", std::move(out), {x, bias}, [ix, ib](Tape& tp, std::size_t self) {
        const Matrix g = tp.grad(self);
        tp.accumulate(ix, g);
        if (tp.requires_grad(ib)) {
            Matrix gb(1, g.cols());
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c)
                    gb[c] += g(r, c);
            tp.accumulate(ib, gb);
        }
    });
}

inline Var sum(Var a)
{
    double s = 0.0;
    for (double v : a.value().values())
        s += v;
    const std::size_t ia = a.id();
    return a.tape().record("sum", Matrix::scalar(s), {a}, [ia](Tape& tp, std::size_t self) {
        const Matrix& x = tp.value(ia);
        tp.accumulate(ia, Matrix(x.rows(), x.cols(), tp.grad(self)[0]));
    });
}

inline Var mean(Var a)
{
    const double n = static_cast<double>(a.value().size());
    double s = 0.0;
    for (double v : a.value().values())
        s += v;
    const std::size_t ia = a.id();
    return a.tape().record("mean", Matrix::scalar(s / n), {a}, [ia, n](Tape& tp, std::size_t self) {
        const Matrix& x = tp.value(ia);
        tp.accumulate(ia, Matrix(x.rows(), x.cols(), tp.grad(self)[0] / n));
    });
}

/// Scalar division a / b for 1x1 operands.
inline Var divide(Var a, Var b)
{
    Tape& t = detail::same_tape("divide", a, b);
    detail::require_scalar("divide", a.value());
    detail::require_scalar("divide", b.value());
    const double av = a.value()[0];
    const double bv = b.value()[0];
    const std::size_t ia = a.id(), ib = b.id();
    return t.record("divide", Matrix::scalar(av / bv), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        const double x = tp.value(ia)[0];
        const double y = tp.value(ib)[0];
        tp.accumulate(ia, Matrix::scalar(g / y));
        tp.accumulate(ib, Matrix::scalar(-g * x / (y * y)));
    });
}

/// Per-column clamp to [lower[c], upper[c]]. Gradient is 1 strictly inside the box, 0 on or past it.
inline Var clamp_columns(Var a, std::span<const double> lower, std::span<const double> upper)
{
    const Matrix& av = a.value();
    if (lower.size() != av.cols() || upper.size() != av.cols())
        throw DimensionError(
            fmt::format("clamp_columns: {} columns vs bounds of length {}/{}", av.cols(), lower.size(), upper.size()));
    Matrix out(av.rows(), av.cols());
    Matrix pass(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = 0; c < av.cols(); ++c) {
            const double x = av(r, c);
            out(r, c) = std::clamp(x, lower[c], upper[c]);
            pass(r, c) = (x > lower[c] && x < upper[c]) ? 1.0 : 0.0;
        }
    const std::size_t ia = a.id();
    return a.tape().record("clamp_columns", std::move(out), {a},
                           [ia, pass = std::move(pass)](Tape& tp, std::size_t self) {
                               Matrix g = tp.grad(self);
                               for (std::size_t i = 0; i < g.size(); ++i)
                                   g[i] *= pass[i];
                               tp.accumulate(ia, g);
                           });
}

/// out.row(i) = a.row(order[i]). The index list itself is a constant.
inline Var gather_rows(Var a, std::vector<std::size_t> order)
{
    const Matrix& av = a.value();
    if (order.size() == 0)
        throw DimensionError("gather_rows: empty row order");
    Matrix out(order.size(), av.cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] >= av.rows())
            throw DimensionError(fmt::format("gather_rows: row {} out of range for {}", order[i], av.shape()));
        std::copy_n(av.row_span(order[i]).begin(), av.cols(), out.row_span(i).begin());
    }
    const std::size_t ia = a.id();
    return a.tape().record("gather_rows", std::move(out), {a},
                           [ia, order = std::move(order)](Tape& tp, std::size_t self) {
                               if (!tp.requires_grad(ia))
                                   return;
                               const Matrix g = tp.grad(self);
                               Matrix& ga = tp.grad_ref(ia);
                               for (std::size_t i = 0; i < order.size(); ++i)
                                   for (std::size_t c = 0; c < g.cols(); ++c)
                                       ga(order[i], c) += g(i, c);
                           });
}

/// Min-max normalisation of a column to [0, 1]; a constant column maps to zeros.
/// The arg-min/arg-max indices are treated as locally constant.
inline Var normalize_minmax(Var a)
{
    const Matrix& av = a.value();
    if (av.cols() != 1)
        throw DimensionError(fmt::format("normalize_minmax: expected a column vector, got {}", av.shape()));
    const auto& v = av.values();
    const auto lo_it = std::min_element(v.begin(), v.end());
    const auto hi_it = std::max_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    Matrix out(av.rows(), 1);
    if (range > 0.0)
        for (std::size_t i = 0; i < v.size(); ++i)
            out[i] = (v[i] - lo) / range;
    const std::size_t ia = a.id();
    const std::size_t imin = std::size_t(lo_it - v.begin());
    const std::size_t imax = std::size_t(hi_it - v.begin());
    return a.tape().record("normalize_minmax", std::move(out), {a},
                           [ia, imin, imax, range](Tape& tp, std::size_t self) {
                               if (!(range > 0.0))
                                   return;
                               const Matrix g = tp.grad(self);
                               const Matrix& y = tp.value(self);
                               Matrix ga(g.rows(), 1);
                               double gy = 0.0; // sum_i g_i * y_i
                               double gs = 0.0; // sum_i g_i
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   ga[i] = g[i] / range;
                                   gy += g[i] * y[i];
                                   gs += g[i];
                               }
                               ga[imin] += (gy - gs) / range;
                               ga[imax] -= gy / range;
                               tp.accumulate(ia, ga);
                           });
}

} // namespace b2opt::ad
