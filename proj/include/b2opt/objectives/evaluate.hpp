#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <fmt/format.h>

#include "b2opt/ad/ops.hpp"
#include "b2opt/objectives/functions.hpp"

namespace b2opt::objectives {

/// Number of scalar objective evaluations charged so far. Owned by one run.
class EvalCounter {
public:
    std::uint64_t count() const { return count_; }
    void charge(std::uint64_t rows) { count_ += rows; }

private:
    std::uint64_t count_ = 0;
};

namespace detail {

inline void require_columns(const ObjectiveInstance& f, const Matrix& X)
{
    if (X.cols() != f.d)
        throw DimensionError(fmt::format("evaluate {}: population has {} columns, instance has d={}",
                                         to_string(f.id), X.cols(), f.d));
}

} // namespace detail

/// Row-wise fitness as an n x 1 column; charges n evaluations.
inline Matrix evaluate(const ObjectiveInstance& f, const Matrix& X, EvalCounter& counter)
{
    detail::require_columns(f, X);
    Matrix out(X.rows(), 1);
    for (std::size_t i = 0; i < X.rows(); ++i)
        out[i] = f.value(X.row_span(i));
    counter.charge(X.rows());
    return out;
}

/// Tape-recorded evaluation; the adjoint is the per-row analytic gradient.
inline ad::Var evaluate(const ObjectiveInstance& f, ad::Var X, EvalCounter& counter)
{
    Matrix out = evaluate(f, X.value(), counter);
    const std::size_t ix = X.id();
    return X.tape().record("objective", std::move(out), {X}, [ix, &f](ad::Tape& tp, std::size_t self) {
        const Matrix& x = tp.value(ix);
        const Matrix g = tp.grad(self);
        Matrix gx(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            f.gradient(x.row_span(i), gx.row_span(i));
            for (double& v : gx.row_span(i))
                v *= g[i];
        }
        tp.accumulate(ix, gx);
    });
}

} // namespace b2opt::objectives
