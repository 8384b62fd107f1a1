#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <fmt/format.h>

#include "b2opt/ad/tape.hpp"

namespace b2opt::training {

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;

    AdamState() = default;
    explicit AdamState(const std::vector<ad::Parameter*>& params)
    {
        for (const ad::Parameter* p : params) {
            m.emplace_back(p->value.rows(), p->value.cols());
            v.emplace_back(p->value.rows(), p->value.cols());
        }
    }
};

/// One bias-corrected Adam update using each parameter's accumulated grad.
inline void adam_step(const std::vector<ad::Parameter*>& params, AdamState& s, double lr)
{
    if (s.m.size() != params.size())
        throw DimensionError(fmt::format("adam: state holds {} moments for {} parameters", s.m.size(), params.size()));
    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, double(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, double(s.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        ad::Parameter& p = *params[k];
        if (!s.m[k].same_shape(p.value) || !p.grad.same_shape(p.value))
            throw DimensionError(fmt::format("adam: '{}' is {} but state/grad are {}/{}", p.name, p.value.shape(),
                                             s.m[k].shape(), p.grad.shape()));
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            s.m[k][i] = s.beta1 * s.m[k][i] + (1.0 - s.beta1) * g;
            s.v[k][i] = s.beta2 * s.v[k][i] + (1.0 - s.beta2) * g * g;
            const double mh = s.m[k][i] / c1;
            const double vh = s.v[k][i] / c2;
            p.value[i] -= lr * mh / (std::sqrt(vh) + s.eps);
        }
    }
}

struct ClipResult {
    double norm_before;
    double norm_after;
};

inline double global_grad_norm(const std::vector<ad::Parameter*>& params)
{
    double s = 0.0;
    for (const ad::Parameter* p : params)
        for (double g : p->grad.values())
            s += g * g;
    return std::sqrt(s);
}

/// Rescales all grads together so their joint 2-norm is at most max_norm.
inline ClipResult clip_grad_norm(const std::vector<ad::Parameter*>& params, double max_norm)
{
    if (!(max_norm > 0.0))
        throw ContractError(fmt::format("clip_grad_norm: max_norm must be positive, got {}", max_norm));
    const double before = global_grad_norm(params);
    if (before > max_norm) {
        const double f = max_norm / before;
        for (ad::Parameter* p : params)
            p->grad *= f;
        return {before, global_grad_norm(params)};
    }
    return {before, before};
}

} // namespace b2opt::training
