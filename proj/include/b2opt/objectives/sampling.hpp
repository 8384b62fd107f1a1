#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "b2opt/ad/matrix.hpp"
#include "b2opt/objectives/functions.hpp"
#include "b2opt/random.hpp"

namespace b2opt::objectives {

namespace detail {

inline ObjectiveInstance sample_shifted(FunctionId id, std::size_t d, Rng& rng)
{
    const FunctionInfo& fi = info(id);
    std::vector<double> shift(d);
    for (double& b : shift)
        b = uniform(rng, fi.shift_lower, fi.shift_upper);
    std::vector<double> weights;
    if (id == FunctionId::F1) {
        // The table gives no range for w; it shares the row's shift range.
        weights.resize(d);
        for (double& w : weights)
            w = uniform(rng, fi.shift_lower, fi.shift_upper);
    }
    return make_instance(id, d, std::move(shift), std::move(weights));
}

} // namespace detail

/// Randomly shifted training surrogate (F1..F3).
inline ObjectiveInstance sample_training_instance(FunctionId id, std::size_t d, Rng& rng)
{
    if (!info(id).training)
        throw ContractError(fmt::format("{} is not a training function", to_string(id)));
    return detail::sample_shifted(id, d, rng);
}

/// Randomly shifted test function (F4..F9).
inline ObjectiveInstance sample_test_instance(FunctionId id, std::size_t d, Rng& rng)
{
    if (id == FunctionId::Arm || info(id).training)
        throw ContractError(fmt::format("{} is not a test function", to_string(id)));
    return detail::sample_shifted(id, d, rng);
}

/// Shifted instance of any suite function; used when a test function doubles as a training family.
inline ObjectiveInstance sample_instance(FunctionId id, std::size_t d, Rng& rng)
{
    if (id == FunctionId::Arm)
        throw ContractError("sample_instance: arm instances are built from targets");
    ObjectiveInstance inst = detail::sample_shifted(id, d, rng);
    inst.differentiable = true;
    return inst;
}

/// Area-uniform points on the disk of radius r_max.
inline std::vector<std::array<double, 2>> sample_arm_targets(double r_max, std::size_t count, Rng& rng)
{
    if (!(r_max > 0.0))
        throw ContractError(fmt::format("sample_arm_targets: r_max must be positive, got {}", r_max));
    std::vector<std::array<double, 2>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double r = r_max * std::sqrt(uniform(rng, 0.0, 1.0));
        const double theta = uniform(rng, -std::numbers::pi, std::numbers::pi);
        out.push_back({r * std::cos(theta), r * std::sin(theta)});
    }
    return out;
}

/// n x d population, each coordinate uniform in its bounds.
inline Matrix init_population(const Bounds& bounds, std::size_t n, Rng& rng)
{
    bounds.validate();
    if (n < 2)
        throw ContractError(fmt::format("init_population: n must be at least 2, got {}", n));
    Matrix X(n, bounds.dim());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < bounds.dim(); ++j)
            X(i, j) = uniform(rng, bounds.lower[j], bounds.upper[j]);
    return X;
}

} // namespace b2opt::objectives
