#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "b2opt/error.hpp"

namespace b2opt::objectives {

enum class FunctionId { F1, F2, F3, F4, F5, F6, F7, F8, F9, Arm };

inline constexpr std::array<FunctionId, 3> training_functions{FunctionId::F1, FunctionId::F2, FunctionId::F3};
inline constexpr std::array<FunctionId, 6> test_functions{FunctionId::F4, FunctionId::F5, FunctionId::F6,
                                                          FunctionId::F7, FunctionId::F8, FunctionId::F9};

/// Search box and shift range of one suite entry.
struct FunctionInfo {
    FunctionId id;
    std::string_view name;
    double x_lower, x_upper;
    double shift_lower, shift_upper;
    bool training;
};

inline const FunctionInfo& info(FunctionId id)
{
    static constexpr std::array<FunctionInfo, 10> table{{
        {FunctionId::F1, "F1", -10, 10, -10, 10, true},
        {FunctionId::F2, "F2", -10, 10, -10, 10, true},
        {FunctionId::F3, "F3", -10, 10, -10, 10, true},
        {FunctionId::F4, "F4", -100, 100, -50, 50, false},
        {FunctionId::F5, "F5", -100, 100, -50, 50, false},
        {FunctionId::F6, "F6", -100, 100, -50, 50, false},
        {FunctionId::F7, "F7", -5, 5, -2.5, 2.5, false},
        {FunctionId::F8, "F8", -600, 600, -300, 300, false},
        {FunctionId::F9, "F9", -32, 32, -16, 16, false},
        {FunctionId::Arm, "ARM", 0, 0, 0, 0, false},
    }};
    return table[static_cast<std::size_t>(id)];
}

inline std::string_view to_string(FunctionId id) { return info(id).name; }

inline FunctionId parse_function(std::string_view name)
{
    for (int i = 0; i <= static_cast<int>(FunctionId::Arm); ++i) {
        auto id = static_cast<FunctionId>(i);
        if (info(id).name == name)
            return id;
    }
    throw ConfigError(fmt::format("unknown function id '{}'", name));
}

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    static Bounds uniform(std::size_t d, double lo, double hi) { return {std::vector<double>(d, lo), std::vector<double>(d, hi)}; }

    std::size_t dim() const { return lower.size(); }

    void validate() const
    {
        if (lower.size() != upper.size() || lower.empty())
            throw DimensionError(fmt::format("bounds: lower has {} entries, upper {}", lower.size(), upper.size()));
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i]))
                throw ContractError(fmt::format("bounds: lower[{}]={} is not below upper[{}]={}", i, lower[i], i, upper[i]));
    }

    bool contains(std::span<const double> x) const
    {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < lower[i] || x[i] > upper[i])
                return false;
        return true;
    }
};

enum class ArmMode { simple, complex };

inline std::string_view to_string(ArmMode m) { return m == ArmMode::simple ? "simple" : "complex"; }

inline ArmMode parse_arm_mode(std::string_view s)
{
    if (s == "simple" || s == "SC")
        return ArmMode::simple;
    if (s == "complex" || s == "CC")
        return ArmMode::complex;
    throw ConfigError(fmt::format("unknown arm mode '{}'", s));
}

/// Planar arm reaching task. The simple case searches angles with lengths fixed at
/// `fixed_length`; the complex case searches the concatenated vector (lengths, angles).
struct ArmTask {
    ArmMode mode = ArmMode::simple;
    std::size_t segments = 100;
    double length_lower = 0.0;
    double length_upper = 10.0;
    double fixed_length = 10.0;
    std::array<double, 2> target{0.0, 0.0};

    std::size_t dim() const { return mode == ArmMode::simple ? segments : 2 * segments; }
};

/// Distance from the arm tip to `target`; lengths and angles index the same segments.
inline double arm_distance(std::span<const double> lengths, std::span<const double> angles,
                           const std::array<double, 2>& target)
{
    if (lengths.size() != angles.size())
        throw DimensionError(fmt::format("arm_distance: {} lengths vs {} angles", lengths.size(), angles.size()));
    double x = 0.0, y = 0.0;
    for (std::size_t i = 0; i < angles.size(); ++i) {
        x += std::cos(angles[i]) * lengths[i];
        y += std::sin(angles[i]) * lengths[i];
    }
    const double dx = x - target[0];
    const double dy = y - target[1];
    return std::sqrt(dx * dx + dy * dy);
}

namespace detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace detail

/// One concrete objective: a suite function with its shift (and F1 weights), or an arm target.
/// Values are multiplied by `scale` (1 unless a test needs a rescaled copy).
struct ObjectiveInstance {
    FunctionId id = FunctionId::F4;
    std::size_t d = 0;
    std::vector<double> shift;
    std::vector<double> weights;
    Bounds bounds;
    bool differentiable = false;
    double scale = 1.0;
    std::optional<ArmTask> arm;

    double value(std::span<const double> x) const
    {
        if (x.size() != d)
            throw DimensionError(fmt::format("{}: point has {} coordinates, instance has d={}", to_string(id), x.size(), d));
        return scale * raw_value(x);
    }

    /// Writes df/dx into g (zero subgradient at kinks).
    void gradient(std::span<const double> x, std::span<double> g) const
    {
        if (x.size() != d || g.size() != d)
            throw DimensionError(fmt::format("{}: gradient buffers of size {}/{} for d={}", to_string(id), x.size(), g.size(), d));
        raw_gradient(x, g);
        for (double& v : g)
            v *= scale;
    }

private:
    double raw_value(std::span<const double> x) const
    {
        using std::numbers::pi;
        const std::size_t n = d;
        auto z = [&](std::size_t i) { return x[i] - shift[i]; };
        double s = 0.0;
        switch (id) {
        case FunctionId::F1:
            for (std::size_t i = 0; i < n; ++i)
                s += std::abs(weights[i] * std::sin(z(i)));
            return s;
        case FunctionId::F2:
            for (std::size_t i = 0; i < n; ++i)
                s += std::abs(z(i));
            return s;
        case FunctionId::F3: {
            for (std::size_t i = 0; i + 1 < n; ++i)
                s += std::abs(z(i) + z(i + 1));
            double t = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                t += std::abs(z(i));
            return s + t;
        }
        case FunctionId::F4:
            for (std::size_t i = 0; i < n; ++i)
                s += z(i) * z(i);
            return s;
        case FunctionId::F5:
            for (std::size_t i = 0; i < n; ++i)
                s = std::max(s, std::abs(z(i)));
            return s;
        case FunctionId::F6:
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double a = z(i) * z(i) - z(i + 1);
                const double b = z(i) - 1.0;
                s += 100.0 * a * a + b * b;
            }
            return s;
        case FunctionId::F7:
            for (std::size_t i = 0; i < n; ++i)
                s += z(i) * z(i) - 10.0 * std::cos(2.0 * pi * z(i)) + 10.0;
            return s;
        case FunctionId::F8: {
            double prod = 1.0;
            for (std::size_t i = 0; i < n; ++i) {
                s += z(i) * z(i) / 4000.0;
                prod *= std::cos(z(i) / std::sqrt(double(i + 1)));
            }
            return s - prod + 1.0;
        }
        case FunctionId::F9: {
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                s += z(i) * z(i);
                c += std::cos(2.0 * pi * z(i));
            }
            const double dn = double(n);
            return -20.0 * std::exp(-0.2 * std::sqrt(s / dn)) - std::exp(c / dn) + 20.0 + std::exp(1.0);
        }
        case FunctionId::Arm:
            return arm_value(x);
        }
        throw ContractError("unknown function id");
    }

    double arm_value(std::span<const double> x) const
    {
        const ArmTask& task = *arm;
        if (task.mode == ArmMode::simple) {
            std::vector<double> lengths(task.segments, task.fixed_length);
            return arm_distance(lengths, x, task.target);
        }
        return arm_distance(x.subspan(0, task.segments), x.subspan(task.segments), task.target);
    }

    void raw_gradient(std::span<const double> x, std::span<double> g) const
    {
        using std::numbers::pi;
        using detail::sign;
        const std::size_t n = d;
        auto z = [&](std::size_t i) { return x[i] - shift[i]; };
        std::fill(g.begin(), g.end(), 0.0);
        switch (id) {
        case FunctionId::F1:
            for (std::size_t i = 0; i < n; ++i)
                g[i] = sign(weights[i] * std::sin(z(i))) * weights[i] * std::cos(z(i));
            return;
        case FunctionId::F2:
            for (std::size_t i = 0; i < n; ++i)
                g[i] = sign(z(i));
            return;
        case FunctionId::F3:
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double s = sign(z(i) + z(i + 1));
                g[i] += s;
                g[i + 1] += s;
            }
            for (std::size_t i = 0; i < n; ++i)
                g[i] += sign(z(i));
            return;
        case FunctionId::F4:
            for (std::size_t i = 0; i < n; ++i)
                g[i] = 2.0 * z(i);
            return;
        case FunctionId::F5: {
            std::size_t arg = 0;
            for (std::size_t i = 1; i < n; ++i)
                if (std::abs(z(i)) > std::abs(z(arg)))
                    arg = i;
            g[arg] = sign(z(arg));
            return;
        }
        case FunctionId::F6:
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double a = z(i) * z(i) - z(i + 1);
                g[i] += 400.0 * z(i) * a + 2.0 * (z(i) - 1.0);
                g[i + 1] += -200.0 * a;
            }
            return;
        case FunctionId::F7:
            for (std::size_t i = 0; i < n; ++i)
                g[i] = 2.0 * z(i) + 20.0 * pi * std::sin(2.0 * pi * z(i));
            return;
        case FunctionId::F8:
            for (std::size_t i = 0; i < n; ++i) {
                double others = 1.0;
                for (std::size_t j = 0; j < n; ++j)
                    if (j != i)
                        others *= std::cos(z(j) / std::sqrt(double(j + 1)));
                const double r = std::sqrt(double(i + 1));
                g[i] = z(i) / 2000.0 + others * std::sin(z(i) / r) / r;
            }
            return;
        case FunctionId::F9: {
            double s = 0.0, c = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                s += z(i) * z(i);
                c += std::cos(2.0 * pi * z(i));
            }
            const double dn = double(n);
            const double root = std::sqrt(s / dn);
            const double e1 = std::exp(-0.2 * root);
            const double e2 = std::exp(c / dn);
            for (std::size_t i = 0; i < n; ++i) {
                const double radial = root > 0.0 ? 4.0 * e1 * z(i) / (dn * root) : 0.0;
                g[i] = radial + e2 * 2.0 * pi * std::sin(2.0 * pi * z(i)) / dn;
            }
            return;
        }
        case FunctionId::Arm:
            arm_gradient(x, g);
            return;
        }
    }

    void arm_gradient(std::span<const double> x, std::span<double> g) const
    {
        const ArmTask& task = *arm;
        const std::size_t m = task.segments;
        const bool simple = task.mode == ArmMode::simple;
        auto length = [&](std::size_t i) { return simple ? task.fixed_length : x[i]; };
        auto angle = [&](std::size_t i) { return simple ? x[i] : x[m + i]; };
        double px = 0.0, py = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            px += std::cos(angle(i)) * length(i);
            py += std::sin(angle(i)) * length(i);
        }
        const double dx = px - task.target[0];
        const double dy = py - task.target[1];
        const double dist = std::sqrt(dx * dx + dy * dy);
        if (dist == 0.0)
            return;
        for (std::size_t i = 0; i < m; ++i) {
            const double c = std::cos(angle(i));
            const double s = std::sin(angle(i));
            const double d_angle = (-dx * s * length(i) + dy * c * length(i)) / dist;
            if (simple) {
                g[i] = d_angle;
            } else {
                g[i] = (dx * c + dy * s) / dist;
                g[m + i] = d_angle;
            }
        }
    }
};

/// Builds a suite instance with the table's box; no shift sampling.
inline ObjectiveInstance make_instance(FunctionId id, std::size_t d, std::vector<double> shift,
                                       std::vector<double> weights = {})
{
    if (id == FunctionId::Arm)
        throw ContractError("make_instance: use make_arm_instance for the arm task");
    if (d == 0)
        throw DimensionError("make_instance: d must be positive");
    if (shift.size() != d)
        throw DimensionError(fmt::format("make_instance: shift has {} entries for d={}", shift.size(), d));
    if (id == FunctionId::F1 && weights.size() != d)
        throw DimensionError(fmt::format("make_instance: F1 needs {} weights, got {}", d, weights.size()));
    const FunctionInfo& fi = info(id);
    ObjectiveInstance inst;
    inst.id = id;
    inst.d = d;
    inst.shift = std::move(shift);
    inst.weights = std::move(weights);
    inst.bounds = Bounds::uniform(d, fi.x_lower, fi.x_upper);
    inst.differentiable = fi.training;
    return inst;
}

inline ObjectiveInstance make_arm_instance(ArmMode mode, std::array<double, 2> target, std::size_t segments = 100)
{
    using std::numbers::pi;
    ArmTask task;
    task.mode = mode;
    task.segments = segments;
    task.target = target;
    ObjectiveInstance inst;
    inst.id = FunctionId::Arm;
    inst.d = task.dim();
    inst.shift.assign(inst.d, 0.0);
    if (mode == ArmMode::simple) {
        inst.bounds = Bounds::uniform(segments, -pi, pi);
    } else {
        inst.bounds = Bounds::uniform(2 * segments, -pi, pi);
        std::fill_n(inst.bounds.lower.begin(), segments, task.length_lower);
        std::fill_n(inst.bounds.upper.begin(), segments, task.length_upper);
    }
    inst.differentiable = true;
    inst.arm = task;
    return inst;
}

} // namespace b2opt::objectives
