#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "b2opt/ad/tape.hpp"

namespace b2opt::ad {

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    // Worst error per parameter, in the order the parameters were passed.
    std::vector<double> per_parameter;
};

/// Builds the scalar loss on the given tape from the current parameter values.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares tape gradients against central differences for every entry of every parameter.
/// Error per entry is |analytic - numeric| / max(1, |numeric|).
inline GradCheckReport grad_check(const LossBuilder& build, const std::vector<Parameter*>& params, double eps)
{
    if (!(eps > 0.0))
        throw ContractError(fmt::format("grad_check: eps must be positive, got {}", eps));

    for (Parameter* p : params)
        p->zero_grad();
    {
        Tape tape;
        Var loss = build(tape);
        tape.backward(loss);
    }

    auto eval = [&build]() {
        Tape tape(GradMode::disabled);
        return build(tape).value().item();
    };

    GradCheckReport report;
    for (Parameter* p : params) {
        double worst = 0.0;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double orig = p->value[i];
            p->value[i] = orig + eps;
            const double up = eval();
            p->value[i] = orig - eps;
            const double down = eval();
            p->value[i] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double err = std::abs(p->grad[i] - numeric) / std::max(1.0, std::abs(numeric));
            worst = std::max(worst, err);
            if (report.worst_parameter.empty() || err > report.max_relative_error) {
                report.max_relative_error = err;
                report.worst_parameter = p->name;
                report.worst_index = i;
            }
        }
        report.per_parameter.push_back(worst);
    }
    return report;
}

} // namespace b2opt::ad
