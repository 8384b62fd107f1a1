#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "b2opt/ad/ops.hpp"
#include "b2opt/model/run.hpp"

namespace b2opt::training {

inline constexpr double loss_denominator_floor = 1e-8;

/// (mean(in) - mean(out)) / max(|mean(in)|, 1e-8). Positive when the output improved.
inline double improvement_loss(std::span<const double> fitness_in, std::span<const double> fitness_out)
{
    if (fitness_in.empty() || fitness_out.empty())
        throw ContractError("improvement_loss: empty fitness vector");
    auto mean_of = [](std::span<const double> v, const char* which) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i]))
                throw NumericError(fmt::format("improvement_loss: {} fitness {} is not finite", which, i));
            s += v[i];
        }
        return s / double(v.size());
    };
    const double mi = mean_of(fitness_in, "input");
    const double mo = mean_of(fitness_out, "output");
    return (mi - mo) / std::max(std::abs(mi), loss_denominator_floor);
}

/// Tape version; differentiable w.r.t. fitness_out only (the input fitness is data).
inline ad::Var improvement_loss(std::span<const double> fitness_in, ad::Var fitness_out)
{
    improvement_loss(fitness_in, fitness_out.value().values()); // finiteness checks
    double mi = 0.0;
    for (double v : fitness_in)
        mi += v;
    mi /= double(fitness_in.size());
    const double den = std::max(std::abs(mi), loss_denominator_floor);
    ad::Tape& t = fitness_out.tape();
    ad::Var gain = ad::sub(t.constant(Matrix::scalar(mi)), ad::mean(fitness_out));
    return ad::scale(gain, 1.0 / den);
}

/// -(1/K) sum_i l_i for K populations on one instance, built on `tape`.
inline ad::Var batch_loss(ad::Tape& tape, model::B2OptModel& m, const std::vector<model::Population>& batch,
                          const objectives::ObjectiveInstance& f, objectives::EvalCounter& counter)
{
    if (batch.empty())
        throw ContractError("batch_loss: empty minibatch");
    ad::Var total;
    for (const model::Population& pop : batch) {
        model::PopulationVar out = model::run_blocks(m, model::to_tape(tape, pop), f, counter);
        ad::Var li = improvement_loss(pop.fitness, out.fitness);
        total = total.valid() ? ad::add(total, li) : li;
    }
    return ad::scale(total, -1.0 / double(batch.size()));
}

} // namespace b2opt::training
