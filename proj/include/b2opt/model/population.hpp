#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "b2opt/ad/ops.hpp"
#include "b2opt/objectives/evaluate.hpp"

namespace b2opt::model {

/// Candidate solutions (rows of X) with their fitness. `sorted` means non-descending fitness.
struct Population {
    Matrix X;
    std::vector<double> fitness;
    bool sorted = false;

    std::size_t size() const { return X.rows(); }
    std::size_t dim() const { return X.cols(); }

    double best() const { return *std::min_element(fitness.begin(), fitness.end()); }

    double mean() const
    {
        double s = 0.0;
        for (double f : fitness)
            s += f;
        return s / double(fitness.size());
    }
};

/// Stable ascending order of `fitness`: result[i] is the source row placed at position i.
inline std::vector<std::size_t> sort_order(std::span<const double> fitness)
{
    for (std::size_t i = 0; i < fitness.size(); ++i)
        if (std::isnan(fitness[i]))
            throw NumericError(fmt::format("sort: fitness of row {} is NaN", i));
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
    return order;
}

struct SortedPopulation {
    Population population;
    std::vector<std::size_t> permutation;
};

inline SortedPopulation sort_population(const Population& pop)
{
    if (pop.fitness.size() != pop.X.rows())
        throw DimensionError(fmt::format("sort: {} fitness values for {} rows", pop.fitness.size(), pop.X.rows()));
    SortedPopulation out{{Matrix(pop.X.rows(), pop.X.cols()), std::vector<double>(pop.fitness.size()), true},
                         sort_order(pop.fitness)};
    for (std::size_t i = 0; i < out.permutation.size(); ++i) {
        const std::size_t src = out.permutation[i];
        std::copy_n(pop.X.row_span(src).begin(), pop.X.cols(), out.population.X.row_span(i).begin());
        out.population.fitness[i] = pop.fitness[src];
    }
    return out;
}

/// Evaluates X under f (charging n) and returns it sorted.
inline Population make_population(const objectives::ObjectiveInstance& f, Matrix X, objectives::EvalCounter& counter)
{
    Matrix fit = objectives::evaluate(f, X, counter);
    Population pop{std::move(X), std::move(fit.values()), false};
    return sort_population(pop).population;
}

/// Min-max map onto [0, 1]; a constant vector maps to zeros.
inline std::vector<double> normalize_fitness(std::span<const double> fitness)
{
    if (fitness.size() < 2)
        throw ContractError(fmt::format("normalize_fitness: need at least 2 values, got {}", fitness.size()));
    for (std::size_t i = 0; i < fitness.size(); ++i)
        if (!std::isfinite(fitness[i]))
            throw NumericError(fmt::format("normalize_fitness: value {} is not finite", i));
    const auto [lo, hi] = std::minmax_element(fitness.begin(), fitness.end());
    const double range = *hi - *lo;
    std::vector<double> out(fitness.size(), 0.0);
    if (range > 0.0)
        for (std::size_t i = 0; i < fitness.size(); ++i)
            out[i] = (fitness[i] - *lo) / range;
    return out;
}

/// Population living on a tape: X is n x d, fitness is n x 1.
struct PopulationVar {
    ad::Var X;
    ad::Var fitness;

    Population snapshot(bool sorted = true) const { return {X.value(), fitness.value().values(), sorted}; }
};

inline PopulationVar to_tape(ad::Tape& tape, const Population& pop)
{
    return {tape.constant(pop.X), tape.constant(Matrix::column(pop.fitness))};
}

/// Sorts rows by fitness on the tape. The permutation is a constant; values carry gradients.
inline PopulationVar sort_population(PopulationVar pop, std::vector<std::size_t>* permutation = nullptr)
{
    auto order = sort_order(pop.fitness.value().values());
    if (permutation)
        *permutation = order;
    ad::Var X = ad::gather_rows(pop.X, order);
    ad::Var F = ad::gather_rows(pop.fitness, std::move(order));
    return {X, F};
}

} // namespace b2opt::model
