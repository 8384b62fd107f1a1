#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "b2opt/model/population.hpp"
#include "b2opt/random.hpp"

namespace b2opt::baselines {

using model::Population;

/// Per-step record. Entry 0 is the initial population; `best` is best-so-far, `mean` is the current population.
struct Curve {
    std::vector<double> best;
    std::vector<double> mean;
    std::vector<std::uint64_t> evals;

    void push(double best_so_far, double mean_now, std::uint64_t evals_now)
    {
        best.push_back(best_so_far);
        mean.push_back(mean_now);
        evals.push_back(evals_now);
    }
};

struct BaselineRun {
    Population final_population;
    Curve curve;
    std::vector<double> best_x;
    double best = std::numeric_limits<double>::infinity();
};

inline void clip_row(std::span<double> x, const objectives::Bounds& b)
{
    for (std::size_t j = 0; j < x.size(); ++j)
        x[j] = std::clamp(x[j], b.lower[j], b.upper[j]);
}

/// Updates best/best_x from every row of pop.
inline void track_best(BaselineRun& run, const Population& pop)
{
    for (std::size_t i = 0; i < pop.size(); ++i)
        if (pop.fitness[i] < run.best) {
            run.best = pop.fitness[i];
            auto r = pop.X.row_span(i);
            run.best_x.assign(r.begin(), r.end());
        }
}

/// Evaluated but unsorted population.
inline Population evaluate_population(const objectives::ObjectiveInstance& f, Matrix X, objectives::EvalCounter& counter)
{
    Matrix fit = objectives::evaluate(f, X, counter);
    return {std::move(X), std::move(fit.values()), false};
}

inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

} // namespace b2opt::baselines
