#pragma once

#include <fmt/format.h>

#include "b2opt/baselines/common.hpp"

namespace b2opt::baselines {

struct DEConfig {
    std::size_t n = 100;
    double F = 0.5;
    double cr = 0.5;
    std::size_t max_gen = 100;

    void validate() const
    {
        if (n < 4)
            throw ConfigError(fmt::format("de: population must be at least 4, got {}", n));
        if (!(F > 0.0))
            throw ConfigError(fmt::format("de: F must be positive, got {}", F));
        if (!(cr >= 0.0 && cr <= 1.0))
            throw ConfigError(fmt::format("de: cr must lie in [0, 1], got {}", cr));
    }
};

/// DE/rand/1/bin generation: n trials, n evaluations, row-wise greedy replacement (ties go to the trial).
inline Population de_step(const Population& pop, const DEConfig& cfg, const objectives::ObjectiveInstance& f,
                          objectives::EvalCounter& counter, Rng& rng)
{
    const std::size_t n = pop.size(), d = pop.dim();
    if (n < 4)
        throw ContractError(fmt::format("de_step: population must be at least 4, got {}", n));
    if (pop.fitness.size() != n)
        throw ContractError("de_step: population is not evaluated");
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Matrix trials(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r1, r2, r3;
        do r1 = uniform_index(rng, n); while (r1 == i);
        do r2 = uniform_index(rng, n); while (r2 == i || r2 == r1);
        do r3 = uniform_index(rng, n); while (r3 == i || r3 == r1 || r3 == r2);
        const std::size_t jrand = uniform_index(rng, d);
        auto t = trials.row_span(i);
        for (std::size_t j = 0; j < d; ++j) {
            const bool cross = u01(rng) < cfg.cr || j == jrand;
            t[j] = cross ? pop.X(r1, j) + cfg.F * (pop.X(r2, j) - pop.X(r3, j)) : pop.X(i, j);
        }
        clip_row(t, f.bounds);
    }
    const Matrix ft = objectives::evaluate(f, trials, counter);
    Population next = pop;
    next.sorted = false;
    for (std::size_t i = 0; i < n; ++i)
        if (ft[i] <= pop.fitness[i]) {
            std::copy_n(trials.row_span(i).begin(), d, next.X.row_span(i).begin());
            next.fitness[i] = ft[i];
        }
    return next;
}

/// Evaluates X0 (n evaluations) then runs max_gen generations: (max_gen + 1) * n evaluations in total.
inline BaselineRun run_de(const objectives::ObjectiveInstance& f, Matrix X0, const DEConfig& cfg,
                          objectives::EvalCounter& counter, Rng& rng)
{
    cfg.validate();
    if (X0.rows() != cfg.n)
        throw ConfigError(fmt::format("de: initial population has {} rows, config says n={}", X0.rows(), cfg.n));
    BaselineRun run;
    Population pop = evaluate_population(f, std::move(X0), counter);
    track_best(run, pop);
    run.curve.push(run.best, pop.mean(), counter.count());
    for (std::size_t g = 0; g < cfg.max_gen; ++g) {
        pop = de_step(pop, cfg, f, counter, rng);
        track_best(run, pop);
        run.curve.push(run.best, pop.mean(), counter.count());
    }
    run.final_population = std::move(pop);
    return run;
}

} // namespace b2opt::baselines
