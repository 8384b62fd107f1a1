#pragma once

#include <cmath>

#include <fmt/format.h>

#include "b2opt/baselines/common.hpp"

namespace b2opt::baselines {

/// Minimal comma-ES: isotropic per-coordinate sigma = sigma_scale * (upper - lower), no self-adaptation.
struct ESConfig {
    std::size_t lambda = 100;
    std::size_t mu = 50;  // 0.5 * lambda
    double sigma_scale = 0.1;
    std::size_t max_gen = 100;

    void validate() const
    {
        if (mu < 1 || mu > lambda)
            throw ConfigError(fmt::format("es: need 1 <= mu <= lambda (mu={}, lambda={})", mu, lambda));
        if (!(sigma_scale >= 0.0))
            throw ConfigError(fmt::format("es: sigma_scale must be non-negative, got {}", sigma_scale));
    }
};

/// One (mu, lambda) generation. Parents are drawn uniformly from the mu best of `pop`; the
/// returned population is the lambda offspring only, sorted, so its first mu rows are the survivors.
inline Population es_step(const Population& pop, const ESConfig& cfg, const objectives::ObjectiveInstance& f,
                          objectives::EvalCounter& counter, Rng& rng)
{
    cfg.validate();
    if (pop.size() < cfg.mu || pop.fitness.size() != pop.size())
        throw ContractError(fmt::format("es_step: need an evaluated population of at least mu={} rows", cfg.mu));
    const Population parents = pop.sorted ? pop : model::sort_population(pop).population;
    const std::size_t d = pop.dim();
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix kids(cfg.lambda, d);
    for (std::size_t i = 0; i < cfg.lambda; ++i) {
        const std::size_t p = uniform_index(rng, cfg.mu);
        auto k = kids.row_span(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double sigma = cfg.sigma_scale * (f.bounds.upper[j] - f.bounds.lower[j]);
            k[j] = parents.X(p, j) + sigma * gauss(rng);
        }
        clip_row(k, f.bounds);
    }
    return model::make_population(f, std::move(kids), counter);
}

/// Evaluates X0 then runs max_gen generations: rows(X0) + max_gen * lambda evaluations.
inline BaselineRun run_es(const objectives::ObjectiveInstance& f, Matrix X0, const ESConfig& cfg,
                          objectives::EvalCounter& counter, Rng& rng)
{
    cfg.validate();
    BaselineRun run;
    Population pop = model::make_population(f, std::move(X0), counter);
    track_best(run, pop);
    run.curve.push(run.best, pop.mean(), counter.count());
    for (std::size_t g = 0; g < cfg.max_gen; ++g) {
        pop = es_step(pop, cfg, f, counter, rng);
        track_best(run, pop);
        run.curve.push(run.best, pop.mean(), counter.count());
    }
    run.final_population = std::move(pop);
    return run;
}

} // namespace b2opt::baselines
