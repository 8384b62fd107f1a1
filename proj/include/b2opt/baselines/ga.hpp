#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "b2opt/baselines/common.hpp"

namespace b2opt::baselines {

struct GAOperatorsConfig {
    double cr = 0.5;   // per-coordinate donor copy probability
    double mr = 0.1;   // per-coordinate random reset probability
    double eta = 20.0; // polynomial-mutation distribution index
    std::size_t max_gen = 100;

    void validate() const
    {
        if (!(cr >= 0.0 && cr <= 1.0) || !(mr >= 0.0 && mr <= 1.0))
            throw ConfigError(fmt::format("ga: cr and mr must lie in [0, 1] (cr={}, mr={})", cr, mr));
        if (!(eta > 0.0))
            throw ConfigError(fmt::format("ga: eta must be positive, got {}", eta));
    }
};

/// Uniform crossover over random disjoint pairs: child i copies coordinate k from its partner with
/// probability cr. With odd n the last shuffled individual is copied unchanged.
inline Matrix uniform_crossover(const Matrix& X, double cr, Rng& rng)
{
    const std::size_t n = X.rows(), d = X.cols();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Matrix out = X;
    for (std::size_t p = 0; p + 1 < n; p += 2) {
        const std::size_t a = order[p], b = order[p + 1];
        for (std::size_t k = 0; k < d; ++k)
            if (u01(rng) < cr)
                out(a, k) = X(b, k);
        for (std::size_t k = 0; k < d; ++k)
            if (u01(rng) < cr)
                out(b, k) = X(a, k);
    }
    return out;
}

/// Each coordinate is redrawn uniformly in its bounds with probability mr.
inline Matrix random_reset_mutation(Matrix X, double mr, const objectives::Bounds& b, Rng& rng)
{
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t k = 0; k < X.cols(); ++k)
            if (u01(rng) < mr)
                X(i, k) = uniform(rng, b.lower[k], b.upper[k]);
    return X;
}

/// n binary tournaments drawn from the union of parents and offspring; the lower fitness wins,
/// a tie keeps the first drawn.
inline Population binary_tournament(const Population& parents, const Population& offspring, Rng& rng)
{
    const std::size_t n = parents.size(), d = parents.dim();
    const std::size_t pool = n + offspring.size();
    auto row = [&](std::size_t i) { return i < n ? parents.X.row_span(i) : offspring.X.row_span(i - n); };
    auto fit = [&](std::size_t i) { return i < n ? parents.fitness[i] : offspring.fitness[i - n]; };
    Population out{Matrix(n, d), std::vector<double>(n), false};
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t a = uniform_index(rng, pool);
        std::size_t b;
        do b = uniform_index(rng, pool); while (b == a);
        const std::size_t w = fit(b) < fit(a) ? b : a;
        std::copy_n(row(w).begin(), d, out.X.row_span(s).begin());
        out.fitness[s] = fit(w);
    }
    return out;
}

/// Crossover -> random-reset mutation -> evaluation (n) -> tournament over parents and offspring.
inline Population ga_operators(const Population& pop, const GAOperatorsConfig& cfg,
                               const objectives::ObjectiveInstance& f, objectives::EvalCounter& counter, Rng& rng)
{
    cfg.validate();
    Matrix kids = random_reset_mutation(uniform_crossover(pop.X, cfg.cr, rng), cfg.mr, f.bounds, rng);
    const Population offspring = evaluate_population(f, std::move(kids), counter);
    return binary_tournament(pop, offspring, rng);
}

inline BaselineRun run_ga(const objectives::ObjectiveInstance& f, Matrix X0, const GAOperatorsConfig& cfg,
                          objectives::EvalCounter& counter, Rng& rng)
{
    cfg.validate();
    BaselineRun run;
    Population pop = evaluate_population(f, std::move(X0), counter);
    track_best(run, pop);
    run.curve.push(run.best, pop.mean(), counter.count());
    for (std::size_t g = 0; g < cfg.max_gen; ++g) {
        pop = ga_operators(pop, cfg, f, counter, rng);
        track_best(run, pop);
        run.curve.push(run.best, pop.mean(), counter.count());
    }
    run.final_population = std::move(pop);
    return run;
}

/// Bounded polynomial mutation with distribution index eta, applied per coordinate with
/// probability mr (mr < 0 means 1/d).
inline Matrix polynomial_mutation(Matrix X, double eta, double mr, const objectives::Bounds& b, Rng& rng)
{
    if (!(eta > 0.0))
        throw ContractError(fmt::format("polynomial_mutation: eta must be positive, got {}", eta));
    b.validate();
    const double p = mr < 0.0 ? 1.0 / double(X.cols()) : mr;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double pw = 1.0 / (eta + 1.0);
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t k = 0; k < X.cols(); ++k) {
            if (!(u01(rng) < p))
                continue;
            const double lo = b.lower[k], hi = b.upper[k], range = hi - lo;
            if (!(range > 0.0))
                continue;
            const double y = std::clamp(X(i, k), lo, hi);
            const double d1 = (y - lo) / range, d2 = (hi - y) / range;
            const double r = u01(rng);
            double dq;
            if (r < 0.5) {
                const double v = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
                dq = std::pow(v, pw) - 1.0;
            } else {
                const double v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
                dq = 1.0 - std::pow(v, pw);
            }
            X(i, k) = std::clamp(y + dq * range, lo, hi);
        }
    return X;
}

} // namespace b2opt::baselines
