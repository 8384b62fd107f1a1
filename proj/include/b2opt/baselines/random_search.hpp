#pragma once

#include <fmt/format.h>

#include "b2opt/baselines/common.hpp"

namespace b2opt::baselines {

/// `budget` uniform samples evaluated one at a time. The curve holds best-so-far after each
/// evaluation (mean is the running mean of all samples).
inline BaselineRun random_search(const objectives::ObjectiveInstance& f, std::size_t budget,
                                 objectives::EvalCounter& counter, Rng& rng)
{
    if (budget < 1)
        throw ContractError("random_search: budget must be at least 1");
    f.bounds.validate();
    BaselineRun run;
    std::vector<double> x(f.d);
    double sum = 0.0;
    for (std::size_t s = 0; s < budget; ++s) {
        for (std::size_t j = 0; j < f.d; ++j)
            x[j] = uniform(rng, f.bounds.lower[j], f.bounds.upper[j]);
        const double v = f.value(x);
        counter.charge(1);
        sum += v;
        if (v < run.best) {
            run.best = v;
            run.best_x = x;
        }
        run.curve.push(run.best, sum / double(s + 1), counter.count());
    }
    run.final_population = {Matrix::row(run.best_x), {run.best}, true};
    return run;
}

} // namespace b2opt::baselines
