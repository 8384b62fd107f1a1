#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "b2opt/baselines/random_search.hpp"
#include "b2opt/bench/config.hpp"
#include "b2opt/model/checkpoint.hpp"
#include "b2opt/model/run.hpp"
#include "b2opt/objectives/sampling.hpp"

namespace b2opt::bench {

/// One algorithm run on one task instance.
struct RunRecord {
    std::string algo;
    std::string task;
    std::size_t d = 0;
    std::size_t seed_index = 0;
    std::uint64_t seed = 0;
    baselines::Curve curve;  // entry 0 is the initial population
    double final_best = 0.0;
    std::uint64_t evals = 0;
    double wall_seconds = 0.0;
};

/// Per-run seeds: a master seed split by index.
inline std::vector<std::uint64_t> seed_list(std::uint64_t master, std::size_t count)
{
    std::vector<std::uint64_t> s(count);
    for (std::size_t k = 0; k < count; ++k)
        s[k] = derive_seed(master, {k});
    return s;
}

/// A b2opt algorithm resolved for one (n, d): either a model or the reason it is absent.
struct ResolvedModel {
    std::optional<model::B2OptModel> model;
    std::string absent_reason;
};

inline ResolvedModel resolve_model(const AlgoSpec& a, std::size_t n, std::size_t d)
{
    ResolvedModel r;
    if (a.untrained) {
        Rng rng(derive_seed(a.init_seed, {n, d}));
        r.model = model::init_model(a.untrained->config(n, d), rng);
        return r;
    }
    if (!std::filesystem::exists(a.checkpoint)) {
        r.absent_reason = fmt::format("checkpoint '{}' not found", a.checkpoint);
        return r;
    }
    model::B2OptModel m = model::load_model(a.checkpoint);
    try {
        model::expect_dimensions(m.config, n, d);
    } catch (const ConfigError& e) {
        r.absent_reason = e.what();
        return r;
    }
    r.model = std::move(m);
    return r;
}

/// Generations that fit into max_evals after the n initial evaluations.
inline std::size_t generations_within(std::uint64_t max_evals, std::size_t n, std::size_t per_gen)
{
    if (max_evals < n)
        throw ConfigError(fmt::format("run.max_evals={} is below the initial population n={}", max_evals, n));
    return std::size_t((max_evals - n) / per_gen);
}

/// Runs `algo` from X0 on f. For b2opt, `m` must be resolved.
inline RunRecord run_algorithm(const AlgoSpec& algo, const model::B2OptModel* m, const objectives::ObjectiveInstance& f,
                               Matrix X0, std::optional<std::uint64_t> max_evals, Rng& rng)
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = X0.rows();
    objectives::EvalCounter counter;
    RunRecord rec;
    rec.algo = algo.label;
    rec.d = f.d;
    switch (algo.kind) {
    case AlgoKind::b2opt: {
        if (!m)
            throw ContractError("run_algorithm: b2opt without a model");
        if (max_evals && (m->config.blocks + 1) * n > *max_evals)
            throw ConfigError(fmt::format("{}: a {}-block run needs {} evaluations, above run.max_evals={}",
                                          algo.label, m->config.blocks, (m->config.blocks + 1) * n, *max_evals));
        model::B2OptModel local = *m;
        const model::Population pop = model::make_population(f, std::move(X0), counter);
        const model::RunResult r = model::b2opt_run(local, pop, f, counter);
        for (std::size_t i = 0; i < r.best.size(); ++i)
            rec.curve.push(r.best[i], r.mean[i], r.evals[i]);
        rec.final_best = r.best.back();
        break;
    }
    case AlgoKind::de: {
        baselines::DEConfig c = algo.de;
        c.n = n;
        if (max_evals)
            c.max_gen = generations_within(*max_evals, n, n);
        const auto r = baselines::run_de(f, std::move(X0), c, counter, rng);
        rec.curve = r.curve;
        rec.final_best = r.best;
        break;
    }
    case AlgoKind::es: {
        baselines::ESConfig c = algo.es;
        if (max_evals)
            c.max_gen = generations_within(*max_evals, n, c.lambda);
        const auto r = baselines::run_es(f, std::move(X0), c, counter, rng);
        rec.curve = r.curve;
        rec.final_best = r.best;
        break;
    }
    case AlgoKind::ga: {
        baselines::GAOperatorsConfig c = algo.ga;
        if (max_evals)
            c.max_gen = generations_within(*max_evals, n, n);
        const auto r = baselines::run_ga(f, std::move(X0), c, counter, rng);
        rec.curve = r.curve;
        rec.final_best = r.best;
        break;
    }
    case AlgoKind::random: {
        const auto r = baselines::random_search(f, max_evals ? std::size_t(*max_evals) : algo.budget, counter, rng);
        rec.curve = r.curve;
        rec.final_best = r.best;
        break;
    }
    }
    rec.evals = counter.count();
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

/// Shifted instance of `id` for one seed, with the task's bound overrides applied.
inline objectives::ObjectiveInstance task_instance(const TaskSpec& task, objectives::FunctionId id, std::size_t d,
                                                   std::uint64_t seed)
{
    Rng rng(derive_seed(seed, {std::uint64_t(id), d}));
    objectives::ObjectiveInstance f = objectives::sample_instance(id, d, rng);
    if (task.lower || task.upper) {
        for (double& v : f.bounds.lower)
            v = task.lower.value_or(v);
        for (double& v : f.bounds.upper)
            v = task.upper.value_or(v);
        f.bounds.validate();
    }
    return f;
}

} // namespace b2opt::bench
