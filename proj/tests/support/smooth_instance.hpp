#pragma once

// Finds a (model, instance, populations) triple on which the training loss is locally smooth:
// every selection margin exceeds `margin`, no candidate coordinate is clipped, no F2 kink is
// within `margin`, and all fitness values are distinct, so finite differences are meaningful.

#include <cmath>
#include <optional>
#include <vector>

#include "b2opt/model/run.hpp"
#include "b2opt/objectives/sampling.hpp"
#include "b2opt/training/loss.hpp"
#include "support/fixtures.hpp"

namespace fixtures {

struct SmoothSetup {
    b2opt::model::B2OptModel model;
    b2opt::objectives::ObjectiveInstance instance;
    std::vector<b2opt::model::Population> batch;
    std::uint64_t seed = 0;
};

namespace detail {

inline bool block_is_smooth(const b2opt::model::Population& in, const b2opt::model::BlockTrace& tr,
                            const b2opt::model::OBParams& p, const b2opt::objectives::ObjectiveInstance& f, double margin)
{
    const std::size_t n = in.size(), d = in.dim();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> c(d);
        for (std::size_t k = 0; k < d; ++k) {
            c[k] = p.rssm.W1s.value[i] * in.X(i, k) + p.rssm.W2s.value[i] * tr.crossed(i, k) +
                   p.rssm.W3s.value[i] * tr.mutated(i, k);
            if (c[k] <= f.bounds.lower[k] + margin || c[k] >= f.bounds.upper[k] - margin)
                return false;
            if (std::abs(c[k] - f.shift[k]) < margin)
                return false;
        }
        if (std::abs(f.value(c) - in.fitness[i]) <= margin)
            return false;
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (tr.output_fitness[i + 1] - tr.output_fitness[i] <= margin)
            return false;
    return true;
}

} // namespace detail

inline std::optional<SmoothSetup> find_smooth_setup(const b2opt::model::ModelConfig& cfg, std::size_t K,
                                                    double margin = 1e-3, std::size_t max_tries = 2000)
{
    using namespace b2opt;
    for (std::uint64_t seed = 1; seed <= max_tries; ++seed) {
        Rng rng(derive_seed(0x5eed, {seed}));
        std::vector<model::OBParams> blocks;
        for (std::size_t b = 0; b < (cfg.weight_sharing ? 1 : cfg.blocks); ++b) {
            model::OBParams p = random_block(cfg, rng, 0.3);
            auto named = model::identity_block(cfg, b);
            auto dst = named.parameters();
            auto src = p.parameters();
            for (std::size_t k = 0; k < dst.size(); ++k)
                dst[k]->value = src[k]->value;
            blocks.push_back(std::move(named));
        }
        model::B2OptModel m(cfg, std::move(blocks));
        auto f = objectives::sample_training_instance(objectives::FunctionId::F2, cfg.d, rng);
        std::vector<model::Population> batch;
        bool ok = true;
        for (std::size_t k = 0; k < K && ok; ++k) {
            objectives::EvalCounter c;
            model::Population pop = model::make_population(f, objectives::init_population(f.bounds, cfg.n, rng), c);
            for (std::size_t i = 0; i + 1 < pop.size(); ++i)
                ok = ok && pop.fitness[i + 1] - pop.fitness[i] > margin;
            if (!ok)
                break;
            model::RunResult r = model::b2opt_run(m, pop, f, c, true);
            model::Population cur = pop;
            for (std::size_t b = 0; b < cfg.blocks && ok; ++b) {
                ok = detail::block_is_smooth(cur, r.traces[b], m.block(b), f, margin);
                cur = {r.traces[b].output, r.traces[b].output_fitness, true};
            }
            batch.push_back(std::move(pop));
        }
        if (ok)
            return SmoothSetup{std::move(m), std::move(f), std::move(batch), seed};
    }
    return std::nullopt;
}

} // namespace fixtures
