#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "b2opt/model/run.hpp"
#include "b2opt/objectives/sampling.hpp"
#include "b2opt/parallel.hpp"
#include "b2opt/training/adam.hpp"
#include "b2opt/training/loss.hpp"

namespace b2opt::training {

struct TrainConfig {
    double lr0 = 0.01;
    double lr_decay = 0.9;
    std::size_t decay_every = 100;
    std::size_t epochs = 1000;
    std::size_t batch = 16;  // K populations per function per epoch
    double clip_norm = 10.0;
    std::vector<objectives::FunctionId> functions{objectives::training_functions.begin(),
                                                  objectives::training_functions.end()};
    std::size_t d = 10;
    std::size_t n = 100;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    // Limits each function to this many distinct shifts (or arm targets), drawn once; 0 = fresh every time.
    std::size_t distinct_shifts = 0;
    // Arm family (used when functions contains Arm).
    objectives::ArmMode arm_mode = objectives::ArmMode::simple;
    double arm_r_max = 100.0;
    std::size_t arm_segments = 100;

    void validate() const
    {
        if (!(lr0 > 0.0) || !std::isfinite(lr0))
            throw ConfigError(fmt::format("train: lr0 must be positive, got {}", lr0));
        if (!(lr_decay > 0.0) || decay_every == 0)
            throw ConfigError("train: lr decay factor and period must be positive");
        if (batch == 0)
            throw ConfigError("train: batch K must be at least 1");
        if (!(clip_norm > 0.0))
            throw ConfigError(fmt::format("train: clip_norm must be positive, got {}", clip_norm));
        if (functions.empty())
            throw ConfigError("train: no training functions");
        if (n < 2 || d == 0)
            throw ConfigError(fmt::format("train: need n >= 2 and d >= 1 (n={}, d={})", n, d));
        for (auto f : functions)
            if (f == objectives::FunctionId::Arm) {
                const std::size_t want = arm_mode == objectives::ArmMode::simple ? arm_segments : 2 * arm_segments;
                if (d != want)
                    throw ConfigError(fmt::format("train: arm {} with {} segments has d={}, config says d={}",
                                                  objectives::to_string(arm_mode), arm_segments, want, d));
                if (!(arm_r_max > 0.0))
                    throw ConfigError("train: arm r_max must be positive");
            }
    }

    /// Epochs count from 1; the rate drops by lr_decay after every decay_every epochs.
    double lr_at(std::size_t epoch) const
    {
        const std::size_t k = epoch == 0 ? 0 : (epoch - 1) / decay_every;
        return lr0 * std::pow(lr_decay, double(k));
    }
};

struct LossRecord {
    std::size_t epoch = 0;
    std::string function;     // function name, or "all" for the epoch aggregate
    double mean_improvement;  // mean l_i over the K populations (over everything for "all")
    double objective;         // minimized quantity -(1/K) sum l_i (or the mean over functions)
    double grad_norm_pre;
    double grad_norm_post;
    double lr;
};

using LossSink = std::function<void(const LossRecord&)>;

struct TrainResult {
    std::vector<double> objective;  // per epoch, the multi-function objective
    std::uint64_t evaluations = 0;
};

namespace detail {

struct ItemResult {
    double improvement = 0.0;
    std::uint64_t evals = 0;
    std::vector<Matrix> grads;
};

inline objectives::ObjectiveInstance draw_instance(const TrainConfig& cfg, objectives::FunctionId id, Rng& rng)
{
    if (id == objectives::FunctionId::Arm) {
        const auto target = objectives::sample_arm_targets(cfg.arm_r_max, 1, rng).front();
        return objectives::make_arm_instance(cfg.arm_mode, target, cfg.arm_segments);
    }
    return objectives::sample_instance(id, cfg.d, rng);
}

} // namespace detail

/// Trains `m` in place. Each epoch draws, for every function and each of K populations, a fresh
/// shifted instance and initial population from seeds derived from (seed, epoch, function, k);
/// takes one Adam step on the gradient of -(1/(mK)) sum l_i after global-norm clipping.
inline TrainResult train(model::B2OptModel& m, const TrainConfig& cfg, const LossSink& sink = {})
{
    cfg.validate();
    if (m.config.n != cfg.n || m.config.d != cfg.d)
        throw ConfigError(fmt::format("train: model is n={}, d={} but the config asks for n={}, d={}", m.config.n,
                                      m.config.d, cfg.n, cfg.d));
    auto params = m.parameters();
    AdamState adam(params);
    const std::size_t nf = cfg.functions.size(), K = cfg.batch;
    const double weight = -1.0 / double(nf * K);

    std::vector<std::vector<objectives::ObjectiveInstance>> pools(nf);
    if (cfg.distinct_shifts > 0)
        for (std::size_t fi = 0; fi < nf; ++fi) {
            Rng rng(derive_seed(cfg.seed, {0x706f6f6cULL, fi}));
            for (std::size_t s = 0; s < cfg.distinct_shifts; ++s)
                pools[fi].push_back(detail::draw_instance(cfg, cfg.functions[fi], rng));
        }

    TrainResult result;
    std::vector<detail::ItemResult> items(nf * K);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cfg.lr_at(epoch);
        parallel_for(items.size(), cfg.threads, [&](std::size_t idx) {
            const std::size_t fi = idx / K, k = idx % K;
            const std::uint64_t item_seed = derive_seed(cfg.seed, {epoch, fi, k});
            try {
                Rng rng(item_seed);
                objectives::ObjectiveInstance inst =
                    pools[fi].empty() ? detail::draw_instance(cfg, cfg.functions[fi], rng)
                                      : pools[fi][std::uniform_int_distribution<std::size_t>(0, pools[fi].size() - 1)(rng)];
                objectives::EvalCounter counter;
                const model::Population pop =
                    model::make_population(inst, objectives::init_population(inst.bounds, cfg.n, rng), counter);
                ad::Tape tape;
                model::PopulationVar out = model::run_blocks(m, model::to_tape(tape, pop), inst, counter);
                ad::Var li = improvement_loss(pop.fitness, out.fitness);
                tape.backward_nodes(li, weight);
                detail::ItemResult r;
                r.improvement = li.value().item();
                r.evals = counter.count();
                r.grads.reserve(params.size());
                for (const ad::Parameter* p : params) {
                    const Matrix* g = tape.parameter_grad(*p);
                    r.grads.push_back(g ? *g : Matrix(p->value.rows(), p->value.cols()));
                }
                items[idx] = std::move(r);
            } catch (const NumericError& e) {
                throw NumericError(fmt::format("training diverged at epoch {}, function {}, item seed {}: {}", epoch,
                                               objectives::to_string(cfg.functions[fi]), item_seed, e.what()));
            }
        });

        // Fixed-order reduction keeps the update independent of the thread count.
        m.zero_grad();
        std::vector<double> per_function(nf, 0.0);
        double total = 0.0;
        for (std::size_t idx = 0; idx < items.size(); ++idx) {
            for (std::size_t p = 0; p < params.size(); ++p)
                params[p]->grad += items[idx].grads[p];
            per_function[idx / K] += items[idx].improvement;
            total += items[idx].improvement;
            result.evaluations += items[idx].evals;
        }
        const double objective = -total / double(nf * K);
        if (!std::isfinite(objective))
            throw NumericError(fmt::format("training objective is not finite at epoch {} (seed {})", epoch, cfg.seed));
        const ClipResult clip = clip_grad_norm(params, cfg.clip_norm);
        if (!std::isfinite(clip.norm_before))
            throw NumericError(fmt::format("gradient norm is not finite at epoch {} (seed {})", epoch, cfg.seed));
        adam_step(params, adam, lr);
        result.objective.push_back(objective);

        if (sink) {
            for (std::size_t fi = 0; fi < nf; ++fi) {
                const double mi = per_function[fi] / double(K);
                sink({epoch, std::string(objectives::to_string(cfg.functions[fi])), mi, -mi, clip.norm_before,
                      clip.norm_after, lr});
            }
            sink({epoch, "all", total / double(nf * K), objective, clip.norm_before, clip.norm_after, lr});
        }
    }
    return result;
}

/// Mean of the last `window` entries ending at index `end` (inclusive), clipped to the start.
inline double moving_average(const std::vector<double>& v, std::size_t end, std::size_t window)
{
    if (v.empty() || end >= v.size() || window == 0)
        throw ContractError("moving_average: index out of range");
    const std::size_t begin = end + 1 >= window ? end + 1 - window : 0;
    double s = 0.0;
    for (std::size_t i = begin; i <= end; ++i)
        s += v[i];
    return s / double(end + 1 - begin);
}

} // namespace b2opt::training
