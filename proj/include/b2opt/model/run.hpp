#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <fmt/format.h>

#include "b2opt/model/blocks.hpp"

namespace b2opt::model {

/// Applies all t blocks on an existing tape (training path). `pop` must be sorted.
inline PopulationVar run_blocks(B2OptModel& model, PopulationVar pop, const objectives::ObjectiveInstance& f,
                                objectives::EvalCounter& counter)
{
    for (std::size_t i = 0; i < model.config.blocks; ++i)
        pop = ob_forward(pop, model.block(i), f, counter, model.config.ablation);
    return pop;
}

struct RunResult {
    Population final_population;
    std::vector<double> best;          // index 0 is the input population, then one entry per block
    std::vector<double> mean;
    std::vector<std::uint64_t> evals;  // counter value after each step
    std::vector<BlockTrace> traces;    // filled only when requested
};

inline void check_compatible(const B2OptModel& model, const Population& pop, const objectives::ObjectiveInstance& f)
{
    if (pop.size() != model.config.n || pop.dim() != model.config.d)
        throw ConfigError(fmt::format("model expects n={}, d={} but the population is {}x{}", model.config.n,
                                      model.config.d, pop.size(), pop.dim()));
    if (f.d != model.config.d)
        throw ConfigError(fmt::format("model expects d={} but the task has d={}", model.config.d, f.d));
    if (!pop.sorted)
        throw ContractError("b2opt_run: initial population must be evaluated and sorted");
}

/// Inference run: maps a sorted, evaluated population through the stack without recording
/// gradients. Charges n evaluations per block.
inline RunResult b2opt_run(B2OptModel& model, const Population& pop0, const objectives::ObjectiveInstance& f,
                           objectives::EvalCounter& counter, bool keep_traces = false)
{
    check_compatible(model, pop0, f);
    RunResult r;
    r.final_population = pop0;
    r.best.push_back(pop0.best());
    r.mean.push_back(pop0.mean());
    r.evals.push_back(counter.count());
    ad::Tape tape(ad::GradMode::disabled);
    for (std::size_t i = 0; i < model.config.blocks; ++i) {
        tape.clear();
        BlockTrace trace;
        PopulationVar out = ob_forward(to_tape(tape, r.final_population), model.block(i), f, counter,
                                       model.config.ablation, keep_traces ? &trace : nullptr);
        r.final_population = out.snapshot(true);
        r.best.push_back(r.final_population.best());
        r.mean.push_back(r.final_population.mean());
        r.evals.push_back(counter.count());
        if (keep_traces)
            r.traces.push_back(std::move(trace));
    }
    return r;
}

} // namespace b2opt::model
