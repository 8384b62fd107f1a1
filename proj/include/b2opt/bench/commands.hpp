#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "b2opt/bench/csv.hpp"
#include "b2opt/bench/manifest.hpp"
#include "b2opt/bench/runner.hpp"
#include "b2opt/bench/stats.hpp"
#include "b2opt/parallel.hpp"
#include "b2opt/training/trainer.hpp"

// The six CLI subcommands. Each writes its data files plus manifest.json into the output
// directory; data files depend only on the config and the master seed.

namespace b2opt::bench {

struct Options {
    std::filesystem::path out;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// Command-line values win over the config's run section.
inline Options resolve_options(const ExperimentConfig& cfg, std::optional<std::string> out,
                               std::optional<std::uint64_t> seed, std::optional<std::size_t> threads)
{
    Options o;
    o.out = out.value_or(cfg.run.out);
    o.seed = seed.value_or(cfg.run.seed);
    o.threads = std::max<std::size_t>(1, threads.value_or(cfg.run.threads));
    return o;
}

struct CommandResult {
    std::vector<std::string> files;  // relative to the output directory, manifest excluded
    std::vector<std::string> lines;  // human-readable summary
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline std::vector<objectives::FunctionId> default_test_functions(const TaskSpec& task)
{
    if (!task.functions.empty())
        return task.functions;
    return {objectives::test_functions.begin(), objectives::test_functions.end()};
}

inline void finish(const Options& o, Manifest& m, const CommandResult& r, Clock::time_point t0)
{
    m.files = r.files;
    m.write(o.out / "manifest.json", std::chrono::duration<double>(Clock::now() - t0).count());
}

struct GridCell {
    std::size_t algo;
    objectives::FunctionId function;
    std::size_t d;
    std::string absent;  // non-empty when the cell could not run
    std::vector<RunRecord> runs;
};

inline std::vector<GridCell> run_grid(const std::vector<AlgoSpec>& algos, const TaskSpec& task,
                                      const std::vector<objectives::FunctionId>& functions,
                                      const std::vector<std::size_t>& dims, std::size_t n,
                                      const std::vector<std::uint64_t>& seeds, std::optional<std::uint64_t> max_evals,
                                      std::size_t threads, bool tolerate_absent)
{
    if (algos.empty())
        throw ConfigError("no algorithms configured (algo or algos section)");
    std::vector<GridCell> cells;
    std::map<std::pair<std::size_t, std::size_t>, ResolvedModel> models;
    for (std::size_t a = 0; a < algos.size(); ++a)
        for (auto fid : functions)
            for (std::size_t d : dims) {
                GridCell c{a, fid, d, {}, {}};
                if (algos[a].kind == AlgoKind::b2opt) {
                    auto key = std::make_pair(a, d);
                    if (!models.count(key))
                        models[key] = resolve_model(algos[a], n, d);
                    c.absent = models[key].absent_reason;
                    if (!c.absent.empty() && !tolerate_absent)
                        throw ConfigError(fmt::format("{}: {}", algos[a].label, c.absent));
                }
                c.runs.resize(c.absent.empty() ? seeds.size() : 0);
                cells.push_back(std::move(c));
            }
    std::vector<std::pair<std::size_t, std::size_t>> items;
    for (std::size_t i = 0; i < cells.size(); ++i)
        for (std::size_t k = 0; k < cells[i].runs.size(); ++k)
            items.emplace_back(i, k);
    parallel_for(items.size(), threads, [&](std::size_t j) {
        auto [i, k] = items[j];
        GridCell& c = cells[i];
        const AlgoSpec& algo = algos[c.algo];
        const std::uint64_t s = seeds[k];
        const auto f = task_instance(task, c.function, c.d, s);
        Rng xr(derive_seed(s, {std::uint64_t(c.function), c.d, 1}));
        Matrix X0 = objectives::init_population(f.bounds, n, xr);
        Rng rng(derive_seed(s, {std::uint64_t(c.function), c.d, 2}));
        const model::B2OptModel* m = nullptr;
        if (algo.kind == AlgoKind::b2opt)
            m = &*models.at({c.algo, c.d}).model;
        RunRecord r = run_algorithm(algo, m, f, std::move(X0), max_evals, rng);
        r.task = std::string(objectives::to_string(c.function));
        r.seed_index = k;
        r.seed = s;
        c.runs[k] = std::move(r);
    });
    return cells;
}

inline void write_grid(const Options& o, const std::vector<AlgoSpec>& algos, const std::vector<GridCell>& cells,
                       const std::string& summary_name, const std::string& algo_column, CommandResult& res,
                       Manifest& m)
{
    CsvTable runs({algo_column, "task", "d", "seed_index", "seed", "final_best", "evals"});
    CsvTable curves({algo_column, "task", "d", "seed_index", "step", "evals", "best", "mean"});
    CsvTable summary({algo_column, "task", "d", "status", "runs", "mean", "std", "mean_std", "evals_per_run"});
    nlohmann::json walls = nlohmann::json::array();
    for (const GridCell& c : cells) {
        const std::string label = algos[c.algo].label;
        const std::string task(objectives::to_string(c.function));
        if (!c.absent.empty()) {
            summary.add(label, task, c.d, "absent: " + c.absent, 0, "", "", "", "");
            res.lines.push_back(fmt::format("{:<16} {:<4} d={:<4} absent ({})", label, task, c.d, c.absent));
            continue;
        }
        std::vector<double> finals;
        for (const RunRecord& r : c.runs) {
            runs.add(label, task, c.d, r.seed_index, r.seed, r.final_best, r.evals);
            for (std::size_t s = 0; s < r.curve.best.size(); ++s)
                curves.add(label, task, c.d, r.seed_index, s, r.curve.evals[s], r.curve.best[s], r.curve.mean[s]);
            finals.push_back(r.final_best);
            walls.push_back({{"algo", label}, {"task", task}, {"d", c.d}, {"seed_index", r.seed_index},
                             {"seconds", r.wall_seconds}});
        }
        const StatSummary st = summarize(finals);
        summary.add(label, task, c.d, "ok", st.runs, st.mean, st.std, mean_std(st), c.runs.front().evals);
        res.lines.push_back(fmt::format("{:<16} {:<4} d={:<4} {}  ({} evals/run)", label, task, c.d, mean_std(st),
                                        c.runs.front().evals));
    }
    runs.write(o.out / "runs.csv");
    curves.write(o.out / "curves.csv");
    summary.write(o.out / summary_name);
    res.files.insert(res.files.end(), {"runs.csv", "curves.csv", summary_name});
    m.extra["run_wall_seconds"] = walls;
}

/// Trains a fresh model and returns it with the per-epoch loss table.
inline model::B2OptModel train_model(const ModelSpec& spec, const training::TrainConfig& base, std::uint64_t seed,
                                     std::size_t threads, CsvTable& loss)
{
    training::TrainConfig tc = base;
    tc.seed = seed;
    tc.threads = threads;
    Rng init(derive_seed(seed, {0x1417}));
    model::B2OptModel m = model::init_model(spec.config(tc.n, tc.d), init);
    std::vector<double> per_function;
    training::train(m, tc, [&](const training::LossRecord& r) {
        if (r.function != "all") {
            per_function.push_back(r.mean_improvement);
            return;
        }
        std::vector<std::string> row{to_cell(r.epoch),          to_cell(r.lr),
                                     to_cell(r.objective),      to_cell(r.grad_norm_pre),
                                     to_cell(r.grad_norm_post), to_cell(r.mean_improvement)};
        for (double v : per_function)
            row.push_back(to_cell(v));
        loss.add_row(row);
        per_function.clear();
    });
    return m;
}

inline CsvTable loss_table(const training::TrainConfig& tc)
{
    std::vector<std::string> h{"epoch", "lr", "objective", "grad_norm_pre", "grad_norm_post", "mean_improvement"};
    for (auto f : tc.functions)
        h.push_back(fmt::format("improvement_{}", objectives::to_string(f)));
    return CsvTable(h);
}

inline void require_train(const ExperimentConfig& cfg)
{
    if (!cfg.train.present)
        throw ConfigError("this command needs a train section");
}

} // namespace detail

inline CommandResult cmd_train(const ExperimentConfig& cfg, const Options& o)
{
    const auto t0 = detail::Clock::now();
    detail::require_train(cfg);
    Manifest man{"train", cfg.source, o.seed, {o.seed}, o.threads};
    CommandResult res;
    CsvTable loss = detail::loss_table(cfg.train.train);
    const model::B2OptModel m = detail::train_model(cfg.train.model, cfg.train.train, o.seed, o.threads, loss);
    model::save_model(m, o.out / cfg.train.checkpoint);
    loss.write(o.out / "loss.csv");
    res.files = {cfg.train.checkpoint, "loss.csv"};
    res.lines.push_back(fmt::format("trained {} epochs; checkpoint {}", loss.data_rows(),
                                    (o.out / cfg.train.checkpoint).string()));
    detail::finish(o, man, res, t0);
    return res;
}

inline CommandResult cmd_optimize(const ExperimentConfig& cfg, const Options& o)
{
    const auto t0 = detail::Clock::now();
    if (cfg.task.functions.empty())
        throw ConfigError("optimize: task.function is required");
    const auto seeds = seed_list(o.seed, cfg.run.seeds);
    Manifest man{"optimize", cfg.source, o.seed, seeds, o.threads};
    CommandResult res;
    const auto cells = detail::run_grid(cfg.algos, cfg.task, cfg.task.functions, cfg.task.dims, cfg.run.n, seeds,
                                        cfg.run.max_evals, o.threads, false);
    detail::write_grid(o, cfg.algos, cells, "summary.csv", "algo", res, man);
    detail::finish(o, man, res, t0);
    return res;
}

/// Grid of algorithms x test functions x dimensions. A missing or mismatched checkpoint marks
/// its cells absent and the rest of the grid still runs.
inline CommandResult cmd_bench(const ExperimentConfig& cfg, const Options& o)
{
    const auto t0 = detail::Clock::now();
    const auto seeds = seed_list(o.seed, cfg.run.seeds);
    Manifest man{"bench", cfg.source, o.seed, seeds, o.threads};
    CommandResult res;
    const auto cells = detail::run_grid(cfg.algos, cfg.task, detail::default_test_functions(cfg.task), cfg.task.dims,
                                        cfg.run.n, seeds, cfg.run.max_evals, o.threads, true);
    detail::write_grid(o, cfg.algos, cells, "summary.csv", "algo", res, man);
    detail::finish(o, man, res, t0);
    return res;
}

/// Mean arm distance over task.targets targets per (algo, mode, r). Targets for a given r are
/// shared by all algorithms and both modes.
inline CommandResult cmd_arm(const ExperimentConfig& cfg, const Options& o)
{
    const auto t0 = detail::Clock::now();
    if (cfg.algos.empty())
        throw ConfigError("arm: no algorithms configured");
    const TaskSpec& task = cfg.task;
    const std::size_t n = cfg.run.n;
    Manifest man{"arm", cfg.source, o.seed, {o.seed}, o.threads};
    CommandResult res;

    std::vector<std::vector<std::array<double, 2>>> targets;
    for (std::size_t ri = 0; ri < task.radii.size(); ++ri) {
        Rng rng(derive_seed(o.seed, {ri}));
        targets.push_back(objectives::sample_arm_targets(task.radii[ri], task.targets, rng));
    }
    struct Cell {
        std::size_t algo, mode, radius;
        std::string absent;
        std::optional<model::B2OptModel> model;
        std::vector<RunRecord> runs;
    };
    std::vector<Cell> cells;
    for (std::size_t a = 0; a < cfg.algos.size(); ++a)
        for (std::size_t mi = 0; mi < task.arm_modes.size(); ++mi)
            for (std::size_t ri = 0; ri < task.radii.size(); ++ri) {
                Cell c{a, mi, ri, {}, {}, {}};
                if (cfg.algos[a].kind == AlgoKind::b2opt) {
                    const std::size_t d = task.arm_modes[mi] == objectives::ArmMode::simple ? task.segments
                                                                                           : 2 * task.segments;
                    ResolvedModel rm = resolve_model(cfg.algos[a], n, d);
                    c.absent = rm.absent_reason;
                    c.model = std::move(rm.model);
                }
                c.runs.resize(c.absent.empty() ? task.targets : 0);
                cells.push_back(std::move(c));
            }
    std::vector<std::pair<std::size_t, std::size_t>> items;
    for (std::size_t i = 0; i < cells.size(); ++i)
        for (std::size_t k = 0; k < cells[i].runs.size(); ++k)
            items.emplace_back(i, k);
    parallel_for(items.size(), o.threads, [&](std::size_t j) {
        auto [i, k] = items[j];
        Cell& c = cells[i];
        const auto mode = task.arm_modes[c.mode];
        const auto f = objectives::make_arm_instance(mode, targets[c.radius][k], task.segments);
        Rng xr(derive_seed(o.seed, {std::uint64_t(mode), c.radius, k, 1}));
        Matrix X0 = objectives::init_population(f.bounds, n, xr);
        Rng rng(derive_seed(o.seed, {std::uint64_t(mode), c.radius, k, 2}));
        RunRecord r = run_algorithm(cfg.algos[c.algo], c.model ? &*c.model : nullptr, f, std::move(X0),
                                    cfg.run.max_evals, rng);
        r.task = fmt::format("arm-{}-r{}", objectives::to_string(mode), task.radii[c.radius]);
        r.seed_index = k;
        c.runs[k] = std::move(r);
    });

    CsvTable runs({"algo", "mode", "r", "target_index", "target_x", "target_y", "distance", "evals"});
    CsvTable summary({"algo", "mode", "r", "status", "targets", "mean", "std", "mean_std", "evals_per_run"});
    nlohmann::json walls = nlohmann::json::array();
    for (const Cell& c : cells) {
        const std::string label = cfg.algos[c.algo].label;
        const std::string mode(objectives::to_string(task.arm_modes[c.mode]));
        const double r = task.radii[c.radius];
        if (!c.absent.empty()) {
            summary.add(label, mode, r, "absent: " + c.absent, 0, "", "", "", "");
            res.lines.push_back(fmt::format("{:<16} {:<7} r={:<6} absent ({})", label, mode, r, c.absent));
            continue;
        }
        std::vector<double> finals;
        for (const RunRecord& rec : c.runs) {
            const auto& t = targets[c.radius][rec.seed_index];
            runs.add(label, mode, r, rec.seed_index, t[0], t[1], rec.final_best, rec.evals);
            finals.push_back(rec.final_best);
            walls.push_back({{"algo", label}, {"task", rec.task}, {"target", rec.seed_index},
                             {"seconds", rec.wall_seconds}});
        }
        const StatSummary st = summarize(finals);
        summary.add(label, mode, r, "ok", st.runs, st.mean, st.std, mean_std(st), c.runs.front().evals);
        res.lines.push_back(fmt::format("{:<16} {:<7} r={:<6} {}", label, mode, r, mean_std(st)));
    }
    runs.write(o.out / "arm_runs.csv");
    summary.write(o.out / "arm.csv");
    res.files = {"arm_runs.csv", "arm.csv"};
    man.extra["run_wall_seconds"] = walls;
    detail::finish(o, man, res, t0);
    return res;
}

/// Trains every ablation variant with the same seed and settings, then evaluates each on the
/// test functions over the seed list.
inline CommandResult cmd_ablate(const ExperimentConfig& cfg, const Options& o)
{
    const auto t0 = detail::Clock::now();
    detail::require_train(cfg);
    std::vector<model::Ablation> variants = cfg.variants;
    if (variants.empty())
        for (const char* v : {"full", "not_sac", "not_fm", "not_rc", "not_rssm"})
            variants.push_back(model::Ablation::from_name(v));
    const auto seeds = seed_list(o.seed, cfg.run.seeds);
    Manifest man{"ablate", cfg.source, o.seed, seeds, o.threads};
    CommandResult res;
    std::vector<AlgoSpec> algos;
    for (const model::Ablation& v : variants) {
        ModelSpec spec = cfg.train.model;
        spec.ablation = v;
        CsvTable loss = detail::loss_table(cfg.train.train);
        const model::B2OptModel m = detail::train_model(spec, cfg.train.train, o.seed, o.threads, loss);
        const std::string ckpt = fmt::format("ablate/{}.ckpt", v.name());
        const std::string loss_name = fmt::format("ablate/loss_{}.csv", v.name());
        model::save_model(m, o.out / ckpt);
        loss.write(o.out / loss_name);
        res.files.insert(res.files.end(), {ckpt, loss_name});
        AlgoSpec a;
        a.kind = AlgoKind::b2opt;
        a.label = v.name();
        a.checkpoint = (o.out / ckpt).string();
        algos.push_back(a);
    }
    const auto cells = detail::run_grid(algos, cfg.task, detail::default_test_functions(cfg.task),
                                        {cfg.train.train.d}, cfg.train.train.n, seeds, std::nullopt, o.threads, false);
    detail::write_grid(o, algos, cells, "ablation.csv", "variant", res, man);
    detail::finish(o, man, res, t0);
    return res;
}

/// Per-block effective attention, populations around FM, and the t+1 population snapshots of
/// one run of the first b2opt algorithm on the first task function and dimension.
inline CommandResult cmd_export_viz(const ExperimentConfig& cfg, const Options& o)
{
    const auto t0 = detail::Clock::now();
    const AlgoSpec* algo = nullptr;
    for (const AlgoSpec& a : cfg.algos)
        if (a.kind == AlgoKind::b2opt) {
            algo = &a;
            break;
        }
    if (!algo)
        throw ConfigError("export-viz: needs a b2opt algorithm");
    if (cfg.task.functions.empty())
        throw ConfigError("export-viz: task.function is required");
    const auto fid = cfg.task.functions.front();
    const std::size_t d = cfg.task.dims.front(), n = cfg.run.n;
    ResolvedModel rm = resolve_model(*algo, n, d);
    if (!rm.model)
        throw ConfigError(fmt::format("export-viz: {}", rm.absent_reason));
    const std::uint64_t s = seed_list(o.seed, 1).front();
    Manifest man{"export-viz", cfg.source, o.seed, {s}, o.threads};
    CommandResult res;

    const auto f = task_instance(cfg.task, fid, d, s);
    Rng xr(derive_seed(s, {std::uint64_t(fid), d, 1}));
    objectives::EvalCounter counter;
    const model::Population pop = model::make_population(f, objectives::init_population(f.bounds, n, xr), counter);
    const model::RunResult run = model::b2opt_run(*rm.model, pop, f, counter, true);

    std::vector<std::string> ah{"block", "row"};
    for (std::size_t j = 0; j < n; ++j)
        ah.push_back(fmt::format("a{}", j));
    std::vector<std::string> xh{"row"};
    for (std::size_t k = 0; k < d; ++k)
        xh.push_back(fmt::format("x{}", k));
    auto header = [&](std::initializer_list<const char*> front, bool fitness) {
        std::vector<std::string> h(front.begin(), front.end());
        h.insert(h.end(), xh.begin(), xh.end());
        if (fitness)
            h.insert(h.begin() + std::ptrdiff_t(front.size()) + 1, "fitness");
        return h;
    };
    CsvTable attention(ah);
    CsvTable fm(header({"block", "stage"}, false));
    CsvTable snaps(header({"step"}, true));
    auto add_rows = [](CsvTable& t, std::vector<std::string> prefix, const Matrix& X, const double* fit) {
        for (std::size_t i = 0; i < X.rows(); ++i) {
            std::vector<std::string> row = prefix;
            row.push_back(to_cell(i));
            if (fit)
                row.push_back(to_cell(fit[i]));
            for (double v : X.row_span(i))
                row.push_back(to_cell(v));
            t.add_row(row);
        }
    };
    add_rows(snaps, {"0"}, pop.X, pop.fitness.data());
    for (std::size_t b = 0; b < run.traces.size(); ++b) {
        const model::BlockTrace& tr = run.traces[b];
        add_rows(attention, {to_cell(b)}, tr.attention, nullptr);
        add_rows(fm, {to_cell(b), "before_fm"}, tr.crossed, nullptr);
        add_rows(fm, {to_cell(b), "after_fm"}, tr.mutated, nullptr);
        add_rows(snaps, {to_cell(b + 1)}, tr.output, tr.output_fitness.data());
    }
    attention.write(o.out / "attention.csv");
    fm.write(o.out / "fm_populations.csv");
    snaps.write(o.out / "snapshots.csv");
    res.files = {"attention.csv", "fm_populations.csv", "snapshots.csv"};
    res.lines.push_back(fmt::format("exported {} blocks of {} on {} d={} (best {} -> {})", run.traces.size(),
                                    algo->label, objectives::to_string(fid), d, run.best.front(), run.best.back()));
    detail::finish(o, man, res, t0);
    return res;
}

} // namespace b2opt::bench
