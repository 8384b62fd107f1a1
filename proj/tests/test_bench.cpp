#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "b2opt/bench/commands.hpp"
#include "support/tempdir.hpp"

using namespace b2opt;
using namespace b2opt::bench;
using fixtures::read_file;
using fixtures::temp_dir;

TEST(Csv, QuotesOnlyWhenNeeded)
{
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, RoundTripsThroughParser)
{
    CsvTable t({"name", "value", "note"});
    t.add("x", 0.1, "a,\"b\"\r\nc");
    t.add("y", 42, "");
    EXPECT_EQ(t.data_rows(), 2u);
    const auto rows = parse_csv(t.text());
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1][2], "a,\"b\"\r\nc");
    EXPECT_EQ(rows[2][1], "42");
    EXPECT_EQ(std::stod(rows[1][1]), 0.1);
    EXPECT_THROW(t.add("too", "few"), ContractError);
}

TEST(Csv, DoublesRoundTripExactly)
{
    Rng rng(1);
    for (int k = 0; k < 1000; ++k) {
        const double v = std::ldexp(uniform(rng, -1, 1), int(uniform(rng, -60, 60)));
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
}

TEST(Stats, PopulationStdAndFormatting)
{
    const std::vector<double> v{1, 2, 3, 4};
    const StatSummary s = summarize(v);
    EXPECT_EQ(s.runs, 4u);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
    EXPECT_EQ(mean_std({10, 0.28, 0.09}), "0.28(0.09)");
    EXPECT_EQ(mean_std({10, 243.4, 238.2}), "243(238)");
    EXPECT_EQ(mean_std({10, 1.2e-7, 5e-8}), "1.2e-07(5e-08)");
    EXPECT_THROW(summarize(std::vector<double>{}), ContractError);
}

TEST(Manifest, HashKnownVectors)
{
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Config, DefaultsAndLists)
{
    const auto c = parse_config("task: {function: F7, d: [2, 5]}\nalgo: {name: es, lambda: 20, mu: 10}\n"
                                "run: {n: 20, seeds: 3, max_evals: 220}\n");
    ASSERT_EQ(c.task.functions.size(), 1u);
    EXPECT_EQ(c.task.functions[0], objectives::FunctionId::F7);
    EXPECT_EQ(c.task.dims, (std::vector<std::size_t>{2, 5}));
    ASSERT_EQ(c.algos.size(), 1u);
    EXPECT_EQ(c.algos[0].es.lambda, 20u);
    EXPECT_EQ(c.algos[0].label, "es");
    EXPECT_EQ(c.run.max_evals, 220u);
    EXPECT_FALSE(c.train.present);
}

TEST(Config, UnknownKeysAreAllListed)
{
    try {
        parse_config("task: {d: 4, bogus: 1}\nrun: {foo: 2}\nalgos: [{name: de, zz: 1}]\nextra: 3\n");
        FAIL() << "accepted unknown keys";
    } catch (const ConfigError& e) {
        const std::string m = e.what();
        for (const char* k : {"task.bogus", "run.foo", "algos[0].zz", "extra"})
            EXPECT_NE(m.find(k), std::string::npos) << k << " missing from: " << m;
    }
}

TEST(Config, RejectsBadValuesBeforeWork)
{
    EXPECT_THROW(parse_config("train: {lr0: 0}\n"), ConfigError);
    EXPECT_THROW(parse_config("train: {lr0: -0.5}\n"), ConfigError);
    EXPECT_THROW(parse_config("algo: {name: b2opt}\n"), ConfigError);
    EXPECT_THROW(parse_config("algo: {name: simplex}\n"), ConfigError);
    EXPECT_THROW(parse_config("task: {function: F42}\n"), ConfigError);
    EXPECT_THROW(parse_config("run: {seeds: 0}\n"), ConfigError);
    EXPECT_THROW(parse_config("task: {d: seven}\n"), ConfigError);
    EXPECT_THROW(parse_config("ablate: {variants: [not_everything]}\n"), ConfigError);
    EXPECT_THROW(parse_config("[1, 2]\n"), ConfigError);
    EXPECT_THROW(parse_config("task: {d: [1\n"), ConfigError);
}

TEST(Runner, SeedListIsStable)
{
    const auto a = seed_list(7, 5);
    EXPECT_EQ(a, seed_list(7, 5));
    EXPECT_EQ(std::vector<std::uint64_t>(a.begin(), a.begin() + 3), seed_list(7, 3));
    EXPECT_NE(a, seed_list(8, 5));
}

TEST(Runner, ExactBudgets)
{
    Rng r0(2);
    const auto f = objectives::sample_test_instance(objectives::FunctionId::F4, 3, r0);
    auto run = [&](const AlgoSpec& a, const model::B2OptModel* m, std::optional<std::uint64_t> cap) {
        Rng rng(3);
        Matrix X0 = objectives::init_population(f.bounds, 10, rng);
        return run_algorithm(a, m, f, X0, cap, rng);
    };
    AlgoSpec de;
    de.de.max_gen = 4;
    EXPECT_EQ(run(de, nullptr, {}).evals, 50u);
    EXPECT_EQ(run(de, nullptr, 1100u).evals, 1100u);
    EXPECT_EQ(run(de, nullptr, 1109u).evals, 1100u);
    AlgoSpec es;
    es.kind = AlgoKind::es;
    es.es.lambda = 6;
    es.es.mu = 3;
    es.es.max_gen = 5;
    EXPECT_EQ(run(es, nullptr, {}).evals, 40u);
    AlgoSpec rs;
    rs.kind = AlgoKind::random;
    rs.budget = 17;
    const RunRecord r = run(rs, nullptr, {});
    EXPECT_EQ(r.evals, 17u);
    EXPECT_EQ(r.curve.best.size(), 17u);

    AlgoSpec b;
    b.kind = AlgoKind::b2opt;
    b.untrained = ModelSpec{4, true, 4, 0, {}};
    const ResolvedModel m = resolve_model(b, 10, 3);
    ASSERT_TRUE(m.model);
    const RunRecord rb = run(b, &*m.model, {});
    EXPECT_EQ(rb.evals, 50u);
    EXPECT_EQ(rb.curve.best.size(), 5u);
    EXPECT_THROW(run(b, &*m.model, 49u), ConfigError);
    EXPECT_THROW(run(de, nullptr, 5u), ConfigError);
}

TEST(Runner, MissingOrMismatchedCheckpoint)
{
    const auto dir = temp_dir();
    AlgoSpec a;
    a.kind = AlgoKind::b2opt;
    a.checkpoint = (dir / "none.ckpt").string();
    EXPECT_NE(resolve_model(a, 8, 4).absent_reason.find("not found"), std::string::npos);
    Rng rng(4);
    model::ModelConfig mc;
    mc.n = 8;
    mc.d = 4;
    mc.blocks = 2;
    mc.d_k = 4;
    model::save_model(model::init_model(mc, rng), dir / "m.ckpt");
    a.checkpoint = (dir / "m.ckpt").string();
    EXPECT_TRUE(resolve_model(a, 8, 4).model);
    EXPECT_NE(resolve_model(a, 8, 5).absent_reason.find("d=4"), std::string::npos);
}

namespace {

const char* tiny_train = R"(
train:
  model: {blocks: 2, weight_sharing: true, d_k: 4}
  d: 4
  n: 8
  epochs: 5
  batch: 2
  checkpoint: m.ckpt
)";

} // namespace

TEST(Commands, TrainWritesOneLossRowPerEpochAndIsReproducible)
{
    const auto cfg = parse_config(tiny_train);
    const auto dir = temp_dir();
    const auto r1 = cmd_train(cfg, {dir / "a", 9, 1});
    const auto r2 = cmd_train(cfg, {dir / "b", 9, 3});
    const auto r3 = cmd_train(cfg, {dir / "c", 10, 1});
    const auto rows = parse_csv(read_file(dir / "a" / "loss.csv"));
    EXPECT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0][0], "epoch");
    EXPECT_EQ(rows[5][0], "5");
    EXPECT_EQ(read_file(dir / "a" / "loss.csv"), read_file(dir / "b" / "loss.csv"));
    EXPECT_EQ(read_file(dir / "a" / "m.ckpt"), read_file(dir / "b" / "m.ckpt"));
    EXPECT_NE(read_file(dir / "a" / "loss.csv"), read_file(dir / "c" / "loss.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / "manifest.json"));
    const auto man = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
    EXPECT_EQ(man["master_seed"], 9u);
    EXPECT_EQ(man["config_hash"], fmt::format("fnv1a64:{:016x}", fnv1a64(tiny_train)));
    EXPECT_EQ(man["format_version"], output_format_version);
    EXPECT_EQ(model::load_model(dir / "a" / "m.ckpt").config.blocks, 2u);
}

TEST(Commands, BenchGridShapeAbsentCellsAndSummary)
{
    const auto dir = temp_dir();
    const std::string text = fmt::format(R"(
task: {{d: 3}}
algos:
  - {{name: b2opt, label: gone, checkpoint: {}/missing.ckpt}}
  - {{name: b2opt, label: fresh, model: {{blocks: 2, d_k: 4}}}}
  - {{name: de, max_gen: 3}}
  - {{name: es, lambda: 6, mu: 3, max_gen: 3}}
  - {{name: random, budget: 20}}
run: {{n: 6, seeds: 3}}
)",
                                         dir.string());
    const auto cfg = parse_config(text);
    cmd_bench(cfg, {dir / "a", 1, 2});
    const auto summary = parse_csv(read_file(dir / "a" / "summary.csv"));
    ASSERT_EQ(summary.size(), 1u + 5 * 6);
    std::size_t absent = 0;
    for (std::size_t i = 1; i < summary.size(); ++i)
        if (summary[i][3].rfind("absent", 0) == 0)
            ++absent;
    EXPECT_EQ(absent, 6u);

    // summary recomputed from per-seed rows matches the file exactly
    const auto runs = parse_csv(read_file(dir / "a" / "runs.csv"));
    for (std::size_t i = 1; i < summary.size(); ++i) {
        if (summary[i][3] != "ok")
            continue;
        std::vector<double> v;
        for (std::size_t j = 1; j < runs.size(); ++j)
            if (runs[j][0] == summary[i][0] && runs[j][1] == summary[i][1])
                v.push_back(std::stod(runs[j][5]));
        const StatSummary s = summarize(v);
        EXPECT_EQ(format_double(s.mean), summary[i][5]);
        EXPECT_EQ(format_double(s.std), summary[i][6]);
        EXPECT_EQ(mean_std(s), summary[i][7]);
    }

    cmd_bench(cfg, {dir / "b", 1, 1});
    for (const char* f : {"summary.csv", "runs.csv", "curves.csv"})
        EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
}

TEST(Commands, OptimizeRejectsMismatchedCheckpoint)
{
    const auto dir = temp_dir();
    cmd_train(parse_config(tiny_train), {dir / "t", 1, 1});
    const auto cfg = parse_config(fmt::format("task: {{function: F4, d: 5}}\nalgo: {{name: b2opt, checkpoint: {}}}\n"
                                              "run: {{n: 8, seeds: 1}}\n",
                                              (dir / "t" / "m.ckpt").string()));
    EXPECT_THROW(cmd_optimize(cfg, {dir / "o", 1, 1}), ConfigError);
    const auto ok = parse_config(fmt::format("task: {{function: F4, d: 4}}\nalgo: {{name: b2opt, checkpoint: {}}}\n"
                                             "run: {{n: 8, seeds: 2}}\n",
                                             (dir / "t" / "m.ckpt").string()));
    cmd_optimize(ok, {dir / "o", 1, 1});
    const auto runs = parse_csv(read_file(dir / "o" / "runs.csv"));
    ASSERT_EQ(runs.size(), 3u);
    EXPECT_EQ(runs[1][6], "24");  // (t+1) n
}

TEST(Commands, ArmRowsPerModeAndRadius)
{
    const auto dir = temp_dir();
    const auto cfg = parse_config(R"(
task: {segments: 3, targets: 4}
algos:
  - {name: de, max_gen: 2}
run: {n: 6}
)");
    cmd_arm(cfg, {dir / "a", 5, 1});
    const auto arm = parse_csv(read_file(dir / "a" / "arm.csv"));
    EXPECT_EQ(arm.size(), 1u + 6);
    EXPECT_EQ(parse_csv(read_file(dir / "a" / "arm_runs.csv")).size(), 1u + 6 * 4);
    cmd_arm(cfg, {dir / "b", 5, 2});
    EXPECT_EQ(read_file(dir / "a" / "arm_runs.csv"), read_file(dir / "b" / "arm_runs.csv"));
}

TEST(Commands, AblateTrainsFiveVariantsOnSixFunctions)
{
    const auto dir = temp_dir();
    const auto cfg = parse_config(R"(
train:
  model: {blocks: 2, weight_sharing: true, d_k: 4}
  d: 3
  n: 6
  epochs: 2
  batch: 1
run: {seeds: 2}
)");
    cmd_ablate(cfg, {dir, 3, 1});
    const auto rows = parse_csv(read_file(dir / "ablation.csv"));
    EXPECT_EQ(rows.size(), 1u + 30);
    EXPECT_EQ(rows[0][0], "variant");
    for (const char* v : {"full", "not_sac", "not_fm", "not_rc", "not_rssm"})
        EXPECT_TRUE(std::filesystem::exists(dir / "ablate" / (std::string(v) + ".ckpt"))) << v;
}

TEST(Commands, ExportVizShapes)
{
    const auto dir = temp_dir();
    const auto cfg = parse_config(R"(
task: {function: F5, d: 3}
algo: {name: b2opt, model: {blocks: 3, weight_sharing: false, d_k: 4}}
run: {n: 5}
)");
    cmd_export_viz(cfg, {dir / "a", 2, 1});
    const auto att = parse_csv(read_file(dir / "a" / "attention.csv"));
    ASSERT_EQ(att.size(), 1u + 3 * 5);
    EXPECT_EQ(att[0].size(), 2u + 5);
    const auto snaps = parse_csv(read_file(dir / "a" / "snapshots.csv"));
    EXPECT_EQ(snaps.size(), 1u + 4 * 5);
    EXPECT_EQ(snaps[0].size(), 3u + 3);
    EXPECT_EQ(parse_csv(read_file(dir / "a" / "fm_populations.csv")).size(), 1u + 3 * 2 * 5);
    cmd_export_viz(cfg, {dir / "b", 2, 1});
    for (const char* f : {"attention.csv", "snapshots.csv", "fm_populations.csv"})
        EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
}
