#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <yaml-cpp/yaml.h>

#include "b2opt/baselines/de.hpp"
#include "b2opt/baselines/es.hpp"
#include "b2opt/baselines/ga.hpp"
#include "b2opt/model/params.hpp"
#include "b2opt/training/trainer.hpp"

// Experiment configuration: a YAML document with sections task, algo/algos, run, train, ablate.
// Unknown keys anywhere are collected and reported together before anything runs.

namespace b2opt::bench {

enum class AlgoKind { b2opt, de, es, ga, random };

inline AlgoKind parse_algo_kind(const std::string& s)
{
    if (s == "b2opt")
        return AlgoKind::b2opt;
    if (s == "de")
        return AlgoKind::de;
    if (s == "es")
        return AlgoKind::es;
    if (s == "ga")
        return AlgoKind::ga;
    if (s == "random")
        return AlgoKind::random;
    throw ConfigError(fmt::format("unknown algorithm '{}' (expected b2opt, de, es, ga or random)", s));
}

struct ModelSpec {
    std::size_t blocks = 3;
    bool weight_sharing = true;
    std::size_t d_k = 16;
    std::size_t hidden = 0;
    model::Ablation ablation;

    model::ModelConfig config(std::size_t n, std::size_t d) const
    {
        model::ModelConfig c;
        c.n = n;
        c.d = d;
        c.blocks = blocks;
        c.weight_sharing = weight_sharing;
        c.d_k = d_k;
        c.hidden = hidden;
        c.ablation = ablation;
        return c;
    }
};

struct AlgoSpec {
    AlgoKind kind = AlgoKind::de;
    std::string label;
    // b2opt: either a checkpoint or an untrained architecture
    std::string checkpoint;
    std::optional<ModelSpec> untrained;
    std::uint64_t init_seed = 0;
    baselines::DEConfig de;
    baselines::ESConfig es;
    baselines::GAOperatorsConfig ga;
    std::size_t budget = 10000;  // random search
};

struct TaskSpec {
    std::vector<objectives::FunctionId> functions;
    std::vector<std::size_t> dims{10};
    std::optional<double> lower, upper;
    std::vector<objectives::ArmMode> arm_modes{objectives::ArmMode::simple, objectives::ArmMode::complex};
    std::vector<double> radii{100.0, 300.0, 1000.0};
    std::size_t targets = 128;
    std::size_t segments = 100;
};

struct RunSpec {
    std::size_t n = 100;
    std::size_t seeds = 10;
    std::uint64_t seed = 0;
    std::string out = "results";
    std::size_t threads = 1;
    std::optional<std::uint64_t> max_evals;
};

struct TrainSpec {
    ModelSpec model;
    training::TrainConfig train;
    std::string checkpoint = "model.ckpt";
    bool present = false;
};

struct ExperimentConfig {
    TaskSpec task;
    std::vector<AlgoSpec> algos;
    RunSpec run;
    TrainSpec train;
    std::vector<model::Ablation> variants;
    std::string source;  // original text, hashed into the manifest
};

namespace detail {

class Reader {
public:
    std::vector<std::string> unknown;
    std::vector<std::string> invalid;

    void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed)
    {
        if (!node)
            return;
        if (!node.IsMap()) {
            invalid.push_back(fmt::format("{}: expected a mapping", path));
            return;
        }
        for (const auto& kv : node) {
            const std::string key = kv.first.as<std::string>();
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
                unknown.push_back(path.empty() ? key : path + "." + key);
        }
    }

    template <typename T>
    void get(const YAML::Node& node, const char* key, const std::string& path, T& out)
    {
        if (!node || !node[key])
            return;
        try {
            out = node[key].as<T>();
        } catch (const YAML::Exception&) {
            invalid.push_back(fmt::format("{}.{}: cannot read '{}'", path, key, YAML::Dump(node[key])));
        }
    }

    /// Scalar or sequence of scalars.
    template <typename T>
    void get_list(const YAML::Node& node, const char* key, const std::string& path, std::vector<T>& out)
    {
        if (!node || !node[key])
            return;
        const YAML::Node v = node[key];
        try {
            out.clear();
            if (v.IsSequence())
                for (const auto& e : v)
                    out.push_back(e.as<T>());
            else
                out.push_back(v.as<T>());
        } catch (const YAML::Exception&) {
            invalid.push_back(fmt::format("{}.{}: cannot read '{}'", path, key, YAML::Dump(v)));
        }
    }

    template <typename F>
    void guard(const std::string& what, F&& f)
    {
        try {
            f();
        } catch (const ConfigError& e) {
            invalid.push_back(fmt::format("{}: {}", what, e.what()));
        } catch (const ContractError& e) {
            invalid.push_back(fmt::format("{}: {}", what, e.what()));
        }
    }
};

inline ModelSpec read_model(Reader& r, const YAML::Node& node, const std::string& path)
{
    ModelSpec m;
    r.check_keys(node, path, {"blocks", "weight_sharing", "d_k", "hidden", "ablation"});
    r.get(node, "blocks", path, m.blocks);
    r.get(node, "weight_sharing", path, m.weight_sharing);
    r.get(node, "d_k", path, m.d_k);
    r.get(node, "hidden", path, m.hidden);
    std::string abl = "full";
    r.get(node, "ablation", path, abl);
    r.guard(path + ".ablation", [&] { m.ablation = model::Ablation::from_name(abl); });
    return m;
}

inline AlgoSpec read_algo(Reader& r, const YAML::Node& node, const std::string& path)
{
    AlgoSpec a;
    r.check_keys(node, path,
                 {"name", "label", "checkpoint", "model", "init_seed", "F", "cr", "mr", "eta", "max_gen", "lambda",
                  "mu", "sigma_scale", "budget"});
    std::string name;
    r.get(node, "name", path, name);
    if (name.empty()) {
        r.invalid.push_back(fmt::format("{}.name: required", path));
        return a;
    }
    r.guard(path + ".name", [&] { a.kind = parse_algo_kind(name); });
    a.label = name;
    r.get(node, "label", path, a.label);
    r.get(node, "checkpoint", path, a.checkpoint);
    if (node["model"])
        a.untrained = read_model(r, node["model"], path + ".model");
    r.get(node, "init_seed", path, a.init_seed);
    switch (a.kind) {
    case AlgoKind::de:
        r.get(node, "F", path, a.de.F);
        r.get(node, "cr", path, a.de.cr);
        r.get(node, "max_gen", path, a.de.max_gen);
        break;
    case AlgoKind::es:
        r.get(node, "lambda", path, a.es.lambda);
        r.get(node, "mu", path, a.es.mu);
        r.get(node, "sigma_scale", path, a.es.sigma_scale);
        r.get(node, "max_gen", path, a.es.max_gen);
        r.guard(path, [&] { a.es.validate(); });
        break;
    case AlgoKind::ga:
        r.get(node, "cr", path, a.ga.cr);
        r.get(node, "mr", path, a.ga.mr);
        r.get(node, "eta", path, a.ga.eta);
        r.get(node, "max_gen", path, a.ga.max_gen);
        r.guard(path, [&] { a.ga.validate(); });
        break;
    case AlgoKind::random:
        r.get(node, "budget", path, a.budget);
        if (a.budget < 1)
            r.invalid.push_back(fmt::format("{}.budget: must be at least 1", path));
        break;
    case AlgoKind::b2opt:
        if (a.checkpoint.empty() == !a.untrained)
            r.invalid.push_back(fmt::format("{}: b2opt needs exactly one of 'checkpoint' or 'model'", path));
        break;
    }
    return a;
}

inline void read_train(Reader& r, const YAML::Node& node, TrainSpec& t)
{
    const std::string path = "train";
    r.check_keys(node, path,
                 {"model", "lr0", "lr_decay", "decay_every", "epochs", "batch", "clip_norm", "functions", "d", "n",
                  "distinct_shifts", "arm_mode", "arm_r_max", "arm_segments", "checkpoint"});
    t.present = true;
    if (node["model"])
        t.model = read_model(r, node["model"], "train.model");
    training::TrainConfig& c = t.train;
    r.get(node, "lr0", path, c.lr0);
    r.get(node, "lr_decay", path, c.lr_decay);
    r.get(node, "decay_every", path, c.decay_every);
    r.get(node, "epochs", path, c.epochs);
    r.get(node, "batch", path, c.batch);
    r.get(node, "clip_norm", path, c.clip_norm);
    r.get(node, "d", path, c.d);
    r.get(node, "n", path, c.n);
    r.get(node, "distinct_shifts", path, c.distinct_shifts);
    r.get(node, "arm_r_max", path, c.arm_r_max);
    r.get(node, "arm_segments", path, c.arm_segments);
    r.get(node, "checkpoint", path, t.checkpoint);
    std::vector<std::string> fns;
    r.get_list(node, "functions", path, fns);
    if (!fns.empty())
        r.guard("train.functions", [&] {
            c.functions.clear();
            for (const auto& f : fns)
                c.functions.push_back(objectives::parse_function(f));
        });
    std::string mode;
    r.get(node, "arm_mode", path, mode);
    if (!mode.empty())
        r.guard("train.arm_mode", [&] { c.arm_mode = objectives::parse_arm_mode(mode); });
    try {
        c.validate();
    } catch (const ConfigError& e) {
        r.invalid.push_back(e.what());  // already prefixed with "train:"
    }
}

} // namespace detail

/// Parses and validates a configuration document. All unknown keys and invalid values are
/// reported together in one ConfigError.
inline ExperimentConfig parse_config(const std::string& text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(fmt::format("config is not valid YAML: {}", e.what()));
    }
    ExperimentConfig cfg;
    cfg.source = text;
    if (!root || root.IsNull())
        return cfg;
    if (!root.IsMap())
        throw ConfigError("config must be a mapping of sections");
    detail::Reader r;
    r.check_keys(root, "", {"task", "algo", "algos", "run", "train", "ablate"});

    if (const YAML::Node task = root["task"]) {
        r.check_keys(task, "task", {"function", "functions", "d", "lower", "upper", "arm_modes", "r", "targets",
                                    "segments"});
        std::vector<std::string> fns;
        r.get_list(task, "function", "task", fns);
        r.get_list(task, "functions", "task", fns);
        r.guard("task.functions", [&] {
            for (const auto& f : fns)
                cfg.task.functions.push_back(objectives::parse_function(f));
        });
        r.get_list(task, "d", "task", cfg.task.dims);
        double v;
        if (task["lower"]) {
            r.get(task, "lower", "task", v);
            cfg.task.lower = v;
        }
        if (task["upper"]) {
            r.get(task, "upper", "task", v);
            cfg.task.upper = v;
        }
        std::vector<std::string> modes;
        r.get_list(task, "arm_modes", "task", modes);
        if (!modes.empty())
            r.guard("task.arm_modes", [&] {
                cfg.task.arm_modes.clear();
                for (const auto& m : modes)
                    cfg.task.arm_modes.push_back(objectives::parse_arm_mode(m));
            });
        r.get_list(task, "r", "task", cfg.task.radii);
        r.get(task, "targets", "task", cfg.task.targets);
        r.get(task, "segments", "task", cfg.task.segments);
        if (cfg.task.lower && cfg.task.upper && !(*cfg.task.lower < *cfg.task.upper))
            r.invalid.push_back("task: lower must be below upper");
        for (double rad : cfg.task.radii)
            if (!(rad > 0.0))
                r.invalid.push_back(fmt::format("task.r: radius must be positive, got {}", rad));
        for (std::size_t d : cfg.task.dims)
            if (d == 0)
                r.invalid.push_back("task.d: dimension must be positive");
    }

    if (root["algo"] && root["algos"])
        r.invalid.push_back("give either 'algo' or 'algos', not both");
    if (const YAML::Node a = root["algo"])
        cfg.algos.push_back(detail::read_algo(r, a, "algo"));
    if (const YAML::Node as = root["algos"]) {
        if (!as.IsSequence())
            r.invalid.push_back("algos: expected a list");
        else
            for (std::size_t i = 0; i < as.size(); ++i)
                cfg.algos.push_back(detail::read_algo(r, as[i], fmt::format("algos[{}]", i)));
    }

    if (const YAML::Node run = root["run"]) {
        r.check_keys(run, "run", {"n", "seeds", "seed", "out", "threads", "max_evals"});
        r.get(run, "n", "run", cfg.run.n);
        r.get(run, "seeds", "run", cfg.run.seeds);
        r.get(run, "seed", "run", cfg.run.seed);
        r.get(run, "out", "run", cfg.run.out);
        r.get(run, "threads", "run", cfg.run.threads);
        if (run["max_evals"]) {
            std::uint64_t m = 0;
            r.get(run, "max_evals", "run", m);
            cfg.run.max_evals = m;
        }
        if (cfg.run.seeds == 0)
            r.invalid.push_back("run.seeds: need at least one seed");
        if (cfg.run.n < 2)
            r.invalid.push_back("run.n: population must be at least 2");
    }

    if (const YAML::Node train = root["train"])
        detail::read_train(r, train, cfg.train);

    if (const YAML::Node ab = root["ablate"]) {
        r.check_keys(ab, "ablate", {"variants"});
        std::vector<std::string> names;
        r.get_list(ab, "variants", "ablate", names);
        r.guard("ablate.variants", [&] {
            for (const auto& n : names)
                cfg.variants.push_back(model::Ablation::from_name(n));
        });
    }

    if (!r.unknown.empty() || !r.invalid.empty()) {
        std::vector<std::string> parts;
        if (!r.unknown.empty())
            parts.push_back(fmt::format("unknown keys [{}]", fmt::join(r.unknown, ", ")));
        parts.insert(parts.end(), r.invalid.begin(), r.invalid.end());
        throw ConfigError(fmt::format("invalid config: {}", fmt::join(parts, "; ")));
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace b2opt::bench
