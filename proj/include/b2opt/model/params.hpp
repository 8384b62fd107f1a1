#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "b2opt/ad/tape.hpp"
#include "b2opt/random.hpp"

namespace b2opt::model {

/// Component switches for ablation variants.
struct Ablation {
    bool disable_sac = false;
    bool disable_fm = false;
    bool disable_rssm = false;
    bool disable_rc = false;

    int count() const { return int(disable_sac) + int(disable_fm) + int(disable_rssm) + int(disable_rc); }

    std::uint8_t bits() const
    {
        return std::uint8_t(disable_sac) | std::uint8_t(disable_fm) << 1 | std::uint8_t(disable_rssm) << 2 |
               std::uint8_t(disable_rc) << 3;
    }

    static Ablation from_bits(std::uint8_t b)
    {
        return {bool(b & 1), bool(b & 2), bool(b & 4), bool(b & 8)};
    }

    /// "full", "not_sac", "not_fm", "not_rssm" or "not_rc".
    static Ablation from_name(std::string_view name)
    {
        if (name == "full" || name == "none")
            return {};
        if (name == "not_sac")
            return {true, false, false, false};
        if (name == "not_fm")
            return {false, true, false, false};
        if (name == "not_rssm")
            return {false, false, true, false};
        if (name == "not_rc")
            return {false, false, false, true};
        throw ConfigError(fmt::format("unknown ablation variant '{}'", name));
    }

    std::string name() const
    {
        if (count() == 0)
            return "full";
        if (count() > 1)
            return "mixed";
        return disable_sac ? "not_sac" : disable_fm ? "not_fm" : disable_rssm ? "not_rssm" : "not_rc";
    }

    friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct ModelConfig {
    std::size_t n = 100;     // population size; A is n x n
    std::size_t d = 10;      // problem dimension
    std::size_t blocks = 3;  // t
    std::size_t d_k = 16;    // fitness-attention width
    std::size_t hidden = 0;  // FM hidden width; 0 means 2d
    bool weight_sharing = true;
    Ablation ablation;

    std::size_t hidden_width() const { return hidden == 0 ? 2 * d : hidden; }

    void validate() const
    {
        if (n < 2)
            throw ConfigError(fmt::format("model: population size n must be at least 2, got {}", n));
        if (d == 0 || d_k == 0)
            throw ConfigError("model: d and d_k must be positive");
        if (ablation.count() > 1)
            throw ConfigError(fmt::format("model: conflicting ablation flags ({} set)", ablation.count()));
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct SACParams {
    ad::Parameter A;   // n x n
    ad::Parameter WQ;  // 1 x d_k
    ad::Parameter WK;  // 1 x d_k
    ad::Parameter W1c; // n x 1
    ad::Parameter W2c; // n x 1
};

struct FMParams {
    ad::Parameter W1F; // d x h
    ad::Parameter b1;  // 1 x h
    ad::Parameter W2F; // h x d
    ad::Parameter b2;  // 1 x d
};

struct RSSMParams {
    ad::Parameter W1s; // n x 1
    ad::Parameter W2s; // n x 1
    ad::Parameter W3s; // n x 1
};

struct OBParams {
    SACParams sac;
    FMParams fm;
    RSSMParams rssm;

    std::vector<ad::Parameter*> parameters()
    {
        return {&sac.A, &sac.WQ, &sac.WK, &sac.W1c, &sac.W2c, &fm.W1F, &fm.b1,
                &fm.W2F, &fm.b2, &rssm.W1s, &rssm.W2s, &rssm.W3s};
    }

    std::vector<const ad::Parameter*> parameters() const
    {
        auto ps = const_cast<OBParams*>(this)->parameters();
        return {ps.begin(), ps.end()};
    }
};

/// A stack of OB blocks. With weight sharing one OBParams is applied `blocks` times.
class B2OptModel {
public:
    ModelConfig config;
    std::vector<OBParams> blocks;

    B2OptModel() = default;
    B2OptModel(ModelConfig cfg, std::vector<OBParams> params) : config(cfg), blocks(std::move(params))
    {
        config.validate();
        const std::size_t expected = config.weight_sharing ? 1 : config.blocks;
        if (blocks.size() != expected)
            throw ConfigError(fmt::format("model: {} parameter sets for t={} (weight sharing {})", blocks.size(),
                                          config.blocks, config.weight_sharing));
    }

    OBParams& block(std::size_t i) { return config.weight_sharing ? blocks.front() : blocks.at(i); }

    std::vector<ad::Parameter*> parameters()
    {
        std::vector<ad::Parameter*> out;
        for (OBParams& b : blocks)
            for (ad::Parameter* p : b.parameters())
                out.push_back(p);
        return out;
    }

    std::vector<const ad::Parameter*> parameters() const
    {
        std::vector<const ad::Parameter*> out;
        for (const OBParams& b : blocks)
            for (const ad::Parameter* p : b.parameters())
                out.push_back(p);
        return out;
    }

    void zero_grad()
    {
        for (ad::Parameter* p : parameters())
            p->zero_grad();
    }

    std::size_t parameter_count()
    {
        std::size_t c = 0;
        for (ad::Parameter* p : parameters())
            c += p->value.size();
        return c;
    }
};

namespace detail {

inline Matrix noise(std::size_t r, std::size_t c, double scale, Rng& rng, double offset = 0.0)
{
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = offset + uniform(rng, -scale, scale);
    return m;
}

inline std::string pname(std::size_t block, std::string_view part) { return fmt::format("block{}.{}", block, part); }

} // namespace detail

/// Near-identity initialisation: A ~ I, W1c ~ 1, W2c ~ 0, W1s ~ 1, W2s/W3s ~ 0 with U(-0.01, 0.01)
/// noise; FM and the query/key rows use fan-in scaled uniform weights.
inline OBParams init_block(const ModelConfig& cfg, std::size_t index, Rng& rng)
{
    constexpr double eps = 0.01;
    const std::size_t n = cfg.n, d = cfg.d, h = cfg.hidden_width(), dk = cfg.d_k;
    Matrix A = detail::noise(n, n, eps, rng);
    for (std::size_t i = 0; i < n; ++i)
        A(i, i) += 1.0;
    const double qk = 1.0 / std::sqrt(double(dk));
    const double s1 = 1.0 / std::sqrt(double(d));
    const double s2 = 1.0 / std::sqrt(double(h));
    using detail::pname;
    OBParams p{
        {{pname(index, "sac.A"), std::move(A)},
         {pname(index, "sac.WQ"), detail::noise(1, dk, qk, rng)},
         {pname(index, "sac.WK"), detail::noise(1, dk, qk, rng)},
         {pname(index, "sac.W1c"), detail::noise(n, 1, eps, rng, 1.0)},
         {pname(index, "sac.W2c"), detail::noise(n, 1, eps, rng)}},
        {{pname(index, "fm.W1F"), detail::noise(d, h, s1, rng)},
         {pname(index, "fm.b1"), detail::noise(1, h, s1, rng)},
         {pname(index, "fm.W2F"), detail::noise(h, d, s2, rng)},
         {pname(index, "fm.b2"), detail::noise(1, d, s2, rng)}},
        {{pname(index, "rssm.W1s"), detail::noise(n, 1, eps, rng, 1.0)},
         {pname(index, "rssm.W2s"), detail::noise(n, 1, eps, rng)},
         {pname(index, "rssm.W3s"), detail::noise(n, 1, eps, rng)}},
    };
    return p;
}

inline B2OptModel init_model(const ModelConfig& cfg, Rng& rng)
{
    cfg.validate();
    const std::size_t stored = cfg.weight_sharing ? 1 : cfg.blocks;
    std::vector<OBParams> blocks;
    blocks.reserve(stored);
    for (std::size_t i = 0; i < stored; ++i)
        blocks.push_back(init_block(cfg, i, rng));
    return {cfg, std::move(blocks)};
}

/// A = I, W1c = 1, W2c = 0, FM maps to zero, W1s = 1, W2s = W3s = 0: the block returns its input.
inline OBParams identity_block(const ModelConfig& cfg, std::size_t index = 0)
{
    const std::size_t n = cfg.n, d = cfg.d, h = cfg.hidden_width(), dk = cfg.d_k;
    using detail::pname;
    return OBParams{
        {{pname(index, "sac.A"), Matrix::identity(n)},
         {pname(index, "sac.WQ"), Matrix(1, dk)},
         {pname(index, "sac.WK"), Matrix(1, dk)},
         {pname(index, "sac.W1c"), Matrix(n, 1, 1.0)},
         {pname(index, "sac.W2c"), Matrix(n, 1)}},
        {{pname(index, "fm.W1F"), Matrix(d, h)},
         {pname(index, "fm.b1"), Matrix(1, h)},
         {pname(index, "fm.W2F"), Matrix(h, d)},
         {pname(index, "fm.b2"), Matrix(1, d)}},
        {{pname(index, "rssm.W1s"), Matrix(n, 1, 1.0)},
         {pname(index, "rssm.W2s"), Matrix(n, 1)},
         {pname(index, "rssm.W3s"), Matrix(n, 1)}},
    };
}

inline B2OptModel identity_model(const ModelConfig& cfg)
{
    const std::size_t stored = cfg.weight_sharing ? 1 : cfg.blocks;
    std::vector<OBParams> blocks;
    for (std::size_t i = 0; i < stored; ++i)
        blocks.push_back(identity_block(cfg, i));
    return {cfg, std::move(blocks)};
}

} // namespace b2opt::model
