#pragma once

#include <cmath>
#include <vector>

#include "b2opt/ad/matrix.hpp"
#include "b2opt/model/params.hpp"
#include "b2opt/random.hpp"

namespace fixtures {

inline b2opt::Matrix random_matrix(std::size_t r, std::size_t c, b2opt::Rng& rng, double lo = -1.0, double hi = 1.0)
{
    b2opt::Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = b2opt::uniform(rng, lo, hi);
    return m;
}

/// Block with generic (far from identity) weights, for oracle comparisons.
inline b2opt::model::OBParams random_block(const b2opt::model::ModelConfig& cfg, b2opt::Rng& rng, double scale = 0.5)
{
    b2opt::model::OBParams p = b2opt::model::identity_block(cfg);
    for (b2opt::ad::Parameter* q : p.parameters())
        for (std::size_t i = 0; i < q->value.size(); ++i)
            q->value[i] = b2opt::uniform(rng, -scale, scale) + (q->name.ends_with("W1s") ? 0.5 : 0.0);
    return p;
}

} // namespace fixtures
