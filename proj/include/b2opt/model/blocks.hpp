#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <fmt/format.h>

#include "b2opt/ad/ops.hpp"
#include "b2opt/model/params.hpp"
#include "b2opt/model/population.hpp"
#include "b2opt/objectives/evaluate.hpp"

namespace b2opt::model {

/// softmax(F WQ (F WK)^T / sqrt(d_k)) for an n x 1 fitness column.
inline ad::Var fitness_attention(ad::Var fitness, SACParams& p)
{
    ad::Tape& t = fitness.tape();
    const Matrix& wq = p.WQ.value;
    if (fitness.cols() != 1 || wq.rows() != 1 || p.WK.value.rows() != 1 || wq.cols() != p.WK.value.cols())
        throw DimensionError(fmt::format("sac: fitness {} with WQ {} / WK {}", fitness.value().shape(), wq.shape(),
                                         p.WK.value.shape()));
    ad::Var q = ad::matmul(fitness, t.parameter(p.WQ));
    ad::Var k = ad::matmul(fitness, t.parameter(p.WK));
    ad::Var logits = ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(double(wq.cols())));
    return ad::softmax_rows(logits);
}

/// Self-attention crossover: tile(W1c) * (A X) + tile(W2c) * (A^F X).
/// `fitness` is the (normalised) fitness column of the sorted population X.
inline ad::Var sac_forward(ad::Var X, ad::Var fitness, SACParams& p)
{
    ad::Tape& t = X.tape();
    const std::size_t n = X.rows(), d = X.cols();
    if (p.A.value.rows() != n || p.A.value.cols() != n || p.W1c.value.rows() != n || p.W2c.value.rows() != n)
        throw DimensionError(fmt::format("sac: population {} against A {} (model trained for a different n)",
                                         X.value().shape(), p.A.value.shape()));
    if (fitness.rows() != n)
        throw DimensionError(fmt::format("sac: {} fitness rows for population {}", fitness.rows(), X.value().shape()));
    ad::Var AF = fitness_attention(fitness, p);
    ad::Var mixed = ad::matmul(t.parameter(p.A), X);
    ad::Var attended = ad::matmul(AF, X);
    return ad::add(ad::hadamard(ad::tile(t.parameter(p.W1c), d), mixed),
                   ad::hadamard(ad::tile(t.parameter(p.W2c), d), attended));
}

/// FFN mutation: relu(X W1F + b1) W2F + b2, biases added per row.
inline ad::Var fm_forward(ad::Var Xc, FMParams& p)
{
    ad::Tape& t = Xc.tape();
    if (p.W1F.value.rows() != Xc.cols() || p.W2F.value.cols() != Xc.cols())
        throw DimensionError(fmt::format("fm: population {} with W1F {} / W2F {}", Xc.value().shape(),
                                         p.W1F.value.shape(), p.W2F.value.shape()));
    ad::Var hidden = ad::relu(ad::add_row(ad::matmul(Xc, t.parameter(p.W1F)), t.parameter(p.b1)));
    return ad::add_row(ad::matmul(hidden, t.parameter(p.W2F)), t.parameter(p.b2));
}

struct Selection {
    ad::Var X;
    ad::Var fitness;
    std::vector<double> mask; // 1 keeps the row of X, 0 takes the candidate row
};

/// Pairwise selection: row i keeps X[i] when the candidate is strictly worse, otherwise takes X'[i].
/// The mask is a constant on the tape, so gradients reach only the selected rows.
inline Selection sm_select(ad::Var X, ad::Var FX, ad::Var Xp, ad::Var FXp)
{
    ad::Tape& t = X.tape();
    const std::size_t n = X.rows(), d = X.cols();
    if (Xp.rows() != n || Xp.cols() != d || FX.rows() != n || FXp.rows() != n || FX.cols() != 1 || FXp.cols() != 1)
        throw DimensionError(fmt::format("sm: X {} / F {} against X' {} / F' {}", X.value().shape(),
                                         FX.value().shape(), Xp.value().shape(), FXp.value().shape()));
    std::vector<double> mask(n);
    Matrix keep(n, 1), take(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        mask[i] = (FXp.value()[i] - FX.value()[i] > 0.0) ? 1.0 : 0.0;
        keep[i] = mask[i];
        take[i] = 1.0 - mask[i];
    }
    ad::Var keep_col = t.constant(std::move(keep));
    ad::Var take_col = t.constant(std::move(take));
    ad::Var Xs = ad::add(ad::hadamard(ad::tile(keep_col, d), X), ad::hadamard(ad::tile(take_col, d), Xp));
    ad::Var Fs = ad::add(ad::hadamard(keep_col, FX), ad::hadamard(take_col, FXp));
    return {Xs, Fs, std::move(mask)};
}

/// Residual selection: candidate = W1s*X + W2s*Xc + W3s*Xm (rows weighted), clipped to the box,
/// evaluated once (n evaluations), pairwise-selected against X and re-sorted.
inline PopulationVar rssm_forward(PopulationVar pop, ad::Var Xc, ad::Var Xm, RSSMParams& p,
                                  const objectives::ObjectiveInstance& f, objectives::EvalCounter& counter,
                                  const Ablation& ablation = {})
{
    ad::Tape& t = pop.X.tape();
    const std::size_t n = pop.X.rows(), d = pop.X.cols();
    if (p.W1s.value.rows() != n)
        throw DimensionError(fmt::format("rssm: population {} against W1s {}", pop.X.value().shape(), p.W1s.value.shape()));
    ad::Var candidate = ad::add(ad::hadamard(ad::tile(t.parameter(p.W2s), d), Xc),
                                ad::hadamard(ad::tile(t.parameter(p.W3s), d), Xm));
    if (!ablation.disable_rc)
        candidate = ad::add(ad::hadamard(ad::tile(t.parameter(p.W1s), d), pop.X), candidate);
    candidate = ad::clamp_columns(candidate, f.bounds.lower, f.bounds.upper);
    ad::Var fc = objectives::evaluate(f, candidate, counter);
    if (ablation.disable_rssm)
        return sort_population(PopulationVar{candidate, fc});
    Selection s = sm_select(pop.X, pop.fitness, candidate, fc);
    return sort_population(PopulationVar{s.X, s.fitness});
}

/// Intermediate values of one block, for inspection and export.
struct BlockTrace {
    Matrix attention; // effective n x n crossover weights: diag(W1c) A + diag(W2c) A^F
    Matrix input;
    Matrix crossed;
    Matrix mutated;
    Matrix output;
    std::vector<double> output_fitness;
};

/// One OB: SAC -> FM -> RSSM on a sorted population.
inline PopulationVar ob_forward(PopulationVar pop, OBParams& block, const objectives::ObjectiveInstance& f,
                                objectives::EvalCounter& counter, const Ablation& ablation = {},
                                BlockTrace* trace = nullptr)
{
    ad::Var normalized = ad::normalize_minmax(pop.fitness);
    ad::Var Xc = ablation.disable_sac ? pop.X : sac_forward(pop.X, normalized, block.sac);
    ad::Var Xm = ablation.disable_fm ? Xc : fm_forward(Xc, block.fm);
    PopulationVar out = rssm_forward(pop, Xc, Xm, block.rssm, f, counter, ablation);
    if (trace) {
        const std::size_t n = pop.X.rows();
        Matrix eff(n, n);
        if (ablation.disable_sac) {
            eff = Matrix::identity(n);
        } else {
            ad::Tape scratch(ad::GradMode::disabled);
            const Matrix AF = fitness_attention(scratch.constant(normalized.value()), block.sac).value();
            const Matrix& A = block.sac.A.value;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    eff(i, j) = block.sac.W1c.value[i] * A(i, j) + block.sac.W2c.value[i] * AF(i, j);
        }
        *trace = {std::move(eff), pop.X.value(), Xc.value(), Xm.value(), out.X.value(), out.fitness.value().values()};
    }
    return out;
}

} // namespace b2opt::model
