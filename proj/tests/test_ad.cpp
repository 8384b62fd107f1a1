#include <cmath>
#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "b2opt/ad/grad_check.hpp"
#include "b2opt/ad/ops.hpp"
#include "support/fixtures.hpp"

using namespace b2opt;
using ad::Parameter;
using ad::Tape;
using ad::Var;

TEST(Matrix, RejectsEmptyAndMismatchedStorage)
{
    EXPECT_THROW(Matrix(0, 3), DimensionError);
    EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Matrix, MatmulMatchesLoops)
{
    Rng rng(1);
    const Matrix a = fixtures::random_matrix(3, 4, rng), b = fixtures::random_matrix(4, 2, rng);
    const Matrix c = linalg::matmul(a, b);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 4; ++k)
                s += a(i, k) * b(k, j);
            EXPECT_NEAR(c(i, j), s, 1e-14);
        }
    const Matrix ct = linalg::matmul(b, a, true, true);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_NEAR(ct(i, j), c(j, i), 1e-14);
}

TEST(Ops, ReluExample)
{
    Tape t;
    Var y = ad::relu(t.constant(Matrix(1, 3, {-1.0, 0.0, 2.0})));
    EXPECT_EQ(y.value(), Matrix(1, 3, {0.0, 0.0, 2.0}));
}

TEST(Ops, SoftmaxRowsSumToOne)
{
    Rng rng(2);
    Tape t;
    Var y = ad::softmax_rows(t.constant(fixtures::random_matrix(5, 7, rng, -30, 30)));
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 7; ++j)
            s += y.value()(i, j);
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Ops, TileExample)
{
    Tape t;
    Var y = ad::tile(t.constant(Matrix(2, 1, {1.0, 2.0})), 3);
    EXPECT_EQ(y.value(), Matrix(2, 3, {1, 1, 1, 2, 2, 2}));
}

TEST(Ops, ShapeMismatchNamesBothShapes)
{
    Tape t;
    try {
        ad::add(t.constant(Matrix(2, 3)), t.constant(Matrix(3, 2)));
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("3x2"), std::string::npos) << msg;
    }
}

TEST(Ops, NonFiniteResultReportsNode)
{
    Tape t;
    Var a = t.constant(Matrix::scalar(1.0));
    Var z = t.constant(Matrix::scalar(0.0));
    try {
        ad::divide(a, z);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("node 2"), std::string::npos) << e.what();
    }
}

TEST(StopGradient, ProductRuleWithConstantFactor)
{
    Parameter x{"x", Matrix::scalar(3.0)};
    Tape t;
    Var xv = t.parameter(x);
    Var y = ad::hadamard(t.stop_gradient(xv), xv);
    t.backward(y);
    EXPECT_DOUBLE_EQ(x.grad.item(), 3.0);
}

TEST(StopGradient, ConstantInBackwardIdentityForward)
{
    Parameter x{"x", Matrix::scalar(5.0)};
    Tape t;
    Var xv = t.parameter(x);
    Var y = t.stop_gradient(ad::hadamard(xv, xv));
    EXPECT_DOUBLE_EQ(y.value().item(), 25.0);
    t.backward(ad::sum(y));
    EXPECT_DOUBLE_EQ(x.grad.item(), 0.0);
}

TEST(Backward, SumOfSquares)
{
    Parameter x{"x", Matrix(2, 1, {3.0, -2.0})};
    Tape t;
    Var xv = t.parameter(x);
    t.backward(ad::sum(ad::hadamard(xv, xv)));
    EXPECT_EQ(x.grad, Matrix(2, 1, {6.0, -4.0}));
}

TEST(Backward, MeanOfLinearMap)
{
    Parameter A{"A", Matrix::identity(2)};
    Tape t;
    Var y = ad::matmul(t.parameter(A), t.constant(Matrix(2, 1, {1.0, 1.0})));
    t.backward(ad::mean(y));
    EXPECT_EQ(A.grad, Matrix(2, 2, {0.5, 0.5, 0.5, 0.5}));
}

TEST(Backward, NonScalarLossIsContractError)
{
    Tape t;
    Var x = t.variable(Matrix(2, 2));
    EXPECT_THROW(t.backward(x), ContractError);
}

TEST(Backward, RepeatedCallsAccumulateAndResetIsDeterministic)
{
    Rng rng(3);
    Parameter w{"w", fixtures::random_matrix(3, 3, rng)};
    const Matrix x = fixtures::random_matrix(3, 2, rng);
    auto run = [&] {
        Tape t;
        t.backward(ad::sum(ad::sin(ad::matmul(t.parameter(w), t.constant(x)))));
    };
    run();
    const Matrix first = w.grad;
    run();
    Matrix doubled = first;
    doubled *= 2.0;
    EXPECT_EQ(w.grad, doubled);
    w.zero_grad();
    run();
    EXPECT_EQ(w.grad, first);
}

TEST(Backward, VisitsEachNodeOnce)
{
    Parameter w{"w", Matrix(2, 2, 0.5)};
    Tape t;
    Var a = t.parameter(w);
    Var b = ad::add(a, a);
    Var c = ad::hadamard(b, a);
    Var loss = ad::sum(c);
    t.backward(loss);
    EXPECT_EQ(t.backward_visits(), t.size());
}

TEST(GradCheck, QuadraticIsExact)
{
    Parameter w{"w", Matrix(2, 2, {1.0, -2.0, 0.5, 3.0})};
    auto build = [&](Tape& t) {
        Var v = t.parameter(w);
        return ad::sum(ad::hadamard(v, v));
    };
    EXPECT_LE(ad::grad_check(build, {&w}, 1e-4).max_relative_error, 1e-8);
    EXPECT_LE(ad::grad_check(build, {&w}, 1e-6).max_relative_error, 1e-8);
}

TEST(GradCheck, StopGradientOnlyLossGivesZero)
{
    Parameter w{"w", Matrix(1, 3, {1.0, 2.0, 3.0})};
    Tape t;
    t.backward(ad::sum(t.stop_gradient(t.parameter(w))));
    EXPECT_EQ(w.grad, Matrix(1, 3));
}

TEST(GradCheck, RejectsNonPositiveEps)
{
    Parameter w{"w", Matrix::scalar(1.0)};
    EXPECT_THROW(ad::grad_check([&](Tape& t) { return ad::sum(t.parameter(w)); }, {&w}, 0.0), ContractError);
}

TEST(GradCheck, ThreeLayerComposite)
{
    Rng rng(4);
    Parameter w1{"w1", fixtures::random_matrix(4, 6, rng)}, b1{"b1", fixtures::random_matrix(1, 6, rng)};
    Parameter w2{"w2", fixtures::random_matrix(6, 5, rng)}, w3{"w3", fixtures::random_matrix(5, 1, rng)};
    const Matrix x = fixtures::random_matrix(8, 4, rng);
    auto build = [&](Tape& t) {
        Var h1 = ad::sin(ad::add_row(ad::matmul(t.constant(x), t.parameter(w1)), t.parameter(b1)));
        Var h2 = ad::softmax_rows(ad::matmul(h1, t.parameter(w2)));
        return ad::mean(ad::matmul(h2, t.parameter(w3)));
    };
    EXPECT_LE(ad::grad_check(build, {&w1, &b1, &w2, &w3}, 1e-5).max_relative_error, 1e-4);
}

namespace {

// Finite-difference check of a unary/structural op applied to a parameter, reduced by a random
// weighting so every output entry contributes.
double check_op(const std::function<Var(Var)>& op, Matrix input, std::uint64_t seed)
{
    Rng rng(seed);
    Parameter p{"x", std::move(input)};
    Matrix probe;
    auto build = [&](Tape& t) {
        Var y = op(t.parameter(p));
        if (probe.size() != y.value().size())
            probe = fixtures::random_matrix(y.rows(), y.cols(), rng);
        return ad::sum(ad::hadamard(y, t.constant(probe)));
    };
    return ad::grad_check(build, {&p}, 1e-5).max_relative_error;
}

Matrix away_from_zero(std::size_t r, std::size_t c, Rng& rng)
{
    Matrix m = fixtures::random_matrix(r, c, rng, -2, 2);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (std::abs(m[i]) < 1e-2)
            m[i] = 0.5;
    return m;
}

} // namespace

TEST(GradCheck, EveryPrimitiveAtRandomPoints)
{
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t s = 1000 + trial;
        const Matrix other = fixtures::random_matrix(3, 4, rng);
        const Matrix sq = fixtures::random_matrix(4, 4, rng);
        EXPECT_LE(check_op([&](Var x) { return ad::matmul(x, x.tape().constant(sq)); }, fixtures::random_matrix(3, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([&](Var x) { return ad::matmul(x.tape().constant(sq), ad::transpose(x)); }, fixtures::random_matrix(3, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([&](Var x) { return ad::add(x, x.tape().constant(other)); }, fixtures::random_matrix(3, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([&](Var x) { return ad::sub(x.tape().constant(other), x); }, fixtures::random_matrix(3, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([&](Var x) { return ad::hadamard(x, x); }, fixtures::random_matrix(3, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([&](Var x) { return ad::scale(x, -2.5); }, fixtures::random_matrix(3, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([](Var x) { return ad::relu(x); }, away_from_zero(3, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([](Var x) { return ad::abs(x); }, away_from_zero(3, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([](Var x) { return ad::sin(x); }, fixtures::random_matrix(3, 4, rng, -4, 4), s), 1e-4);
        EXPECT_LE(check_op([](Var x) { return ad::cos(x); }, fixtures::random_matrix(3, 4, rng, -4, 4), s), 1e-4);
        EXPECT_LE(check_op([](Var x) { return ad::softmax_rows(x); }, fixtures::random_matrix(3, 4, rng, -3, 3), s), 1e-4);
        EXPECT_LE(check_op([](Var x) { return ad::tile(x, 3); }, fixtures::random_matrix(4, 1, rng), s), 1e-4);
        EXPECT_LE(check_op([&](Var x) { return ad::add_row(x.tape().constant(other), x); }, fixtures::random_matrix(1, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([](Var x) { return ad::mean(x); }, fixtures::random_matrix(3, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([](Var x) { return ad::divide(ad::sum(x), ad::mean(ad::hadamard(x, x))); }, fixtures::random_matrix(2, 2, rng, 0.5, 2), s), 1e-4);
        EXPECT_LE(check_op([](Var x) { return ad::gather_rows(x, {2, 0, 1, 0}); }, fixtures::random_matrix(3, 4, rng), s), 1e-4);
        EXPECT_LE(check_op([](Var x) { return ad::normalize_minmax(x); }, fixtures::random_matrix(6, 1, rng), s), 1e-4);
    }
}

TEST(Ops, ClampPassesGradientOnlyInside)
{
    Parameter x{"x", Matrix(1, 3, {-2.0, 0.5, 3.0})};
    const std::vector<double> lo{-1, -1, -1}, hi{1, 1, 1};
    Tape t;
    Var y = ad::clamp_columns(t.parameter(x), lo, hi);
    EXPECT_EQ(y.value(), Matrix(1, 3, {-1.0, 0.5, 1.0}));
    t.backward(ad::sum(y));
    EXPECT_EQ(x.grad, Matrix(1, 3, {0.0, 1.0, 0.0}));
}

TEST(Ops, NormalizeMinmaxDegenerateIsZero)
{
    Tape t;
    Var y = ad::normalize_minmax(t.constant(Matrix(3, 1, 4.0)));
    EXPECT_EQ(y.value(), Matrix(3, 1));
}
