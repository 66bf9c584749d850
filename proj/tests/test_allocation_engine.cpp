#include <doctest.h>

#include <random>

#include "aegis/allocation_engine.hpp"
#include "oracles.hpp"

using namespace aegis;
using namespace aegis::allocation;
using Eigen::Index;

namespace {

AllocationProblem random_problem(std::mt19937_64& rng, Index assets, Index days = 63) {
    std::normal_distribution<double> z(0, 1);
    std::uniform_real_distribution<double> u(0, 1);
    AllocationProblem p;
    p.asset_returns.resize(days, assets);
    const Eigen::VectorXd mkt = Eigen::VectorXd::NullaryExpr(days, [&] { return 0.01 * z(rng); });
    for (Index c = 0; c < assets; ++c) {
        const double mu = 0.002 * (u(rng) - 0.3), beta = u(rng) * 1.5, s = 0.005 + 0.02 * u(rng);
        for (Index t = 0; t < days; ++t) p.asset_returns(t, c) = mu + beta * mkt(t) + s * z(rng);
        p.tickers.push_back("A" + std::to_string(c));
    }
    return p;
}

std::vector<std::vector<double>> columns(const AllocationProblem& p) {
    std::vector<std::vector<double>> out;
    for (Index c = 0; c < p.assets(); ++c) {
        const Eigen::VectorXd v = p.asset_returns.col(c);
        out.emplace_back(v.data(), v.data() + v.size());
    }
    return out;
}

}  // namespace

TEST_SUITE("allocation_engine") {
    TEST_CASE("downside deviation") {
        CHECK(downside_deviation(Eigen::VectorXd::Constant(10, 0.01), 0.04, 252) == 0.0);
        Eigen::Vector2d r(-0.01, 0.05);
        CHECK(downside_deviation(r, 0.0, 252) == doctest::Approx(std::sqrt(0.0001 / 2) * std::sqrt(252.0)).epsilon(1e-14));
        CHECK(downside_deviation(Eigen::VectorXd::Constant(5, 0.04 / 252), 0.04, 252) == 0.0);
        CHECK_THROWS_AS(downside_deviation(Eigen::VectorXd(0), 0.04, 252), DataError);
    }

    TEST_CASE("objective special cases") {
        AllocationProblem p;
        const double x = 0.02;
        p.asset_returns = Eigen::MatrixXd::Constant(30, 1, (0.04 + x) / 252);
        p.cap = 1.0;
        CHECK(sortino_objective(Eigen::VectorXd::Ones(1), p) == doctest::Approx(x / p.epsilon).epsilon(1e-6));
        p.asset_returns.setConstant(0.04 / 252);
        CHECK(std::abs(sortino_objective(Eigen::VectorXd::Ones(1), p)) < 1e-6);
    }

    TEST_CASE("objective matches a straight-line oracle") {
        std::mt19937_64 rng(21);
        const auto p = random_problem(rng, 2);
        const Eigen::Vector2d w(0.5, 0.5);
        CHECK(std::abs(sortino_objective(w, p) - oracle::allocation_sortino(columns(p), {0.5, 0.5})) < 1e-10);
    }

    TEST_CASE("analytic gradient agrees with central differences") {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(0.2, 1);
        for (int trial = 0; trial < 20; ++trial) {
            const auto p = random_problem(rng, 8);
            Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(8, [&] { return u(rng); });
            w /= w.sum();
            const Eigen::VectorXd g = sortino_gradient(w, p);
            for (Index i = 0; i < 8; ++i) {
                Eigen::VectorXd a = w, b = w;
                a(i) += 1e-6;
                b(i) -= 1e-6;
                const double fd = (sortino_objective(a, p) - sortino_objective(b, p)) / 2e-6;
                CHECK(std::abs(fd - g(i)) <= 1e-4 * std::max(1.0, std::abs(g(i))));
            }
        }
    }

    TEST_CASE("cap feasibility") {
        AllocationProblem p;
        p.asset_returns = Eigen::MatrixXd::Constant(10, 15, 0.001);
        CHECK_THROWS_AS(optimize(p), InfeasibleError);
        p.relax_cap = true;
        CHECK(p.effective_cap() == doctest::Approx(1.0 / 15));
        const auto w = optimize(p);
        CHECK(w.weights.sum() == doctest::Approx(1.0));
    }

    TEST_CASE("two assets with relaxed cap are forced to equal weight") {
        std::mt19937_64 rng(5);
        auto p = random_problem(rng, 2);
        p.relax_cap = true;
        const auto w = optimize(p);
        CHECK(w.weights(0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(w.weights(1) == doctest::Approx(0.5).epsilon(1e-12));
    }

    TEST_CASE("identical assets: equal weights are optimal") {
        std::mt19937_64 rng(6);
        std::normal_distribution<double> z(0.0005, 0.01);
        AllocationProblem p;
        const Eigen::VectorXd r = Eigen::VectorXd::NullaryExpr(63, [&] { return z(rng); });
        p.asset_returns = r.replicate(1, 25);
        const auto w = optimize(p);
        const Eigen::VectorXd eq = Eigen::VectorXd::Constant(25, 1.0 / 25);
        CHECK(std::abs(w.objective_value - sortino_objective(eq, p)) < 1e-8);
    }

    TEST_CASE("a dominant asset sits at the cap") {
        std::mt19937_64 rng(12);
        auto p = random_problem(rng, 20);
        p.asset_returns.col(7).array() += 0.01;
        const auto w = optimize(p);
        CHECK(w.weights(7) == doctest::Approx(p.cap).epsilon(1e-9));
        // Moving mass off the dominant name never helps.
        for (Index j = 0; j < 20; ++j) {
            if (j == 7 || w.weights(j) > p.cap - 1e-6) continue;
            Eigen::VectorXd v = w.weights;
            v(7) -= 1e-4;
            v(j) += 1e-4;
            CHECK(sortino_objective(v, p) <= w.objective_value + 1e-12);
        }
    }

    TEST_CASE("random problems respect the constraints and are deterministic") {
        std::mt19937_64 rng(13);
        std::uniform_int_distribution<int> n(20, 60);
        for (int trial = 0; trial < 30; ++trial) {
            const auto p = random_problem(rng, n(rng));
            const auto w = optimize(p);
            CHECK(std::abs(w.weights.sum() - 1.0) <= 1e-6);
            CHECK(w.weights.minCoeff() >= 0.0);
            CHECK(w.weights.maxCoeff() <= p.cap + 1e-9);
            CHECK(w.objective_value >= sortino_objective(initial_weights(p), p) - 1e-12);
            const auto again = optimize(p);
            CHECK(again.weights == w.weights);
        }
    }

    TEST_CASE("small relaxed problems reach the simplex grid maximum") {
        std::mt19937_64 rng(14);
        std::uniform_real_distribution<double> u(0, 1);
        for (int trial = 0; trial < 10; ++trial) {
            auto p = random_problem(rng, 3);
            p.relax_cap = true;
            p.cap = 1.0 / 3 + u(rng) * (2.0 / 3);
            const auto w = optimize(p);
            double best = -1e300;
            for (int i = 0; i <= 100; ++i)
                for (int j = 0; i + j <= 100; ++j) {
                    const Eigen::Vector3d v(i / 100.0, j / 100.0, (100 - i - j) / 100.0);
                    if (v.maxCoeff() > p.cap + 1e-12) continue;
                    best = std::max(best, sortino_objective(v, p));
                }
            CHECK(w.objective_value >= best - 1e-6);
        }
    }

    TEST_CASE("box-budget QP solves a known instance") {
        const Eigen::MatrixXd B = Eigen::MatrixXd::Identity(3, 3);
        const Eigen::Vector3d g(-1, 0, 1);
        const Eigen::Vector3d lo = Eigen::Vector3d::Constant(-1), hi = Eigen::Vector3d::Constant(1);
        const Eigen::VectorXd d = detail::solve_box_budget_qp(B, g, lo, hi);
        CHECK(d(0) == doctest::Approx(1.0));
        CHECK(d(1) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(d(2) == doctest::Approx(-1.0));
        const Eigen::Vector3d tight_hi(0.5, 1, 1);
        const Eigen::VectorXd e = detail::solve_box_budget_qp(B, g, lo, tight_hi);
        CHECK(e(0) == doctest::Approx(0.5));
        CHECK(e.sum() == doctest::Approx(0.0).epsilon(1e-12));
    }
}
