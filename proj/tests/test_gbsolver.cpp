#include "selfcalib/gbsolver.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "selfcalib/pipeline.hpp"
#include "selfcalib/twoview.hpp"

using namespace selfcalib;

namespace {

// Ground truth expressed in the normalized frame the solver works in:
// F_hat = S^-T F S^-1 and K_hat = S K.
struct NormalizedInstance {
    Eigen::Matrix3d F;
    double tau;
    double a, b, p;
};

NormalizedInstance normalized_instance(const oracles::TestScene& scene) {
    auto [transform, pts] = normalize(scene.correspondences);
    const Eigen::Matrix3d s_inv = transform.inverse();
    NormalizedInstance inst;
    inst.F = detail::normalize_scale_sign(s_inv.transpose() * scene.F * s_inv);
    inst.tau = scene.tau;
    const Eigen::Matrix3d k_hat = transform.S * scene.K;
    inst.a = k_hat(0, 2);
    inst.b = k_hat(1, 2);
    inst.p = k_hat(0, 0) * k_hat(0, 0);
    return inst;
}

Eigen::VectorXd eval_y4(double a, double b, double p) {
    Eigen::VectorXd v(20);
    for (int i = 0; i < 20; ++i) v(i) = kBasisY4[i].eval(a, b, p);
    return v;
}

} // namespace

TEST(Eliminate, StageDimensions) {
    constexpr auto dims = EliminationTrace::stage_dims();
    ASSERT_EQ(dims[0], (std::pair<int, int>{4, 22}));
    ASSERT_EQ(dims[1], (std::pair<int, int>{7, 32}));
    ASSERT_EQ(dims[2], (std::pair<int, int>{13, 32}));
    ASSERT_EQ(dims[3], (std::pair<int, int>{19, 32}));
    ASSERT_EQ(dims[4], (std::pair<int, int>{11, 20}));
    ASSERT_EQ(dims[5], (std::pair<int, int>{14, 20}));

    std::mt19937_64 rng(31);
    const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
    const EliminationTrace trace = eliminate(expand_constraints(inst.F, inst.tau));
    for (int i = 0; i < 6; ++i) {
        EXPECT_EQ(trace.reduced[i].rows(), dims[i].first) << "stage " << i;
        EXPECT_EQ(trace.reduced[i].cols(), dims[i].second) << "stage " << i;
    }
}

TEST(Eliminate, ReducedStagesHaveIdentityLeftBlocks) {
    std::mt19937_64 rng(37);
    const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
    const EliminationTrace trace = eliminate(expand_constraints(inst.F, inst.tau));
    for (int i = 0; i < 6; ++i) {
        const auto& m = trace.reduced[i];
        const int n = static_cast<int>(m.rows());
        EXPECT_LT((m.leftCols(n) - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-12) << "stage " << i;
    }
}

// Rows 6 and 7 of the reduced stage-1 matrix carry polynomials divisible by p.
TEST(Eliminate, Stage2Divisibility) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
        const EliminationTrace trace = eliminate(expand_constraints(inst.F, inst.tau));
        for (int row : {5, 6}) {
            const Eigen::RowVectorXd r = trace.reduced[1].row(row);
            const double scale = r.cwiseAbs().maxCoeff();
            for (int j = 0; j < 32; ++j) {
                if (!kBasisY1[j].divisible_by_p())
                    EXPECT_LE(std::abs(r(j)), 1e-9 * scale)
                        << "row " << row + 1 << " col " << j;
            }
        }
    }
}

TEST(Eliminate, GroebnerRowsVanishAtGroundTruth) {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
        const EliminationTrace trace = eliminate(expand_constraints(inst.F, inst.tau));
        const Eigen::VectorXd y = eval_y4(inst.a, inst.b, inst.p);
        for (int row = 8; row < 14; ++row) {
            const double value = trace.reduced[5].row(row) * y;
            const double scale = trace.reduced[5].row(row).norm() * y.norm();
            EXPECT_LE(std::abs(value), 1e-8 * scale) << "basis row " << row - 8;
        }
    }
}

TEST(ActionMatrix, Structure) {
    std::mt19937_64 rng(47);
    const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
    const auto mp = action_matrix(eliminate(expand_constraints(inst.F, inst.tau)));
    // Rows 4-6 are unit vectors e1, e2, e5.
    Eigen::Matrix<double, 3, 6> expected = Eigen::Matrix<double, 3, 6>::Zero();
    expected(0, 0) = expected(1, 1) = expected(2, 4) = 1.0;
    EXPECT_LT((mp.bottomRows(3) - expected).norm(), 1e-15);
}

TEST(ActionMatrix, EigenvaluesContainGroundTruthP) {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
        const auto mp = action_matrix(eliminate(expand_constraints(inst.F, inst.tau)));
        const Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(mp);
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 6; ++i) best = std::min(best, std::abs(es.eigenvalues()(i) - std::complex<double>(inst.p)));
        EXPECT_LE(best, 1e-6 * inst.p);
    }
}

// One pinned instance: the real points of the solution variety found by
// multi-start Newton on the numeric equations must agree with the real
// eigenvalues of the action matrix.
TEST(ActionMatrix, EigenvaluesMatchBruteForceOracle) {
    std::mt19937_64 rng(59);
    const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
    const auto mp = action_matrix(eliminate(expand_constraints(inst.F, inst.tau)));

    // Real eigenpairs with their (a, b, p) read off the eigenvectors.
    SolveStats stats;
    SolverOptions opt;
    opt.min_abs_p = -std::numeric_limits<double>::infinity(); // keep negative-p roots
    const Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(mp);
    std::vector<Eigen::Vector3d> eigen_roots;
    for (int k = 0; k < 6; ++k) {
        const auto lambda = es.eigenvalues()(k);
        if (std::abs(lambda.imag()) > 1e-6 * (1.0 + std::abs(lambda.real()))) continue;
        const auto v = es.eigenvectors().col(k);
        const auto w = v / v(5);
        eigen_roots.emplace_back(w(2).real(), w(3).real(), w(4).real());
    }

    // Brute-force oracle over a box spanning the expected normalized range.
    const Eigen::Vector3d lo(-15.0, -15.0, -40.0);
    const Eigen::Vector3d hi(15.0, 15.0, 40.0);
    std::vector<Eigen::Vector3d> oracle_roots =
        oracles::newton_roots_f124(inst.F, inst.tau, lo, hi, 8);

    // Keep oracle roots that satisfy the full system (f3 as well) away from the
    // spurious p = 0 plane.
    std::vector<Eigen::Vector3d> variety;
    for (const auto& x : oracle_roots) {
        if (std::abs(x(2)) < 1e-6) continue;
        const Eigen::Matrix3d g = oracles::constraint_matrix_numeric(inst.F, x(0), x(1), x(2));
        const double scale = oracles::constraint_matrix_scale(inst.F, x(0), x(1), x(2));
        if (g.cwiseAbs().maxCoeff() > 1e-8 * scale) continue;
        variety.push_back(x);
    }

    ASSERT_FALSE(variety.empty());
    EXPECT_EQ(variety.size(), eigen_roots.size());
    for (const auto& x : variety) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : eigen_roots) best = std::min(best, std::abs(e(2) - x(2)));
        EXPECT_LE(best, 1e-6 * (1.0 + std::abs(x(2)))) << "oracle root p=" << x(2);
    }
}

TEST(ExtractSolutions, NoiseFreeRecoversGroundTruthK) {
    std::mt19937_64 rng(61);
    const Eigen::Matrix3d k_gt = oracles::default_k();
    for (int trial = 0; trial < 10; ++trial) {
        const auto scene = oracles::make_scene(k_gt, rng);
        auto [transform, pts] = normalize(scene.correspondences);
        const FundamentalMatrix f_hat = solve_fundamental_npt(pts);

        SolveStats stats;
        const auto solutions = self_calibrate(f_hat.F, scene.tau, {}, &stats);
        ASSERT_FALSE(solutions.empty());
        EXPECT_EQ(stats.n_total, 6);

        const Eigen::Matrix3d s_inv = transform.inverse();
        double best = std::numeric_limits<double>::infinity();
        for (const auto& sol : solutions)
            best = std::min(best, (s_inv * sol.K - k_gt).norm() / k_gt.norm());
        EXPECT_LE(best, 1e-6);
    }
}

TEST(ExtractSolutions, FeasibleCountUsuallyOne) {
    std::mt19937_64 rng(67);
    int ones = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
        SolveStats stats;
        try {
            self_calibrate(inst.F, inst.tau, {}, &stats);
        } catch (const DegenerateError&) {
            continue;
        }
        ++total;
        EXPECT_LE(stats.n_real, 6);
        EXPECT_LE(stats.n_feasible, stats.n_real);
        if (stats.n_feasible == 1) ++ones;
    }
    ASSERT_GT(total, 80);
    EXPECT_GT(static_cast<double>(ones) / total, 0.8);
}

// Returned solutions zero all ten constraints: the full matrix G and the trace
// constraint, evaluated numerically.
TEST(SelfCalibrate, SolutionsSatisfyAllConstraints) {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
        const auto solutions = self_calibrate(inst.F, inst.tau);
        ASSERT_FALSE(solutions.empty());
        for (const auto& sol : solutions) {
            const Eigen::Matrix3d g =
                oracles::constraint_matrix_numeric(inst.F, sol.a, sol.b, sol.p);
            const double gscale = oracles::constraint_matrix_scale(inst.F, sol.a, sol.b, sol.p);
            EXPECT_LE(g.cwiseAbs().maxCoeff(), 1e-7 * gscale);
            const double f4 =
                oracles::trace_constraint_numeric(inst.F, inst.tau, sol.a, sol.b, sol.p);
            const double f4scale =
                oracles::trace_constraint_scale(inst.F, inst.tau, sol.a, sol.b, sol.p);
            EXPECT_LE(std::abs(f4), 1e-7 * f4scale);
            EXPECT_GT(sol.p, 1e-9);
            EXPECT_DOUBLE_EQ(sol.f, std::sqrt(sol.p));
        }
    }
}

TEST(SelfCalibrate, ScaleCovarianceInF) {
    std::mt19937_64 rng(73);
    const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
    const auto sols1 = self_calibrate(inst.F, inst.tau);
    const auto sols2 = self_calibrate(3.7 * inst.F, inst.tau);
    ASSERT_EQ(sols1.size(), sols2.size());
    for (std::size_t i = 0; i < sols1.size(); ++i) {
        EXPECT_LE(std::abs(sols1[i].a - sols2[i].a), 1e-9 * (1.0 + std::abs(sols1[i].a)));
        EXPECT_LE(std::abs(sols1[i].b - sols2[i].b), 1e-9 * (1.0 + std::abs(sols1[i].b)));
        EXPECT_LE(std::abs(sols1[i].p - sols2[i].p), 1e-9 * (1.0 + std::abs(sols1[i].p)));
    }
}

TEST(SelfCalibrate, SortedByDescendingP) {
    std::mt19937_64 rng(79);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = normalized_instance(oracles::make_scene(oracles::default_k(), rng));
        const auto sols = self_calibrate(inst.F, inst.tau);
        for (std::size_t i = 1; i < sols.size(); ++i) EXPECT_GE(sols[i - 1].p, sols[i].p);
    }
}

// A pure-translation pair (tau = 3, R = I) leaves the constraints rank
// deficient; the elimination must refuse rather than hallucinate a pivot.
TEST(Eliminate, PureTranslationInstanceIsDegenerate) {
    const Eigen::Vector3d t(0.3, -0.1, 0.9);
    const Eigen::Matrix3d k = oracles::default_k();
    const Eigen::Matrix3d f = k.inverse().transpose() * oracles::skew(t) * k.inverse();
    EXPECT_THROW(eliminate(expand_constraints(detail::normalize_scale_sign(f), 3.0)),
                 DegenerateError);
}
