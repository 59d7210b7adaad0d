#include "selfcalib/polyexpand.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace selfcalib;

namespace {

Eigen::VectorXd eval_y0(double a, double b, double p) {
    Eigen::VectorXd v(22);
    for (int i = 0; i < 22; ++i) v(i) = kBasisY0[i].eval(a, b, p);
    return v;
}

} // namespace

TEST(OmegaStar, SymbolicEntries) {
    const PolyMat3 w = omega_star_symbolic();
    // (3,3) entry is the constant 1, (1,3) entry is the bare monomial a.
    EXPECT_EQ(w(2, 2).terms().size(), 1u);
    EXPECT_DOUBLE_EQ(w(2, 2).coeff(kMonoOne), 1.0);
    EXPECT_EQ(w(0, 2).terms().size(), 1u);
    EXPECT_DOUBLE_EQ(w(0, 2).coeff(kMonoA), 1.0);
    // (1,1) = a^2 + p.
    EXPECT_DOUBLE_EQ(w(0, 0).coeff(Monomial{2, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(w(0, 0).coeff(kMonoP), 1.0);
}

TEST(OmegaStar, IdentityAtUnitFocal) {
    const PolyMat3 w = omega_star_symbolic();
    EXPECT_LT((w.eval(0.0, 0.0, 1.0) - Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(ExpandConstraints, RowsVanishAtGroundTruth) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto scene = oracles::make_scene(oracles::default_k(), rng);
        const ConstraintSystem sys = expand_constraints(scene.F, scene.tau);

        const double a = scene.K(0, 2), b = scene.K(1, 2);
        const double p = scene.K(0, 0) * scene.K(0, 0);
        const Eigen::VectorXd y = eval_y0(a, b, p);
        for (int r = 0; r < 4; ++r) {
            const double value = sys.B0.row(r) * y;
            const double scale = sys.B0.row(r).cwiseAbs().maxCoeff() * y.cwiseAbs().maxCoeff();
            EXPECT_LE(std::abs(value), 1e-10 * scale) << "row " << r;
        }
    }
}

// The p^2 coefficient of the trace constraint, recovered from the scalar map
// by an exact second difference in p (the a = b = 0 slice is quadratic in p).
TEST(ExpandConstraints, TraceRowQuadraticCoefficientMatchesFiniteDifference) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto scene = oracles::make_scene(oracles::default_k(), rng);
        const ConstraintSystem sys = expand_constraints(scene.F, scene.tau);

        const double f0 = oracles::trace_constraint_numeric(scene.F, scene.tau, 0, 0, 0);
        const double fp = oracles::trace_constraint_numeric(scene.F, scene.tau, 0, 0, 1.0);
        const double fm = oracles::trace_constraint_numeric(scene.F, scene.tau, 0, 0, -1.0);
        const double expected = 0.5 * (fp + fm - 2.0 * f0);

        const int p2 = detail::basis_index(kBasisY0, Monomial{0, 0, 2});
        const double got = sys.B0(3, p2);
        EXPECT_LE(std::abs(got - expected), 1e-9 * (std::abs(expected) + std::abs(got) + 1e-300));
    }
}

TEST(ExpandConstraints, HomogeneityInF) {
    std::mt19937_64 rng(13);
    const auto scene = oracles::make_scene(oracles::default_k(), rng);
    const ConstraintSystem sys1 = expand_constraints(scene.F, scene.tau);
    const ConstraintSystem sys2 = expand_constraints(2.0 * scene.F, scene.tau);
    // G is cubic in F, the trace constraint quadratic.
    for (int r = 0; r < 3; ++r)
        EXPECT_LT((sys2.B0.row(r) - 8.0 * sys1.B0.row(r)).norm(), 1e-9 * sys2.B0.row(r).norm());
    EXPECT_LT((sys2.B0.row(3) - 4.0 * sys1.B0.row(3)).norm(), 1e-9 * sys2.B0.row(3).norm());
}

// Property: coefficient rows reproduce direct numeric evaluation of the matrix
// formulas at random (F, tau, a, b, p).
TEST(ExpandConstraints, RandomEvaluationMatchesNumericOracle) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> utau(-1.0, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::Matrix3d f;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) f(i, j) = gauss(rng);
        const double tau = utau(rng);
        const double a = 3.0 * gauss(rng), b = 3.0 * gauss(rng), p = 5.0 * gauss(rng);

        const ConstraintSystem sys = expand_constraints(f, tau);
        const Eigen::VectorXd y = eval_y0(a, b, p);
        const Eigen::Matrix3d g = oracles::constraint_matrix_numeric(f, a, b, p);
        const double gscale = oracles::constraint_matrix_scale(f, a, b, p);
        for (int r = 0; r < 3; ++r) {
            const double direct = g(r, r);
            const double via_row = sys.B0.row(r) * y;
            EXPECT_LE(std::abs(via_row - direct), 1e-9 * (gscale + std::abs(direct)));
        }
        const double f4 = oracles::trace_constraint_numeric(f, tau, a, b, p);
        const double f4scale = oracles::trace_constraint_scale(f, tau, a, b, p);
        EXPECT_LE(std::abs(sys.B0.row(3) * y - f4), 1e-9 * (f4scale + std::abs(f4)));
    }
}

// Null-vector property: G annihilates the null vectors of F for any (a, b, p).
TEST(ExpandConstraints, NullVectorProperty) {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto scene = oracles::make_scene(oracles::default_k(), rng);
        const Eigen::JacobiSVD<Eigen::Matrix3d> svd(scene.F,
                                                    Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Eigen::Vector3d e = svd.matrixV().col(2);       // right null vector
        const Eigen::Vector3d e_prime = svd.matrixU().col(2); // left null vector

        const double a = 500.0 * gauss(rng), b = 500.0 * gauss(rng);
        const double p = 1e6 * std::abs(gauss(rng));
        const Eigen::Matrix3d g = oracles::constraint_matrix_numeric(scene.F, a, b, p);
        EXPECT_LE((g * e).norm(), 1e-9 * g.norm());
        EXPECT_LE((g.transpose() * e_prime).norm(), 1e-9 * g.norm());

        // Same property through the symbolic expansion.
        const Eigen::Matrix3d g_sym = constraint_matrix_symbolic(scene.F).eval(a, b, p);
        EXPECT_LE((g_sym * e).norm(), 1e-9 * g_sym.norm());
    }
}

// Every term of the expanded constraints lies inside the 22-monomial basis:
// projecting and re-evaluating reproduces the polynomial exactly.
TEST(ExpandConstraints, SupportInsideBasis) {
    std::mt19937_64 rng(23);
    const auto scene = oracles::make_scene(oracles::default_k(), rng);
    const PolyMat3 g = constraint_matrix_symbolic(scene.F);
    const Poly3 f4 = trace_constraint_symbolic(scene.F, scene.tau);
    for (const Poly3* poly : {&g(0, 0), &g(1, 1), &g(2, 2), &f4}) {
        for (const auto& [mono, coeff] : poly->terms()) {
            EXPECT_GE(detail::basis_index(kBasisY0, mono), 0)
                << "monomial a^" << mono.deg_a << " b^" << mono.deg_b << " p^" << mono.deg_p;
        }
    }
}

TEST(ExpandConstraints, RejectsZeroF) {
    EXPECT_THROW(expand_constraints(Eigen::Matrix3d::Zero(), 2.0), DegenerateError);
    EXPECT_THROW(expand_constraints(Eigen::Matrix3d::Identity(), 5.0), std::invalid_argument);
}
