// Scratch diagnostics; not part of the suite.
#include <cstdio>
#include <random>

#include "oracles.hpp"
#include "selfcalib/gbsolver.hpp"
#include "selfcalib/pipeline.hpp"
#include "selfcalib/twoview.hpp"

using namespace selfcalib;

int main() {
    std::mt19937_64 rng(41);
    const auto scene = oracles::make_scene(oracles::default_k(), rng);
    auto [transform, pts] = normalize(scene.correspondences);
    const Eigen::Matrix3d s_inv = transform.inverse();
    const Eigen::Matrix3d f_hat =
        detail::normalize_scale_sign(s_inv.transpose() * scene.F * s_inv);
    const Eigen::Matrix3d k_hat = transform.S * scene.K;
    const double a = k_hat(0, 2), b = k_hat(1, 2), p = k_hat(0, 0) * k_hat(0, 0);
    std::printf("normalized gt: a=%g b=%g p=%g tau=%g\n", a, b, p, scene.tau);

    // f4 p^2 coefficient vs finite differences.
    const ConstraintSystem sys = expand_constraints(f_hat, scene.tau);
    {
        const double f0 = oracles::trace_constraint_numeric(f_hat, scene.tau, 0, 0, 0);
        const double fp = oracles::trace_constraint_numeric(f_hat, scene.tau, 0, 0, 1.0);
        const double fm = oracles::trace_constraint_numeric(f_hat, scene.tau, 0, 0, -1.0);
        const double expected = 0.5 * (fp + fm - 2.0 * f0);
        const int p2 = detail::basis_index(kBasisY0, Monomial{0, 0, 2});
        std::printf("f4 p^2 coeff: row=%.17g fd=%.17g (f0=%g fp=%g fm=%g)\n", sys.B0(3, p2),
                    expected, f0, fp, fm);
    }

    // Stage-by-stage structure.
    SolverOptions opt;
    opt.structure_tol = 1e300; // never throw; observe raw magnitudes
    opt.pivot_tol = 1e-300;
    const EliminationTrace trace = eliminate(sys, opt);

    {
        const Eigen::RowVectorXd r4 = trace.reduced[0].row(3);
        std::printf("B0~ row4: max=%g  a4=%g  b4=%g\n", r4.cwiseAbs().maxCoeff(),
                    r4(detail::basis_index(kBasisY0, Monomial{4, 0, 0})),
                    r4(detail::basis_index(kBasisY0, Monomial{0, 4, 0})));
    }
    for (int row = 4; row < 7; ++row) {
        const Eigen::RowVectorXd r = trace.reduced[1].row(row);
        double worst = 0.0;
        int worst_col = -1;
        for (int j = 0; j < 32; ++j) {
            if (!kBasisY1[j].divisible_by_p() && std::abs(r(j)) > worst) {
                worst = std::abs(r(j));
                worst_col = j;
            }
        }
        std::printf("B1~ row%d: max=%g worst non-div coeff=%g at col %d (a^%d b^%d p^%d)\n",
                    row + 1, r.cwiseAbs().maxCoeff(), worst, worst_col,
                    worst_col >= 0 ? kBasisY1[worst_col].deg_a : -1,
                    worst_col >= 0 ? kBasisY1[worst_col].deg_b : -1,
                    worst_col >= 0 ? kBasisY1[worst_col].deg_p : -1);
    }

    // Do the six rows of B5~ vanish at gt?
    Eigen::VectorXd y4(20);
    for (int i = 0; i < 20; ++i) y4(i) = kBasisY4[i].eval(a, b, p);
    for (int row = 8; row < 14; ++row) {
        const double value = trace.reduced[5].row(row) * y4;
        const double scale = trace.reduced[5].row(row).norm() * y4.norm();
        std::printf("B5~ row%d residual %g (rel %g)\n", row + 1, value, value / scale);
    }

    // Eigenvalues of the action matrix vs gt p.
    const auto mp = action_matrix(trace);
    Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(mp);
    std::printf("gt p=%g; eigenvalues:", p);
    for (int i = 0; i < 6; ++i)
        std::printf(" (%g,%g)", es.eigenvalues()(i).real(), es.eigenvalues()(i).imag());
    std::printf("\n");
    return 0;
}
