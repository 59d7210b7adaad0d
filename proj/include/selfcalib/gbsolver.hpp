#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <complex>
#include <utility>
#include <vector>

#include "selfcalib/errors.hpp"
#include "selfcalib/polyexpand.hpp"

namespace selfcalib {

struct SolverOptions {
    // RREF pivot threshold, relative to the working matrix (rows are scaled to
    // unit infinity norm first).
    double pivot_tol = 1e-10;
    // Bound, relative to a row's largest coefficient, for coefficients that the
    // template requires to vanish (degree drops, p-divisibility). Violations
    // mean the instance is too close to degenerate.
    double structure_tol = 1e-6;
    // An eigenvalue/eigenvector coordinate counts as real when its imaginary
    // part is below complex_tol * (1 + |real part|).
    double complex_tol = 1e-6;
    // Eigenvectors whose dehomogenizing coordinate is below this (times the
    // vector norm) encode solutions at infinity.
    double dehomogenize_tol = 1e-12;
    // Solutions on the spurious p = 0 component are rejected below this.
    double min_abs_p = 1e-9;
};

// Monomial vector y1: columns of the 7x32 .. 19x32 stages.
inline constexpr std::array<Monomial, 32> kBasisY1 = {{
    {3, 1, 0}, // a^3 b
    {2, 2, 0}, // a^2 b^2
    {1, 3, 0}, // a b^3
    {2, 1, 0}, // a^2 b
    {3, 0, 1}, // a^3 p
    {2, 1, 1}, // a^2 b p
    {1, 2, 1}, // a b^2 p
    {4, 0, 0}, // a^4
    {0, 4, 0}, // b^4
    {3, 0, 0}, // a^3
    {1, 2, 0}, // a b^2
    {0, 3, 0}, // b^3
    {2, 0, 1}, // a^2 p
    {0, 2, 2}, // b^2 p^2
    {1, 0, 2}, // a p^2
    {1, 1, 1}, // a b p
    {0, 2, 1}, // b^2 p
    {0, 3, 1}, // b^3 p
    {2, 0, 0}, // a^2
    {1, 1, 2}, // a b p^2
    {2, 0, 2}, // a^2 p^2
    {1, 1, 0}, // a b
    {0, 2, 0}, // b^2
    {0, 1, 2}, // b p^2
    {0, 0, 3}, // p^3
    {1, 0, 1}, // a p
    {0, 1, 1}, // b p
    {0, 0, 2}, // p^2
    {1, 0, 0}, // a
    {0, 1, 0}, // b
    {0, 0, 1}, // p
    {0, 0, 0}, // 1
}};

// Monomial vector y4: columns of the 11x20 and 14x20 stages. The trailing six
// monomials [bp p^2 a b p 1] span the quotient ring.
inline constexpr std::array<Monomial, 20> kBasisY4 = {{
    {2, 1, 0}, // a^2 b
    {3, 0, 0}, // a^3
    {1, 2, 0}, // a b^2
    {0, 3, 0}, // b^3
    {2, 0, 1}, // a^2 p
    {1, 0, 2}, // a p^2
    {1, 1, 1}, // a b p
    {0, 2, 1}, // b^2 p
    {2, 0, 0}, // a^2
    {1, 1, 0}, // a b
    {0, 2, 0}, // b^2
    {0, 1, 2}, // b p^2
    {0, 0, 3}, // p^3
    {1, 0, 1}, // a p
    {0, 1, 1}, // b p
    {0, 0, 2}, // p^2
    {1, 0, 0}, // a
    {0, 1, 0}, // b
    {0, 0, 1}, // p
    {0, 0, 0}, // 1
}};

/// The five-stage elimination. `reduced[i]` is the reduced row echelon form of
/// the stage-i matrix, stored exactly as computed (structural near-zeros are
/// not cleaned here so tests can inspect them).
struct EliminationTrace {
    std::array<Eigen::MatrixXd, 6> reduced;

    // (rows, cols) of B0..B5 before reduction.
    static constexpr std::array<std::pair<int, int>, 6> stage_dims() {
        return {{{4, 22}, {7, 32}, {13, 32}, {19, 32}, {11, 20}, {14, 20}}};
    }
};

/// One root of the quartic system in normalized image coordinates.
struct CalibrationSolution {
    double a = 0.0; // principal point x
    double b = 0.0; // principal point y
    double p = 0.0; // squared focal length
    double f = 0.0; // sqrt(p)
    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();

    static CalibrationSolution from_abp(double a, double b, double p) {
        CalibrationSolution s;
        s.a = a;
        s.b = b;
        s.p = p;
        s.f = std::sqrt(p);
        s.K << s.f, 0.0, a, 0.0, s.f, b, 0.0, 0.0, 1.0;
        return s;
    }
};

/// Root counts of one solve: six eigenvalues total, n_real of them real,
/// n_feasible additionally with p > 0.
struct SolveStats {
    int n_total = 0;
    int n_real = 0;
    int n_feasible = 0;
};

namespace detail {

// Reduced row echelon form with row scaling and partial pivoting. The template
// requires the pivot of row r to land on column r; a vanishing pivot means the
// instance is (near-)degenerate.
inline void rref_in_place(Eigen::MatrixXd& m, double pivot_tol) {
    const int rows = static_cast<int>(m.rows());
    for (int r = 0; r < rows; ++r) {
        const double s = m.row(r).cwiseAbs().maxCoeff();
        if (s > 0.0) m.row(r) /= s;
    }
    for (int r = 0; r < rows; ++r) {
        int best = r;
        double best_abs = std::abs(m(r, r));
        for (int i = r + 1; i < rows; ++i) {
            const double v = std::abs(m(i, r));
            if (v > best_abs) {
                best = i;
                best_abs = v;
            }
        }
        if (best_abs < pivot_tol)
            throw DegenerateError("elimination pivot below threshold at column " +
                                  std::to_string(r));
        if (best != r) m.row(r).swap(m.row(best));
        m.row(r) /= m(r, r);
        for (int i = 0; i < rows; ++i) {
            if (i == r) continue;
            const double factor = m(i, r);
            if (factor != 0.0) m.row(i) -= factor * m.row(r);
        }
        for (int i = 0; i < rows; ++i) m(i, r) = (i == r) ? 1.0 : 0.0;
    }
}

// Checks that the coefficients a stage requires to vanish are numerically
// negligible, then zeroes them.
inline void require_small_and_zero(Eigen::RowVectorXd& row, int col, double tol_abs,
                                   const char* what) {
    if (std::abs(row(col)) > tol_abs)
        throw DegenerateError(std::string("elimination structure violated: ") + what);
    row(col) = 0.0;
}

// row * var over `basis`. Coefficients whose product monomial leaves the basis
// must vanish (checked against structure_tol).
template <std::size_t N>
Eigen::RowVectorXd multiply_in_basis(const Eigen::RowVectorXd& row, const Monomial& var,
                                     const std::array<Monomial, N>& basis,
                                     double structure_tol) {
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(static_cast<int>(N));
    const double tol_abs = structure_tol * row.cwiseAbs().maxCoeff();
    for (int j = 0; j < static_cast<int>(N); ++j) {
        const double c = row(j);
        if (c == 0.0) continue;
        const int target = basis_index(basis, basis[j].times(var));
        if (target >= 0) {
            out(target) += c;
        } else if (std::abs(c) > tol_abs) {
            throw DegenerateError("elimination structure violated: product monomial escapes basis");
        }
    }
    return out;
}

// row / p over `basis`; coefficients on monomials not divisible by p must vanish.
template <std::size_t N>
Eigen::RowVectorXd divide_by_p_in_basis(const Eigen::RowVectorXd& row,
                                        const std::array<Monomial, N>& basis,
                                        double structure_tol) {
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(static_cast<int>(N));
    const double tol_abs = structure_tol * row.cwiseAbs().maxCoeff();
    for (int j = 0; j < static_cast<int>(N); ++j) {
        const double c = row(j);
        if (c == 0.0) continue;
        if (basis[j].divisible_by_p()) {
            const int target = basis_index(basis, basis[j].divided_by_p());
            if (target < 0)
                throw std::logic_error("p-quotient monomial missing from basis");
            out(target) += c;
        } else if (std::abs(c) > tol_abs) {
            throw DegenerateError("elimination structure violated: row not divisible by p");
        }
    }
    return out;
}

// Re-expresses a row over a different monomial basis. Coefficients on source
// monomials absent from the target must vanish.
template <std::size_t NFrom, std::size_t NTo>
Eigen::RowVectorXd reindex_row(const Eigen::RowVectorXd& row,
                               const std::array<Monomial, NFrom>& from,
                               const std::array<Monomial, NTo>& to, double structure_tol) {
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(static_cast<int>(NTo));
    const double tol_abs = structure_tol * row.cwiseAbs().maxCoeff();
    for (int j = 0; j < static_cast<int>(NFrom); ++j) {
        const double c = row(j);
        if (c == 0.0) continue;
        const int target = basis_index(to, from[j]);
        if (target >= 0) {
            out(target) = c;
        } else if (std::abs(c) > tol_abs) {
            throw DegenerateError("elimination structure violated: monomial dropped with large coefficient");
        }
    }
    return out;
}

} // namespace detail

/// Runs the five-stage reduction B0 -> ... -> B5~, producing the reduced
/// Groebner basis of the quotient ideal (the last six rows of the final stage).
///
/// Stage recipe, with 1-based row numbers as in the construction:
///   1. append a,b,p multiples of row 4 of B0~ under the 32-monomial basis y1;
///   2. divide rows 6,7 of B1~ by p, append the quotients and their a,b multiples;
///   3. append a,b,p multiples of rows 12,13 of B2~;
///   4. keep rows 4,10,11,12,13,16,17,19 of B3~, drop all degree-4 columns
///      (basis y4, 20 monomials), append a,b,p multiples of row 19;
///   5. append a,b,p multiples of row 11 of B4~.
inline EliminationTrace eliminate(const ConstraintSystem& sys, const SolverOptions& opt = {}) {
    EliminationTrace trace;
    const auto& y0 = kBasisY0;
    const auto& y1 = kBasisY1;
    const auto& y4 = kBasisY4;

    // Stage 0: reduce the 4x22 input.
    {
        Eigen::MatrixXd b0 = sys.B0;
        detail::rref_in_place(b0, opt.pivot_tol);
        trace.reduced[0] = b0;
    }

    // Stage 1: row 4 of B0~ has degree 3 (its a^4 and b^4 coefficients vanish);
    // its a,b,p multiples extend the system to the 32-monomial basis.
    {
        Eigen::RowVectorXd r4 = trace.reduced[0].row(3);
        const double tol_abs = opt.structure_tol * r4.cwiseAbs().maxCoeff();
        detail::require_small_and_zero(r4, detail::basis_index(y0, Monomial{4, 0, 0}), tol_abs,
                                       "row 4 of B0~ has an a^4 term");
        detail::require_small_and_zero(r4, detail::basis_index(y0, Monomial{0, 4, 0}), tol_abs,
                                       "row 4 of B0~ has a b^4 term");

        Eigen::MatrixXd b1(7, 32);
        for (int r = 0; r < 4; ++r)
            b1.row(r) = detail::reindex_row(Eigen::RowVectorXd(trace.reduced[0].row(r)), y0, y1,
                                            opt.structure_tol);
        const Eigen::RowVectorXd r4_y1 = detail::reindex_row(r4, y0, y1, opt.structure_tol);
        b1.row(4) = detail::multiply_in_basis(r4_y1, kMonoA, y1, opt.structure_tol);
        b1.row(5) = detail::multiply_in_basis(r4_y1, kMonoB, y1, opt.structure_tol);
        b1.row(6) = detail::multiply_in_basis(r4_y1, kMonoP, y1, opt.structure_tol);
        detail::rref_in_place(b1, opt.pivot_tol);
        trace.reduced[1] = b1;
    }

    // Stage 2: rows 6,7 of B1~ are divisible by p; append q, a q, b q for each
    // quotient q.
    {
        Eigen::MatrixXd b2(13, 32);
        b2.topRows(7) = trace.reduced[1];
        int next = 7;
        for (int paper_row : {6, 7}) {
            const Eigen::RowVectorXd q = detail::divide_by_p_in_basis(
                Eigen::RowVectorXd(trace.reduced[1].row(paper_row - 1)), y1, opt.structure_tol);
            b2.row(next++) = q;
            b2.row(next++) = detail::multiply_in_basis(q, kMonoA, y1, opt.structure_tol);
            b2.row(next++) = detail::multiply_in_basis(q, kMonoB, y1, opt.structure_tol);
        }
        detail::rref_in_place(b2, opt.pivot_tol);
        trace.reduced[2] = b2;
    }

    // Stage 3: append a,b,p multiples of rows 12,13 of B2~.
    {
        Eigen::MatrixXd b3(19, 32);
        b3.topRows(13) = trace.reduced[2];
        int next = 13;
        for (int paper_row : {12, 13}) {
            const Eigen::RowVectorXd r(trace.reduced[2].row(paper_row - 1));
            b3.row(next++) = detail::multiply_in_basis(r, kMonoA, y1, opt.structure_tol);
            b3.row(next++) = detail::multiply_in_basis(r, kMonoB, y1, opt.structure_tol);
            b3.row(next++) = detail::multiply_in_basis(r, kMonoP, y1, opt.structure_tol);
        }
        detail::rref_in_place(b3, opt.pivot_tol);
        trace.reduced[3] = b3;
    }

    // Stage 4: drop everything of degree 4. The held rows of B3~ and the
    // multiples of its last row (a 2nd-degree polynomial) live on the
    // 20 monomials of degree <= 3.
    {
        constexpr std::array<int, 8> held = {4, 10, 11, 12, 13, 16, 17, 19};
        Eigen::MatrixXd b4(11, 20);
        int next = 0;
        for (int paper_row : held)
            b4.row(next++) = detail::reindex_row(
                Eigen::RowVectorXd(trace.reduced[3].row(paper_row - 1)), y1, y4,
                opt.structure_tol);
        const Eigen::RowVectorXd r19 = b4.row(7); // row 19 of B3~, now over y4
        b4.row(next++) = detail::multiply_in_basis(r19, kMonoA, y4, opt.structure_tol);
        b4.row(next++) = detail::multiply_in_basis(r19, kMonoB, y4, opt.structure_tol);
        b4.row(next++) = detail::multiply_in_basis(r19, kMonoP, y4, opt.structure_tol);
        detail::rref_in_place(b4, opt.pivot_tol);
        trace.reduced[4] = b4;
    }

    // Stage 5: append a,b,p multiples of row 11 of B4~. The last six rows of
    // the reduced result form the Groebner basis (grevlex, a > b > p).
    {
        Eigen::MatrixXd b5(14, 20);
        b5.topRows(11) = trace.reduced[4];
        const Eigen::RowVectorXd r11(trace.reduced[4].row(10));
        b5.row(11) = detail::multiply_in_basis(r11, kMonoA, y4, opt.structure_tol);
        b5.row(12) = detail::multiply_in_basis(r11, kMonoB, y4, opt.structure_tol);
        b5.row(13) = detail::multiply_in_basis(r11, kMonoP, y4, opt.structure_tol);
        detail::rref_in_place(b5, opt.pivot_tol);
        trace.reduced[5] = b5;
    }

    return trace;
}

/// Action matrix of multiplication by p on the quotient ring, assembled from
/// the 6x6 right-lower submatrix C of B5~: rows 1-3 are the last three rows of
/// -C, and (M)_41 = (M)_52 = (M)_65 = 1.
inline Eigen::Matrix<double, 6, 6> action_matrix(const EliminationTrace& trace) {
    const Eigen::Matrix<double, 6, 6> c = trace.reduced[5].block(8, 14, 6, 6);
    Eigen::Matrix<double, 6, 6> mp = Eigen::Matrix<double, 6, 6>::Zero();
    mp.row(0) = -c.row(3);
    mp.row(1) = -c.row(4);
    mp.row(2) = -c.row(5);
    mp(3, 0) = 1.0;
    mp(4, 1) = 1.0;
    mp(5, 4) = 1.0;
    return mp;
}

/// Reads the roots off the eigenvectors of the action matrix. Eigenvector
/// coordinates follow the trailing monomials of y4, [bp p^2 a b p 1]; the
/// solution is (a, b, p) = (v3, v4, v5) / v6. Complex roots and roots with
/// p <= 0 are excluded; survivors are returned sorted by descending p.
inline std::vector<CalibrationSolution>
extract_solutions(const Eigen::Matrix<double, 6, 6>& mp, const SolverOptions& opt = {},
                  SolveStats* stats = nullptr) {
    Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(mp);
    if (es.info() != Eigen::Success)
        throw DegenerateError("action matrix eigendecomposition failed");

    SolveStats local;
    std::vector<CalibrationSolution> out;
    for (int k = 0; k < 6; ++k) {
        ++local.n_total;
        const std::complex<double> lambda = es.eigenvalues()(k);
        const Eigen::Matrix<std::complex<double>, 6, 1> v = es.eigenvectors().col(k);

        if (std::abs(v(5)) < opt.dehomogenize_tol * v.norm()) continue; // at infinity
        const Eigen::Matrix<std::complex<double>, 6, 1> w = v / v(5);

        const bool lambda_real = std::abs(lambda.imag()) <= opt.complex_tol * (1.0 + std::abs(lambda.real()));
        bool coords_real = true;
        for (int i = 2; i <= 4; ++i)
            coords_real &= std::abs(w(i).imag()) <= opt.complex_tol * (1.0 + std::abs(w(i).real()));
        if (!lambda_real || !coords_real) continue;

        ++local.n_real;
        const double p = w(4).real();
        if (p <= opt.min_abs_p) continue;
        ++local.n_feasible;
        out.push_back(CalibrationSolution::from_abp(w(2).real(), w(3).real(), p));
    }
    std::sort(out.begin(), out.end(),
              [](const CalibrationSolution& x, const CalibrationSolution& y) { return x.p > y.p; });
    if (stats) *stats = local;
    return out;
}

/// Full solve for one (F, tau) instance, in whatever image coordinates F is
/// expressed in. Callers working on normalized points denormalize K afterwards.
inline std::vector<CalibrationSolution>
self_calibrate(const Eigen::Matrix3d& F, double tau, const SolverOptions& opt = {},
               SolveStats* stats = nullptr) {
    const ConstraintSystem sys = expand_constraints(F, tau);
    const EliminationTrace trace = eliminate(sys, opt);
    return extract_solutions(action_matrix(trace), opt, stats);
}

} // namespace selfcalib
