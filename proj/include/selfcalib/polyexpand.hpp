#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <compare>
#include <map>
#include <stdexcept>

#include "selfcalib/errors.hpp"

namespace selfcalib {

/// Monomial a^i b^j p^k of the calibration unknowns: principal point (a, b)
/// and squared focal length p.
struct Monomial {
    int deg_a = 0;
    int deg_b = 0;
    int deg_p = 0;

    friend constexpr auto operator<=>(const Monomial&, const Monomial&) = default;

    constexpr int total_degree() const { return deg_a + deg_b + deg_p; }
    constexpr bool divisible_by_p() const { return deg_p > 0; }
    constexpr Monomial times(const Monomial& o) const {
        return {deg_a + o.deg_a, deg_b + o.deg_b, deg_p + o.deg_p};
    }
    constexpr Monomial divided_by_p() const { return {deg_a, deg_b, deg_p - 1}; }

    double eval(double a, double b, double p) const {
        double v = 1.0;
        for (int i = 0; i < deg_a; ++i) v *= a;
        for (int i = 0; i < deg_b; ++i) v *= b;
        for (int i = 0; i < deg_p; ++i) v *= p;
        return v;
    }
};

inline constexpr Monomial kMonoA{1, 0, 0};
inline constexpr Monomial kMonoB{0, 1, 0};
inline constexpr Monomial kMonoP{0, 0, 1};
inline constexpr Monomial kMonoOne{0, 0, 0};

/// Sparse polynomial in (a, b, p) with real coefficients.
class Poly3 {
  public:
    Poly3() = default;

    static Poly3 constant(double c) {
        Poly3 q;
        if (c != 0.0) q.terms_[kMonoOne] = c;
        return q;
    }
    static Poly3 monomial(const Monomial& m, double c = 1.0) {
        Poly3 q;
        if (c != 0.0) q.terms_[m] = c;
        return q;
    }

    const std::map<Monomial, double>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    double coeff(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? 0.0 : it->second;
    }

    Poly3& operator+=(const Poly3& o) {
        for (const auto& [m, c] : o.terms_) {
            double& v = terms_[m];
            v += c;
            if (v == 0.0) terms_.erase(m);
        }
        return *this;
    }
    Poly3& operator-=(const Poly3& o) {
        for (const auto& [m, c] : o.terms_) {
            double& v = terms_[m];
            v -= c;
            if (v == 0.0) terms_.erase(m);
        }
        return *this;
    }
    friend Poly3 operator+(Poly3 x, const Poly3& y) { return x += y; }
    friend Poly3 operator-(Poly3 x, const Poly3& y) { return x -= y; }

    friend Poly3 operator*(const Poly3& x, const Poly3& y) {
        Poly3 r;
        for (const auto& [mx, cx] : x.terms_)
            for (const auto& [my, cy] : y.terms_) {
                double& v = r.terms_[mx.times(my)];
                v += cx * cy;
                if (v == 0.0) r.terms_.erase(mx.times(my));
            }
        return r;
    }
    friend Poly3 operator*(double s, const Poly3& x) {
        Poly3 r;
        if (s == 0.0) return r;
        for (const auto& [m, c] : x.terms_) r.terms_[m] = s * c;
        return r;
    }
    friend Poly3 operator*(const Poly3& x, double s) { return s * x; }

    double eval(double a, double b, double p) const {
        double v = 0.0;
        for (const auto& [m, c] : terms_) v += c * m.eval(a, b, p);
        return v;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& [mono, c] : terms_) m = std::max(m, std::abs(c));
        return m;
    }

    int total_degree() const {
        int d = 0;
        for (const auto& [m, c] : terms_) d = std::max(d, m.total_degree());
        return d;
    }

    // Drops coefficients below rel_tol * max |coefficient|; floating-point dust
    // from the symbolic products, not structure.
    void prune(double rel_tol = 1e-12) {
        const double cut = rel_tol * max_abs_coeff();
        for (auto it = terms_.begin(); it != terms_.end();) {
            if (std::abs(it->second) <= cut)
                it = terms_.erase(it);
            else
                ++it;
        }
    }

  private:
    std::map<Monomial, double> terms_;
};

/// 3x3 matrix with polynomial entries, row-major.
struct PolyMat3 {
    std::array<Poly3, 9> e;

    Poly3& operator()(int r, int c) { return e[3 * r + c]; }
    const Poly3& operator()(int r, int c) const { return e[3 * r + c]; }

    static PolyMat3 from_matrix(const Eigen::Matrix3d& m) {
        PolyMat3 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out(r, c) = Poly3::constant(m(r, c));
        return out;
    }

    PolyMat3 transpose() const {
        PolyMat3 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out(r, c) = (*this)(c, r);
        return out;
    }

    friend PolyMat3 operator*(const PolyMat3& x, const PolyMat3& y) {
        PolyMat3 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                Poly3 s;
                for (int k = 0; k < 3; ++k) s += x(r, k) * y(k, c);
                out(r, c) = s;
            }
        return out;
    }
    friend PolyMat3 operator-(const PolyMat3& x, const PolyMat3& y) {
        PolyMat3 out;
        for (int i = 0; i < 9; ++i) out.e[i] = x.e[i] - y.e[i];
        return out;
    }

    PolyMat3 scaled(const Poly3& s) const {
        PolyMat3 out;
        for (int i = 0; i < 9; ++i) out.e[i] = s * e[i];
        return out;
    }

    Poly3 trace() const { return e[0] + e[4] + e[8]; }

    Eigen::Matrix3d eval(double a, double b, double p) const {
        Eigen::Matrix3d out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out(r, c) = (*this)(r, c).eval(a, b, p);
        return out;
    }
};

/// Dual image of the absolute conic KK^T for K = [[f,0,a],[0,f,b],[0,0,1]],
/// written in the unknowns (a, b, p) with p = f^2:
///   [[a^2+p, ab, a], [ab, b^2+p, b], [a, b, 1]].
inline PolyMat3 omega_star_symbolic() {
    PolyMat3 w;
    const Poly3 a = Poly3::monomial(kMonoA);
    const Poly3 b = Poly3::monomial(kMonoB);
    const Poly3 p = Poly3::monomial(kMonoP);
    w(0, 0) = a * a + p;
    w(0, 1) = a * b;
    w(0, 2) = a;
    w(1, 0) = a * b;
    w(1, 1) = b * b + p;
    w(1, 2) = b;
    w(2, 0) = a;
    w(2, 1) = b;
    w(2, 2) = Poly3::constant(1.0);
    return w;
}

/// Matrix form of the cubic essential constraint pulled back through F:
///   G = 1/2 tr(F w* F^T w*) F - F w* F^T w* F,
/// a 3x3 matrix of quartic polynomials in (a, b, p).
inline PolyMat3 constraint_matrix_symbolic(const Eigen::Matrix3d& F) {
    const PolyMat3 w = omega_star_symbolic();
    const PolyMat3 Fp = PolyMat3::from_matrix(F);
    const PolyMat3 Ftp = PolyMat3::from_matrix(F.transpose());
    const PolyMat3 M = Fp * w * Ftp * w; // F w* F^T w*
    return Fp.scaled(0.5 * M.trace()) - M * Fp;
}

/// Scalar constraint tying the trace tau of the relative rotation to F:
///   1/2 (tau^2-1) tr(F w* F^T w*) + (tau+1) tr(w* F w* F) - tau tr^2(F w*).
inline Poly3 trace_constraint_symbolic(const Eigen::Matrix3d& F, double tau) {
    const PolyMat3 w = omega_star_symbolic();
    const PolyMat3 Fp = PolyMat3::from_matrix(F);
    const PolyMat3 Ftp = PolyMat3::from_matrix(F.transpose());
    const Poly3 t1 = (Fp * w * Ftp * w).trace();
    const PolyMat3 wf = w * Fp;
    const Poly3 t2 = (wf * wf).trace();
    const Poly3 t3 = (Fp * w).trace();
    return 0.5 * (tau * tau - 1.0) * t1 + (tau + 1.0) * t2 - tau * (t3 * t3);
}

// Monomial vector y0: the fixed column basis of the 4x22 coefficient matrix.
inline constexpr std::array<Monomial, 22> kBasisY0 = {{
    {3, 1, 0}, // a^3 b
    {2, 2, 0}, // a^2 b^2
    {1, 3, 0}, // a b^3
    {2, 1, 0}, // a^2 b
    {4, 0, 0}, // a^4
    {0, 4, 0}, // b^4
    {3, 0, 0}, // a^3
    {1, 2, 0}, // a b^2
    {0, 3, 0}, // b^3
    {2, 0, 1}, // a^2 p
    {1, 1, 1}, // a b p
    {0, 2, 1}, // b^2 p
    {2, 0, 0}, // a^2
    {1, 1, 0}, // a b
    {0, 2, 0}, // b^2
    {1, 0, 1}, // a p
    {0, 1, 1}, // b p
    {0, 0, 2}, // p^2
    {1, 0, 0}, // a
    {0, 1, 0}, // b
    {0, 0, 1}, // p
    {0, 0, 0}, // 1
}};

/// The four self-calibration constraints as coefficient rows over y0.
/// Rows 0..2 are the diagonal entries of G, row 3 the trace constraint.
struct ConstraintSystem {
    Eigen::Matrix<double, 4, 22> B0;
    double tau = 0.0;
};

namespace detail {

template <std::size_t N>
int basis_index(const std::array<Monomial, N>& basis, const Monomial& m) {
    for (std::size_t i = 0; i < N; ++i)
        if (basis[i] == m) return static_cast<int>(i);
    return -1;
}

inline Eigen::Matrix<double, 1, 22> project_onto_y0(const Poly3& poly) {
    Eigen::Matrix<double, 1, 22> row = Eigen::Matrix<double, 1, 22>::Zero();
    for (const auto& [m, c] : poly.terms()) {
        const int idx = basis_index(kBasisY0, m);
        if (idx < 0)
            throw std::logic_error("constraint polynomial has a term outside the y0 basis");
        row(idx) = c;
    }
    return row;
}

} // namespace detail

/// Expands the ten quartic constraints for a given fundamental matrix and
/// rotation trace into the 4x22 system B0 y0 = 0 (three diagonal entries of G
/// plus the trace constraint).
inline ConstraintSystem expand_constraints(const Eigen::Matrix3d& F, double tau) {
    if (F.cwiseAbs().maxCoeff() < 1e-12)
        throw DegenerateError("expand_constraints: fundamental matrix is numerically zero");
    if (tau < -1.0 - 1e-9 || tau > 3.0 + 1e-9)
        throw std::invalid_argument("expand_constraints: tau outside [-1, 3]");

    const PolyMat3 G = constraint_matrix_symbolic(F);
    std::array<Poly3, 4> f = {G(0, 0), G(1, 1), G(2, 2), trace_constraint_symbolic(F, tau)};

    ConstraintSystem sys;
    sys.tau = tau;
    for (int i = 0; i < 4; ++i) {
        f[i].prune(1e-12);
        sys.B0.row(i) = detail::project_onto_y0(f[i]);
    }
    return sys;
}

} // namespace selfcalib
