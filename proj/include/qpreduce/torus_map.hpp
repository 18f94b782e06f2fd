#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "errors.hpp"

namespace qpr {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RealMat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Frequency index k in Z^d; std::map's std::vector ordering is lexicographic,
// which is the canonical coefficient order.
using FreqIndex = std::vector<int>;

inline FreqIndex negated(const FreqIndex& k) {
    FreqIndex r(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) r[i] = -k[i];
    return r;
}

inline int inf_norm(const FreqIndex& k) {
    int m = 0;
    for (int ki : k) m = std::max(m, std::abs(ki));
    return m;
}

// Torus translation frequencies. Rational independence of omega (or of
// (omega,1) in the discrete case) is assumed, not checked: it is not decidable
// for floating-point input.
struct FrequencyVector {
    Vec omega;

    explicit FrequencyVector(Vec w) : omega(std::move(w)) {
        if (omega.size() < 1) throw Error("FrequencyVector: dimension must be >= 1");
        for (Eigen::Index i = 0; i < omega.size(); ++i)
            if (!std::isfinite(omega[i])) throw Error("FrequencyVector: entries must be finite");
        if (omega.size() == 1 && omega[0] == 0.0)
            throw Error("FrequencyVector: zero frequency is degenerate for d = 1");
    }

    int dim() const { return static_cast<int>(omega.size()); }

    // (omega, 1), used by the discrete-time lattice
    FrequencyVector extended() const {
        Vec w(omega.size() + 1);
        w.head(omega.size()) = omega;
        w[omega.size()] = 1.0;
        return FrequencyVector(w);
    }
};

// Regular sampling grid theta = period * j / points_per_axis, j in {0..M-1}^d.
struct EvaluationGrid {
    int points_per_axis;
    int period;
    int dimension;

    long long size() const {
        long long s = 1;
        for (int i = 0; i < dimension; ++i) s *= points_per_axis;
        return s;
    }

    // flat index -> multi-index, last axis fastest
    Vec point(long long flat) const {
        Vec theta(dimension);
        for (int i = dimension - 1; i >= 0; --i) {
            long long j = flat % points_per_axis;
            flat /= points_per_axis;
            theta[i] = static_cast<double>(period) * static_cast<double>(j) / points_per_axis;
        }
        return theta;
    }

    std::vector<Vec> points() const {
        std::vector<Vec> pts;
        pts.reserve(static_cast<std::size_t>(size()));
        for (long long f = 0; f < size(); ++f) pts.push_back(point(f));
        return pts;
    }
};

// Matrix-valued trigonometric polynomial on N*T^d,
//
//   value(theta) = sum_k coeff(k) * exp(2*pi*i * <k, theta/N>).
//
// Immutable in spirit: operations return new maps. A map flagged `real`
// maintains coeff(-k) == conj(coeff(k)) exactly and evaluates to real matrices.
class TorusMap {
public:
    TorusMap(int rows, int cols, int dim, int period = 1)
        : rows_(rows), cols_(cols), dim_(dim), period_(period) {
        if (rows < 1 || cols < 1 || dim < 1 || period < 1)
            throw Error("TorusMap: invalid shape");
    }

    static TorusMap constant(const Mat& value, int dim, int period = 1, bool real_flag = false) {
        TorusMap m(static_cast<int>(value.rows()), static_cast<int>(value.cols()), dim, period);
        m.set_coeff(FreqIndex(dim, 0), value);
        m.real_ = real_flag || value.imag().cwiseAbs().maxCoeff() == 0.0;
        return m;
    }

    static TorusMap identity(int n, int dim, int period = 1) {
        return constant(Mat::Identity(n, n), dim, period, true);
    }

    static TorusMap zero(int rows, int cols, int dim, int period = 1) {
        TorusMap m(rows, cols, dim, period);
        m.real_ = true;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int dim() const { return dim_; }
    int period() const { return period_; }
    bool is_real_flagged() const { return real_; }
    void set_real_flag(bool r) { real_ = r; }

    const std::map<FreqIndex, Mat>& coeffs() const { return coeffs_; }

    void set_coeff(const FreqIndex& k, const Mat& c) {
        if (static_cast<int>(k.size()) != dim_) throw Error("TorusMap: index dimension mismatch");
        if (c.rows() != rows_ || c.cols() != cols_) throw Error("TorusMap: coefficient shape mismatch");
        if (c.cwiseAbs().maxCoeff() == 0.0)
            coeffs_.erase(k);
        else
            coeffs_[k] = c;
    }

    Mat coeff_or_zero(const FreqIndex& k) const {
        auto it = coeffs_.find(k);
        return it == coeffs_.end() ? Mat::Zero(rows_, cols_) : it->second;
    }

    int degree() const {
        int d = 0;
        for (const auto& [k, c] : coeffs_) d = std::max(d, inf_norm(k));
        return d;
    }

    double max_coeff_norm() const {
        double m = 0.0;
        for (const auto& [k, c] : coeffs_) m = std::max(m, c.cwiseAbs().maxCoeff());
        return m;
    }

    // Evaluation reduces theta/N to fractional coordinates first, so values at
    // theta and theta + N*e_i coincide exactly.
    Mat evaluate(const Vec& theta) const {
        if (theta.size() != dim_) throw Error("TorusMap::evaluate: dimension mismatch");
        Vec u(dim_);
        for (int i = 0; i < dim_; ++i) {
            double x = theta[i] / period_;
            u[i] = x - std::floor(x);
        }
        Mat acc = Mat::Zero(rows_, cols_);
        for (const auto& [k, c] : coeffs_) {
            double s = 0.0;
            for (int i = 0; i < dim_; ++i) s += k[i] * u[i];
            acc += c * std::polar(1.0, 2.0 * M_PI * s);
        }
        if (real_) acc.imag().setZero();
        return acc;
    }

    RealMat evaluate_real(const Vec& theta) const {
        if (!real_) throw Error("TorusMap::evaluate_real: map is not real-flagged");
        return evaluate(theta).real();
    }

    double max_norm_on_grid(const EvaluationGrid& grid) const {
        double m = 0.0;
        for (long long f = 0; f < grid.size(); ++f)
            m = std::max(m, evaluate(grid.point(f)).cwiseAbs().maxCoeff());
        return m;
    }

    TorusMap column(int j) const {
        TorusMap out(rows_, 1, dim_, period_);
        for (const auto& [k, c] : coeffs_) out.set_coeff(k, c.col(j));
        out.real_ = real_;
        return out;
    }

    // Drop coefficients with max-norm <= tol (absolute).
    TorusMap truncated(double tol) const {
        TorusMap out(rows_, cols_, dim_, period_);
        out.real_ = real_;
        for (const auto& [k, c] : coeffs_)
            if (c.cwiseAbs().maxCoeff() > tol) out.coeffs_[k] = c;
        return out;
    }

private:
    int rows_, cols_, dim_, period_;
    bool real_ = false;
    std::map<FreqIndex, Mat> coeffs_;

    friend TorusMap multiply(const TorusMap&, const TorusMap&);
};

inline void require_same_shape(const TorusMap& a, const TorusMap& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.dim() != b.dim() || a.period() != b.period())
        throw Error("TorusMap: shape/period mismatch");
}

inline TorusMap add(const TorusMap& a, const TorusMap& b) {
    require_same_shape(a, b);
    TorusMap out(a.rows(), a.cols(), a.dim(), a.period());
    for (const auto& [k, c] : a.coeffs()) out.set_coeff(k, c);
    for (const auto& [k, c] : b.coeffs()) out.set_coeff(k, out.coeff_or_zero(k) + c);
    out.set_real_flag(a.is_real_flagged() && b.is_real_flagged());
    return out;
}

inline TorusMap subtract(const TorusMap& a, const TorusMap& b) {
    require_same_shape(a, b);
    TorusMap out(a.rows(), a.cols(), a.dim(), a.period());
    for (const auto& [k, c] : a.coeffs()) out.set_coeff(k, c);
    for (const auto& [k, c] : b.coeffs()) out.set_coeff(k, out.coeff_or_zero(k) - c);
    out.set_real_flag(a.is_real_flagged() && b.is_real_flagged());
    return out;
}

inline TorusMap scale(const TorusMap& a, Cplx s) {
    TorusMap out(a.rows(), a.cols(), a.dim(), a.period());
    for (const auto& [k, c] : a.coeffs()) out.set_coeff(k, s * c);
    out.set_real_flag(a.is_real_flagged() && s.imag() == 0.0);
    return out;
}

// theta -> theta + v on coefficients: coeff(k) *= exp(2*pi*i <k, v/N>)
inline TorusMap translate(const TorusMap& map, const Vec& v) {
    if (v.size() != map.dim()) throw Error("translate: dimension mismatch");
    TorusMap out(map.rows(), map.cols(), map.dim(), map.period());
    for (const auto& [k, c] : map.coeffs()) {
        double s = 0.0;
        for (int i = 0; i < map.dim(); ++i) s += k[i] * v[i] / map.period();
        out.set_coeff(k, c * std::polar(1.0, 2.0 * M_PI * s));
    }
    out.set_real_flag(map.is_real_flagged());
    return out;
}

// entrywise complex conjugation: coeff(k) <- conj(coeff(-k))
inline TorusMap conjugate_map(const TorusMap& map) {
    TorusMap out(map.rows(), map.cols(), map.dim(), map.period());
    for (const auto& [k, c] : map.coeffs()) out.set_coeff(negated(k), c.conjugate());
    out.set_real_flag(map.is_real_flagged());
    return out;
}

// pointwise Hermitian adjoint: coeff(k) <- coeff(-k)^H
inline TorusMap adjoint_map(const TorusMap& map) {
    TorusMap out(map.cols(), map.rows(), map.dim(), map.period());
    for (const auto& [k, c] : map.coeffs()) out.set_coeff(negated(k), c.adjoint());
    out.set_real_flag(map.is_real_flagged());
    return out;
}

// multiplication by exp(-2*pi*i <theta/N, m>): index k shifts to k - m
inline TorusMap character_multiply(const TorusMap& map, const FreqIndex& m) {
    if (static_cast<int>(m.size()) != map.dim()) throw Error("character_multiply: dimension mismatch");
    TorusMap out(map.rows(), map.cols(), map.dim(), map.period());
    for (const auto& [k, c] : map.coeffs()) {
        FreqIndex k2(k);
        for (int i = 0; i < map.dim(); ++i) k2[i] -= m[i];
        out.set_coeff(k2, c);
    }
    bool trivial = true;
    for (int mi : m) trivial = trivial && mi == 0;
    out.set_real_flag(map.is_real_flagged() && trivial);
    return out;
}

// view a period-N map on period factor*N: index k becomes factor*k
inline TorusMap lift_period(const TorusMap& map, int factor) {
    if (factor < 1) throw Error("lift_period: factor must be >= 1");
    TorusMap out(map.rows(), map.cols(), map.dim(), map.period() * factor);
    for (const auto& [k, c] : map.coeffs()) {
        FreqIndex k2(k);
        for (auto& ki : k2) ki *= factor;
        out.set_coeff(k2, c);
    }
    out.set_real_flag(map.is_real_flagged());
    return out;
}

// d/dt map(theta + t*omega) at t = 0: coeff(k) *= 2*pi*i <k, omega/N>
inline TorusMap directional_derivative(const TorusMap& map, const FrequencyVector& omega) {
    if (omega.dim() != map.dim()) throw Error("directional_derivative: dimension mismatch");
    TorusMap out(map.rows(), map.cols(), map.dim(), map.period());
    for (const auto& [k, c] : map.coeffs()) {
        double s = 0.0;
        for (int i = 0; i < map.dim(); ++i) s += k[i] * omega.omega[i] / map.period();
        out.set_coeff(k, c * Cplx(0.0, 2.0 * M_PI * s));
    }
    out.set_real_flag(map.is_real_flagged());
    return out;
}

// Fourier convolution. Floating-point sums are order-dependent, so for two
// real-flagged operands the result is re-symmetrized pairwise to keep
// coeff(-k) == conj(coeff(k)) exact.
inline TorusMap multiply(const TorusMap& a, const TorusMap& b) {
    if (a.cols() != b.rows()) throw Error("multiply: inner dimension mismatch");
    if (a.dim() != b.dim()) throw Error("multiply: torus dimension mismatch");
    if (a.period() != b.period()) throw Error("multiply: period mismatch (lift_period first)");
    TorusMap out(a.rows(), b.cols(), a.dim(), a.period());
    for (const auto& [ka, ca] : a.coeffs()) {
        for (const auto& [kb, cb] : b.coeffs()) {
            FreqIndex k(ka);
            for (int i = 0; i < a.dim(); ++i) k[i] += kb[i];
            auto it = out.coeffs_.find(k);
            if (it == out.coeffs_.end())
                out.coeffs_[k] = ca * cb;
            else
                it->second += ca * cb;
        }
    }
    if (a.is_real_flagged() && b.is_real_flagged()) {
        for (auto& [k, c] : out.coeffs_) {
            FreqIndex nk = negated(k);
            if (k < nk) continue;
            auto it = out.coeffs_.find(nk);
            if (it == out.coeffs_.end()) continue;
            if (k == nk) {
                c = (c + c.conjugate().eval()) / 2.0;
            } else {
                Mat sym = (c + it->second.conjugate().eval()) / 2.0;
                c = sym;
                it->second = sym.conjugate();
            }
        }
        out.real_ = true;
    }
    // restore canonical form (exactly-zero products)
    std::vector<FreqIndex> dead;
    for (const auto& [k, c] : out.coeffs_)
        if (c.cwiseAbs().maxCoeff() == 0.0) dead.push_back(k);
    for (const auto& k : dead) out.coeffs_.erase(k);
    return out;
}

inline TorusMap multiply_constant_left(const Mat& c, const TorusMap& map) {
    return multiply(TorusMap::constant(c, map.dim(), map.period()), map);
}

inline TorusMap multiply_constant_right(const TorusMap& map, const Mat& c) {
    return multiply(map, TorusMap::constant(c, map.dim(), map.period()));
}

inline TorusMap real_part(const TorusMap& map) {
    TorusMap out = scale(add(map, conjugate_map(map)), 0.5);
    out.set_real_flag(true);
    return out;
}

inline TorusMap imag_part(const TorusMap& map) {
    TorusMap out = scale(subtract(map, conjugate_map(map)), Cplx(0.0, -0.5));
    out.set_real_flag(true);
    return out;
}

// columns of several maps side by side
inline TorusMap hstack(const std::vector<TorusMap>& maps) {
    if (maps.empty()) throw Error("hstack: empty input");
    int cols = 0;
    for (const auto& m : maps) cols += m.cols();
    TorusMap out(maps[0].rows(), cols, maps[0].dim(), maps[0].period());
    bool real_flag = true;
    int at = 0;
    for (const auto& m : maps) {
        if (m.rows() != out.rows() || m.dim() != out.dim() || m.period() != out.period())
            throw Error("hstack: incompatible maps");
        for (const auto& [k, c] : m.coeffs()) {
            Mat full = out.coeff_or_zero(k);
            full.block(0, at, m.rows(), m.cols()) = c;
            out.set_coeff(k, full);
        }
        real_flag = real_flag && m.is_real_flagged();
        at += m.cols();
    }
    out.set_real_flag(real_flag);
    return out;
}

struct FitResult {
    TorusMap map;
    double residual;  // max re-evaluation defect over the grid
};

// Discrete Fourier fit of grid samples (odometer order, last axis fastest).
// Exact for trig polynomials of degree <= target_degree when
// points_per_axis > 2*target_degree.
inline FitResult fit_from_samples(const std::vector<Mat>& samples, const EvaluationGrid& grid,
                                  int target_degree) {
    if (grid.points_per_axis <= 2 * target_degree)
        throw Error("fit_from_samples: points_per_axis must exceed 2*target_degree (aliasing)");
    if (static_cast<long long>(samples.size()) != grid.size())
        throw Error("fit_from_samples: sample count does not match grid");
    const int rows = static_cast<int>(samples[0].rows());
    const int cols = static_cast<int>(samples[0].cols());
    for (const auto& s : samples)
        if (!s.allFinite()) throw Error("fit_from_samples: non-finite samples");

    const int d = grid.dimension;
    const int M = grid.points_per_axis;
    TorusMap out(rows, cols, d, grid.period);

    std::vector<std::vector<int>> multi(samples.size(), std::vector<int>(d));
    for (long long f = 0; f < grid.size(); ++f) {
        long long rem = f;
        for (int i = d - 1; i >= 0; --i) {
            multi[f][i] = static_cast<int>(rem % M);
            rem /= M;
        }
    }

    FreqIndex k(d, -target_degree);
    while (true) {
        Mat acc = Mat::Zero(rows, cols);
        for (long long f = 0; f < grid.size(); ++f) {
            double s = 0.0;
            for (int i = 0; i < d; ++i) s += static_cast<double>(k[i]) * multi[f][i] / M;
            acc += samples[f] * std::polar(1.0, -2.0 * M_PI * s);
        }
        acc /= static_cast<double>(grid.size());
        out.set_coeff(k, acc);
        int axis = d - 1;
        while (axis >= 0 && k[axis] == target_degree) k[axis--] = -target_degree;
        if (axis < 0) break;
        ++k[axis];
    }

    // structural-zero cleanup, relative to the largest coefficient
    double top = out.max_coeff_norm();
    out = out.truncated(1e-12 * top);

    double max_imag = 0.0;
    for (const auto& s : samples) max_imag = std::max(max_imag, s.imag().cwiseAbs().maxCoeff());
    if (max_imag == 0.0) out.set_real_flag(true);

    double res = 0.0;
    for (long long f = 0; f < grid.size(); ++f)
        res = std::max(res, (out.evaluate(grid.point(f)) - samples[f]).cwiseAbs().maxCoeff());
    return {out, res};
}

}  // namespace qpr
