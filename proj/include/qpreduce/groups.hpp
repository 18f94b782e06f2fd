#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cocycle.hpp"
#include "jordan.hpp"
#include "resonance.hpp"
#include "torus_map.hpp"
#include "verify.hpp"

namespace qpr {

// Bilinear/sesquilinear form behind the group: F* J F (symplectic),
// F* F (Euclidean / Hermitian). The map adjoint conjugates, so for
// real-flagged frames it is the plain transpose.
struct GramForm {
    enum class Kind { Symplectic, Euclidean, Hermitian } kind;

    static GramForm symplectic() { return {Kind::Symplectic}; }
    static GramForm euclidean() { return {Kind::Euclidean}; }
    static GramForm hermitian() { return {Kind::Hermitian}; }

    Mat metric(int n) const {
        if (kind != Kind::Symplectic) return Mat::Identity(n, n);
        if (n % 2 != 0) throw Error("GramForm: symplectic form needs even dimension");
        Mat J = Mat::Zero(n, n);
        J.topRightCorner(n / 2, n / 2) = -Mat::Identity(n / 2, n / 2);
        J.bottomLeftCorner(n / 2, n / 2) = Mat::Identity(n / 2, n / 2);
        return J;
    }

    GroupTag target_tag() const {
        switch (kind) {
            case Kind::Symplectic: return GroupTag::Sp_R;
            case Kind::Euclidean: return GroupTag::O_n;
            default: return GroupTag::U_n;
        }
    }
};

struct ConstancyReport {
    Mat constant_part;        // the k = 0 Fourier coefficient
    double max_nonzero_mode;  // largest max-norm among k != 0 coefficients
    std::vector<std::pair<FreqIndex, double>> offending_modes;  // sorted by norm, descending
};

struct ConstancyError : Error {
    ConstancyReport report;
    ConstancyError(const std::string& msg, ConstancyReport r) : Error(msg), report(std::move(r)) {}
    int exit_code() const override { return exit_constancy_failure; }
};

// Y(theta) = F(theta)^* M F(theta) as exact coefficient algebra.
inline TorusMap gram_map(const TorusMap& F, const GramForm& form) {
    if (F.rows() != F.cols()) throw Error("gram_map: frame must be square");
    return multiply(adjoint_map(F), multiply_constant_left(form.metric(F.rows()), F));
}

// Fourier-mode constancy test; succeeds iff every k != 0 coefficient has
// max-norm <= tol. On failure the thrown error carries the full report.
inline ConstancyReport assert_constant(const TorusMap& Y, double tol) {
    ConstancyReport report;
    report.constant_part = Y.coeff_or_zero(FreqIndex(Y.dim(), 0));
    report.max_nonzero_mode = 0.0;
    for (const auto& [k, c] : Y.coeffs()) {
        if (inf_norm(k) == 0) continue;
        double norm = c.cwiseAbs().maxCoeff();
        report.max_nonzero_mode = std::max(report.max_nonzero_mode, norm);
        if (norm > tol) report.offending_modes.emplace_back(k, norm);
    }
    std::sort(report.offending_modes.begin(), report.offending_modes.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
    if (report.max_nonzero_mode > tol)
        throw ConstancyError("assert_constant: nonzero Fourier mode of norm " +
                                 std::to_string(report.max_nonzero_mode) + " exceeds tolerance",
                             report);
    return report;
}

struct NormalizeOptions {
    double constancy_tol = 1e-9;
    double group_tol = 1e-9;
    double membership_tol = 1e-8;
    int grid_points = 8;
    std::vector<double> times = default_time_samples();
};

// Base-point conjugation F -> F F(0)^{-1}, B -> F(0) B F(0)^{-1}. Once the
// Gram map is constant this lands the frame exactly in the group.
inline Certificate normalize_base_point(const Certificate& cert, const GramForm& form,
                                        const FrequencyVector& omega, const NormalizeOptions& opts = {}) {
    const int n = cert.n();
    if (form.kind != GramForm::Kind::Hermitian && !cert.frame.is_real_flagged())
        throw Error("normalize_base_point: real group normalization requires a real frame");

    TorusMap Y = gram_map(cert.frame, form);
    assert_constant(Y, opts.constancy_tol);

    Mat F0 = cert.frame.evaluate(Vec::Zero(cert.frame.dim()));
    Eigen::PartialPivLU<Mat> lu(F0);
    if (std::abs(lu.determinant()) < 1e-12) throw Error("normalize_base_point: frame singular at 0");
    Mat F0_inv = lu.solve(Mat::Identity(n, n));
    if (cert.frame.is_real_flagged()) F0_inv.imag().setZero();

    Certificate out = cert;
    out.frame = multiply_constant_right(cert.frame, F0_inv);
    out.B = F0 * cert.B * F0_inv;
    out.group_tag = form.target_tag();

    EvaluationGrid grid{opts.grid_points, cert.modulus, cert.frame.dim()};
    double worst = 0.0;
    for (long long f = 0; f < grid.size(); ++f)
        worst = std::max(worst, group_residual(out.frame.evaluate(grid.point(f)), out.group_tag));
    if (worst > opts.group_tol)
        throw VerificationError("normalize_base_point: frame misses the group relation by " +
                                std::to_string(worst));

    CocycleEvaluator cocycle = CocycleEvaluator::conjugated(cert, omega);
    out.residual = residual_conjugation(cocycle, out, grid, opts.times).max_residual;
    return out;
}

// Determinant of the frame as a trig polynomial, recovered by DFT at the
// Nyquist-safe grid for degree n * deg(F).
inline TorusMap determinant_map(const TorusMap& F) {
    const int deg = F.degree() * F.rows();
    EvaluationGrid grid{2 * deg + 2, F.period(), F.dim()};
    std::vector<Mat> samples;
    samples.reserve(static_cast<std::size_t>(grid.size()));
    for (long long f = 0; f < grid.size(); ++f) {
        Mat d(1, 1);
        d(0, 0) = F.evaluate(grid.point(f)).determinant();
        samples.push_back(d);
    }
    return fit_from_samples(samples, grid, deg).map;
}

// det F constant -> rescale by its n-th root so det == 1; trace(B) snapped to
// zero. The naive Z/det(Z) normalization fails for n > 1, the n-th root is
// what the SL conclusion actually needs.
inline Certificate normalize_sl(const Certificate& cert, const FrequencyVector& omega,
                                const NormalizeOptions& opts = {}) {
    const int n = cert.n();
    if (!cert.frame.is_real_flagged()) throw Error("normalize_sl: requires a real frame");

    CocycleEvaluator cocycle = CocycleEvaluator::conjugated(cert, omega);
    EvaluationGrid grid{opts.grid_points, cert.modulus, cert.frame.dim()};
    for (double t : opts.times) {
        Mat X = cocycle(cert.discrete ? std::round(t) : t, grid.point(grid.size() / 2));
        if (std::abs(X.determinant() - 1.0) > opts.membership_tol)
            throw GroupMembershipError("normalize_sl: cocycle values do not have determinant 1");
    }

    ConstancyReport det_report = assert_constant(determinant_map(cert.frame), opts.constancy_tol);
    Cplx c = det_report.constant_part(0, 0);
    if (std::abs(c.imag()) > opts.constancy_tol)
        throw Error("normalize_sl: determinant of a real frame came out complex");
    double det = c.real();

    if (std::abs(cert.B.trace()) > opts.group_tol)
        throw GroupMembershipError("normalize_sl: trace(B) = " + std::to_string(std::abs(cert.B.trace())) +
                                   " beyond tolerance");

    double root;
    if (det > 0.0) {
        root = std::pow(det, 1.0 / n);
    } else if (n % 2 == 1) {
        root = -std::pow(-det, 1.0 / n);
    } else {
        throw Error("normalize_sl: constant determinant is negative with even n; no real n-th root");
    }

    Certificate out = cert;
    out.frame = scale(cert.frame, Cplx(1.0 / root, 0.0));
    out.B = cert.B - (cert.B.trace() / static_cast<double>(n)) * Mat::Identity(n, n);
    out.group_tag = GroupTag::SL_R;
    out.residual = residual_conjugation(cocycle, out, grid, opts.times).max_residual;

    double worst = 0.0;
    for (long long f = 0; f < grid.size(); ++f)
        worst = std::max(worst, group_residual(out.frame.evaluate(grid.point(f)), GroupTag::SL_R));
    if (worst > opts.group_tol)
        throw VerificationError("normalize_sl: rescaled frame determinant misses 1 by " +
                                std::to_string(worst));
    return out;
}

// U(n) path: rank-1 chains with purely imaginary exponents, representatives
// re-chosen so no pairwise beta-difference is 2*pi-resonant, then the
// Hermitian Gram constancy and base-point conjugation. Modulus stays 1.
inline Certificate normalize_unitary(const Certificate& cert, const FrequencyVector& omega,
                                     const SearchBox& box, const NormalizeOptions& opts = {}) {
    const int n = cert.n();
    EvaluationGrid grid{opts.grid_points, cert.modulus, cert.frame.dim()};
    std::vector<JordanBasis> bases = extract_jordan_bases(cert.frame, cert.B, grid);
    for (const auto& b : bases)
        if (b.rank() >= 2)
            throw Error("normalize_unitary: rank >= 2 Jordan chain present; a bounded cocycle has none");
    for (const auto& b : bases)
        if (std::abs(b.exponent.real()) > opts.group_tol)
            throw GroupMembershipError("normalize_unitary: exponent with nonzero real part " +
                                       std::to_string(b.exponent.real()));

    CocycleEvaluator cocycle = CocycleEvaluator::conjugated(cert, omega);
    std::vector<TorusMap> cols;
    std::vector<double> betas;
    for (int j = 0; j < n; ++j) {
        NormalizedExponent ne = normalize_exponent(Cplx(0.0, bases[j].exponent.imag()), omega,
                                                   cert.modulus, box);
        cols.push_back(character_multiply(bases[j].columns[0], negated(ne.m)));
        betas.push_back(ne.exponent.imag());
    }
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
            auto hit = detect_resonance(betas[j] - betas[k], omega, 1, box);
            if (hit && inf_norm(hit->k) != 0)
                throw AmbiguityError("normalize_unitary: resonant beta-difference between chains " +
                                     std::to_string(j) + " and " + std::to_string(k));
        }

    Certificate shifted = cert;
    shifted.frame = hstack(cols);
    shifted.B = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) shifted.B(j, j) = Cplx(0.0, betas[j]);
    shifted.group_tag = GroupTag::GL_C;
    shifted.residual = residual_conjugation(cocycle, shifted, grid, opts.times).max_residual;

    return normalize_base_point(shifted, GramForm::hermitian(), omega, opts);
}

// sampled group-membership check of the cocycle itself (exit-code-5 gate)
inline double cocycle_group_residual(const CocycleEvaluator& cocycle, GroupTag tag,
                                     const EvaluationGrid& grid, const std::vector<double>& times) {
    double worst = 0.0;
    for (double t : times)
        for (long long f = 0; f < grid.size(); f += std::max<long long>(1, grid.size() / 16))
            worst = std::max(worst, group_residual(cocycle(t, grid.point(f)), tag));
    return worst;
}

}  // namespace qpr
