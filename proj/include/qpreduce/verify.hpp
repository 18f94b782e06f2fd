#pragma once

#include <vector>

#include "cocycle.hpp"
#include "torus_map.hpp"

namespace qpr {

// Non-commensurate defaults; avoids accidental periodic cancellation.
inline std::vector<double> default_time_samples() { return {0.1, 0.7, 1.3, 2.9, 5.0}; }

struct ResidualReport {
    double max_residual = 0.0;
    Vec argmax_theta;
    double argmax_t = 0.0;
    long long samples_checked = 0;
};

struct IntegrationResult {
    Mat X;
    double halving_error;  // max-norm gap between full-step and half-step runs
};

// Fixed-step RK4 fundamental solution with step-halving error estimate.
// Adaptive stepping is deliberately avoided: reproducibility over efficiency.
inline IntegrationResult integrate_cocycle(const TorusMap& A_field, const FrequencyVector& omega,
                                           const Vec& theta, double t,
                                           const IntegratorSettings& settings = {}) {
    if (!std::isfinite(t)) throw Error("integrate_cocycle: non-finite time");
    if (A_field.rows() != A_field.cols()) throw Error("integrate_cocycle: A must be square");
    Mat X = detail::rk4_fundamental(A_field, omega.omega, theta, t, settings.step);
    Mat Xh = detail::rk4_fundamental(A_field, omega.omega, theta, t, settings.step / 2.0);
    double err = (X - Xh).cwiseAbs().maxCoeff();
    if (err > settings.halving_check_tol)
        throw VerificationError("integrate_cocycle: step-halving disagreement " + std::to_string(err) +
                                " exceeds " + std::to_string(settings.halving_check_tol));
    return {Xh, err};
}

// max over grid x times of || X^t(theta) F(theta) - F(theta+t*omega) e^{tB} ||
inline ResidualReport residual_conjugation(const CocycleEvaluator& cocycle, const Certificate& cert,
                                           const EvaluationGrid& grid,
                                           const std::vector<double>& times) {
    ResidualReport report;
    report.argmax_theta = Vec::Zero(grid.dimension);
    for (double t : times) {
        Mat etB = (t * cert.B).exp();
        for (long long f = 0; f < grid.size(); ++f) {
            Vec theta = grid.point(f);
            Mat lhs = cocycle(t, theta) * cert.frame.evaluate(theta);
            Mat rhs = cert.frame.evaluate(theta + t * cocycle.omega().omega) * etB;
            double r = (lhs - rhs).cwiseAbs().maxCoeff();
            ++report.samples_checked;
            if (r > report.max_residual) {
                report.max_residual = r;
                report.argmax_theta = theta;
                report.argmax_t = t;
            }
        }
    }
    return report;
}

inline std::vector<double> integer_times(int n_max) {
    std::vector<double> ts;
    for (int n = -n_max; n <= n_max; ++n)
        if (n != 0) ts.push_back(static_cast<double>(n));
    return ts;
}

struct DerivativeCheck {
    double residual;        // max-grid-norm of d_omega Z - (BZ - ZA)
    double z_fit_residual;  // how well Z = F^{-1} is represented at the fit degree
};

// d_omega Z = BZ - ZA with Z = F^{-1} formed pointwise and refit; F^{-1} is
// generally not a trig polynomial, so the fit defect is reported alongside.
inline DerivativeCheck check_derivative_relation(const Certificate& cert, const TorusMap& A_field,
                                                 const FrequencyVector& omega,
                                                 const EvaluationGrid& grid, int fit_degree) {
    const int n = cert.n();
    std::vector<Mat> z_samples;
    z_samples.reserve(static_cast<std::size_t>(grid.size()));
    for (long long f = 0; f < grid.size(); ++f) {
        Mat F = cert.frame.evaluate(grid.point(f));
        z_samples.push_back(F.partialPivLu().solve(Mat::Identity(n, n)));
    }
    FitResult fit = fit_from_samples(z_samples, grid, fit_degree);

    TorusMap dZ = directional_derivative(fit.map, omega);
    TorusMap BZ = multiply_constant_left(cert.B, fit.map);
    TorusMap ZA = multiply(fit.map, A_field);
    TorusMap defect = subtract(dZ, subtract(BZ, ZA));

    double res = 0.0;
    for (long long f = 0; f < grid.size(); ++f)
        res = std::max(res, defect.evaluate(grid.point(f)).cwiseAbs().maxCoeff());
    return {res, fit.residual};
}

// max defect of X^{t+s}(theta) = X^t(theta+s*omega) X^s(theta) over samples
inline double check_cocycle_law(const CocycleEvaluator& cocycle,
                                const std::vector<std::pair<double, double>>& time_pairs,
                                const std::vector<Vec>& thetas) {
    double worst = 0.0;
    for (const auto& [t, s] : time_pairs) {
        for (const auto& theta : thetas) {
            Mat lhs = cocycle(t + s, theta);
            Mat rhs = cocycle(t, theta + s * cocycle.omega().omega) * cocycle(s, theta);
            worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

}  // namespace qpr
