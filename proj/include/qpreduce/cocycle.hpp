#pragma once

#include <cmath>
#include <memory>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "torus_map.hpp"

namespace qpr {

enum class GroupTag { GL_C, GL_R, SL_R, Sp_R, O_n, U_n };

inline const char* to_string(GroupTag g) {
    switch (g) {
        case GroupTag::GL_C: return "GL_C";
        case GroupTag::GL_R: return "GL_R";
        case GroupTag::SL_R: return "SL_R";
        case GroupTag::Sp_R: return "Sp_R";
        case GroupTag::O_n: return "O_n";
        default: return "U_n";
    }
}

inline GroupTag group_tag_from_string(const std::string& s) {
    if (s == "GL_C") return GroupTag::GL_C;
    if (s == "GL_R") return GroupTag::GL_R;
    if (s == "SL_R") return GroupTag::SL_R;
    if (s == "Sp_R") return GroupTag::Sp_R;
    if (s == "O_n") return GroupTag::O_n;
    if (s == "U_n") return GroupTag::U_n;
    throw Error("unknown group tag: " + s);
}

// Reducibility witness in frame convention:
//
//   X^t(theta) * F(theta) = F(theta + t*omega) * e^{tB}
//
// F is the matrix of basis columns, i.e. Z^{-1} in the conjugation
// X^t = Z(theta+t*omega)^{-1} e^{tB} Z(theta). For discrete certificates the
// same identity is read at integer t only.
struct Certificate {
    TorusMap frame;
    Mat B;
    int modulus;
    GroupTag group_tag = GroupTag::GL_C;
    double residual = 0.0;
    bool discrete = false;

    int n() const { return frame.rows(); }
};

struct IntegratorSettings {
    double step = 1e-3;
    double max_time = 10.0;
    double halving_check_tol = 1e-6;
};

namespace detail {

// classical fixed-step RK4 for d/ds X = A(theta + s*omega) X
inline Mat rk4_fundamental(const TorusMap& A_field, const Vec& omega, const Vec& theta, double t,
                           double step) {
    const int n = A_field.rows();
    Mat X = Mat::Identity(n, n);
    if (t == 0.0) return X;
    const long long steps = std::max<long long>(1, static_cast<long long>(std::ceil(std::abs(t) / step)));
    const double h = t / static_cast<double>(steps);
    auto A = [&](double s) { return A_field.evaluate(theta + s * omega); };
    double s = 0.0;
    for (long long i = 0; i < steps; ++i) {
        Mat A1 = A(s), A2 = A(s + h / 2), A4 = A(s + h);
        Mat k1 = A1 * X;
        Mat k2 = A2 * (X + (h / 2) * k1);
        Mat k3 = A2 * (X + (h / 2) * k2);
        Mat k4 = A4 * (X + h * k3);
        X += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        s += h;
    }
    return X;
}

}  // namespace detail

// X^t(theta), backed by one of three representations:
//  - conjugated: F(theta+t*omega) e^{tB} F(theta)^{-1}, exact algebra
//  - generator:  RK4 integration of d/dt X = A(theta+t*omega) X
//  - discrete:   telescoped products of the time-1 map (integer t only)
class CocycleEvaluator {
public:
    enum class Kind { Conjugated, Generator, Discrete };

    static CocycleEvaluator conjugated(const Certificate& cert, const FrequencyVector& omega) {
        CocycleEvaluator ev(Kind::Conjugated, omega);
        ev.frame_ = std::make_shared<TorusMap>(cert.frame);
        ev.B_ = cert.B;
        return ev;
    }

    static CocycleEvaluator generator(const TorusMap& A_field, const FrequencyVector& omega,
                                      IntegratorSettings settings = {}) {
        CocycleEvaluator ev(Kind::Generator, omega);
        ev.frame_ = std::make_shared<TorusMap>(A_field);
        ev.settings_ = settings;
        return ev;
    }

    static CocycleEvaluator discrete(const TorusMap& X1, const FrequencyVector& omega) {
        CocycleEvaluator ev(Kind::Discrete, omega);
        ev.frame_ = std::make_shared<TorusMap>(X1);
        return ev;
    }

    Kind kind() const { return kind_; }
    const FrequencyVector& omega() const { return omega_; }
    int n() const { return frame_->rows(); }
    bool is_discrete() const { return kind_ == Kind::Discrete; }

    Mat operator()(double t, const Vec& theta) const {
        switch (kind_) {
            case Kind::Conjugated: {
                Mat F0 = frame_->evaluate(theta);
                Mat Ft = frame_->evaluate(theta + t * omega_.omega);
                Mat e = (t * B_).exp();
                return Ft * e * F0.partialPivLu().solve(Mat::Identity(n(), n()));
            }
            case Kind::Generator:
                return detail::rk4_fundamental(*frame_, omega_.omega, theta, t, settings_.step);
            default: {
                double r = std::round(t);
                if (std::abs(t - r) > 1e-12) throw Error("discrete cocycle evaluated at non-integer time");
                long long steps = static_cast<long long>(r);
                const int nn = n();
                Mat X = Mat::Identity(nn, nn);
                if (steps >= 0) {
                    for (long long j = 0; j < steps; ++j)
                        X = frame_->evaluate(theta + static_cast<double>(j) * omega_.omega) * X;
                } else {
                    for (long long j = -1; j >= steps; --j) {
                        Mat step_mat = frame_->evaluate(theta + static_cast<double>(j) * omega_.omega);
                        X = X * step_mat.partialPivLu().solve(Mat::Identity(nn, nn));
                    }
                }
                return X;
            }
        }
    }

private:
    CocycleEvaluator(Kind k, FrequencyVector om) : kind_(k), omega_(std::move(om)) {}

    Kind kind_;
    FrequencyVector omega_;
    std::shared_ptr<TorusMap> frame_;  // frame, generator field, or time-1 map
    Mat B_;
    IntegratorSettings settings_;
};

// max-norm group relation defect of a single matrix
inline double group_residual(const Mat& M, GroupTag tag) {
    const Eigen::Index n = M.rows();
    switch (tag) {
        case GroupTag::Sp_R: {
            if (n % 2 != 0) throw Error("group_residual: Sp requires even dimension");
            Mat J = Mat::Zero(n, n);
            J.topRightCorner(n / 2, n / 2) = -Mat::Identity(n / 2, n / 2);
            J.bottomLeftCorner(n / 2, n / 2) = Mat::Identity(n / 2, n / 2);
            return (M.adjoint() * J * M - J).cwiseAbs().maxCoeff();
        }
        case GroupTag::O_n:
        case GroupTag::U_n:
            return (M.adjoint() * M - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
        case GroupTag::SL_R:
            return std::abs(M.determinant() - 1.0);
        default:
            return 0.0;
    }
}

}  // namespace qpr
