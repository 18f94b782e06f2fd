#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <complex>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "torus_map.hpp"

namespace qpr {

// Bounded lattice search window. The paper's resonance statements are exact
// dichotomies; numerically every classification is relative to (K, tolerance)
// and both are recorded alongside results.
struct SearchBox {
    int K = 10;
    double tolerance = 1e-9;
};

struct ResonanceHit {
    FreqIndex k;
    double value;     // the matched 2*pi*<k, omega/N>
    double residual;  // |beta - value|
};

namespace detail {

inline long long sq_norm(const FreqIndex& k) {
    long long s = 0;
    for (int ki : k) s += static_cast<long long>(ki) * ki;
    return s;
}

// smaller residual, then smaller |k|, then lexicographic k
inline bool hit_better(const ResonanceHit& a, const ResonanceHit& b) {
    if (a.residual != b.residual) return a.residual < b.residual;
    long long na = sq_norm(a.k), nb = sq_norm(b.k);
    if (na != nb) return na < nb;
    return a.k < b.k;
}

template <typename Fn>
void for_each_in_box(int dim, int K, Fn&& fn) {
    FreqIndex k(dim, -K);
    while (true) {
        fn(k);
        int axis = dim - 1;
        while (axis >= 0 && k[axis] == K) k[axis--] = -K;
        if (axis < 0) return;
        ++k[axis];
    }
}

inline std::optional<ResonanceHit> search_lattice(double beta, const Vec& omega, double scale,
                                                  const SearchBox& box) {
    std::optional<ResonanceHit> best;
    for_each_in_box(static_cast<int>(omega.size()), box.K, [&](const FreqIndex& k) {
        double dot = 0.0;
        for (Eigen::Index i = 0; i < omega.size(); ++i) dot += k[i] * omega[i];
        double value = scale * dot;
        ResonanceHit hit{k, value, std::abs(beta - value)};
        if (hit.residual <= box.tolerance && (!best || hit_better(hit, *best))) best = hit;
    });
    return best;
}

}  // namespace detail

// best k with |beta - 2*pi*<k, omega/N>| <= tolerance, if any
inline std::optional<ResonanceHit> detect_resonance(double beta, const FrequencyVector& omega, int N,
                                                    const SearchBox& box) {
    if (N < 1) throw Error("detect_resonance: N must be >= 1");
    return detail::search_lattice(beta, omega.omega, 2.0 * M_PI / N, box);
}

// same contract against the extended vector (omega, 1); k lies in Z^{d+1}
inline std::optional<ResonanceHit> detect_resonance_discrete(double beta, const FrequencyVector& omega,
                                                             int N, const SearchBox& box) {
    if (N < 1) throw Error("detect_resonance_discrete: N must be >= 1");
    return detail::search_lattice(beta, omega.extended().omega, 2.0 * M_PI / N, box);
}

enum class ResonanceClass { RealClass, HalfResonant, NonResonant };

inline const char* to_string(ResonanceClass c) {
    switch (c) {
        case ResonanceClass::RealClass: return "RealClass";
        case ResonanceClass::HalfResonant: return "HalfResonant";
        default: return "NonResonant";
    }
}

struct ExponentClass {
    ResonanceClass tag;
    std::optional<ResonanceHit> witness;  // RealClass: beta ~ 2*pi*<k,w>; HalfResonant: beta ~ pi*<k,w>
    SearchBox box;                        // the classification is only meaningful relative to this
};

// Trichotomy of beta against 2*pi*<Z^d,w> and pi*<Z^d,w> (w = omega, or
// (omega,1) for discrete cocycles). Throws AmbiguityError when lattice points
// of both classes match within tolerance.
inline ExponentClass classify_exponent(double beta, const FrequencyVector& omega, const SearchBox& box,
                                       bool discrete = false) {
    const Vec w = discrete ? omega.extended().omega : omega.omega;

    auto full = detail::search_lattice(beta, w, 2.0 * M_PI, box);

    // pi-lattice points with some odd component; the all-even ones coincide
    // with the 2*pi lattice
    std::optional<ResonanceHit> half;
    detail::for_each_in_box(static_cast<int>(w.size()), box.K, [&](const FreqIndex& k) {
        bool all_even = true;
        for (int ki : k) all_even = all_even && ki % 2 == 0;
        if (all_even) return;
        double dot = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) dot += k[i] * w[i];
        ResonanceHit hit{k, M_PI * dot, std::abs(beta - M_PI * dot)};
        if (hit.residual <= box.tolerance && (!half || detail::hit_better(hit, *half))) half = hit;
    });

    if (full && half)
        throw AmbiguityError("classify_exponent: lattice points of different class both match (K=" +
                             std::to_string(box.K) + ", tol=" + std::to_string(box.tolerance) + ")");
    if (full) return {ResonanceClass::RealClass, full, box};
    if (half) return {ResonanceClass::HalfResonant, half, box};
    return {ResonanceClass::NonResonant, std::nullopt, box};
}

struct NormalizedExponent {
    Cplx exponent;  // alpha + i*beta' with beta' = beta - 2*pi*<m, omega/N>
    FreqIndex m;
};

// m minimizing |beta - 2*pi*<m, omega/N>| over the box; a minimized beta'
// within tolerance of 0 is snapped to exactly 0.
inline NormalizedExponent normalize_exponent(Cplx alpha_beta, const FrequencyVector& omega, int N,
                                             const SearchBox& box) {
    const double beta = alpha_beta.imag();
    std::optional<ResonanceHit> best;
    detail::for_each_in_box(omega.dim(), box.K, [&](const FreqIndex& k) {
        double dot = 0.0;
        for (Eigen::Index i = 0; i < omega.omega.size(); ++i) dot += k[i] * omega.omega[i];
        double value = 2.0 * M_PI * dot / N;
        ResonanceHit hit{k, value, std::abs(beta - value)};
        if (!best || detail::hit_better(hit, *best)) best = hit;
    });
    double reduced = beta - best->value;
    if (std::abs(reduced) <= box.tolerance) reduced = 0.0;
    return {Cplx(alpha_beta.real(), reduced), best->k};
}

using IntMatrix = std::vector<std::vector<long long>>;

namespace detail {

using BigInt = boost::multiprecision::cpp_int;
using BigMatrix = std::vector<std::vector<BigInt>>;

// fraction-free Gaussian elimination; exact
inline BigInt bareiss_determinant(BigMatrix m) {
    const std::size_t n = m.size();
    BigInt sign = 1, prev = 1;
    for (std::size_t p = 0; p < n; ++p) {
        if (m[p][p] == 0) {
            std::size_t q = p + 1;
            while (q < n && m[q][p] == 0) ++q;
            if (q == n) return 0;
            std::swap(m[p], m[q]);
            sign = -sign;
        }
        for (std::size_t i = p + 1; i < n; ++i) {
            for (std::size_t j = p + 1; j < n; ++j)
                m[i][j] = (m[i][j] * m[p][p] - m[i][p] * m[p][j]) / prev;
            m[i][p] = 0;
        }
        prev = m[p][p];
    }
    return sign * m[n - 1][n - 1];
}

}  // namespace detail

// Integer matrix with first row v and determinant exactly +1, built by
// extended-gcd column reduction of v with the inverse row operations
// accumulated. Exact arbitrary-precision arithmetic throughout; the
// determinant is re-verified before returning.
inline IntMatrix unimodular_complete(const std::vector<long long>& v) {
    const std::size_t n = v.size();
    if (n == 0) throw Error("unimodular_complete: empty vector");
    bool all_zero = true;
    for (long long x : v) all_zero = all_zero && x == 0;
    if (all_zero) throw Error("unimodular_complete: zero vector");
    long long g = 0;
    for (long long x : v) g = std::gcd(g, std::abs(x));
    if (g != 1) throw Error("unimodular_complete: input is not primitive (gcd = " + std::to_string(g) + ")");

    using detail::BigInt;
    std::vector<BigInt> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = v[i];
    detail::BigMatrix W(n, std::vector<BigInt>(n, 0));
    for (std::size_t i = 0; i < n; ++i) W[i][i] = 1;

    // Column ops drive w to e_1; each inverse op applied to W on the left
    // keeps the invariant (first row of W) == v.
    auto nonzero_count = [&] {
        std::size_t c = 0;
        for (const auto& x : w) c += x != 0;
        return c;
    };
    while (nonzero_count() > 1) {
        std::size_t p = 0;
        BigInt best = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] != 0 && (best == 0 || abs(w[i]) < best)) best = abs(w[i]), p = i;
        for (std::size_t q = 0; q < n; ++q) {
            if (q == p || w[q] == 0) continue;
            BigInt lambda = w[q] / w[p];  // truncated division
            if (lambda != 0) {
                w[q] -= lambda * w[p];
                for (std::size_t j = 0; j < n; ++j) W[p][j] += lambda * W[q][j];
            }
        }
    }
    std::size_t p = 0;
    while (w[p] == 0) ++p;
    if (p != 0) {
        std::swap(w[0], w[p]);
        std::swap(W[0], W[p]);
    }
    if (w[0] < 0) {
        w[0] = -w[0];
        for (auto& x : W[0]) x = -x;
    }
    // w == e_1 now, so row 0 of W equals v; fix orientation if needed
    BigInt det = detail::bareiss_determinant(W);
    if (det == -1) {
        if (n == 1) throw Error("unimodular_complete: no det +1 completion of (-1) in dimension 1");
        for (auto& x : W[1]) x = -x;
        det = detail::bareiss_determinant(W);
    }
    if (det != 1) throw Error("unimodular_complete: internal error, determinant != 1");

    IntMatrix out(n, std::vector<long long>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (W[i][j] > std::numeric_limits<long long>::max() ||
                W[i][j] < std::numeric_limits<long long>::min())
                throw Error("unimodular_complete: entry overflows long long");
            out[i][j] = static_cast<long long>(W[i][j]);
        }
    for (std::size_t j = 0; j < n; ++j)
        if (out[0][j] != v[j]) throw Error("unimodular_complete: internal error, first row != v");
    return out;
}

}  // namespace qpr
