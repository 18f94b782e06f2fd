#pragma once

#include <Eigen/SVD>
#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "cocycle.hpp"
#include "resonance.hpp"
#include "torus_map.hpp"
#include "verify.hpp"

namespace qpr {

// Ordered Jordan chain z_1..z_k of n x 1 maps on modulus*T^d:
//
//   X^t(theta) z_j(theta) = e^{t(alpha+i*beta)} sum_{i<=j} t^{j-i}/(j-i)! z_i(theta+t*omega)
struct JordanBasis {
    std::vector<TorusMap> columns;
    Cplx exponent;
    int modulus;

    int rank() const { return static_cast<int>(columns.size()); }
    TorusMap stacked() const { return hstack(columns); }
};

inline int rank_of(const Mat& m, double sv_tol = 1e-8) {
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    double thresh = sv_tol * std::max(1.0, sv[0]);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > thresh) ++r;
    return r;
}

inline Mat stacked_eval(const std::vector<TorusMap>& cols, const Vec& theta) {
    Mat m(cols[0].rows(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) m.col(j) = cols[j].evaluate(theta);
    return m;
}

// Upper Jordan block alpha*I + superdiagonal of ones.
inline Mat jordan_block(Cplx lambda, int k) {
    Mat J = lambda * Mat::Identity(k, k);
    for (int i = 0; i + 1 < k; ++i) J(i, i + 1) = 1.0;
    return J;
}

inline RealMat real_jordan_block(double alpha, int k) {
    RealMat J = alpha * RealMat::Identity(k, k);
    for (int i = 0; i + 1 < k; ++i) J(i, i + 1) = 1.0;
    return J;
}

// Real form of a conjugate pair of rank-k chains on interleaved columns
// [u_1 v_1 ... u_k v_k]: I_k (x) [[a,b],[-b,a]] + S_k (x) I_2.
inline RealMat conjugate_pair_block(double alpha, double beta, int k) {
    RealMat A = RealMat::Zero(2 * k, 2 * k);
    for (int i = 0; i < k; ++i) {
        A(2 * i, 2 * i) = alpha;
        A(2 * i + 1, 2 * i + 1) = alpha;
        A(2 * i, 2 * i + 1) = beta;
        A(2 * i + 1, 2 * i) = -beta;
        if (i + 1 < k) {
            A(2 * i, 2 * i + 2) = 1.0;
            A(2 * i + 1, 2 * i + 3) = 1.0;
        }
    }
    return A;
}

// max defect of the defining relations over grid x times
inline double verify_jordan_basis(const JordanBasis& basis, const CocycleEvaluator& cocycle,
                                  const EvaluationGrid& grid, const std::vector<double>& times) {
    const int k = basis.rank();
    std::vector<double> inv_fact(k, 1.0);
    for (int i = 1; i < k; ++i) inv_fact[i] = inv_fact[i - 1] / i;
    double worst = 0.0;
    for (double t : times) {
        Cplx growth = std::exp(t * basis.exponent);
        for (long long f = 0; f < grid.size(); ++f) {
            Vec theta = grid.point(f);
            Vec shifted = theta + t * cocycle.omega().omega;
            Mat X = cocycle(t, theta);
            for (int j = 0; j < k; ++j) {
                Mat lhs = X * basis.columns[j].evaluate(theta);
                Mat rhs = Mat::Zero(lhs.rows(), 1);
                for (int i = 0; i <= j; ++i)
                    rhs += std::pow(t, j - i) * inv_fact[j - i] * basis.columns[i].evaluate(shifted);
                rhs *= growth;
                worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
            }
        }
    }
    return worst;
}

// One basis per Jordan block of B, columns taken from F at the block's
// indices. B must be block-diagonal Jordan up to tolerance snap.
inline std::vector<JordanBasis> extract_jordan_bases(const TorusMap& F, const Mat& B,
                                                     const EvaluationGrid& grid, double tol = 1e-9) {
    const int n = F.rows();
    if (B.rows() != n || B.cols() != n) throw Error("extract_jordan_bases: dimension mismatch");

    for (long long f = 0; f < grid.size(); ++f) {
        double det = std::abs(F.evaluate(grid.point(f)).determinant());
        if (det < 1e-10)
            throw Error("extract_jordan_bases: frame singular on grid (|det| = " + std::to_string(det) + ")");
    }

    std::vector<int> super(n - 1 < 0 ? 0 : n - 1);
    for (int i = 0; i + 1 < n; ++i) {
        Cplx s = B(i, i + 1);
        if (std::abs(s) <= tol)
            super[i] = 0;
        else if (std::abs(s - 1.0) <= tol)
            super[i] = 1;
        else
            throw Error("extract_jordan_bases: B is not in Jordan form (superdiagonal entry)");
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j || (j == i + 1)) continue;
            if (std::abs(B(i, j)) > tol)
                throw Error("extract_jordan_bases: B is not in Jordan form (off-pattern entry)");
        }

    std::vector<JordanBasis> bases;
    int start = 0;
    while (start < n) {
        int end = start;
        while (end + 1 < n && super[end] == 1) {
            if (std::abs(B(end + 1, end + 1) - B(start, start)) > tol)
                throw Error("extract_jordan_bases: Jordan chain with unequal eigenvalues");
            ++end;
        }
        JordanBasis basis;
        basis.exponent = B(start, start);
        basis.modulus = F.period();
        for (int j = start; j <= end; ++j) basis.columns.push_back(F.column(j));
        bases.push_back(std::move(basis));
        start = end + 1;
    }
    return bases;
}

// character-multiply every column by m; the exponent gains 2*pi*i <m, omega/N>
inline JordanBasis shift_exponent(const JordanBasis& basis, const FreqIndex& m,
                                  const FrequencyVector& omega) {
    JordanBasis out;
    out.modulus = basis.modulus;
    double dot = 0.0;
    for (int i = 0; i < omega.dim(); ++i) dot += m[i] * omega.omega[i] / basis.modulus;
    out.exponent = basis.exponent + Cplx(0.0, 2.0 * M_PI * dot);
    for (const auto& col : basis.columns) out.columns.push_back(character_multiply(col, m));
    return out;
}

inline JordanBasis conjugate_basis(const JordanBasis& basis) {
    JordanBasis out;
    out.modulus = basis.modulus;
    out.exponent = std::conj(basis.exponent);
    for (const auto& col : basis.columns) out.columns.push_back(conjugate_map(col));
    return out;
}

inline JordanBasis lift_basis(const JordanBasis& basis, int factor) {
    JordanBasis out;
    out.modulus = basis.modulus * factor;
    out.exponent = basis.exponent;
    for (const auto& col : basis.columns) out.columns.push_back(lift_period(col, factor));
    return out;
}

struct RealifyResult {
    std::optional<JordanBasis> U;  // (u_l .. u_k), exponent alpha
    std::optional<JordanBasis> V;  // (v_m .. v_k)
    int l;                         // k+1 when all real parts vanish
    int m;
};

// Split a chain with exactly real exponent into the chains of its real and
// imaginary parts. Leading columns below tol are the identically-zero ones;
// at least one of u_1, v_1 must survive.
inline RealifyResult realify_block(const JordanBasis& basis, const EvaluationGrid& grid,
                                   double tol = 1e-9) {
    if (basis.exponent.imag() != 0.0)
        throw Error("realify_block: exponent must be exactly real (snap first)");
    const int k = basis.rank();
    std::vector<TorusMap> u, v;
    for (const auto& col : basis.columns) {
        u.push_back(real_part(col));
        v.push_back(imag_part(col));
    }
    auto first_alive = [&](const std::vector<TorusMap>& cols) {
        for (int j = 0; j < k; ++j)
            if (cols[j].max_norm_on_grid(grid) > tol) return j + 1;
        return k + 1;
    };
    const int l = first_alive(u);
    const int m = first_alive(v);
    if (l > 1 && m > 1)
        throw Error("realify_block: both u_1 and v_1 vanish; input is not a Jordan basis");

    RealifyResult res;
    res.l = l;
    res.m = m;
    if (l <= k) {
        JordanBasis U{std::vector<TorusMap>(u.begin() + (l - 1), u.end()), Cplx(basis.exponent.real(), 0.0),
                      basis.modulus};
        res.U = std::move(U);
    }
    if (m <= k) {
        JordanBasis V{std::vector<TorusMap>(v.begin() + (m - 1), v.end()), Cplx(basis.exponent.real(), 0.0),
                      basis.modulus};
        res.V = std::move(V);
    }
    return res;
}

namespace detail {

inline std::vector<TorusMap> all_columns(const std::vector<JordanBasis>& blocks) {
    std::vector<TorusMap> cols;
    for (const auto& b : blocks)
        for (const auto& c : b.columns) cols.push_back(c);
    return cols;
}

inline int total_rank(const std::vector<JordanBasis>& blocks) {
    int r = 0;
    for (const auto& b : blocks) r += b.rank();
    return r;
}

}  // namespace detail

// Absorb u_block into a mutually independent family of real chains with the
// same exponent. If spans already meet trivially on the grid the block is
// appended; otherwise u_1 = sum_i lambda_i w^i_1 with constant lambda, the
// shortened chain u'_j = u_{j+1} - sum_i lambda_i w^i_{j+1} is formed and the
// procedure recurses. Chains shorter than needed contribute zero columns.
inline std::vector<JordanBasis> merge_real_blocks(const JordanBasis& u_block,
                                                  std::vector<JordanBasis> w_blocks,
                                                  const EvaluationGrid& grid, double tol = 1e-9,
                                                  double sv_tol = 1e-8) {
    const int k = u_block.rank();
    if (k == 0) return w_blocks;
    bool u_alive = false;
    for (const auto& c : u_block.columns) u_alive = u_alive || c.max_norm_on_grid(grid) > tol;
    if (!u_alive) return w_blocks;

    if (w_blocks.empty()) {
        w_blocks.push_back(u_block);
        return w_blocks;
    }

    std::vector<TorusMap> w_cols = detail::all_columns(w_blocks);
    const int expect = detail::total_rank(w_blocks) + k;
    bool independent = true;
    for (long long f = 0; f < grid.size() && independent; ++f) {
        Vec theta = grid.point(f);
        Mat stacked(u_block.columns[0].rows(), expect);
        stacked.leftCols(expect - k) = stacked_eval(w_cols, theta);
        stacked.rightCols(k) = stacked_eval(u_block.columns, theta);
        independent = rank_of(stacked, sv_tol) == expect;
    }
    if (independent) {
        w_blocks.push_back(u_block);
        return w_blocks;
    }

    // nontrivial intersection: u_1 lies in the span of the first columns
    const std::size_t m = w_blocks.size();
    Vec theta0 = Vec::Zero(grid.dimension);
    Mat A(u_block.columns[0].rows(), m);
    for (std::size_t i = 0; i < m; ++i) A.col(i) = w_blocks[i].columns[0].evaluate(theta0);
    Eigen::VectorXcd lambda =
        A.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(u_block.columns[0].evaluate(theta0));

    double probe_scale = std::max(1.0, u_block.columns[0].max_norm_on_grid(grid));
    for (long long f = 0; f < grid.size(); ++f) {
        Vec theta = grid.point(f);
        Mat probe = u_block.columns[0].evaluate(theta);
        for (std::size_t i = 0; i < m; ++i) probe -= lambda[i] * w_blocks[i].columns[0].evaluate(theta);
        if (probe.cwiseAbs().maxCoeff() > tol * probe_scale)
            throw VerificationError(
                "merge_real_blocks: lambda inconsistent across the grid (combination coefficients "
                "are not constant; corrupted input)");
    }

    if (k == 1) return w_blocks;  // fully absorbed

    JordanBasis shortened;
    shortened.exponent = u_block.exponent;
    shortened.modulus = u_block.modulus;
    for (int j = 1; j < k; ++j) {
        TorusMap col = u_block.columns[j];
        for (std::size_t i = 0; i < m; ++i) {
            if (j < w_blocks[i].rank())
                col = subtract(col, scale(w_blocks[i].columns[j], Cplx(lambda[i])));
        }
        shortened.columns.push_back(col);
    }
    return merge_real_blocks(shortened, std::move(w_blocks), grid, tol, sv_tol);
}

struct IntersectionDim {
    int dim;
    bool constant;
};

// dim(span a  ^  span b) at each grid point via rank_a + rank_b - rank_stacked.
// Non-constancy is reported, not thrown: subbundle intersections of
// non-invariant families legitimately jump dimension.
inline IntersectionDim subbundle_intersection_dim(const std::vector<TorusMap>& bases_a,
                                                  const std::vector<TorusMap>& bases_b,
                                                  const EvaluationGrid& grid, double sv_tol = 1e-8) {
    int first = -1;
    bool constant = true;
    for (long long f = 0; f < grid.size(); ++f) {
        Vec theta = grid.point(f);
        Mat A = stacked_eval(bases_a, theta);
        Mat B = stacked_eval(bases_b, theta);
        Mat S(A.rows(), A.cols() + B.cols());
        S.leftCols(A.cols()) = A;
        S.rightCols(B.cols()) = B;
        int d = rank_of(A, sv_tol) + rank_of(B, sv_tol) - rank_of(S, sv_tol);
        if (first < 0)
            first = d;
        else if (d != first)
            constant = false;
    }
    return {first, constant};
}

struct BlockClassRecord {
    int block_index;
    Cplx exponent;
    ExponentClass cls;
};

// Output of the real-decomposition pipeline: W is reducible modulo 2 with a
// real-spectrum constant matrix A1, W' modulo 1 with non-resonant spectrum A2.
struct RealDecomposition {
    std::vector<TorusMap> W_basis;  // real columns on 2*T^d
    RealMat A1;
    std::vector<TorusMap> Wp_basis;  // real columns on T^d
    RealMat A2;
    std::vector<BlockClassRecord> classes;

    int s() const { return static_cast<int>(W_basis.size()); }
};

struct DecomposeOptions {
    int grid_points = 8;
    std::vector<double> times = default_time_samples();
    double snap_tol = 1e-9;    // exponent imaginary part snap after normalization
    double column_tol = 1e-9;  // zero-column threshold in realify/merge
    double sv_tol = 1e-8;      // singular-value threshold for rank tests
    double realness_tol = 1e-9;
    bool discrete = false;
};

namespace detail {

struct PipelineShift {
    Cplx exponent;
    FreqIndex m_spatial;
    long long m_time;  // discrete-only free relabeling, no column change
};

// Minimal-|beta| representative over the shifts realizable by torus
// characters. Discrete cocycles may also shift by the time component of the
// (omega,1) lattice when it acts trivially at integer times: any 2*pi*m_t for
// N = 1, even m_t for N = 2.
inline PipelineShift pipeline_normalize(Cplx lambda, const FrequencyVector& omega, int N,
                                        const SearchBox& box, bool discrete) {
    if (!discrete) {
        NormalizedExponent ne = normalize_exponent(lambda, omega, N, box);
        return {ne.exponent, ne.m, 0};
    }
    const double beta = lambda.imag();
    const int d = omega.dim();
    std::optional<ResonanceHit> best;
    detail::for_each_in_box(d + 1, box.K, [&](const FreqIndex& k) {
        long long m_t = k[d];
        if (N == 2 && m_t % 2 != 0) return;
        double dot = static_cast<double>(m_t);
        for (int i = 0; i < d; ++i) dot += k[i] * omega.omega[i];
        double value = 2.0 * M_PI * dot / N;
        ResonanceHit hit{k, value, std::abs(beta - value)};
        if (!best || hit_better(hit, *best)) best = hit;
    });
    double reduced = beta - best->value;
    if (std::abs(reduced) <= box.tolerance) reduced = 0.0;
    FreqIndex spatial(best->k.begin(), best->k.begin() + d);
    return {Cplx(lambda.real(), reduced), spatial, best->k[d]};
}

inline std::optional<ResonanceHit> lattice_hit(double value, const FrequencyVector& omega,
                                               const SearchBox& box, bool discrete) {
    return discrete ? detect_resonance_discrete(value, omega, 1, box)
                    : detect_resonance(value, omega, 1, box);
}

inline bool nonzero_lattice_hit(double value, const FrequencyVector& omega, const SearchBox& box,
                                bool discrete) {
    auto hit = lattice_hit(value, omega, box, discrete);
    if (!hit) return false;
    for (int ki : hit->k)
        if (ki != 0) return true;
    return false;
}

}  // namespace detail

// Prop.-CR pipeline: decompose a GL(n,C) certificate of a real cocycle into a
// modulus-2 part with real spectrum and a modulus-1 part with non-resonant
// spectrum. Steps: extract chains, classify exponents, normalize and realify
// resonant chains (doubling the period for the half-resonant ones), merge
// dependent real chains, and pick one representative per conjugate pair of
// non-resonant exponent classes.
inline RealDecomposition decompose_real(const Certificate& cert, const FrequencyVector& omega,
                                        const SearchBox& box, const DecomposeOptions& opts = {}) {
    const int n = cert.n();
    CocycleEvaluator cocycle = CocycleEvaluator::conjugated(cert, omega);
    EvaluationGrid grid1{opts.grid_points, cert.modulus, omega.dim()};
    EvaluationGrid grid2{opts.grid_points, 2 * cert.modulus, omega.dim()};

    // Thm-1 hypothesis: the cocycle itself is real
    for (double t : {0.31, 1.07}) {
        Mat X = cocycle(opts.discrete ? 1.0 : t, Vec::Constant(omega.dim(), 0.17));
        if (X.imag().cwiseAbs().maxCoeff() > opts.realness_tol)
            throw GroupMembershipError("decompose_real: input cocycle is not real-valued");
    }

    std::vector<JordanBasis> bases = extract_jordan_bases(cert.frame, cert.B, grid1);
    RealDecomposition out;

    struct Classified {
        int index;
        JordanBasis basis;
        ExponentClass cls;
    };
    std::vector<Classified> real_blocks, half_blocks, nonres_blocks;
    for (std::size_t i = 0; i < bases.size(); ++i) {
        ExponentClass cls = classify_exponent(bases[i].exponent.imag(), omega, box, opts.discrete);
        out.classes.push_back({static_cast<int>(i), bases[i].exponent, cls});
        Classified c{static_cast<int>(i), bases[i], cls};
        switch (cls.tag) {
            case ResonanceClass::RealClass: real_blocks.push_back(std::move(c)); break;
            case ResonanceClass::HalfResonant: half_blocks.push_back(std::move(c)); break;
            default: nonres_blocks.push_back(std::move(c));
        }
    }

    // --- resonant chains: normalize exponent to exactly real, realify, merge
    auto realify_group = [&](std::vector<Classified>& blocks, int lift, const EvaluationGrid& grid) {
        // alpha -> realified chains, grouped within snap tolerance
        std::vector<double> alphas;
        std::vector<std::vector<JordanBasis>> groups;
        for (auto& blk : blocks) {
            JordanBasis b = blk.basis;
            if (lift > 1) b = lift_basis(b, lift);
            auto shift = detail::pipeline_normalize(b.exponent, omega, b.modulus, box, opts.discrete);
            b = shift_exponent(b, detail::negated_index(shift.m_spatial), omega);
            b.exponent = shift.exponent;
            if (std::abs(b.exponent.imag()) > opts.snap_tol)
                throw VerificationError(
                    "decompose_real: resonant exponent did not normalize to real (residual " +
                    std::to_string(b.exponent.imag()) + "); enlarge the search box");
            b.exponent = Cplx(b.exponent.real(), 0.0);
            RealifyResult r = realify_block(b, grid, opts.column_tol);
            std::size_t g = 0;
            while (g < alphas.size() && std::abs(alphas[g] - b.exponent.real()) > opts.snap_tol) ++g;
            if (g == alphas.size()) {
                alphas.push_back(b.exponent.real());
                groups.emplace_back();
            }
            if (r.U) groups[g].push_back(std::move(*r.U));
            if (r.V) groups[g].push_back(std::move(*r.V));
        }
        std::vector<JordanBasis> merged_all;
        for (auto& group : groups) {
            std::stable_sort(group.begin(), group.end(),
                             [](const JordanBasis& a, const JordanBasis& b) { return a.rank() > b.rank(); });
            std::vector<JordanBasis> merged;
            for (auto& blk : group)
                merged = merge_real_blocks(blk, std::move(merged), grid, opts.column_tol, opts.sv_tol);
            for (auto& blk : merged) merged_all.push_back(std::move(blk));
        }
        return merged_all;
    };

    std::vector<JordanBasis> wp_chains = realify_group(real_blocks, 1, grid1);
    std::vector<JordanBasis> w_chains = realify_group(half_blocks, 2, grid2);

    // --- non-resonant chains: group into exponent classes, pair classes with
    // their conjugates, keep the lower-indexed class of each pair
    struct NonresClass {
        Cplx exponent;  // representative (first block)
        std::vector<int> members;
        int dim = 0;
    };
    std::vector<NonresClass> classes;
    for (std::size_t i = 0; i < nonres_blocks.size(); ++i) {
        const Cplx lam = nonres_blocks[i].basis.exponent;
        std::size_t g = 0;
        for (; g < classes.size(); ++g) {
            if (std::abs(classes[g].exponent.real() - lam.real()) > opts.snap_tol) continue;
            if (detail::lattice_hit(lam.imag() - classes[g].exponent.imag(), omega, box, opts.discrete))
                break;
        }
        if (g == classes.size()) classes.push_back({lam, {}, 0});
        classes[g].members.push_back(static_cast<int>(i));
        classes[g].dim += nonres_blocks[i].basis.rank();
    }

    std::vector<int> partner(classes.size(), -1);
    std::vector<bool> kept(classes.size(), false);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (partner[c] >= 0) continue;
        bool found = false;
        for (std::size_t c2 = 0; c2 < classes.size() && !found; ++c2) {
            if (c2 == c || partner[c2] >= 0) continue;
            if (std::abs(classes[c].exponent.real() - classes[c2].exponent.real()) > opts.snap_tol) continue;
            if (classes[c].dim != classes[c2].dim) continue;
            if (!detail::lattice_hit(classes[c].exponent.imag() + classes[c2].exponent.imag(), omega, box,
                                     opts.discrete))
                continue;
            std::vector<TorusMap> conj_cols, cand_cols;
            for (int i : classes[c].members)
                for (const auto& col : nonres_blocks[i].basis.columns) conj_cols.push_back(conjugate_map(col));
            for (int i : classes[c2].members)
                for (const auto& col : nonres_blocks[i].basis.columns) cand_cols.push_back(col);
            IntersectionDim inter = subbundle_intersection_dim(conj_cols, cand_cols, grid1, opts.sv_tol);
            if (inter.dim == classes[c].dim && inter.constant) {
                partner[c] = static_cast<int>(c2);
                partner[c2] = static_cast<int>(c);
                kept[c] = true;
                found = true;
            }
        }
        if (!found)
            throw VerificationError(
                "decompose_real: no conjugate partner for a non-resonant exponent class (the cocycle "
                "is not real, or the search box is too small)");
    }

    // normalize representatives; shifting by the lattice cannot create
    // collisions between classes, but the guard stays box-relative
    struct ChosenBlock {
        JordanBasis basis;
        int cls;
    };
    std::vector<ChosenBlock> chosen;
    std::vector<double> rep_beta(classes.size(), 0.0);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (!kept[c]) continue;
        bool first = true;
        for (int i : classes[c].members) {
            JordanBasis b = nonres_blocks[i].basis;
            auto shift = detail::pipeline_normalize(b.exponent, omega, b.modulus, box, opts.discrete);
            b = shift_exponent(b, detail::negated_index(shift.m_spatial), omega);
            b.exponent = shift.exponent;
            if (first) {
                rep_beta[c] = b.exponent.imag();
                first = false;
            } else if (std::abs(b.exponent.imag() - rep_beta[c]) > opts.snap_tol) {
                throw VerificationError("decompose_real: inconsistent representatives within a class");
            }
            chosen.push_back({std::move(b), static_cast<int>(c)});
        }
    }
    for (std::size_t a = 0; a < classes.size(); ++a) {
        if (!kept[a]) continue;
        for (std::size_t b = a + 1; b < classes.size(); ++b) {
            if (!kept[b]) continue;
            if (std::abs(classes[a].exponent.real() - classes[b].exponent.real()) > opts.snap_tol) continue;
            if (detail::nonzero_lattice_hit(rep_beta[a] - rep_beta[b], omega, box, opts.discrete)) {
                // greedy lattice perturbation of the later class
                bool fixed = false;
                detail::for_each_in_box(omega.dim(), box.K, [&](const FreqIndex& k) {
                    if (fixed) return;
                    double dot = 0.0;
                    for (int i = 0; i < omega.dim(); ++i) dot += k[i] * omega.omega[i];
                    double cand = rep_beta[b] + 2.0 * M_PI * dot;
                    bool ok = true;
                    for (std::size_t c = 0; c < classes.size(); ++c) {
                        if (!kept[c] || c == b) continue;
                        if (detail::nonzero_lattice_hit(rep_beta[c] - cand, omega, box, opts.discrete))
                            ok = false;
                    }
                    if (ok) {
                        for (auto& ch : chosen) {
                            if (ch.cls != static_cast<int>(b)) continue;
                            ch.basis = shift_exponent(ch.basis, detail::negated_index(k), omega);
                        }
                        rep_beta[b] = cand;
                        fixed = true;
                    }
                });
                if (!fixed)
                    throw AmbiguityError("decompose_real: unable to separate resonant representative pair");
            }
        }
    }

    // --- assemble
    std::vector<RealMat> a1_blocks, a2_blocks;
    for (const auto& chain : w_chains) {
        for (const auto& col : chain.columns) out.W_basis.push_back(col);
        a1_blocks.push_back(real_jordan_block(chain.exponent.real(), chain.rank()));
    }
    for (const auto& chain : wp_chains) {
        for (const auto& col : chain.columns) out.Wp_basis.push_back(col);
        a2_blocks.push_back(real_jordan_block(chain.exponent.real(), chain.rank()));
    }
    for (const auto& ch : chosen) {
        for (const auto& col : ch.basis.columns) {
            out.Wp_basis.push_back(real_part(col));
            out.Wp_basis.push_back(imag_part(col));
        }
        a2_blocks.push_back(
            conjugate_pair_block(ch.basis.exponent.real(), ch.basis.exponent.imag(), ch.basis.rank()));
    }

    auto blockdiag = [](const std::vector<RealMat>& blocks) {
        int size = 0;
        for (const auto& b : blocks) size += static_cast<int>(b.rows());
        RealMat out = RealMat::Zero(size, size);
        int at = 0;
        for (const auto& b : blocks) {
            out.block(at, at, b.rows(), b.cols()) = b;
            at += static_cast<int>(b.rows());
        }
        return out;
    };
    out.A1 = blockdiag(a1_blocks);
    out.A2 = blockdiag(a2_blocks);

    if (static_cast<int>(out.W_basis.size() + out.Wp_basis.size()) != n)
        throw VerificationError("decompose_real: dimension bookkeeping failure (" +
                                std::to_string(out.W_basis.size()) + " + " +
                                std::to_string(out.Wp_basis.size()) + " != " + std::to_string(n) + ")");
    return out;
}

// [W | W'] as a single real frame with blockdiag(A1, A2); modulus 2 exactly
// when W is nonempty.
inline Certificate assemble_real_certificate(const RealDecomposition& d, const Certificate& input,
                                             const FrequencyVector& omega,
                                             const DecomposeOptions& opts = {},
                                             ResidualReport* report = nullptr) {
    const bool doubled = !d.W_basis.empty();
    const int modulus = doubled ? 2 * input.modulus : input.modulus;
    std::vector<TorusMap> cols;
    for (const auto& c : d.W_basis) cols.push_back(c);
    for (const auto& c : d.Wp_basis) cols.push_back(doubled ? lift_period(c, 2) : c);

    Certificate cert;
    cert.frame = hstack(cols);
    const int n = cert.frame.rows();
    RealMat B = RealMat::Zero(n, n);
    B.topLeftCorner(d.A1.rows(), d.A1.cols()) = d.A1;
    B.bottomRightCorner(d.A2.rows(), d.A2.cols()) = d.A2;
    cert.B = B.cast<Cplx>();
    cert.modulus = modulus;
    cert.group_tag = GroupTag::GL_R;
    cert.discrete = input.discrete;

    CocycleEvaluator cocycle = CocycleEvaluator::conjugated(input, omega);
    EvaluationGrid grid{opts.grid_points, modulus, omega.dim()};
    ResidualReport rep = residual_conjugation(cocycle, cert, grid, opts.times);
    cert.residual = rep.max_residual;
    if (report) *report = rep;
    return cert;
}

}  // namespace qpr
