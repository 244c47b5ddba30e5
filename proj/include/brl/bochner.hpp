#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "brl/domain.hpp"
#include "brl/error.hpp"
#include "brl/map.hpp"
#include "brl/parallel.hpp"
#include "brl/target.hpp"

namespace brl {

/// Ricⁱʲ(f*ḡ)ᵢⱼ, the frame-free form of Σ Ric(eᵢ,eᵢ)|df(eᵢ)|².
inline double ricci_contraction(const Mat2& ricci, const Mat2& metric, const Mat2& pullback) {
    const Mat2 ginv = metric.inverse();
    return (ginv * ricci * ginv * pullback).trace();
}

/// gⁱᵏgʲˡ⟨R̄(∂ᵢf,∂ⱼf)∂ₗf, ∂ₖf⟩ with R̄ from the Gauss equation.
inline double target_term_invariant(const TargetModel& target, const AmbVec& q, const Jacobian& jac, const Mat2& metric) {
    std::array<std::array<AmbVec, kDim>, kDim> a;
    for (int i = 0; i < kDim; ++i)
        for (int j = i; j < kDim; ++j)
            a[i][j] = a[j][i] = target.second_fundamental_form(q, jac.col(i), jac.col(j));
    const Mat2 ginv = metric.inverse();
    double sum = 0.0;
    for (int i = 0; i < kDim; ++i)
        for (int j = 0; j < kDim; ++j)
            for (int k = 0; k < kDim; ++k)
                for (int l = 0; l < kDim; ++l) {
                    const double w = ginv(i, k) * ginv(j, l);
                    if (w == 0.0) continue;
                    sum += w * (a[j][l].dot(a[i][k]) - a[i][l].dot(a[j][k]));
                }
    return sum;
}

/// 2·Σ_{i<j} Sec(uᵢ,uⱼ)·λᵢλⱼ in the frame diagonalizing the pullback;
/// pairs with λᵢλⱼ < 1e−14 carry no weight and are skipped.
inline double target_term_frame(const TargetModel& target, const AmbVec& q, const Jacobian& jac, const Spectrum& s) {
    double sum = 0.0;
    for (int i = 0; i < kDim; ++i)
        for (int j = i + 1; j < kDim; ++j) {
            const double weight = s.lambda[i] * s.lambda[j];
            if (weight < 1e-14) continue;
            const AmbVec ui = jac * s.frame.col(i);
            const AmbVec uj = jac * s.frame.col(j);
            sum += 2.0 * sectional_curvature(target, q, ui, uj) * weight;
        }
    return sum;
}

enum class TargetTermPath { Invariant, Frame };

inline double ricci_term(const DiscreteMap& f, std::size_t node) {
    const Vec2 p = f.domain().coord(node);
    const Jacobian jac = differential(f, node);
    return ricci_contraction(ricci_formula(f.domain(), p), f.domain().metric_formula(p), jac.transpose() * jac);
}

inline double target_term(const DiscreteMap& f, std::size_t node, TargetTermPath path = TargetTermPath::Invariant) {
    const Mat2 g = f.domain().metric_formula(f.domain().coord(node));
    const Jacobian jac = differential(f, node);
    const AmbVec q = f.value(node);
    if (path == TargetTermPath::Invariant) return target_term_invariant(f.target(), q, jac, g);
    return target_term_frame(f.target(), q, jac, spectrum_from(jac, g));
}

/// Q(f) = Ricci term − target curvature term.
inline double bochner_Q(const DiscreteMap& f, std::size_t node) { return ricci_term(f, node) - target_term(f, node); }

/// Per-node terms of ½Δ|df|² = ‖∇df‖² + Q.
struct BochnerNode {
    bool flagged = false;
    double e = 0.0;
    Vec2 lambda = Vec2::Zero();
    double ricci_term = 0.0;
    double target_term = 0.0;
    double target_term_frame = 0.0;
    double Q = 0.0;
    double hess = 0.0;
    double lap = 0.0;
    double residual = 0.0;
    double tension = 0.0;
};

struct BochnerField {
    std::vector<BochnerNode> nodes;
    double sup_residual = 0.0;       ///< over non-flagged nodes
    double sup_tension = 0.0;        ///< over non-flagged nodes
    double sup_path_gap = 0.0;       ///< |invariant − frame| target term, non-flagged nodes
    double integral_identity = 0.0;  ///< ∫(‖∇df‖² + Q)
    double integral_residual = 0.0;  ///< ∫ residual
    double energy = 0.0;
    double sup_S = 0.0;              ///< over all nodes
};

inline BochnerField bochner_analysis(const DiscreteMap& f) {
    const DomainModel& d = f.domain();
    BochnerField out;
    out.nodes.resize(d.node_count());
    std::vector<double> S(d.node_count());
    parallel_for(d.node_count(), [&](std::size_t n) {
        const Vec2 p = d.coord(n);
        const Mat2 g = d.metric_formula(p);
        const PointwiseMapData pd = pointwise_data(f, n);
        const AmbVec q = f.value(n);
        BochnerNode& b = out.nodes[n];
        b.flagged = d.flagged(n);
        b.e = pd.spectrum.e;
        b.lambda = pd.spectrum.lambda;
        b.ricci_term = ricci_contraction(ricci_formula(d, p), g, pd.spectrum.pullback);
        b.target_term = target_term_invariant(f.target(), q, pd.jacobian, g);
        b.target_term_frame = target_term_frame(f.target(), q, pd.jacobian, pd.spectrum);
        b.Q = b.ricci_term - b.target_term;
        b.hess = pd.hess.norm2;
        b.tension = pd.tension.norm();
        S[n] = pd.spectrum.S;
    });
    parallel_for(d.node_count(), [&](std::size_t n) {
        BochnerNode& b = out.nodes[n];
        b.lap = 0.5 * laplacian_scalar(d, S, n);
        b.residual = b.lap - b.hess - b.Q;
    });
    for (std::size_t n = 0; n < d.node_count(); ++n) {
        const BochnerNode& b = out.nodes[n];
        const double w = d.weight(n);
        out.integral_identity += (b.hess + b.Q) * w;
        out.integral_residual += b.residual * w;
        out.energy += b.e * w;
        out.sup_S = std::max(out.sup_S, S[n]);
        if (b.flagged) continue;
        out.sup_residual = std::max(out.sup_residual, std::abs(b.residual));
        out.sup_tension = std::max(out.sup_tension, b.tension);
        out.sup_path_gap = std::max(out.sup_path_gap, std::abs(b.target_term - b.target_term_frame));
    }
    return out;
}

/// Sup-norm of ½Δ|df|² − ‖∇df‖² − Q over non-flagged nodes.
inline double bochner_residual(const DiscreteMap& f) { return bochner_analysis(f).sup_residual; }

/// ∫(‖∇df‖² + Q) dvol.
inline double integral_identity_residual(const DiscreteMap& f) { return bochner_analysis(f).integral_identity; }

/// The algebra behind the target-curvature bound:
///   Σ_{i<j}λᵢλⱼ = (S² − Σλᵢ²)/2 ≤ (n−1)/(2n)·S².
struct LambdaChain {
    double lhs = 0.0;    ///< Σ_{i<j} λᵢλⱼ by direct summation
    double mid = 0.0;    ///< (S² − Σλᵢ²)/2
    double bound = 0.0;  ///< ((n−1)/(2n))·S²
    double spread = 0.0; ///< max λ − min λ
    bool equality = false;

    /// |lhs − mid| relative to the size of S².
    double identity_error() const { return std::abs(lhs - mid) / std::max(1.0, 2.0 * std::abs(bound) + std::abs(mid)); }
    bool identity_holds(double tol = 1e-12) const { return identity_error() <= tol; }
    bool bound_holds(double tol = 1e-12) const { return mid <= bound + tol * std::max(1.0, std::abs(bound)); }
};

inline LambdaChain lambda_chain_check(std::span<const double> lambda) {
    if (lambda.empty()) throw UsageError("lambda_chain_check needs at least one value");
    for (double v : lambda)
        if (!(v >= 0)) throw UsageError("singular values must be nonnegative");
    const double n = static_cast<double>(lambda.size());
    LambdaChain c;
    double s = 0.0, squares = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        s += lambda[i];
        squares += lambda[i] * lambda[i];
        for (std::size_t j = i + 1; j < lambda.size(); ++j) c.lhs += lambda[i] * lambda[j];
    }
    c.mid = 0.5 * (s * s - squares);
    c.bound = (n - 1.0) / (2.0 * n) * s * s;
    const auto [lo, hi] = std::minmax_element(lambda.begin(), lambda.end());
    c.spread = *hi - *lo;
    c.equality = c.spread <= 1e-12;
    return c;
}

/// Q ≥ |df|²(Ric_min − ((n−1)/n)·Sec_max·|df|²), evaluated in both the |df|²
/// form and the energy-density form 2e(Ric_min − (2(n−1)/n)·Sec_max·e).
struct PinchingCheck {
    double Q = 0.0;
    double bound = 0.0;          ///< |df|² form
    double bound_energy = 0.0;   ///< energy-density form
    double slack = 0.0;          ///< Q − bound

    bool forms_agree(double tol = 1e-14) const {
        return std::abs(bound - bound_energy) <= tol * std::max(1.0, std::abs(bound));
    }
};

inline PinchingCheck pointwise_pinching_check(double Q, double S, int n, double ric_min, double sec_max,
                                              bool enforce_hypothesis = true) {
    if (enforce_hypothesis && sec_max < 0)
        throw HypothesisViolation("pinching estimate assumes Sec_max ≥ 0 on the image");
    if (n < 1) throw UsageError("dimension must be positive");
    const double coeff = (n - 1.0) / n;
    const double e = 0.5 * S;
    PinchingCheck c;
    c.Q = Q;
    c.bound = S * (ric_min - coeff * sec_max * S);
    c.bound_energy = 2.0 * e * (ric_min - (2.0 * (n - 1.0) / n) * sec_max * e);
    c.slack = Q - c.bound;
    return c;
}

inline PinchingCheck pointwise_pinching_check(const DiscreteMap& f, std::size_t node, double ric_min, double sec_max) {
    const Spectrum s = pullback_and_spectrum(f, node);
    return pointwise_pinching_check(bochner_Q(f, node), s.S, f.domain().dim(), ric_min, sec_max);
}

} // namespace brl
