#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "brl/descriptor.hpp"
#include "brl/error.hpp"

namespace brl {

/// Chart dimension of every grid domain.
inline constexpr int kDim = 2;

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Γᵏᵢⱼ stored as one symmetric matrix per upper index k.
struct Christoffel {
    std::array<Mat2, kDim> upper{Mat2::Zero(), Mat2::Zero()};

    double operator()(int k, int i, int j) const { return upper[k](i, j); }
    double& operator()(int k, int i, int j) { return upper[k](i, j); }
};

enum class DomainKind { FlatTorus2, RoundSphere2 };

/// Compact domain manifold sampled on a logically rectangular chart grid.
///
/// FlatTorus2(a, b): chart (u, v) in [0, 2π)², metric diag(a², b²), periodic
/// in both directions.
///
/// RoundSphere2(r): chart (θ, φ), θ staggered at (i + ½)π/N₁ so no node sits
/// on a pole, φ = 2πj/N₂ periodic. N₂ must be even: stencils that step past a
/// pole continue on the opposite meridian, (−θ, φ) ≡ (θ, φ + π).
class DomainModel {
public:
    static DomainModel flat_torus(double a, double b, int n1, int n2) {
        if (!(a > 0) || !(b > 0)) throw UsageError("torus periods must be positive");
        DomainModel d(DomainKind::FlatTorus2, n1, n2);
        d.a_ = a;
        d.b_ = b;
        return d;
    }

    static DomainModel round_sphere(double r, int n_lat, int n_lon) {
        if (!(r > 0)) throw UsageError("sphere radius must be positive");
        if (n_lon % 2 != 0) throw UsageError("sphere grids need an even number of longitude nodes");
        DomainModel d(DomainKind::RoundSphere2, n_lat, n_lon);
        d.r_ = r;
        return d;
    }

    /// `torus:a=..,b=..` gives resolution × resolution nodes; `sphere:r=..`
    /// gives resolution latitude × 2·resolution longitude nodes.
    static DomainModel from_descriptor(const Descriptor& d, int resolution) {
        if (d.kind == "torus") {
            d.expect_only({"a", "b"});
            return flat_torus(d.number("a", 1.0), d.number("b", 1.0), resolution, resolution);
        }
        if (d.kind == "sphere") {
            d.expect_only({"r"});
            return round_sphere(d.number("r", 1.0), resolution, 2 * resolution);
        }
        throw UsageError("unknown domain kind '" + d.kind + "' (expected torus or sphere)");
    }

    static DomainModel from_descriptor(const std::string& text, int resolution) {
        return from_descriptor(parse_descriptor(text), resolution);
    }

    /// Same manifold at a different resolution (latitude count for spheres).
    DomainModel refined(int resolution) const {
        return is_sphere() ? round_sphere(r_, resolution, 2 * resolution)
                           : flat_torus(a_, b_, resolution, resolution);
    }

    DomainKind kind() const { return kind_; }
    bool is_sphere() const { return kind_ == DomainKind::RoundSphere2; }
    int dim() const { return kDim; }
    int n1() const { return n1_; }
    int n2() const { return n2_; }
    std::size_t node_count() const { return static_cast<std::size_t>(n1_) * n2_; }
    double radius() const { return r_; }
    double period_a() const { return a_; }
    double period_b() const { return b_; }

    std::string descriptor() const {
        if (is_sphere()) return "sphere:r=" + format_shortest(r_);
        return "torus:a=" + format_shortest(a_) + ",b=" + format_shortest(b_);
    }

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n2_ + j; }
    int row(std::size_t node) const { return static_cast<int>(node / n2_); }
    int col(std::size_t node) const { return static_cast<int>(node % n2_); }

    /// Chart spacing along axis 0 or 1.
    double spacing(int axis) const {
        if (is_sphere()) return axis == 0 ? std::numbers::pi / n1_ : 2 * std::numbers::pi / n2_;
        return 2 * std::numbers::pi / (axis == 0 ? n1_ : n2_);
    }

    Vec2 coord(int i, int j) const {
        if (is_sphere()) return {(i + 0.5) * spacing(0), j * spacing(1)};
        return {i * spacing(0), j * spacing(1)};
    }
    Vec2 coord(std::size_t node) const { return coord(row(node), col(node)); }

    /// Resolution scale used by the h² error models: largest physical chart
    /// step (sphere steps measured at the equator).
    double h() const {
        if (is_sphere()) return r_ * std::max(spacing(0), spacing(1));
        return std::max(a_ * spacing(0), b_ * spacing(1));
    }

    /// Smallest physical distance between neighbouring nodes.
    double min_spacing() const {
        if (is_sphere()) return r_ * std::min(spacing(0), std::sin(0.5 * spacing(0)) * spacing(1));
        return std::min(a_ * spacing(0), b_ * spacing(1));
    }

    bool contains(const Vec2& p) const {
        const double two_pi = 2 * std::numbers::pi;
        if (!std::isfinite(p[0]) || !std::isfinite(p[1])) return false;
        if (is_sphere()) return p[0] > 0 && p[0] < std::numbers::pi && p[1] >= 0 && p[1] < two_pi;
        return p[0] >= 0 && p[0] < two_pi && p[1] >= 0 && p[1] < two_pi;
    }

    void require_in_chart(const Vec2& p) const {
        if (!contains(p))
            throw DomainError("chart point (" + format_number(p[0]) + ", " + format_number(p[1]) +
                              ") is outside the chart of " + descriptor());
    }

    /// Metric formula without the range check (finite-difference stencils
    /// step slightly outside the chart).
    Mat2 metric_formula(const Vec2& p) const {
        if (is_sphere()) {
            const double s = std::sin(p[0]);
            return Eigen::Vector2d(r_ * r_, r_ * r_ * s * s).asDiagonal();
        }
        return Eigen::Vector2d(a_ * a_, b_ * b_).asDiagonal();
    }

    double sqrt_det_formula(const Vec2& p) const {
        if (is_sphere()) return r_ * r_ * std::sin(p[0]);
        return a_ * b_;
    }

    /// Quadrature weight √det g·Δu·Δv (midpoint in θ, trapezoidal in periodic
    /// directions).
    double weight(std::size_t node) const { return sqrt_det_formula(coord(node)) * spacing(0) * spacing(1); }

    double volume() const {
        if (is_sphere()) return 4 * std::numbers::pi * r_ * r_;
        return 4 * std::numbers::pi * std::numbers::pi * a_ * b_;
    }

    /// Polar caps whose nodes are excluded from sup-norm checks.
    double pole_exclusion() const { return pole_exclusion_; }
    void set_pole_exclusion(double angle) { pole_exclusion_ = angle; }

    bool flagged(std::size_t node) const {
        if (!is_sphere()) return false;
        const double theta = coord(node)[0];
        return theta < pole_exclusion_ || theta > std::numbers::pi - pole_exclusion_;
    }

    /// Node reached from (i, j) by (di, dj) grid steps, |di|, |dj| ≤ 1.
    std::size_t neighbor(int i, int j, int di, int dj) const {
        int ii = i + di;
        int jj = j + dj;
        if (is_sphere()) {
            if (ii < 0) {
                ii = -ii - 1;
                jj += n2_ / 2;
            } else if (ii >= n1_) {
                ii = 2 * n1_ - ii - 1;
                jj += n2_ / 2;
            }
        } else {
            ii = (ii % n1_ + n1_) % n1_;
        }
        jj = (jj % n2_ + n2_) % n2_;
        return index(ii, jj);
    }

private:
    DomainModel(DomainKind kind, int n1, int n2) : kind_(kind), n1_(n1), n2_(n2) {
        if (n1 < 3 || n2 < 3) throw UsageError("grid needs at least 3 nodes per axis");
    }

    DomainKind kind_;
    int n1_;
    int n2_;
    double a_ = 1.0;
    double b_ = 1.0;
    double r_ = 1.0;
    double pole_exclusion_ = std::numbers::pi / 8;
};

inline Mat2 metric_at(const DomainModel& domain, const Vec2& p) {
    domain.require_in_chart(p);
    return domain.metric_formula(p);
}

/// Γᵏᵢⱼ = ½ gᵏˡ(∂ᵢg_jl + ∂ⱼg_il − ∂_l g_ij) by central differences of the
/// metric with per-axis steps.
inline Christoffel christoffel_fd(const DomainModel& domain, const Vec2& p, const Vec2& step) {
    std::array<Mat2, kDim> dg; // dg[l] = ∂_l g
    for (int l = 0; l < kDim; ++l) {
        Vec2 e = Vec2::Zero();
        e[l] = step[l];
        dg[l] = (domain.metric_formula(p + e) - domain.metric_formula(p - e)) / (2 * step[l]);
    }
    const Mat2 ginv = domain.metric_formula(p).inverse();
    Christoffel gamma;
    for (int k = 0; k < kDim; ++k)
        for (int i = 0; i < kDim; ++i)
            for (int j = 0; j < kDim; ++j) {
                double sum = 0.0;
                for (int l = 0; l < kDim; ++l)
                    sum += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
                gamma(k, i, j) = 0.5 * sum;
            }
    return gamma;
}

inline Vec2 default_step(const DomainModel& domain) { return {domain.spacing(0), domain.spacing(1)}; }

inline Christoffel christoffel_formula(const DomainModel& domain, const Vec2& p) {
    Christoffel gamma;
    if (domain.is_sphere()) {
        const double s = std::sin(p[0]);
        const double c = std::cos(p[0]);
        gamma(0, 1, 1) = -s * c;
        gamma(1, 0, 1) = gamma(1, 1, 0) = c / s;
    }
    return gamma;
}

/// Closed-form Christoffel symbols of the built-in domains.
inline Christoffel christoffel_at(const DomainModel& domain, const Vec2& p) {
    domain.require_in_chart(p);
    return christoffel_formula(domain, p);
}

/// Ricci tensor from the Riemann contraction of finite-difference
/// Christoffel symbols:
///   Rᵖ_σμν = ∂_μΓᵖ_νσ − ∂_νΓᵖ_μσ + Γᵖ_μλΓˡ_νσ − Γᵖ_νλΓˡ_μσ,  Ric_σν = Rᵖ_σρν.
inline Mat2 ricci_fd(const DomainModel& domain, const Vec2& p, const Vec2& step) {
    domain.require_in_chart(p);
    std::array<Christoffel, kDim> dgamma; // dgamma[mu] = ∂_mu Γ
    for (int mu = 0; mu < kDim; ++mu) {
        Vec2 e = Vec2::Zero();
        e[mu] = step[mu];
        const Christoffel plus = christoffel_fd(domain, p + e, step);
        const Christoffel minus = christoffel_fd(domain, p - e, step);
        for (int k = 0; k < kDim; ++k)
            dgamma[mu].upper[k] = (plus.upper[k] - minus.upper[k]) / (2 * step[mu]);
    }
    const Christoffel g = christoffel_fd(domain, p, step);
    auto riemann = [&](int rho, int sigma, int mu, int nu) {
        double v = dgamma[mu](rho, nu, sigma) - dgamma[nu](rho, mu, sigma);
        for (int lam = 0; lam < kDim; ++lam)
            v += g(rho, mu, lam) * g(lam, nu, sigma) - g(rho, nu, lam) * g(lam, mu, sigma);
        return v;
    };
    Mat2 ric = Mat2::Zero();
    for (int sigma = 0; sigma < kDim; ++sigma)
        for (int nu = 0; nu < kDim; ++nu)
            for (int rho = 0; rho < kDim; ++rho) ric(sigma, nu) += riemann(rho, sigma, rho, nu);
    return 0.5 * (ric + ric.transpose());
}

inline Mat2 ricci_formula(const DomainModel& domain, const Vec2& p) {
    if (!domain.is_sphere()) return Mat2::Zero();
    // Ric = (n − 1)/r² · g with n = 2.
    return domain.metric_formula(p) / (domain.radius() * domain.radius());
}

/// Closed-form Ricci tensor of the built-in domains.
inline Mat2 ricci_at(const DomainModel& domain, const Vec2& p) {
    domain.require_in_chart(p);
    return ricci_formula(domain, p);
}

/// Least eigenvalue of g⁻¹·Ric (Ricci curvature of the worst unit vector).
inline double min_unit_ricci(const Mat2& ricci, const Mat2& metric) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat2> solver(ricci, metric);
    if (solver.info() != Eigen::Success) throw NumericalError("generalized eigenproblem failed for g⁻¹Ric");
    return solver.eigenvalues().minCoeff();
}

struct RicciMin {
    double value;
    std::size_t node;
};

inline RicciMin ricci_min(const DomainModel& domain, std::span<const std::size_t> nodes) {
    if (nodes.empty()) throw UsageError("ricci_min needs a nonempty node sample");
    RicciMin best{std::numeric_limits<double>::infinity(), nodes.front()};
    for (std::size_t node : nodes) {
        if (node >= domain.node_count()) throw UsageError("node index out of range");
        const Vec2 p = domain.coord(node);
        const double v = min_unit_ricci(ricci_formula(domain, p), domain.metric_formula(p));
        if (v < best.value) best = {v, node};
    }
    return best;
}

inline RicciMin ricci_min(const DomainModel& domain) {
    std::vector<std::size_t> all(domain.node_count());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    return ricci_min(domain, all);
}

} // namespace brl
