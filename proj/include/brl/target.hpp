#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "brl/descriptor.hpp"
#include "brl/error.hpp"

namespace brl {

/// Largest supported ambient dimension; keeps per-node algebra off the heap.
inline constexpr int kMaxAmbient = 8;

using AmbVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
using AmbMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;

enum class TargetKind { Euclidean, Sphere, FlatTorusEmb, Ellipsoid, ProductSpheres };

/// Target manifold as a level set {x : c_a(x) = 0} in flat ℝᵐ.
///
/// Every catalog constraint has the form c_a(x) = Σᵢ w_aᵢ xᵢ² − 1, so
/// gradients and Hessians are closed form and the second fundamental form
/// follows from the derivative of the tangent projector.
class TargetModel {
public:
    static TargetModel euclidean(int m) {
        if (m < 2 || m > kMaxAmbient) throw UsageError("euclid:m must lie in [2, 8]");
        TargetModel t(TargetKind::Euclidean, m, m);
        return t;
    }

    static TargetModel sphere(int k, double r) {
        if (k < 2 || k + 1 > kMaxAmbient) throw UsageError("sphere:k must lie in [2, 7]");
        if (!(r > 0)) throw UsageError("sphere radius must be positive");
        TargetModel t(TargetKind::Sphere, k + 1, k);
        t.radii_ = {r};
        t.add_constraint(AmbVec::Constant(k + 1, 1.0 / (r * r)));
        return t;
    }

    static TargetModel flat_torus(std::vector<double> radii) {
        const int k = static_cast<int>(radii.size());
        if (k < 2 || 2 * k > kMaxAmbient) throw UsageError("flat torus needs 2 to 4 circle radii");
        TargetModel t(TargetKind::FlatTorusEmb, 2 * k, k);
        for (int i = 0; i < k; ++i) {
            if (!(radii[i] > 0)) throw UsageError("circle radii must be positive");
            AmbVec w = AmbVec::Zero(2 * k);
            w[2 * i] = w[2 * i + 1] = 1.0 / (radii[i] * radii[i]);
            t.add_constraint(w);
        }
        t.radii_ = std::move(radii);
        return t;
    }

    static TargetModel ellipsoid(double a, double b, double c) {
        if (!(a > 0) || !(b > 0) || !(c > 0)) throw UsageError("ellipsoid semi-axes must be positive");
        TargetModel t(TargetKind::Ellipsoid, 3, 2);
        t.radii_ = {a, b, c};
        AmbVec w(3);
        w << 1 / (a * a), 1 / (b * b), 1 / (c * c);
        t.add_constraint(w);
        return t;
    }

    static TargetModel product_spheres(double r1, double r2) {
        if (!(r1 > 0) || !(r2 > 0)) throw UsageError("sphere radii must be positive");
        TargetModel t(TargetKind::ProductSpheres, 6, 4);
        t.radii_ = {r1, r2};
        AmbVec w1 = AmbVec::Zero(6), w2 = AmbVec::Zero(6);
        w1.head(3).setConstant(1 / (r1 * r1));
        w2.tail(3).setConstant(1 / (r2 * r2));
        t.add_constraint(w1);
        t.add_constraint(w2);
        return t;
    }

    static TargetModel from_descriptor(const Descriptor& d) {
        if (d.kind == "euclid") {
            d.expect_only({"m"});
            return euclidean(d.integer("m", 3));
        }
        if (d.kind == "sphere") {
            d.expect_only({"r", "k"});
            return sphere(d.integer("k", 2), d.number("r", 1.0));
        }
        if (d.kind == "torus") {
            if (d.has("a") || d.has("b")) {
                d.expect_only({"a", "b"});
                return flat_torus({d.number("a", 1.0), d.number("b", 1.0)});
            }
            std::vector<double> radii;
            for (int i = 1; d.has("r" + std::to_string(i)); ++i) radii.push_back(d.number("r" + std::to_string(i)));
            if (radii.size() != d.params.size()) throw UsageError("torus target takes a,b or r1..rk");
            return flat_torus(radii.empty() ? std::vector<double>{1.0, 1.0} : radii);
        }
        if (d.kind == "ellipsoid") {
            d.expect_only({"a", "b", "c"});
            return ellipsoid(d.number("a", 1.0), d.number("b", 1.0), d.number("c", 1.0));
        }
        if (d.kind == "prodspheres") {
            d.expect_only({"r1", "r2"});
            return product_spheres(d.number("r1", 1.0), d.number("r2", 1.0));
        }
        throw UsageError("unknown target kind '" + d.kind + "'");
    }

    static TargetModel from_descriptor(const std::string& text) { return from_descriptor(parse_descriptor(text)); }

    TargetKind kind() const { return kind_; }
    int ambient_dim() const { return m_; }
    int dim() const { return k_; }
    int codim() const { return static_cast<int>(weights_.size()); }
    const std::vector<double>& radii() const { return radii_; }

    std::string descriptor() const {
        switch (kind_) {
        case TargetKind::Euclidean: return "euclid:m=" + std::to_string(m_);
        case TargetKind::Sphere:
            return "sphere:r=" + format_shortest(radii_[0]) + (k_ != 2 ? ",k=" + std::to_string(k_) : "");
        case TargetKind::FlatTorusEmb: {
            std::string s = "torus:";
            for (std::size_t i = 0; i < radii_.size(); ++i)
                s += (i ? ",r" : "r") + std::to_string(i + 1) + "=" + format_shortest(radii_[i]);
            return s;
        }
        case TargetKind::Ellipsoid:
            return "ellipsoid:a=" + format_shortest(radii_[0]) + ",b=" + format_shortest(radii_[1]) +
                   ",c=" + format_shortest(radii_[2]);
        case TargetKind::ProductSpheres:
            return "prodspheres:r1=" + format_shortest(radii_[0]) + ",r2=" + format_shortest(radii_[1]);
        }
        return {};
    }

    /// Constant sectional curvature when the kind has one (sphere, flat kinds).
    bool constant_curvature(double* value = nullptr) const {
        double v = 0.0;
        switch (kind_) {
        case TargetKind::Sphere: v = 1.0 / (radii_[0] * radii_[0]); break;
        case TargetKind::Euclidean:
        case TargetKind::FlatTorusEmb: v = 0.0; break;
        default: return false;
        }
        if (value) *value = v;
        return true;
    }

    /// Largest |c_a(x)| over the constraints.
    double constraint_residual(const AmbVec& x) const {
        double worst = 0.0;
        for (const AmbVec& w : weights_) worst = std::max(worst, std::abs(w.dot(x.cwiseAbs2()) - 1.0));
        return worst;
    }

    bool on_target(const AmbVec& x, double tol = 1e-8) const {
        return x.size() == m_ && x.allFinite() && constraint_residual(x) <= tol;
    }

    void require_on_target(const AmbVec& x) const {
        if (x.size() != m_) throw DomainError("point has wrong ambient dimension for " + descriptor());
        if (!on_target(x)) throw DomainError("point is not on " + descriptor());
    }

    /// m × codim matrix of constraint gradients.
    AmbMat constraint_gradients(const AmbVec& x) const {
        AmbMat g(m_, codim());
        for (int a = 0; a < codim(); ++a) g.col(a) = 2.0 * weights_[a].cwiseProduct(x);
        return g;
    }

    /// Orthogonal projector onto the tangent space, extended off the target
    /// through the constraint gradients.
    AmbMat projector(const AmbVec& x) const {
        AmbMat p = AmbMat::Identity(m_, m_);
        if (codim() == 0) return p;
        const AmbMat g = constraint_gradients(x);
        const AmbMat gram = g.transpose() * g;
        p.noalias() -= g * gram.ldlt().solve(g.transpose());
        return p;
    }

    /// Directional derivative D_X P of the projector field at x.
    AmbMat projector_derivative(const AmbVec& x, const AmbVec& dir) const {
        if (codim() == 0) return AmbMat::Zero(m_, m_);
        const AmbMat g = constraint_gradients(x);
        AmbMat dg(m_, codim());
        for (int a = 0; a < codim(); ++a) dg.col(a) = 2.0 * weights_[a].cwiseProduct(dir);
        const AmbMat gram_inv = (g.transpose() * g).inverse();
        const AmbMat dgram = dg.transpose() * g + g.transpose() * dg;
        return -(dg * gram_inv * g.transpose() + g * gram_inv * dg.transpose() -
                 g * gram_inv * dgram * gram_inv * g.transpose());
    }

    /// Second fundamental form A(X, Y) = (D_X P)·Y for X, Y tangent at q.
    AmbVec second_fundamental_form(const AmbVec& q, const AmbVec& x, const AmbVec& y) const {
        return projector_derivative(q, x) * y;
    }

    /// ⟨R(X,Y)Z, W⟩ from the Gauss equation in flat ambient space.
    double riemann(const AmbVec& q, const AmbVec& x, const AmbVec& y, const AmbVec& z, const AmbVec& w) const {
        return second_fundamental_form(q, y, z).dot(second_fundamental_form(q, x, w)) -
               second_fundamental_form(q, x, z).dot(second_fundamental_form(q, y, w));
    }

    /// Orthonormal tangent basis (m × k) at q.
    AmbMat tangent_basis(const AmbVec& q) const {
        Eigen::SelfAdjointEigenSolver<AmbMat> eig(projector(q));
        return eig.eigenvectors().rightCols(k_);
    }

    /// Closest-point map Π onto the target.
    AmbVec closest_point(const AmbVec& x) const {
        if (x.size() != m_ || !x.allFinite()) throw DomainError("cannot project a malformed point onto " + descriptor());
        switch (kind_) {
        case TargetKind::Euclidean: return x;
        case TargetKind::Sphere: return scaled_block(x, 0, m_, radii_[0]);
        case TargetKind::FlatTorusEmb: {
            AmbVec y = x;
            for (std::size_t i = 0; i < radii_.size(); ++i) y.segment(2 * i, 2) = scaled_block(x, 2 * i, 2, radii_[i]);
            return y;
        }
        case TargetKind::ProductSpheres: {
            AmbVec y(6);
            y.head(3) = scaled_block(x, 0, 3, radii_[0]);
            y.tail(3) = scaled_block(x, 3, 3, radii_[1]);
            return y;
        }
        case TargetKind::Ellipsoid: return ellipsoid_closest_point(x);
        }
        return x;
    }

    /// Natural base point (north pole, first circle point, origin).
    AmbVec base_point() const {
        AmbVec q = AmbVec::Zero(m_);
        switch (kind_) {
        case TargetKind::Euclidean: break;
        case TargetKind::Sphere: q[m_ - 1] = radii_[0]; break;
        case TargetKind::FlatTorusEmb:
            for (std::size_t i = 0; i < radii_.size(); ++i) q[2 * i] = radii_[i];
            break;
        case TargetKind::Ellipsoid: q[2] = radii_[2]; break;
        case TargetKind::ProductSpheres:
            q[2] = radii_[0];
            q[5] = radii_[1];
            break;
        }
        return q;
    }

    /// Deterministic quasi-uniform sample of the target; the seed only shifts
    /// the lattice phase. Spherical factors use a Fibonacci lattice (which
    /// always includes near-polar points); Euclidean space is sampled in
    /// the cube [−1, 1]ᵐ.
    std::vector<AmbVec> sample_points(int count, std::uint64_t seed) const {
        if (count < 1) throw UsageError("sample size must be positive");
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<AmbVec> out;
        out.reserve(count);
        switch (kind_) {
        case TargetKind::Sphere:
        case TargetKind::Ellipsoid: {
            const double phase = unit(rng);
            if (kind_ == TargetKind::Sphere && k_ != 2) {
                std::normal_distribution<double> normal;
                for (int i = 0; i < count; ++i) {
                    AmbVec v(m_);
                    for (int c = 0; c < m_; ++c) v[c] = normal(rng);
                    out.push_back(closest_point(v));
                }
                break;
            }
            for (int i = 0; i < count; ++i) {
                AmbVec u = fibonacci_point(i, count, phase);
                if (kind_ == TargetKind::Sphere) out.push_back(radii_[0] * u);
                else out.push_back(u.cwiseProduct(Eigen::Vector3d(radii_[0], radii_[1], radii_[2])));
            }
            break;
        }
        case TargetKind::ProductSpheres: {
            const std::vector<double> shift = {unit(rng), unit(rng), unit(rng), unit(rng)};
            for (int i = 0; i < count; ++i) {
                const auto t = kronecker(i, 4, shift);
                AmbVec q(6);
                q.head(3) = radii_[0] * equal_area_point(t[0], t[1]);
                q.tail(3) = radii_[1] * equal_area_point(t[2], t[3]);
                out.push_back(q);
            }
            break;
        }
        case TargetKind::FlatTorusEmb: {
            std::vector<double> shift(k_);
            for (double& s : shift) s = unit(rng);
            for (int i = 0; i < count; ++i) {
                const auto t = kronecker(i, k_, shift);
                AmbVec q(m_);
                for (int c = 0; c < k_; ++c) {
                    q[2 * c] = radii_[c] * std::cos(2 * std::numbers::pi * t[c]);
                    q[2 * c + 1] = radii_[c] * std::sin(2 * std::numbers::pi * t[c]);
                }
                out.push_back(q);
            }
            break;
        }
        case TargetKind::Euclidean: {
            std::vector<double> shift(m_);
            for (double& s : shift) s = unit(rng);
            for (int i = 0; i < count; ++i) {
                const auto t = kronecker(i, m_, shift);
                AmbVec q(m_);
                for (int c = 0; c < m_; ++c) q[c] = 2 * t[c] - 1;
                out.push_back(q);
            }
            break;
        }
        }
        return out;
    }

private:
    TargetModel(TargetKind kind, int m, int k) : kind_(kind), m_(m), k_(k) {}

    void add_constraint(AmbVec w) { weights_.push_back(std::move(w)); }

    static AmbVec scaled_block(const AmbVec& x, int start, int len, double radius) {
        const double norm = x.segment(start, len).norm();
        if (!(norm > 0)) throw DomainError("closest point undefined at the centre of a spherical factor");
        return x.segment(start, len) * (radius / norm);
    }

    /// Lagrange stationarity yᵢ = xᵢaᵢ²/(aᵢ² + μ) reduces the projection to
    /// the scalar root F(μ) = Σ xᵢ²aᵢ²/(aᵢ² + μ)² − 1 = 0, solved by damped
    /// Newton.
    AmbVec ellipsoid_closest_point(const AmbVec& x) const {
        const Eigen::Vector3d a2(radii_[0] * radii_[0], radii_[1] * radii_[1], radii_[2] * radii_[2]);
        if (!(x.norm() > 0)) throw DomainError("closest point on the ellipsoid is undefined at the centre");
        auto point = [&](double mu) {
            AmbVec y(3);
            for (int i = 0; i < 3; ++i) y[i] = x[i] * a2[i] / (a2[i] + mu);
            return y;
        };
        const double floor_mu = -a2.minCoeff();
        double mu = 0.0;
        for (int iter = 0; iter < 50; ++iter) {
            double f = -1.0, df = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double d = a2[i] + mu;
                f += x[i] * x[i] * a2[i] / (d * d);
                df += -2.0 * x[i] * x[i] * a2[i] / (d * d * d);
            }
            const AmbVec y = point(mu);
            if (constraint_residual(y) < 1e-13) return y;
            if (df == 0.0) break;
            double step = -f / df;
            while (mu + step <= floor_mu) step *= 0.5;
            mu += step;
        }
        const AmbVec y = point(mu);
        if (constraint_residual(y) > 1e-12)
            throw NumericalError("ellipsoid closest-point iteration did not reach residual 1e-12");
        return y;
    }

    static Eigen::Vector3d fibonacci_point(int i, int count, double phase) {
        const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = 2 * std::numbers::pi * (i / golden + phase);
        return {rho * std::cos(phi), rho * std::sin(phi), z};
    }

    static Eigen::Vector3d equal_area_point(double s, double t) {
        const double z = 1.0 - 2.0 * s;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = 2 * std::numbers::pi * t;
        return {rho * std::cos(phi), rho * std::sin(phi), z};
    }

    /// Additive recurrence with the generalized golden ratio (root of
    /// x^(d+1) = x + 1), shifted and wrapped to [0, 1)^d.
    static std::vector<double> kronecker(int i, int d, const std::vector<double>& shift) {
        double g = 2.0;
        for (int it = 0; it < 64; ++it) g = std::pow(1.0 + g, 1.0 / (d + 1));
        std::vector<double> t(d);
        double inv = 1.0;
        for (int c = 0; c < d; ++c) {
            inv /= g;
            t[c] = std::fmod(shift[c] + (i + 1) * inv, 1.0);
        }
        return t;
    }

    TargetKind kind_;
    int m_;
    int k_;
    std::vector<double> radii_;
    std::vector<AmbVec> weights_;
};

/// One sampled 2-plane with its sectional curvature.
struct CurvatureSample {
    AmbVec base;
    AmbVec x;
    AmbVec y;
    double value = 0.0;
};

/// Sec(σ) = ⟨R(X,Y)Y,X⟩ / (|X|²|Y|² − ⟨X,Y⟩²) through the Gauss equation,
/// after projecting X and Y onto T_q.
inline double sectional_curvature_gauss(const TargetModel& target, const AmbVec& q, const AmbVec& x, const AmbVec& y) {
    target.require_on_target(q);
    const AmbMat p = target.projector(q);
    const AmbVec xt = p * x;
    const AmbVec yt = p * y;
    const double denom = xt.squaredNorm() * yt.squaredNorm() - std::pow(xt.dot(yt), 2);
    if (!(denom >= 1e-14)) throw DegeneratePlaneError("vectors do not span a 2-plane in the tangent space");
    return target.riemann(q, xt, yt, yt, xt) / denom;
}

/// Sectional curvature, with closed forms for constant-curvature kinds.
inline double sectional_curvature(const TargetModel& target, const AmbVec& q, const AmbVec& x, const AmbVec& y) {
    double constant = 0.0;
    if (!target.constant_curvature(&constant)) return sectional_curvature_gauss(target, q, x, y);
    target.require_on_target(q);
    const AmbMat p = target.projector(q);
    const AmbVec xt = p * x;
    const AmbVec yt = p * y;
    const double denom = xt.squaredNorm() * yt.squaredNorm() - std::pow(xt.dot(yt), 2);
    if (!(denom >= 1e-14)) throw DegeneratePlaneError("vectors do not span a 2-plane in the tangent space");
    return constant;
}

} // namespace brl
