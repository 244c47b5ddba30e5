#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "brl/domain.hpp"
#include "brl/error.hpp"
#include "brl/parallel.hpp"
#include "brl/target.hpp"

namespace brl {

using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, kDim, 0, kMaxAmbient, kDim>;

/// Map f: M → M̄ sampled at the domain nodes. Column `node` of values() is
/// f(node) in ambient target coordinates.
class DiscreteMap {
public:
    DiscreteMap(DomainModel domain, TargetModel target, Eigen::MatrixXd values)
        : domain_(std::move(domain)), target_(std::move(target)), values_(std::move(values)) {
        if (values_.rows() != target_.ambient_dim() || static_cast<std::size_t>(values_.cols()) != domain_.node_count())
            throw UsageError("map values have the wrong shape for the domain grid and target");
        for (Eigen::Index c = 0; c < values_.cols(); ++c)
            if (!target_.on_target(values_.col(c), 1e-10))
                throw DomainError("map value at node " + std::to_string(c) + " is off the target");
    }

    /// Samples an ambient-valued function of the chart point.
    static DiscreteMap sample(const DomainModel& domain, const TargetModel& target,
                              const std::function<AmbVec(const Vec2&)>& fn) {
        Eigen::MatrixXd values(target.ambient_dim(), domain.node_count());
        for (std::size_t node = 0; node < domain.node_count(); ++node) values.col(node) = fn(domain.coord(node));
        return DiscreteMap(domain, target, std::move(values));
    }

    const DomainModel& domain() const { return domain_; }
    const TargetModel& target() const { return target_; }
    const Eigen::MatrixXd& values() const { return values_; }
    AmbVec value(std::size_t node) const { return values_.col(node); }

    /// Replaces the values, reprojecting every node with Π.
    void assign_projected(const Eigen::MatrixXd& raw) {
        if (raw.rows() != values_.rows() || raw.cols() != values_.cols())
            throw UsageError("update has the wrong shape");
        Eigen::MatrixXd next(raw.rows(), raw.cols());
        parallel_for(static_cast<std::size_t>(raw.cols()),
                     [&](std::size_t c) { next.col(c) = target_.closest_point(raw.col(c)); });
        values_ = std::move(next);
    }

private:
    DomainModel domain_;
    TargetModel target_;
    Eigen::MatrixXd values_;
};

namespace detail {

/// √g gⁱⁱ at a half node; zero at a pole so no flux crosses it.
inline double flux_coefficient(const DomainModel& domain, const Vec2& p, int axis) {
    if (domain.is_sphere() && (p[0] <= 1e-12 || p[0] >= std::numbers::pi - 1e-12)) return 0.0;
    return domain.sqrt_det_formula(p) / domain.metric_formula(p)(axis, axis);
}

/// Conservative Laplace–Beltrami (1/√g)∂ᵢ(√g gⁱⁱ ∂ᵢ u) on a diagonal metric;
/// `get(node)` returns the field value (scalar or ambient vector).
template <class Get>
auto conservative_laplacian(const DomainModel& domain, std::size_t node, Get&& get) {
    const int i = domain.row(node), j = domain.col(node);
    const Vec2 p = domain.coord(i, j);
    const auto centre = get(node);
    auto sum = (0.0 * centre).eval();
    for (int axis = 0; axis < kDim; ++axis) {
        const double step = domain.spacing(axis);
        Vec2 half = Vec2::Zero();
        half[axis] = 0.5 * step;
        const double c_plus = flux_coefficient(domain, p + half, axis);
        const double c_minus = flux_coefficient(domain, p - half, axis);
        const auto plus = get(domain.neighbor(i, j, axis == 0, axis == 1));
        const auto minus = get(domain.neighbor(i, j, -(axis == 0), -(axis == 1)));
        sum += (c_plus * (plus - centre) - c_minus * (centre - minus)) / (step * step);
    }
    return (sum / domain.sqrt_det_formula(p)).eval();
}

struct ScalarRef {
    double value;
    ScalarRef operator-(const ScalarRef& o) const { return {value - o.value}; }
    ScalarRef operator+(const ScalarRef& o) const { return {value + o.value}; }
    ScalarRef& operator+=(const ScalarRef& o) { value += o.value; return *this; }
    ScalarRef operator/(double s) const { return {value / s}; }
    ScalarRef eval() const { return *this; }
    friend ScalarRef operator*(double s, const ScalarRef& r) { return {s * r.value}; }
};

} // namespace detail

/// Central first and second differences of the ambient values at a node.
struct RawDifferences {
    std::array<AmbVec, kDim> first;
    std::array<std::array<AmbVec, kDim>, kDim> second;
};

inline RawDifferences raw_differences(const DiscreteMap& f, std::size_t node) {
    const DomainModel& d = f.domain();
    const int i = d.row(node), j = d.col(node);
    auto v = [&](int di, int dj) { return f.values().col(d.neighbor(i, j, di, dj)); };
    const double h0 = d.spacing(0), h1 = d.spacing(1);
    const AmbVec centre = f.values().col(node);
    RawDifferences r;
    r.first[0] = (v(1, 0) - v(-1, 0)) / (2 * h0);
    r.first[1] = (v(0, 1) - v(0, -1)) / (2 * h1);
    r.second[0][0] = (v(1, 0) - 2 * centre + v(-1, 0)) / (h0 * h0);
    r.second[1][1] = (v(0, 1) - 2 * centre + v(0, -1)) / (h1 * h1);
    r.second[0][1] = r.second[1][0] = (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / (4 * h0 * h1);
    return r;
}

/// df at a node: central differences along chart directions, each column
/// projected onto T_{f(p)}.
inline Jacobian differential(const DiscreteMap& f, std::size_t node) {
    if (node >= f.domain().node_count()) throw UsageError("node index out of range");
    const RawDifferences r = raw_differences(f, node);
    const AmbMat p = f.target().projector(f.values().col(node));
    Jacobian jac(f.target().ambient_dim(), kDim);
    for (int c = 0; c < kDim; ++c) jac.col(c) = p * r.first[c];
    return jac;
}

struct Spectrum {
    Mat2 pullback;   ///< f*ḡ = JᵀJ
    Vec2 lambda;     ///< eigenvalues of g⁻¹·f*ḡ, descending, clamped at 0
    Mat2 frame;      ///< g-orthonormal eigenvectors (columns, matching lambda)
    double S = 0.0;  ///< Σλ = |df|²
    double e = 0.0;  ///< S/2
};

inline Spectrum spectrum_from(const Jacobian& jac, const Mat2& metric) {
    Spectrum s;
    s.pullback = jac.transpose() * jac;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat2> eig(s.pullback, metric);
    if (eig.info() != Eigen::Success) throw NumericalError("generalized eigenproblem for the pullback failed");
    for (int c = 0; c < kDim; ++c) {
        double lam = eig.eigenvalues()[kDim - 1 - c];
        if (lam < 0) {
            if (lam < -1e-12 * std::max(1.0, s.pullback.trace())) throw NumericalError("pullback metric is not positive semidefinite");
            lam = 0.0;
        }
        s.lambda[c] = lam;
        s.frame.col(c) = eig.eigenvectors().col(kDim - 1 - c);
    }
    s.S = s.lambda.sum();
    s.e = 0.5 * s.S;
    return s;
}

inline Spectrum pullback_and_spectrum(const DiscreteMap& f, std::size_t node) {
    return spectrum_from(differential(f, node), f.domain().metric_formula(f.domain().coord(node)));
}

/// ∇df(∂ᵢ,∂ⱼ) as ambient vectors plus ‖∇df‖².
struct Hessian {
    std::array<std::array<AmbVec, kDim>, kDim> h;
    double norm2 = 0.0;
};

inline Hessian hessian(const DiscreteMap& f, std::size_t node) {
    const DomainModel& d = f.domain();
    const Vec2 p = d.coord(node);
    const RawDifferences r = raw_differences(f, node);
    const Christoffel gamma = christoffel_formula(d, p);
    const AmbMat proj = f.target().projector(f.values().col(node));
    Hessian out;
    for (int i = 0; i < kDim; ++i)
        for (int j = 0; j < kDim; ++j) {
            AmbVec v = r.second[i][j];
            for (int k = 0; k < kDim; ++k) v -= gamma(k, i, j) * r.first[k];
            out.h[i][j] = proj * v;
        }
    const Mat2 ginv = d.metric_formula(p).inverse();
    for (int i = 0; i < kDim; ++i)
        for (int j = 0; j < kDim; ++j)
            for (int k = 0; k < kDim; ++k)
                for (int l = 0; l < kDim; ++l)
                    out.norm2 += ginv(i, k) * ginv(j, l) * out.h[i][j].dot(out.h[k][l]);
    return out;
}

/// Discrete Laplace–Beltrami of a scalar grid field at a node.
inline double laplacian_scalar(const DomainModel& domain, std::span<const double> field, std::size_t node) {
    if (field.size() != domain.node_count()) throw UsageError("scalar field does not match the grid");
    return detail::conservative_laplacian(domain, node, [&](std::size_t n) { return detail::ScalarRef{field[n]}; }).value;
}

/// Δ_g applied componentwise to the ambient coordinates of f.
inline AmbVec laplacian_ambient(const DiscreteMap& f, std::size_t node) {
    return detail::conservative_laplacian(f.domain(), node,
                                          [&](std::size_t n) { return AmbVec(f.values().col(n)); });
}

/// τ(f) = P(f(p))·Δ_g f.
inline AmbVec tension_field(const DiscreteMap& f, std::size_t node) {
    return f.target().projector(f.values().col(node)) * laplacian_ambient(f, node);
}

/// Everything the Bochner and rigidity checks need at one node.
struct PointwiseMapData {
    Jacobian jacobian;
    Spectrum spectrum;
    AmbVec tension;
    Hessian hess;
};

inline PointwiseMapData pointwise_data(const DiscreteMap& f, std::size_t node) {
    PointwiseMapData out;
    out.jacobian = differential(f, node);
    out.spectrum = spectrum_from(out.jacobian, f.domain().metric_formula(f.domain().coord(node)));
    out.tension = tension_field(f, node);
    out.hess = hessian(f, node);
    return out;
}

/// Energy density e = |df|²/2 = ½·tr_g(f*ḡ) at every node.
inline std::vector<double> energy_density(const DiscreteMap& f) {
    std::vector<double> e(f.domain().node_count());
    parallel_for(e.size(), [&](std::size_t n) {
        const Jacobian jac = differential(f, n);
        const Mat2 g = f.domain().metric_formula(f.domain().coord(n));
        e[n] = 0.5 * (g.inverse() * (jac.transpose() * jac)).trace();
    });
    return e;
}

/// Weighted sum Σ field·√g·Δu·Δv.
inline double integrate(const DomainModel& domain, std::span<const double> field) {
    double sum = 0.0;
    for (std::size_t n = 0; n < field.size(); ++n) sum += field[n] * domain.weight(n);
    return sum;
}

/// E(f) = ½∫|df|² dvol by grid quadrature.
inline double total_energy(const DiscreteMap& f) {
    const std::vector<double> e = energy_density(f);
    return integrate(f.domain(), e);
}

/// sup over non-flagged nodes of |τ|.
inline double sup_tension(const DiscreteMap& f) {
    std::vector<double> t(f.domain().node_count(), 0.0);
    parallel_for(t.size(), [&](std::size_t n) {
        if (!f.domain().flagged(n)) t[n] = tension_field(f, n).norm();
    });
    double sup = 0.0;
    for (double v : t) sup = std::max(sup, v);
    return sup;
}

} // namespace brl
