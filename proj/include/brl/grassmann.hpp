#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "brl/error.hpp"
#include "brl/parallel.hpp"
#include "brl/target.hpp"

namespace brl {

struct GrassmannOptions {
    int samples = 512;      ///< random planes per base point
    int ascent_steps = 50;  ///< alternating-eigenvector refinement sweeps
    int ascent_starts = 4;  ///< best samples refined per point
    std::uint64_t seed = 0;
};

/// Extremes of the sectional curvature over Gr₂(T_q) at a single point.
struct PlaneExtremes {
    CurvatureSample max;
    CurvatureSample min;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed derived from the point's bits, so a point gets the same planes no
/// matter which region it is sampled in.
inline std::uint64_t point_seed(const AmbVec& q, std::uint64_t seed) {
    std::uint64_t h = splitmix64(seed);
    for (int i = 0; i < q.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &q[i], sizeof bits);
        h = splitmix64(h ^ bits);
    }
    return h;
}

/// Sectional curvature on T_q in tangent-basis coordinates, from the
/// tabulated second fundamental form A(tₐ, t_b).
class TangentCurvature {
public:
    TangentCurvature(const TargetModel& target, const AmbVec& q)
        : k_(target.dim()), basis_(target.tangent_basis(q)), table_(k_ * k_) {
        for (int a = 0; a < k_; ++a)
            for (int b = a; b < k_; ++b)
                table_[a * k_ + b] = table_[b * k_ + a] =
                    target.second_fundamental_form(q, basis_.col(a), basis_.col(b));
    }

    int dim() const { return k_; }
    const AmbMat& basis() const { return basis_; }

    AmbVec form(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        AmbVec out = AmbVec::Zero(table_[0].size());
        for (int a = 0; a < k_; ++a)
            for (int b = 0; b < k_; ++b) out += (x[a] * y[b]) * table_[a * k_ + b];
        return out;
    }

    /// Sec for orthonormal coefficient vectors.
    double value(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        return form(x, x).dot(form(y, y)) - form(x, y).squaredNorm();
    }

    /// Quadratic form y ↦ Sec(x, y) for fixed unit x (on x^⊥).
    Eigen::MatrixXd jacobi(const Eigen::VectorXd& x) const {
        const AmbVec axx = form(x, x);
        std::vector<AmbVec> ax(k_);
        for (int c = 0; c < k_; ++c) ax[c] = form(x, Eigen::VectorXd::Unit(k_, c));
        Eigen::MatrixXd m(k_, k_);
        for (int c = 0; c < k_; ++c)
            for (int d = c; d < k_; ++d) m(c, d) = m(d, c) = axx.dot(table_[c * k_ + d]) - ax[c].dot(ax[d]);
        return m;
    }

private:
    int k_;
    AmbMat basis_;
    std::vector<AmbVec> table_;
};

/// One alternating sweep: optimize y on x^⊥, then x on y^⊥. `sign` = +1
/// ascends, −1 descends.
inline void alternate(const TangentCurvature& tc, Eigen::VectorXd& x, Eigen::VectorXd& y, double sign) {
    auto best_partner = [&](const Eigen::VectorXd& fixed) {
        const int k = tc.dim();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(fixed);
        const Eigen::MatrixXd complement = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
        const Eigen::MatrixXd basis = complement.rightCols(k - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(basis.transpose() * tc.jacobi(fixed) * basis);
        const Eigen::VectorXd v = sign > 0 ? eig.eigenvectors().col(k - 2) : eig.eigenvectors().col(0);
        Eigen::VectorXd partner = basis * v;
        return Eigen::VectorXd(partner.normalized());
    };
    y = best_partner(x);
    x = best_partner(y);
}

} // namespace detail

/// Max and min of the sectional curvature over all 2-planes at q: random
/// plane sampling followed by alternating eigenvector ascent. Closed forms
/// for constant-curvature kinds; exact for surfaces (a single plane).
inline PlaneExtremes plane_extremes(const TargetModel& target, const AmbVec& q, const GrassmannOptions& opt = {}) {
    target.require_on_target(q);
    if (target.dim() < 2) throw UsageError("target has no 2-planes");
    const AmbMat basis = target.tangent_basis(q);
    auto make = [&](const Eigen::VectorXd& cx, const Eigen::VectorXd& cy, double value) {
        return CurvatureSample{q, basis * cx, basis * cy, value};
    };
    const int k = target.dim();
    double constant = 0.0;
    if (target.constant_curvature(&constant)) {
        auto s = make(Eigen::VectorXd::Unit(k, 0), Eigen::VectorXd::Unit(k, 1), constant);
        return {s, s};
    }
    detail::TangentCurvature tc(target, q);
    if (k == 2) {
        const Eigen::VectorXd e0 = Eigen::VectorXd::Unit(2, 0), e1 = Eigen::VectorXd::Unit(2, 1);
        auto s = make(e0, e1, tc.value(e0, e1));
        return {s, s};
    }

    std::mt19937_64 rng(detail::point_seed(q, opt.seed));
    std::normal_distribution<double> normal;
    struct Plane {
        Eigen::VectorXd x, y;
        double value;
    };
    std::vector<Plane> planes;
    planes.reserve(std::max(1, opt.samples));
    for (int s = 0; s < std::max(1, opt.samples); ++s) {
        Eigen::VectorXd x(k), y(k);
        for (int c = 0; c < k; ++c) x[c] = normal(rng);
        for (int c = 0; c < k; ++c) y[c] = normal(rng);
        x.normalize();
        y -= y.dot(x) * x;
        if (y.norm() < 1e-8) continue;
        y.normalize();
        planes.push_back({x, y, tc.value(x, y)});
    }
    auto refine = [&](double sign) {
        std::vector<Plane> sorted = planes;
        const int starts = std::min<int>(std::max(1, opt.ascent_starts), static_cast<int>(sorted.size()));
        std::partial_sort(sorted.begin(), sorted.begin() + starts, sorted.end(),
                          [&](const Plane& a, const Plane& b) { return sign * a.value > sign * b.value; });
        Plane best = sorted.front();
        for (int s = 0; s < starts; ++s) {
            Plane p = sorted[s];
            for (int step = 0; step < opt.ascent_steps; ++step) {
                Eigen::VectorXd x = p.x, y = p.y;
                detail::alternate(tc, x, y, sign);
                const double v = tc.value(x, y);
                if (!(sign * v > sign * p.value)) break;
                const bool stalled = sign * (v - p.value) <= 1e-16 * std::max(1.0, std::abs(v));
                p = {x, y, v};
                if (stalled) break;
            }
            if (sign * p.value > sign * best.value) best = p;
        }
        return make(best.x, best.y, best.value);
    };
    return {refine(+1.0), refine(-1.0)};
}

struct SecMaxResult {
    double value = 0.0;
    CurvatureSample witness;
    std::size_t index = 0;     ///< position of the witness point in the region
    double min_value = 0.0;    ///< smallest sectional value seen over the region
};

/// Max of Sec over all points of Q and all 2-planes at each point.
inline SecMaxResult sec_max_over_region(const TargetModel& target, std::span<const AmbVec> region,
                                        const GrassmannOptions& opt = {}) {
    if (region.empty()) throw UsageError("sec_max_over_region needs a nonempty point set");
    for (const AmbVec& q : region) target.require_on_target(q);
    std::vector<PlaneExtremes> per_point(region.size());
    parallel_for(region.size(), [&](std::size_t i) { per_point[i] = plane_extremes(target, region[i], opt); });
    SecMaxResult out;
    out.value = -std::numeric_limits<double>::infinity();
    out.min_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < region.size(); ++i) {
        if (per_point[i].max.value > out.value) {
            out.value = per_point[i].max.value;
            out.witness = per_point[i].max;
            out.index = i;
        }
        out.min_value = std::min(out.min_value, per_point[i].min.value);
    }
    return out;
}

} // namespace brl
