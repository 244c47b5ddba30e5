#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "brl/descriptor.hpp"
#include "brl/domain.hpp"
#include "brl/error.hpp"
#include "brl/map.hpp"
#include "brl/target.hpp"

namespace brl {

/// Closed-form test maps:
///   constant              f ≡ base point of the target
///   identity              S²(r) → S²(r'), x ↦ r'·x/|x|
///   scaling:r=..          S²(1) → S²(r), the homothety x ↦ r·x
///   holomorphic:k=..      S² → S², z ↦ zᵏ in the stereographic chart
///   cap:amplitude=..      T² or S² → sphere, image in a geodesic ball
///   band:height=..        T² or S² → ellipsoid/sphere, image in |z| ≤ height
///   wrap                  T²(a,b) → flat torus, (u,v) ↦ (ρ₁e^{iu}, ρ₂e^{iv})
namespace catalog {

inline Eigen::Vector3d unit_sphere_point(const Vec2& p) {
    const double st = std::sin(p[0]);
    return {st * std::cos(p[1]), st * std::sin(p[1]), std::cos(p[0])};
}

inline bool is_round_2sphere(const TargetModel& t) { return t.kind() == TargetKind::Sphere && t.dim() == 2; }

inline void require(bool ok, const std::string& what) {
    if (!ok) throw UsageError(what);
}

/// Target implied by a map whose definition fixes it (scaling), otherwise
/// the requested one.
inline TargetModel resolve_target(const Descriptor& map, const std::optional<TargetModel>& requested) {
    if (map.kind == "scaling") {
        const double r = map.number("r", 1.0);
        TargetModel implied = TargetModel::sphere(2, r);
        if (requested && requested->descriptor() != implied.descriptor())
            throw UsageError("map 'scaling:r=" + format_shortest(r) + "' requires target " + implied.descriptor());
        return implied;
    }
    if (!requested) throw UsageError("map '" + map.kind + "' needs an explicit target");
    return *requested;
}

inline AmbVec holomorphic_value(const Vec2& p, int k, double radius) {
    const double t = std::pow(std::tan(0.5 * p[0]), k);
    const double denom = 1.0 + t * t;
    const double s = 2.0 * t / denom;
    AmbVec q(3);
    q << radius * s * std::cos(k * p[1]), radius * s * std::sin(k * p[1]), radius * (1.0 - t * t) / denom;
    return q;
}

/// exp at q₀ of a tangent vector on a round sphere of any dimension.
inline AmbVec sphere_exp(const AmbVec& base, const AmbVec& v, double radius) {
    const double len = v.norm();
    if (len == 0.0) return base;
    return std::cos(len / radius) * base + (radius * std::sin(len / radius) / len) * v;
}

inline DiscreteMap make(const Descriptor& spec, const DomainModel& domain, const TargetModel& target) {
    const std::string& name = spec.kind;
    if (name == "constant") {
        spec.expect_only({});
        const AmbVec q = target.base_point();
        return DiscreteMap::sample(domain, target, [&](const Vec2&) { return q; });
    }
    if (name == "identity" || name == "scaling") {
        spec.expect_only({"r"});
        require(domain.is_sphere() && is_round_2sphere(target), name + " maps a sphere domain to a round 2-sphere target");
        const double r = target.radii()[0];
        if (name == "scaling") require(std::abs(spec.number("r", 1.0) - r) <= 1e-15 * r, "scaling radius disagrees with target");
        return DiscreteMap::sample(domain, target, [&](const Vec2& p) { return AmbVec(r * unit_sphere_point(p)); });
    }
    if (name == "holomorphic") {
        spec.expect_only({"k"});
        const int k = spec.integer("k", 1);
        require(k >= 1, "holomorphic degree must be at least 1");
        require(domain.is_sphere() && is_round_2sphere(target), "holomorphic maps a sphere domain to a round 2-sphere target");
        const double r = target.radii()[0];
        return DiscreteMap::sample(domain, target, [&](const Vec2& p) { return holomorphic_value(p, k, r); });
    }
    if (name == "cap") {
        spec.expect_only({"amplitude"});
        const double amp = spec.number("amplitude", 0.3);
        require(target.kind() == TargetKind::Sphere, "cap needs a sphere target");
        const double r = target.radii()[0];
        require(amp >= 0 && amp < std::numbers::pi * r / 2, "cap amplitude must lie in [0, πr/2)");
        const AmbVec base = target.base_point();
        AmbVec e1 = AmbVec::Zero(target.ambient_dim()), e2 = e1;
        e1[0] = 1.0;
        e2[1] = 1.0;
        return DiscreteMap::sample(domain, target, [&](const Vec2& p) {
            double w1, w2;
            if (domain.is_sphere()) {
                const Eigen::Vector3d x = unit_sphere_point(p);
                w1 = x[0];
                w2 = x[1];
            } else {
                w1 = std::sin(p[0]) / std::sqrt(2.0);
                w2 = std::sin(p[1]) / std::sqrt(2.0);
            }
            return sphere_exp(base, amp * (w1 * e1 + w2 * e2), r);
        });
    }
    if (name == "band") {
        spec.expect_only({"height"});
        const double height = spec.number("height", 0.1);
        Eigen::Vector3d axes;
        if (target.kind() == TargetKind::Ellipsoid) axes << target.radii()[0], target.radii()[1], target.radii()[2];
        else if (is_round_2sphere(target)) axes.setConstant(target.radii()[0]);
        else throw UsageError("band needs an ellipsoid or round 2-sphere target");
        require(height >= 0 && height < axes[2], "band height must lie in [0, c)");
        return DiscreteMap::sample(domain, target, [&](const Vec2& p) {
            const double angle = domain.is_sphere() ? p[1] : p[0];
            const double s = domain.is_sphere() ? std::cos(p[0]) : std::sin(p[1]);
            const double z = height * s;
            const double rho = std::sqrt(1.0 - z * z / (axes[2] * axes[2]));
            AmbVec q(3);
            q << axes[0] * rho * std::cos(angle), axes[1] * rho * std::sin(angle), z;
            return q;
        });
    }
    if (name == "wrap") {
        spec.expect_only({});
        require(!domain.is_sphere() && target.kind() == TargetKind::FlatTorusEmb && target.dim() == 2,
                "wrap maps a torus domain to a 2-dimensional flat torus target");
        const double r1 = target.radii()[0], r2 = target.radii()[1];
        return DiscreteMap::sample(domain, target, [&](const Vec2& p) {
            AmbVec q(4);
            q << r1 * std::cos(p[0]), r1 * std::sin(p[0]), r2 * std::cos(p[1]), r2 * std::sin(p[1]);
            return q;
        });
    }
    throw UsageError("unknown catalog map '" + name + "'");
}

inline DiscreteMap make(const std::string& spec, const DomainModel& domain, const TargetModel& target) {
    return make(parse_descriptor(spec), domain, target);
}

} // namespace catalog
} // namespace brl
