#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "brl/error.hpp"
#include "brl/map.hpp"
#include "brl/parallel.hpp"

namespace brl {

struct FlowParams {
    std::optional<double> dt;        ///< empty = auto: cfl·h²/max(1, sup|df|²)
    double cfl = 0.2;
    int max_steps = 50000;
    double tol = 1e-6;               ///< convergence on sup|τ| (non-flagged nodes)
    double collapse_tol = 1e-3;      ///< image diameter counted as a point
    int stride = 10;                 ///< trace row every `stride` steps
    double concentration_factor = 10.0;
    int max_halvings = 20;
    double energy_slack = 1e-10;

    void validate() const {
        if (dt && !(*dt > 0)) throw UsageError("time step must be positive");
        if (!(cfl > 0) || !(tol > 0) || !(collapse_tol > 0)) throw UsageError("flow tolerances must be positive");
        if (max_steps < 0 || stride < 1) throw UsageError("step counts must be nonnegative and stride positive");
    }
};

enum class FlowOutcome { Converged, CollapsedToConstant, MaxSteps };

inline const char* to_string(FlowOutcome o) {
    switch (o) {
    case FlowOutcome::Converged: return "converged";
    case FlowOutcome::CollapsedToConstant: return "collapsed_to_constant";
    case FlowOutcome::MaxSteps: return "max_steps";
    }
    return "";
}

struct TraceRow {
    int step = 0;
    double energy = 0.0;
    double sup_tension = 0.0;
    double image_diameter = 0.0;
    double e_max = 0.0;
};

struct FlowSummary {
    int steps = 0;
    std::vector<double> energy_trace;  ///< energy after every accepted step (index 0 = initial)
    std::vector<TraceRow> trace;       ///< every `stride` steps plus the final state
    double final_sup_tension = 0.0;
    double final_diameter = 0.0;
    double dt = 0.0;                   ///< step size in force at the end
    int rejections = 0;
    FlowOutcome outcome = FlowOutcome::MaxSteps;
    FlowParams params;
};

/// Upper bound 2·max|x − centroid| on the image diameter.
inline double diameter_upper_bound(const DiscreteMap& f) {
    const Eigen::VectorXd c = f.values().rowwise().mean();
    return 2.0 * std::sqrt((f.values().colwise() - c).colwise().squaredNorm().maxCoeff());
}

/// Exact max pairwise ambient distance over the nodes. Points are visited
/// by decreasing distance from the centroid; the bounding sphere prunes
/// every pair that cannot beat the current best.
inline double image_diameter(const DiscreteMap& f) {
    const Eigen::MatrixXd& v = f.values();
    const Eigen::VectorXd c = v.rowwise().mean();
    const Eigen::Index count = v.cols();
    std::vector<double> radius(count);
    for (Eigen::Index i = 0; i < count; ++i) radius[i] = (v.col(i) - c).norm();
    std::vector<Eigen::Index> order(count);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return radius[a] > radius[b]; });
    const double r0 = radius[order[0]];
    double best2 = 0.0;
    for (Eigen::Index a = 0; a < count; ++a) {
        const double ra = radius[order[a]];
        const double best = std::sqrt(best2);
        if (ra + r0 <= best) break;
        for (Eigen::Index b = 0; b < a; ++b) {
            if (ra + radius[order[b]] <= best) break;
            best2 = std::max(best2, (v.col(order[a]) - v.col(order[b])).squaredNorm());
        }
    }
    return std::sqrt(best2);
}

/// Tension at every node (columns).
inline Eigen::MatrixXd tension_matrix(const DiscreteMap& f) {
    Eigen::MatrixXd tau(f.target().ambient_dim(), f.domain().node_count());
    parallel_for(f.domain().node_count(), [&](std::size_t n) { tau.col(n) = tension_field(f, n); });
    return tau;
}

inline double sup_over_unflagged(const DiscreteMap& f, const Eigen::MatrixXd& tau) {
    double sup = 0.0;
    for (std::size_t n = 0; n < f.domain().node_count(); ++n)
        if (!f.domain().flagged(n)) sup = std::max(sup, tau.col(n).norm());
    return sup;
}

inline double sup_energy_density(const DiscreteMap& f) {
    const std::vector<double> e = energy_density(f);
    return e.empty() ? 0.0 : *std::max_element(e.begin(), e.end());
}

inline double auto_time_step(const DiscreteMap& f, double cfl = 0.2) {
    const double h = f.domain().min_spacing();
    return cfl * h * h / std::max(1.0, 2.0 * sup_energy_density(f));
}

struct EnergyStats {
    double total = 0.0;
    double e_max = 0.0;
};

inline EnergyStats energy_stats(const DiscreteMap& f) {
    const std::vector<double> e = energy_density(f);
    return {integrate(f.domain(), e), e.empty() ? 0.0 : *std::max_element(e.begin(), e.end())};
}

struct StepResult {
    DiscreteMap map;
    double dt_used;
    double energy_before;
    double energy_after;
    int rejections;
    double e_max_after = 0.0;
};

namespace detail {

inline StepResult flow_step_with(const DiscreteMap& f, const Eigen::MatrixXd& tau, double dt, double energy_before,
                                 const FlowParams& params) {
    int rejections = 0;
    for (int attempt = 0; attempt <= params.max_halvings; ++attempt) {
        DiscreteMap next = f;
        next.assign_projected(f.values() + dt * tau);
        const EnergyStats after = energy_stats(next);
        if (after.total <= energy_before + params.energy_slack)
            return {std::move(next), dt, energy_before, after.total, rejections, after.e_max};
        ++rejections;
        dt *= 0.5;
    }
    throw StabilityError("energy increased after " + std::to_string(rejections) +
                         " consecutive step halvings (last dt = " + format_number(dt * 2) + ")");
}

} // namespace detail

/// One explicit heat-flow step value ← Π(value + Δt·τ), halving Δt while the
/// energy rises by more than the slack.
inline StepResult flow_step(const DiscreteMap& f, double dt, const FlowParams& params = {}) {
    if (!(dt > 0)) throw UsageError("time step must be positive");
    return detail::flow_step_with(f, tension_matrix(f), dt, total_energy(f), params);
}

/// Runs the harmonic map heat flow until convergence, collapse to a point,
/// or the step budget.
inline std::pair<DiscreteMap, FlowSummary> run_flow(DiscreteMap f, const FlowParams& params = {}) {
    params.validate();
    FlowSummary summary;
    summary.params = params;
    double dt = params.dt ? *params.dt : auto_time_step(f, params.cfl);
    const EnergyStats initial = energy_stats(f);
    double energy = initial.total;
    double e_max = initial.e_max;
    const double e_max0 = initial.e_max;
    summary.energy_trace.push_back(energy);

    auto trace_row = [&](int step, double sup_tau) {
        summary.trace.push_back({step, energy, sup_tau, image_diameter(f), e_max});
    };

    for (int step = 0;; ++step) {
        const Eigen::MatrixXd tau = tension_matrix(f);
        const double sup_tau = sup_over_unflagged(f, tau);
        const bool collapsed = diameter_upper_bound(f) < params.collapse_tol;
        const bool converged = sup_tau < params.tol;
        if (collapsed || converged || step >= params.max_steps) {
            summary.steps = step;
            summary.outcome = collapsed ? FlowOutcome::CollapsedToConstant
                              : converged ? FlowOutcome::Converged
                                          : FlowOutcome::MaxSteps;
            summary.final_sup_tension = sup_tau;
            summary.final_diameter = image_diameter(f);
            summary.dt = dt;
            if (summary.trace.empty() || summary.trace.back().step != step) trace_row(step, sup_tau);
            return {std::move(f), std::move(summary)};
        }
        if (step % params.stride == 0) trace_row(step, sup_tau);

        StepResult r = detail::flow_step_with(f, tau, dt, energy, params);
        summary.rejections += r.rejections;
        dt = r.dt_used;
        f = std::move(r.map);
        energy = r.energy_after;
        e_max = r.e_max_after;
        summary.energy_trace.push_back(energy);
        if (e_max0 > 0 && e_max > params.concentration_factor * e_max0)
            throw ConcentrationError("energy density grew beyond " + format_number(params.concentration_factor) +
                                     "x its initial maximum at step " + std::to_string(step + 1));
    }
}

} // namespace brl
