#ifndef TRAJTIME_QP_ASSEMBLY_HPP
#define TRAJTIME_QP_ASSEMBLY_HPP

#include "trajtime/corridor.hpp"
#include "trajtime/qp_types.hpp"
#include "trajtime/spline.hpp"

namespace trajtime
{

    class AssemblyError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    struct AssembleOptions
    {
        int degree = 6;
        double yMin = 1e-3;
    };

    // Flattened variable layout: one Bernstein coefficient block per
    // (segment, axis) pair, segment-major.
    struct VariableLayout
    {
        int segments = 0;
        int degree = 0;
        int dim = 0;

        int count() const { return segments * dim * (degree + 1); }
        int index(int seg, int axis, int coef) const
        {
            return (seg * dim + axis) * (degree + 1) + coef;
        }
    };

    // Builds the fixed-timing QP for a corridor at durations y: block-diagonal
    // jerk cost, boundary and C^2 continuity equalities, box containment and
    // derivative-bound inequalities on the control points, with the exact
    // partial derivative of every duration-dependent entry filled in.
    ParametricQp assemble(const Corridor &corridor, const TimeAllocation &y,
                          const AssembleOptions &opts = {});

    // Distance-proportional initial durations, floored at yMin and normalized
    // to total time T. Waypoints run start -> overlap-region centers -> goal
    // (box center when no goal is given).
    TimeAllocation initialTimes(const Corridor &corridor, double T,
                                const AssembleOptions &opts = {});

    // y_i >= yMin rows, plus the fixed-total-time row when T is given.
    TimingConstraints timingConstraints(int n, std::optional<double> T, double yMin);

    // Reassembles the spline from a QP primal vector.
    BezierSpline splineFromPrimal(const Eigen::VectorXd &x, const TimeAllocation &y,
                                  const VariableLayout &layout);

    VariableLayout layoutFor(const Corridor &corridor, const AssembleOptions &opts);

} // namespace trajtime

#endif
