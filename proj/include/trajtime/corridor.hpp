#ifndef TRAJTIME_CORRIDOR_HPP
#define TRAJTIME_CORRIDOR_HPP

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

namespace trajtime
{

    // Raised when a problem description violates its own invariants; carries
    // the offending field so loaders and the CLI can point at it.
    class ValidationError : public std::runtime_error
    {
    public:
        ValidationError(std::string fieldPath, const std::string &what)
            : std::runtime_error(fieldPath + ": " + what), field(std::move(fieldPath)) {}

        std::string field;
    };

    struct Box
    {
        Eigen::VectorXd lo;
        Eigen::VectorXd hi;

        int dim() const { return static_cast<int>(lo.size()); }
        Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
        bool contains(const Eigen::VectorXd &p, double tol = 0.0) const;
    };

    // Intersection box; empty() when any axis has non-positive width.
    Box intersect(const Box &a, const Box &b);
    bool hasPositiveVolume(const Box &b);

    struct BoundaryState
    {
        Eigen::VectorXd pos;
        Eigen::VectorXd vel;
        Eigen::VectorXd acc;
    };

    // Sequence of overlapping axis-aligned boxes, one spline segment per box,
    // with boundary states and per-axis derivative bounds.
    struct Corridor
    {
        std::vector<Box> boxes;
        BoundaryState start;
        std::optional<BoundaryState> goal;
        Eigen::VectorXd vmax;
        Eigen::VectorXd amax;

        int numSegments() const { return static_cast<int>(boxes.size()); }
        int dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }

        // Checks overlap of consecutive boxes, start/goal membership and
        // shape consistency; throws ValidationError.
        void validate() const;
    };

    struct TimeAllocation
    {
        Eigen::VectorXd durations;

        int size() const { return static_cast<int>(durations.size()); }
        double total() const { return durations.sum(); }
    };

    // Outer-level constraints on the durations: A y <= b plus C y = d.
    struct TimingConstraints
    {
        Eigen::MatrixXd A;
        Eigen::VectorXd b;
        Eigen::MatrixXd C;
        Eigen::VectorXd d;

        bool satisfied(const Eigen::VectorXd &y, double tol = 1e-9) const;
    };

} // namespace trajtime

#endif
