#ifndef TRAJTIME_BILEVEL_HPP
#define TRAJTIME_BILEVEL_HPP

#include "trajtime/qp_assembly.hpp"
#include "trajtime/qp_solver.hpp"

#include <optional>

namespace trajtime
{

    class RefineError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Corridor plus the outer constraints on its durations; the lower level
    // is the fixed-timing QP assembled at a given allocation.
    struct BilevelProblem
    {
        Corridor corridor;
        AssembleOptions opts;
        TimingConstraints tc;

        ParametricQp assembleAt(const Eigen::VectorXd &y) const
        {
            return assemble(corridor, TimeAllocation{y}, opts);
        }
        bool totalTimeFixed() const { return tc.C.rows() > 0; }
    };

    enum class GradientMethod
    {
        LagrangeMultiplier,
        FiniteDifference
    };

    enum class FdMode
    {
        Forward,
        Central,
        Backward
    };

    enum class StopReason
    {
        GradTol,
        ObjTol,
        NoAlpha,
        MaxIter,
        Cutoff
    };

    struct RefineConfig
    {
        int maxIterations = 50;
        int lsMaxIterations = 10;
        double alpha0Init = 0.1;
        double tauGrow = 2.0;   // > 1
        double tauShrink = 0.5; // in (0, 1)
        double armijoC1 = 1e-4;
        double gradTol = 1e-6;
        double objTol = 1e-8; // relative
        std::optional<double> cutoffMs;
        double fdStep = 1e-6;
        FdMode fdMode = FdMode::Forward;
    };

    struct RefineRecord
    {
        int iter = 0;
        double elapsedMs = 0.0;
        Eigen::VectorXd y;
        double objective = 0.0;
        double gradNorm = 0.0; // NaN when never evaluated at this iterate
        double alpha = 0.0;
        long qpSolves = 0;          // cumulative
        int gradientSolves = 0;     // QP solves spent on this row's gradient
        // the gradient here leaned on a shaky active set: a weakly active
        // constraint (multiplier at the threshold) or a failed finite
        // difference; the direction is still used, subgradient style
        bool gradFlagged = false;
    };

    struct RefineTrace
    {
        std::vector<RefineRecord> records;
        StopReason reason = StopReason::MaxIter;
    };

    struct RefineResult
    {
        TimeAllocation y;
        double objective = 0.0;
        QpSolution sol;
        RefineTrace trace;
        long totalSolves = 0;
        long gradientSolves = 0;
        long lineSearchSolves = 0;
        std::vector<int> gradSolvesPerIteration;
    };

    // Gradient of the optimal value in the durations, assembled from the
    // multipliers and the stored partials; requires an optimal solution.
    Eigen::VectorXd analyticGradient(const ParametricQp &qp, const QpSolution &sol);

    struct FdGradient
    {
        Eigen::VectorXd grad;
        std::vector<char> valid; // per component: perturbation feasible and QP solved
        int solves = 0;
        int refIndex = -1; // paired reference under fixed total time, else -1
        int altIndex = -1; // pairing partner for the reference component itself
    };

    // Finite-difference estimate of the outer gradient. With a fixed total
    // time the perturbations are paired (+h on k, -h on the reference index,
    // the reference itself pairing against altIndex) so every trial stays on
    // the constraint plane; entry k then estimates the directional derivative
    // along e_k - e_ref. Forward/backward modes consume n+1 QP solves,
    // central consumes 2n.
    FdGradient fdGradient(const BilevelProblem &problem, const Eigen::VectorXd &y,
                          double h, FdMode mode, DenseQpSolver &solver,
                          const QpSolution *warm = nullptr);

    // Expresses an analytic gradient in the paired-difference coordinates
    // reported by fdGradient, for like-for-like comparison.
    Eigen::VectorXd pairedGradient(const Eigen::VectorXd &g, int refIndex, int altIndex);

    struct ProjectedGradient
    {
        Eigen::VectorXd direction; // unit descent direction, or zero
        double norm = 0.0;         // norm of the projected gradient
    };

    // Projects g onto the null space of the equality rows plus any duration
    // bounds that are active and pushed against, then negates and normalizes.
    ProjectedGradient projectGradient(const Eigen::VectorXd &g,
                                      const TimingConstraints &tc,
                                      const Eigen::VectorXd &y, double yMin);

    // Clip to the duration floor, then re-normalize onto the fixed-total-time
    // plane (Euclidean projection onto { y >= yMin, sum y = T }).
    Eigen::VectorXd feasibleStep(const Eigen::VectorXd &y0, double alpha,
                                 const Eigen::VectorXd &p,
                                 const TimingConstraints &tc, double yMin);

    struct LineSearchState
    {
        double alpha0 = 0.1; // persists across searches, adapted each success
    };

    struct LineSearchResult
    {
        double alpha = 0.0;
        Eigen::VectorXd y;
        ParametricQp qp;
        QpSolution sol;
        double objective = 0.0;
        int solves = 0;
        int trials = 0;
    };

    // Adaptive backtracking Armijo search along p; infeasible trial QPs count
    // as insufficient decrease. On first-trial success the persistent initial
    // step grows by tauGrow, otherwise it is reset to the accepted step.
    std::optional<LineSearchResult> lineSearch(const BilevelProblem &problem,
                                               DenseQpSolver &solver,
                                               const Eigen::VectorXd &y0,
                                               const Eigen::VectorXd &p,
                                               double J0, const Eigen::VectorXd &g,
                                               const RefineConfig &cfg,
                                               LineSearchState &state,
                                               const QpSolution *warm);

    // Outer descent loop: solve QP, form the gradient (multipliers or finite
    // differences), project, line-search, repeat until a stop condition.
    RefineResult refineTime(const BilevelProblem &problem, const TimeAllocation &y0,
                            const RefineConfig &cfg, GradientMethod method);

    const char *stopReasonName(StopReason r);

} // namespace trajtime

#endif
