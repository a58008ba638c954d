#ifndef TRAJTIME_QP_SOLVER_HPP
#define TRAJTIME_QP_SOLVER_HPP

#include "trajtime/qp_types.hpp"

#include <optional>

namespace trajtime
{

    // Dense convex QP solver built around the dual active-set method of
    // Goldfarb and Idnani. Equality constraints are eliminated through a
    // null-space basis first, so the reduced Hessian is positive definite for
    // well-posed problems and the multipliers come out accurate enough to
    // drive the outer gradient.
    //
    // A solver instance owns mutable workspace; do not share one instance
    // across concurrent solves. Solutions are plain immutable values.
    class DenseQpSolver
    {
    public:
        struct Options
        {
            double tol = 1e-8;        // feasibility / stationarity target
            double activeTol = 1e-7;  // slack and multiplier threshold for the reported active set
            double regEps = 1e-9;     // added to the reduced Hessian when not PD
            int maxIterations = 0;    // 0 picks 50 + 10 * (N + m_I)
        };

        DenseQpSolver() = default;
        explicit DenseQpSolver(Options opts) : options(opts) {}

        // warm, when given, seeds the active set from a previous solution of a
        // nearby QP; on an unchanged problem the seeded pass reproduces the
        // solution in a single iteration.
        QpSolution solve(const ParametricQp &qp, const QpSolution *warm = nullptr);

        long solveCount() const { return solves; }

        Options options;

    private:
        long solves = 0;
    };

    // Infinity norms of the four KKT blocks: stationarity, primal
    // feasibility, dual feasibility, complementary slackness.
    KktResidual kktResidual(const ParametricQp &qp, const QpSolution &sol);

    // Test oracle: enumerates candidate active sets (2^m_I, so small
    // problems only), solves each equality-constrained KKT system and keeps
    // the best primal/dual feasible candidate.
    QpSolution bruteForce(const ParametricQp &qp);

} // namespace trajtime

#endif
