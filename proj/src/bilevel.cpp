#include "trajtime/bilevel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace trajtime
{

    namespace
    {

        constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

        double elapsedMsSince(std::chrono::steady_clock::time_point t0)
        {
            return std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                .count();
        }

        // largest component, ties to the lowest index
        int argmax(const Eigen::VectorXd &v, int skip = -1)
        {
            int best = -1;
            double bestVal = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < v.size(); ++i)
            {
                if (i != skip && v(i) > bestVal)
                {
                    bestVal = v(i);
                    best = i;
                }
            }
            return best;
        }

    } // namespace

    const char *stopReasonName(StopReason r)
    {
        switch (r)
        {
        case StopReason::GradTol:
            return "grad_tol";
        case StopReason::ObjTol:
            return "obj_tol";
        case StopReason::NoAlpha:
            return "no_alpha";
        case StopReason::MaxIter:
            return "max_iter";
        case StopReason::Cutoff:
            return "cutoff";
        }
        return "unknown";
    }

    Eigen::VectorXd analyticGradient(const ParametricQp &qp, const QpSolution &sol)
    {
        if (sol.status != QpStatus::Optimal)
        {
            throw RefineError("analyticGradient: no optimal lower-level solution");
        }
        const int n = qp.numDurations();
        Eigen::VectorXd g(n);
        for (int k = 0; k < n; ++k)
        {
            double val = 0.5 * sol.x.dot(qp.dP[k] * sol.x) + qp.dq[k].dot(sol.x) + qp.dc(k);
            if (qp.numInequalities() > 0)
            {
                val += sol.lambda.dot(qp.dG[k] * sol.x - qp.dh[k]);
            }
            if (qp.numEqualities() > 0)
            {
                val += sol.mu.dot(qp.dL[k] * sol.x - qp.dm[k]);
            }
            g(k) = val;
        }
        return g;
    }

    FdGradient fdGradient(const BilevelProblem &problem, const Eigen::VectorXd &y,
                          double h, FdMode mode, DenseQpSolver &solver,
                          const QpSolution *warm)
    {
        const int n = static_cast<int>(y.size());
        const double yMin = problem.opts.yMin;
        FdGradient out;
        out.grad = Eigen::VectorXd::Zero(n);
        out.valid.assign(n, 1);

        const bool paired = problem.totalTimeFixed();
        if (paired)
        {
            out.refIndex = argmax(y);
            out.altIndex = n > 1 ? argmax(y, out.refIndex) : out.refIndex;
        }

        auto direction = [&](int k)
        {
            Eigen::VectorXd dir = Eigen::VectorXd::Zero(n);
            if (!paired)
            {
                dir(k) = 1.0;
            }
            else if (k != out.refIndex)
            {
                dir(k) = 1.0;
                dir(out.refIndex) = -1.0;
            }
            else
            {
                dir(out.refIndex) = 1.0;
                dir(out.altIndex) = -1.0;
            }
            return dir;
        };

        // The differenced values are evaluated from the primal through the
        // third-difference jerk form: the generic 0.5 x^T P x carries
        // cancellation noise big enough to pollute an h = 1e-6 quotient.
        const VariableLayout lay = layoutFor(problem.corridor, problem.opts);
        auto solveValue = [&](const Eigen::VectorXd &yTrial) -> std::optional<double>
        {
            const ParametricQp qp = problem.assembleAt(yTrial);
            const QpSolution sol = solver.solve(qp, warm);
            ++out.solves;
            if (sol.status != QpStatus::Optimal)
            {
                return std::nullopt;
            }
            long double acc = 0.0L;
            for (int i = 0; i < lay.segments; ++i)
            {
                for (int a = 0; a < lay.dim; ++a)
                {
                    acc += jerkCostValue(sol.x.segment(lay.index(i, a, 0), lay.degree + 1),
                                         yTrial(i), lay.degree);
                }
            }
            return static_cast<double>(acc);
        };

        double base = 0.0;
        if (mode != FdMode::Central)
        {
            const auto v = solveValue(y);
            if (!v)
            {
                throw RefineError("fdGradient: QP infeasible at the base point");
            }
            base = *v;
        }

        for (int k = 0; k < n; ++k)
        {
            const Eigen::VectorXd dir = direction(k);
            if (dir.cwiseAbs().maxCoeff() == 0.0)
            {
                out.grad(k) = 0.0;
                continue;
            }
            const Eigen::VectorXd plus = y + h * dir;
            const Eigen::VectorXd minus = y - h * dir;

            auto inBounds = [&](const Eigen::VectorXd &v)
            { return (v.array() >= yMin - 1e-15).all(); };

            std::optional<double> fPlus, fMinus;
            bool ok = true;
            switch (mode)
            {
            case FdMode::Forward:
                ok = inBounds(plus) && (fPlus = solveValue(plus)).has_value();
                if (ok)
                {
                    out.grad(k) = (*fPlus - base) / h;
                }
                break;
            case FdMode::Backward:
                ok = inBounds(minus) && (fMinus = solveValue(minus)).has_value();
                if (ok)
                {
                    out.grad(k) = (base - *fMinus) / h;
                }
                break;
            case FdMode::Central:
                ok = inBounds(plus) && inBounds(minus) &&
                     (fPlus = solveValue(plus)).has_value() &&
                     (fMinus = solveValue(minus)).has_value();
                if (ok)
                {
                    out.grad(k) = (*fPlus - *fMinus) / (2.0 * h);
                }
                break;
            }
            if (!ok)
            {
                out.grad(k) = kNan;
                out.valid[k] = 0;
            }
        }
        return out;
    }

    Eigen::VectorXd pairedGradient(const Eigen::VectorXd &g, int refIndex, int altIndex)
    {
        if (refIndex < 0)
        {
            return g;
        }
        Eigen::VectorXd out(g.size());
        for (int k = 0; k < g.size(); ++k)
        {
            out(k) = (k == refIndex) ? g(refIndex) - g(altIndex)
                                     : g(k) - g(refIndex);
        }
        return out;
    }

    ProjectedGradient projectGradient(const Eigen::VectorXd &g,
                                      const TimingConstraints &tc,
                                      const Eigen::VectorXd &y, double yMin)
    {
        const int n = static_cast<int>(y.size());
        const double boundTol = 1e-9 * (1.0 + std::abs(yMin));

        std::vector<char> pinned(n, 0);
        Eigen::VectorXd proj = g;
        for (int round = 0; round <= n; ++round)
        {
            // null-space projection of g against the equality rows plus the
            // pinned bound rows
            const int extra = static_cast<int>(std::count(pinned.begin(), pinned.end(), 1));
            Eigen::MatrixXd W(tc.C.rows() + extra, n);
            int r = 0;
            for (int i = 0; i < tc.C.rows(); ++i)
            {
                W.row(r++) = tc.C.row(i);
            }
            for (int i = 0; i < n; ++i)
            {
                if (pinned[i])
                {
                    W.row(r) = Eigen::RowVectorXd::Zero(n);
                    W(r, i) = 1.0;
                    ++r;
                }
            }
            if (W.rows() == 0)
            {
                proj = g;
            }
            else
            {
                Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W.transpose());
                const int rank = static_cast<int>(qr.rank());
                const Eigen::MatrixXd Q =
                    Eigen::MatrixXd(qr.householderQ()).leftCols(rank);
                proj = g - Q * (Q.transpose() * g);
            }

            // pin bounds the descent direction would cross
            bool changed = false;
            for (int i = 0; i < n; ++i)
            {
                if (!pinned[i] && y(i) <= yMin + boundTol && proj(i) > 1e-14)
                {
                    pinned[i] = 1;
                    changed = true;
                }
            }
            if (!changed)
            {
                break;
            }
        }

        ProjectedGradient out;
        out.norm = proj.norm();
        if (out.norm <= 1e-15 * (1.0 + g.norm()))
        {
            out.direction = Eigen::VectorXd::Zero(n);
            out.norm = 0.0;
        }
        else
        {
            out.direction = -proj / out.norm;
        }
        return out;
    }

    Eigen::VectorXd feasibleStep(const Eigen::VectorXd &y0, double alpha,
                                 const Eigen::VectorXd &p,
                                 const TimingConstraints &tc, double yMin)
    {
        Eigen::VectorXd y = (y0 + alpha * p).cwiseMax(yMin);
        if (tc.C.rows() == 0)
        {
            return y;
        }

        // Euclidean projection onto { y >= yMin, sum(y) = T }
        const double T = tc.d(0);
        const int n = static_cast<int>(y.size());
        Eigen::VectorXd z = y.array() - yMin;
        const double budget = T - n * yMin;
        std::vector<double> sorted(z.data(), z.data() + n);
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        double cum = 0.0;
        double tau = 0.0;
        for (int k = 0; k < n; ++k)
        {
            cum += sorted[k];
            const double cand = (cum - budget) / (k + 1);
            if (k + 1 == n || sorted[k + 1] <= cand)
            {
                tau = cand;
                break;
            }
        }
        y = (z.array() - tau).cwiseMax(0.0) + yMin;
        // pin the sum exactly against roundoff
        int imax = 0;
        y.maxCoeff(&imax);
        y(imax) += T - y.sum();
        return y;
    }

    std::optional<LineSearchResult> lineSearch(const BilevelProblem &problem,
                                               DenseQpSolver &solver,
                                               const Eigen::VectorXd &y0,
                                               const Eigen::VectorXd &p,
                                               double J0, const Eigen::VectorXd &g,
                                               const RefineConfig &cfg,
                                               LineSearchState &state,
                                               const QpSolution *warm)
    {
        const double gdotp = g.dot(p);
        double alpha = state.alpha0;
        for (int trial = 0; trial < cfg.lsMaxIterations; ++trial)
        {
            const Eigen::VectorXd yTrial =
                feasibleStep(y0, alpha, p, problem.tc, problem.opts.yMin);
            ParametricQp qp = problem.assembleAt(yTrial);
            QpSolution sol = solver.solve(qp, warm);
            const bool ok = sol.status == QpStatus::Optimal &&
                            sol.objective <= J0 + cfg.armijoC1 * alpha * gdotp;
            if (ok)
            {
                state.alpha0 = (trial == 0) ? cfg.tauGrow * alpha : alpha;
                LineSearchResult res;
                res.alpha = alpha;
                res.y = yTrial;
                res.qp = std::move(qp);
                res.sol = std::move(sol);
                res.objective = res.sol.objective;
                res.solves = trial + 1;
                res.trials = trial + 1;
                return res;
            }
            alpha *= cfg.tauShrink;
        }
        return std::nullopt;
    }

    RefineResult refineTime(const BilevelProblem &problem, const TimeAllocation &y0,
                            const RefineConfig &cfg, GradientMethod method)
    {
        if (!(cfg.tauGrow > 1.0) || !(cfg.tauShrink > 0.0 && cfg.tauShrink < 1.0))
        {
            throw std::invalid_argument("refineTime: need tauGrow > 1 and tauShrink in (0,1)");
        }
        if (!problem.tc.satisfied(y0.durations, 1e-9))
        {
            throw RefineError("refineTime: initial allocation violates timing constraints");
        }

        const auto t0 = std::chrono::steady_clock::now();
        DenseQpSolver solver;
        RefineResult res;
        res.trace.reason = StopReason::MaxIter;

        Eigen::VectorXd y = y0.durations;
        ParametricQp qp = problem.assembleAt(y);
        QpSolution sol = solver.solve(qp);
        ++res.totalSolves;
        if (sol.status != QpStatus::Optimal)
        {
            throw RefineError("refineTime: lower-level QP not solvable at the initial allocation");
        }
        double J = sol.objective;

        res.trace.records.push_back(
            {0, elapsedMsSince(t0), y, J, kNan, 0.0, res.totalSolves, 0});

        LineSearchState lsState{cfg.alpha0Init};
        Eigen::VectorXd gradForDescent;
        bool gradFlagged = false;

        auto weaklyActive = [](const QpSolution &s)
        {
            for (int i : s.activeSet)
            {
                if (s.lambda(i) <= 1e-7)
                {
                    return true;
                }
            }
            return false;
        };

        auto evaluateGradient = [&]() -> int
        {
            if (method == GradientMethod::LagrangeMultiplier)
            {
                gradForDescent = analyticGradient(qp, sol);
                gradFlagged = weaklyActive(sol);
                return 0;
            }
            FdGradient fd = fdGradient(problem, y, cfg.fdStep, cfg.fdMode, solver, &sol);
            res.totalSolves += fd.solves;
            res.gradientSolves += fd.solves;
            gradFlagged = weaklyActive(sol) ||
                          std::find(fd.valid.begin(), fd.valid.end(), 0) != fd.valid.end();
            // back to gradient gauge: zero at the reference component; failed
            // components carry no information and are zeroed
            gradForDescent = fd.grad;
            for (int k = 0; k < gradForDescent.size(); ++k)
            {
                if (!fd.valid[k])
                {
                    gradForDescent(k) = 0.0;
                }
            }
            if (fd.refIndex >= 0)
            {
                gradForDescent(fd.refIndex) = 0.0;
            }
            return fd.solves;
        };

        for (int iter = 1; iter <= cfg.maxIterations; ++iter)
        {
            if (cfg.cutoffMs && elapsedMsSince(t0) >= *cfg.cutoffMs)
            {
                res.trace.reason = StopReason::Cutoff;
                break;
            }

            const int gradSolves = evaluateGradient();
            res.gradSolvesPerIteration.push_back(gradSolves);
            const ProjectedGradient pg =
                projectGradient(gradForDescent, problem.tc, y, problem.opts.yMin);
            res.trace.records.back().gradNorm = pg.norm;
            res.trace.records.back().gradientSolves = gradSolves;
            res.trace.records.back().gradFlagged = gradFlagged;

            if (pg.norm < cfg.gradTol)
            {
                res.trace.reason = StopReason::GradTol;
                break;
            }

            auto ls = lineSearch(problem, solver, y, pg.direction, J, gradForDescent,
                                 cfg, lsState, &sol);
            if (ls)
            {
                res.totalSolves += ls->solves;
                res.lineSearchSolves += ls->solves;
            }
            else
            {
                // count the exhausted trials
                res.totalSolves += cfg.lsMaxIterations;
                res.lineSearchSolves += cfg.lsMaxIterations;
                res.trace.reason = StopReason::NoAlpha;
                break;
            }

            if (std::abs(J - ls->objective) <= cfg.objTol * std::max(1.0, std::abs(J)))
            {
                // optimality check precedes committing the accepted step
                res.trace.reason = StopReason::ObjTol;
                break;
            }

            y = ls->y;
            qp = std::move(ls->qp);
            sol = std::move(ls->sol);
            J = ls->objective;
            res.trace.records.push_back(
                {iter, elapsedMsSince(t0), y, J, kNan, ls->alpha, res.totalSolves, 0});
        }

        // fill the terminal gradient norm when it costs nothing
        if (std::isnan(res.trace.records.back().gradNorm) &&
            method == GradientMethod::LagrangeMultiplier)
        {
            const ProjectedGradient pg = projectGradient(
                analyticGradient(qp, sol), problem.tc, y, problem.opts.yMin);
            res.trace.records.back().gradNorm = pg.norm;
        }

        res.y = TimeAllocation{y};
        res.objective = J;
        res.sol = std::move(sol);
        return res;
    }

} // namespace trajtime
