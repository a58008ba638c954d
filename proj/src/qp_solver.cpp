#include "trajtime/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trajtime
{

    namespace
    {

        constexpr double kInf = std::numeric_limits<double>::infinity();

        // 0.5 x^T P x + q^T x + c accumulated in extended precision: the
        // quadratic form cancels heavily (entries of P dwarf the result), and
        // the objective feeds finite differences downstream, so double
        // accumulation would put a visible noise floor under it.
        double quadObjective(const Eigen::MatrixXd &P, const Eigen::VectorXd &q,
                             double c, const Eigen::VectorXd &x)
        {
            const int n = static_cast<int>(x.size());
            long double acc = 0.0L;
            for (int j = 0; j < n; ++j)
            {
                const long double xj = x(j);
                long double col = 0.0L;
                for (int i = 0; i < n; ++i)
                {
                    col += static_cast<long double>(P(i, j)) * x(i);
                }
                acc += col * xj;
            }
            acc *= 0.5L;
            for (int i = 0; i < n; ++i)
            {
                acc += static_cast<long double>(q(i)) * x(i);
            }
            acc += c;
            return static_cast<double>(acc);
        }

        struct GiResult
        {
            Eigen::VectorXd u;
            std::vector<int> active;    // positions into the reduced inequality rows
            std::vector<double> dual;   // multipliers aligned with active
            int iterations = 0;
            bool feasible = true;
            bool hitCap = false;
        };

        // Dual active-set iteration of Goldfarb and Idnani for
        //   min 0.5 u^T H u + g^T u   s.t.  A u <= b
        // with H positive definite (llt holds its Cholesky factor).
        // Starts from the unconstrained minimum and adds the most violated
        // constraint until primal feasible; J and R carry the factorization
        // of the active-constraint normals in the metric of H^-1.
        GiResult solveGi(const Eigen::LLT<Eigen::MatrixXd> &llt,
                         const Eigen::VectorXd &g,
                         const Eigen::MatrixXd &A,
                         const Eigen::VectorXd &b,
                         int maxIterations)
        {
            const int n = static_cast<int>(g.size());
            const int m = static_cast<int>(A.rows());

            GiResult res;
            res.u = -llt.solve(g);
            if (m == 0)
            {
                res.iterations = 1;
                return res;
            }

            Eigen::MatrixXd J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
            Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
            std::vector<char> inActive(m, 0);
            int q = 0;

            Eigen::VectorXd d(n), z(n), r(n), np(n);

            auto rotateJ = [&](int c0, int c1, double cc, double ss)
            {
                for (int i = 0; i < n; ++i)
                {
                    const double t0 = J(i, c0);
                    const double t1 = J(i, c1);
                    J(i, c0) = cc * t0 + ss * t1;
                    J(i, c1) = -ss * t0 + cc * t1;
                }
            };

            auto addConstraint = [&](int ip)
            {
                for (int j = n - 1; j > q; --j)
                {
                    if (std::abs(d(j)) <= 0.0)
                    {
                        continue;
                    }
                    const double hyp = std::hypot(d(j - 1), d(j));
                    const double cc = d(j - 1) / hyp;
                    const double ss = d(j) / hyp;
                    d(j - 1) = hyp;
                    d(j) = 0.0;
                    rotateJ(j - 1, j, cc, ss);
                }
                R.col(q).head(q + 1) = d.head(q + 1);
                res.active.push_back(ip);
                inActive[ip] = 1;
                ++q;
            };

            auto dropConstraint = [&](int k)
            {
                inActive[res.active[k]] = 0;
                res.active.erase(res.active.begin() + k);
                res.dual.erase(res.dual.begin() + k);
                for (int j = k; j < q - 1; ++j)
                {
                    R.col(j).head(q) = R.col(j + 1).head(q);
                }
                R.col(q - 1).setZero();
                --q;
                for (int j = k; j < q; ++j)
                {
                    const double a0 = R(j, j);
                    const double a1 = R(j + 1, j);
                    if (std::abs(a1) <= 0.0)
                    {
                        continue;
                    }
                    const double hyp = std::hypot(a0, a1);
                    const double cc = a0 / hyp;
                    const double ss = a1 / hyp;
                    for (int l = j; l < q; ++l)
                    {
                        const double t0 = R(j, l);
                        const double t1 = R(j + 1, l);
                        R(j, l) = cc * t0 + ss * t1;
                        R(j + 1, l) = -ss * t0 + cc * t1;
                    }
                    rotateJ(j, j + 1, cc, ss);
                }
            };

            while (true)
            {
                // most violated inactive constraint; ties keep the lowest index
                int ip = -1;
                double worst = 0.0;
                for (int i = 0; i < m; ++i)
                {
                    if (inActive[i])
                    {
                        continue;
                    }
                    const double slack = b(i) - A.row(i).dot(res.u);
                    const double eps = 1e-12 * (1.0 + std::abs(b(i)));
                    if (slack < -eps && slack < worst)
                    {
                        worst = slack;
                        ip = i;
                    }
                }
                if (ip < 0)
                {
                    break;
                }

                np = -A.row(ip).transpose();
                double sIp = b(ip) - A.row(ip).dot(res.u);
                double uPlus = 0.0;

                while (true)
                {
                    if (++res.iterations > maxIterations)
                    {
                        res.hitCap = true;
                        return res;
                    }

                    d.noalias() = J.transpose() * np;
                    const int nfree = n - q;
                    const double ztnp = d.tail(nfree).squaredNorm();
                    const bool zZero = ztnp <= 1e-28 * std::max(1.0, d.squaredNorm());
                    if (!zZero)
                    {
                        z.noalias() = J.rightCols(nfree) * d.tail(nfree);
                    }
                    if (q > 0)
                    {
                        r.head(q) = R.topLeftCorner(q, q)
                                        .triangularView<Eigen::Upper>()
                                        .solve(d.head(q));
                    }

                    double t1 = kInf;
                    int k1 = -1;
                    for (int k = 0; k < q; ++k)
                    {
                        if (r(k) > 0.0)
                        {
                            const double cand = res.dual[k] / r(k);
                            if (cand < t1)
                            {
                                t1 = cand;
                                k1 = k;
                            }
                        }
                    }
                    const double t2 = zZero ? kInf : -sIp / ztnp;
                    const double t = std::min(t1, t2);

                    if (t >= kInf)
                    {
                        res.feasible = false;
                        return res;
                    }

                    if (zZero)
                    {
                        // step in the dual only, drop the blocking constraint
                        for (int k = 0; k < q; ++k)
                        {
                            res.dual[k] -= t * r(k);
                        }
                        uPlus += t;
                        dropConstraint(k1);
                        continue;
                    }

                    res.u += t * z;
                    for (int k = 0; k < q; ++k)
                    {
                        res.dual[k] -= t * r(k);
                    }
                    uPlus += t;

                    if (t == t2)
                    {
                        addConstraint(ip);
                        res.dual.push_back(uPlus);
                        break;
                    }
                    dropConstraint(k1);
                    sIp = b(ip) - A.row(ip).dot(res.u);
                }
            }
            res.iterations = std::max(res.iterations, 1);
            return res;
        }

    } // namespace

    ParametricQp ParametricQp::plain(Eigen::MatrixXd P, Eigen::VectorXd q,
                                     Eigen::MatrixXd G, Eigen::VectorXd h,
                                     Eigen::MatrixXd L, Eigen::VectorXd m,
                                     double c)
    {
        ParametricQp qp;
        qp.P = std::move(P);
        qp.q = std::move(q);
        qp.G = std::move(G);
        qp.h = std::move(h);
        qp.L = std::move(L);
        qp.m = std::move(m);
        qp.c = c;
        return qp;
    }

    void ParametricQp::allocateZeroPartials(int n)
    {
        const int N = numVariables();
        dP.assign(n, Eigen::SparseMatrix<double>(N, N));
        dq.assign(n, Eigen::VectorXd::Zero(N));
        dc = Eigen::VectorXd::Zero(n);
        dG.assign(n, Eigen::SparseMatrix<double>(G.rows(), N));
        dh.assign(n, Eigen::VectorXd::Zero(G.rows()));
        dL.assign(n, Eigen::SparseMatrix<double>(L.rows(), N));
        dm.assign(n, Eigen::VectorXd::Zero(L.rows()));
    }

    KktResidual kktResidual(const ParametricQp &qp, const QpSolution &sol)
    {
        const int mI = qp.numInequalities();
        const int mE = qp.numEqualities();
        if (sol.x.size() != qp.numVariables() ||
            sol.lambda.size() != mI || sol.mu.size() != mE)
        {
            throw std::invalid_argument("kktResidual: shape mismatch");
        }

        KktResidual res;
        Eigen::VectorXd grad = qp.P * sol.x + qp.q;
        if (mI > 0)
        {
            grad.noalias() += qp.G.transpose() * sol.lambda;
        }
        if (mE > 0)
        {
            grad.noalias() += qp.L.transpose() * sol.mu;
        }
        res.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;

        double primal = 0.0;
        if (mI > 0)
        {
            const Eigen::VectorXd gx = qp.G * sol.x - qp.h;
            primal = std::max(primal, gx.cwiseMax(0.0).maxCoeff());
            res.compSlack = (sol.lambda.array() * gx.array()).abs().maxCoeff();
            res.dual = std::max(0.0, -sol.lambda.minCoeff());
        }
        if (mE > 0)
        {
            primal = std::max(primal, (qp.L * sol.x - qp.m).cwiseAbs().maxCoeff());
        }
        res.primal = primal;
        return res;
    }

    QpSolution DenseQpSolver::solve(const ParametricQp &qp, const QpSolution *warm)
    {
        ++solves;
        const int N = qp.numVariables();
        const int mI = qp.numInequalities();
        const int mE = qp.numEqualities();
        if (qp.q.size() != N || qp.h.size() != mI || qp.m.size() != mE ||
            (mI > 0 && qp.G.cols() != N) || (mE > 0 && qp.L.cols() != N))
        {
            throw std::invalid_argument("DenseQpSolver: inconsistent shapes");
        }
        if (!qp.P.allFinite() || !qp.q.allFinite() ||
            (mI > 0 && (!qp.G.allFinite() || !qp.h.allFinite())) ||
            (mE > 0 && (!qp.L.allFinite() || !qp.m.allFinite())))
        {
            throw std::invalid_argument("DenseQpSolver: non-finite input");
        }

        const Eigen::MatrixXd Ps = 0.5 * (qp.P + qp.P.transpose());
        const double tol = options.tol;

        auto makeInfeasible = [&]()
        {
            QpSolution bad;
            bad.x = Eigen::VectorXd::Zero(N);
            bad.lambda = Eigen::VectorXd::Zero(mI);
            bad.mu = Eigen::VectorXd::Zero(mE);
            bad.status = QpStatus::Infeasible;
            return bad;
        };

        // Scale constraint rows to unit norm; zero rows are handled here and
        // excluded from the solve.
        std::vector<int> gKeep, lKeep;
        gKeep.reserve(mI);
        lKeep.reserve(mE);
        Eigen::VectorXd gScale(mI), lScale(mE);
        for (int i = 0; i < mI; ++i)
        {
            const double s = qp.G.row(i).norm();
            gScale(i) = s;
            if (s > 0.0)
            {
                gKeep.push_back(i);
            }
            else if (qp.h(i) < -tol)
            {
                return makeInfeasible();
            }
        }
        for (int j = 0; j < mE; ++j)
        {
            const double s = qp.L.row(j).norm();
            lScale(j) = s;
            if (s > 0.0)
            {
                lKeep.push_back(j);
            }
            else if (std::abs(qp.m(j)) > tol)
            {
                return makeInfeasible();
            }
        }
        const int mIr = static_cast<int>(gKeep.size());
        const int mEr = static_cast<int>(lKeep.size());

        Eigen::MatrixXd Gs(mIr, N);
        Eigen::VectorXd hs(mIr);
        for (int i = 0; i < mIr; ++i)
        {
            const int row = gKeep[i];
            Gs.row(i) = qp.G.row(row) / gScale(row);
            hs(i) = qp.h(row) / gScale(row);
        }
        Eigen::MatrixXd Ls(mEr, N);
        Eigen::VectorXd ms(mEr);
        for (int j = 0; j < mEr; ++j)
        {
            const int row = lKeep[j];
            Ls.row(j) = qp.L.row(row) / lScale(row);
            ms(j) = qp.m(row) / lScale(row);
        }

        // Eliminate equalities: x = xPart + Z u with Z an orthonormal basis
        // of the null space of Ls.
        Eigen::VectorXd xPart = Eigen::VectorXd::Zero(N);
        Eigen::MatrixXd Z;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> eqQr;
        int rankE = 0;
        if (mEr > 0)
        {
            eqQr.compute(Ls.transpose());
            rankE = static_cast<int>(eqQr.rank());
            const Eigen::MatrixXd Qfull =
                eqQr.householderQ() * Eigen::MatrixXd::Identity(N, N);
            if (rankE > 0)
            {
                const Eigen::VectorXd rhs = eqQr.colsPermutation().transpose() * ms;
                const Eigen::VectorXd w =
                    eqQr.matrixR()
                        .topLeftCorner(rankE, rankE)
                        .triangularView<Eigen::Upper>()
                        .transpose()
                        .solve(rhs.head(rankE));
                xPart = Qfull.leftCols(rankE) * w;
            }
            if ((Ls * xPart - ms).cwiseAbs().maxCoeff() > tol)
            {
                return makeInfeasible();
            }
            Z = Qfull.rightCols(N - rankE);
        }
        else
        {
            Z = Eigen::MatrixXd::Identity(N, N);
        }
        const int nr = static_cast<int>(Z.cols());

        Eigen::MatrixXd Ar;
        Eigen::VectorXd br;
        if (mIr > 0)
        {
            Ar.noalias() = Gs * Z;
            br = hs - Gs * xPart;
        }
        else
        {
            Ar.resize(0, nr);
            br.resize(0);
        }

        // multipliers of the scaled equalities from stationarity, via the
        // least-squares solve against Ls^T
        auto recoverMu = [&](const Eigen::VectorXd &x, const Eigen::VectorXd &lambda)
        {
            Eigen::VectorXd mu = Eigen::VectorXd::Zero(mE);
            if (mEr == 0)
            {
                return mu;
            }
            Eigen::VectorXd grad = Ps * x + qp.q;
            if (mI > 0)
            {
                grad.noalias() += qp.G.transpose() * lambda;
            }
            const Eigen::VectorXd muScaled = eqQr.solve(-grad);
            for (int j = 0; j < mEr; ++j)
            {
                mu(lKeep[j]) = muScaled(j) / lScale(lKeep[j]);
            }
            return mu;
        };

        struct Candidate
        {
            Eigen::VectorXd x, lambda, mu;
            KktResidual resid;
        };

        auto finishCandidate = [&](Candidate cand)
        {
            QpSolution probe;
            probe.x = cand.x;
            probe.lambda = cand.lambda;
            probe.mu = cand.mu;
            cand.resid = kktResidual(qp, probe);
            return cand;
        };

        auto makeCandidate = [&](const Eigen::VectorXd &u,
                                 const std::vector<int> &active,
                                 const Eigen::VectorXd &dualActive)
        {
            Candidate cand;
            cand.x = xPart + Z * u;
            cand.lambda = Eigen::VectorXd::Zero(mI);
            for (size_t k = 0; k < active.size(); ++k)
            {
                const int row = gKeep[active[k]];
                cand.lambda(row) = dualActive(static_cast<int>(k)) / gScale(row);
            }
            cand.mu = recoverMu(cand.x, cand.lambda);
            return finishCandidate(std::move(cand));
        };

        auto acceptable = [&](const Candidate &cand)
        {
            return cand.resid.stationarity <= tol && cand.resid.primal <= tol &&
                   cand.resid.dual <= 1e-10 && cand.resid.compSlack <= tol;
        };

        const Eigen::MatrixXd H = Z.transpose() * Ps * Z;
        const Eigen::VectorXd gr = Z.transpose() * (Ps * xPart + qp.q);

        // Equality-constrained solve over a guessed active set, in the full
        // space so the equality rows are met to machine precision (their
        // multipliers can be large, and any slack there leaks straight into
        // the objective at first order). Seeds warm starts and polishes the
        // active-set result.
        auto solveWithActiveSet = [&](const std::vector<int> &active)
            -> std::optional<Candidate>
        {
            const int na = static_cast<int>(active.size());
            if (na + rankE > N)
            {
                return std::nullopt;
            }
            const int dim = N + na + mEr;
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
            kkt.topLeftCorner(N, N) = Ps;
            Eigen::VectorXd rhs(dim);
            rhs.head(N) = -qp.q;
            for (int k = 0; k < na; ++k)
            {
                kkt.block(N + k, 0, 1, N) = Gs.row(active[k]);
                kkt.block(0, N + k, N, 1) = Gs.row(active[k]).transpose();
                rhs(N + k) = hs(active[k]);
            }
            for (int j = 0; j < mEr; ++j)
            {
                kkt.block(N + na + j, 0, 1, N) = Ls.row(j);
                kkt.block(0, N + na + j, N, 1) = Ls.row(j).transpose();
                rhs(N + na + j) = ms(j);
            }
            const Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
            Eigen::VectorXd sol = lu.solve(rhs);
            if (!sol.allFinite())
            {
                return std::nullopt;
            }
            // two steps of iterative refinement; the objective is consumed by
            // finite differences, so the residual has to go to the floor
            sol += lu.solve(rhs - kkt * sol);
            sol += lu.solve(rhs - kkt * sol);

            Candidate cand;
            cand.x = sol.head(N);
            cand.lambda = Eigen::VectorXd::Zero(mI);
            for (int k = 0; k < na; ++k)
            {
                const int row = gKeep[active[k]];
                cand.lambda(row) = sol(N + k) / gScale(row);
            }
            cand.mu = Eigen::VectorXd::Zero(mE);
            for (int j = 0; j < mEr; ++j)
            {
                cand.mu(lKeep[j]) = sol(N + na + j) / lScale(lKeep[j]);
            }
            return finishCandidate(std::move(cand));
        };

        auto finalize = [&](Candidate cand, int iterations)
        {
            QpSolution out;
            out.x = std::move(cand.x);
            out.lambda = std::move(cand.lambda);
            out.mu = std::move(cand.mu);
            out.objective = quadObjective(Ps, qp.q, qp.c, out.x);
            out.iterations = iterations;
            out.status = acceptable(cand) ? QpStatus::Optimal : QpStatus::MaxIter;
            if (mI > 0)
            {
                const Eigen::VectorXd slack = qp.h - qp.G * out.x;
                for (int i = 0; i < mI; ++i)
                {
                    if (slack(i) <= options.activeTol || out.lambda(i) > options.activeTol)
                    {
                        out.activeSet.push_back(i);
                    }
                }
            }
            return out;
        };

        // Warm pass: re-solve on the previous strictly-active rows and accept
        // if the KKT conditions already hold.
        if (warm != nullptr && warm->lambda.size() == mI && mI > 0)
        {
            std::vector<int> seed;
            std::vector<int> posOf(mI, -1);
            for (int i = 0; i < mIr; ++i)
            {
                posOf[gKeep[i]] = i;
            }
            for (int i = 0; i < mI; ++i)
            {
                if (warm->lambda(i) > options.activeTol && posOf[i] >= 0)
                {
                    seed.push_back(posOf[i]);
                }
            }
            if (const auto cand = solveWithActiveSet(seed))
            {
                if (acceptable(*cand))
                {
                    return finalize(*cand, 1);
                }
            }
        }

        // Cold pass: factor the reduced Hessian, regularizing only if it is
        // not numerically positive definite. The ladder ends at levels scaled
        // to the diagonal so that extreme duration ratios still factor; an
        // unfactorable Hessian degrades to a MaxIter result instead of
        // aborting a caller mid line search.
        Eigen::LLT<Eigen::MatrixXd> llt;
        const double hScale = nr > 0 ? std::max(1.0, H.diagonal().maxCoeff()) : 1.0;
        const double regLadder[] = {0.0, options.regEps, 1e-12 * hScale,
                                    1e-9 * hScale, 1e-6 * hScale};
        bool factored = false;
        for (double reg : regLadder)
        {
            Eigen::MatrixXd Hreg = H;
            if (reg > 0.0)
            {
                Hreg.diagonal().array() += reg;
            }
            llt.compute(Hreg);
            // accept any strictly positive pivot sequence; ill conditioning is
            // caught later by the residual checks, not here
            factored = llt.info() == Eigen::Success &&
                       (nr == 0 || llt.matrixLLT().diagonal().minCoeff() > 0.0);
            if (factored)
            {
                break;
            }
        }
        if (!factored)
        {
            QpSolution bad;
            bad.x = xPart;
            bad.lambda = Eigen::VectorXd::Zero(mI);
            bad.mu = Eigen::VectorXd::Zero(mE);
            bad.status = QpStatus::MaxIter;
            return bad;
        }

        const int cap = options.maxIterations > 0
                            ? options.maxIterations
                            : 50 + 10 * (nr + mIr);
        const GiResult gi = solveGi(llt, gr, Ar, br, cap);
        if (!gi.feasible)
        {
            return makeInfeasible();
        }

        Eigen::VectorXd dualActive(gi.active.size());
        for (size_t k = 0; k < gi.active.size(); ++k)
        {
            dualActive(static_cast<int>(k)) = gi.dual[k];
        }
        Candidate cand = makeCandidate(gi.u, gi.active, dualActive);

        // Polish on the identified active set in the full space; the
        // active-set iteration pins which constraints bind, the KKT re-solve
        // pins the numbers.
        if (!gi.hitCap)
        {
            if (const auto polished = solveWithActiveSet(gi.active))
            {
                if (polished->resid.maxAbs() <= cand.resid.maxAbs())
                {
                    cand = *polished;
                }
            }
        }

        QpSolution out = finalize(std::move(cand), gi.iterations);
        if (gi.hitCap)
        {
            out.status = QpStatus::MaxIter;
        }
        return out;
    }

    QpSolution bruteForce(const ParametricQp &qp)
    {
        const int N = qp.numVariables();
        const int mI = qp.numInequalities();
        const int mE = qp.numEqualities();
        if (mI > 20)
        {
            throw std::invalid_argument("bruteForce: too many inequalities to enumerate");
        }

        const Eigen::MatrixXd Ps = 0.5 * (qp.P + qp.P.transpose());
        const double feasTol = 1e-9;

        QpSolution best;
        best.status = QpStatus::Infeasible;
        best.x = Eigen::VectorXd::Zero(N);
        best.lambda = Eigen::VectorXd::Zero(mI);
        best.mu = Eigen::VectorXd::Zero(mE);
        bool found = false;

        std::vector<int> subset;
        for (unsigned mask = 0; mask < (1u << mI); ++mask)
        {
            subset.clear();
            for (int i = 0; i < mI; ++i)
            {
                if (mask & (1u << i))
                {
                    subset.push_back(i);
                }
            }
            const int na = static_cast<int>(subset.size());
            if (na + mE > N)
            {
                continue;
            }

            const int dim = N + na + mE;
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
            Eigen::VectorXd rhs(dim);
            kkt.topLeftCorner(N, N) = Ps;
            rhs.head(N) = -qp.q;
            for (int k = 0; k < na; ++k)
            {
                kkt.block(N + k, 0, 1, N) = qp.G.row(subset[k]);
                kkt.block(0, N + k, N, 1) = qp.G.row(subset[k]).transpose();
                rhs(N + k) = qp.h(subset[k]);
            }
            for (int j = 0; j < mE; ++j)
            {
                kkt.block(N + na + j, 0, 1, N) = qp.L.row(j);
                kkt.block(0, N + na + j, N, 1) = qp.L.row(j).transpose();
                rhs(N + na + j) = qp.m(j);
            }

            Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
            if (!lu.isInvertible())
            {
                continue;
            }
            const Eigen::VectorXd sol = lu.solve(rhs);
            const Eigen::VectorXd x = sol.head(N);

            bool ok = true;
            for (int k = 0; k < na && ok; ++k)
            {
                ok = sol(N + k) >= -feasTol;
            }
            if (ok && mI > 0)
            {
                const Eigen::VectorXd slack = qp.h - qp.G * x;
                ok = slack.minCoeff() >= -feasTol * (1.0 + qp.h.cwiseAbs().maxCoeff());
            }
            if (ok && mE > 0)
            {
                ok = (qp.L * x - qp.m).cwiseAbs().maxCoeff() <=
                     feasTol * (1.0 + qp.m.cwiseAbs().maxCoeff());
            }
            if (!ok)
            {
                continue;
            }

            const double obj = quadObjective(Ps, qp.q, qp.c, x);
            if (!found || obj < best.objective)
            {
                found = true;
                best.objective = obj;
                best.x = x;
                best.lambda.setZero();
                for (int k = 0; k < na; ++k)
                {
                    best.lambda(subset[k]) = sol(N + k);
                }
                best.mu = sol.tail(mE);
            }
        }

        if (found)
        {
            best.status = QpStatus::Optimal;
            if (mI > 0)
            {
                const Eigen::VectorXd slack = qp.h - qp.G * best.x;
                for (int i = 0; i < mI; ++i)
                {
                    if (slack(i) <= 1e-7 || best.lambda(i) > 1e-7)
                    {
                        best.activeSet.push_back(i);
                    }
                }
            }
        }
        return best;
    }

} // namespace trajtime
