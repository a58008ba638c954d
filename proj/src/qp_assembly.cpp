#include "trajtime/qp_assembly.hpp"

#include <cmath>
#include <string>

namespace trajtime
{

    bool Box::contains(const Eigen::VectorXd &p, double tol) const
    {
        return (p.array() >= lo.array() - tol).all() &&
               (p.array() <= hi.array() + tol).all();
    }

    Box intersect(const Box &a, const Box &b)
    {
        Box out;
        out.lo = a.lo.cwiseMax(b.lo);
        out.hi = a.hi.cwiseMin(b.hi);
        return out;
    }

    bool hasPositiveVolume(const Box &b)
    {
        return b.lo.size() > 0 && ((b.hi - b.lo).array() > 0.0).all();
    }

    bool TimingConstraints::satisfied(const Eigen::VectorXd &y, double tol) const
    {
        if (A.rows() > 0 && ((A * y - b).array() > tol).any())
        {
            return false;
        }
        if (C.rows() > 0 && (C * y - d).cwiseAbs().maxCoeff() > tol)
        {
            return false;
        }
        return true;
    }

    void Corridor::validate() const
    {
        if (boxes.empty())
        {
            throw ValidationError("boxes", "corridor needs at least one box");
        }
        const int D = boxes.front().dim();
        for (size_t i = 0; i < boxes.size(); ++i)
        {
            const std::string path = "boxes[" + std::to_string(i) + "]";
            if (boxes[i].lo.size() != D || boxes[i].hi.size() != D)
            {
                throw ValidationError(path, "dimension mismatch");
            }
            if (((boxes[i].hi - boxes[i].lo).array() < 0.0).any())
            {
                throw ValidationError(path, "max must be >= min per axis");
            }
            if (i > 0 && !hasPositiveVolume(intersect(boxes[i - 1], boxes[i])))
            {
                throw ValidationError(path, "no positive-volume overlap with boxes[" +
                                                std::to_string(i - 1) + "]");
            }
        }
        auto checkState = [&](const BoundaryState &s, const std::string &name)
        {
            if (s.pos.size() != D || s.vel.size() != D || s.acc.size() != D)
            {
                throw ValidationError(name, "state dimension mismatch");
            }
        };
        checkState(start, "start");
        if (!boxes.front().contains(start.pos))
        {
            throw ValidationError("start.pos", "outside the first box");
        }
        if (goal)
        {
            checkState(*goal, "goal");
            if (!boxes.back().contains(goal->pos))
            {
                throw ValidationError("goal.pos", "outside the last box");
            }
        }
        if (vmax.size() != D || amax.size() != D)
        {
            throw ValidationError("vmax", "bound dimension mismatch");
        }
        if ((vmax.array() < 0.0).any() || (amax.array() < 0.0).any())
        {
            throw ValidationError("vmax", "bounds must be nonnegative");
        }
    }

    VariableLayout layoutFor(const Corridor &corridor, const AssembleOptions &opts)
    {
        return VariableLayout{corridor.numSegments(), opts.degree, corridor.dim()};
    }

    namespace
    {

        using Triplets = std::vector<Eigen::Triplet<double>>;

    } // namespace

    ParametricQp assemble(const Corridor &corridor, const TimeAllocation &y,
                          const AssembleOptions &opts)
    {
        const int n = corridor.numSegments();
        const int D = corridor.dim();
        const int d = opts.degree;
        if (d < 3)
        {
            throw std::invalid_argument("assemble: degree must be >= 3 for a jerk objective");
        }
        if (y.size() != n)
        {
            throw AssemblyError("assemble: durations count does not match box count");
        }
        if ((y.durations.array() < opts.yMin - 1e-12).any())
        {
            throw AssemblyError("assemble: durations below the y_min floor");
        }
        if (n == 0 || !corridor.boxes.front().contains(corridor.start.pos))
        {
            throw AssemblyError("assemble: start position outside the first box");
        }
        if (corridor.goal && !corridor.boxes.back().contains(corridor.goal->pos))
        {
            throw AssemblyError("assemble: goal position outside the last box");
        }

        const VariableLayout lay{n, d, D};
        const int N = lay.count();
        const int mE = D * (3 + 3 * (n - 1) + (corridor.goal ? 3 : 0));
        const int mI = n * D * 6 * d;

        ParametricQp qp;
        qp.P = Eigen::MatrixXd::Zero(N, N);
        qp.q = Eigen::VectorXd::Zero(N);
        qp.c = 0.0;
        qp.G = Eigen::MatrixXd::Zero(mI, N);
        qp.h = Eigen::VectorXd::Zero(mI);
        qp.L = Eigen::MatrixXd::Zero(mE, N);
        qp.m = Eigen::VectorXd::Zero(mE);

        std::vector<Triplets> tP(n), tG(n), tL(n);

        // derivative control-point factors and their duration partials
        auto velFactor = [&](int i) { return static_cast<double>(d) / y.durations(i); };
        auto dVelFactor = [&](int i)
        { return -static_cast<double>(d) / (y.durations(i) * y.durations(i)); };
        auto accFactor = [&](int i)
        {
            const double dt = y.durations(i);
            return static_cast<double>(d) * (d - 1) / (dt * dt);
        };
        auto dAccFactor = [&](int i)
        {
            const double dt = y.durations(i);
            return -2.0 * d * (d - 1) / (dt * dt * dt);
        };

        // objective: block-diagonal squared-jerk cost, f = 0.5 x^T P x
        for (int i = 0; i < n; ++i)
        {
            const JerkCost jc = jerkCostMatrix(y.durations(i), d);
            for (int a = 0; a < D; ++a)
            {
                const int base = lay.index(i, a, 0);
                qp.P.block(base, base, d + 1, d + 1) = 2.0 * jc.Q;
                for (int r = 0; r <= d; ++r)
                {
                    for (int cidx = 0; cidx <= d; ++cidx)
                    {
                        if (jc.dQ(r, cidx) != 0.0)
                        {
                            tP[i].emplace_back(base + r, base + cidx, 2.0 * jc.dQ(r, cidx));
                        }
                    }
                }
            }
        }

        int row = 0;
        auto eqEntry = [&](int col, double val, int seg, double dval)
        {
            qp.L(row, col) = val;
            if (dval != 0.0)
            {
                tL[seg].emplace_back(row, col, dval);
            }
        };

        // boundary conditions at t = 0
        for (int a = 0; a < D; ++a)
        {
            qp.L(row, lay.index(0, a, 0)) = 1.0;
            qp.m(row) = corridor.start.pos(a);
            ++row;
        }
        for (int a = 0; a < D; ++a)
        {
            eqEntry(lay.index(0, a, 1), velFactor(0), 0, dVelFactor(0));
            eqEntry(lay.index(0, a, 0), -velFactor(0), 0, -dVelFactor(0));
            qp.m(row) = corridor.start.vel(a);
            ++row;
        }
        for (int a = 0; a < D; ++a)
        {
            eqEntry(lay.index(0, a, 2), accFactor(0), 0, dAccFactor(0));
            eqEntry(lay.index(0, a, 1), -2.0 * accFactor(0), 0, -2.0 * dAccFactor(0));
            eqEntry(lay.index(0, a, 0), accFactor(0), 0, dAccFactor(0));
            qp.m(row) = corridor.start.acc(a);
            ++row;
        }

        // position/velocity/acceleration continuity at the interior knots
        for (int i = 0; i + 1 < n; ++i)
        {
            for (int a = 0; a < D; ++a)
            {
                qp.L(row, lay.index(i, a, d)) = 1.0;
                qp.L(row, lay.index(i + 1, a, 0)) = -1.0;
                ++row;
            }
            for (int a = 0; a < D; ++a)
            {
                eqEntry(lay.index(i, a, d), velFactor(i), i, dVelFactor(i));
                eqEntry(lay.index(i, a, d - 1), -velFactor(i), i, -dVelFactor(i));
                eqEntry(lay.index(i + 1, a, 1), -velFactor(i + 1), i + 1, -dVelFactor(i + 1));
                eqEntry(lay.index(i + 1, a, 0), velFactor(i + 1), i + 1, dVelFactor(i + 1));
                ++row;
            }
            for (int a = 0; a < D; ++a)
            {
                eqEntry(lay.index(i, a, d), accFactor(i), i, dAccFactor(i));
                eqEntry(lay.index(i, a, d - 1), -2.0 * accFactor(i), i, -2.0 * dAccFactor(i));
                eqEntry(lay.index(i, a, d - 2), accFactor(i), i, dAccFactor(i));
                eqEntry(lay.index(i + 1, a, 2), -accFactor(i + 1), i + 1, -dAccFactor(i + 1));
                eqEntry(lay.index(i + 1, a, 1), 2.0 * accFactor(i + 1), i + 1, 2.0 * dAccFactor(i + 1));
                eqEntry(lay.index(i + 1, a, 0), -accFactor(i + 1), i + 1, -dAccFactor(i + 1));
                ++row;
            }
        }

        // boundary conditions at t = T
        if (corridor.goal)
        {
            const int last = n - 1;
            for (int a = 0; a < D; ++a)
            {
                qp.L(row, lay.index(last, a, d)) = 1.0;
                qp.m(row) = corridor.goal->pos(a);
                ++row;
            }
            for (int a = 0; a < D; ++a)
            {
                eqEntry(lay.index(last, a, d), velFactor(last), last, dVelFactor(last));
                eqEntry(lay.index(last, a, d - 1), -velFactor(last), last, -dVelFactor(last));
                qp.m(row) = corridor.goal->vel(a);
                ++row;
            }
            for (int a = 0; a < D; ++a)
            {
                eqEntry(lay.index(last, a, d), accFactor(last), last, dAccFactor(last));
                eqEntry(lay.index(last, a, d - 1), -2.0 * accFactor(last), last, -2.0 * dAccFactor(last));
                eqEntry(lay.index(last, a, d - 2), accFactor(last), last, dAccFactor(last));
                qp.m(row) = corridor.goal->acc(a);
                ++row;
            }
        }

        // control-point containment and derivative bounds
        row = 0;
        auto ineqEntry = [&](int col, double val, int seg, double dval)
        {
            qp.G(row, col) = val;
            if (dval != 0.0)
            {
                tG[seg].emplace_back(row, col, dval);
            }
        };

        for (int i = 0; i < n; ++i)
        {
            for (int a = 0; a < D; ++a)
            {
                for (int j = 0; j <= d; ++j)
                {
                    qp.G(row, lay.index(i, a, j)) = 1.0;
                    qp.h(row) = corridor.boxes[i].hi(a);
                    ++row;
                }
                for (int j = 0; j <= d; ++j)
                {
                    qp.G(row, lay.index(i, a, j)) = -1.0;
                    qp.h(row) = -corridor.boxes[i].lo(a);
                    ++row;
                }
                for (int j = 0; j < d; ++j)
                {
                    ineqEntry(lay.index(i, a, j + 1), velFactor(i), i, dVelFactor(i));
                    ineqEntry(lay.index(i, a, j), -velFactor(i), i, -dVelFactor(i));
                    qp.h(row) = corridor.vmax(a);
                    ++row;
                }
                for (int j = 0; j < d; ++j)
                {
                    ineqEntry(lay.index(i, a, j + 1), -velFactor(i), i, -dVelFactor(i));
                    ineqEntry(lay.index(i, a, j), velFactor(i), i, dVelFactor(i));
                    qp.h(row) = corridor.vmax(a);
                    ++row;
                }
                for (int j = 0; j + 1 < d; ++j)
                {
                    ineqEntry(lay.index(i, a, j + 2), accFactor(i), i, dAccFactor(i));
                    ineqEntry(lay.index(i, a, j + 1), -2.0 * accFactor(i), i, -2.0 * dAccFactor(i));
                    ineqEntry(lay.index(i, a, j), accFactor(i), i, dAccFactor(i));
                    qp.h(row) = corridor.amax(a);
                    ++row;
                }
                for (int j = 0; j + 1 < d; ++j)
                {
                    ineqEntry(lay.index(i, a, j + 2), -accFactor(i), i, -dAccFactor(i));
                    ineqEntry(lay.index(i, a, j + 1), 2.0 * accFactor(i), i, 2.0 * dAccFactor(i));
                    ineqEntry(lay.index(i, a, j), -accFactor(i), i, -dAccFactor(i));
                    qp.h(row) = corridor.amax(a);
                    ++row;
                }
            }
        }

        qp.dP.resize(n);
        qp.dG.resize(n);
        qp.dL.resize(n);
        qp.dq.assign(n, Eigen::VectorXd::Zero(N));
        qp.dh.assign(n, Eigen::VectorXd::Zero(mI));
        qp.dm.assign(n, Eigen::VectorXd::Zero(mE));
        qp.dc = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < n; ++k)
        {
            qp.dP[k].resize(N, N);
            qp.dP[k].setFromTriplets(tP[k].begin(), tP[k].end());
            qp.dG[k].resize(mI, N);
            qp.dG[k].setFromTriplets(tG[k].begin(), tG[k].end());
            qp.dL[k].resize(mE, N);
            qp.dL[k].setFromTriplets(tL[k].begin(), tL[k].end());
        }
        return qp;
    }

    TimeAllocation initialTimes(const Corridor &corridor, double T,
                                const AssembleOptions &opts)
    {
        const int n = corridor.numSegments();
        if (!(T > n * opts.yMin))
        {
            throw ValidationError("total_time", "must exceed n * y_min");
        }

        // waypoints: start, overlap-region centers, then goal or last center
        std::vector<Eigen::VectorXd> wp;
        wp.push_back(corridor.start.pos);
        for (int i = 0; i + 1 < n; ++i)
        {
            wp.push_back(intersect(corridor.boxes[i], corridor.boxes[i + 1]).center());
        }
        wp.push_back(corridor.goal ? corridor.goal->pos : corridor.boxes.back().center());

        Eigen::VectorXd dist(n);
        for (int i = 0; i < n; ++i)
        {
            dist(i) = (wp[i + 1] - wp[i]).norm();
        }
        const double total = dist.sum();
        Eigen::VectorXd weights = total > 1e-12
                                      ? Eigen::VectorXd(dist / total)
                                      : Eigen::VectorXd(Eigen::VectorXd::Constant(n, 1.0 / n));

        // proportional split, then water-fill so every entry clears yMin
        Eigen::VectorXd y = T * weights;
        std::vector<char> floored(n, 0);
        for (int round = 0; round < n; ++round)
        {
            double flooredMass = 0.0;
            double freeWeight = 0.0;
            bool changed = false;
            for (int i = 0; i < n; ++i)
            {
                if (!floored[i] && y(i) < opts.yMin)
                {
                    floored[i] = 1;
                    changed = true;
                }
                if (floored[i])
                {
                    flooredMass += opts.yMin;
                }
                else
                {
                    freeWeight += weights(i);
                }
            }
            if (!changed && round > 0)
            {
                break;
            }
            const double remaining = T - flooredMass;
            for (int i = 0; i < n; ++i)
            {
                y(i) = floored[i] ? opts.yMin
                                  : remaining * weights(i) / freeWeight;
            }
        }
        // nail the sum exactly on the largest entry
        int imax = 0;
        y.maxCoeff(&imax);
        y(imax) += T - y.sum();
        return TimeAllocation{y};
    }

    TimingConstraints timingConstraints(int n, std::optional<double> T, double yMin)
    {
        if (n < 1)
        {
            throw std::invalid_argument("timingConstraints: n must be >= 1");
        }
        TimingConstraints tc;
        tc.A = -Eigen::MatrixXd::Identity(n, n);
        tc.b = Eigen::VectorXd::Constant(n, -yMin);
        if (T)
        {
            if (!(*T > n * yMin))
            {
                throw ValidationError("total_time", "must exceed n * y_min");
            }
            tc.C = Eigen::MatrixXd::Ones(1, n);
            tc.d = Eigen::VectorXd::Constant(1, *T);
        }
        else
        {
            tc.C.resize(0, n);
            tc.d.resize(0);
        }
        return tc;
    }

    BezierSpline splineFromPrimal(const Eigen::VectorXd &x, const TimeAllocation &y,
                                  const VariableLayout &layout)
    {
        if (x.size() != layout.count() || y.size() != layout.segments)
        {
            throw std::invalid_argument("splineFromPrimal: shape mismatch");
        }
        std::vector<BezierSegment> segs;
        segs.reserve(layout.segments);
        for (int i = 0; i < layout.segments; ++i)
        {
            Eigen::MatrixXd ctrl(layout.degree + 1, layout.dim);
            for (int a = 0; a < layout.dim; ++a)
            {
                for (int j = 0; j <= layout.degree; ++j)
                {
                    ctrl(j, a) = x(layout.index(i, a, j));
                }
            }
            segs.emplace_back(std::move(ctrl), y.durations(i));
        }
        return BezierSpline(std::move(segs));
    }

} // namespace trajtime
