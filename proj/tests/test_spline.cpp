#include "trajtime/spline.hpp"

#include "support/test_helpers.hpp"

#include <doctest.h>

using namespace trajtime;
using testsupport::Rng;

namespace
{

    BezierSegment randomSegment(std::uint64_t seed, int degree = 6, int dim = 3,
                                double duration = 1.3)
    {
        Rng rng(seed);
        return BezierSegment(rng.matrix(degree + 1, dim, -2.0, 2.0), duration);
    }

    // degree-d Bernstein control points of a0 + a1*s + a2*s^2
    Eigen::VectorXd quadraticCtrl(int d, double a0, double a1, double a2)
    {
        Eigen::VectorXd c(d + 1);
        for (int j = 0; j <= d; ++j)
        {
            c(j) = a0 + a1 * static_cast<double>(j) / d +
                   a2 * static_cast<double>(j) * (j - 1) / (static_cast<double>(d) * (d - 1));
        }
        return c;
    }

} // namespace

TEST_CASE("constant segment evaluates to its control point")
{
    const Eigen::RowVector3d p(0.7, -1.2, 3.0);
    BezierSegment seg(p.replicate(7, 1), 2.0);
    for (double t : {0.0, 0.3, 1.0, 2.0})
    {
        CHECK((seg.evalLocal(t, 0).transpose() - p).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("evenly spaced collinear control points give constant velocity")
{
    const Eigen::RowVector3d a(0.0, 1.0, -2.0);
    const Eigen::RowVector3d b(3.0, -1.0, 0.5);
    const int d = 6;
    Eigen::MatrixXd ctrl(d + 1, 3);
    for (int j = 0; j <= d; ++j)
    {
        ctrl.row(j) = a + (static_cast<double>(j) / d) * (b - a);
    }
    BezierSegment seg(ctrl, 1.0);
    for (double t : {0.0, 0.37, 0.9, 1.0})
    {
        const Eigen::VectorXd v = seg.evalLocal(t, 1);
        CHECK((v.transpose() - (b - a)).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("time derivatives agree with a five-point stencil of the next-lower order")
{
    const BezierSegment seg = randomSegment(42);
    const double t = 0.37;
    const double h = 1e-5;
    for (int order = 1; order <= 3; ++order)
    {
        for (int axis = 0; axis < 3; ++axis)
        {
            const double got = seg.evalLocal(t, order)(axis);
            const double ref = testsupport::stencilDerivative(
                [&](double tt) { return seg.evalLocal(tt, order - 1)(axis); }, t, h);
            CHECK(testsupport::relErr(got, ref) < 1e-6);
        }
    }
}

TEST_CASE("derivativeCtrl basics")
{
    SUBCASE("constant segment differentiates to zero")
    {
        const Eigen::RowVector3d p(1.0, 2.0, 3.0);
        const BezierSegment dseg = derivativeCtrl(BezierSegment(p.replicate(7, 1), 1.5));
        CHECK(dseg.degree() == 5);
        CHECK(dseg.ctrl.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("degree-1 segment (0,2) over dt=2 has slope 1")
    {
        Eigen::MatrixXd ctrl(2, 1);
        ctrl << 0.0, 2.0;
        const BezierSegment dseg = derivativeCtrl(BezierSegment(ctrl, 2.0));
        CHECK(dseg.degree() == 0);
        CHECK(dseg.ctrl(0, 0) == doctest::Approx(1.0));
        CHECK(dseg.duration == 2.0);
    }
    SUBCASE("evaluating the hodograph matches the order-1 derivative")
    {
        const BezierSegment seg = randomSegment(7);
        const BezierSegment dseg = derivativeCtrl(seg);
        for (double t : {0.0, 0.31, 0.87, 1.3})
        {
            const Eigen::VectorXd lhs = dseg.evalLocal(t, 0);
            const Eigen::VectorXd rhs = seg.evalLocal(t, 1);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
        }
        CHECK_THROWS_AS(derivativeCtrl(derivativeCtrl(
                            BezierSegment(Eigen::MatrixXd::Zero(2, 1), 1.0))),
                        std::invalid_argument);
    }
}

TEST_CASE("jerk cost matrix")
{
    SUBCASE("vanishes on quadratic control points")
    {
        for (int d : {3, 4, 6, 8})
        {
            const Eigen::VectorXd c = quadraticCtrl(d, 1.7, -0.9, 2.3);
            const JerkCost jc = jerkCostMatrix(0.7, d);
            // zero up to rounding in the control points themselves
            CHECK(std::abs(c.dot(jc.Q * c)) < 1e-8);
        }
    }
    SUBCASE("dt scaling law is exact")
    {
        const JerkCost a = jerkCostMatrix(0.8, 6);
        const JerkCost b = jerkCostMatrix(1.6, 6);
        CHECK((b.Q - a.Q / 32.0).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("matches Gauss-Legendre quadrature of the squared third derivative")
    {
        Rng rng(99);
        const double dt = 0.8;
        const int d = 6;
        const Eigen::VectorXd c = rng.vector(d + 1, -2.0, 2.0);
        const BezierSegment seg(c, dt);
        const double viaQ = c.dot(jerkCostMatrix(dt, d).Q * c);
        const double viaQuad = testsupport::integrate(
            [&](double t)
            {
                const double j = seg.evalLocal(t, 3)(0);
                return j * j;
            },
            0.0, dt, 32);
        CHECK(std::abs(viaQ - viaQuad) < 1e-9 * std::max(1.0, std::abs(viaQuad)));
    }
    SUBCASE("dQ matches a central difference in dt")
    {
        for (double dt : {0.1, 0.5, 1.0, 3.0, 10.0})
        {
            const double h = 1e-6 * dt;
            const JerkCost jc = jerkCostMatrix(dt, 6);
            const Eigen::MatrixXd fd =
                (jerkCostMatrix(dt + h, 6).Q - jerkCostMatrix(dt - h, 6).Q) / (2.0 * h);
            const double denom = jc.dQ.cwiseAbs().maxCoeff();
            CHECK((jc.dQ - fd).cwiseAbs().maxCoeff() < 1e-6 * denom);
        }
    }
    SUBCASE("domain errors")
    {
        CHECK_THROWS_AS(jerkCostMatrix(0.0, 6), std::domain_error);
        CHECK_THROWS_AS(jerkCostMatrix(-1.0, 6), std::domain_error);
        CHECK_THROWS_AS(jerkCostMatrix(1.0, 2), std::invalid_argument);
    }
}

TEST_CASE("sampled convex-hull containment")
{
    const BezierSegment seg = randomSegment(1234);
    const Eigen::VectorXd lo = seg.ctrl.colwise().minCoeff();
    const Eigen::VectorXd hi = seg.ctrl.colwise().maxCoeff();
    for (int k = 0; k <= 1000; ++k)
    {
        const double t = seg.duration * k / 1000.0;
        const Eigen::VectorXd p = seg.evalLocal(t, 0);
        CHECK((p.array() >= lo.array() - 1e-12).all());
        CHECK((p.array() <= hi.array() + 1e-12).all());
    }
}

TEST_CASE("endpoint interpolation")
{
    const BezierSegment seg = randomSegment(5);
    CHECK((seg.evalLocal(0.0, 0).transpose() - seg.ctrl.row(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((seg.evalLocal(seg.duration, 0).transpose() - seg.ctrl.row(seg.degree()))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("spline evaluation and knot tie-break")
{
    const Eigen::RowVector2d pa(1.0, -1.0);
    const Eigen::RowVector2d pb(5.0, 2.0);
    std::vector<BezierSegment> segs;
    segs.emplace_back(pa.replicate(7, 1), 1.0);
    segs.emplace_back(pb.replicate(7, 1), 2.0);
    const BezierSpline spline(segs);

    CHECK(spline.totalDuration() == 3.0);
    CHECK(spline.segmentIndexAt(0.0) == 0);
    CHECK(spline.segmentIndexAt(0.999) == 0);
    // interior knot belongs to the following segment
    CHECK(spline.segmentIndexAt(1.0) == 1);
    // the final knot belongs to the last segment
    CHECK(spline.segmentIndexAt(3.0) == 1);
    CHECK((spline.eval(1.0).transpose() - pb).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(spline.eval(-0.1), std::domain_error);
    CHECK_THROWS_AS(spline.eval(3.1), std::domain_error);
}

TEST_CASE("whole-spline jerk objective scales as the fifth inverse power of time")
{
    Rng rng(2024);
    const int d = 6;
    std::vector<BezierSegment> segs;
    std::vector<double> durations = {0.6, 1.1, 0.9};
    for (double dt : durations)
    {
        segs.emplace_back(rng.matrix(d + 1, 3, -1.5, 1.5), dt);
    }

    auto jerkObjective = [&](double scale)
    {
        double J = 0.0;
        for (size_t i = 0; i < segs.size(); ++i)
        {
            const Eigen::MatrixXd Q = jerkCostMatrix(scale * durations[i], d).Q;
            for (int a = 0; a < 3; ++a)
            {
                const Eigen::VectorXd c = segs[i].ctrl.col(a);
                J += c.dot(Q * c);
            }
        }
        return J;
    };

    const double j1 = jerkObjective(1.0);
    const double j2 = jerkObjective(2.0);
    CHECK(j2 == j1 / 32.0);
}

TEST_CASE("power-basis conversion reproduces the curve")
{
    const BezierSegment seg = randomSegment(77);
    const Eigen::MatrixXd pow = powerBasisCoefficients(seg);
    for (double s : {0.0, 0.21, 0.5, 0.83, 1.0})
    {
        Eigen::VectorXd viaPow = Eigen::VectorXd::Zero(seg.dim());
        double sk = 1.0;
        for (int k = 0; k <= seg.degree(); ++k)
        {
            viaPow += sk * pow.row(k).transpose();
            sk *= s;
        }
        const Eigen::VectorXd viaBezier = seg.evalLocal(s * seg.duration, 0);
        CHECK((viaPow - viaBezier).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("segment constructor rejects bad input")
{
    CHECK_THROWS_AS(BezierSegment(Eigen::MatrixXd::Zero(7, 3), 0.0), std::domain_error);
    CHECK_THROWS_AS(BezierSegment(Eigen::MatrixXd::Zero(7, 3), -1.0), std::domain_error);
    CHECK_THROWS_AS(randomSegment(1).evalLocal(0.5, -1), std::invalid_argument);
}
