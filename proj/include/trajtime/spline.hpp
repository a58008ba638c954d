#ifndef TRAJTIME_SPLINE_HPP
#define TRAJTIME_SPLINE_HPP

#include <Eigen/Dense>

#include <vector>

namespace trajtime
{

    // Bernstein basis values B_j^d(s) for j = 0..d, evaluated with the
    // de Casteljau recurrence so that s = 0 and s = 1 are exact.
    Eigen::VectorXd bernsteinBasis(int degree, double s);

    // One polynomial piece in Bernstein form: rows of ctrl are the
    // (degree + 1) control points, columns are spatial axes.
    class BezierSegment
    {
    public:
        BezierSegment(Eigen::MatrixXd ctrlPoints, double dur);

        int degree() const { return static_cast<int>(ctrl.rows()) - 1; }
        int dim() const { return static_cast<int>(ctrl.cols()); }

        // order-th time derivative at local time t in [0, duration];
        // every derivative order carries a 1/duration chain-rule factor.
        Eigen::VectorXd evalLocal(double t, int order = 0) const;

        Eigen::MatrixXd ctrl;
        double duration;
    };

    // Hodograph: control points of the time derivative, one degree lower,
    // rows (degree/duration) * (ctrl[j+1] - ctrl[j]). Duration is kept.
    BezierSegment derivativeCtrl(const BezierSegment &seg);

    // I/O convenience: monomial coefficients in the normalized parameter
    // s in [0, 1]; row k holds the coefficient of s^k per axis.
    Eigen::MatrixXd powerBasisCoefficients(const BezierSegment &seg);

    // Piecewise Bezier curve; all segments share degree and dim.
    class BezierSpline
    {
    public:
        explicit BezierSpline(std::vector<BezierSegment> segs);

        int numSegments() const { return static_cast<int>(segments.size()); }
        int degree() const { return segments.front().degree(); }
        int dim() const { return segments.front().dim(); }
        double totalDuration() const;

        // Segment owning time t; knots are right-continuous, so t equal to an
        // interior knot belongs to the following segment and t equal to the
        // total duration belongs to the last one.
        int segmentIndexAt(double t) const;

        Eigen::VectorXd eval(double t, int order = 0) const;

        std::vector<BezierSegment> segments;
    };

    // Quadratic form of the squared-jerk integral for one scalar coordinate:
    // integral over [0, dt] of x'''(t)^2 equals c^T Q c with c the Bernstein
    // control points. Q = dt^-5 * Qbar(degree) and dQ is its exact partial
    // derivative in dt.
    struct JerkCost
    {
        Eigen::MatrixXd Q;
        Eigen::MatrixXd dQ;
    };

    JerkCost jerkCostMatrix(double dt, int degree);

    // Duration-independent factor Qbar(degree), computed once per degree by
    // exact rational integration of Bernstein third-derivative products.
    const Eigen::MatrixXd &jerkCostBase(int degree);

    // Same integral evaluated through third differences of the control
    // points. The product-integral weights are all positive, so this route
    // avoids the cancellation of the large Qbar entries and stays accurate
    // to machine precision relative to the result.
    double jerkCostValue(const Eigen::VectorXd &ctrl, double dt, int degree);

} // namespace trajtime

#endif
