#include "trajtime/spline.hpp"

#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace trajtime
{

    namespace
    {

        long long binomial(int n, int k)
        {
            if (k < 0 || k > n)
            {
                return 0;
            }
            long long r = 1;
            for (int j = 1; j <= k; ++j)
            {
                r = r * (n - k + j) / j;
            }
            return r;
        }

    } // namespace

    Eigen::VectorXd bernsteinBasis(int degree, double s)
    {
        if (degree < 0)
        {
            throw std::invalid_argument("bernsteinBasis: degree must be >= 0");
        }
        Eigen::VectorXd b = Eigen::VectorXd::Zero(degree + 1);
        b(0) = 1.0;
        const double u = 1.0 - s;
        for (int k = 1; k <= degree; ++k)
        {
            b(k) = s * b(k - 1);
            for (int j = k - 1; j > 0; --j)
            {
                b(j) = u * b(j) + s * b(j - 1);
            }
            b(0) *= u;
        }
        return b;
    }

    BezierSegment::BezierSegment(Eigen::MatrixXd ctrlPoints, double dur)
        : ctrl(std::move(ctrlPoints)), duration(dur)
    {
        if (!(duration > 0.0))
        {
            throw std::domain_error("BezierSegment: duration must be positive");
        }
        if (ctrl.rows() < 1)
        {
            throw std::invalid_argument("BezierSegment: needs at least one control point");
        }
    }

    BezierSegment derivativeCtrl(const BezierSegment &seg)
    {
        const int d = seg.degree();
        if (d < 1)
        {
            throw std::invalid_argument("derivativeCtrl: degree must be >= 1");
        }
        Eigen::MatrixXd dc(d, seg.dim());
        const double scale = static_cast<double>(d) / seg.duration;
        for (int j = 0; j < d; ++j)
        {
            dc.row(j) = scale * (seg.ctrl.row(j + 1) - seg.ctrl.row(j));
        }
        return BezierSegment(std::move(dc), seg.duration);
    }

    Eigen::MatrixXd powerBasisCoefficients(const BezierSegment &seg)
    {
        const int d = seg.degree();
        Eigen::MatrixXd pow = Eigen::MatrixXd::Zero(d + 1, seg.dim());
        // B_j^d(s) = sum_k (-1)^(k-j) C(d,k) C(k,j) s^k
        for (int k = 0; k <= d; ++k)
        {
            for (int j = 0; j <= k; ++j)
            {
                const double w = ((k - j) % 2 == 0 ? 1.0 : -1.0) *
                                 binomial(d, k) * binomial(k, j);
                pow.row(k) += w * seg.ctrl.row(j);
            }
        }
        return pow;
    }

    Eigen::VectorXd BezierSegment::evalLocal(double t, int order) const
    {
        if (order < 0)
        {
            throw std::invalid_argument("evalLocal: order must be >= 0");
        }
        if (t < 0.0 || t > duration)
        {
            throw std::domain_error("evalLocal: t outside [0, duration]");
        }
        const int d = degree();
        if (order > d)
        {
            return Eigen::VectorXd::Zero(dim());
        }

        // Differentiate in control-point space, then evaluate the basis.
        Eigen::MatrixXd c = ctrl;
        double scale = 1.0;
        for (int k = 0; k < order; ++k)
        {
            const int dk = d - k;
            scale *= static_cast<double>(dk) / duration;
            Eigen::MatrixXd next(dk, dim());
            for (int j = 0; j < dk; ++j)
            {
                next.row(j) = c.row(j + 1) - c.row(j);
            }
            c = std::move(next);
        }
        const Eigen::VectorXd basis = bernsteinBasis(d - order, t / duration);
        return scale * (c.transpose() * basis);
    }

    BezierSpline::BezierSpline(std::vector<BezierSegment> segs)
        : segments(std::move(segs))
    {
        if (segments.empty())
        {
            throw std::invalid_argument("BezierSpline: needs at least one segment");
        }
        const int d = segments.front().degree();
        const int D = segments.front().dim();
        for (const auto &s : segments)
        {
            if (s.degree() != d || s.dim() != D)
            {
                throw std::invalid_argument("BezierSpline: segments must share degree and dim");
            }
        }
    }

    double BezierSpline::totalDuration() const
    {
        double total = 0.0;
        for (const auto &s : segments)
        {
            total += s.duration;
        }
        return total;
    }

    int BezierSpline::segmentIndexAt(double t) const
    {
        const double total = totalDuration();
        if (t < 0.0 || t > total)
        {
            throw std::domain_error("BezierSpline: t outside [0, total duration]");
        }
        double knot = 0.0;
        const int n = numSegments();
        for (int i = 0; i < n - 1; ++i)
        {
            knot += segments[i].duration;
            if (t < knot)
            {
                return i;
            }
        }
        return n - 1;
    }

    Eigen::VectorXd BezierSpline::eval(double t, int order) const
    {
        const int i = segmentIndexAt(t);
        double knot = 0.0;
        for (int k = 0; k < i; ++k)
        {
            knot += segments[k].duration;
        }
        // Guard the upper end of the last segment against accumulated roundoff.
        const double local = std::min(t - knot, segments[i].duration);
        return segments[i].evalLocal(local, order);
    }

    namespace
    {

        // Exact rational arithmetic for the Qbar entries; numerators stay far
        // below the __int128 range for any practical degree.
        struct Fraction
        {
            __int128 num = 0;
            __int128 den = 1;

            static __int128 gcd128(__int128 a, __int128 b)
            {
                if (a < 0)
                    a = -a;
                if (b < 0)
                    b = -b;
                while (b != 0)
                {
                    const __int128 r = a % b;
                    a = b;
                    b = r;
                }
                return a == 0 ? 1 : a;
            }

            void reduce()
            {
                const __int128 g = gcd128(num, den);
                num /= g;
                den /= g;
                if (den < 0)
                {
                    num = -num;
                    den = -den;
                }
            }

            void add(__int128 n, __int128 d)
            {
                num = num * d + n * den;
                den *= d;
                reduce();
            }

            double toDouble() const
            {
                return static_cast<double>(num) / static_cast<double>(den);
            }
        };

        Eigen::MatrixXd computeJerkBase(int d)
        {
            // Third-difference coefficients of Bernstein control points.
            static const long long diff3[4] = {-1, 3, -3, 1};
            const int m = d - 3;
            const long long fac = static_cast<long long>(d) * (d - 1) * (d - 2);
            const long long fac2 = fac * fac;

            Eigen::MatrixXd Qbar(d + 1, d + 1);
            for (int u = 0; u <= d; ++u)
            {
                for (int v = u; v <= d; ++v)
                {
                    Fraction acc;
                    // sum over third-derivative control indices k, l of
                    // S[k][u] * S[l][v] * int_0^1 B_k^m B_l^m ds
                    for (int k = std::max(0, u - 3); k <= std::min(m, u); ++k)
                    {
                        const long long sku = diff3[u - k];
                        for (int l = std::max(0, v - 3); l <= std::min(m, v); ++l)
                        {
                            const long long slv = diff3[v - l];
                            const long long numer =
                                fac2 * sku * slv * binomial(m, k) * binomial(m, l);
                            const long long denom =
                                binomial(2 * m, k + l) * (2 * m + 1);
                            acc.add(numer, denom);
                        }
                    }
                    Qbar(u, v) = acc.toDouble();
                    Qbar(v, u) = Qbar(u, v);
                }
            }
            return Qbar;
        }

    } // namespace

    const Eigen::MatrixXd &jerkCostBase(int degree)
    {
        if (degree < 3)
        {
            throw std::invalid_argument("jerkCostBase: degree must be >= 3");
        }
        if (degree > 20)
        {
            throw std::invalid_argument("jerkCostBase: degree above exact-arithmetic range");
        }
        static std::map<int, Eigen::MatrixXd> cache;
        static std::mutex mutex;
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(degree);
        if (it == cache.end())
        {
            it = cache.emplace(degree, computeJerkBase(degree)).first;
        }
        return it->second;
    }

    JerkCost jerkCostMatrix(double dt, int degree)
    {
        if (!(dt > 0.0))
        {
            throw std::domain_error("jerkCostMatrix: dt must be positive");
        }
        const Eigen::MatrixXd &base = jerkCostBase(degree);
        const double dt2 = dt * dt;
        const double dt5 = dt2 * dt2 * dt;
        const double inv5 = 1.0 / dt5;
        JerkCost out;
        out.Q = base * inv5;
        out.dQ = base * (-5.0 * inv5 / dt);
        return out;
    }

    namespace
    {

        // product integrals of the degree-(d-3) Bernstein basis, all positive
        const Eigen::MatrixXd &thirdDerivProductIntegrals(int d)
        {
            static std::map<int, Eigen::MatrixXd> cache;
            static std::mutex mutex;
            std::lock_guard<std::mutex> lock(mutex);
            auto it = cache.find(d);
            if (it == cache.end())
            {
                const int m = d - 3;
                Eigen::MatrixXd M(m + 1, m + 1);
                for (int k = 0; k <= m; ++k)
                {
                    for (int l = 0; l <= m; ++l)
                    {
                        M(k, l) = static_cast<double>(binomial(m, k)) * binomial(m, l) /
                                  (static_cast<double>(binomial(2 * m, k + l)) * (2 * m + 1));
                    }
                }
                it = cache.emplace(d, std::move(M)).first;
            }
            return it->second;
        }

    } // namespace

    double jerkCostValue(const Eigen::VectorXd &ctrl, double dt, int degree)
    {
        if (!(dt > 0.0))
        {
            throw std::domain_error("jerkCostValue: dt must be positive");
        }
        if (degree < 3 || ctrl.size() != degree + 1)
        {
            throw std::invalid_argument("jerkCostValue: bad degree or control count");
        }
        const int m = degree - 3;
        Eigen::VectorXd e(m + 1);
        for (int k = 0; k <= m; ++k)
        {
            e(k) = ctrl(k + 3) - 3.0 * ctrl(k + 2) + 3.0 * ctrl(k + 1) - ctrl(k);
        }
        const Eigen::MatrixXd &M = thirdDerivProductIntegrals(degree);
        long double acc = 0.0L;
        for (int k = 0; k <= m; ++k)
        {
            for (int l = 0; l <= m; ++l)
            {
                acc += static_cast<long double>(M(k, l)) * e(k) * e(l);
            }
        }
        const double fac = static_cast<double>(degree) * (degree - 1) * (degree - 2);
        const double dt2 = dt * dt;
        const double dt5 = dt2 * dt2 * dt;
        return static_cast<double>(acc) * fac * fac / dt5;
    }

} // namespace trajtime
