#ifndef TRAJTIME_TEST_HELPERS_HPP
#define TRAJTIME_TEST_HELPERS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace testsupport
{

    // splitmix64; deterministic across platforms so frozen expectations stay put
    struct Rng
    {
        std::uint64_t state;

        explicit Rng(std::uint64_t seed) : state(seed) {}

        std::uint64_t next()
        {
            state += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = state;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            return z ^ (z >> 31);
        }

        double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

        Eigen::MatrixXd matrix(int rows, int cols, double lo = -1.0, double hi = 1.0)
        {
            Eigen::MatrixXd m(rows, cols);
            for (int i = 0; i < rows; ++i)
            {
                for (int j = 0; j < cols; ++j)
                {
                    m(i, j) = uniform(lo, hi);
                }
            }
            return m;
        }

        Eigen::VectorXd vector(int size, double lo = -1.0, double hi = 1.0)
        {
            Eigen::VectorXd v(size);
            for (int i = 0; i < size; ++i)
            {
                v(i) = uniform(lo, hi);
            }
            return v;
        }
    };

    // Gauss-Legendre nodes/weights on [a, b], computed by Newton iteration on
    // the Legendre recurrence; independent of any library quadrature.
    inline std::pair<std::vector<double>, std::vector<double>>
    gaussLegendre(int n, double a, double b)
    {
        std::vector<double> x(n), w(n);
        for (int i = 0; i < n; ++i)
        {
            double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it)
            {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; ++k)
                {
                    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (t * p1 - p0) / (t * t - 1.0);
                const double dt = p1 / dp;
                t -= dt;
                if (std::abs(dt) < 1e-16)
                {
                    break;
                }
            }
            x[i] = 0.5 * (a + b) + 0.5 * (b - a) * t;
            w[i] = (b - a) / ((1.0 - t * t) * dp * dp);
        }
        return {x, w};
    }

    inline double integrate(const std::function<double(double)> &f, double a, double b,
                            int nodes = 32)
    {
        const auto [x, w] = gaussLegendre(nodes, a, b);
        double s = 0.0;
        for (size_t i = 0; i < x.size(); ++i)
        {
            s += w[i] * f(x[i]);
        }
        return s;
    }

    // five-point first-derivative stencil, O(h^4)
    inline double stencilDerivative(const std::function<double(double)> &f, double t,
                                    double h)
    {
        return (f(t - 2 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2 * h)) / (12.0 * h);
    }

    inline double relErr(double got, double want)
    {
        return std::abs(got - want) / std::max({1.0, std::abs(got), std::abs(want)});
    }

} // namespace testsupport

#endif
