#ifndef TRAJTIME_QP_TYPES_HPP
#define TRAJTIME_QP_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace trajtime
{

    // Convex QP parameterized by the n segment durations:
    //
    //   min over x   0.5 x^T P x + q^T x + c
    //   subject to   G x <= h
    //                L x  = m
    //
    // together with the partial derivative of every duration-dependent
    // entry. dP[k], dG[k], dL[k] share the shape of P, G, L (stored sparse,
    // most blocks vanish); dq[k], dh[k], dm[k], dc[k] match q, h, m, c.
    struct ParametricQp
    {
        Eigen::MatrixXd P;
        Eigen::VectorXd q;
        double c = 0.0;
        Eigen::MatrixXd G;
        Eigen::VectorXd h;
        Eigen::MatrixXd L;
        Eigen::VectorXd m;

        std::vector<Eigen::SparseMatrix<double>> dP;
        std::vector<Eigen::VectorXd> dq;
        Eigen::VectorXd dc;
        std::vector<Eigen::SparseMatrix<double>> dG;
        std::vector<Eigen::VectorXd> dh;
        std::vector<Eigen::SparseMatrix<double>> dL;
        std::vector<Eigen::VectorXd> dm;

        int numVariables() const { return static_cast<int>(P.cols()); }
        int numInequalities() const { return static_cast<int>(G.rows()); }
        int numEqualities() const { return static_cast<int>(L.rows()); }
        int numDurations() const { return static_cast<int>(dP.size()); }

        // A qp with no stored partials (plain QP); n zero partials otherwise.
        static ParametricQp plain(Eigen::MatrixXd P, Eigen::VectorXd q,
                                  Eigen::MatrixXd G, Eigen::VectorXd h,
                                  Eigen::MatrixXd L, Eigen::VectorXd m,
                                  double c = 0.0);
        void allocateZeroPartials(int n);
    };

    enum class QpStatus
    {
        Optimal,
        Infeasible,
        MaxIter
    };

    // Primal/dual solution pair. lambda holds one multiplier per inequality
    // row (zero off the active set), mu one per equality row.
    struct QpSolution
    {
        Eigen::VectorXd x;
        double objective = 0.0;
        Eigen::VectorXd lambda;
        Eigen::VectorXd mu;
        std::vector<int> activeSet;
        QpStatus status = QpStatus::Infeasible;
        int iterations = 0;
    };

    struct KktResidual
    {
        double stationarity = 0.0;
        double primal = 0.0;
        double dual = 0.0;
        double compSlack = 0.0;

        double maxAbs() const
        {
            return std::max(std::max(stationarity, primal), std::max(dual, compSlack));
        }
    };

} // namespace trajtime

#endif
