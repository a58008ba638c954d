// Command-line frontend: plan a fixed-timing trajectory, refine the time
// allocation, cross-check gradients, or run the desk-scale benchmark.

#include "trajtime/bench.hpp"
#include "trajtime/bilevel.hpp"
#include "trajtime/problem_io.hpp"
#include "trajtime/qp_solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace
{

    using nlohmann::json;
    using namespace trajtime;

    constexpr int kExitOk = 0;
    constexpr int kExitUsage = 1;
    constexpr int kExitInfeasible = 2;
    constexpr int kExitNumeric = 3;

    struct LoadedProblem
    {
        Problem problem;
        double totalTime = 0.0;
        BilevelProblem bilevel;
        TimeAllocation y0;
    };

    double chooseTotalTime(const Problem &p)
    {
        if (p.totalTime)
        {
            return *p.totalTime;
        }
        // no stated budget: traverse the waypoint path at unit speed
        const Corridor &c = p.corridor;
        Eigen::VectorXd prev = c.start.pos;
        double length = 0.0;
        for (int i = 0; i + 1 < c.numSegments(); ++i)
        {
            const Eigen::VectorXd w = intersect(c.boxes[i], c.boxes[i + 1]).center();
            length += (w - prev).norm();
            prev = w;
        }
        const Eigen::VectorXd last =
            c.goal ? c.goal->pos : Eigen::VectorXd(c.boxes.back().center());
        length += (last - prev).norm();
        return std::max(length, 1.0);
    }

    LoadedProblem prepare(const Problem &problem, double yMin,
                          const std::string &seedTimes)
    {
        LoadedProblem lp;
        lp.problem = problem;
        lp.totalTime = chooseTotalTime(problem);

        AssembleOptions opts;
        opts.degree = problem.degree;
        opts.yMin = yMin;
        const int n = problem.corridor.numSegments();
        lp.bilevel = BilevelProblem{problem.corridor, opts,
                                    timingConstraints(n, lp.totalTime, yMin)};

        if (seedTimes.empty())
        {
            lp.y0 = initialTimes(problem.corridor, lp.totalTime, opts);
        }
        else
        {
            std::vector<double> vals;
            std::stringstream ss(seedTimes);
            std::string tok;
            while (std::getline(ss, tok, ','))
            {
                vals.push_back(std::stod(tok));
            }
            if (static_cast<int>(vals.size()) != n)
            {
                throw ValidationError("--seed-times",
                                      "expected " + std::to_string(n) + " durations");
            }
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i)
            {
                y(i) = vals[static_cast<size_t>(i)];
            }
            if (!lp.bilevel.tc.satisfied(y, 1e-9))
            {
                throw ValidationError("--seed-times",
                                      "allocation violates the timing constraints");
            }
            lp.y0 = TimeAllocation{y};
        }
        return lp;
    }

    json trajectoryJson(const LoadedProblem &lp, const Eigen::VectorXd &y,
                        const QpSolution &sol)
    {
        const VariableLayout lay = layoutFor(lp.problem.corridor, lp.bilevel.opts);
        const BezierSpline spline = splineFromPrimal(sol.x, TimeAllocation{y}, lay);
        json out;
        out["objective"] = sol.objective;
        out["degree"] = lay.degree;
        out["dim"] = lay.dim;
        out["total_time"] = y.sum();
        out["durations"] = json::array();
        for (int i = 0; i < y.size(); ++i)
        {
            out["durations"].push_back(y(i));
        }
        out["segments"] = json::array();
        for (const BezierSegment &seg : spline.segments)
        {
            json s;
            s["duration"] = seg.duration;
            s["ctrl"] = json::array();
            for (int j = 0; j <= seg.degree(); ++j)
            {
                json row = json::array();
                for (int a = 0; a < seg.dim(); ++a)
                {
                    row.push_back(seg.ctrl(j, a));
                }
                s["ctrl"].push_back(std::move(row));
            }
            out["segments"].push_back(std::move(s));
        }
        return out;
    }

    void emit(const json &j, const std::string &path)
    {
        if (path.empty() || path == "-")
        {
            std::cout << j.dump(2) << "\n";
            return;
        }
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("cannot open output file " + path);
        }
        out << j.dump(2) << "\n";
    }

    int cmdPlan(const std::string &file, const std::string &outPath, double yMin)
    {
        const LoadedProblem lp = prepare(loadProblem(file), yMin, "");
        DenseQpSolver solver;
        const QpSolution sol = solver.solve(lp.bilevel.assembleAt(lp.y0.durations));
        if (sol.status != QpStatus::Optimal)
        {
            std::cerr << "plan: QP "
                      << (sol.status == QpStatus::Infeasible ? "infeasible" : "did not converge")
                      << " at the heuristic timing\n";
            return sol.status == QpStatus::Infeasible ? kExitInfeasible : kExitNumeric;
        }
        emit(trajectoryJson(lp, lp.y0.durations, sol), outPath);
        return kExitOk;
    }

    int cmdRefine(const std::string &file, const std::string &method, int maxIters,
                  double cutoffMs, const std::string &seedTimes, double fdH,
                  const std::string &fdMode, double yMin, const std::string &outPath,
                  const std::string &traceCsv, const std::string &traceJson)
    {
        const LoadedProblem lp = prepare(loadProblem(file), yMin, seedTimes);

        RefineConfig cfg;
        cfg.maxIterations = maxIters;
        if (cutoffMs >= 0.0)
        {
            cfg.cutoffMs = cutoffMs;
        }
        cfg.fdStep = fdH;
        cfg.fdMode = fdMode == "central" ? FdMode::Central : FdMode::Forward;
        const GradientMethod gm = method == "fd" ? GradientMethod::FiniteDifference
                                                 : GradientMethod::LagrangeMultiplier;

        const RefineResult res = refineTime(lp.bilevel, lp.y0, cfg, gm);

        json out;
        out["initial_objective"] = res.trace.records.front().objective;
        out["objective"] = res.objective;
        out["method"] = method;
        out["terminal_reason"] = stopReasonName(res.trace.reason);
        out["iterations"] = static_cast<int>(res.trace.records.size()) - 1;
        out["qp_solves"] = res.totalSolves;
        out["gradient_qp_solves"] = res.gradientSolves;
        out["trajectory"] = trajectoryJson(lp, res.y.durations, res.sol);
        emit(out, outPath);

        if (!traceCsv.empty())
        {
            exportTraceCsv(res.trace, traceCsv);
        }
        if (!traceJson.empty())
        {
            exportTraceJson(res.trace, traceJson);
        }
        return kExitOk;
    }

    // 1-D illustrative cases: (1) the parameter shifts the objective through
    // q(y) while the bound is parameter-free; (2) the parameter moves the
    // bound while the objective is parameter-free.
    int cmdGradcheckToy(int which)
    {
        DenseQpSolver solver;
        if (which == 1)
        {
            Eigen::MatrixXd P(1, 1), G(1, 1);
            P << 1.0;
            G << 1.0;
            Eigen::VectorXd h(1);
            h << -1.0;
            ParametricQp qp = ParametricQp::plain(P, Eigen::VectorXd::Zero(1), G, h,
                                                  Eigen::MatrixXd(0, 1), Eigen::VectorXd(0));
            qp.allocateZeroPartials(1);
            qp.dq[0](0) = 1.0;
            const QpSolution sol = solver.solve(qp);
            const Eigen::VectorXd g = analyticGradient(qp, sol);
            std::printf("toy 1: x* = %.12g, objective = %.12g, gradient = %.12g\n",
                        sol.x(0), sol.objective, g(0));
            return std::abs(g(0) + 1.0) <= 1e-12 ? kExitOk : kExitNumeric;
        }

        auto makeQp = [](double y)
        {
            Eigen::MatrixXd P(1, 1), G(1, 1);
            P << 1.0;
            G << -1.0;
            Eigen::VectorXd h(1);
            h << y;
            ParametricQp qp = ParametricQp::plain(P, Eigen::VectorXd::Zero(1), G, h,
                                                  Eigen::MatrixXd(0, 1), Eigen::VectorXd(0));
            qp.allocateZeroPartials(1);
            qp.dh[0](0) = 1.0;
            return qp;
        };
        const ParametricQp qp1 = makeQp(-1.0);
        const QpSolution s1 = solver.solve(qp1);
        const Eigen::VectorXd g = analyticGradient(qp1, s1);
        const QpSolution s2 = solver.solve(makeQp(-0.5));
        const double predicted = g(0) * 0.5;
        const double actual = s2.objective - s1.objective;
        std::printf("toy 2: lambda = %.12g, gradient = %.12g\n", s1.lambda(0), g(0));
        std::printf("toy 2: predicted decrease = %.12g, actual = %.12g "
                    "(first-order estimate overshoots)\n",
                    predicted, actual);
        const bool ok = std::abs(g(0) + 1.0) <= 1e-12 &&
                        std::abs(actual) < std::abs(predicted);
        return ok ? kExitOk : kExitNumeric;
    }

    int cmdGradcheck(const std::string &file, std::uint64_t seed, int segments,
                     double h, int toy, double yMin)
    {
        if (toy > 0)
        {
            return cmdGradcheckToy(toy);
        }
        const Problem problem = file.empty() ? randomCorridor(seed, segments)
                                             : loadProblem(file);
        const LoadedProblem lp = prepare(problem, yMin, "");

        DenseQpSolver solver;
        const ParametricQp qp = lp.bilevel.assembleAt(lp.y0.durations);
        const QpSolution sol = solver.solve(qp);
        if (sol.status != QpStatus::Optimal)
        {
            std::cerr << "gradcheck: lower-level QP not solvable\n";
            return kExitInfeasible;
        }

        const FdGradient fwd = fdGradient(lp.bilevel, lp.y0.durations, h, FdMode::Forward, solver, &sol);
        const FdGradient bwd = fdGradient(lp.bilevel, lp.y0.durations, h, FdMode::Backward, solver, &sol);
        const FdGradient ctr = fdGradient(lp.bilevel, lp.y0.durations, h, FdMode::Central, solver, &sol);
        const Eigen::VectorXd analytic =
            pairedGradient(analyticGradient(qp, sol), ctr.refIndex, ctr.altIndex);

        std::printf("%-4s %-22s %-22s %-12s %-8s\n", "k", "analytic", "central_fd",
                    "rel_err", "stable");
        double worst = 0.0;
        int stableCount = 0;
        for (int k = 0; k < analytic.size(); ++k)
        {
            const bool usable = ctr.valid[k] && fwd.valid[k] && bwd.valid[k];
            const double relFb =
                usable ? std::abs(fwd.grad(k) - bwd.grad(k)) /
                             std::max({1.0, std::abs(fwd.grad(k)), std::abs(bwd.grad(k))})
                       : 1.0;
            const bool stable = usable && relFb <= 1e-5;
            const double err =
                usable ? std::abs(analytic(k) - ctr.grad(k)) /
                             std::max({1.0, std::abs(analytic(k)), std::abs(ctr.grad(k))})
                       : std::nan("");
            std::printf("%-4d %-22.12g %-22.12g %-12.3g %-8s\n", k, analytic(k),
                        usable ? ctr.grad(k) : std::nan(""), err,
                        stable ? "yes" : "no");
            if (stable)
            {
                ++stableCount;
                worst = std::max(worst, err);
            }
        }
        std::printf("stable components: %d of %d, max relative error %.3g "
                    "(qp solves: %d fwd, %d bwd, %d central)\n",
                    stableCount, static_cast<int>(analytic.size()), worst,
                    fwd.solves, bwd.solves, ctr.solves);
        return worst <= 1e-4 ? kExitOk : kExitNumeric;
    }

    int cmdBench(int seeds, const std::string &segments, const std::string &cutoffs,
                 const std::string &outPrefix, int jobs, int maxIters)
    {
        BenchOptions opts;
        opts.seeds = seeds;
        opts.jobs = jobs;
        opts.refine.maxIterations = maxIters;

        if (!segments.empty())
        {
            const auto colon = segments.find(':');
            if (colon == std::string::npos)
            {
                opts.segmentsMin = opts.segmentsMax = std::stoi(segments);
            }
            else
            {
                opts.segmentsMin = std::stoi(segments.substr(0, colon));
                opts.segmentsMax = std::stoi(segments.substr(colon + 1));
            }
        }
        if (!cutoffs.empty())
        {
            opts.cutoffsMs.clear();
            std::stringstream ss(cutoffs);
            std::string tok;
            while (std::getline(ss, tok, ','))
            {
                opts.cutoffsMs.push_back(std::stod(tok));
            }
        }

        const BenchReport report = runBench(opts);
        writeBenchCsv(report, outPrefix + ".csv");
        writeBenchJson(report, outPrefix + ".json");

        int failures = 0;
        for (const BenchInstance &inst : report.instances)
        {
            if (inst.failed)
            {
                ++failures;
                std::fprintf(stderr, "instance seed=%llu failed: %s\n",
                             static_cast<unsigned long long>(inst.seed),
                             inst.error.c_str());
            }
        }
        std::printf("%-10s %-14s %-14s %-14s %-14s\n", "cutoff_ms", "mean_lm",
                    "median_lm", "mean_fd", "median_fd");
        for (const BenchAggregate &a : report.aggregates)
        {
            std::printf("%-10g %-14.6g %-14.6g %-14.6g %-14.6g\n", a.cutoffMs,
                        a.meanLm, a.medianLm, a.meanFd, a.medianFd);
        }
        std::printf("wrote %s.csv and %s.json (%zu instances, %d failed)\n",
                    outPrefix.c_str(), outPrefix.c_str(), report.instances.size(),
                    failures);
        if (failures == static_cast<int>(report.instances.size()))
        {
            return kExitNumeric;
        }
        return kExitOk;
    }

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"minimum-jerk corridor trajectories with refined time allocation"};
    app.require_subcommand(1);
    // --h is a real option below, so help is long-form only
    app.set_help_flag("--help", "print help");
    app.option_defaults()->ignore_case(false);

    std::string file, outPath, traceCsv, traceJson, seedTimes;
    std::string method = "lm", fdMode = "forward", segments = "4:12", cutoffs, outPrefix = "bench";
    double yMin = 1e-3, cutoffMs = -1.0, h = 1e-6;
    int maxIters = 50, toy = 0, benchSeeds = 20, jobs = 1, gcSegments = 6;
    std::uint64_t seed = 0;

    CLI::App *plan = app.add_subcommand("plan", "solve the QP at the heuristic timing");
    plan->set_help_flag("--help", "print help");
    plan->add_option("problem", file, "problem file")->required();
    plan->add_option("-o,--output", outPath, "output path (default stdout)");
    plan->add_option("--ymin", yMin, "duration floor in seconds");

    CLI::App *refine = app.add_subcommand("refine", "refine the time allocation");
    refine->set_help_flag("--help", "print help");
    refine->add_option("problem", file, "problem file")->required();
    refine->add_option("--method", method, "gradient method")
        ->check(CLI::IsMember({"lm", "fd"}));
    refine->add_option("--max-iters", maxIters, "outer iteration limit");
    refine->add_option("--cutoff-ms", cutoffMs, "wall-clock budget, checked between iterations");
    refine->add_option("--seed-times", seedTimes, "comma-separated initial durations");
    refine->add_option("--fd-h", h, "finite-difference step");
    refine->add_option("--fd-mode", fdMode, "finite-difference mode")
        ->check(CLI::IsMember({"forward", "central"}));
    refine->add_option("--ymin", yMin, "duration floor in seconds");
    refine->add_option("-o,--output", outPath, "output path (default stdout)");
    refine->add_option("--trace-csv", traceCsv, "write the iteration trace as csv");
    refine->add_option("--trace-json", traceJson, "write the iteration trace as json");

    CLI::App *gradcheck = app.add_subcommand("gradcheck",
                                             "compare analytic and finite-difference gradients");
    gradcheck->set_help_flag("--help", "print help");
    gradcheck->add_option("problem", file, "problem file (omit to generate)");
    gradcheck->add_option("--seed", seed, "generator seed when no file is given");
    gradcheck->add_option("--segments", gcSegments, "segment count for generated problems");
    gradcheck->add_option("--h", h, "finite-difference step");
    gradcheck->add_option("--toy", toy, "run illustrative 1-D example 1 or 2")
        ->check(CLI::Range(1, 2));
    gradcheck->add_option("--ymin", yMin, "duration floor in seconds");

    CLI::App *bench = app.add_subcommand("bench", "run the seeded benchmark suite");
    bench->set_help_flag("--help", "print help");
    bench->add_option("--seeds", benchSeeds, "number of seeded instances");
    bench->add_option("--segments", segments, "segment range MIN:MAX");
    bench->add_option("--cutoffs", cutoffs, "comma-separated cutoffs in ms");
    bench->add_option("--out", outPrefix, "output prefix for csv/json");
    bench->add_option("--jobs", jobs, "parallel workers");
    bench->add_option("--max-iters", maxIters, "outer iteration limit per run");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        if (e.get_exit_code() == 0)
        {
            return app.exit(e);
        }
        app.exit(e);
        return kExitUsage;
    }

    try
    {
        if (plan->parsed())
        {
            return cmdPlan(file, outPath, yMin);
        }
        if (refine->parsed())
        {
            return cmdRefine(file, method, maxIters, cutoffMs, seedTimes, h, fdMode,
                             yMin, outPath, traceCsv, traceJson);
        }
        if (gradcheck->parsed())
        {
            return cmdGradcheck(file, seed, gcSegments, h, toy, yMin);
        }
        if (bench->parsed())
        {
            return cmdBench(benchSeeds, segments, cutoffs, outPrefix, jobs, maxIters);
        }
    }
    catch (const ValidationError &e)
    {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitInfeasible;
    }
    catch (const AssemblyError &e)
    {
        std::cerr << "assembly error: " << e.what() << "\n";
        return kExitInfeasible;
    }
    catch (const RefineError &e)
    {
        std::cerr << "refine error: " << e.what() << "\n";
        return kExitInfeasible;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitUsage;
}
