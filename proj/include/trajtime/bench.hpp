#ifndef TRAJTIME_BENCH_HPP
#define TRAJTIME_BENCH_HPP

#include "trajtime/problem_io.hpp"

#include <string>
#include <vector>

namespace trajtime
{

    // Desk-scale experiment: seeded random corridors, both gradient methods
    // refined once to convergence, then sliced post hoc at each cutoff from
    // the recorded per-iteration timestamps. If no iteration finished before
    // a cutoff the unrefined objective is charged.
    struct BenchOptions
    {
        int seeds = 20;
        int segmentsMin = 4;
        int segmentsMax = 12;
        std::vector<double> cutoffsMs = {0.0, 5.0, 10.0, 20.0, 40.0, 80.0};
        RefineConfig refine;
        RandomCorridorParams generator;
        AssembleOptions assembly;
        int jobs = 1;
    };

    struct BenchCutoffEntry
    {
        double cutoffMs = 0.0;
        double objective = 0.0;
        double subopt = 0.0;
        long qpSolves = 0;
        double elapsedMs = 0.0;
    };

    struct BenchMethodTotals
    {
        double objective = 0.0;
        long qpSolves = 0;
        long gradientSolves = 0;
        double elapsedMs = 0.0;
        int iterations = 0; // gradient evaluations performed
        StopReason reason = StopReason::MaxIter;
    };

    struct BenchInstance
    {
        std::uint64_t seed = 0;
        int n = 0;
        bool failed = false;
        std::string error;
        double jUnrefined = 0.0;
        double jStar = 0.0; // per-instance minimum across methods
        BenchMethodTotals lm;
        BenchMethodTotals fd;
        std::vector<BenchCutoffEntry> lmCutoffs;
        std::vector<BenchCutoffEntry> fdCutoffs;
        std::vector<int> lmGradSolvesPerIter;
        std::vector<int> fdGradSolvesPerIter;
    };

    struct BenchAggregate
    {
        double cutoffMs = 0.0;
        double meanLm = 0.0;
        double medianLm = 0.0;
        double meanFd = 0.0;
        double medianFd = 0.0;
    };

    struct BenchReport
    {
        BenchOptions options;
        std::vector<BenchInstance> instances;
        std::vector<BenchAggregate> aggregates;
    };

    BenchReport runBench(const BenchOptions &opts);

    // CSV rows: seed,n,method,cutoff_ms,objective,subopt,qp_solves,elapsed_ms
    std::string benchToCsvText(const BenchReport &report);
    std::string benchToJsonText(const BenchReport &report);
    void writeBenchCsv(const BenchReport &report, const std::string &path);
    void writeBenchJson(const BenchReport &report, const std::string &path);

} // namespace trajtime

#endif
