#include "trajtime/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>

namespace trajtime
{

    namespace
    {

        double median(std::vector<double> v)
        {
            if (v.empty())
            {
                return 0.0;
            }
            std::sort(v.begin(), v.end());
            const size_t mid = v.size() / 2;
            return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
        }

        double mean(const std::vector<double> &v)
        {
            if (v.empty())
            {
                return 0.0;
            }
            double s = 0.0;
            for (double x : v)
            {
                s += x;
            }
            return s / static_cast<double>(v.size());
        }

        // objective reached by the last iterate completed within the cutoff;
        // the unrefined row 0 is the fallback when nothing finished in time
        BenchCutoffEntry sliceTrace(const std::vector<RefineRecord> &records,
                                    double cutoffMs)
        {
            BenchCutoffEntry e;
            e.cutoffMs = cutoffMs;
            const RefineRecord *chosen = &records.front();
            for (const RefineRecord &r : records)
            {
                if (r.elapsedMs <= cutoffMs)
                {
                    chosen = &r;
                }
                else
                {
                    break;
                }
            }
            e.objective = chosen->objective;
            e.qpSolves = chosen->qpSolves;
            e.elapsedMs = chosen->elapsedMs;
            return e;
        }

        BenchInstance runInstance(std::uint64_t seed, int n, const BenchOptions &opts)
        {
            BenchInstance inst;
            inst.seed = seed;
            inst.n = n;
            try
            {
                const Problem prob = randomCorridor(seed, n, opts.generator);
                AssembleOptions asmOpts = opts.assembly;
                asmOpts.degree = prob.degree;

                BilevelProblem problem{
                    prob.corridor, asmOpts,
                    timingConstraints(n, prob.totalTime, asmOpts.yMin)};
                const TimeAllocation y0 =
                    initialTimes(prob.corridor, *prob.totalTime, asmOpts);

                RefineConfig cfg = opts.refine;
                cfg.cutoffMs.reset(); // full runs, cutoffs are applied post hoc

                const RefineResult lm =
                    refineTime(problem, y0, cfg, GradientMethod::LagrangeMultiplier);
                const RefineResult fd =
                    refineTime(problem, y0, cfg, GradientMethod::FiniteDifference);

                inst.jUnrefined = lm.trace.records.front().objective;
                inst.jStar = std::min(lm.objective, fd.objective);

                auto fillTotals = [](const RefineResult &r)
                {
                    BenchMethodTotals t;
                    t.objective = r.objective;
                    t.qpSolves = r.totalSolves;
                    t.gradientSolves = r.gradientSolves;
                    t.elapsedMs = r.trace.records.back().elapsedMs;
                    t.iterations = static_cast<int>(r.gradSolvesPerIteration.size());
                    t.reason = r.trace.reason;
                    return t;
                };
                inst.lm = fillTotals(lm);
                inst.fd = fillTotals(fd);
                inst.lmGradSolvesPerIter = lm.gradSolvesPerIteration;
                inst.fdGradSolvesPerIter = fd.gradSolvesPerIteration;

                for (double c : opts.cutoffsMs)
                {
                    BenchCutoffEntry el = sliceTrace(lm.trace.records, c);
                    BenchCutoffEntry ef = sliceTrace(fd.trace.records, c);
                    const double denom = std::max(inst.jStar, 1e-12);
                    el.subopt = std::max(0.0, (el.objective - inst.jStar) / denom);
                    ef.subopt = std::max(0.0, (ef.objective - inst.jStar) / denom);
                    inst.lmCutoffs.push_back(el);
                    inst.fdCutoffs.push_back(ef);
                }
            }
            catch (const std::exception &e)
            {
                inst.failed = true;
                inst.error = e.what();
            }
            return inst;
        }

    } // namespace

    BenchReport runBench(const BenchOptions &opts)
    {
        BenchReport report;
        report.options = opts;

        const int span = std::max(1, opts.segmentsMax - opts.segmentsMin + 1);
        std::vector<std::pair<std::uint64_t, int>> plan;
        for (int k = 0; k < opts.seeds; ++k)
        {
            plan.emplace_back(static_cast<std::uint64_t>(k),
                              opts.segmentsMin + k % span);
        }

        report.instances.resize(plan.size());
        if (opts.jobs <= 1)
        {
            for (size_t i = 0; i < plan.size(); ++i)
            {
                report.instances[i] = runInstance(plan[i].first, plan[i].second, opts);
            }
        }
        else
        {
            std::atomic<size_t> next{0};
            auto worker = [&]()
            {
                for (size_t i = next.fetch_add(1); i < plan.size(); i = next.fetch_add(1))
                {
                    report.instances[i] = runInstance(plan[i].first, plan[i].second, opts);
                }
            };
            std::vector<std::future<void>> pool;
            for (int w = 0; w < opts.jobs; ++w)
            {
                pool.push_back(std::async(std::launch::async, worker));
            }
            for (auto &f : pool)
            {
                f.get();
            }
        }

        for (size_t ci = 0; ci < opts.cutoffsMs.size(); ++ci)
        {
            BenchAggregate agg;
            agg.cutoffMs = opts.cutoffsMs[ci];
            std::vector<double> lmVals, fdVals;
            for (const BenchInstance &inst : report.instances)
            {
                if (inst.failed)
                {
                    continue;
                }
                lmVals.push_back(inst.lmCutoffs[ci].subopt);
                fdVals.push_back(inst.fdCutoffs[ci].subopt);
            }
            agg.meanLm = mean(lmVals);
            agg.medianLm = median(lmVals);
            agg.meanFd = mean(fdVals);
            agg.medianFd = median(fdVals);
            report.aggregates.push_back(agg);
        }
        return report;
    }

    std::string benchToCsvText(const BenchReport &report)
    {
        char buf[160];
        std::string s = "seed,n,method,cutoff_ms,objective,subopt,qp_solves,elapsed_ms\n";
        auto addRows = [&](const BenchInstance &inst, const char *method,
                           const std::vector<BenchCutoffEntry> &entries)
        {
            for (const BenchCutoffEntry &e : entries)
            {
                std::snprintf(buf, sizeof(buf), "%llu,%d,%s,%.17g,%.17g,%.17g,%ld,%.17g\n",
                              static_cast<unsigned long long>(inst.seed), inst.n, method,
                              e.cutoffMs, e.objective, e.subopt, e.qpSolves, e.elapsedMs);
                s += buf;
            }
        };
        for (const BenchInstance &inst : report.instances)
        {
            if (inst.failed)
            {
                continue;
            }
            addRows(inst, "lm", inst.lmCutoffs);
            addRows(inst, "fd", inst.fdCutoffs);
        }
        return s;
    }

    std::string benchToJsonText(const BenchReport &report)
    {
        using nlohmann::json;
        json j;
        j["instances"] = json::array();
        for (const BenchInstance &inst : report.instances)
        {
            json ji;
            ji["seed"] = inst.seed;
            ji["n"] = inst.n;
            if (inst.failed)
            {
                ji["error"] = inst.error;
                j["instances"].push_back(std::move(ji));
                continue;
            }
            ji["j_unrefined"] = inst.jUnrefined;
            ji["j_star"] = inst.jStar;
            auto totals = [](const BenchMethodTotals &t)
            {
                return json{{"objective", t.objective},
                            {"qp_solves", t.qpSolves},
                            {"gradient_solves", t.gradientSolves},
                            {"elapsed_ms", t.elapsedMs},
                            {"iterations", t.iterations},
                            {"reason", stopReasonName(t.reason)}};
            };
            ji["lm"] = totals(inst.lm);
            ji["fd"] = totals(inst.fd);
            auto entries = [](const std::vector<BenchCutoffEntry> &es)
            {
                json arr = json::array();
                for (const BenchCutoffEntry &e : es)
                {
                    arr.push_back(json{{"cutoff_ms", e.cutoffMs},
                                       {"objective", e.objective},
                                       {"subopt", e.subopt},
                                       {"qp_solves", e.qpSolves},
                                       {"elapsed_ms", e.elapsedMs}});
                }
                return arr;
            };
            ji["lm_cutoffs"] = entries(inst.lmCutoffs);
            ji["fd_cutoffs"] = entries(inst.fdCutoffs);
            j["instances"].push_back(std::move(ji));
        }
        j["aggregates"] = json::array();
        for (const BenchAggregate &a : report.aggregates)
        {
            j["aggregates"].push_back(json{{"cutoff_ms", a.cutoffMs},
                                           {"mean_subopt_lm", a.meanLm},
                                           {"median_subopt_lm", a.medianLm},
                                           {"mean_subopt_fd", a.meanFd},
                                           {"median_subopt_fd", a.medianFd}});
        }
        return j.dump(2) + "\n";
    }

    void writeBenchCsv(const BenchReport &report, const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("writeBenchCsv: cannot open " + path);
        }
        out << benchToCsvText(report);
    }

    void writeBenchJson(const BenchReport &report, const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("writeBenchJson: cannot open " + path);
        }
        out << benchToJsonText(report);
    }

} // namespace trajtime
