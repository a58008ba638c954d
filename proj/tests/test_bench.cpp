#include "trajtime/bench.hpp"

#include <json.hpp>

#include <doctest.h>

#include <sstream>

using namespace trajtime;

namespace
{

    BenchOptions tinyOptions()
    {
        BenchOptions opts;
        opts.seeds = 3;
        opts.segmentsMin = 2;
        opts.segmentsMax = 4;
        opts.cutoffsMs = {0.0, 1e9};
        opts.refine.maxIterations = 15;
        return opts;
    }

} // namespace

TEST_CASE("bench cutoff semantics")
{
    const BenchReport report = runBench(tinyOptions());
    REQUIRE(report.instances.size() == 3);

    for (const BenchInstance &inst : report.instances)
    {
        REQUIRE_FALSE(inst.failed);

        // cutoff 0: nothing finished, both methods fall back to the
        // unrefined objective and tie
        CHECK(inst.lmCutoffs[0].objective == inst.jUnrefined);
        CHECK(inst.fdCutoffs[0].objective == inst.jUnrefined);
        CHECK(inst.lmCutoffs[0].subopt == inst.fdCutoffs[0].subopt);

        // a cutoff beyond convergence: the better method sits at the
        // per-instance minimum, so its suboptimality is exactly zero
        CHECK(std::min(inst.lmCutoffs[1].subopt, inst.fdCutoffs[1].subopt) == 0.0);
        CHECK(inst.lmCutoffs[1].subopt >= 0.0);
        CHECK(inst.fdCutoffs[1].subopt >= 0.0);

        // refined never worse than unrefined
        CHECK(inst.lm.objective <= inst.jUnrefined + 1e-12);
        CHECK(inst.fd.objective <= inst.jUnrefined + 1e-12);
    }
}

TEST_CASE("gradient cost accounting carries through the bench")
{
    const BenchReport report = runBench(tinyOptions());
    for (const BenchInstance &inst : report.instances)
    {
        REQUIRE_FALSE(inst.failed);
        for (int s : inst.lmGradSolvesPerIter)
        {
            CHECK(s == 0);
        }
        for (int s : inst.fdGradSolvesPerIter)
        {
            CHECK(s == inst.n + 1);
        }
        if (inst.n >= 2)
        {
            CHECK(inst.lm.qpSolves <= inst.fd.qpSolves);
        }
    }
}

TEST_CASE("bench csv schema and determinism of the solve path")
{
    const BenchReport a = runBench(tinyOptions());
    const BenchReport b = runBench(tinyOptions());

    const std::string csv = benchToCsvText(a);
    std::stringstream ss(csv);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "seed,n,method,cutoff_ms,objective,subopt,qp_solves,elapsed_ms");
    std::string line;
    int rows = 0;
    while (std::getline(ss, line))
    {
        CHECK(std::count(line.begin(), line.end(), ',') == 7);
        ++rows;
    }
    CHECK(rows == 3 * 2 * 2); // instances x methods x cutoffs

    // wall-clock fields differ run to run; the optimization path may not
    for (size_t i = 0; i < a.instances.size(); ++i)
    {
        CHECK(a.instances[i].jUnrefined == b.instances[i].jUnrefined);
        CHECK(a.instances[i].lm.objective == b.instances[i].lm.objective);
        CHECK(a.instances[i].fd.objective == b.instances[i].fd.objective);
        CHECK(a.instances[i].lm.qpSolves == b.instances[i].lm.qpSolves);
        CHECK(a.instances[i].fd.qpSolves == b.instances[i].fd.qpSolves);
    }

    // json and csv agree on the sliced objectives
    const auto j = nlohmann::json::parse(benchToJsonText(a));
    CHECK(j["instances"].size() == 3);
    CHECK(j["instances"][0]["lm_cutoffs"][0]["objective"].get<double>() ==
          a.instances[0].lmCutoffs[0].objective);
}

TEST_CASE("parallel workers leave the optimization path unchanged")
{
    BenchOptions opts = tinyOptions();
    const BenchReport serial = runBench(opts);
    opts.jobs = 2;
    const BenchReport parallel = runBench(opts);
    REQUIRE(serial.instances.size() == parallel.instances.size());
    for (size_t i = 0; i < serial.instances.size(); ++i)
    {
        CHECK(serial.instances[i].seed == parallel.instances[i].seed);
        CHECK(serial.instances[i].lm.objective == parallel.instances[i].lm.objective);
        CHECK(serial.instances[i].fd.objective == parallel.instances[i].fd.objective);
        CHECK(serial.instances[i].lm.qpSolves == parallel.instances[i].lm.qpSolves);
    }
}
