// Process-level checks of the command-line frontend: exit codes, output
// schemas and cross-command consistency.

#include "trajtime/problem_io.hpp"
#include "trajtime/qp_solver.hpp"

#include <json.hpp>

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using nlohmann::json;

namespace
{

    std::string fixture(const std::string &name)
    {
        return std::string(TRAJTIME_FIXTURE_DIR) + "/" + name;
    }

    // scratch outputs go to the temp dir so manual runs do not litter
    std::string scratch(const std::string &name)
    {
        return (std::filesystem::temp_directory_path() / name).string();
    }

    struct RunResult
    {
        int exitCode = -1;
        std::string output;
    };

    RunResult runCli(const std::string &args)
    {
        const std::string outFile = scratch("cli_test_stdout.txt");
        const std::string cmd =
            std::string(TRAJTIME_CLI_PATH) + " " + args + " > " + outFile + " 2>&1";
        const int rc = std::system(cmd.c_str());
        RunResult res;
        res.exitCode = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
        std::ifstream in(outFile);
        std::stringstream ss;
        ss << in.rdbuf();
        res.output = ss.str();
        return res;
    }

    json loadJson(const std::string &path)
    {
        std::ifstream in(path);
        REQUIRE(in.good());
        return json::parse(in);
    }

} // namespace

TEST_CASE("plan emits the expected trajectory shape and a consistent objective")
{
    const RunResult run =
        runCli("plan " + fixture("three_segment.json") + " -o " + scratch("cli_plan.json"));
    REQUIRE(run.exitCode == 0);

    const json j = loadJson(scratch("cli_plan.json"));
    REQUIRE(j["segments"].size() == 3);
    for (const auto &seg : j["segments"])
    {
        REQUIRE(seg["ctrl"].size() == 7);
        for (const auto &row : seg["ctrl"])
        {
            REQUIRE(row.size() == 3);
        }
    }

    // recompute the quadratic objective from the emitted control points
    using namespace trajtime;
    const Problem prob = loadProblem(fixture("three_segment.json"));
    Eigen::VectorXd y(3);
    for (int i = 0; i < 3; ++i)
    {
        y(i) = j["durations"][i].get<double>();
    }
    const ParametricQp qp = assemble(prob.corridor, TimeAllocation{y});
    const VariableLayout lay = layoutFor(prob.corridor, {});
    Eigen::VectorXd x(lay.count());
    for (int i = 0; i < 3; ++i)
    {
        for (int a = 0; a < 3; ++a)
        {
            for (int k = 0; k <= 6; ++k)
            {
                x(lay.index(i, a, k)) = j["segments"][i]["ctrl"][k][a].get<double>();
            }
        }
    }
    const double recomputed = 0.5 * x.dot(qp.P * x) + qp.q.dot(x) + qp.c;
    CHECK(std::abs(recomputed - j["objective"].get<double>()) <
          1e-10 * std::max(1.0, recomputed));
}

TEST_CASE("infeasible problems exit with code 2 and name the violation")
{
    const RunResult run = runCli("plan " + fixture("infeasible_start.json"));
    CHECK(run.exitCode == 2);
    CHECK(run.output.find("start.pos") != std::string::npos);
}

TEST_CASE("usage errors exit with code 1")
{
    CHECK(runCli("refine").exitCode == 1);
    CHECK(runCli("plan " + fixture("three_segment.json") + " --no-such-flag").exitCode == 1);
    CHECK(runCli("").exitCode == 1);
}

TEST_CASE("refine with a zero iteration budget reproduces plan")
{
    const RunResult planRun =
        runCli("plan " + fixture("three_segment.json") + " -o " + scratch("cli_plan0.json"));
    REQUIRE(planRun.exitCode == 0);
    const RunResult refineRun =
        runCli("refine " + fixture("three_segment.json") +
               " --max-iters 0 -o " + scratch("cli_refine0.json"));
    REQUIRE(refineRun.exitCode == 0);

    const json plan = loadJson(scratch("cli_plan0.json"));
    const json refine = loadJson(scratch("cli_refine0.json"));
    CHECK(refine["trajectory"] == plan);
    CHECK(refine["iterations"].get<int>() == 0);
}

TEST_CASE("refining a deliberately skewed timing improves the objective")
{
    const RunResult run = runCli(
        "refine " + fixture("symmetric_elbow.json") +
        " --seed-times 1.2,2.8 -o " + scratch("cli_refine_skew.json") +
        " --trace-csv " + scratch("cli_trace.csv"));
    REQUIRE(run.exitCode == 0);
    const json j = loadJson(scratch("cli_refine_skew.json"));
    CHECK(j["objective"].get<double>() < j["initial_objective"].get<double>());

    std::ifstream trace(scratch("cli_trace.csv"));
    std::string header;
    std::getline(trace, header);
    CHECK(header == "iter,elapsed_ms,objective,grad_norm,alpha,qp_solves");
}

TEST_CASE("lm and fd refinement agree on the objective, lm uses fewer solves")
{
    const RunResult lmRun = runCli("refine " + fixture("symmetric_elbow.json") +
                                   " --method lm --seed-times 1.2,2.8 -o " +
                                   scratch("cli_lm.json"));
    const RunResult fdRun = runCli("refine " + fixture("symmetric_elbow.json") +
                                   " --method fd --seed-times 1.2,2.8 -o " +
                                   scratch("cli_fd.json"));
    REQUIRE(lmRun.exitCode == 0);
    REQUIRE(fdRun.exitCode == 0);
    const json lm = loadJson(scratch("cli_lm.json"));
    const json fd = loadJson(scratch("cli_fd.json"));

    const double jLm = lm["objective"].get<double>();
    const double jFd = fd["objective"].get<double>();
    CHECK(std::abs(jLm - jFd) <= 0.01 * std::min(jLm, jFd));
    CHECK(lm["qp_solves"].get<long>() < fd["qp_solves"].get<long>());
    CHECK(lm["gradient_qp_solves"].get<long>() == 0);
}

TEST_CASE("gradcheck toy modes print the known gradients")
{
    const RunResult toy1 = runCli("gradcheck --toy 1");
    CHECK(toy1.exitCode == 0);
    CHECK(toy1.output.find("gradient = -1") != std::string::npos);

    const RunResult toy2 = runCli("gradcheck --toy 2");
    CHECK(toy2.exitCode == 0);
    CHECK(toy2.output.find("predicted decrease = -0.5") != std::string::npos);

    // a coarse step inflates the reported fd error but not the analytic values
    const RunResult fine = runCli("gradcheck --seed 4 --segments 3 --h 1e-6");
    const RunResult coarse = runCli("gradcheck --seed 4 --segments 3 --h 1e-2");
    CHECK(fine.exitCode == 0);
    const auto firstAnalytic = [](const std::string &out)
    {
        std::stringstream ss(out);
        std::string line;
        std::getline(ss, line); // header
        std::getline(ss, line);
        std::stringstream row(line);
        std::string k, analytic;
        row >> k >> analytic;
        return analytic;
    };
    CHECK(firstAnalytic(fine.output) == firstAnalytic(coarse.output));
}

TEST_CASE("bench writes the documented csv schema")
{
    const RunResult run =
        runCli("bench --seeds 2 --segments 2:3 --cutoffs 0,50 --out " +
               scratch("cli_bench"));
    REQUIRE(run.exitCode == 0);
    std::ifstream csv(scratch("cli_bench.csv"));
    REQUIRE(csv.good());
    std::string header;
    std::getline(csv, header);
    CHECK(header == "seed,n,method,cutoff_ms,objective,subopt,qp_solves,elapsed_ms");
    int rows = 0;
    std::string line;
    while (std::getline(csv, line))
    {
        ++rows;
    }
    CHECK(rows == 2 * 2 * 2);
}
