#include "trajtime/problem_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace trajtime
{

    namespace
    {

        using nlohmann::json;

        Eigen::VectorXd parseVector(const json &j, const std::string &path, int expectDim = -1)
        {
            if (!j.is_array() || j.empty())
            {
                throw ValidationError(path, "expected a non-empty array of numbers");
            }
            Eigen::VectorXd v(j.size());
            for (size_t i = 0; i < j.size(); ++i)
            {
                if (!j[i].is_number())
                {
                    throw ValidationError(path + "[" + std::to_string(i) + "]", "expected a number");
                }
                v(static_cast<int>(i)) = j[i].get<double>();
            }
            if (expectDim >= 0 && v.size() != expectDim)
            {
                throw ValidationError(path, "expected " + std::to_string(expectDim) + " entries");
            }
            return v;
        }

        const json &field(const json &j, const std::string &key, const std::string &parent)
        {
            const auto it = j.find(key);
            if (it == j.end())
            {
                throw ValidationError(parent.empty() ? key : parent + "." + key, "missing field");
            }
            return *it;
        }

        BoundaryState parseState(const json &j, const std::string &path, int dim)
        {
            if (!j.is_object())
            {
                throw ValidationError(path, "expected an object with pos/vel/acc");
            }
            BoundaryState s;
            s.pos = parseVector(field(j, "pos", path), path + ".pos", dim);
            s.vel = parseVector(field(j, "vel", path), path + ".vel", dim);
            s.acc = parseVector(field(j, "acc", path), path + ".acc", dim);
            return s;
        }

        json vectorToJson(const Eigen::VectorXd &v)
        {
            json arr = json::array();
            for (int i = 0; i < v.size(); ++i)
            {
                arr.push_back(v(i));
            }
            return arr;
        }

        json stateToJson(const BoundaryState &s)
        {
            return json{{"pos", vectorToJson(s.pos)},
                        {"vel", vectorToJson(s.vel)},
                        {"acc", vectorToJson(s.acc)}};
        }

        // splitmix64: a tiny deterministic generator, identical across
        // platforms (no library distribution involved)
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
        };

        std::string formatDouble(double v)
        {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            return buf;
        }

    } // namespace

    Problem problemFromJsonText(const std::string &text, const std::string &origin)
    {
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw ValidationError(origin, std::string("parse error: ") + e.what());
        }
        if (!j.is_object())
        {
            throw ValidationError(origin, "top level must be an object");
        }

        const json &ver = field(j, "version", "");
        if (!ver.is_number_integer() || ver.get<int>() != 1)
        {
            throw ValidationError("version", "unsupported format version (expected 1)");
        }

        const json &boxesJson = field(j, "boxes", "");
        if (!boxesJson.is_array() || boxesJson.empty())
        {
            throw ValidationError("boxes", "expected a non-empty array");
        }

        Problem p;
        const Eigen::VectorXd firstMin =
            parseVector(field(boxesJson[0], "min", "boxes[0]"), "boxes[0].min");
        const int dim = static_cast<int>(firstMin.size());

        for (size_t i = 0; i < boxesJson.size(); ++i)
        {
            const std::string path = "boxes[" + std::to_string(i) + "]";
            Box b;
            b.lo = parseVector(field(boxesJson[i], "min", path), path + ".min", dim);
            b.hi = parseVector(field(boxesJson[i], "max", path), path + ".max", dim);
            p.corridor.boxes.push_back(std::move(b));
        }

        p.corridor.start = parseState(field(j, "start", ""), "start", dim);
        if (j.contains("goal") && !j["goal"].is_null())
        {
            p.corridor.goal = parseState(j["goal"], "goal", dim);
        }
        p.corridor.vmax = parseVector(field(j, "vmax", ""), "vmax", dim);
        p.corridor.amax = parseVector(field(j, "amax", ""), "amax", dim);

        if (j.contains("degree"))
        {
            if (!j["degree"].is_number_integer() || j["degree"].get<int>() < 3)
            {
                throw ValidationError("degree", "expected an integer >= 3");
            }
            p.degree = j["degree"].get<int>();
        }
        if (j.contains("total_time") && !j["total_time"].is_null())
        {
            if (!j["total_time"].is_number() || !(j["total_time"].get<double>() > 0.0))
            {
                throw ValidationError("total_time", "expected a positive number");
            }
            p.totalTime = j["total_time"].get<double>();
        }

        p.corridor.validate();
        return p;
    }

    Problem loadProblem(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw ValidationError(path, "cannot open file");
        }
        std::stringstream ss;
        ss << in.rdbuf();
        return problemFromJsonText(ss.str(), path);
    }

    std::string problemToJsonText(const Problem &problem)
    {
        json j;
        j["version"] = 1;
        j["degree"] = problem.degree;
        if (problem.totalTime)
        {
            j["total_time"] = *problem.totalTime;
        }
        j["boxes"] = json::array();
        for (const Box &b : problem.corridor.boxes)
        {
            j["boxes"].push_back(json{{"min", vectorToJson(b.lo)}, {"max", vectorToJson(b.hi)}});
        }
        j["start"] = stateToJson(problem.corridor.start);
        if (problem.corridor.goal)
        {
            j["goal"] = stateToJson(*problem.corridor.goal);
        }
        j["vmax"] = vectorToJson(problem.corridor.vmax);
        j["amax"] = vectorToJson(problem.corridor.amax);
        return j.dump(2) + "\n";
    }

    void saveProblem(const Problem &problem, const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("saveProblem: cannot open " + path);
        }
        out << problemToJsonText(problem);
    }

    Problem randomCorridor(std::uint64_t seed, int n, const RandomCorridorParams &params)
    {
        RandomCorridorParams p = params;
        n = std::max(1, n);
        p.dim = std::max(1, std::min(p.dim, 8));
        p.boxSizeMin = std::max(0.2, p.boxSizeMin);
        p.boxSizeMax = std::max(p.boxSizeMin, p.boxSizeMax);
        p.minOverlap = std::min(std::max(0.05, p.minOverlap), 0.9 * p.boxSizeMin);
        p.nominalSpeed = std::max(1e-3, p.nominalSpeed);
        p.boundMargin = std::max(1.2, p.boundMargin);

        Rng rng(seed * 0x9e3779b97f4a7c15ull + 0x853c49e6748fea9bull);
        const int D = p.dim;

        Problem out;
        std::vector<Eigen::VectorXd> centers(n), sizes(n);
        for (int i = 0; i < n; ++i)
        {
            sizes[i] = Eigen::VectorXd::NullaryExpr(
                D, [&](int) { return rng.uniform(p.boxSizeMin, p.boxSizeMax); });
        }
        centers[0] = Eigen::VectorXd::Zero(D);
        for (int i = 1; i < n; ++i)
        {
            Eigen::VectorXd step(D);
            for (int a = 0; a < D; ++a)
            {
                const double reach =
                    0.5 * (sizes[i - 1](a) + sizes[i](a)) - p.minOverlap;
                // mostly forward along axis 0, lateral jitter elsewhere
                step(a) = (a == 0) ? rng.uniform(0.55, 0.95) * reach
                                   : rng.uniform(-0.5, 0.5) * reach;
            }
            centers[i] = centers[i - 1] + step;
        }
        for (int i = 0; i < n; ++i)
        {
            Box b;
            b.lo = centers[i] - 0.5 * sizes[i];
            b.hi = centers[i] + 0.5 * sizes[i];
            out.corridor.boxes.push_back(std::move(b));
        }

        auto interiorPoint = [&](const Box &b)
        {
            Eigen::VectorXd q(D);
            for (int a = 0; a < D; ++a)
            {
                const double margin = 0.25 * (b.hi(a) - b.lo(a));
                q(a) = rng.uniform(b.lo(a) + margin, b.hi(a) - margin);
            }
            return q;
        };

        out.corridor.start.pos = interiorPoint(out.corridor.boxes.front());
        out.corridor.start.vel = Eigen::VectorXd::Zero(D);
        out.corridor.start.acc = Eigen::VectorXd::Zero(D);
        BoundaryState goal;
        goal.pos = interiorPoint(out.corridor.boxes.back());
        goal.vel = Eigen::VectorXd::Zero(D);
        goal.acc = Eigen::VectorXd::Zero(D);
        out.corridor.goal = goal;

        // nominal traversal sets the fixed total time; the bounds get enough
        // headroom for the QP at the distance-proportional timing
        double pathLength = (centers.front() - out.corridor.start.pos).norm() +
                            (centers.back() - goal.pos).norm();
        for (int i = 1; i < n; ++i)
        {
            pathLength += (centers[i] - centers[i - 1]).norm();
        }
        pathLength = std::max(pathLength, 0.5 * n);
        const double T = pathLength / p.nominalSpeed;
        out.totalTime = T;

        const double vBound = p.boundMargin * p.nominalSpeed;
        const double aBound =
            p.boundMargin * p.boundMargin * p.nominalSpeed * p.nominalSpeed * n / pathLength * 10.0;
        out.corridor.vmax = Eigen::VectorXd::Constant(D, vBound);
        out.corridor.amax = Eigen::VectorXd::Constant(D, aBound);

        out.degree = 6;
        out.corridor.validate();
        return out;
    }

    std::string traceToCsvText(const RefineTrace &trace)
    {
        std::string s = "iter,elapsed_ms,objective,grad_norm,alpha,qp_solves\n";
        for (const RefineRecord &r : trace.records)
        {
            s += std::to_string(r.iter);
            s += ",";
            s += formatDouble(r.elapsedMs);
            s += ",";
            s += formatDouble(r.objective);
            s += ",";
            s += formatDouble(r.gradNorm);
            s += ",";
            s += formatDouble(r.alpha);
            s += ",";
            s += std::to_string(r.qpSolves);
            s += "\n";
        }
        s += std::string("# terminal_reason,") + stopReasonName(trace.reason) + "\n";
        return s;
    }

    std::string traceToJsonText(const RefineTrace &trace)
    {
        json j;
        j["terminal_reason"] = stopReasonName(trace.reason);
        j["records"] = json::array();
        for (const RefineRecord &r : trace.records)
        {
            json rec;
            rec["iter"] = r.iter;
            rec["elapsed_ms"] = r.elapsedMs;
            rec["objective"] = r.objective;
            if (std::isnan(r.gradNorm))
            {
                rec["grad_norm"] = nullptr;
            }
            else
            {
                rec["grad_norm"] = r.gradNorm;
            }
            rec["alpha"] = r.alpha;
            rec["qp_solves"] = r.qpSolves;
            rec["grad_flagged"] = r.gradFlagged;
            j["records"].push_back(std::move(rec));
        }
        return j.dump(2) + "\n";
    }

    void exportTraceCsv(const RefineTrace &trace, const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("exportTraceCsv: cannot open " + path);
        }
        out << traceToCsvText(trace);
    }

    void exportTraceJson(const RefineTrace &trace, const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("exportTraceJson: cannot open " + path);
        }
        out << traceToJsonText(trace);
    }

} // namespace trajtime
