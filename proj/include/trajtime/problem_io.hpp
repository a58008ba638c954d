#ifndef TRAJTIME_PROBLEM_IO_HPP
#define TRAJTIME_PROBLEM_IO_HPP

#include "trajtime/bilevel.hpp"
#include "trajtime/corridor.hpp"

#include <cstdint>
#include <string>

namespace trajtime
{

    // On-disk problem description: corridor, spline degree and the optional
    // fixed total time.
    struct Problem
    {
        Corridor corridor;
        int degree = 6;
        std::optional<double> totalTime;
    };

    // Parses and validates a problem file; throws ValidationError carrying
    // the offending field path.
    Problem loadProblem(const std::string &path);
    Problem problemFromJsonText(const std::string &text, const std::string &origin = "<json>");

    void saveProblem(const Problem &problem, const std::string &path);
    std::string problemToJsonText(const Problem &problem);

    struct RandomCorridorParams
    {
        int dim = 3;
        double boxSizeMin = 1.6;
        double boxSizeMax = 3.6;
        double minOverlap = 0.5;
        double nominalSpeed = 1.0; // sets the fixed total time from path length
        double boundMargin = 3.0;  // vmax/amax headroom over the nominal profile
    };

    // Deterministic generator: a monotone walk of overlapping boxes with
    // randomized sizes and lateral offsets, interior rest-to-rest endpoints,
    // and bounds generous enough that the initial QP stays feasible.
    Problem randomCorridor(std::uint64_t seed, int n,
                           const RandomCorridorParams &params = {});

    // Trace export; CSV data columns are exactly
    //   iter,elapsed_ms,objective,grad_norm,alpha,qp_solves
    // with the terminal reason in a trailing comment line (CSV) or a
    // top-level field (JSON).
    void exportTraceCsv(const RefineTrace &trace, const std::string &path);
    void exportTraceJson(const RefineTrace &trace, const std::string &path);
    std::string traceToCsvText(const RefineTrace &trace);
    std::string traceToJsonText(const RefineTrace &trace);

} // namespace trajtime

#endif
