#pragma once

#include <cmath>
#include <span>
#include <string>

#include <fmt/format.h>

#include "b2opt/error.hpp"

namespace b2opt::bench {

struct StatSummary {
    std::size_t runs = 0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation over runs
};

inline StatSummary summarize(std::span<const double> values)
{
    if (values.empty())
        throw ContractError("summarize: no completed runs");
    StatSummary s;
    s.runs = values.size();
    for (double v : values)
        s.mean += v;
    s.mean /= double(values.size());
    double ss = 0.0;
    for (double v : values)
        ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / double(values.size()));
    return s;
}

/// Table-style "mean(std)" with 3 significant digits, e.g. "0.28(0.09)" or "1.2e-04(5e-05)".
inline std::string mean_std(const StatSummary& s) { return fmt::format("{:.3g}({:.3g})", s.mean, s.std); }

} // namespace b2opt::bench
