#pragma once

#include <cstdint>
#include <vector>

namespace ifcps {

// Probability a random positive outranks a random negative; ties count 1/2
// (rank-sum formulation). Throws MetricError on single-class labels.
double auroc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

// Rank correlation with average-rank tie handling. Throws MetricError when
// either argument has zero rank variance.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Average ranks, 1-based, ties averaged.
std::vector<double> average_ranks(const std::vector<double>& values);

// Ids sorted by descending score, ties broken by ascending id.
std::vector<int> rank_descending(const std::vector<double>& scores);

struct SeedStats {
    std::vector<double> per_seed;
    double mean = 0.0;
    double stdev = 0.0; // population std over seeds
};

SeedStats make_stats(std::vector<double> values);

} // namespace ifcps
