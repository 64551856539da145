#pragma once

#include "tvsh/core.hpp"

#include <cstdint>
#include <vector>

namespace tvsh::metrics {

/// Contingency table between two label vectors over their compacted alphabets.
/// Row r is the r-th smallest true label, column c the c-th smallest predicted one.
struct Contingency {
    std::vector<int> true_values;
    std::vector<int> pred_values;
    std::vector<std::vector<std::int64_t>> counts;
    std::int64_t n = 0;
};

Contingency contingency(const Labels& truth, const Labels& pred);

/// Optimal assignment on a square nonnegative weight matrix; out[r] is the column
/// matched to row r and the matched sum is maximal.
std::vector<int> hungarian_map(const std::vector<std::vector<std::int64_t>>& weights);

struct EvaluationResult {
    double acc = 0.0;
    double nmi = 0.0;
    double precision = 0.0;
    double ari = 0.0;
    /// mapping[c] is the true label assigned to predicted label pred_values[c], or
    /// -1 when the predicted cluster was matched to padding.
    std::vector<int> mapping;
    Contingency confusion;
    bool nmi_degenerate = false;
    bool ari_degenerate = false;
};

double accuracy(const Labels& truth, const Labels& pred);
double nmi(const Labels& truth, const Labels& pred, bool* degenerate = nullptr);
/// Throws UndefinedMetric when no two frames share a predicted label.
double pair_precision(const Labels& truth, const Labels& pred);
double ari(const Labels& truth, const Labels& pred, bool* degenerate = nullptr);

EvaluationResult evaluate(const Labels& truth, const Labels& pred);

}  // namespace tvsh::metrics
