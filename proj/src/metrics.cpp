#include "tvsh/metrics.hpp"

#include "tvsh/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvsh::metrics {

namespace {

void check_lengths(const Labels& truth, const Labels& pred) {
    if (truth.size() != pred.size()) {
        throw InvalidInput("label vectors differ in length (" + std::to_string(truth.size()) +
                           " vs " + std::to_string(pred.size()) + ")");
    }
    if (truth.empty()) throw InvalidInput("label vectors are empty");
}

std::vector<int> compact(const Labels& labels, std::vector<int>& values) {
    values = labels;
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = static_cast<int>(std::lower_bound(values.begin(), values.end(), labels[i]) -
                                  values.begin());
    }
    return out;
}

double choose2(std::int64_t n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

std::vector<std::int64_t> row_sums(const Contingency& c) {
    std::vector<std::int64_t> s(c.counts.size(), 0);
    for (std::size_t r = 0; r < c.counts.size(); ++r) {
        for (auto v : c.counts[r]) s[r] += v;
    }
    return s;
}

std::vector<std::int64_t> col_sums(const Contingency& c) {
    std::vector<std::int64_t> s(c.pred_values.size(), 0);
    for (const auto& row : c.counts) {
        for (std::size_t k = 0; k < row.size(); ++k) s[k] += row[k];
    }
    return s;
}

double entropy(const std::vector<std::int64_t>& sizes, std::int64_t n) {
    double h = 0.0;
    for (auto s : sizes) {
        if (s == 0) continue;
        const double p = static_cast<double>(s) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace

Contingency contingency(const Labels& truth, const Labels& pred) {
    check_lengths(truth, pred);
    Contingency c;
    const auto t = compact(truth, c.true_values);
    const auto p = compact(pred, c.pred_values);
    c.counts.assign(c.true_values.size(), std::vector<std::int64_t>(c.pred_values.size(), 0));
    for (std::size_t i = 0; i < t.size(); ++i) ++c.counts[t[i]][p[i]];
    c.n = static_cast<std::int64_t>(truth.size());
    return c;
}

std::vector<int> hungarian_map(const std::vector<std::vector<std::int64_t>>& weights) {
    const int n = static_cast<int>(weights.size());
    for (const auto& row : weights) {
        if (static_cast<int>(row.size()) != n) throw InvalidInput("Hungarian input must be square");
        for (auto v : row) {
            if (v < 0) throw InvalidInput("Hungarian weights must be nonnegative");
        }
    }
    if (n == 0) return {};
    // Minimization on cost = -weight with row/column potentials (1-based).
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<std::int64_t> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            std::int64_t delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const std::int64_t cur = -weights[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> out(n, -1);
    for (int j = 1; j <= n; ++j) out[match[j] - 1] = j - 1;
    return out;
}

namespace {

/// Maps predicted clusters to true clusters; returns matched count.
std::int64_t best_matching(const Contingency& c, std::vector<int>& mapping) {
    const std::size_t rows = c.true_values.size(), cols = c.pred_values.size();
    const std::size_t n = std::max(rows, cols);
    // Rows of the padded square matrix are predicted clusters.
    std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n, 0));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < cols; ++k) w[k][r] = c.counts[r][k];
    }
    const auto perm = hungarian_map(w);
    mapping.assign(cols, -1);
    std::int64_t matched = 0;
    for (std::size_t k = 0; k < cols; ++k) {
        const auto r = static_cast<std::size_t>(perm[k]);
        if (r < rows) {
            mapping[k] = c.true_values[r];
            matched += c.counts[r][k];
        }
    }
    return matched;
}

double nmi_from(const Contingency& c, bool* degenerate) {
    if (c.n < 2) throw InvalidInput("NMI needs at least two samples");
    const double ht = entropy(row_sums(c), c.n);
    const double hp = entropy(col_sums(c), c.n);
    const bool single_t = c.true_values.size() == 1, single_p = c.pred_values.size() == 1;
    if (single_t || single_p) {
        if (degenerate) *degenerate = true;
        return single_t && single_p ? 1.0 : 0.0;
    }
    if (degenerate) *degenerate = false;
    const auto a = row_sums(c), b = col_sums(c);
    const double n = static_cast<double>(c.n);
    double mi = 0.0;
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t k = 0; k < b.size(); ++k) {
            const auto nij = c.counts[r][k];
            if (nij == 0) continue;
            const double x = static_cast<double>(nij);
            mi += x / n * std::log(n * x / (static_cast<double>(a[r]) * static_cast<double>(b[k])));
        }
    }
    return std::clamp(mi / std::sqrt(ht * hp), 0.0, 1.0);
}

double precision_from(const Contingency& c) {
    double predicted = 0.0;
    for (auto b : col_sums(c)) predicted += choose2(b);
    if (predicted == 0.0) throw UndefinedMetric("precision undefined: no predicted same-cluster pairs");
    double tp = 0.0;
    for (const auto& row : c.counts) {
        for (auto v : row) tp += choose2(v);
    }
    return tp / predicted;
}

double ari_from(const Contingency& c, bool* degenerate) {
    double index = 0.0;
    for (const auto& row : c.counts) {
        for (auto v : row) index += choose2(v);
    }
    double sa = 0.0, sb = 0.0;
    for (auto a : row_sums(c)) sa += choose2(a);
    for (auto b : col_sums(c)) sb += choose2(b);
    const double total = choose2(c.n);
    const double expected = total > 0.0 ? sa * sb / total : 0.0;
    const double denom = 0.5 * (sa + sb) - expected;
    if (denom == 0.0) {
        if (degenerate) *degenerate = true;
        return 1.0;
    }
    if (degenerate) *degenerate = false;
    return (index - expected) / denom;
}

}  // namespace

double accuracy(const Labels& truth, const Labels& pred) {
    const auto c = contingency(truth, pred);
    std::vector<int> mapping;
    return static_cast<double>(best_matching(c, mapping)) / static_cast<double>(c.n);
}

double nmi(const Labels& truth, const Labels& pred, bool* degenerate) {
    return nmi_from(contingency(truth, pred), degenerate);
}

double pair_precision(const Labels& truth, const Labels& pred) {
    return precision_from(contingency(truth, pred));
}

double ari(const Labels& truth, const Labels& pred, bool* degenerate) {
    return ari_from(contingency(truth, pred), degenerate);
}

EvaluationResult evaluate(const Labels& truth, const Labels& pred) {
    EvaluationResult out;
    out.confusion = contingency(truth, pred);
    out.acc = static_cast<double>(best_matching(out.confusion, out.mapping)) /
              static_cast<double>(out.confusion.n);
    out.nmi = nmi_from(out.confusion, &out.nmi_degenerate);
    out.precision = precision_from(out.confusion);
    out.ari = ari_from(out.confusion, &out.ari_degenerate);
    return out;
}

}  // namespace tvsh::metrics
