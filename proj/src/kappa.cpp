#include "hmmfuse/kappa.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "hmmfuse/error.hpp"

namespace hmmfuse {

double cohen_kappa(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size()) throw LengthMismatch("decision vectors differ in length");
    if (a.empty()) throw LengthMismatch("decision vectors are empty");

    const double n = static_cast<double>(a.size());
    double agree = 0, a_pos = 0, b_pos = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool da = a[i] != 0, db = b[i] != 0;
        if (da == db) agree += 1;
        if (da) a_pos += 1;
        if (db) b_pos += 1;
    }
    double p_obs = agree / n;
    double p_exp = (a_pos / n) * (b_pos / n) + (1 - a_pos / n) * (1 - b_pos / n);
    if (p_exp >= 1.0) return 1.0;  // both constant and equal => perfect agreement
    return (p_obs - p_exp) / (1.0 - p_exp);
}

namespace {

// Quantile bin per element: position in the stable sort order, scaled to
// [0, bins). Identical vectors always get identical bins.
std::vector<int> quantile_bins(std::span<const double> values, int bins) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
    std::vector<int> bin(n);
    for (std::size_t rank = 0; rank < n; ++rank) {
        int q = static_cast<int>(rank * static_cast<std::size_t>(bins) / n);
        bin[order[rank]] = std::min(q, bins - 1);
    }
    return bin;
}

}  // namespace

double weighted_kappa(std::span<const double> a, std::span<const double> b, int bins) {
    if (a.size() != b.size()) throw LengthMismatch("score vectors differ in length");
    if (a.empty()) throw LengthMismatch("score vectors are empty");
    if (bins < 2) throw DataError("weighted kappa needs at least 2 bins");

    const std::size_t n = a.size();
    std::vector<int> bin_a = quantile_bins(a, bins);
    std::vector<int> bin_b = quantile_bins(b, bins);

    std::vector<double> marg_a(bins, 0.0), marg_b(bins, 0.0);
    std::vector<std::vector<double>> table(bins, std::vector<double>(bins, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        table[bin_a[i]][bin_b[i]] += 1;
        marg_a[bin_a[i]] += 1;
        marg_b[bin_b[i]] += 1;
    }

    const double denom = static_cast<double>(bins - 1);
    double obs_sum = 0, exp_sum = 0;
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            double d = (i - j) / denom;
            double weight = 1.0 - d * d;
            obs_sum += weight * table[i][j];
            exp_sum += weight * marg_a[i] * marg_b[j];
        }
    const double nn = static_cast<double>(n);
    double p_obs = obs_sum / nn;
    double p_exp = exp_sum / (nn * nn);
    if (p_exp >= 1.0) return p_obs >= 1.0 ? 1.0 : 0.0;
    return (p_obs - p_exp) / (1.0 - p_exp);
}

}  // namespace hmmfuse
