#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "incdet/csv.hpp"
#include "incdet/errors.hpp"
#include "incdet/rng.hpp"

namespace incdet::theory {

struct BetaParams {
    double alpha = 1.0;
    double beta = 1.0;

    void validate() const {
        if (!(alpha > 0.0) || !(beta > 0.0))
            throw ConfigError("beta: parameters must be positive");
    }
};

struct BetaMoments {
    double mean = 0.0;
    double variance = 0.0;
};

inline BetaMoments beta_moments(const BetaParams& p) {
    p.validate();
    const double c = p.alpha + p.beta;
    const double mean = p.alpha / c;
    return {mean, mean * (1.0 - mean) / (1.0 + c)};
}

/// Two Beta output models with a shared concentration c = alpha + beta.
/// left plays the lower-mean example, right the higher-mean one.
struct BetaPair {
    BetaParams left;
    BetaParams right;

    double concentration() const {
        const double cl = left.alpha + left.beta;
        const double cr = right.alpha + right.beta;
        if (std::abs(cl - cr) > 1e-12)
            throw ConfigError("beta pair: concentrations differ");
        return cl;
    }

    /// alpha_i < alpha_j <= beta_j: the regime in which the mean statistic
    /// provably dominates.
    bool theorem_regime() const {
        return left.alpha < right.alpha && right.alpha <= right.beta;
    }
};

inline double delta_mean(const BetaPair& pair) {
    const double c = pair.concentration();
    return pair.right.alpha / c - pair.left.alpha / c;
}

inline double delta_var(const BetaPair& pair) {
    const double c = pair.concentration();
    const double mi = pair.left.alpha / c;
    const double mj = pair.right.alpha / c;
    return (mj * (1.0 - mj) - mi * (1.0 - mi)) / (1.0 + c);
}

/// K independent Beta draws; one ensemble prediction row.
inline std::vector<double> sample_row(const BetaParams& p, int k, std::uint64_t seed) {
    p.validate();
    if (k < 1) throw ConfigError("sample_row: K must be >= 1");
    Rng rng(seed);
    std::vector<double> row(static_cast<std::size_t>(k));
    for (auto& v : row) v = rng.beta(p.alpha, p.beta);
    return row;
}

/// Row statistics the ranking argument analyzes.
enum class RankStatistic { mean, variance };

inline std::string statistic_name(RankStatistic s) {
    return s == RankStatistic::mean ? "mean" : "variance";
}

struct MisrankEstimate {
    RankStatistic statistic = RankStatistic::mean;
    int k = 1;
    std::size_t trials = 0;
    double p_hat = 0.0;
    double std_error = 0.0;
    bool regime = true; // false flags an out-of-regime pair (still computed)
};

namespace detail {

inline double row_mean(const std::vector<double>& row) {
    double m = 0.0;
    for (double v : row) m += v;
    return m / static_cast<double>(row.size());
}

inline double row_variance(const std::vector<double>& row) {
    const double m = row_mean(row);
    double ss = 0.0;
    for (double v : row) ss += (v - m) * (v - m);
    return ss / static_cast<double>(row.size() - 1);
}

} // namespace detail

/// Monte Carlo estimate of Pr(s(x_i) > s(x_j)) where s is the chosen row
/// statistic over K fresh draws per side. Trials use per-index derived
/// seeds, so two calls with the same seed see identical rows regardless of
/// statistic or scheduling.
inline MisrankEstimate misrank_probability(const BetaPair& pair, RankStatistic statistic,
                                           int k, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw ConfigError("misrank: trials must be >= 1");
    if (k < 1 || (statistic == RankStatistic::variance && k < 2))
        throw MetricError("misrank: K too small for the chosen statistic");
    pair.concentration();

    std::size_t above = 0;
    std::vector<double> left(static_cast<std::size_t>(k)), right(left.size());
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, "theory/misrank", t));
        for (auto& v : left) v = rng.beta(pair.left.alpha, pair.left.beta);
        for (auto& v : right) v = rng.beta(pair.right.alpha, pair.right.beta);
        const double si = statistic == RankStatistic::mean ? detail::row_mean(left)
                                                           : detail::row_variance(left);
        const double sj = statistic == RankStatistic::mean ? detail::row_mean(right)
                                                           : detail::row_variance(right);
        above += si > sj;
    }

    MisrankEstimate est;
    est.statistic = statistic;
    est.k = k;
    est.trials = trials;
    est.p_hat = static_cast<double>(above) / static_cast<double>(trials);
    est.std_error = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(trials));
    est.regime = pair.theorem_regime();
    return est;
}

/// Method-of-moments inversion from (mean, variance).
inline BetaParams fit_beta_mom_from_moments(double m, double v) {
    if (!(m > 0.0 && m < 1.0)) throw FitError("beta fit: mean outside (0,1)");
    if (!(v > 0.0)) throw FitError("beta fit: variance not positive");
    const double t = m * (1.0 - m) / v - 1.0;
    if (t <= 0.0) throw FitError("beta fit: variance too large for a beta law");
    return {m * t, (1.0 - m) * t};
}

inline BetaParams fit_beta_mom(const std::vector<double>& samples) {
    if (samples.size() < 2) throw FitError("beta fit: needs at least two samples");
    // A constant row has zero variance by definition; catching it here avoids
    // fitting to the rounding dust the accumulated mean can leave behind.
    if (std::all_of(samples.begin(), samples.end(),
                    [&](double s) { return s == samples.front(); }))
        throw FitError("beta fit: variance not positive");
    const double m = detail::row_mean(samples);
    const double v = detail::row_variance(samples);
    return fit_beta_mom_from_moments(m, v);
}

/// Bin counts over [0,1] with the Beta law fitted to the same samples;
/// fit absent when the samples are degenerate.
struct PredictionHistogram {
    std::vector<std::size_t> bins;
    std::optional<BetaParams> fit;
};

inline PredictionHistogram histogram_with_fit(const std::vector<double>& samples,
                                              std::size_t n_bins) {
    if (n_bins == 0) throw ConfigError("histogram: needs at least one bin");
    PredictionHistogram h;
    h.bins.assign(n_bins, 0);
    for (double v : samples) {
        auto b = static_cast<std::size_t>(v * static_cast<double>(n_bins));
        if (b >= n_bins) b = n_bins - 1;
        ++h.bins[b];
    }
    try {
        h.fit = fit_beta_mom(samples);
    } catch (const FitError&) {
        h.fit = std::nullopt;
    }
    return h;
}

struct GridRow {
    double c = 0.0;
    double alpha_i = 0.0;
    double alpha_j = 0.0;
    int k = 1;
    double delta_mean = 0.0;
    double delta_var = 0.0;
    double p_mean = 0.0;
    double se_mean = 0.0;
    double p_var = 0.0;
    double se_var = 0.0;
    bool regime = true;
};

struct GridReport {
    std::vector<GridRow> rows;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    // summary flags, all expected true in the Theorem regime
    bool delta_ordering = false;   // delta_mean > delta_var > 0, exact, every row
    bool mean_le_var = false;      // p_mean <= p_var within 3 combined se, every row
    bool scaling_bounded = false;  // p_mean within the Chebyshev envelope (V_i+V_j)/(K d^2)
    bool vanishing_with_k = false; // per pair, p at K_max <= p at K_min within 3 se
};

/// Sweeps Theorem-regime pairs drawn from each alpha grid (shared c per
/// grid) across ensemble sizes, estimating mis-ranking probabilities for
/// both statistics on identical draws.
inline GridReport verify_theorem_grid(const std::vector<double>& c_values,
                                      const std::vector<std::vector<double>>& alpha_grids,
                                      const std::vector<int>& k_values, std::size_t trials,
                                      std::uint64_t seed) {
    if (c_values.size() != alpha_grids.size())
        throw ConfigError("theorem grid: one alpha grid per c value required");
    if (k_values.empty()) throw ConfigError("theorem grid: K values required");
    if (trials == 0) throw ConfigError("theorem grid: trials must be >= 1");

    GridReport report;
    report.trials = trials;
    report.seed = seed;

    std::size_t pair_index = 0;
    for (std::size_t g = 0; g < c_values.size(); ++g) {
        const double c = c_values[g];
        const auto& alphas = alpha_grids[g];
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            for (std::size_t b = a + 1; b < alphas.size(); ++b) {
                const double ai = std::min(alphas[a], alphas[b]);
                const double aj = std::max(alphas[a], alphas[b]);
                if (ai == aj) continue;
                BetaPair pair{{ai, c - ai}, {aj, c - aj}};
                const std::uint64_t pair_seed = derive_seed(seed, "theory/pair", pair_index);
                ++pair_index;
                for (int k : k_values) {
                    GridRow row;
                    row.c = c;
                    row.alpha_i = ai;
                    row.alpha_j = aj;
                    row.k = k;
                    row.delta_mean = delta_mean(pair);
                    row.delta_var = delta_var(pair);
                    const auto em = misrank_probability(pair, RankStatistic::mean, k,
                                                        trials, pair_seed);
                    const auto ev = misrank_probability(pair, RankStatistic::variance, k,
                                                        trials, pair_seed);
                    row.p_mean = em.p_hat;
                    row.se_mean = em.std_error;
                    row.p_var = ev.p_hat;
                    row.se_var = ev.std_error;
                    row.regime = pair.theorem_regime();
                    report.rows.push_back(row);
                }
            }
        }
    }

    report.delta_ordering = true;
    report.mean_le_var = true;
    report.scaling_bounded = true;
    report.vanishing_with_k = true;
    for (const auto& row : report.rows) {
        if (!(row.delta_mean > row.delta_var && row.delta_var > 0.0))
            report.delta_ordering = false;
        if (row.p_mean > row.p_var + 3.0 * std::sqrt(row.se_mean * row.se_mean +
                                                     row.se_var * row.se_var))
            report.mean_le_var = false;
        const BetaPair pair{{row.alpha_i, row.c - row.alpha_i},
                            {row.alpha_j, row.c - row.alpha_j}};
        const double vi = beta_moments(pair.left).variance;
        const double vj = beta_moments(pair.right).variance;
        const double envelope = (vi + vj) / (static_cast<double>(row.k) * row.delta_mean *
                                             row.delta_mean);
        if (row.p_mean > envelope + 3.0 * row.se_mean) report.scaling_bounded = false;
    }
    // group rows by pair to compare smallest and largest K
    for (std::size_t i = 0; i < report.rows.size();) {
        std::size_t j = i;
        const GridRow* lo = &report.rows[i];
        const GridRow* hi = &report.rows[i];
        while (j < report.rows.size() && report.rows[j].c == report.rows[i].c &&
               report.rows[j].alpha_i == report.rows[i].alpha_i &&
               report.rows[j].alpha_j == report.rows[i].alpha_j) {
            if (report.rows[j].k < lo->k) lo = &report.rows[j];
            if (report.rows[j].k > hi->k) hi = &report.rows[j];
            ++j;
        }
        if (lo != hi &&
            hi->p_mean > lo->p_mean + 3.0 * std::sqrt(lo->se_mean * lo->se_mean +
                                                      hi->se_mean * hi->se_mean))
            report.vanishing_with_k = false;
        if (lo != hi &&
            hi->p_var > lo->p_var + 3.0 * std::sqrt(lo->se_var * lo->se_var +
                                                    hi->se_var * hi->se_var))
            report.vanishing_with_k = false;
        i = j;
    }
    return report;
}

inline void write_grid_csv(const GridReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "c,alpha_i,alpha_j,k,delta_mean,delta_var,p_mean,se_mean,p_var,se_var,regime\n";
    const auto f = [](double v) { return datagen::detail::format_double(v); };
    for (const auto& r : report.rows)
        out << f(r.c) << ',' << f(r.alpha_i) << ',' << f(r.alpha_j) << ',' << r.k << ','
            << f(r.delta_mean) << ',' << f(r.delta_var) << ',' << f(r.p_mean) << ','
            << f(r.se_mean) << ',' << f(r.p_var) << ',' << f(r.se_var) << ','
            << (r.regime ? "true" : "false") << "\n";
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_grid_summary(const GridReport& report, const std::filesystem::path& path) {
    nlohmann::json j;
    j["rows"] = report.rows.size();
    j["trials"] = report.trials;
    j["seed"] = report.seed;
    j["flags"] = {{"delta_ordering", report.delta_ordering},
                  {"mean_le_var", report.mean_le_var},
                  {"scaling_bounded", report.scaling_bounded},
                  {"vanishing_with_k", report.vanishing_with_k}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace incdet::theory
