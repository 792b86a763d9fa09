#pragma once

// Registry-completeness toolkit: multiplicative growth simulation, fixed-scale
// lognormal fitting, the bootstrap indicator regression that predicts a
// country's mean firm revenue, the empirical relation turning observed and
// predicted means into a completeness fraction, and truncated-lognormal
// expected histograms for comparing a registry against the size distribution
// it should have.
//
// Conventions shared by everything here: revenues are in USD, logarithms are
// natural, and the lognormal scale parameter defaults to sigma = 2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "netqual/errors.hpp"
#include "netqual/rng.hpp"
#include "netqual/svr.hpp"
#include "netqual/tables.hpp"
#include "netqual/util.hpp"

namespace netqual {

// ---------------------------------------------------------------------------
// Multiplicative growth samples
// ---------------------------------------------------------------------------

// R_t = r0 * prod_k (1 + F_k) with F_k i.i.d. normal(factor_mean, factor_sd).
// With a fixed step count the log revenues are a sum of i.i.d. terms and the
// sample is asymptotically lognormal; giving firms exponentially jittered
// ages (step_jitter) mixes lognormals of different widths, which fattens the
// upper tail the way real registries do for the largest firms.
struct GibratParams {
    double r0 = 1.0;
    std::size_t steps = 1;
    double factor_mean = 0.0;
    double factor_sd = 0.0;
    std::optional<double> step_jitter; // spread of per-firm step counts
};

inline std::vector<double> gibrat_generate(const GibratParams& params, std::size_t n,
                                           std::uint64_t seed) {
    if (n < 1) throw DomainValueError("gibrat_generate: sample size must be >= 1");
    if (params.steps < 1) throw DomainValueError("gibrat_generate: steps must be >= 1");
    if (!(params.r0 > 0.0)) throw DomainValueError("gibrat_generate: r0 must be positive");
    if (!(params.factor_sd >= 0.0))
        throw DomainValueError("gibrat_generate: factor_sd must be non-negative");
    if (params.step_jitter && !(*params.step_jitter >= 0.0))
        throw DomainValueError("gibrat_generate: step_jitter must be non-negative");

    Rng rng(seed);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t steps = params.steps;
        if (params.step_jitter) {
            // Exponential with mean 1, recentred so the expected step count
            // stays near params.steps while the upper tail stretches.
            const double e = rng.exponential(1.0);
            const double t = static_cast<double>(params.steps) + *params.step_jitter * (e - 1.0);
            steps = static_cast<std::size_t>(std::max(std::llround(t), 1ll));
        }
        double r = params.r0;
        for (std::size_t k = 0; k < steps; ++k) {
            double f = rng.normal(params.factor_mean, params.factor_sd);
            // Growth factors at or below -1 would wipe out or negate the
            // firm; reject and redraw, with a cap so a distribution massed
            // below -1 fails loudly instead of spinning.
            int rejected = 0;
            while (f <= -1.0) {
                if (++rejected > 1000)
                    throw DomainValueError(
                        "gibrat_generate: growth factors concentrate at or below -1");
                f = rng.normal(params.factor_mean, params.factor_sd);
            }
            r *= 1.0 + f;
        }
        out[i] = r;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lognormal fitting with fixed scale
// ---------------------------------------------------------------------------

struct LognormalFit {
    double mu = 0.0;    // location, log-USD
    double sigma = 2.0; // scale
    std::size_t n = 0;
};

// Maximum-likelihood location for a lognormal with known scale: the mean of
// the log values (sigma does not enter the estimate, only the fit record).
inline LognormalFit fit_mu_fixed_sigma(const std::vector<double>& sample, double sigma = 2.0) {
    if (sample.size() < 2)
        throw InsufficientDataError("fit_mu_fixed_sigma: need at least 2 values");
    if (!(sigma > 0.0)) throw DomainValueError("fit_mu_fixed_sigma: sigma must be positive");
    double acc = 0.0;
    for (double v : sample) {
        if (!(v > 0.0))
            throw DomainValueError("fit_mu_fixed_sigma: revenues must be positive");
        acc += std::log(v);
    }
    return LognormalFit{acc / static_cast<double>(sample.size()), sigma, sample.size()};
}

// For a lognormal the standard deviation is proportional to the mean:
// s/m = sqrt(e^{sigma^2} - 1).  Returns ln(s) - ln(m) - 1/2 ln(e^{sigma^2}-1),
// which is zero in population and near zero for samples that are genuinely
// lognormal with the fitted scale.  Sample moments of heavy-tailed data are
// noisy, so treat this as a diagnostic, not a test statistic.
inline double mean_std_check(const LognormalFit& fit, const std::vector<double>& sample) {
    if (sample.size() < 2) throw InsufficientDataError("mean_std_check: need at least 2 values");
    const double n = static_cast<double>(sample.size());
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(mean > 0.0) || !(sd > 0.0))
        throw DomainValueError("mean_std_check: sample mean and sd must be positive");
    return std::log(sd) - std::log(mean) - 0.5 * std::log(std::expm1(fit.sigma * fit.sigma));
}

// ---------------------------------------------------------------------------
// Indicator regression for the expected mean revenue
// ---------------------------------------------------------------------------

struct IndicatorFitParams {
    std::size_t n_models = 1000;
    double subsample = 0.75;  // fraction of countries per bootstrap sample
    std::size_t core_size = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool impute_missing = true; // per-column median; strict mode throws instead
    SvrParams svr;              // C = 1, epsilon = 0.1 by default
};

// Bootstrap-averaged linear model for ln(mean revenue) from country
// indicators.  `selected` is ordered by decreasing mean |coefficient|;
// coefficients live in standardized feature space and the intercept includes
// the target mean, so a country sitting at every training mean predicts
// exp(intercept).
struct IndicatorModel {
    std::vector<std::string> selected;
    std::vector<double> coefficients;   // aligned with selected
    std::vector<double> effect_sd;      // bootstrap spread, aligned with selected
    double intercept = 0.0;
    // Share of first-round bootstrap models ranking the indicator inside the
    // core by |coefficient|; present for every candidate, not just survivors.
    std::map<std::string, double> selection_frequency;
    std::vector<double> feature_mean;   // standardization, aligned with selected
    std::vector<double> feature_sd;
    std::vector<double> feature_median; // imputation value
    std::vector<double> feature_min;    // training range, for extrapolation flags
    std::vector<double> feature_max;
    double r_squared = 0.0; // in-sample fit of the averaged model
    std::size_t n_countries = 0;
    std::size_t n_models = 0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["countries"] = n_countries;
        j["models"] = n_models;
        j["intercept"] = round_sig12(intercept);
        j["r_squared"] = round_sig12(r_squared);
        j["indicators"] = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < selected.size(); ++k) {
            nlohmann::ordered_json row;
            row["code"] = selected[k];
            row["coefficient"] = round_sig12(coefficients[k]);
            row["effect_sd"] = round_sig12(effect_sd[k]);
            row["selection_frequency"] = round_sig12(selection_frequency.at(selected[k]));
            row["feature_mean"] = round_sig12(feature_mean[k]);
            row["feature_sd"] = round_sig12(feature_sd[k]);
            j["indicators"].push_back(std::move(row));
        }
        j["candidate_selection_frequency"] = nlohmann::ordered_json::object();
        for (const auto& [code, freq] : selection_frequency)
            j["candidate_selection_frequency"][code] = round_sig12(freq);
        return j;
    }
};

namespace detail {

struct BootstrapRound {
    std::vector<std::vector<double>> coefs; // [model][active feature]
    std::vector<double> bias;               // [model]
    std::vector<double> mean_abs;           // [active feature]
};

// Fit n_models epsilon-insensitive regressions on bootstrap subsamples of the
// rows, restricted to the active feature columns.  Model m always uses the
// subsample drawn from derive_seed(seed, "bootstrap", m), so elimination
// rounds see paired resamples and results do not depend on thread count.
inline BootstrapRound fit_bootstrap_round(const std::vector<std::vector<double>>& x_std,
                                          const std::vector<double>& y_centered,
                                          const std::vector<std::size_t>& active,
                                          const IndicatorFitParams& params) {
    const std::size_t n = x_std.size();
    const std::size_t take = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));
    BootstrapRound round;
    round.coefs.assign(params.n_models, {});
    round.bias.assign(params.n_models, 0.0);

    parallel_chunks(params.n_models, params.threads, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t m = b; m < e; ++m) {
            Rng rng(derive_seed(params.seed, "bootstrap", m));
            const std::vector<std::uint32_t> rows = rng.sample_without_replacement(
                static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(std::min(take, n)));
            std::vector<std::vector<double>> xs(rows.size());
            std::vector<double> ys(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                ys[r] = y_centered[rows[r]];
                xs[r].resize(active.size());
                for (std::size_t j = 0; j < active.size(); ++j)
                    xs[r][j] = x_std[rows[r]][active[j]];
            }
            const SvrModel model = svr_fit(xs, ys, params.svr);
            round.coefs[m] = model.w;
            round.bias[m] = model.b;
        }
    });

    round.mean_abs.assign(active.size(), 0.0);
    for (std::size_t m = 0; m < params.n_models; ++m)
        for (std::size_t j = 0; j < active.size(); ++j)
            round.mean_abs[j] += std::abs(round.coefs[m][j]);
    for (double& v : round.mean_abs) v /= static_cast<double>(params.n_models);
    return round;
}

} // namespace detail

// targets maps country -> ln(expected mean revenue).  Only countries present
// in both the table and the targets enter the fit.
inline IndicatorModel fit_indicator_model(const IndicatorTable& table,
                                          const std::map<std::string, double>& targets,
                                          const IndicatorFitParams& params = {}) {
    if (params.n_models < 1)
        throw DomainValueError("fit_indicator_model: n_models must be >= 1");
    if (!(params.subsample > 0.0 && params.subsample <= 1.0))
        throw DomainValueError("fit_indicator_model: subsample must be in (0,1]");
    if (params.core_size < 1)
        throw DomainValueError("fit_indicator_model: core_size must be >= 1");
    if (table.codes.empty())
        throw InsufficientDataError("fit_indicator_model: indicator table has no columns");

    std::vector<std::size_t> rows;
    std::vector<double> y;
    for (std::size_t r = 0; r < table.countries.size(); ++r) {
        auto it = targets.find(table.countries[r]);
        if (it == targets.end()) continue;
        rows.push_back(r);
        y.push_back(it->second);
    }
    const std::size_t n = rows.size();
    const std::size_t d = table.codes.size();
    if (n < 15)
        throw InsufficientDataError("fit_indicator_model: need >= 15 countries with targets, have " +
                                    std::to_string(n));

    // Median imputation per column, over the modeling rows only.
    std::vector<double> medians(d);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> seen;
        for (std::size_t r : rows)
            if (table.values[r][j]) seen.push_back(*table.values[r][j]);
        if (seen.empty())
            throw RankDeficientError("fit_indicator_model: indicator '" + table.codes[j] +
                                     "' has no observed values");
        std::sort(seen.begin(), seen.end());
        const std::size_t m = seen.size();
        medians[j] = m % 2 ? seen[m / 2] : 0.5 * (seen[m / 2 - 1] + seen[m / 2]);
    }

    std::vector<std::vector<double>> x_raw(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const auto& cell = table.values[rows[i]][j];
            if (cell) {
                x_raw[i][j] = *cell;
            } else if (params.impute_missing) {
                x_raw[i][j] = medians[j];
            } else {
                throw MissingInputError("fit_indicator_model: missing value for indicator '" +
                                        table.codes[j] + "' in country '" +
                                        table.countries[rows[i]] + "'");
            }
        }

    std::vector<double> means(d, 0.0), sds(d, 0.0), mins(d), maxs(d);
    for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        mins[j] = x_raw[0][j];
        maxs[j] = x_raw[0][j];
        for (std::size_t i = 0; i < n; ++i) {
            acc += x_raw[i][j];
            mins[j] = std::min(mins[j], x_raw[i][j]);
            maxs[j] = std::max(maxs[j], x_raw[i][j]);
        }
        means[j] = acc / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            ss += (x_raw[i][j] - means[j]) * (x_raw[i][j] - means[j]);
        sds[j] = std::sqrt(ss / static_cast<double>(n - 1));
        if (!(sds[j] > 0.0))
            throw RankDeficientError("fit_indicator_model: indicator '" + table.codes[j] +
                                     "' is constant across countries");
    }

    std::vector<std::vector<double>> x_std(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x_std[i][j] = (x_raw[i][j] - means[j]) / sds[j];

    double target_mean = 0.0;
    for (double v : y) target_mean += v;
    target_mean /= static_cast<double>(n);
    std::vector<double> y_centered(n);
    for (std::size_t i = 0; i < n; ++i) y_centered[i] = y[i] - target_mean;

    std::vector<std::size_t> active(d);
    for (std::size_t j = 0; j < d; ++j) active[j] = j;

    detail::BootstrapRound round = detail::fit_bootstrap_round(x_std, y_centered, active, params);

    // Selection frequency: share of first-round models that rank the
    // indicator inside the core by |coefficient| (ties resolved toward the
    // lower column index, i.e. the lexicographically earlier code).
    IndicatorModel model;
    const std::size_t core = std::min(params.core_size, d);
    std::vector<double> sel_count(d, 0.0);
    for (std::size_t m = 0; m < params.n_models; ++m) {
        std::vector<std::size_t> order(d);
        for (std::size_t j = 0; j < d; ++j) order[j] = j;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(round.coefs[m][a]) > std::abs(round.coefs[m][b]);
        });
        for (std::size_t k = 0; k < core; ++k) sel_count[order[k]] += 1.0;
    }
    for (std::size_t j = 0; j < d; ++j)
        model.selection_frequency[table.codes[j]] =
            sel_count[j] / static_cast<double>(params.n_models);

    // Eliminate the indicator with the smallest mean |coefficient| and refit
    // until only the core remains (ties drop the earlier code; the rule just
    // has to be deterministic).
    while (active.size() > params.core_size) {
        std::size_t worst = 0;
        for (std::size_t j = 1; j < active.size(); ++j)
            if (round.mean_abs[j] < round.mean_abs[worst]) worst = j;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
        round = detail::fit_bootstrap_round(x_std, y_centered, active, params);
    }

    // Mean model over the final round.
    std::vector<double> coef_mean(active.size(), 0.0), coef_sd(active.size(), 0.0);
    double bias_mean = 0.0;
    for (std::size_t m = 0; m < params.n_models; ++m) {
        bias_mean += round.bias[m];
        for (std::size_t j = 0; j < active.size(); ++j) coef_mean[j] += round.coefs[m][j];
    }
    bias_mean /= static_cast<double>(params.n_models);
    for (double& v : coef_mean) v /= static_cast<double>(params.n_models);
    for (std::size_t m = 0; m < params.n_models; ++m)
        for (std::size_t j = 0; j < active.size(); ++j) {
            const double dlt = round.coefs[m][j] - coef_mean[j];
            coef_sd[j] += dlt * dlt;
        }
    for (double& v : coef_sd)
        v = params.n_models > 1
                ? std::sqrt(v / static_cast<double>(params.n_models - 1))
                : 0.0;

    // Present survivors in decreasing order of mean |coefficient|.
    std::vector<std::size_t> order(active.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(coef_mean[a]) > std::abs(coef_mean[b]);
    });

    for (std::size_t k : order) {
        const std::size_t col = active[k];
        model.selected.push_back(table.codes[col]);
        model.coefficients.push_back(coef_mean[k]);
        model.effect_sd.push_back(coef_sd[k]);
        model.feature_mean.push_back(means[col]);
        model.feature_sd.push_back(sds[col]);
        model.feature_median.push_back(medians[col]);
        model.feature_min.push_back(mins[col]);
        model.feature_max.push_back(maxs[col]);
    }
    model.intercept = target_mean + bias_mean;
    model.n_countries = n;
    model.n_models = params.n_models;

    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = bias_mean;
        for (std::size_t k = 0; k < order.size(); ++k)
            pred += coef_mean[order[k]] * x_std[i][active[order[k]]];
        sse += (y_centered[i] - pred) * (y_centered[i] - pred);
        sst += y_centered[i] * y_centered[i];
    }
    model.r_squared = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
    return model;
}

struct RhatEstimate {
    double r_hat_mean = 0.0; // USD
    bool extrapolated = false; // some feature fell outside the training range
};

// Predict a country's mean revenue from its indicator values (code -> value,
// absent = missing).  Missing selected indicators use the training median
// unless imputation is disabled, in which case they are an error.
inline RhatEstimate estimate_rhat(const IndicatorModel& model,
                                  const std::map<std::string, std::optional<double>>& values,
                                  bool impute_missing = true) {
    double ln_rhat = model.intercept;
    bool extrapolated = false;
    for (std::size_t k = 0; k < model.selected.size(); ++k) {
        const auto it = values.find(model.selected[k]);
        std::optional<double> v =
            it == values.end() ? std::optional<double>{} : it->second;
        if (!v) {
            if (!impute_missing)
                throw MissingInputError("estimate_rhat: missing selected indicator '" +
                                        model.selected[k] + "'");
            v = model.feature_median[k];
        }
        if (*v < model.feature_min[k] || *v > model.feature_max[k]) extrapolated = true;
        ln_rhat += model.coefficients[k] * (*v - model.feature_mean[k]) / model.feature_sd[k];
    }
    return RhatEstimate{std::exp(ln_rhat), extrapolated};
}

inline RhatEstimate estimate_rhat(const IndicatorModel& model, const IndicatorTable& table,
                                  const std::string& country, bool impute_missing = true) {
    const auto row = table.country_row(country);
    if (!row)
        throw MissingInputError("estimate_rhat: country '" + country +
                                "' not in indicator table");
    std::map<std::string, std::optional<double>> values;
    for (const std::string& code : model.selected) {
        const auto col = table.code_col(code);
        values[code] = col ? table.values[*row][*col] : std::optional<double>{};
    }
    return estimate_rhat(model, values, impute_missing);
}

// ---------------------------------------------------------------------------
// Completeness from observed vs expected mean revenue
// ---------------------------------------------------------------------------

// ln C = a0 + a1 ln(R_obs) + a2 ln(R_hat).  The shipped calibration reflects
// registries that favour large firms: a higher observed mean for the same
// expected mean signals a thinner, more truncated registry.
struct CompletenessCoefficients {
    double a0 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
};

inline constexpr CompletenessCoefficients kBuiltinCompletenessCoefficients{-1.3855, -0.954,
                                                                           1.1120};

struct CRelationPoint {
    double c = 0.0;          // completeness fraction in (0,1]
    double r_obs_mean = 0.0; // USD
    double r_hat_mean = 0.0; // USD
};

namespace detail {

// Solve a symmetric 3x3 system by Gaussian elimination with partial pivoting.
inline std::array<double, 3> solve3(std::array<std::array<double, 4>, 3> m) {
    for (std::size_t col = 0; col < 3; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        if (std::abs(m[col][col]) < 1e-12)
            throw RankDeficientError("fit_c_relation: observations are collinear");
        for (std::size_t r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (std::size_t c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

} // namespace detail

inline CompletenessCoefficients fit_c_relation(const std::vector<CRelationPoint>& obs) {
    if (obs.size() < 4)
        throw InsufficientDataError("fit_c_relation: need at least 4 observations");
    // Least squares of ln C on [1, ln R_obs, ln R_hat] via normal equations.
    std::array<std::array<double, 4>, 3> m{};
    for (const CRelationPoint& p : obs) {
        if (!(p.c > 0.0) || !(p.r_obs_mean > 0.0) || !(p.r_hat_mean > 0.0))
            throw DomainValueError("fit_c_relation: observations must be positive");
        const std::array<double, 3> row{1.0, std::log(p.r_obs_mean), std::log(p.r_hat_mean)};
        const double t = std::log(p.c);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
            m[i][3] += row[i] * t;
        }
    }
    const std::array<double, 3> a = detail::solve3(m);
    return CompletenessCoefficients{a[0], a[1], a[2]};
}

struct CompletenessEstimate {
    std::string country;
    double r_obs_mean = 0.0;
    double r_hat_mean = 0.0;
    double mu = 0.0;  // ln(r_hat_mean) - sigma^2/2
    double c = 1.0;   // fraction of firms the registry is estimated to hold
    bool clamped = false;
};

inline CompletenessEstimate estimate_completeness(const CompletenessCoefficients& coeffs,
                                                  std::string country, double r_obs_mean,
                                                  double r_hat_mean, double sigma = 2.0) {
    if (!(r_obs_mean > 0.0) || !(r_hat_mean > 0.0))
        throw DomainValueError("estimate_completeness: mean revenues must be positive");
    CompletenessEstimate est;
    est.country = std::move(country);
    est.r_obs_mean = r_obs_mean;
    est.r_hat_mean = r_hat_mean;
    // Location of the full (untruncated) firm population implied by the mean:
    // E[X] = exp(mu + sigma^2/2) = r_hat.
    est.mu = std::log(r_hat_mean) - 0.5 * sigma * sigma;
    const double raw =
        std::exp(coeffs.a0 + coeffs.a1 * std::log(r_obs_mean) + coeffs.a2 * std::log(r_hat_mean));
    if (!(raw > 0.0))
        throw DomainValueError("estimate_completeness: completeness underflowed to zero");
    est.c = raw;
    if (raw > 1.0) {
        est.c = 1.0;
        est.clamped = true;
    }
    return est;
}

// ---------------------------------------------------------------------------
// Expected vs observed size distributions
// ---------------------------------------------------------------------------

// Bin masses over log-spaced revenue edges, with explicit underflow and
// overflow rows so the masses always account for everything and sum to one.
struct Histogram {
    std::vector<double> edges; // ascending, positive
    std::vector<double> mass;  // size edges.size()+1: below, per-bin, above
};

inline std::vector<double> log_spaced_edges(double lo, double hi, std::size_t bins) {
    if (!(lo > 0.0) || !(hi > lo)) throw DomainValueError("log_spaced_edges: need 0 < lo < hi");
    if (bins < 1) throw DomainValueError("log_spaced_edges: need at least one bin");
    std::vector<double> edges(bins + 1);
    const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i)
        edges[i] = std::exp(std::log(lo) + step * static_cast<double>(i));
    edges.front() = lo;
    edges.back() = hi;
    return edges;
}

namespace detail {

inline void check_edges(const std::vector<double>& edges) {
    if (edges.size() < 2) throw DomainValueError("histogram: need at least 2 bin edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!(edges[i] > 0.0)) throw DomainValueError("histogram: edges must be positive");
        if (i > 0 && !(edges[i] > edges[i - 1]))
            throw DomainValueError("histogram: edges must be strictly increasing");
    }
}

} // namespace detail

// Distribution a registry holding the top fraction C of a lognormal(mu,
// sigma) population should show: the lognormal conditioned on exceeding its
// (1-C)-quantile.  Masses are CDF differences over a partition of (0, inf),
// so they sum to one by construction.
inline Histogram expected_distribution(double mu, double sigma, double c,
                                       const std::vector<double>& edges) {
    detail::check_edges(edges);
    if (!(sigma > 0.0)) throw DomainValueError("expected_distribution: sigma must be positive");
    if (!(c > 0.0 && c <= 1.0))
        throw DomainValueError("expected_distribution: completeness must be in (0,1]");
    // Revenue threshold above which firms enter the registry.
    const double cutoff = c >= 1.0 ? 0.0 : std::exp(mu + sigma * normal_quantile(1.0 - c));

    // Truncated CDF at x: P(X <= x | X > cutoff).
    const auto cdf = [&](double x) {
        if (x <= cutoff) return 0.0;
        const double full = normal_cdf((std::log(x) - mu) / sigma);
        const double at_cut =
            cutoff > 0.0 ? normal_cdf((std::log(cutoff) - mu) / sigma) : 0.0;
        return (full - at_cut) / c;
    };

    Histogram h;
    h.edges = edges;
    h.mass.resize(edges.size() + 1);
    double prev = 0.0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const double cur = cdf(edges[i]);
        h.mass[i] = cur - prev;
        prev = cur;
    }
    h.mass.back() = 1.0 - prev;
    return h;
}

inline Histogram observed_histogram(const std::vector<double>& values,
                                    const std::vector<double>& edges) {
    detail::check_edges(edges);
    if (values.empty()) throw EmptyInputError("observed_histogram: no values");
    Histogram h;
    h.edges = edges;
    h.mass.assign(edges.size() + 1, 0.0);
    for (double v : values) {
        if (!(v > 0.0)) throw DomainValueError("observed_histogram: values must be positive");
        const auto it = std::upper_bound(edges.begin(), edges.end(), v);
        h.mass[static_cast<std::size_t>(it - edges.begin())] += 1.0;
    }
    for (double& m : h.mass) m /= static_cast<double>(values.size());
    return h;
}

// ---------------------------------------------------------------------------
// Aggregate helpers
// ---------------------------------------------------------------------------

struct GdpRevenueFit {
    double intercept = 0.0; // in log-log space
    double slope = 0.0;
    double r_squared = 0.0;

    double predict(double gdp) const {
        if (!(gdp > 0.0)) throw DomainValueError("GdpRevenueFit: gdp must be positive");
        return std::exp(intercept + slope * std::log(gdp));
    }
};

// Log-log least squares of total revenue on GDP, for countries whose official
// aggregate lacks a revenue total.
inline GdpRevenueFit fit_gdp_revenue(const std::vector<std::pair<double, double>>& known) {
    if (known.size() < 3)
        throw InsufficientDataError("fit_gdp_revenue: need at least 3 (gdp, revenue) pairs");
    const double n = static_cast<double>(known.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [gdp, rev] : known) {
        if (!(gdp > 0.0) || !(rev > 0.0))
            throw DomainValueError("fit_gdp_revenue: gdp and revenue must be positive");
        mx += std::log(gdp);
        my += std::log(rev);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [gdp, rev] : known) {
        const double dx = std::log(gdp) - mx;
        const double dy = std::log(rev) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw RankDeficientError("fit_gdp_revenue: gdp values are all equal");
    GdpRevenueFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

inline double impute_total_revenue_from_gdp(const std::vector<std::pair<double, double>>& known,
                                            double query_gdp) {
    return fit_gdp_revenue(known).predict(query_gdp);
}

struct SizeClassCoverage {
    std::string country;
    std::array<std::int64_t, 5> dataset_count{};
    std::array<std::int64_t, 5> aggregate_count{};
    // Dataset share of the official count per band; absent when the official
    // count for the band is zero.
    std::array<std::optional<double>, 5> ratio{};
};

// Companies without an employee count cannot be banded and are left out of
// the numerators.
inline SizeClassCoverage coverage_by_size_class(const std::vector<CompanyRecord>& companies,
                                                const CountryAggregate& aggregate) {
    if (aggregate.size_class_counts.empty())
        throw MissingInputError("coverage_by_size_class: aggregate for '" + aggregate.country +
                                "' has no size-class counts");
    SizeClassCoverage cov;
    cov.country = aggregate.country;
    for (const CompanyRecord& c : companies) {
        if (c.country != aggregate.country || !c.employees) continue;
        cov.dataset_count[static_cast<std::size_t>(size_class_of(*c.employees))] += 1;
    }
    for (std::size_t b = 0; b < kSizeClassLabels.size(); ++b) {
        const auto it = aggregate.size_class_counts.find(kSizeClassLabels[b]);
        cov.aggregate_count[b] = it == aggregate.size_class_counts.end() ? 0 : it->second;
        if (cov.aggregate_count[b] > 0)
            cov.ratio[b] = static_cast<double>(cov.dataset_count[b]) /
                           static_cast<double>(cov.aggregate_count[b]);
    }
    return cov;
}

} // namespace netqual
