#include "accelmc/errorlab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace accelmc {

namespace {

// mean and unbiased variance in one pass (Welford)
std::pair<double, double> mean_var(std::span<const double> xs) {
  double mean = 0.0, m2 = 0.0;
  std::int64_t k = 0;
  for (double x : xs) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  const double var = k > 1 ? m2 / static_cast<double>(k - 1) : 0.0;
  return {mean, var};
}

}  // namespace

LpEstimate lp_norm_estimate(std::span<const double> abs_diffs, double p) {
  if (!(p >= 1.0))
    throw std::invalid_argument("lp_norm_estimate: p must be >= 1");
  if (abs_diffs.empty())
    throw std::invalid_argument("lp_norm_estimate: no samples");

  std::vector<double> powered(abs_diffs.size());
  for (std::size_t i = 0; i < abs_diffs.size(); ++i)
    powered[i] = std::pow(std::abs(abs_diffs[i]), p);
  const auto [m, var] = mean_var(powered);

  LpEstimate est;
  est.samples = static_cast<std::int64_t>(abs_diffs.size());
  if (m <= 0.0) return est;  // exact agreement: (0, 0)
  est.value = std::pow(m, 1.0 / p);
  const double se_m = std::sqrt(var / static_cast<double>(est.samples));
  est.std_error = (1.0 / p) * std::pow(m, 1.0 / p - 1.0) * se_m;
  return est;
}

LpEstimate strong_error(std::span<const double> reference,
                        std::span<const double> approx, double p) {
  if (reference.size() != approx.size())
    throw std::invalid_argument("strong_error: sample counts differ");
  std::vector<double> diffs(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i)
    diffs[i] = std::abs(reference[i] - approx[i]);
  return lp_norm_estimate(diffs, p);
}

LpEstimate strong_error(std::span<const SchemePath> reference,
                        std::span<const SchemePath> approx, double p,
                        ErrorMode mode, int component) {
  if (reference.size() != approx.size())
    throw std::invalid_argument("strong_error: sample counts differ");
  std::vector<double> diffs(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const SchemePath& ref = reference[i];
    const SchemePath& app = approx[i];
    const std::int64_t n_app = app.n_steps();
    if (ref.n_steps() % n_app != 0)
      throw std::invalid_argument(
          "strong_error: reference grid does not contain the approx grid");
    const std::int64_t stride = ref.n_steps() / n_app;
    if (mode == ErrorMode::Terminal) {
      diffs[i] = std::abs(ref.value(ref.n_steps(), component) -
                          app.value(n_app, component));
    } else {
      double sup = 0.0;
      for (std::int64_t j = 0; j <= n_app; ++j) {
        const double d =
            std::abs(ref.value(j * stride, component) - app.value(j, component));
        if (d > sup) sup = d;
      }
      diffs[i] = sup;
    }
  }
  return lp_norm_estimate(diffs, p);
}

RateFit fit_rate(std::span<const std::int64_t> n_values,
                 std::span<const double> errors) {
  if (n_values.size() != errors.size())
    throw std::invalid_argument("fit_rate: size mismatch");
  if (n_values.size() < 3)
    throw std::invalid_argument("fit_rate: need at least 3 points");

  std::vector<double> xs, ys;
  xs.reserve(n_values.size());
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] <= 0)
      throw std::invalid_argument("fit_rate: grid sizes must be positive");
    if (!(errors[i] > 0.0))
      throw std::invalid_argument(
          "fit_rate: errors must be positive for a log fit");
    xs.push_back(std::log2(static_cast<double>(n_values[i])));
    ys.push_back(std::log2(errors[i]));
  }
  {
    auto tmp = xs;
    std::sort(tmp.begin(), tmp.end());
    if (std::unique(tmp.begin(), tmp.end()) - tmp.begin() < 3)
      throw std::invalid_argument("fit_rate: need 3 distinct grid sizes");
  }

  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double sxx_c = sxx - sx * sx / n;
  const double sxy_c = sxy - sx * sy / n;
  const double syy_c = syy - sy * sy / n;

  RateFit fit;
  fit.slope = sxy_c / sxx_c;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r_squared = syy_c > 0.0 ? (sxy_c * sxy_c) / (sxx_c * syy_c) : 1.0;
  return fit;
}

std::vector<RatioRow> error_ratio(const ErrorTable& reference,
                                  const ErrorTable& candidate) {
  std::map<std::int64_t, const ErrorRow*> by_n;
  for (const ErrorRow& row : reference.rows) by_n[row.n] = &row;
  if (by_n.size() != reference.rows.size())
    throw std::invalid_argument("error_ratio: duplicate n in reference table");
  if (candidate.rows.size() != reference.rows.size())
    throw std::invalid_argument("error_ratio: tables cover different grids");

  std::vector<RatioRow> ratios;
  ratios.reserve(candidate.rows.size());
  for (const ErrorRow& cand : candidate.rows) {
    const auto it = by_n.find(cand.n);
    if (it == by_n.end())
      throw std::invalid_argument("error_ratio: tables cover different grids");
    const ErrorRow& ref = *it->second;
    if (ref.error == 0.0)
      throw std::domain_error("error_ratio: reference error is zero at n=" +
                              std::to_string(cand.n));
    RatioRow r;
    r.n = cand.n;
    r.percent = 100.0 * cand.error / ref.error;
    const double rel_c = cand.error != 0.0 ? cand.std_error / cand.error : 0.0;
    const double rel_r = ref.std_error / ref.error;
    r.std_error = std::abs(r.percent) * std::sqrt(rel_c * rel_c + rel_r * rel_r);
    ratios.push_back(r);
  }
  std::sort(ratios.begin(), ratios.end(),
            [](const RatioRow& a, const RatioRow& b) { return a.n < b.n; });
  return ratios;
}

WeakEstimate weak_error(std::span<const double> samples_a,
                        std::span<const double> samples_b,
                        double known_constant) {
  if (samples_a.size() != samples_b.size())
    throw std::invalid_argument("weak_error: sample counts differ");
  if (samples_a.empty())
    throw std::invalid_argument("weak_error: no samples");
  std::vector<double> delta(samples_a.size());
  for (std::size_t i = 0; i < delta.size(); ++i)
    delta[i] = samples_a[i] - samples_b[i];
  const auto [m, var] = mean_var(delta);
  WeakEstimate est;
  est.value = m + known_constant;
  est.std_error = std::sqrt(var / static_cast<double>(delta.size()));
  return est;
}

RhoEstimate rho_l2(std::span<const double> f_eps_ref,
                   std::span<const double> f_eps_bar,
                   std::span<const double> f0,
                   std::span<const double> f0_bar) {
  const std::size_t m = f_eps_ref.size();
  if (f_eps_bar.size() != m || f0.size() != m || f0_bar.size() != m)
    throw std::invalid_argument("rho_l2: sample counts differ");
  if (m == 0) throw std::invalid_argument("rho_l2: no samples");

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double fine_gap = f_eps_ref[i] - f_eps_bar[i];
    const double base_gap = f0[i] - f0_bar[i];
    num += fine_gap * base_gap;
    den += base_gap * base_gap;
  }
  if (den == 0.0)
    throw std::domain_error("rho_l2: base scheme matches its target exactly");

  RhoEstimate est;
  est.raw = num / den;
  est.clamped = std::clamp(est.raw, 0.0, 2.0);
  return est;
}

}  // namespace accelmc
