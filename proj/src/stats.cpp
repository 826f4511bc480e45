#include "callsynth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace callsynth::stats {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;

// Series for P(a,x); converges quickly for x < a + 1.
double p_series(double a, double x) {
  double ap = a, del = 1.0 / a, sum = del;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x) by the modified Lentz method; for x >= a + 1.
double q_contfrac(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_args(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || std::isnan(a) || std::isnan(x))
    fail(ErrorKind::OutOfRange, "incomplete gamma requires a > 0 and x >= 0");
}

void check_pair(std::span<const double> o, std::span<const double> e) {
  if (o.size() != e.size())
    fail(ErrorKind::LengthMismatch, std::to_string(o.size()) + " vs " + std::to_string(e.size()));
  if (o.empty()) fail(ErrorKind::EmptyInput, "no categories");
  for (std::size_t j = 0; j < o.size(); ++j) {
    if (!(o[j] >= 0.0)) fail(ErrorKind::OutOfRange, "negative observed count");
    if (!(e[j] > 0.0)) fail(ErrorKind::ZeroExpectedCell, "expected cell " + std::to_string(j) + " is 0");
  }
}

}  // namespace

std::string_view to_string(TestKind t) noexcept {
  return t == TestKind::chi_square ? "chi_square" : "g_test";
}

double gamma_p(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? p_series(a, x) : 1.0 - q_contfrac(a, x);
}

double gamma_q(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - p_series(a, x) : q_contfrac(a, x);
}

double chi2_sf(double x, double df) {
  if (df == 0.0) return x > 0.0 ? 0.0 : 1.0;  // point mass at zero
  if (x <= 0.0) return 1.0;
  return gamma_q(df / 2.0, x / 2.0);
}

std::vector<double> scale_expected(std::span<const double> e, double n_real) {
  const double n_s = std::accumulate(e.begin(), e.end(), 0.0);
  if (!(n_s > 0.0)) fail(ErrorKind::ZeroTotal, "expected distribution has zero total");
  std::vector<double> out(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) out[j] = e[j] * n_real / n_s;
  return out;
}

std::vector<double> scale_expected(const FrequencyDistribution& e, long n_real) {
  std::vector<double> c(e.counts.begin(), e.counts.end());
  return scale_expected(c, static_cast<double>(n_real));
}

TestFragment chi_square(std::span<const double> o, std::span<const double> e) {
  check_pair(o, e);
  double stat = 0.0;
  for (std::size_t j = 0; j < o.size(); ++j) stat += (o[j] - e[j]) * (o[j] - e[j]) / e[j];
  TestFragment f{stat, static_cast<int>(o.size()) - 1, 1.0};
  f.p_value = chi2_sf(stat, f.df);
  return f;
}

TestFragment g_test(std::span<const double> o, std::span<const double> e) {
  check_pair(o, e);
  double stat = 0.0;
  for (std::size_t j = 0; j < o.size(); ++j)
    if (o[j] > 0.0) stat += o[j] * std::log(o[j] / e[j]);
  stat *= 2.0;
  // Rounding can leave a tiny negative value when O is proportional to E'.
  if (stat < 0.0) stat = 0.0;
  TestFragment f{stat, static_cast<int>(o.size()) - 1, 1.0};
  f.p_value = chi2_sf(stat, f.df);
  return f;
}

std::vector<double> proportions(std::span<const double> counts) {
  const double s = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(s > 0.0)) fail(ErrorKind::ZeroTotal, "cannot normalize an all-zero vector");
  std::vector<double> out(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) out[j] = counts[j] / s;
  return out;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    fail(ErrorKind::LengthMismatch, std::to_string(p.size()) + " vs " + std::to_string(q.size()));
  auto check = [](std::span<const double> v, const char* name) {
    double s = 0.0;
    for (double x : v) {
      if (!(x >= 0.0)) fail(ErrorKind::NotNormalized, std::string(name) + " has a negative entry");
      s += x;
    }
    if (std::fabs(s - 1.0) > 1e-9)
      fail(ErrorKind::NotNormalized, std::string(name) + " sums to " + std::to_string(s));
  };
  check(p, "P");
  check(q, "Q");
  double kl_p = 0.0, kl_q = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double m = 0.5 * (p[j] + q[j]);
    if (p[j] > 0.0) kl_p += p[j] * std::log2(p[j] / m);
    if (q[j] > 0.0) kl_q += q[j] * std::log2(q[j] / m);
  }
  const double js = 0.5 * kl_p + 0.5 * kl_q;
  return std::clamp(js, 0.0, 1.0);
}

TestKind choose_test(std::size_t n, std::span<const double> expected, double min_expected) {
  if (n < 2) fail(ErrorKind::DegenerateDimension, "fewer than two labels after merging");
  for (double e : expected)
    if (e < min_expected) return TestKind::g_test;
  return TestKind::chi_square;
}

StatResult compare(const FrequencyDistribution& real, const FrequencyDistribution& synth,
                   double min_expected) {
  if (real.labels != synth.labels)
    fail(ErrorKind::DimensionMismatch, "merged label lists differ");
  StatResult r;
  r.merged_labels = real.labels;
  if (r.merged_labels.size() < 2)
    fail(ErrorKind::DegenerateDimension,
         "merged label set is {" + (r.merged_labels.empty() ? std::string() : r.merged_labels[0]) + "}");

  const double n_r = static_cast<double>(real.occurrences());
  const double n_s = static_cast<double>(synth.occurrences());
  if (!(n_r > 0.0)) fail(ErrorKind::ZeroTotal, "real distribution has zero total");
  std::vector<double> e_all(synth.counts.begin(), synth.counts.end());
  const auto e_scaled = scale_expected(e_all, n_r);

  std::vector<double> o, e, p_real, p_synth;
  for (std::size_t j = 0; j < real.labels.size(); ++j) {
    const double oj = static_cast<double>(real.counts[j]);
    if (oj == 0.0 && e_scaled[j] == 0.0) continue;
    r.tested_labels.push_back(real.labels[j]);
    o.push_back(oj);
    e.push_back(e_scaled[j]);
    p_real.push_back(oj / n_r);
    p_synth.push_back(synth.counts[j] / n_s);
  }
  r.expected_scaled = e;
  r.js_divergence = js_divergence(p_real, p_synth);
  r.df = static_cast<int>(o.size()) - 1;

  // Exact proportionality in integer arithmetic: O_j * N_S == E_j * N_R.
  bool proportional = true;
  for (std::size_t j = 0; j < real.labels.size(); ++j)
    proportional = proportional && static_cast<long double>(real.counts[j]) * n_s ==
                                       static_cast<long double>(synth.counts[j]) * n_r;

  bool zero_expected = false;
  for (double x : e) zero_expected = zero_expected || x == 0.0;
  r.test = zero_expected ? TestKind::g_test : choose_test(r.merged_labels.size(), e, min_expected);

  if (r.df == 0) {
    // One populated cell on both sides: O equals E' exactly.
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.note = "single populated cell";
    return r;
  }
  if (proportional) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  if (zero_expected) {
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    r.note = "synthetic corpus never produced a label observed in the real corpus";
    return r;
  }
  const auto frag = r.test == TestKind::chi_square ? chi_square(o, e) : g_test(o, e);
  r.statistic = frag.statistic;
  r.p_value = frag.p_value;
  return r;
}

}  // namespace callsynth::stats
