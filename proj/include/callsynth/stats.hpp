#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "callsynth/taxonomy.hpp"

namespace callsynth::stats {

// Regularized incomplete gamma functions, P + Q = 1.
double gamma_p(double a, double x);
double gamma_q(double a, double x);
// Upper tail of the chi-squared distribution with df degrees of freedom.
double chi2_sf(double x, double df);

enum class TestKind { chi_square, g_test };
std::string_view to_string(TestKind t) noexcept;

struct TestFragment {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

// E'_j = E_j * n_real / sum(E).
std::vector<double> scale_expected(std::span<const double> expected, double n_real);
std::vector<double> scale_expected(const FrequencyDistribution& e, long n_real);

TestFragment chi_square(std::span<const double> observed, std::span<const double> expected);
// Terms with observed 0 contribute 0.
TestFragment g_test(std::span<const double> observed, std::span<const double> expected);

// Base-2, bounded in [0,1]. Inputs must each sum to 1 within 1e-9.
double js_divergence(std::span<const double> p, std::span<const double> q);
std::vector<double> proportions(std::span<const double> counts);

inline constexpr double kMinExpectedForChiSquare = 5.0;

TestKind choose_test(std::size_t merged_label_count, std::span<const double> expected,
                     double min_expected = kMinExpectedForChiSquare);

struct StatResult {
  TestKind test = TestKind::chi_square;
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  double js_divergence = 0.0;
  std::vector<std::string> merged_labels;
  std::vector<std::string> tested_labels;  // merged labels minus cells empty on both sides
  std::vector<double> expected_scaled;     // aligned with tested_labels
  std::string note;
};

// Real counts are the observations; synthetic counts, rescaled to the real
// total, are the expectations. Both distributions must already share labels.
StatResult compare(const FrequencyDistribution& real_merged,
                   const FrequencyDistribution& synth_merged,
                   double min_expected = kMinExpectedForChiSquare);

}  // namespace callsynth::stats
