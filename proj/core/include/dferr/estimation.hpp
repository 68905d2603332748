#pragma once

#include "dferr/monte_carlo.hpp"
#include "dferr/schemes.hpp"
#include "dferr/test_function.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dferr {

/// The four asymptotic bias operators of a scheme.
enum class BiasKind {
  /// lim alpha_n E[(phi(Y_n) - phi(Y)) chi(Y)].
  kTheoretical,
  /// lim alpha_n E[(phi(Y) - phi(Y_n)) chi(Y_n)].
  kPractical,
  /// lim -1/2 alpha_n E[(phi(Y_n) - phi(Y)) (chi(Y_n) - chi(Y))].
  kSymmetric,
  /// lim 1/2 alpha_n E[(phi(Y_n) - phi(Y)) (chi(Y_n) + chi(Y))].
  kSingular,
};

inline constexpr std::array<BiasKind, 4> kAllBiasKinds = {
    BiasKind::kTheoretical, BiasKind::kPractical, BiasKind::kSymmetric, BiasKind::kSingular};

std::string_view to_string(BiasKind kind);
/// Accepts "theoretical", "practical", "symmetric", "singular".
BiasKind parse_bias_kind(std::string_view text);

enum class Pairing {
  /// All kinds are read off the same paired draws.
  kCommonRandomNumbers,
  /// Every kind gets its own substream and its own integrand.
  kIndependentStreams,
};

struct EstimationOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::kPlain;
  Pairing pairing = Pairing::kCommonRandomNumbers;
  unsigned workers = 1;
  /// Draws from the scheme's measure used for reference expectations;
  /// 0 skips them.
  std::size_t reference_samples = 200000;
};

/// Smallest sample count accepted by the estimators.
inline constexpr std::size_t kMinSamples = 1000;

struct BiasEstimate {
  BiasKind kind = BiasKind::kTheoretical;
  std::string scheme;
  std::string phi;
  std::string chi;
  int level = 0;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  /// E_Y[ref[phi] chi] from the scheme's reference structure.
  std::optional<double> reference;
  std::optional<double> reference_std_error;

  /// (value - reference) / combined standard error.
  std::optional<double> z_score() const;
};

BiasEstimate estimate_bias(BiasKind kind, const ApproximationScheme& scheme, const TestFunction& phi,
                           const TestFunction& chi, int level, const EstimationOptions& options);

/// Estimates in the order theoretical, practical, symmetric, singular.
std::vector<BiasEstimate> estimate_all_kinds(const ApproximationScheme& scheme,
                                             const TestFunction& phi, const TestFunction& chi,
                                             int level, const EstimationOptions& options);

struct RelationResiduals {
  /// symmetric - (theoretical + practical) / 2.
  double symmetric = 0.0;
  /// singular - (theoretical - practical) / 2.
  double singular = 0.0;
  /// Standard errors of the residuals, treating the estimates as independent.
  double symmetric_std_error = 0.0;
  double singular_std_error = 0.0;
};

/// Throws unless all four kinds are present for one (phi, chi, level).
RelationResiduals check_relations(std::span<const BiasEstimate> estimates);

struct LocalityResult {
  std::vector<int> levels;
  /// alpha_n E[(phi(Y_n) - phi(Y))^4] per level.
  std::vector<double> values;
  std::vector<double> std_errors;
  /// Log-log slope; NaN when every value is zero.
  double slope = 0.0;
  double r2 = 0.0;
  bool decreasing = false;
  /// slope <= -1 and the values decrease (or all vanish).
  bool accepted = false;
};

/// Throws for fewer than 3 levels or levels that are not increasing.
LocalityResult locality_test(const ApproximationScheme& scheme, const TestFunction& phi,
                             std::span<const int> levels, const EstimationOptions& options);

struct FirstOrderResult {
  /// Estimate of E_Y[(B[phi chi] - B[phi] chi - phi B[chi]) psi].
  double value = 0.0;
  double std_error = 0.0;
  std::optional<double> reference;
  std::optional<double> reference_std_error;
};

FirstOrderResult first_order_test(BiasKind kind, const ApproximationScheme& scheme,
                                  const TestFunction& phi, const TestFunction& chi,
                                  const TestFunction& psi, int level,
                                  const EstimationOptions& options);

struct VarianceForms {
  /// alpha_n E[(phi(Y_n) - phi(Y)) (chi(Y_n) - chi(Y)) psi(Y)].
  double theoretical = 0.0;
  double theoretical_std_error = 0.0;
  /// Same with psi(Y_n).
  double practical = 0.0;
  double practical_std_error = 0.0;
  /// theoretical - practical with its paired standard error.
  double difference = 0.0;
  double difference_std_error = 0.0;
  /// E_Y[-A_[phi psi] chi + A_[psi] phi chi - A^[phi] chi psi] and the twin
  /// with the theoretical and practical operators exchanged, from the
  /// reference structure.
  std::optional<double> operator_theoretical;
  std::optional<double> operator_practical;
  std::optional<double> operator_std_error;

  /// sqrt(theoretical_std_error^2 + practical_std_error^2).
  double combined_std_error() const;
};

VarianceForms variance_forms(const ApproximationScheme& scheme, const TestFunction& phi,
                             const TestFunction& chi, const TestFunction& psi, int level,
                             const EstimationOptions& options);

/// E_Y[f(Y)] over the scheme's reference measure for a jet-valued integrand.
/// Returns nullopt when the scheme has no reference structure.
std::optional<MeanEstimate> reference_expectation(
    const ApproximationScheme& scheme, int width,
    const std::function<void(const DirichletStructure&, const Vector&, std::span<double>)>& fn,
    const EstimationOptions& options, const std::string& stream);

}  // namespace dferr
