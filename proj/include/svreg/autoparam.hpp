#pragma once

// Regularization parameter identification.
//
// Search: with beta_w = beta_w_max, solve at beta_v = beta_v_max and reduce by
// decades (warm-starting each solve) until the Jacobian bound is breached or
// beta_v_min is reached; then bisect geometrically between the last valid and
// the first invalid beta_v. Next, with beta_v fixed, reduce beta_w by decades
// and keep the last valid value.
//
// Continuation replays the decade ladder towards known targets without any
// bound checks.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "svreg/gauss_newton.hpp"

namespace svreg {

struct SearchConfig {
  double j_bound = 0.25;
  double beta_v_max = 1;
  double beta_v_min = 1e-5;
  double beta_w_max = 1e-5;
  double beta_w_min = 1e-7;
  double binary_search_rel_tol = 0.10;

  void validate() const;
};

struct TrialRecord {
  double beta_v = 0;
  double beta_w = 0;
  double j_min = 1;
  double j_max = 1;
  double residual = 0;
  int gn_iterations = 0;
  double seconds = 0;
  bool accepted = false;
  std::string stage;
};

struct SearchResult {
  double beta_v_star = 0;
  double beta_w_star = 0;
  std::vector<TrialRecord> trials;
  int total_solves = 0;
  /// Registration at (beta_v_star, beta_w_star).
  RegistrationResult final;
};

struct BetaVSearch {
  double beta_v_star = 0;
  /// Registration at (beta_v_star, beta_w_max); its velocity is the warm start.
  RegistrationResult solution;
};

/// min J >= bound and max J <= 1 / bound.
bool in_bounds(const ScalarField& jacobian, double bound);
bool in_bounds(double j_min, double j_max, double bound);

/// Throws SearchError when beta_v_max already breaches the bound.
BetaVSearch search_beta_v(const ScalarField& m0, const ScalarField& m1,
                          const RegistrationConfig& cfg, const SearchConfig& search,
                          std::vector<TrialRecord>* trials = nullptr, std::ostream* log = nullptr);

/// `at_max` is the solve at (beta_v_star, beta_w_max), reused as the first
/// trial and as the warm start. Throws SearchError if it breaches the bound.
double search_beta_w(const ScalarField& m0, const ScalarField& m1, double beta_v_star,
                     const RegistrationConfig& cfg, const SearchConfig& search,
                     const RegistrationResult& at_max, std::vector<TrialRecord>* trials = nullptr,
                     RegistrationResult* final = nullptr, std::ostream* log = nullptr);

SearchResult search_parameters(const ScalarField& m0, const ScalarField& m1,
                               const RegistrationConfig& cfg, const SearchConfig& search,
                               std::ostream* log = nullptr);

/// {beta_v_max, beta_v_max/10, ..., 10^ceil(log10 target)} followed by target
/// when it is not already the last rung.
std::vector<double> beta_v_ladder(double target, double beta_v_max = 1);
/// beta_w rungs below beta_w_max down to target, ending at target.
std::vector<double> beta_w_ladder(double target, double beta_w_max);

struct ContinuationResult {
  RegistrationResult final;
  std::vector<TrialRecord> rungs;
  int total_gn_iterations = 0;
};

/// beta_v rungs run at beta_w_max, then beta_w decades down to beta_w_star;
/// beta_w_star = 0 skips the divergence penalty entirely.
ContinuationResult continuation_register(const ScalarField& m0, const ScalarField& m1,
                                         double beta_v_star, double beta_w_star,
                                         const RegistrationConfig& cfg,
                                         const SearchConfig& search,
                                         std::ostream* log = nullptr);

int total_gn_iterations(const std::vector<TrialRecord>& trials);

/// Tab-separated: beta_v beta_w J_min J_max r gn_iters seconds accepted stage.
void write_trial_log(const std::filesystem::path& path, const std::vector<TrialRecord>& trials,
                     bool zero_timings = false);

}  // namespace svreg
