#pragma once

// Multi-resolution study: register restricted copies of a pair and score the
// prolonged velocities at the base resolution.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "svreg/autoparam.hpp"
#include "svreg/metrics.hpp"

namespace svreg {

enum class NtPolicy { proportional, fixed };

NtPolicy parse_nt_policy(const std::string& s);
std::string to_string(NtPolicy p);

struct ExperimentPlan {
  std::vector<int> ladder{1, 2, 4, 8};
  NtPolicy nt_policy = NtPolicy::proportional;
  /// n_t at the base resolution; also used for evaluation transport.
  int base_nt = 8;
  RegistrationConfig reg;
  SearchConfig search;
  /// Skip the search and register every level with these (beta_v, beta_w).
  std::optional<std::pair<double, double>> betas;

  void validate(const Grid& base) const;
};

/// proportional: max(4, base_nt / factor); fixed: base_nt.
int level_n_t(NtPolicy policy, int base_nt, int factor);

struct LevelResult {
  int factor = 1;
  Grid::Dims dims{};
  int n_t = 0;
  double beta_v = 0;
  double beta_w = 0;
  double j_min = 1;
  double j_max = 1;
  /// Evaluated at the base resolution.
  double residual = 0;
  DiceReport dice;
  int gn_iterations = 0;
  int solves = 0;
  double seconds = 0;
  std::vector<TrialRecord> trials;
};

struct ExperimentResult {
  DiceReport pre;
  std::vector<LevelResult> levels;
};

/// m0 and m1 are used as given (normalize beforehand if needed).
ExperimentResult run_experiment(const ScalarField& m0, const ScalarField& m1, const LabelMap& l0,
                                const LabelMap& l1, const ExperimentPlan& plan,
                                std::ostream* log = nullptr);

/// Tab-separated: factor dims n_t beta_v beta_w J_min J_max r D_a D_vw D_ivw
/// gn_iters solves seconds; a "pre" row carries the unregistered Dice.
void write_trend_table(const std::filesystem::path& path, const ExperimentResult& result,
                       bool zero_timings = false);

}  // namespace svreg
