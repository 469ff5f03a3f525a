#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace svreg::cli {

// Effective settings of one invocation. Unset optionals fall back to
// per-command defaults.
struct Options {
  std::string template_path;
  std::string reference_path;
  std::string template_labels;
  std::string reference_labels;
  std::string velocity_path;
  std::string deformed_path;
  std::string out_dir = "svreg-out";

  std::optional<double> beta_v;
  std::optional<double> beta_w;
  std::optional<int> n_t;
  std::optional<std::string> interp;
  double j_bound = 0.25;
  double gtol = 5e-2;
  int max_gn = 50;
  int pcg_max = 50;
  std::string gradient = "discrete";
  double beta_v_max = 1;
  double beta_v_min = 1e-5;
  double beta_w_max = 1e-5;
  double beta_w_min = 1e-7;
  double rel_tol = 0.10;

  std::string precision = "f64";
  bool reproducible = false;
  bool normalize = true;
  bool quiet = false;

  // synth
  std::string dims = "64";
  int frequency = 4;
  double amplitude = 1;
  std::uint64_t seed = 0;
  int shapes = 10;

  // transport
  bool label_mode = false;
  bool backward = false;

  // metrics
  std::vector<int> label_ids;

  // experiment
  std::vector<int> ladder{1, 2, 4, 8};
  std::string nt_policy = "proportional";
};

int cmd_register(const Options& o);
int cmd_search(const Options& o);
int cmd_continue(const Options& o);
int cmd_synth(const Options& o);
int cmd_transport(const Options& o);
int cmd_metrics(const Options& o);
int cmd_experiment(const Options& o);

}  // namespace svreg::cli
