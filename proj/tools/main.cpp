// svreg: command-line driver.
//
//   svreg <command> [flags]
//
// Commands: register, search, continue, synth, transport, metrics, experiment.
// `--plan FILE` reads `key = value` lines (keys are long flag names without
// dashes, '#' starts a comment); flags given on the command line win.
// Exit status: 0 success, 1 solver failure, 2 I/O or validation error.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "svreg/common.hpp"

using svreg::cli::Options;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> read_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw svreg::IoError("cannot open plan file " + path);
  std::vector<std::string> args;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw svreg::ValidationError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "plan") continue;
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// Plan entries are spliced in right after the command name, ahead of the
// user's flags; with take-last semantics the explicit flags override them.
std::vector<std::string> expand_plan(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string plan;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--plan" && i + 1 < args.size()) plan = args[i + 1];
    if (args[i].rfind("--plan=", 0) == 0) plan = args[i].substr(7);
  }
  if (plan.empty() || args.empty()) return args;
  auto extra = read_plan(plan);
  args.insert(args.begin() + 1, extra.begin(), extra.end());
  return args;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw svreg::ValidationError(std::string("invalid ") + what + " entry '" + item + "'");
    }
  }
  return out;
}

void add_pair_flags(CLI::App* c, Options& o) {
  c->add_option("--template", o.template_path, "template image m0");
  c->add_option("--reference", o.reference_path, "reference image m1");
}

void add_solver_flags(CLI::App* c, Options& o) {
  c->add_option("--betav", o.beta_v, "velocity regularization weight");
  c->add_option("--betaw", o.beta_w, "divergence regularization weight");
  c->add_option("--nt", o.n_t, "time steps");
  c->add_option("--interp", o.interp, "interpolation order")
      ->check(CLI::IsMember({"linear", "cubic"}));
  c->add_option("--gtol", o.gtol, "relative gradient tolerance");
  c->add_option("--max-gn", o.max_gn, "Gauss-Newton iteration cap");
  c->add_option("--pcg-max", o.pcg_max, "PCG iteration cap per Newton step");
  c->add_option("--gradient", o.gradient, "gradient discretization")
      ->check(CLI::IsMember({"discrete", "continuous"}));
  c->add_flag("--normalize,!--no-normalize", o.normalize,
              "rescale both images jointly to [0,1] (default on)");
}

void add_search_flags(CLI::App* c, Options& o) {
  c->add_option("--jbound", o.j_bound, "Jacobian bound J_min; accept J in [J_min, 1/J_min]");
  c->add_option("--betav-max", o.beta_v_max);
  c->add_option("--betav-min", o.beta_v_min);
  c->add_option("--betaw-max", o.beta_w_max);
  c->add_option("--betaw-min", o.beta_w_min);
  c->add_option("--rel-tol", o.rel_tol, "binary search stops below this relative change");
}

void add_output_flags(CLI::App* c, Options& o) {
  c->add_option("--out", o.out_dir, "output directory");
  c->add_option("--precision", o.precision, "stored volume precision")
      ->check(CLI::IsMember({"f32", "f64"}));
  c->add_flag("--reproducible", o.reproducible, "zero wall-clock fields in all outputs");
  c->add_flag("--quiet,-q", o.quiet, "no progress output");
  c->add_option("--seed", o.seed, "random seed");
  c->add_option("--plan", "settings file; command-line flags override it");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffeomorphic image registration with a stationary velocity field", "svreg"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Options o;
  std::string ladder = "1,2,4,8";
  std::string label_ids;

  auto* reg = app.add_subcommand("register", "register a pair with fixed regularization weights");
  auto* search = app.add_subcommand("search", "search regularization weights for a Jacobian bound");
  auto* cont = app.add_subcommand("continue", "register by continuation down to given weights");
  auto* synth = app.add_subcommand("synth", "generate a synthetic pair");
  auto* trans = app.add_subcommand("transport", "transport an image or label map");
  auto* metrics = app.add_subcommand("metrics", "residual and Dice scores");
  auto* exper = app.add_subcommand("experiment", "multi-resolution study");

  for (auto* c : {reg, search, cont, exper}) {
    add_pair_flags(c, o);
    add_solver_flags(c, o);
    add_search_flags(c, o);
    add_output_flags(c, o);
  }
  for (auto* c : {synth, trans, metrics}) add_output_flags(c, o);

  synth->add_option("--dims", o.dims, "N or N1xN2xN3");
  synth->add_option("--K", o.frequency, "velocity frequency");
  synth->add_option("--amplitude", o.amplitude, "velocity scale factor (1 = stated field)");
  synth->add_option("--shapes", o.shapes, "number of shapes");
  synth->add_option("--nt", o.n_t, "time steps for the reference");
  synth->add_option("--interp", o.interp)->check(CLI::IsMember({"linear", "cubic"}));

  trans->add_option("--velocity", o.velocity_path, "velocity volume");
  trans->add_option("--template", o.template_path, "image (or label map with --labels)");
  trans->add_option("--nt", o.n_t, "time steps");
  trans->add_option("--interp", o.interp)->check(CLI::IsMember({"linear", "cubic"}));
  trans->add_flag("--labels", o.label_mode, "label mode: per-label indicator transport");
  trans->add_flag("--backward", o.backward, "transport with -v");

  metrics->add_option("--template", o.template_path);
  metrics->add_option("--reference", o.reference_path);
  metrics->add_option("--deformed", o.deformed_path, "deformed template");
  metrics->add_option("--template-labels", o.template_labels, "label map to score");
  metrics->add_option("--reference-labels", o.reference_labels, "reference label map");
  metrics->add_option("--label-ids", label_ids, "comma-separated label ids (default: all)");

  exper->add_option("--template-labels", o.template_labels);
  exper->add_option("--reference-labels", o.reference_labels);
  exper->add_option("--ladder", ladder, "comma-separated restriction factors");
  exper->add_option("--nt-policy", o.nt_policy)->check(CLI::IsMember({"proportional", "fixed"}));

  try {
    auto args = expand_plan(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    o.ladder = parse_int_list(ladder, "--ladder");
    o.label_ids = parse_int_list(label_ids, "--label-ids");

    if (reg->parsed()) return svreg::cli::cmd_register(o);
    if (search->parsed()) return svreg::cli::cmd_search(o);
    if (cont->parsed()) return svreg::cli::cmd_continue(o);
    if (synth->parsed()) return svreg::cli::cmd_synth(o);
    if (trans->parsed()) return svreg::cli::cmd_transport(o);
    if (metrics->parsed()) return svreg::cli::cmd_metrics(o);
    if (exper->parsed()) return svreg::cli::cmd_experiment(o);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const svreg::IoError& e) {
    std::cerr << "svreg: " << e.what() << '\n';
    return 2;
  } catch (const svreg::ValidationError& e) {
    std::cerr << "svreg: " << e.what() << '\n';
    return 2;
  } catch (const svreg::InvalidGridError& e) {
    std::cerr << "svreg: " << e.what() << '\n';
    return 2;
  } catch (const svreg::ResampleError& e) {
    std::cerr << "svreg: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "svreg: " << e.what() << '\n';
    return 1;
  }
}
