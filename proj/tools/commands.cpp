#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <utility>

#include "svreg/autoparam.hpp"
#include "svreg/experiment.hpp"
#include "svreg/metrics.hpp"
#include "svreg/synth.hpp"
#include "svreg/volume_io.hpp"

namespace fs = std::filesystem;

namespace svreg::cli {
namespace {

using Settings = std::vector<std::pair<std::string, std::string>>;

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

std::ostream* log_stream(const Options& o) { return o.quiet ? nullptr : &std::cout; }

ScalarType volume_type(const Options& o) { return parse_scalar_type(o.precision); }

fs::path prepare_out(const Options& o) {
  fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void require_path(const std::string& p, const char* flag) {
  if (p.empty()) throw ValidationError(std::string("missing required flag ") + flag);
}

InterpOrder pick_interp(const Options& o, const Grid& g) {
  if (o.interp) return parse_interp_order(*o.interp);
  const int m = std::max({g.dim(0), g.dim(1), g.dim(2)});
  return m <= 256 ? InterpOrder::cubic : InterpOrder::linear;
}

struct Pair {
  ScalarField m0_raw;
  ScalarField m1_raw;
  ScalarField m0;
  ScalarField m1;
};

Pair load_pair(const Options& o) {
  require_path(o.template_path, "--template");
  require_path(o.reference_path, "--reference");
  ScalarField m0 = read_scalar(o.template_path);
  ScalarField m1 = read_scalar(o.reference_path);
  require_same_grid(m0.grid(), m1.grid(), "template/reference");
  if (!all_finite(m0) || !all_finite(m1)) {
    throw ValidationError("input volumes contain non-finite values");
  }
  Pair p{m0, m1, m0, m1};
  if (o.normalize) normalize_jointly(p.m0, p.m1);
  return p;
}

RegistrationConfig registration_config(const Options& o, const Grid& g) {
  RegistrationConfig cfg;
  if (o.beta_v) cfg.beta_v = static_cast<real>(*o.beta_v);
  if (o.beta_w) cfg.beta_w = static_cast<real>(*o.beta_w);
  if (o.n_t) cfg.n_t = *o.n_t;
  cfg.interp = pick_interp(o, g);
  cfg.gtol = o.gtol;
  cfg.max_gn_iters = o.max_gn;
  cfg.pcg_max_iters = o.pcg_max;
  cfg.gradient = parse_gradient_scheme(o.gradient);
  cfg.validate();
  return cfg;
}

SearchConfig search_config(const Options& o) {
  SearchConfig s;
  s.j_bound = o.j_bound;
  s.beta_v_max = o.beta_v_max;
  s.beta_v_min = o.beta_v_min;
  s.beta_w_max = o.beta_w_max;
  s.beta_w_min = o.beta_w_min;
  s.binary_search_rel_tol = o.rel_tol;
  s.validate();
  return s;
}

// Keys double as plan-file keys, so params.txt can be fed back via --plan.
Settings effective_settings(const Options& o, const RegistrationConfig& cfg) {
  Settings s{
      {"template", o.template_path},
      {"reference", o.reference_path},
      {"betav", fmt(cfg.beta_v)},
      {"betaw", fmt(cfg.beta_w)},
      {"nt", std::to_string(cfg.n_t)},
      {"interp", to_string(cfg.interp)},
      {"gtol", fmt(cfg.gtol)},
      {"max-gn", std::to_string(cfg.max_gn_iters)},
      {"pcg-max", std::to_string(cfg.pcg_max_iters)},
      {"gradient", to_string(cfg.gradient)},
      {"jbound", fmt(o.j_bound)},
      {"precision", o.precision},
      {"normalize", o.normalize ? "true" : "false"},
  };
  return s;
}

void write_settings(const fs::path& path, const Settings& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : s) {
    if (!v.empty()) out << k << " = " << v << '\n';
  }
}

// Columns: iteration objective relative_gradient pcg_iterations step_length cfl
void write_diagnostics(const fs::path& path, const Settings& s, const SolverDiagnostics& d) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : s) out << "# " << k << " = " << v << '\n';
  out << std::setprecision(9);
  out << "iteration\tobjective\trelative_gradient\tpcg_iterations\tstep_length\tcfl\n";
  for (const auto& it : d.iterations) {
    out << it.iteration << '\t' << it.objective << '\t' << it.relative_gradient << '\t'
        << it.pcg_iterations << '\t' << it.step_length << '\t' << it.cfl << '\n';
  }
}

void write_summary(const fs::path& path, const Settings& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "key\tvalue\n";
  for (const auto& [k, v] : rows) out << k << '\t' << v << '\n';
}

Settings summary_rows(const RegistrationResult& r, bool zero_timings) {
  const auto& d = r.diagnostics;
  return {
      {"termination", to_string(d.reason)},
      {"converged", d.converged ? "1" : "0"},
      {"gn_iterations", std::to_string(d.gn_iterations)},
      {"pcg_iterations", std::to_string(d.pcg_iterations)},
      {"hessian_matvecs", std::to_string(d.hessian_matvecs)},
      {"relative_residual", fmt(d.relative_residual)},
      {"j_min", fmt(d.j_min)},
      {"j_max", fmt(d.j_max)},
      {"seconds", fmt(zero_timings ? 0.0 : d.seconds)},
  };
}

// Velocity, deformed template (input intensity units), residual and Jacobian.
void write_artifacts(const fs::path& dir, const Options& o, const Pair& p,
                     const RegistrationConfig& cfg, const RegistrationResult& r) {
  const ScalarType t = volume_type(o);
  write_vector(dir / "velocity.vol", r.velocity, t);
  ScalarField deformed = r.deformed;
  if (o.normalize) deformed = solve_state(p.m0_raw, r.velocity, cfg.transport());
  write_scalar(dir / "deformed.vol", deformed, t);
  write_scalar(dir / "residual.vol", residual_image(deformed, p.m1_raw), t);
  write_scalar(dir / "jacobian.vol", r.jacobian, t);
}

int solver_status(const RegistrationResult& r) {
  if (r.diagnostics.reason == Termination::line_search_failure) {
    std::cerr << "svreg: solver failed: line search could not reduce the objective\n";
    return 1;
  }
  return 0;
}

void report(const Options& o, const RegistrationResult& r) {
  if (o.quiet) return;
  const auto& d = r.diagnostics;
  std::cout << "termination " << to_string(d.reason) << ", " << d.gn_iterations
            << " GN iterations, r = " << d.relative_residual << ", J in [" << d.j_min << ", "
            << d.j_max << "]\n";
}

Grid::Dims parse_dims(const std::string& s) {
  Grid::Dims d{};
  std::string t = s;
  for (char& c : t) {
    if (c == 'x' || c == 'X' || c == ',') c = ' ';
  }
  std::istringstream in(t);
  std::vector<int> v;
  int x;
  while (in >> x) v.push_back(x);
  if (!in.eof() || (v.size() != 1 && v.size() != 3)) {
    throw ValidationError("invalid --dims '" + s + "' (expected N or N1xN2xN3)");
  }
  for (int i = 0; i < 3; ++i) d[i] = v.size() == 1 ? v[0] : v[i];
  return d;
}

}  // namespace

int cmd_register(const Options& o) {
  if (!o.beta_v) throw ValidationError("register needs --betav");
  const Pair p = load_pair(o);
  const RegistrationConfig cfg = registration_config(o, p.m0.grid());
  const fs::path dir = prepare_out(o);
  const RegistrationResult r = gauss_newton_register(p.m0, p.m1, cfg, nullptr, log_stream(o));
  const Settings s = effective_settings(o, cfg);
  write_settings(dir / "params.txt", s);
  write_diagnostics(dir / "diagnostics.tsv", s, r.diagnostics);
  write_summary(dir / "summary.tsv", summary_rows(r, o.reproducible));
  write_artifacts(dir, o, p, cfg, r);
  report(o, r);
  return solver_status(r);
}

int cmd_search(const Options& o) {
  const Pair p = load_pair(o);
  const RegistrationConfig cfg = registration_config(o, p.m0.grid());
  const SearchConfig sc = search_config(o);
  const fs::path dir = prepare_out(o);
  const SearchResult s = search_parameters(p.m0, p.m1, cfg, sc, log_stream(o));

  RegistrationConfig found = cfg;
  found.beta_v = static_cast<real>(s.beta_v_star);
  found.beta_w = static_cast<real>(s.beta_w_star);
  const Settings settings = effective_settings(o, found);
  write_settings(dir / "params.txt", settings);
  write_trial_log(dir / "trials.tsv", s.trials, o.reproducible);
  write_diagnostics(dir / "diagnostics.tsv", settings, s.final.diagnostics);
  Settings rows = summary_rows(s.final, o.reproducible);
  rows.emplace_back("beta_v_star", fmt(s.beta_v_star));
  rows.emplace_back("beta_w_star", fmt(s.beta_w_star));
  rows.emplace_back("solves", std::to_string(s.total_solves));
  rows.emplace_back("total_gn_iterations", std::to_string(total_gn_iterations(s.trials)));
  write_summary(dir / "summary.tsv", rows);
  write_artifacts(dir, o, p, found, s.final);
  if (!o.quiet) {
    std::cout << "beta_v* = " << s.beta_v_star << ", beta_w* = " << s.beta_w_star << " after "
              << s.total_solves << " solves\n";
  }
  report(o, s.final);
  return solver_status(s.final);
}

int cmd_continue(const Options& o) {
  if (!o.beta_v) throw ValidationError("continue needs --betav (or a parameter file via --plan)");
  const Pair p = load_pair(o);
  const RegistrationConfig cfg = registration_config(o, p.m0.grid());
  const SearchConfig sc = search_config(o);
  const fs::path dir = prepare_out(o);
  const ContinuationResult c =
      continuation_register(p.m0, p.m1, cfg.beta_v, cfg.beta_w, cfg, sc, log_stream(o));
  const Settings settings = effective_settings(o, cfg);
  write_settings(dir / "params.txt", settings);
  write_trial_log(dir / "rungs.tsv", c.rungs, o.reproducible);
  write_diagnostics(dir / "diagnostics.tsv", settings, c.final.diagnostics);
  Settings rows = summary_rows(c.final, o.reproducible);
  rows.emplace_back("solves", std::to_string(c.rungs.size()));
  rows.emplace_back("total_gn_iterations", std::to_string(c.total_gn_iterations));
  write_summary(dir / "summary.tsv", rows);
  write_artifacts(dir, o, p, cfg, c.final);
  report(o, c.final);
  return solver_status(c.final);
}

int cmd_synth(const Options& o) {
  SynthSpec spec;
  spec.grid = Grid(parse_dims(o.dims));
  spec.frequency = o.frequency;
  spec.amplitude = o.amplitude;
  spec.seed = o.seed;
  spec.num_shapes = o.shapes;
  spec.validate();
  TransportConfig tc;
  tc.n_t = o.n_t.value_or(8);
  tc.interp = pick_interp(o, spec.grid);
  tc.validate();

  const fs::path dir = prepare_out(o);
  const ScalarType t = volume_type(o);
  const SynthTemplate tmpl = make_template(spec);
  const VectorField v = make_velocity(spec.frequency, spec.grid, spec.amplitude);
  const SynthReference ref = make_reference(tmpl.image, tmpl.labels, v, tc);
  write_scalar(dir / "m0.vol", tmpl.image, t);
  write_scalar(dir / "m1.vol", ref.image, t);
  write_labels(dir / "labels0.vol", tmpl.labels, t);
  write_labels(dir / "labels1.vol", ref.labels, t);
  write_vector(dir / "velocity.vol", v, t);
  write_manifest(dir / "manifest.txt", spec, tc);
  if (!o.quiet) {
    const DiceReport d = dice_averages(tmpl.labels, ref.labels);
    std::cout << "wrote SYN pair to " << dir.string() << " (pre-registration D_a = " << d.average
              << ")\n";
  }
  return 0;
}

int cmd_transport(const Options& o) {
  require_path(o.velocity_path, "--velocity");
  require_path(o.template_path, "--template");
  VectorField v = read_vector(o.velocity_path);
  if (!all_finite(v)) throw ValidationError("velocity contains non-finite values");
  TransportConfig tc;
  tc.n_t = o.n_t.value_or(4);
  tc.interp = pick_interp(o, v.grid());
  tc.direction = o.backward ? Direction::backward : Direction::forward;
  tc.validate();
  const fs::path dir = prepare_out(o);
  const ScalarType t = volume_type(o);
  if (o.label_mode) {
    const LabelMap l = read_labels(o.template_path);
    require_same_grid(l.grid(), v.grid(), "labels/velocity");
    write_labels(dir / "deformed_labels.vol", transport_labels(l, v, tc), t);
  } else {
    const ScalarField m = read_scalar(o.template_path);
    require_same_grid(m.grid(), v.grid(), "template/velocity");
    write_scalar(dir / "deformed.vol", solve_state(m, v, tc), t);
  }
  return 0;
}

int cmd_metrics(const Options& o) {
  const fs::path dir = prepare_out(o);
  Settings rows;
  bool any = false;
  if (!o.deformed_path.empty()) {
    require_path(o.template_path, "--template");
    require_path(o.reference_path, "--reference");
    const ScalarField m0 = read_scalar(o.template_path);
    const ScalarField m1 = read_scalar(o.reference_path);
    const ScalarField m = read_scalar(o.deformed_path);
    require_same_grid(m0.grid(), m1.grid(), "template/reference");
    require_same_grid(m.grid(), m1.grid(), "deformed/reference");
    const double r = relative_residual(m0, m1, m);
    rows.emplace_back("relative_residual", fmt(r));
    write_scalar(dir / "residual.vol", residual_image(m, m1), volume_type(o));
    if (!o.quiet) std::cout << "r = " << r << '\n';
    any = true;
  }
  if (!o.template_labels.empty() || !o.reference_labels.empty()) {
    require_path(o.template_labels, "--template-labels");
    require_path(o.reference_labels, "--reference-labels");
    const LabelMap l0 = read_labels(o.template_labels);
    const LabelMap l1 = read_labels(o.reference_labels);
    require_same_grid(l0.grid(), l1.grid(), "label maps");
    std::vector<std::int32_t> ids(o.label_ids.begin(), o.label_ids.end());
    const DiceReport d = dice_averages(l0, l1, ids);
    write_dice_report(dir / "dice.tsv", d);
    rows.emplace_back("D_a", fmt(d.average));
    rows.emplace_back("D_vw", fmt(d.volume_weighted));
    rows.emplace_back("D_ivw", fmt(d.inverse_volume_weighted));
    if (!o.quiet) {
      std::cout << "D_a = " << d.average << ", D_vw = " << d.volume_weighted
                << ", D_ivw = " << d.inverse_volume_weighted << '\n';
    }
    any = true;
  }
  if (!any) {
    throw ValidationError("metrics needs --deformed (with --template, --reference) and/or "
                          "--template-labels with --reference-labels");
  }
  write_summary(dir / "metrics.tsv", rows);
  return 0;
}

int cmd_experiment(const Options& o) {
  require_path(o.template_labels, "--template-labels");
  require_path(o.reference_labels, "--reference-labels");
  const Pair p = load_pair(o);
  const LabelMap l0 = read_labels(o.template_labels);
  const LabelMap l1 = read_labels(o.reference_labels);

  ExperimentPlan plan;
  plan.ladder = o.ladder;
  plan.nt_policy = parse_nt_policy(o.nt_policy);
  plan.reg = registration_config(o, p.m0.grid());
  plan.base_nt = plan.reg.n_t;
  if (o.beta_v) {
    plan.betas = std::make_pair(*o.beta_v, o.beta_w.value_or(0.0));
  } else {
    plan.search = search_config(o);
  }
  const fs::path dir = prepare_out(o);
  const ExperimentResult res = run_experiment(p.m0, p.m1, l0, l1, plan, log_stream(o));

  Settings settings = effective_settings(o, plan.reg);
  std::string ladder;
  for (int f : plan.ladder) ladder += (ladder.empty() ? "" : ",") + std::to_string(f);
  settings.emplace_back("ladder", ladder);
  settings.emplace_back("nt-policy", to_string(plan.nt_policy));
  settings.emplace_back("template-labels", o.template_labels);
  settings.emplace_back("reference-labels", o.reference_labels);
  if (!o.beta_v) {
    // Searched per level; do not pin them for a rerun.
    std::erase_if(settings, [](const auto& kv) { return kv.first == "betav" || kv.first == "betaw"; });
  }
  write_settings(dir / "params.txt", settings);
  write_trend_table(dir / "trend.tsv", res, o.reproducible);
  for (const auto& lv : res.levels) {
    if (!lv.trials.empty()) {
      write_trial_log(dir / ("trials_f" + std::to_string(lv.factor) + ".tsv"), lv.trials,
                      o.reproducible);
    }
  }
  if (!o.quiet) {
    std::cout << "factor\tr\tD_a\n";
    for (const auto& lv : res.levels) {
      std::cout << lv.factor << '\t' << lv.residual << '\t' << lv.dice.average << '\n';
    }
  }
  return 0;
}

}  // namespace svreg::cli
