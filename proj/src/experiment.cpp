#include "svreg/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "svreg/resample.hpp"

namespace svreg {

NtPolicy parse_nt_policy(const std::string& s) {
  if (s == "proportional") return NtPolicy::proportional;
  if (s == "fixed") return NtPolicy::fixed;
  throw ValidationError("unknown n_t policy '" + s + "' (expected proportional or fixed)");
}

std::string to_string(NtPolicy p) { return p == NtPolicy::proportional ? "proportional" : "fixed"; }

void ExperimentPlan::validate(const Grid& base) const {
  if (ladder.empty()) throw ValidationError("resolution ladder is empty");
  if (base_nt < 1) throw ValidationError("base n_t must be positive");
  for (int f : ladder) {
    if (f < 1) throw ValidationError("ladder factors must be positive");
    for (int d = 0; d < 3; ++d) {
      if (base.dim(d) % f != 0) {
        throw ValidationError("ladder factor " + std::to_string(f) +
                              " does not divide the base dims");
      }
    }
  }
  reg.validate();
  if (!betas) search.validate();
}

int level_n_t(NtPolicy policy, int base_nt, int factor) {
  if (policy == NtPolicy::fixed) return base_nt;
  return std::max(4, base_nt / factor);
}

ExperimentResult run_experiment(const ScalarField& m0, const ScalarField& m1, const LabelMap& l0,
                                const LabelMap& l1, const ExperimentPlan& plan,
                                std::ostream* log) {
  const Grid& base = m0.grid();
  require_same_grid(base, m1.grid(), "experiment");
  require_same_grid(base, l0.grid(), "experiment");
  require_same_grid(base, l1.grid(), "experiment");
  plan.validate(base);

  ExperimentResult out;
  const auto ids = present_labels(l0, l1);
  out.pre = dice_averages(l0, l1, ids);

  TransportConfig eval_cfg;
  eval_cfg.n_t = plan.base_nt;
  eval_cfg.interp = plan.reg.interp;

  for (int factor : plan.ladder) {
    const auto t0 = std::chrono::steady_clock::now();
    LevelResult lv;
    lv.factor = factor;
    const ScalarField m0c = restrict_nearest(m0, factor);
    const ScalarField m1c = restrict_nearest(m1, factor);
    lv.dims = m0c.grid().dims();
    lv.n_t = level_n_t(plan.nt_policy, plan.base_nt, factor);
    if (log) {
      *log << "level factor " << factor << " dims " << lv.dims[0] << 'x' << lv.dims[1] << 'x'
           << lv.dims[2] << " n_t " << lv.n_t << '\n';
    }

    RegistrationConfig cfg = plan.reg;
    cfg.n_t = lv.n_t;
    RegistrationResult reg{VectorField(m0c.grid()), ScalarField(m0c.grid()),
                           ScalarField(m0c.grid()), {}};
    if (plan.betas) {
      cfg.beta_v = static_cast<real>(plan.betas->first);
      cfg.beta_w = static_cast<real>(plan.betas->second);
      reg = gauss_newton_register(m0c, m1c, cfg, nullptr, log);
      lv.beta_v = plan.betas->first;
      lv.beta_w = plan.betas->second;
      lv.gn_iterations = reg.diagnostics.gn_iterations;
      lv.solves = 1;
    } else {
      SearchResult s = search_parameters(m0c, m1c, cfg, plan.search, log);
      lv.beta_v = s.beta_v_star;
      lv.beta_w = s.beta_w_star;
      lv.gn_iterations = total_gn_iterations(s.trials);
      lv.solves = s.total_solves;
      lv.trials = std::move(s.trials);
      reg = std::move(s.final);
    }
    lv.j_min = reg.diagnostics.j_min;
    lv.j_max = reg.diagnostics.j_max;

    const VectorField v = factor == 1 ? reg.velocity : prolong_spectral(reg.velocity, base);
    const TransportPlan tp = make_transport_plan(v, eval_cfg, false);
    lv.residual = relative_residual(m0, m1, solve_state(m0, tp));
    lv.dice = dice_averages(transport_labels(l0, tp), l1, ids);
    lv.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (log) {
      *log << "level factor " << factor << ": r " << lv.residual << " D_a " << lv.dice.average
           << '\n';
    }
    out.levels.push_back(std::move(lv));
  }
  return out;
}

void write_trend_table(const std::filesystem::path& path, const ExperimentResult& result,
                       bool zero_timings) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(9);
  out << "factor\tdims\tn_t\tbeta_v\tbeta_w\tJ_min\tJ_max\tr\tD_a\tD_vw\tD_ivw\tgn_iters\tsolves"
         "\tseconds\n";
  out << "pre\t\t\t\t\t\t\t1\t" << result.pre.average << '\t' << result.pre.volume_weighted
      << '\t' << result.pre.inverse_volume_weighted << "\t\t\t\n";
  for (const auto& lv : result.levels) {
    out << lv.factor << '\t' << lv.dims[0] << 'x' << lv.dims[1] << 'x' << lv.dims[2] << '\t'
        << lv.n_t << '\t' << lv.beta_v << '\t' << lv.beta_w << '\t' << lv.j_min << '\t'
        << lv.j_max << '\t' << lv.residual << '\t' << lv.dice.average << '\t'
        << lv.dice.volume_weighted << '\t' << lv.dice.inverse_volume_weighted << '\t'
        << lv.gn_iterations << '\t' << lv.solves << '\t' << (zero_timings ? 0.0 : lv.seconds)
        << '\n';
  }
}

}  // namespace svreg
