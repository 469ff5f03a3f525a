#include "svreg/autoparam.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace svreg {

void SearchConfig::validate() const {
  if (!(j_bound > 0 && j_bound < 1)) throw ValidationError("Jacobian bound must lie in (0, 1)");
  if (!(beta_v_min > 0 && beta_v_min < beta_v_max)) {
    throw ValidationError("need 0 < beta_v_min < beta_v_max");
  }
  if (!(beta_w_min > 0 && beta_w_min < beta_w_max)) {
    throw ValidationError("need 0 < beta_w_min < beta_w_max");
  }
  if (!(binary_search_rel_tol > 0 && binary_search_rel_tol < 1)) {
    throw ValidationError("binary search tolerance must lie in (0, 1)");
  }
}

bool in_bounds(double j_min, double j_max, double bound) {
  return j_min >= bound && j_max <= 1 / bound;
}

bool in_bounds(const ScalarField& jacobian, double bound) {
  if (!(bound > 0 && bound < 1)) throw ValidationError("Jacobian bound must lie in (0, 1)");
  return in_bounds(min_value(jacobian), max_value(jacobian), bound);
}

namespace {

RegistrationResult solve_at(const ScalarField& m0, const ScalarField& m1,
                            const RegistrationConfig& base, double beta_v, double beta_w,
                            const VectorField* warm, std::ostream* log) {
  RegistrationConfig cfg = base;
  cfg.beta_v = static_cast<real>(beta_v);
  cfg.beta_w = static_cast<real>(beta_w);
  if (log) *log << "solve beta_v " << beta_v << " beta_w " << beta_w << '\n';
  return gauss_newton_register(m0, m1, cfg, warm, log);
}

TrialRecord record(const RegistrationResult& r, double beta_v, double beta_w, double bound,
                   const std::string& stage) {
  const auto& d = r.diagnostics;
  TrialRecord t;
  t.beta_v = beta_v;
  t.beta_w = beta_w;
  t.j_min = d.j_min;
  t.j_max = d.j_max;
  t.residual = d.relative_residual;
  t.gn_iterations = d.gn_iterations;
  t.seconds = d.seconds;
  t.accepted = bound > 0 ? in_bounds(d.j_min, d.j_max, bound) : true;
  t.stage = stage;
  return t;
}

// beta_max * 10^-k without accumulating rounding.
double decade(double beta_max, int k) { return beta_max * std::pow(10.0, -k); }

// Decades of beta_max land on beta_min only up to rounding.
bool at_floor(double beta, double beta_min) { return beta <= beta_min * (1 + 1e-9); }

}  // namespace

BetaVSearch search_beta_v(const ScalarField& m0, const ScalarField& m1,
                          const RegistrationConfig& cfg, const SearchConfig& search,
                          std::vector<TrialRecord>* trials, std::ostream* log) {
  search.validate();
  const double bw = search.beta_w_max;
  auto note = [&](const RegistrationResult& r, double bv, const char* stage) {
    TrialRecord t = record(r, bv, bw, search.j_bound, stage);
    if (trials) trials->push_back(t);
    return t.accepted;
  };

  std::optional<BetaVSearch> valid;
  double invalid = 0;
  for (int k = 0;; ++k) {
    const double bv = std::max(decade(search.beta_v_max, k), search.beta_v_min);
    RegistrationResult r =
        solve_at(m0, m1, cfg, bv, bw, valid ? &valid->solution.velocity : nullptr, log);
    if (!note(r, bv, "beta_v")) {
      if (!valid) throw SearchError("regularization cannot satisfy Jacobian bound");
      invalid = bv;
      break;
    }
    valid = BetaVSearch{bv, std::move(r)};
    if (at_floor(bv, search.beta_v_min)) return std::move(*valid);
  }

  while ((valid->beta_v_star - invalid) / valid->beta_v_star >= search.binary_search_rel_tol) {
    const double mid = std::sqrt(valid->beta_v_star * invalid);
    RegistrationResult r = solve_at(m0, m1, cfg, mid, bw, &valid->solution.velocity, log);
    if (note(r, mid, "beta_v-bisect")) {
      valid = BetaVSearch{mid, std::move(r)};
    } else {
      invalid = mid;
    }
  }
  return std::move(*valid);
}

double search_beta_w(const ScalarField& m0, const ScalarField& m1, double beta_v_star,
                     const RegistrationConfig& cfg, const SearchConfig& search,
                     const RegistrationResult& at_max, std::vector<TrialRecord>* trials,
                     RegistrationResult* final, std::ostream* log) {
  search.validate();
  const auto& d0 = at_max.diagnostics;
  if (!in_bounds(d0.j_min, d0.j_max, search.j_bound)) {
    throw SearchError("regularization cannot satisfy Jacobian bound");
  }
  double valid = search.beta_w_max;
  RegistrationResult best = at_max;
  for (int k = 1;; ++k) {
    const double bw = std::max(decade(search.beta_w_max, k), search.beta_w_min);
    RegistrationResult r = solve_at(m0, m1, cfg, beta_v_star, bw, &best.velocity, log);
    TrialRecord t = record(r, beta_v_star, bw, search.j_bound, "beta_w");
    if (trials) trials->push_back(t);
    if (!t.accepted) break;
    valid = bw;
    best = std::move(r);
    if (at_floor(bw, search.beta_w_min)) break;
  }
  if (final) *final = std::move(best);
  return valid;
}

SearchResult search_parameters(const ScalarField& m0, const ScalarField& m1,
                               const RegistrationConfig& cfg, const SearchConfig& search,
                               std::ostream* log) {
  SearchResult out{0, 0, {}, 0, {VectorField(m0.grid()), ScalarField(m0.grid()),
                                 ScalarField(m0.grid()), {}}};
  BetaVSearch stage1 = search_beta_v(m0, m1, cfg, search, &out.trials, log);
  out.beta_v_star = stage1.beta_v_star;
  out.beta_w_star = search_beta_w(m0, m1, stage1.beta_v_star, cfg, search, stage1.solution,
                                  &out.trials, &out.final, log);
  out.total_solves = static_cast<int>(out.trials.size());
  return out;
}

std::vector<double> beta_v_ladder(double target, double beta_v_max) {
  if (!(target > 0 && target <= beta_v_max)) {
    throw ValidationError("beta_v target must lie in (0, beta_v_max]");
  }
  std::vector<double> ladder;
  const int last = static_cast<int>(std::floor(std::log10(beta_v_max / target) + 1e-9));
  for (int k = 0; k <= last; ++k) ladder.push_back(decade(beta_v_max, k));
  if (std::abs(ladder.back() - target) > 1e-9 * target) ladder.push_back(target);
  return ladder;
}

std::vector<double> beta_w_ladder(double target, double beta_w_max) {
  if (!(target > 0 && target <= beta_w_max)) {
    throw ValidationError("beta_w target must lie in (0, beta_w_max]");
  }
  std::vector<double> ladder;
  const int last = static_cast<int>(std::floor(std::log10(beta_w_max / target) + 1e-9));
  for (int k = 1; k <= last; ++k) ladder.push_back(decade(beta_w_max, k));
  if (ladder.empty() ? std::abs(target - beta_w_max) > 1e-9 * target
                     : std::abs(ladder.back() - target) > 1e-9 * target) {
    ladder.push_back(target);
  }
  return ladder;
}

ContinuationResult continuation_register(const ScalarField& m0, const ScalarField& m1,
                                         double beta_v_star, double beta_w_star,
                                         const RegistrationConfig& cfg,
                                         const SearchConfig& search, std::ostream* log) {
  ContinuationResult out{{VectorField(m0.grid()), ScalarField(m0.grid()), ScalarField(m0.grid()),
                          {}},
                         {},
                         0};
  const VectorField* warm = nullptr;
  // beta_w_star = 0 means no divergence penalty at all: beta_v rungs only.
  const double bw_max = beta_w_star > 0 ? std::max(search.beta_w_max, beta_w_star) : 0.0;
  for (double bv : beta_v_ladder(beta_v_star, std::max(search.beta_v_max, beta_v_star))) {
    out.final = solve_at(m0, m1, cfg, bv, bw_max, warm, log);
    out.rungs.push_back(record(out.final, bv, bw_max, 0, "beta_v"));
    warm = &out.final.velocity;
  }
  const auto bw_rungs = beta_w_star > 0 ? beta_w_ladder(beta_w_star, bw_max) : std::vector<double>{};
  for (double bw : bw_rungs) {
    RegistrationResult r = solve_at(m0, m1, cfg, beta_v_star, bw, warm, log);
    out.final = std::move(r);
    out.rungs.push_back(record(out.final, beta_v_star, bw, 0, "beta_w"));
    warm = &out.final.velocity;
  }
  out.total_gn_iterations = total_gn_iterations(out.rungs);
  return out;
}

int total_gn_iterations(const std::vector<TrialRecord>& trials) {
  int n = 0;
  for (const auto& t : trials) n += t.gn_iterations;
  return n;
}

void write_trial_log(const std::filesystem::path& path, const std::vector<TrialRecord>& trials,
                     bool zero_timings) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "beta_v\tbeta_w\tJ_min\tJ_max\tr\tgn_iters\tseconds\taccepted\tstage\n";
  out << std::setprecision(9);
  for (const auto& t : trials) {
    out << t.beta_v << '\t' << t.beta_w << '\t' << t.j_min << '\t' << t.j_max << '\t'
        << t.residual << '\t' << t.gn_iterations << '\t' << (zero_timings ? 0.0 : t.seconds)
        << '\t' << (t.accepted ? 1 : 0) << '\t' << t.stage << '\n';
  }
}

}  // namespace svreg
