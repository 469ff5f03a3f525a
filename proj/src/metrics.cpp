#include "svreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>

namespace svreg {

double dice(const LabelMap& a, const LabelMap& b, std::int32_t label) {
  require_same_grid(a.grid(), b.grid(), "dice");
  std::int64_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool in_a = a[i] == label;
    const bool in_b = b[i] == label;
    na += in_a;
    nb += in_b;
    both += in_a && in_b;
  }
  if (na == 0 && nb == 0) return 1;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::vector<std::int32_t> present_labels(const LabelMap& a, const LabelMap& b) {
  std::set<std::int32_t> ids;
  for (auto id : a.distinct()) ids.insert(id);
  for (auto id : b.distinct()) ids.insert(id);
  ids.erase(0);
  return {ids.begin(), ids.end()};
}

DiceReport dice_averages(const LabelMap& l0, const LabelMap& l1, std::vector<std::int32_t> labels) {
  require_same_grid(l0.grid(), l1.grid(), "dice_averages");
  if (labels.empty()) labels = present_labels(l0, l1);
  if (labels.empty()) throw ValidationError("dice_averages: no labels to score");

  DiceReport rep;
  std::int64_t total1 = 0;
  for (auto id : labels) {
    LabelScore s;
    s.label = id;
    s.count0 = l0.count(id);
    s.count1 = l1.count(id);
    s.dice = dice(l0, l1, id);
    total1 += s.count1;
    rep.labels.push_back(s);
  }

  double sum_d = 0, vw_num = 0, ivw_num = 0, ivw_den = 0;
  std::int64_t vw_den = 0;
  for (auto& s : rep.labels) {
    s.fraction = total1 > 0 ? static_cast<double>(s.count1) / static_cast<double>(total1) : 0.0;
    sum_d += s.dice;
    if (s.count1 == 0) {
      rep.excluded.push_back(s.label);
      continue;
    }
    vw_num += static_cast<double>(s.count1) * s.dice;
    vw_den += s.count1;
    ivw_num += s.dice / static_cast<double>(s.count1);
    ivw_den += 1.0 / static_cast<double>(s.count1);
  }
  rep.average = sum_d / static_cast<double>(rep.labels.size());
  rep.volume_weighted = vw_den > 0 ? vw_num / static_cast<double>(vw_den) : 0.0;
  rep.inverse_volume_weighted = ivw_den > 0 ? ivw_num / ivw_den : 0.0;
  if (!rep.excluded.empty()) {
    std::cerr << "warning: " << rep.excluded.size()
              << " label(s) empty in the reference map were left out of D_vw and D_ivw\n";
  }
  return rep;
}

JacobianStats jacobian_stats(const ScalarField& jacobian) {
  return {min_value(jacobian), max_value(jacobian)};
}

ScalarField residual_image(const ScalarField& m_final, const ScalarField& m1) {
  require_same_grid(m_final.grid(), m1.grid(), "residual_image");
  ScalarField out(m1.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(m_final[i] - m1[i]);
  return out;
}

void write_dice_report(const std::filesystem::path& path, const DiceReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(9);
  out << "label\tcount_l0\tcount_l1\talpha\tdice\n";
  for (const auto& s : report.labels) {
    out << s.label << '\t' << s.count0 << '\t' << s.count1 << '\t' << s.fraction << '\t' << s.dice
        << '\n';
  }
  out << "D_a\t\t\t\t" << report.average << '\n';
  out << "D_vw\t\t\t\t" << report.volume_weighted << '\n';
  out << "D_ivw\t\t\t\t" << report.inverse_volume_weighted << '\n';
}

}  // namespace svreg
