#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svreg/field.hpp"

namespace svreg {

/// 2 |A n B| / (|A| + |B|) for the masks of `label` in a and b. Both empty
/// gives 1, exactly one empty gives 0.
double dice(const LabelMap& a, const LabelMap& b, std::int32_t label);

struct LabelScore {
  std::int32_t label = 0;
  std::int64_t count0 = 0;
  std::int64_t count1 = 0;
  double fraction = 0;  // |l1^i| / sum_j |l1^j|
  double dice = 0;
};

struct DiceReport {
  std::vector<LabelScore> labels;
  double average = 0;                  // D_a
  double volume_weighted = 0;          // D_vw, weights |l1^i|
  double inverse_volume_weighted = 0;  // D_ivw, weights 1 / |l1^i|
  /// Labels left out of the weighted averages because they are empty in l1.
  std::vector<std::int32_t> excluded;
};

/// Scores the given ids (all non-zero ids present in either map when empty).
DiceReport dice_averages(const LabelMap& l0, const LabelMap& l1,
                         std::vector<std::int32_t> labels = {});

/// Non-zero label ids present in either map, ascending.
std::vector<std::int32_t> present_labels(const LabelMap& a, const LabelMap& b);

struct JacobianStats {
  double min = 1;
  double max = 1;
};
JacobianStats jacobian_stats(const ScalarField& jacobian);

/// |m_final - m1| voxelwise.
ScalarField residual_image(const ScalarField& m_final, const ScalarField& m1);

/// Tab-separated: label |l0| |l1| alpha dice, then summary rows for the averages.
void write_dice_report(const std::filesystem::path& path, const DiceReport& report);

}  // namespace svreg
