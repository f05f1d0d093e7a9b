#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "octcascade/error.hpp"
#include "octcascade/types.hpp"

namespace octcascade {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion(const VoxelMask& pred, const VoxelMask& gt) {
  require_same_dims(pred.dims(), gt.dims(), "confusion");
  ConfusionCounts c;
  const auto p = pred.grid().values();
  const auto g = gt.grid().values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]) {
      if (g[i]) ++c.tp;
      else ++c.fp;
    } else {
      if (g[i]) ++c.fn;
      else ++c.tn;
    }
  }
  return c;
}

/// A ratio with an empty denominator reads 1.0 and is flagged degenerate.
struct Ratio {
  double value = 0.0;
  bool degenerate = false;
};

namespace detail {
inline Ratio ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return {1.0, true};
  return {static_cast<double>(num) / static_cast<double>(den), false};
}
}  // namespace detail

inline Ratio iou(const ConfusionCounts& c) { return detail::ratio(c.tp, c.tp + c.fp + c.fn); }
inline Ratio sen(const ConfusionCounts& c) { return detail::ratio(c.tp, c.tp + c.fn); }
inline Ratio acc(const ConfusionCounts& c) { return detail::ratio(c.tp + c.tn, c.total()); }

/// Area under the ROC curve swept over every distinct score, by the
/// trapezoidal rule. Tied positive/negative pairs contribute one half.
/// Computed in exact integer arithmetic up to the final division.
inline double auc(std::span<const float> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ShapeMismatchError("auc: scores and labels differ");
  std::vector<std::pair<float, std::uint8_t>> v;
  v.reserve(scores.size());
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    v.emplace_back(scores[i], labels[i]);
    pos += labels[i] != 0;
  }
  const std::uint64_t neg = v.size() - pos;
  if (pos == 0 || neg == 0) {
    throw UndefinedAucError("AUC undefined: ground truth has a single class");
  }
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  // Twice the area in units of one (positive, negative) pair.
  unsigned __int128 twice_area = 0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::uint64_t gp = 0;
    std::uint64_t gn = 0;
    while (j < v.size() && v[j].first == v[i].first) {
      if (v[j].second) ++gp;
      else ++gn;
      ++j;
    }
    twice_area += static_cast<unsigned __int128>(gn) * (2 * tp + gp);
    tp += gp;
    fp += gn;
    i = j;
  }
  return static_cast<double>(twice_area) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

/// Voxel-wise AUC over the whole volume, or over `region` when given.
inline double auc(const ProbabilityMap3D& scores, const VoxelMask& gt,
                  const VoxelMask* region = nullptr) {
  require_same_dims(scores.dims(), gt.dims(), "auc");
  if (region) require_same_dims(region->dims(), gt.dims(), "auc region");
  if (!region) return auc(scores.grid().values(), gt.grid().values());
  std::vector<float> s;
  std::vector<std::uint8_t> l;
  for (std::size_t i = 0; i < gt.grid().size(); ++i) {
    if (!(*region)[i]) continue;
    s.push_back(scores[i]);
    l.push_back(gt.grid()[i]);
  }
  return auc(s, l);
}

struct MetricsReport {
  double iou = 0.0;
  double sen = 0.0;
  double acc = 0.0;
  std::optional<double> auc;
  std::vector<std::string> flags;

  std::string flag_string() const {
    std::string out;
    for (const auto& f : flags) out += (out.empty() ? "" : "|") + f;
    return out;
  }
};

inline MetricsReport evaluate(const VoxelMask& pred, const VoxelMask& gt,
                              const ProbabilityMap3D* prob = nullptr,
                              const VoxelMask* region = nullptr) {
  const auto c = confusion(pred, gt);
  MetricsReport r;
  const Ratio i = iou(c);
  const Ratio s = sen(c);
  const Ratio a = acc(c);
  r.iou = i.value;
  r.sen = s.value;
  r.acc = a.value;
  if (i.degenerate) r.flags.push_back("iou_empty");
  if (s.degenerate) r.flags.push_back("sen_empty");
  if (a.degenerate) r.flags.push_back("acc_empty");
  if (!prob) {
    r.flags.push_back("auc_na");
  } else {
    try {
      r.auc = auc(*prob, gt, region);
    } catch (const UndefinedAucError&) {
      r.flags.push_back("auc_undefined");
    }
  }
  return r;
}

inline std::string metrics_csv_header() { return "method,iou,sen,acc,auc,flags\n"; }

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string metrics_csv_row(const std::string& method, const MetricsReport& r) {
  return method + "," + format_metric(r.iou) + "," + format_metric(r.sen) + "," +
         format_metric(r.acc) + "," + (r.auc ? format_metric(*r.auc) : std::string("NA")) + "," +
         r.flag_string() + "\n";
}

struct ScheduleParams {
  double base_lr = 1e-4;
  std::uint64_t iter = 0;
  std::uint64_t max_iter = 1;
  double power = 0.9;
};

/// Polynomial decay: base_lr * (1 - iter / max_iter)^power.
inline double poly_lr(const ScheduleParams& p) {
  if (p.max_iter == 0) throw DomainError("poly_lr: max_iter must be positive");
  if (p.iter > p.max_iter) throw DomainError("poly_lr: iter exceeds max_iter");
  if (!(p.base_lr > 0.0)) throw DomainError("poly_lr: base_lr must be positive");
  if (!(p.power > 0.0)) throw DomainError("poly_lr: power must be positive");
  const double remaining =
      static_cast<double>(p.max_iter - p.iter) / static_cast<double>(p.max_iter);
  return p.base_lr * std::pow(remaining, p.power);
}

}  // namespace octcascade
