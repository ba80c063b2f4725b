#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <set>

#include "pvrisk/errors.hpp"
#include "pvrisk/ssm/ssm.hpp"

namespace pvrisk::ssm {

DetectionReport evaluate_scores(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw InputError("evaluate_scores: length mismatch");
  DetectionReport r;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > 0.0;
    if (positive[i]) {
      ++n_pos;
      ++(predicted ? r.true_positives : r.false_negatives);
    } else {
      ++(predicted ? r.false_positives : r.true_negatives);
    }
  }
  const std::size_t n_neg = scores.size() - n_pos;
  r.sensitivity_undefined = n_pos == 0;
  r.false_alarm_rate_undefined = n_neg == 0;
  r.auc_undefined = n_pos == 0 || n_neg == 0;
  const auto rate = [](std::size_t a, std::size_t n) { return n == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(n); };
  r.sensitivity = rate(r.true_positives, n_pos);
  r.false_alarm_rate = rate(r.false_positives, n_neg);

  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  r.roc.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0, cursor = 0;
  for (double thr : thresholds) {
    while (cursor < order.size() && scores[order[cursor]] >= thr) {
      ++(positive[order[cursor]] ? tp : fp);
      ++cursor;
    }
    r.roc.push_back({thr, rate(tp, n_pos), rate(fp, n_neg)});
  }
  if (!r.auc_undefined)
    for (std::size_t i = 1; i < r.roc.size(); ++i)
      r.auc += (r.roc[i].fpr - r.roc[i - 1].fpr) * (r.roc[i].tpr + r.roc[i - 1].tpr) * 0.5;
  return r;
}

DetectionReport evaluate_detection(const std::vector<PairStream>& streams, const std::vector<ConflictEvent>& truth) {
  std::set<std::pair<std::string, std::string>> truth_pairs;
  for (const ConflictEvent& e : truth) truth_pairs.emplace(e.vehicle_id, e.pedestrian_id);

  std::map<std::pair<std::string, std::string>, double> score;
  for (const PairStream& s : streams) {
    double m = 0.0;
    for (double r : s.risks) m = std::max(m, r);
    auto [it, inserted] = score.emplace(std::make_pair(s.vehicle_id, s.pedestrian_id), m);
    if (!inserted) it->second = std::max(it->second, m);
  }
  for (const auto& key : truth_pairs)
    if (!score.contains(key))
      throw InputError("evaluate_detection: no risk stream for conflict pair " + key.first + "/" + key.second);

  std::vector<double> scores;
  std::vector<bool> positive;
  for (const auto& [key, s] : score) {
    scores.push_back(s);
    positive.push_back(truth_pairs.contains(key));
  }
  return evaluate_scores(scores, positive);
}

}  // namespace pvrisk::ssm
