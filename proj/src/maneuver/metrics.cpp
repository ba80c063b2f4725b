#include "pvrisk/errors.hpp"
#include "pvrisk/maneuver/maneuver.hpp"

namespace pvrisk::maneuver {

ClassificationReport classification_report(std::span<const Maneuver> truth, std::span<const Maneuver> predicted) {
  if (truth.size() != predicted.size()) throw InputError("classification_report: length mismatch");
  ClassificationReport r;
  r.n = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i)
    ++r.confusion[static_cast<std::size_t>(index_of(truth[i]))][static_cast<std::size_t>(index_of(predicted[i]))];

  std::size_t correct = 0;
  std::size_t active = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t predicted_c = 0;
    std::size_t actual_c = 0;
    for (std::size_t o = 0; o < 3; ++o) {
      predicted_c += r.confusion[o][c];
      actual_c += r.confusion[c][o];
    }
    const std::size_t tp = r.confusion[c][c];
    correct += tp;
    ClassMetrics& m = r.per_class[c];
    m.support = actual_c;
    m.precision_undefined = predicted_c == 0;
    m.recall_undefined = actual_c == 0;
    m.precision = m.precision_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted_c);
    m.recall = m.recall_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(actual_c);
    m.f1_undefined = m.precision + m.recall == 0.0;
    m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    if (predicted_c > 0 || actual_c > 0) {
      ++active;
      r.macro_precision += m.precision;
      r.macro_recall += m.recall;
      r.macro_f1 += m.f1;
    }
  }
  if (active > 0) {
    r.macro_precision /= static_cast<double>(active);
    r.macro_recall /= static_cast<double>(active);
    r.macro_f1 /= static_cast<double>(active);
  }
  r.accuracy = r.n > 0 ? static_cast<double>(correct) / static_cast<double>(r.n) : 0.0;
  return r;
}

ClassificationReport evaluate_classifier(const ForestModel& model, const LabeledFeatures& test) {
  std::vector<Maneuver> predicted;
  predicted.reserve(test.size());
  for (const FeatureRow& row : test.rows) predicted.push_back(model.predict(row));
  return classification_report(test.labels, predicted);
}

}  // namespace pvrisk::maneuver
