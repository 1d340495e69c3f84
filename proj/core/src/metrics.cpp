#include "hsd/metrics.hpp"

#include <string>

#include "hsd/error.hpp"

namespace hsd {

namespace {

void check_lengths(std::span<const std::size_t> preds, std::span<const std::size_t> golds) {
  if (preds.size() != golds.size()) {
    throw ValidationError("prediction/gold length mismatch: " + std::to_string(preds.size()) + " vs " +
                          std::to_string(golds.size()));
  }
  if (preds.empty()) throw ValidationError("metrics need at least one item");
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                                 std::size_t num_classes) {
  check_lengths(preds, golds);
  ConfusionMatrix cm(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= num_classes || golds[i] >= num_classes) {
      throw IndexError("label out of range at item " + std::to_string(i));
    }
    ++cm[golds[i]][preds[i]];
  }
  return cm;
}

double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> golds) {
  check_lengths(preds, golds);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == golds[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

std::vector<double> per_class_f1(const ConfusionMatrix& cm) {
  const std::size_t C = cm.size();
  std::vector<double> f1(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const std::size_t tp = cm[c][c];
    std::size_t gold = 0;
    std::size_t pred = 0;
    for (std::size_t k = 0; k < C; ++k) {
      gold += cm[c][k];
      pred += cm[k][c];
    }
    // F1 = 2TP / (2TP + FP + FN) = 2TP / (pred + gold)
    f1[c] = (pred + gold) == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(pred + gold);
  }
  return f1;
}

double macro_f1(std::span<const std::size_t> preds, std::span<const std::size_t> golds, std::size_t num_classes) {
  const auto f1 = per_class_f1(confusion_matrix(preds, golds, num_classes));
  double sum = 0.0;
  for (double v : f1) sum += v;
  return sum / static_cast<double>(num_classes);
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace hsd
