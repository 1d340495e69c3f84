#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hsd {

using ConfusionMatrix = std::vector<std::vector<std::size_t>>;  // [gold][predicted]

// All three throw ValidationError on length mismatch or empty input and
// IndexError on a label >= num_classes.
ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                                 std::size_t num_classes);
double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> golds);
// Unweighted mean of per-class F1 over all num_classes classes. A class with
// no predicted and no gold instances scores 0.
double macro_f1(std::span<const std::size_t> preds, std::span<const std::size_t> golds, std::size_t num_classes);
std::vector<double> per_class_f1(const ConfusionMatrix& cm);

// Index of the first maximum.
std::size_t argmax(std::span<const double> values);

}  // namespace hsd
