#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fpaforge/csv.hpp"
#include "fpaforge/stats.hpp"

namespace fpaforge::model {

using stats::Matrix;
using stats::Vector;

enum class VocabMode { Strict, Extended };

struct NumericColumn {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;  // 1 when the fit data is constant

  bool operator==(const NumericColumn&) const = default;
};

struct CategoricalColumn {
  std::string name;
  std::vector<std::string> categories;  // first-seen order

  bool operator==(const CategoricalColumn&) const = default;
};

class EncoderVocab {
 public:
  VocabMode mode = VocabMode::Strict;
  std::vector<NumericColumn> numeric;
  std::vector<CategoricalColumn> categorical;

  static EncoderVocab fit(const Table& table, const std::vector<std::string>& categorical_columns,
                          const std::vector<std::string>& numeric_columns, VocabMode mode);
  // Categorical and numeric columns taken from the feature schema roles.
  static EncoderVocab fit_schema(const Table& table, VocabMode mode);

  // Extended mode only: appends categories of `table` not seen so far.
  void extend(const Table& table);

  std::size_t dimension() const;
  std::vector<std::string> feature_names() const;
  // Numerics first (z-scored), then one one-hot block per categorical column.
  Vector encode(const Table& table, std::size_t row) const;
  Matrix encode_all(const Table& table) const;
  // Offset and width of a categorical column's block.
  std::pair<std::size_t, std::size_t> block(std::string_view column) const;

  bool operator==(const EncoderVocab&) const = default;
};

struct TrainParams {
  std::size_t epochs = 300;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

struct SoftmaxModel {
  Matrix weights;  // K × d
  Vector bias;     // K
  std::vector<std::string> labels;
  TrainParams params;
  double step_used = 0.0;
  std::vector<double> loss_history;  // loss before each epoch, then final

  std::size_t classes() const noexcept { return labels.size(); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(weights.cols()); }
};

struct LossGradient {
  double loss = 0.0;
  Matrix grad_weights;
  Vector grad_bias;
};

// Mean cross-entropy plus (l2/2)·‖W‖².
LossGradient loss_and_gradient(const Matrix& weights, const Vector& bias, const Matrix& x,
                               const std::vector<std::size_t>& y, double l2);

Vector softmax(const Vector& logits);

// Full-batch gradient descent with step min(learning_rate, 1/L), L an upper
// bound on the gradient's Lipschitz constant. The loss never rises.
SoftmaxModel train(const Matrix& x, const std::vector<std::string>& labels, const TrainParams& params);

Vector predict_proba(const SoftmaxModel& model, const Vector& x);
std::string predict_label(const SoftmaxModel& model, const Vector& x);

struct FpaReport {
  std::size_t samples = 0;
  std::size_t misclassified = 0;
  double asr = 0.0;
  double mean_confidence = 0.0;
  double geo_mean_confidence = 0.0;
  double mean_entropy = 0.0;
  double geo_mean_entropy = 0.0;
  std::size_t high_confidence = 0;
  std::size_t low_entropy = 0;
  std::size_t high_entropy = 0;
  std::size_t overconfident = 0;
  std::map<std::string, std::size_t> predicted_as;
  std::vector<std::string> predictions;
};

// Every crafted row counts as benign; any other prediction is a success.
FpaReport evaluate_fpa(const SoftmaxModel& model, const EncoderVocab& vocab, const Table& crafted,
                       std::string_view benign_label);
std::string fpa_report_csv(const FpaReport& report);

std::string save_text(const SoftmaxModel& model, const EncoderVocab& vocab);
std::pair<SoftmaxModel, EncoderVocab> load_text(std::string_view text);
void save_model(const std::filesystem::path& path, const SoftmaxModel& model, const EncoderVocab& vocab);
std::pair<SoftmaxModel, EncoderVocab> load_model(const std::filesystem::path& path);

}  // namespace fpaforge::model
