#pragma once

#include <string>
#include <vector>

#include "fpaforge/csv.hpp"
#include "fpaforge/surrogate.hpp"

namespace fpaforge::analysis {

struct AnalysisOptions {
  model::VocabMode encoding = model::VocabMode::Extended;
  // Empty: schema roles for known columns, otherwise numeric if every cell parses.
  std::vector<std::string> categorical;
  std::vector<std::string> numeric;
  std::size_t pca_dims = 2;
  bool regularize = true;
  bool centroid = true;
  bool paired = true;
  bool pairwise = true;
  std::size_t max_pairs = 250'000;
  bool kl = true;
};

struct MetricRow {
  std::string metric;
  std::string mode;
  double value = 0.0;
};

// Encodes both tables with a vocabulary fitted on `reference` (z-scores
// against the reference), then reports similarity, distance and divergence
// of `crafted` against it.
std::vector<MetricRow> analyze(const Table& reference, const Table& crafted, const AnalysisOptions& options = {});
std::string metrics_csv(const std::vector<MetricRow>& rows);

// Column roles used when options leave them empty.
void default_columns(const Table& table, std::vector<std::string>& categorical, std::vector<std::string>& numeric);

struct FitOutcome {
  model::SoftmaxModel model;
  model::EncoderVocab vocab;
  double train_accuracy = 0.0;
};

// Trains the surrogate on every usable column except the label columns
// (`label_column`, Attack_label, Attack_type).
FitOutcome fit_surrogate(const Table& train, const std::string& label_column, model::VocabMode mode,
                         const model::TrainParams& params, std::vector<std::string> categorical = {},
                         std::vector<std::string> numeric = {});

}  // namespace fpaforge::analysis
