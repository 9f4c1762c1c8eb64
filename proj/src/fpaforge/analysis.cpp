#include "fpaforge/analysis.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fpaforge/error.hpp"
#include "fpaforge/feature_extract.hpp"
#include "fpaforge/stats.hpp"

namespace fpaforge::analysis {

using stats::Matrix;
using stats::Vector;

void default_columns(const Table& table, std::vector<std::string>& categorical, std::vector<std::string>& numeric) {
  bool any_schema = false;
  for (const auto& name : table.columns) {
    auto idx = features::column_index(name);
    if (!idx) continue;
    any_schema = true;
    switch (features::schema()[*idx].role) {
      case features::MlRole::Categorical: categorical.push_back(name); break;
      case features::MlRole::Numeric: numeric.push_back(name); break;
      case features::MlRole::Drop: break;
    }
  }
  if (any_schema) return;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    bool all_numeric = true;
    for (const auto& r : table.rows)
      if (!parse_number(r[c])) {
        all_numeric = false;
        break;
      }
    (all_numeric ? numeric : categorical).push_back(table.columns[c]);
  }
}

namespace {

struct Accum {
  double sum = 0.0;
  std::size_t n = 0;
  std::size_t skipped = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN(); }
};

struct PairMetrics {
  Accum cos, pear, euc, mah, mah2;

  void add(const Vector& x, const Vector& y, const stats::ReferenceDistribution& ref) {
    try {
      cos.add(stats::cosine(x, y));
    } catch (const Error&) {
      ++cos.skipped;
    }
    try {
      pear.add(stats::pearson(x, y));
    } catch (const Error&) {
      ++pear.skipped;
    }
    euc.add(stats::euclidean(x, y));
    const Vector d = x - y;
    const double m2 = std::max(0.0, d.dot(ref.inverse_covariance * d));
    mah2.add(m2);
    mah.add(std::sqrt(m2));
  }

  void emit(std::vector<MetricRow>& out, const std::string& mode) const {
    out.push_back({"cosine", mode, cos.mean()});
    out.push_back({"pearson", mode, pear.mean()});
    out.push_back({"euclidean", mode, euc.mean()});
    out.push_back({"mahalanobis", mode, mah.mean()});
    out.push_back({"mahalanobis_squared", mode, mah2.mean()});
    out.push_back({"pairs", mode, static_cast<double>(euc.n)});
    out.push_back({"cosine_skipped", mode, static_cast<double>(cos.skipped)});
    out.push_back({"pearson_skipped", mode, static_cast<double>(pear.skipped)});
  }
};

}  // namespace

std::vector<MetricRow> analyze(const Table& reference, const Table& crafted, const AnalysisOptions& options) {
  if (reference.rows.size() < 2) fail(ErrorCode::DegenerateSamples, "reference set needs at least two rows");
  if (crafted.rows.empty()) fail(ErrorCode::DegenerateSamples, "crafted set is empty");
  std::vector<std::string> cats = options.categorical;
  std::vector<std::string> nums = options.numeric;
  if (cats.empty() && nums.empty()) default_columns(reference, cats, nums);

  auto vocab = model::EncoderVocab::fit(reference, cats, nums, options.encoding);
  if (options.encoding == model::VocabMode::Extended) vocab.extend(crafted);
  const Matrix ref = vocab.encode_all(reference);
  const Matrix cra = vocab.encode_all(crafted);
  const auto refdist = stats::ReferenceDistribution::fit(ref, options.regularize);

  std::vector<MetricRow> out;
  out.push_back({"dimension", "encoding", static_cast<double>(vocab.dimension())});
  out.push_back({"regularization_epsilon", "encoding", refdist.regularization_epsilon});

  if (options.centroid) {
    PairMetrics pm;
    const Vector centroid = refdist.mean;
    for (Eigen::Index i = 0; i < cra.rows(); ++i) pm.add(cra.row(i).transpose(), centroid, refdist);
    pm.emit(out, "centroid");
  }
  if (options.paired) {
    PairMetrics pm;
    const auto n = std::min(cra.rows(), ref.rows());
    for (Eigen::Index i = 0; i < n; ++i) pm.add(cra.row(i).transpose(), ref.row(i).transpose(), refdist);
    pm.emit(out, "paired");
  }
  if (options.pairwise) {
    PairMetrics pm;
    const std::size_t total = static_cast<std::size_t>(cra.rows()) * static_cast<std::size_t>(ref.rows());
    const std::size_t stride = options.max_pairs && total > options.max_pairs ? (total + options.max_pairs - 1) / options.max_pairs : 1;
    for (std::size_t k = 0; k < total; k += stride) {
      const auto i = static_cast<Eigen::Index>(k / static_cast<std::size_t>(ref.rows()));
      const auto j = static_cast<Eigen::Index>(k % static_cast<std::size_t>(ref.rows()));
      pm.add(cra.row(i).transpose(), ref.row(j).transpose(), refdist);
    }
    pm.emit(out, "pairwise");
  }
  if (options.kl) {
    const auto rep = stats::kl_report(ref, cra, options.pca_dims);
    out.push_back({"kl_per_feature_mean", "kde", rep.per_feature_mean});
    out.push_back({"kl_pca_joint", "kde", rep.pca_joint});
    out.push_back({"kl_pca_dims", "kde", static_cast<double>(rep.pca_dims)});
    out.push_back({"kl_skipped_features", "kde", static_cast<double>(rep.skipped.size())});
    const auto names = vocab.feature_names();
    for (std::size_t j = 0; j < rep.per_feature.size(); ++j)
      if (!std::isnan(rep.per_feature[j])) out.push_back({"kl:" + names[j], "kde", rep.per_feature[j]});
  }
  return out;
}

FitOutcome fit_surrogate(const Table& train, const std::string& label_column, model::VocabMode mode,
                         const model::TrainParams& params, std::vector<std::string> categorical,
                         std::vector<std::string> numeric) {
  const std::size_t label_idx = train.column(label_column);
  if (categorical.empty() && numeric.empty()) default_columns(train, categorical, numeric);
  auto is_label = [&](const std::string& c) { return c == label_column || c == "Attack_label" || c == "Attack_type"; };
  std::erase_if(categorical, is_label);
  std::erase_if(numeric, is_label);
  if (categorical.empty() && numeric.empty()) fail(ErrorCode::InvalidArgument, "no feature columns to train on");
  FitOutcome out;
  out.vocab = model::EncoderVocab::fit(train, categorical, numeric, mode);
  const Matrix x = out.vocab.encode_all(train);
  std::vector<std::string> labels;
  labels.reserve(train.rows.size());
  for (const auto& r : train.rows) labels.push_back(r[label_idx]);
  out.model = model::train(x, labels, params);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (model::predict_label(out.model, x.row(i).transpose()) == labels[static_cast<std::size_t>(i)]) ++correct;
  out.train_accuracy = labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());
  return out;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out;
  append_csv_row(out, std::vector<std::string>{"metric", "mode", "value"});
  for (const auto& r : rows)
    append_csv_row(out, std::vector<std::string>{r.metric, r.mode,
                                                 std::isnan(r.value) ? std::string("nan") : fmt::format("{:.10g}", r.value)});
  return out;
}

}  // namespace fpaforge::analysis
