#include "fpaforge/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fpaforge/error.hpp"
#include "fpaforge/feature_extract.hpp"
#include "fpaforge/rng.hpp"

namespace fpaforge::model {

namespace {

double numeric_cell(const Table& t, std::size_t row, std::size_t col) {
  auto v = parse_number(t.rows[row][col]);
  if (!v)
    fail(ErrorCode::InvalidArgument,
         fmt::format("row {} column '{}': '{}' is not numeric", row, t.columns[col], t.rows[row][col]));
  return *v;
}

void add_categories(CategoricalColumn& c, const Table& t) {
  const std::size_t col = t.column(c.name);
  for (const auto& r : t.rows)
    if (std::find(c.categories.begin(), c.categories.end(), r[col]) == c.categories.end())
      c.categories.push_back(r[col]);
}

}  // namespace

EncoderVocab EncoderVocab::fit(const Table& table, const std::vector<std::string>& categorical_columns,
                               const std::vector<std::string>& numeric_columns, VocabMode mode) {
  if (table.rows.empty()) fail(ErrorCode::InvalidArgument, "cannot fit an encoder on an empty table");
  EncoderVocab v;
  v.mode = mode;
  for (const auto& name : numeric_columns) {
    const std::size_t col = table.column(name);
    double sum = 0.0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) sum += numeric_cell(table, r, col);
    const double mean = sum / static_cast<double>(table.rows.size());
    double ss = 0.0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const double d = numeric_cell(table, r, col) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(table.rows.size()));
    v.numeric.push_back({name, mean, sd > 0.0 ? sd : 1.0});
  }
  for (const auto& name : categorical_columns) {
    CategoricalColumn c{name, {}};
    add_categories(c, table);
    v.categorical.push_back(std::move(c));
  }
  return v;
}

EncoderVocab EncoderVocab::fit_schema(const Table& table, VocabMode mode) {
  std::vector<std::string> cats, nums;
  for (const auto& name : table.columns) {
    auto idx = features::column_index(name);
    if (!idx) continue;
    switch (features::schema()[*idx].role) {
      case features::MlRole::Categorical: cats.push_back(name); break;
      case features::MlRole::Numeric: nums.push_back(name); break;
      case features::MlRole::Drop: break;
    }
  }
  return fit(table, cats, nums, mode);
}

void EncoderVocab::extend(const Table& table) {
  if (mode != VocabMode::Extended) fail(ErrorCode::InvalidArgument, "strict vocabularies are frozen at fit time");
  for (auto& c : categorical) add_categories(c, table);
}

std::size_t EncoderVocab::dimension() const {
  std::size_t d = numeric.size();
  for (const auto& c : categorical) d += c.categories.size();
  return d;
}

std::vector<std::string> EncoderVocab::feature_names() const {
  std::vector<std::string> names;
  for (const auto& n : numeric) names.push_back(n.name);
  for (const auto& c : categorical)
    for (const auto& cat : c.categories) names.push_back(c.name + "=" + cat);
  return names;
}

std::pair<std::size_t, std::size_t> EncoderVocab::block(std::string_view column) const {
  std::size_t off = numeric.size();
  for (const auto& c : categorical) {
    if (c.name == column) return {off, c.categories.size()};
    off += c.categories.size();
  }
  fail(ErrorCode::InvalidArgument, fmt::format("'{}' is not a categorical column", column));
}

Vector EncoderVocab::encode(const Table& table, std::size_t row) const {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(dimension()));
  Eigen::Index at = 0;
  for (const auto& n : numeric) {
    x[at++] = (numeric_cell(table, row, table.column(n.name)) - n.mean) / n.sd;
  }
  for (const auto& c : categorical) {
    const std::string& value = table.rows[row][table.column(c.name)];
    auto it = std::find(c.categories.begin(), c.categories.end(), value);
    if (it != c.categories.end()) x[at + (it - c.categories.begin())] = 1.0;
    at += static_cast<Eigen::Index>(c.categories.size());
  }
  return x;
}

Matrix EncoderVocab::encode_all(const Table& table) const {
  Matrix m(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(dimension()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = encode(table, r).transpose();
  return m;
}

Vector softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp();
  return e / e.sum();
}

LossGradient loss_and_gradient(const Matrix& w, const Vector& b, const Matrix& x, const std::vector<std::size_t>& y,
                               double l2) {
  const auto n = x.rows();
  if (static_cast<std::size_t>(n) != y.size()) fail(ErrorCode::DimMismatch, "rows and labels differ in count");
  if (x.cols() != w.cols() || b.size() != w.rows()) fail(ErrorCode::DimMismatch, "weight shapes do not match input");
  LossGradient g;
  g.grad_weights = Matrix::Zero(w.rows(), w.cols());
  g.grad_bias = Vector::Zero(b.size());
  const Matrix logits = (x * w.transpose()).rowwise() + b.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector z = logits.row(i).transpose();
    const double mx = z.maxCoeff();
    const double lse = mx + std::log((z.array() - mx).exp().sum());
    const auto yi = static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)]);
    g.loss += lse - z[yi];
    Vector p = (z.array() - lse).exp();
    p[yi] -= 1.0;
    g.grad_weights += p * x.row(i);
    g.grad_bias += p;
  }
  const double inv = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  g.loss = g.loss * inv + 0.5 * l2 * w.squaredNorm();
  g.grad_weights = g.grad_weights * inv + l2 * w;
  g.grad_bias *= inv;
  return g;
}

SoftmaxModel train(const Matrix& x, const std::vector<std::string>& labels, const TrainParams& params) {
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    fail(ErrorCode::DegenerateLabels, fmt::format("{} rows but {} labels", x.rows(), labels.size()));
  std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) fail(ErrorCode::DegenerateLabels, "training needs at least two classes");
  if (!(params.learning_rate > 0.0)) fail(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (params.l2 < 0.0) fail(ErrorCode::InvalidArgument, "l2 penalty must be non-negative");

  SoftmaxModel m;
  m.labels.assign(distinct.begin(), distinct.end());
  m.params = params;
  std::vector<std::size_t> y;
  y.reserve(labels.size());
  for (const auto& l : labels)
    y.push_back(static_cast<std::size_t>(std::lower_bound(m.labels.begin(), m.labels.end(), l) - m.labels.begin()));

  const auto k = static_cast<Eigen::Index>(m.labels.size());
  const auto d = x.cols();
  Rng rng(params.seed);
  m.weights.resize(k, d);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m.weights(i, j) = 0.02 * (rng.uniform01() - 0.5);
  m.bias = Vector::Zero(k);

  Matrix xt(x.rows(), d + 1);
  xt << x, Vector::Ones(x.rows());
  const Matrix gram = xt.transpose() * xt / static_cast<double>(std::max<Eigen::Index>(x.rows(), 1));
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const double lipschitz = 0.5 * std::max(es.eigenvalues().maxCoeff(), 0.0) * 1.0001 + params.l2;
  m.step_used = lipschitz > 0.0 ? std::min(params.learning_rate, 1.0 / lipschitz) : params.learning_rate;

  for (std::size_t e = 0; e < params.epochs; ++e) {
    LossGradient g = loss_and_gradient(m.weights, m.bias, x, y, params.l2);
    m.loss_history.push_back(g.loss);
    m.weights -= m.step_used * g.grad_weights;
    m.bias -= m.step_used * g.grad_bias;
  }
  m.loss_history.push_back(loss_and_gradient(m.weights, m.bias, x, y, params.l2).loss);
  return m;
}

Vector predict_proba(const SoftmaxModel& model, const Vector& x) {
  if (x.size() != model.weights.cols())
    fail(ErrorCode::DimMismatch, fmt::format("input has {} features, model expects {}", x.size(), model.weights.cols()));
  return softmax(model.weights * x + model.bias);
}

std::string predict_label(const SoftmaxModel& model, const Vector& x) {
  Eigen::Index arg;
  predict_proba(model, x).maxCoeff(&arg);
  return model.labels[static_cast<std::size_t>(arg)];
}

FpaReport evaluate_fpa(const SoftmaxModel& model, const EncoderVocab& vocab, const Table& crafted,
                       std::string_view benign_label) {
  if (vocab.dimension() != model.dimension())
    fail(ErrorCode::DimMismatch,
         fmt::format("encoder yields {} features, model expects {}", vocab.dimension(), model.dimension()));
  FpaReport r;
  r.samples = crafted.rows.size();
  std::vector<double> conf, ent;
  for (std::size_t i = 0; i < crafted.rows.size(); ++i) {
    const Vector p = predict_proba(model, vocab.encode(crafted, i));
    std::vector<double> pv(p.data(), p.data() + p.size());
    const auto ce = stats::confidence_entropy(pv);
    conf.push_back(ce.confidence);
    ent.push_back(ce.entropy);
    r.high_confidence += ce.high_confidence;
    r.low_entropy += ce.low_entropy;
    r.high_entropy += ce.high_entropy;
    r.overconfident += ce.overconfident;
    Eigen::Index arg;
    p.maxCoeff(&arg);
    const std::string& label = model.labels[static_cast<std::size_t>(arg)];
    r.predictions.push_back(label);
    ++r.predicted_as[label];
    if (label != benign_label) ++r.misclassified;
  }
  if (r.samples) {
    r.asr = stats::attack_success_rate(r.misclassified, r.samples);
    r.mean_confidence = stats::arithmetic_mean(conf);
    r.geo_mean_confidence = stats::geometric_mean(conf);
    r.mean_entropy = stats::arithmetic_mean(ent);
    r.geo_mean_entropy = stats::geometric_mean(ent);
  }
  return r;
}

std::string fpa_report_csv(const FpaReport& r) {
  std::string out;
  auto row = [&](std::string_view k, std::string v) {
    append_csv_row(out, std::vector<std::string>{std::string(k), std::move(v)});
  };
  row("metric", "value");
  row("samples", fmt::format("{}", r.samples));
  row("misclassified", fmt::format("{}", r.misclassified));
  row("asr_pct", fmt::format("{:.2f}", r.asr));
  row("mean_confidence", fmt::format("{:.6f}", r.mean_confidence));
  row("geo_mean_confidence", fmt::format("{:.6f}", r.geo_mean_confidence));
  row("mean_entropy", fmt::format("{:.6f}", r.mean_entropy));
  row("geo_mean_entropy", fmt::format("{:.6f}", r.geo_mean_entropy));
  row("high_confidence", fmt::format("{}", r.high_confidence));
  row("low_entropy", fmt::format("{}", r.low_entropy));
  row("high_entropy", fmt::format("{}", r.high_entropy));
  row("overconfident", fmt::format("{}", r.overconfident));
  for (const auto& [label, n] : r.predicted_as) row("predicted_as:" + label, fmt::format("{}", n));
  return out;
}

namespace {

std::string escape_line(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

std::string unescape_line(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out.push_back(s[i]);
      continue;
    }
    switch (s[++i]) {
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case 't': out.push_back('\t'); break;
      default: out.push_back(s[i]);
    }
  }
  return out;
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : in_(std::string(text)) {}
  std::string next(std::string_view what) {
    std::string line;
    if (!std::getline(in_, line)) fail(ErrorCode::InvalidArgument, fmt::format("model file ends before {}", what));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }
  // "<keyword> <count>"
  std::size_t header(std::string_view keyword) {
    std::string line = next(keyword);
    std::istringstream ss(line);
    std::string k;
    long long n = -1;
    ss >> k >> n;
    if (k != keyword || n < 0) fail(ErrorCode::InvalidArgument, fmt::format("expected '{} <n>', got '{}'", keyword, line));
    return static_cast<std::size_t>(n);
  }
  std::vector<double> numbers(std::size_t count, std::string_view what) {
    std::istringstream ss(next(what));
    std::vector<double> v(count);
    for (auto& x : v) {
      std::string tok;
      if (!(ss >> tok)) fail(ErrorCode::InvalidArgument, fmt::format("{}: too few values", what));
      auto parsed = parse_number(tok);
      if (!parsed) fail(ErrorCode::InvalidArgument, fmt::format("{}: '{}' is not a number", what, tok));
      x = *parsed;
    }
    return v;
  }

 private:
  std::istringstream in_;
};

}  // namespace

std::string save_text(const SoftmaxModel& m, const EncoderVocab& v) {
  std::string out = "fpaforge-surrogate 1\n";
  out += fmt::format("mode {}\n", v.mode == VocabMode::Strict ? "strict" : "extended");
  out += fmt::format("numeric {}\n", v.numeric.size());
  for (const auto& n : v.numeric) out += fmt::format("{}\n{:.17g} {:.17g}\n", escape_line(n.name), n.mean, n.sd);
  out += fmt::format("categorical {}\n", v.categorical.size());
  for (const auto& c : v.categorical) {
    out += fmt::format("{}\ncategories {}\n", escape_line(c.name), c.categories.size());
    for (const auto& cat : c.categories) out += escape_line(cat) + "\n";
  }
  out += fmt::format("classes {}\n", m.labels.size());
  for (const auto& l : m.labels) out += escape_line(l) + "\n";
  out += fmt::format("dimension {}\n", m.weights.cols());
  out += fmt::format("train {} {:.17g} {:.17g} {} {:.17g}\n", m.params.epochs, m.params.learning_rate, m.params.l2,
                     m.params.seed, m.step_used);
  for (Eigen::Index i = 0; i < m.weights.rows(); ++i) {
    std::string line;
    for (Eigen::Index j = 0; j < m.weights.cols(); ++j) line += fmt::format("{}{:.17g}", j ? " " : "", m.weights(i, j));
    out += line + "\n";
  }
  std::string line;
  for (Eigen::Index i = 0; i < m.bias.size(); ++i) line += fmt::format("{}{:.17g}", i ? " " : "", m.bias[i]);
  out += line + "\n";
  return out;
}

std::pair<SoftmaxModel, EncoderVocab> load_text(std::string_view text) {
  LineReader in(text);
  if (in.next("magic") != "fpaforge-surrogate 1") fail(ErrorCode::InvalidArgument, "not a surrogate model file");
  EncoderVocab v;
  const std::string mode = in.next("mode");
  if (mode == "mode strict") {
    v.mode = VocabMode::Strict;
  } else if (mode == "mode extended") {
    v.mode = VocabMode::Extended;
  } else {
    fail(ErrorCode::InvalidArgument, fmt::format("bad mode line '{}'", mode));
  }
  const std::size_t nn = in.header("numeric");
  for (std::size_t i = 0; i < nn; ++i) {
    NumericColumn c;
    c.name = unescape_line(in.next("numeric name"));
    auto ms = in.numbers(2, "numeric stats");
    c.mean = ms[0];
    c.sd = ms[1];
    v.numeric.push_back(std::move(c));
  }
  const std::size_t nc = in.header("categorical");
  for (std::size_t i = 0; i < nc; ++i) {
    CategoricalColumn c;
    c.name = unescape_line(in.next("categorical name"));
    const std::size_t k = in.header("categories");
    for (std::size_t j = 0; j < k; ++j) c.categories.push_back(unescape_line(in.next("category")));
    v.categorical.push_back(std::move(c));
  }
  SoftmaxModel m;
  const std::size_t k = in.header("classes");
  for (std::size_t i = 0; i < k; ++i) m.labels.push_back(unescape_line(in.next("class")));
  const std::size_t d = in.header("dimension");
  if (d != v.dimension())
    fail(ErrorCode::DimMismatch, fmt::format("model dimension {} disagrees with encoder dimension {}", d, v.dimension()));
  {
    std::istringstream ss(in.next("train"));
    std::string kw;
    ss >> kw >> m.params.epochs >> m.params.learning_rate >> m.params.l2 >> m.params.seed >> m.step_used;
    if (kw != "train" || !ss) fail(ErrorCode::InvalidArgument, "bad train line");
  }
  m.weights.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < k; ++i) {
    auto row = in.numbers(d, "weights");
    for (std::size_t j = 0; j < d; ++j) m.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  auto b = in.numbers(k, "bias");
  m.bias = Eigen::Map<Vector>(b.data(), static_cast<Eigen::Index>(k));
  return {std::move(m), std::move(v)};
}

void save_model(const std::filesystem::path& path, const SoftmaxModel& model, const EncoderVocab& vocab) {
  write_text_file(path, save_text(model, vocab));
}

std::pair<SoftmaxModel, EncoderVocab> load_model(const std::filesystem::path& path) {
  return load_text(read_text_file(path));
}

}  // namespace fpaforge::model
