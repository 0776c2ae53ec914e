#include "topohead/classifier.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "topohead/error.hpp"

namespace topohead::clf {
namespace {

void softmax_scores(const Matrix& w, std::span<const double> b, std::span<const double> x,
                    std::vector<double>& out) {
  const std::size_t k_count = w.rows;
  out.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    double s = b[k];
    const auto wk = w.row(k);
    for (std::size_t j = 0; j < x.size(); ++j) s += wk[j] * x[j];
    out[k] = s;
  }
}

/// In place: scores -> probabilities; returns log-sum-exp.
double softmax_inplace(std::vector<double>& s) {
  const double top = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double& v : s) {
    v = std::exp(v - top);
    z += v;
  }
  for (double& v : s) v /= z;
  return top + std::log(z);
}

double l1_norm(const Matrix& w) {
  double acc = 0.0;
  for (double v : w.data) acc += std::abs(v);
  return acc;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct EncodedLabels {
  std::vector<std::string> classes;
  std::vector<std::size_t> index;
};

EncodedLabels encode(std::span<const std::string> labels,
                     const std::vector<std::string>* classes = nullptr) {
  EncodedLabels enc;
  if (classes) {
    enc.classes = *classes;
  } else {
    enc.classes.assign(labels.begin(), labels.end());
    std::sort(enc.classes.begin(), enc.classes.end());
    enc.classes.erase(std::unique(enc.classes.begin(), enc.classes.end()), enc.classes.end());
  }
  enc.index.reserve(labels.size());
  for (const auto& l : labels) {
    auto it = std::lower_bound(enc.classes.begin(), enc.classes.end(), l);
    if (it == enc.classes.end() || *it != l) {
      throw Error(ErrorCode::InvalidArgument, "unknown class label '" + l + "'");
    }
    enc.index.push_back(static_cast<std::size_t>(it - enc.classes.begin()));
  }
  return enc;
}

void check_finite(const Matrix& x) {
  for (double v : x.data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite feature value");
  }
}

}  // namespace

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw Error(ErrorCode::SizeMismatch, "matrix buffer size mismatch");
}

Standardizer fit_standardizer(const Matrix& x) {
  if (x.rows == 0) throw Error(ErrorCode::InvalidArgument, "cannot standardize empty data");
  Standardizer s;
  s.means.assign(x.cols, 0.0);
  s.scales.assign(x.cols, 0.0);
  for (std::size_t j = 0; j < x.cols; ++j) {
    double lo = x(0, j), hi = x(0, j), sum = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      sum += x(i, j);
      lo = std::min(lo, x(i, j));
      hi = std::max(hi, x(i, j));
    }
    if (lo == hi) {
      // Exact mean so that constant columns map to exactly zero.
      s.means[j] = lo;
      s.scales[j] = kScaleFloor;
      continue;
    }
    const double mean = sum / static_cast<double>(x.rows);
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
    s.means[j] = mean;
    s.scales[j] = std::max(kScaleFloor, std::sqrt(ss / static_cast<double>(x.rows)));
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols != means.size()) {
    throw Error(ErrorCode::SizeMismatch, "standardizer fitted on a different width");
  }
  Matrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = (x(i, j) - means[j]) / scales[j];
  }
  return out;
}

std::size_t LinearModel::zero_weight_count() const {
  return static_cast<std::size_t>(std::count(weights.data.begin(), weights.data.end(), 0.0));
}

double SoftmaxLoss::value(const Matrix& w, std::span<const double> b) const {
  std::vector<double> s;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    softmax_scores(w, b, x.row(i), s);
    const double target = s[y[i]];
    loss += softmax_inplace(s) - target;
  }
  return loss / static_cast<double>(x.rows);
}

double SoftmaxLoss::gradient(const Matrix& w, std::span<const double> b, Matrix& grad_w,
                             std::vector<double>& grad_b) const {
  grad_w = Matrix(classes, x.cols);
  grad_b.assign(classes, 0.0);
  std::vector<double> s;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto xi = x.row(i);
    softmax_scores(w, b, xi, s);
    const double target = s[y[i]];
    loss += softmax_inplace(s) - target;
    s[y[i]] -= 1.0;
    for (std::size_t k = 0; k < classes; ++k) {
      grad_b[k] += s[k];
      for (std::size_t j = 0; j < x.cols; ++j) grad_w(k, j) += s[k] * xi[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(x.rows);
  for (double& g : grad_w.data) g *= inv;
  for (double& g : grad_b) g *= inv;
  return loss * inv;
}

double objective(const LinearModel& model, const Matrix& x,
                 std::span<const std::string> labels) {
  const auto enc = encode(labels, &model.classes);
  const SoftmaxLoss loss{x, enc.index, model.classes.size()};
  return loss.value(model.weights, model.bias) + model.lambda * l1_norm(model.weights);
}

LinearModel train_l1_logreg(const Matrix& x, std::span<const std::string> labels,
                            const TrainOptions& options, std::vector<double>* trace) {
  if (x.rows != labels.size()) {
    throw Error(ErrorCode::SizeMismatch, "feature rows and labels differ in count");
  }
  if (x.rows < 2) throw Error(ErrorCode::InvalidArgument, "training needs at least 2 samples");
  if (!(options.lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  check_finite(x);
  const auto enc = encode(labels);
  if (enc.classes.size() < 2) {
    throw Error(ErrorCode::SingleClass, "training labels contain a single class");
  }

  const std::size_t k_count = enc.classes.size();
  const SoftmaxLoss loss{x, enc.index, k_count};
  LinearModel model;
  model.classes = enc.classes;
  model.weights = Matrix(k_count, x.cols);
  model.bias.assign(k_count, 0.0);
  model.lambda = options.lambda;
  model.seed = options.seed;

  Matrix grad_w;
  std::vector<double> grad_b;
  double f = loss.gradient(model.weights, model.bias, grad_w, grad_b);
  double obj = f + options.lambda * l1_norm(model.weights);
  if (trace) trace->assign(1, obj);

  double step = 1.0;
  Matrix next_w(k_count, x.cols);
  std::vector<double> next_b(k_count);
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    step = std::min(step * 2.0, 1e6);
    double next_f = 0.0;
    bool accepted = false;
    while (step > 1e-20) {
      double lin = 0.0, quad = 0.0;
      for (std::size_t idx = 0; idx < next_w.data.size(); ++idx) {
        next_w.data[idx] = soft_threshold(model.weights.data[idx] - step * grad_w.data[idx],
                                          step * options.lambda);
        const double delta = next_w.data[idx] - model.weights.data[idx];
        lin += grad_w.data[idx] * delta;
        quad += delta * delta;
      }
      for (std::size_t k = 0; k < k_count; ++k) {
        next_b[k] = model.bias[k] - step * grad_b[k];
        const double delta = next_b[k] - model.bias[k];
        lin += grad_b[k] * delta;
        quad += delta * delta;
      }
      next_f = loss.value(next_w, next_b);
      if (next_f <= f + lin + quad / (2.0 * step)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const double next_obj = next_f + options.lambda * l1_norm(next_w);
    if (next_obj > obj) break;  // rounding floor reached; keep the better iterate
    std::swap(model.weights, next_w);
    std::swap(model.bias, next_b);
    model.n_iter = iter + 1;
    if (trace) trace->push_back(next_obj);
    const double decrease = obj - next_obj;
    obj = next_obj;
    if (decrease < options.tol) {
      model.converged = true;
      break;
    }
    f = loss.gradient(model.weights, model.bias, grad_w, grad_b);
  }
  return model;
}

Matrix predict_proba(const LinearModel& model, const Matrix& x_raw) {
  if (x_raw.cols != model.weights.cols) {
    throw Error(ErrorCode::SizeMismatch,
                "model expects " + std::to_string(model.weights.cols) + " features, got " +
                    std::to_string(x_raw.cols));
  }
  const Matrix x = model.standardizer.empty() ? x_raw : model.standardizer.apply(x_raw);
  Matrix out(x.rows, model.classes.size());
  std::vector<double> s;
  for (std::size_t i = 0; i < x.rows; ++i) {
    softmax_scores(model.weights, model.bias, x.row(i), s);
    softmax_inplace(s);
    std::copy(s.begin(), s.end(), out.data.begin() + i * out.cols);
  }
  return out;
}

std::vector<std::string> predict(const LinearModel& model, const Matrix& x) {
  const Matrix p = predict_proba(model, x);
  std::vector<std::string> out;
  out.reserve(p.rows);
  for (std::size_t i = 0; i < p.rows; ++i) {
    const auto r = p.row(i);
    out.push_back(model.classes[static_cast<std::size_t>(
        std::max_element(r.begin(), r.end()) - r.begin())]);
  }
  return out;
}

nlohmann::json to_json(const LinearModel& m) {
  nlohmann::json j;
  j["classes"] = m.classes;
  j["n_features"] = m.weights.cols;
  j["weights"] = m.weights.data;
  j["bias"] = m.bias;
  j["lambda"] = m.lambda;
  j["seed"] = m.seed;
  j["n_iter"] = m.n_iter;
  j["converged"] = m.converged;
  j["standardizer"] = {{"means", m.standardizer.means}, {"scales", m.standardizer.scales}};
  return j;
}

LinearModel model_from_json(const nlohmann::json& j) {
  LinearModel m;
  m.classes = j.at("classes").get<std::vector<std::string>>();
  const auto cols = j.at("n_features").get<std::size_t>();
  m.weights = Matrix(m.classes.size(), cols, j.at("weights").get<std::vector<double>>());
  m.bias = j.at("bias").get<std::vector<double>>();
  m.lambda = j.at("lambda").get<double>();
  m.seed = j.at("seed").get<unsigned long long>();
  m.n_iter = j.at("n_iter").get<std::size_t>();
  m.converged = j.value("converged", false);
  m.standardizer.means = j.at("standardizer").at("means").get<std::vector<double>>();
  m.standardizer.scales = j.at("standardizer").at("scales").get<std::vector<double>>();
  return m;
}

}  // namespace topohead::clf

namespace topohead::clf {

FeatureVector pair_difference(const FeatureVector& f1, const FeatureVector& f2) {
  const bool same_order =
      f1.names == f2.names || (f1.names && f2.names && *f1.names == *f2.names);
  if (!same_order || f1.values.size() != f2.values.size()) {
    throw Error(ErrorCode::SizeMismatch, "pair_difference needs a shared column ordering");
  }
  FeatureVector out{f1.names, std::vector<double>(f1.values.size())};
  for (std::size_t k = 0; k < f1.values.size(); ++k) {
    out.values[k] = std::abs(f1.values[k] - f2.values[k]);
  }
  return out;
}

}  // namespace topohead::clf
