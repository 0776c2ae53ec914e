#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace topohead::clf {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols, cols);
  }
};

inline constexpr double kScaleFloor = 1e-8;

struct Standardizer {
  std::vector<double> means;
  std::vector<double> scales;  // population std, floored at kScaleFloor

  bool empty() const noexcept { return means.empty(); }
  Matrix apply(const Matrix& x) const;
};

Standardizer fit_standardizer(const Matrix& x);

struct TrainOptions {
  double lambda = 1e-2;
  unsigned long long seed = 0;
  std::size_t max_iter = 5000;
  double tol = 1e-10;
};

struct LinearModel {
  std::vector<std::string> classes;  // sorted
  Matrix weights;                    // K x D
  std::vector<double> bias;          // K
  double lambda = 0.0;
  unsigned long long seed = 0;
  bool converged = false;
  std::size_t n_iter = 0;
  Standardizer standardizer;  // applied by predict when non-empty

  std::size_t zero_weight_count() const;
};

/// Mean multinomial cross-entropy and its gradient with respect to weights
/// and bias; no penalty term.
struct SoftmaxLoss {
  const Matrix& x;
  std::span<const std::size_t> y;
  std::size_t classes;

  double value(const Matrix& w, std::span<const double> b) const;
  double gradient(const Matrix& w, std::span<const double> b, Matrix& grad_w,
                  std::vector<double>& grad_b) const;
};

/// Mean softmax loss plus lambda * sum |w|, evaluated on already-standardized x.
double objective(const LinearModel& model, const Matrix& x,
                 std::span<const std::string> labels);

/// Full-batch proximal gradient with backtracking from zero weights. The
/// bias is unpenalized. When `trace` is given, it receives the objective
/// before the first step and after every accepted step.
LinearModel train_l1_logreg(const Matrix& x, std::span<const std::string> labels,
                            const TrainOptions& options,
                            std::vector<double>* trace = nullptr);

Matrix predict_proba(const LinearModel& model, const Matrix& x);
std::vector<std::string> predict(const LinearModel& model, const Matrix& x);

nlohmann::json to_json(const LinearModel& model);
LinearModel model_from_json(const nlohmann::json& j);

}  // namespace topohead::clf

#include "topohead/feature_table.hpp"

namespace topohead::clf {

/// |f1 - f2| element-wise; both vectors must share one column ordering.
FeatureVector pair_difference(const FeatureVector& f1, const FeatureVector& f2);

}  // namespace topohead::clf
