#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "forum/core/errors.hpp"
#include "forum/core/problem.hpp"
#include "forum/core/rng.hpp"
#include "forum/core/types.hpp"

namespace forum {

// Desk-scale multi-objective data hyper-cleaning on generated data.
//
// m Gaussian-cluster classification datasets are generated per seed; a
// stated fraction of each training set's labels is corrupted (replaced by
// a uniformly random different class). The upper-level variables are one
// weight logit per training sample, squashed through a sigmoid; the
// lower-level variable is a shared multinomial-logistic model:
//
//   f(a, W)  = sum_i (1/N_i) sum_j sigmoid(a_ij) ce(W; x_ij, y_ij)
//              + ridge ||W||^2
//   F_i(W)   = mean cross-entropy of W on dataset i's clean validation set.
//
// The ridge term makes f strongly convex in W with modulus 2 * ridge, and
// every gradient and Hessian-vector product is analytic.
struct HypercleanSpec {
  Index datasets = 2;      // m
  Index classes = 3;
  Index feature_dim = 10;
  Index train_size = 200;  // N_i, per dataset
  Index val_size = 100;
  Index test_size = 200;
  double corruption_rate = 0.5;
  double cluster_separation = 3.0;  // minimum pairwise distance of class means
  double ridge = 1e-2;
  std::uint64_t seed = 0;

  void validate() const {
    if (datasets < 1) throw ConfigError("hyperclean: datasets must be >= 1");
    if (classes < 2) throw ConfigError("hyperclean: classes must be >= 2");
    if (feature_dim < 1) throw ConfigError("hyperclean: feature_dim must be >= 1");
    if (train_size < 1 || val_size < 1 || test_size < 1)
      throw ConfigError("hyperclean: split sizes must be >= 1");
    if (corruption_rate < 0.0 || corruption_rate >= 1.0)
      throw ConfigError("hyperclean: corruption_rate must lie in [0, 1)");
    if (!(cluster_separation > 0.0))
      throw ConfigError("hyperclean: cluster_separation must be > 0");
    if (!(ridge > 0.0)) throw ConfigError("hyperclean: ridge must be > 0");
  }
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Split {
  Matrix x;                // rows are samples
  std::vector<int> label;
};

struct ClusterDataset {
  Split train;
  Split val;
  Split test;
  std::vector<int> clean_label;       // train labels before corruption
  std::vector<std::uint8_t> corrupted;
};

}  // namespace detail

class HypercleanProblem final : public ProblemOracle {
 public:
  explicit HypercleanProblem(const HypercleanSpec& spec) : spec_(spec) {
    spec_.validate();
    generate();
  }

  Dims dims() const override {
    return {spec_.datasets * spec_.train_size,
            spec_.classes * spec_.feature_dim, spec_.datasets};
  }
  std::string name() const override { return "hyperclean"; }

  double ul_value(Index i, const DecisionPoint& z) const override {
    const auto& split = data_[i].val;
    double loss = 0.0;
    for (Index j = 0; j < split.x.rows(); ++j)
      loss += cross_entropy(z.omega, split.x.row(j), split.label[j]);
    return loss / static_cast<double>(split.x.rows());
  }

  Vector ul_grad(Index i, const DecisionPoint& z) const override {
    const Dims d = dims();
    const auto& split = data_[i].val;
    Vector g = Vector::Zero(d.n + d.p);
    const double inv = 1.0 / static_cast<double>(split.x.rows());
    for (Index j = 0; j < split.x.rows(); ++j)
      add_ce_grad(g.tail(d.p), z.omega, split.x.row(j), split.label[j], inv);
    return g;
  }

  double ll_value(const DecisionPoint& z) const override {
    double loss = spec_.ridge * z.omega.squaredNorm();
    const double inv = 1.0 / static_cast<double>(spec_.train_size);
    for (Index i = 0; i < spec_.datasets; ++i) {
      const auto& split = data_[i].train;
      for (Index j = 0; j < spec_.train_size; ++j) {
        const double w = detail::sigmoid(z.alpha[alpha_index(i, j)]);
        loss += inv * w * cross_entropy(z.omega, split.x.row(j), split.label[j]);
      }
    }
    return loss;
  }

  Vector ll_grad(const DecisionPoint& z) const override {
    const Dims d = dims();
    Vector g = Vector::Zero(d.n + d.p);
    auto g_omega = g.tail(d.p);
    g_omega = 2.0 * spec_.ridge * z.omega;
    const double inv = 1.0 / static_cast<double>(spec_.train_size);
    for (Index i = 0; i < spec_.datasets; ++i) {
      const auto& split = data_[i].train;
      for (Index j = 0; j < spec_.train_size; ++j) {
        const Index a = alpha_index(i, j);
        const double s = detail::sigmoid(z.alpha[a]);
        const double ce = cross_entropy(z.omega, split.x.row(j), split.label[j]);
        g[a] = inv * s * (1.0 - s) * ce;
        add_ce_grad(g_omega, z.omega, split.x.row(j), split.label[j], inv * s);
      }
    }
    return g;
  }

  bool has_ll_hvp() const override { return true; }

  Vector ll_hvp_ww(const DecisionPoint& z, const Vector& v) const override {
    const Dims d = dims();
    Vector out = 2.0 * spec_.ridge * v;
    const double inv = 1.0 / static_cast<double>(spec_.train_size);
    for (Index i = 0; i < spec_.datasets; ++i) {
      const auto& split = data_[i].train;
      for (Index j = 0; j < spec_.train_size; ++j) {
        const double s = detail::sigmoid(z.alpha[alpha_index(i, j)]);
        add_ce_hvp(out, z.omega, v, split.x.row(j), inv * s);
      }
    }
    (void)d;
    return out;
  }

  Vector ll_hvp_aw(const DecisionPoint& z, const Vector& v) const override {
    const Dims d = dims();
    Vector out(d.n);
    const double inv = 1.0 / static_cast<double>(spec_.train_size);
    for (Index i = 0; i < spec_.datasets; ++i) {
      const auto& split = data_[i].train;
      for (Index j = 0; j < spec_.train_size; ++j) {
        const Index a = alpha_index(i, j);
        const double s = detail::sigmoid(z.alpha[a]);
        out[a] = inv * s * (1.0 - s) *
                 ce_grad_dot(z.omega, v, split.x.row(j), split.label[j]);
      }
    }
    return out;
  }

  AssumptionConstants assumption_constants() const override {
    AssumptionConstants c;
    c.strong_convexity = 2.0 * spec_.ridge;
    return c;
  }

  const HypercleanSpec& spec() const { return spec_; }
  const std::vector<detail::ClusterDataset>& data() const { return data_; }
  Index alpha_index(Index dataset, Index sample) const {
    return dataset * spec_.train_size + sample;
  }

  // Accuracy of the model on a split (argmax prediction).
  double accuracy(const Vector& omega, Index dataset, const detail::Split& split) const {
    (void)dataset;
    Index hits = 0;
    for (Index j = 0; j < split.x.rows(); ++j)
      if (predict(omega, split.x.row(j)) == split.label[j]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(split.x.rows());
  }

  // Macro-averaged F1 on a split.
  double macro_f1(const Vector& omega, const detail::Split& split) const {
    const Index C = spec_.classes;
    std::vector<double> tp(C, 0), fp(C, 0), fn(C, 0);
    for (Index j = 0; j < split.x.rows(); ++j) {
      const int pred = predict(omega, split.x.row(j));
      const int truth = split.label[j];
      if (pred == truth) {
        tp[truth] += 1;
      } else {
        fp[pred] += 1;
        fn[truth] += 1;
      }
    }
    double f1 = 0.0;
    for (Index c = 0; c < C; ++c) {
      const double denom = 2.0 * tp[c] + fp[c] + fn[c];
      f1 += denom > 0 ? 2.0 * tp[c] / denom : 0.0;
    }
    return f1 / static_cast<double>(C);
  }

  int predict(const Vector& omega, const Eigen::RowVectorXd& x) const {
    const Vector logits = logits_of(omega, x);
    Index best = 0;
    logits.maxCoeff(&best);
    return static_cast<int>(best);
  }

 private:
  Vector logits_of(const Vector& omega, const Eigen::RowVectorXd& x) const {
    const Index C = spec_.classes;
    const Index D = spec_.feature_dim;
    Vector logits(C);
    for (Index c = 0; c < C; ++c)
      logits[c] = omega.segment(c * D, D).dot(x.transpose());
    return logits;
  }

  double cross_entropy(const Vector& omega, const Eigen::RowVectorXd& x,
                       int label) const {
    const Vector logits = logits_of(omega, x);
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    return lse - logits[label];
  }

  // Accumulates scale * (softmax - onehot(label)) x' into g (size p).
  template <typename Block>
  void add_ce_grad(Block g, const Vector& omega, const Eigen::RowVectorXd& x,
                   int label, double scale) const {
    const Index C = spec_.classes;
    const Index D = spec_.feature_dim;
    Vector logits = logits_of(omega, x);
    const double mx = logits.maxCoeff();
    Vector s = (logits.array() - mx).exp();
    s /= s.sum();
    s[label] -= 1.0;
    for (Index c = 0; c < C; ++c)
      g.segment(c * D, D) += scale * s[c] * x.transpose();
  }

  // <(softmax - onehot) x', V> for V given flat; the alpha-cross HVP needs it.
  double ce_grad_dot(const Vector& omega, const Vector& v,
                     const Eigen::RowVectorXd& x, int label) const {
    const Index C = spec_.classes;
    const Index D = spec_.feature_dim;
    Vector logits = logits_of(omega, x);
    const double mx = logits.maxCoeff();
    Vector s = (logits.array() - mx).exp();
    s /= s.sum();
    s[label] -= 1.0;
    double acc = 0.0;
    for (Index c = 0; c < C; ++c) acc += s[c] * v.segment(c * D, D).dot(x.transpose());
    return acc;
  }

  // Per-sample Gauss-Newton block (diag(s) - s s') (x x'), applied to V.
  void add_ce_hvp(Vector& out, const Vector& omega, const Vector& v,
                  const Eigen::RowVectorXd& x, double scale) const {
    const Index C = spec_.classes;
    const Index D = spec_.feature_dim;
    Vector logits = logits_of(omega, x);
    const double mx = logits.maxCoeff();
    Vector s = (logits.array() - mx).exp();
    s /= s.sum();
    Vector u(C);  // u_c = <V_c, x>
    for (Index c = 0; c < C; ++c) u[c] = v.segment(c * D, D).dot(x.transpose());
    const double su = s.dot(u);
    for (Index c = 0; c < C; ++c) {
      const double coef = scale * s[c] * (u[c] - su);
      out.segment(c * D, D) += coef * x.transpose();
    }
  }

  void generate() {
    Rng rng(spec_.seed);
    data_.resize(spec_.datasets);
    for (Index i = 0; i < spec_.datasets; ++i) {
      // Class means: seeded normals rescaled so the minimum pairwise
      // distance equals cluster_separation; unit-variance noise around them.
      Matrix means(spec_.classes, spec_.feature_dim);
      for (Index c = 0; c < spec_.classes; ++c)
        means.row(c) = rng.normal_vector(spec_.feature_dim).transpose();
      double min_dist = std::numeric_limits<double>::infinity();
      for (Index a = 0; a < spec_.classes; ++a)
        for (Index b = a + 1; b < spec_.classes; ++b)
          min_dist = std::min(min_dist, (means.row(a) - means.row(b)).norm());
      means *= spec_.cluster_separation / min_dist;

      auto draw_split = [&](Index count) {
        detail::Split split;
        split.x.resize(count, spec_.feature_dim);
        split.label.resize(count);
        for (Index j = 0; j < count; ++j) {
          const int c = static_cast<int>(rng.uniform_int(0, spec_.classes - 1));
          split.label[j] = c;
          split.x.row(j) =
              means.row(c) + rng.normal_vector(spec_.feature_dim).transpose();
        }
        return split;
      };

      auto& ds = data_[i];
      ds.train = draw_split(spec_.train_size);
      ds.val = draw_split(spec_.val_size);
      ds.test = draw_split(spec_.test_size);
      ds.clean_label = ds.train.label;
      ds.corrupted.assign(spec_.train_size, 0);

      // Corrupt a fixed-count random subset of the training labels.
      const Index n_corrupt = static_cast<Index>(
          std::floor(spec_.corruption_rate * static_cast<double>(spec_.train_size)));
      std::vector<Index> order(spec_.train_size);
      std::iota(order.begin(), order.end(), Index{0});
      for (Index j = 0; j < n_corrupt; ++j) {
        const Index pick = rng.uniform_int(j, spec_.train_size - 1);
        std::swap(order[j], order[pick]);
      }
      for (Index j = 0; j < n_corrupt; ++j) {
        const Index idx = order[j];
        const int old_label = ds.train.label[idx];
        int new_label =
            static_cast<int>(rng.uniform_int(0, spec_.classes - 2));
        if (new_label >= old_label) ++new_label;
        ds.train.label[idx] = new_label;
        ds.corrupted[idx] = 1;
      }
    }
  }

  HypercleanSpec spec_;
  std::vector<detail::ClusterDataset> data_;
};

// Aggregates a finished run: mean learned weight over clean and corrupted
// training samples, plus per-dataset validation/test accuracy and test
// macro-F1 for the final model.
struct HypercleanReport {
  double mean_weight_clean = 0.0;
  double mean_weight_corrupt = 0.0;
  std::vector<double> val_accuracy;
  std::vector<double> test_accuracy;
  std::vector<double> test_macro_f1;

  double mean_test_accuracy() const {
    return std::accumulate(test_accuracy.begin(), test_accuracy.end(), 0.0) /
           static_cast<double>(test_accuracy.size());
  }
};

inline HypercleanReport hyperclean_report(const HypercleanProblem& problem,
                                          const DecisionPoint& final_z) {
  const HypercleanSpec& spec = problem.spec();
  HypercleanReport report;
  double sum_clean = 0.0, sum_corrupt = 0.0;
  Index n_clean = 0, n_corrupt = 0;
  for (Index i = 0; i < spec.datasets; ++i) {
    const auto& ds = problem.data()[i];
    for (Index j = 0; j < spec.train_size; ++j) {
      const double w = detail::sigmoid(final_z.alpha[problem.alpha_index(i, j)]);
      if (ds.corrupted[j]) {
        sum_corrupt += w;
        ++n_corrupt;
      } else {
        sum_clean += w;
        ++n_clean;
      }
    }
    report.val_accuracy.push_back(problem.accuracy(final_z.omega, i, ds.val));
    report.test_accuracy.push_back(problem.accuracy(final_z.omega, i, ds.test));
    report.test_macro_f1.push_back(problem.macro_f1(final_z.omega, ds.test));
  }
  report.mean_weight_clean = n_clean > 0 ? sum_clean / n_clean : 0.0;
  report.mean_weight_corrupt = n_corrupt > 0 ? sum_corrupt / n_corrupt : 0.0;
  return report;
}

// Dataset dump, one row per sample:
// feature_0..feature_{d-1}, label, dataset_id, is_corrupted, split.
inline std::string hyperclean_dataset_csv(const HypercleanProblem& problem) {
  const HypercleanSpec& spec = problem.spec();
  std::ostringstream out;
  for (Index f = 0; f < spec.feature_dim; ++f) out << "feature_" << f << ",";
  out << "label,dataset_id,is_corrupted,split\n";
  auto dump_split = [&](const detail::Split& split, Index dataset,
                        const char* tag, const std::vector<std::uint8_t>* mask) {
    for (Index j = 0; j < split.x.rows(); ++j) {
      for (Index f = 0; f < spec.feature_dim; ++f) out << split.x(j, f) << ",";
      out << split.label[j] << "," << dataset << ","
          << (mask && (*mask)[j] ? 1 : 0) << "," << tag << "\n";
    }
  };
  for (Index i = 0; i < spec.datasets; ++i) {
    const auto& ds = problem.data()[i];
    dump_split(ds.train, i, "train", &ds.corrupted);
    dump_split(ds.val, i, "val", nullptr);
    dump_split(ds.test, i, "test", nullptr);
  }
  return out.str();
}

}  // namespace forum
