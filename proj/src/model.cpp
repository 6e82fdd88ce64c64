#include "drivetraits/features.hpp"
#include "drivetraits/models.hpp"

namespace drivetraits {

Eigen::VectorXd FittedModel::decision_score(
    const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (!is_classifier_kind(kind)) {
    throw UnsupportedKindError("decision_score is only defined for classifiers");
  }
  const Eigen::MatrixXd xs = standardizer.apply(x);
  if (kind == ModelKind::random_forest_clf) {
    Eigen::VectorXd score(xs.rows());
    for (Eigen::Index r = 0; r < xs.rows(); ++r) {
      double ones = 0;
      for (const Tree& t : forest.trees) ones += t.predict_row(xs.row(r));
      const double frac = ones / static_cast<double>(forest.trees.size());
      score[r] = 2.0 * frac - 1.0;
    }
    return score;
  }
  return (xs * beta).array() + intercept;
}

Eigen::VectorXd FittedModel::predict(
    const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  switch (kind) {
    case ModelKind::ridge:
    case ModelKind::lasso: {
      const Eigen::MatrixXd xs = standardizer.apply(x);
      return ((xs * beta).array() + intercept).matrix();
    }
    case ModelKind::random_forest_reg: {
      const Eigen::MatrixXd xs = standardizer.apply(x);
      Eigen::VectorXd out(xs.rows());
      for (Eigen::Index r = 0; r < xs.rows(); ++r) {
        double sum = 0;
        for (const Tree& t : forest.trees) sum += t.predict_row(xs.row(r));
        out[r] = sum / static_cast<double>(forest.trees.size());
      }
      return out;
    }
    case ModelKind::logistic_l2:
    case ModelKind::random_forest_clf: {
      const Eigen::VectorXd score = decision_score(x);
      return (score.array() > 0).cast<double>();
    }
    case ModelKind::linear_svm: {
      const Eigen::VectorXd score = decision_score(x);
      return (score.array() > 0).select(Eigen::VectorXd::Ones(score.size()),
                                        -Eigen::VectorXd::Ones(score.size()));
    }
  }
  throw UnsupportedKindError("unknown model kind");
}

Eigen::VectorXd FittedModel::predict_checked(const FeatureMatrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != feature_names.size()) {
    throw SchemaError("model expects " + std::to_string(feature_names.size()) +
                      " feature columns, got " + std::to_string(x.cols()));
  }
  for (std::size_t j = 0; j < feature_names.size(); ++j) {
    if (x.columns[j].canonical() != feature_names[j]) {
      throw SchemaError("feature column " + std::to_string(j) + " is '" +
                        x.columns[j].canonical() + "', model was trained on '" +
                        feature_names[j] + "'");
    }
  }
  return predict(x.values);
}

Eigen::VectorXd FittedModel::raw_coefficients() const {
  if (!is_linear_kind(kind)) {
    throw UnsupportedKindError("raw coefficients are only defined for linear models");
  }
  return beta.cwiseQuotient(standardizer.scale);
}

FittedModel fit_model(const ModelSpec& spec,
                      const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y) {
  switch (spec.kind) {
    case ModelKind::ridge: return ridge_fit(x, y, spec.reg);
    case ModelKind::lasso: return lasso_fit(x, y, spec.reg);
    case ModelKind::logistic_l2: return logistic_fit(x, y, spec.reg);
    case ModelKind::linear_svm: return svm_fit(x, y, spec.reg);
    case ModelKind::random_forest_reg:
      return forest_fit(x, y, spec.forest, false);
    case ModelKind::random_forest_clf:
      return forest_fit(x, y, spec.forest, true);
  }
  throw UnsupportedKindError("unknown model kind");
}

namespace {

nlohmann::ordered_json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::ordered_json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

}  // namespace

nlohmann::ordered_json FittedModel::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = std::string(model_kind_name(kind));
  j["reg"] = reg;
  j["intercept"] = intercept;
  j["standardizer"]["center"] = vector_to_json(standardizer.center);
  j["standardizer"]["scale"] = vector_to_json(standardizer.scale);
  j["feature_names"] = feature_names;
  if (is_linear_kind(kind)) {
    j["beta"] = vector_to_json(beta);
  } else {
    j["forest"]["n_trees"] = forest_options.n_trees;
    j["forest"]["max_depth"] = forest_options.max_depth;
    j["forest"]["bootstrap"] = forest_options.bootstrap;
    j["forest"]["seed"] = forest_options.seed;
    nlohmann::ordered_json trees = nlohmann::json::array();
    for (const Tree& t : forest.trees) {
      nlohmann::ordered_json nodes = nlohmann::json::array();
      for (const TreeNode& n : t.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
      }
      trees.push_back(nodes);
    }
    j["forest"]["trees"] = std::move(trees);
  }
  return j;
}

FittedModel FittedModel::from_json(const nlohmann::json& j) {
  FittedModel m;
  const auto kind = model_kind_from_name(j.at("kind").get<std::string>());
  if (!kind) throw SchemaError("unknown model kind in JSON");
  m.kind = *kind;
  m.reg = j.at("reg").get<double>();
  m.intercept = j.at("intercept").get<double>();
  m.standardizer.center = vector_from_json(j.at("standardizer").at("center"));
  m.standardizer.scale = vector_from_json(j.at("standardizer").at("scale"));
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  if (is_linear_kind(m.kind)) {
    m.beta = vector_from_json(j.at("beta"));
  } else {
    const auto& fj = j.at("forest");
    m.forest_options.n_trees = fj.at("n_trees").get<int>();
    m.forest_options.max_depth = fj.at("max_depth").get<int>();
    m.forest_options.bootstrap = fj.at("bootstrap").get<bool>();
    m.forest_options.seed = fj.at("seed").get<std::uint64_t>();
    m.forest.classification = m.kind == ModelKind::random_forest_clf;
    for (const auto& tj : fj.at("trees")) {
      Tree t;
      for (const auto& nj : tj) {
        TreeNode n;
        n.feature = nj.at(0).get<int>();
        n.threshold = nj.at(1).get<double>();
        n.left = nj.at(2).get<int>();
        n.right = nj.at(3).get<int>();
        n.value = nj.at(4).get<double>();
        t.nodes.push_back(n);
      }
      m.forest.trees.push_back(std::move(t));
    }
  }
  return m;
}

}  // namespace drivetraits
