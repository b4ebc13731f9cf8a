#pragma once

#include <vector>

#include "qosgp/gp.hpp"

namespace qosgp {

struct CartParams {
  int min_leaf = 5;
  int max_depth = 30;
  // A split must reduce the sum of squared errors by at least this fraction
  // of the training-set size (sklearn convention for weighted impurity decrease).
  double min_impurity_decrease = 0.0;

  void validate() const;
};

struct TreeNode {
  int split_dim = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean target of the node's samples
  int count = 0;

  bool is_leaf() const { return split_dim < 0; }
};

/// CART regression tree grown greedily by variance reduction. Nodes are
/// stored in preorder; node 0 is the root.
class RegressionTree {
 public:
  RegressionTree(std::vector<TreeNode> nodes, int input_dim, CartParams params);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int input_dim() const { return input_dim_; }
  const CartParams& params() const { return params_; }
  int depth() const;
  int leaf_count() const;

  // Goes left when x[dim] <= threshold.
  double predict(const Eigen::Ref<const Vector>& x) const;
  Vector predict_many(const PointSet& X) const;

 private:
  std::vector<TreeNode> nodes_;
  int input_dim_;
  CartParams params_;
};

RegressionTree cart_fit(const Dataset& dataset, const CartParams& params = {});

}  // namespace qosgp
