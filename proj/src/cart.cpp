#include "qosgp/cart.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "qosgp/errors.hpp"

namespace qosgp {

void CartParams::validate() const {
  require(min_leaf >= 1, "cart min_leaf must be >= 1");
  require(max_depth >= 1, "cart max_depth must be >= 1");
  require(min_impurity_decrease >= 0.0, "cart min_impurity_decrease must be >= 0");
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, int input_dim, CartParams params)
    : nodes_(std::move(nodes)), input_dim_(input_dim), params_(params) {
  require(!nodes_.empty(), "regression tree has no nodes");
}

int RegressionTree::depth() const {
  // Preorder storage: recurse from the root.
  auto rec = [this](auto&& self, int i) -> int {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(self(self, n.left), self(self, n.right));
  };
  return rec(rec, 0);
}

int RegressionTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(),
                                        [](const TreeNode& n) { return n.is_leaf(); }));
}

double RegressionTree::predict(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != input_dim_) {
    std::ostringstream os;
    os << "cart predict: input dimension " << x.size() << " does not match tree dimension "
       << input_dim_;
    throw InvalidInput(os.str());
  }
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    i = x[n.split_dim] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

Vector RegressionTree::predict_many(const PointSet& X) const {
  Vector out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out[r] = predict(X.row(r).transpose());
  return out;
}

namespace {

struct Split {
  int dim = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class Builder {
 public:
  Builder(const Dataset& data, const CartParams& params) : data_(data), params_(params) {}

  std::vector<TreeNode> build() {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(data_.size()));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    grow(all, 0);
    return std::move(nodes_);
  }

 private:
  // Sorting by (feature, target) makes every accumulation order independent of
  // the original row order, so permuted inputs grow identical trees.
  void sort_by(std::vector<Eigen::Index>& idx, int dim) const {
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
      const double xa = data_.X(a, dim), xb = data_.X(b, dim);
      if (xa != xb) return xa < xb;
      return data_.y[a] < data_.y[b];
    });
  }

  Split best_split(std::vector<Eigen::Index>& idx, double total_sse) const {
    const std::size_t n = idx.size();
    const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
    Split best;
    for (int d = 0; d < data_.dim(); ++d) {
      sort_by(idx, d);
      std::vector<double> prefix_sum(n + 1, 0.0), prefix_sq(n + 1, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = data_.y[idx[i]];
        prefix_sum[i + 1] = prefix_sum[i] + v;
        prefix_sq[i + 1] = prefix_sq[i] + v * v;
      }
      for (std::size_t left = min_leaf; left + min_leaf <= n; ++left) {
        const double lo = data_.X(idx[left - 1], d);
        const double hi = data_.X(idx[left], d);
        if (!(lo < hi)) continue;
        const double ln = static_cast<double>(left);
        const double rn = static_cast<double>(n - left);
        const double ls = prefix_sum[left], rs = prefix_sum[n] - ls;
        const double lsq = prefix_sq[left], rsq = prefix_sq[n] - lsq;
        const double child_sse =
            std::max(lsq - ls * ls / ln, 0.0) + std::max(rsq - rs * rs / rn, 0.0);
        const double gain = total_sse - child_sse;
        // Strict comparison keeps the lowest dimension, then the smallest threshold.
        if (best.dim < 0 || gain > best.gain) {
          double mid = 0.5 * (lo + hi);
          if (!(mid < hi)) mid = lo;
          best = Split{d, mid, gain};
        }
      }
    }
    return best;
  }

  int grow(std::vector<Eigen::Index>& idx, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    // Node statistics in a row-order independent order.
    sort_by(idx, 0);
    double sum = 0.0;
    for (auto i : idx) sum += data_.y[i];
    const double mean = sum / static_cast<double>(idx.size());
    double sse = 0.0;
    for (auto i : idx) sse += (data_.y[i] - mean) * (data_.y[i] - mean);

    TreeNode node;
    node.value = mean;
    node.count = static_cast<int>(idx.size());

    const bool can_split = depth < params_.max_depth &&
                           idx.size() >= 2 * static_cast<std::size_t>(params_.min_leaf) &&
                           sse > 0.0;
    Split split;
    if (can_split) split = best_split(idx, sse);
    const double floor = params_.min_impurity_decrease * static_cast<double>(data_.size());
    if (split.dim < 0 || (floor > 0.0 && split.gain < floor)) {
      nodes_[static_cast<std::size_t>(id)] = node;
      return id;
    }

    std::vector<Eigen::Index> left, right;
    for (auto i : idx) (data_.X(i, split.dim) <= split.threshold ? left : right).push_back(i);
    node.split_dim = split.dim;
    node.threshold = split.threshold;
    nodes_[static_cast<std::size_t>(id)] = node;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const Dataset& data_;
  const CartParams& params_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

RegressionTree cart_fit(const Dataset& dataset, const CartParams& params) {
  params.validate();
  dataset.validate();
  Builder builder(dataset, params);
  return RegressionTree(builder.build(), dataset.dim(), params);
}

}  // namespace qosgp
