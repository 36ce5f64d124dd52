#include "egofuture/knn_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "egofuture/error.hpp"

namespace egofuture {

namespace {

constexpr std::size_t kLeafSize = 12;

struct Candidate {
  double d2;
  std::uint64_t key;
  std::size_t index;
};

// Max-heap by (d2, key): the top is the current worst neighbour.
struct WorseFirst {
  bool operator()(const Candidate& a, const Candidate& b) const {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    return a.key < b.key;
  }
};

bool precedes(const Candidate& a, const Candidate& b) { return WorseFirst{}(a, b); }

std::vector<Neighbor> finish(std::vector<Candidate> found) {
  std::sort(found.begin(), found.end(), precedes);
  std::vector<Neighbor> out;
  out.reserve(found.size());
  for (const auto& c : found) out.push_back({c.index, std::sqrt(c.d2), c.key});
  return out;
}

}  // namespace

struct FeatureIndex::Tree {
  struct Node {
    int split_dim = -1;  // -1 for leaves
    double split_value = 0.0;
    int left = -1;
    int right = -1;
    std::size_t begin = 0;
    std::size_t end = 0;
  };
  std::vector<Node> nodes;
  std::vector<std::size_t> order;
};

FeatureIndex::FeatureIndex(Eigen::MatrixXd features, std::vector<std::uint64_t> tie_keys, bool build_tree)
    : features_(std::move(features)), keys_(std::move(tie_keys)) {
  if (keys_.size() != static_cast<std::size_t>(features_.cols())) {
    throw Error(ErrorCode::kDimensionMismatch, "one tie key per feature column is required");
  }
  if (!build_tree || features_.cols() == 0) return;

  tree_ = std::make_unique<Tree>();
  tree_->order.resize(size());
  std::iota(tree_->order.begin(), tree_->order.end(), std::size_t{0});

  auto build = [&](auto&& self, std::size_t begin, std::size_t end) -> int {
    const int id = static_cast<int>(tree_->nodes.size());
    tree_->nodes.push_back({});
    tree_->nodes[id].begin = begin;
    tree_->nodes[id].end = end;
    if (end - begin <= kLeafSize) return id;

    int best_dim = -1;
    double best_spread = 0.0;
    for (Eigen::Index d = 0; d < features_.rows(); ++d) {
      double lo = features_(d, tree_->order[begin]);
      double hi = lo;
      for (std::size_t i = begin + 1; i < end; ++i) {
        const double v = features_(d, tree_->order[i]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = static_cast<int>(d);
      }
    }
    if (best_dim < 0) return id;  // all points identical

    const std::size_t mid = begin + (end - begin) / 2;
    auto first = tree_->order.begin();
    std::nth_element(first + begin, first + mid, first + end, [&](std::size_t a, std::size_t b) {
      const double va = features_(best_dim, a);
      const double vb = features_(best_dim, b);
      return va != vb ? va < vb : a < b;
    });
    const double split = features_(best_dim, tree_->order[mid]);
    // Left holds values <= split is not guaranteed by nth_element ties, so
    // partition explicitly: left < split, right >= split.
    auto pivot = std::partition(first + begin, first + end,
                                [&](std::size_t i) { return features_(best_dim, i) < split; });
    std::size_t cut = static_cast<std::size_t>(pivot - first);
    if (cut == begin || cut == end) return id;

    const int left = self(self, begin, cut);
    const int right = self(self, cut, end);
    auto& node = tree_->nodes[id];
    node.split_dim = best_dim;
    node.split_value = split;
    node.left = left;
    node.right = right;
    return id;
  };
  build(build, 0, size());
}

FeatureIndex::FeatureIndex(FeatureIndex&&) noexcept = default;
FeatureIndex& FeatureIndex::operator=(FeatureIndex&&) noexcept = default;
FeatureIndex::FeatureIndex() = default;
FeatureIndex::~FeatureIndex() = default;

double FeatureIndex::squared_distance(const Eigen::VectorXd& q, std::size_t column) const {
  const double* p = features_.col(static_cast<Eigen::Index>(column)).data();
  double sum = 0.0;
  for (Eigen::Index d = 0; d < q.size(); ++d) {
    const double diff = q(d) - p[d];
    sum += diff * diff;
  }
  return sum;
}

std::vector<Neighbor> FeatureIndex::query(const Eigen::VectorXd& q, std::size_t k, KnnMethod method) const {
  if (method == KnnMethod::kKdTree && tree_) return kd_tree(q, k);
  return linear_scan(q, k);
}

std::vector<Neighbor> FeatureIndex::linear_scan(const Eigen::VectorXd& q, std::size_t k) const {
  if (q.size() != features_.rows()) throw Error(ErrorCode::kDimensionMismatch, "query length does not match features");
  std::priority_queue<Candidate, std::vector<Candidate>, WorseFirst> heap;
  for (std::size_t i = 0; i < size(); ++i) {
    const Candidate c{squared_distance(q, i), keys_[i], i};
    if (heap.size() < k) {
      heap.push(c);
    } else if (k > 0 && precedes(c, heap.top())) {
      heap.pop();
      heap.push(c);
    }
  }
  std::vector<Candidate> found;
  while (!heap.empty()) {
    found.push_back(heap.top());
    heap.pop();
  }
  return finish(std::move(found));
}

std::vector<Neighbor> FeatureIndex::kd_tree(const Eigen::VectorXd& q, std::size_t k) const {
  if (!tree_) return linear_scan(q, k);
  if (q.size() != features_.rows()) throw Error(ErrorCode::kDimensionMismatch, "query length does not match features");
  std::priority_queue<Candidate, std::vector<Candidate>, WorseFirst> heap;
  if (k == 0) return {};

  // A subtree is skipped only when its lower bound strictly exceeds the
  // current worst distance, so equal-distance ties are still visited.
  auto search = [&](auto&& self, int id) -> void {
    const auto& node = tree_->nodes[id];
    if (node.split_dim < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t col = tree_->order[i];
        const Candidate c{squared_distance(q, col), keys_[col], col};
        if (heap.size() < k) {
          heap.push(c);
        } else if (precedes(c, heap.top())) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const double diff = q(node.split_dim) - node.split_value;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    if (heap.size() < k || diff * diff <= heap.top().d2) self(self, far);
  };
  search(search, 0);

  std::vector<Candidate> found;
  while (!heap.empty()) {
    found.push_back(heap.top());
    heap.pop();
  }
  return finish(std::move(found));
}

}  // namespace egofuture
