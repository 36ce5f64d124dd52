#pragma once

// Exact k-nearest-neighbour search over fixed-length feature vectors.
// The linear scan is the reference; the k-d tree must return the same
// neighbours in the same order. Ordering is (distance, tie_key).

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace egofuture {

struct Neighbor {
  std::size_t index = 0;  // position in the index's insertion order
  double distance = 0.0;  // Euclidean
  std::uint64_t tie_key = 0;
};

enum class KnnMethod { kLinearScan, kKdTree };

class FeatureIndex {
 public:
  FeatureIndex();
  /// `features` holds one feature per column.
  FeatureIndex(Eigen::MatrixXd features, std::vector<std::uint64_t> tie_keys, bool build_tree = true);
  FeatureIndex(FeatureIndex&&) noexcept;
  FeatureIndex& operator=(FeatureIndex&&) noexcept;
  ~FeatureIndex();

  std::size_t size() const { return static_cast<std::size_t>(features_.cols()); }
  Eigen::Index dimension() const { return features_.rows(); }
  bool has_tree() const { return tree_ != nullptr; }

  std::vector<Neighbor> query(const Eigen::VectorXd& q, std::size_t k, KnnMethod method) const;
  std::vector<Neighbor> linear_scan(const Eigen::VectorXd& q, std::size_t k) const;
  std::vector<Neighbor> kd_tree(const Eigen::VectorXd& q, std::size_t k) const;

 private:
  struct Tree;

  double squared_distance(const Eigen::VectorXd& q, std::size_t column) const;

  Eigen::MatrixXd features_;
  std::vector<std::uint64_t> keys_;
  std::unique_ptr<Tree> tree_;
};

}  // namespace egofuture
