#include "splatprep/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "splatprep/error.hpp"

namespace splatprep {
namespace {

constexpr std::uint32_t kLeafSize = 12;

struct HeapEntry {
  double d2;
  std::size_t index;
};

// Max-heap on (d2, index): the front is the current worst neighbor.
bool heap_less(const HeapEntry& a, const HeapEntry& b) {
  return neighbor_less(a.d2, a.index, b.d2, b.index);
}

struct KnnVisitor {
  std::size_t k;
  std::vector<HeapEntry> heap;

  double bound() const {
    return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.front().d2;
  }
  void offer(double d2, std::size_t index) {
    if (heap.size() < k) {
      heap.push_back({d2, index});
      std::push_heap(heap.begin(), heap.end(), heap_less);
    } else if (neighbor_less(d2, index, heap.front().d2, heap.front().index)) {
      std::pop_heap(heap.begin(), heap.end(), heap_less);
      heap.back() = {d2, index};
      std::push_heap(heap.begin(), heap.end(), heap_less);
    }
  }
};

struct NearestVisitor {
  double cap2;
  bool found = false;
  HeapEntry best{0.0, 0};

  double bound() const { return found ? best.d2 : cap2; }
  void offer(double d2, std::size_t index) {
    if (d2 > cap2) return;
    if (!found || neighbor_less(d2, index, best.d2, best.index)) {
      best = {d2, index};
      found = true;
    }
  }
};

}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud) {
  positions_.reserve(cloud.size());
  for (const Point& p : cloud) positions_.push_back(p.position);
  order_.resize(positions_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!positions_.empty()) root_ = build(0, static_cast<std::uint32_t>(order_.size()));
}

SpatialIndex::SpatialIndex(std::vector<Vec3> positions) : positions_(std::move(positions)) {
  order_.resize(positions_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!positions_.empty()) root_ = build(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = positions_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(positions_[order_[i]]);
    hi = hi.cwiseMax(positions_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as one leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = positions_[a][axis];
                     const double cb = positions_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = positions_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& n = nodes_[id];
  n.left = left;
  n.right = right;
  n.split = split;
  n.axis = static_cast<std::uint8_t>(axis);
  return id;
}

template <class Visitor>
void SpatialIndex::search(std::int32_t node_id, const Vec3& query, Visitor& visitor) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      visitor.offer(squared_distance(query, positions_[idx]), idx);
    }
    return;
  }
  // Left holds coordinates <= split, right holds >= split.
  const double diff = query[node.axis] - node.split;
  const std::int32_t near = diff < 0 ? node.left : node.right;
  const std::int32_t far = diff < 0 ? node.right : node.left;
  search(near, query, visitor);
  if (diff * diff <= visitor.bound()) search(far, query, visitor);
}

std::vector<Neighbor> SpatialIndex::knn(const Vec3& query, std::size_t k) const {
  if (empty()) throw UsageError("knn on an empty spatial index");
  if (k == 0) throw UsageError("knn requires k >= 1");
  KnnVisitor visitor{std::min(k, size()), {}};
  visitor.heap.reserve(visitor.k);
  search(root_, query, visitor);
  std::sort_heap(visitor.heap.begin(), visitor.heap.end(), heap_less);
  std::vector<Neighbor> out;
  out.reserve(visitor.heap.size());
  for (const HeapEntry& e : visitor.heap) out.push_back({e.index, std::sqrt(e.d2)});
  return out;
}

bool SpatialIndex::nearest_within(const Vec3& query, double max_distance, Neighbor& out) const {
  if (empty() || !(max_distance >= 0.0)) return false;
  NearestVisitor visitor{max_distance * max_distance};
  search(root_, query, visitor);
  if (!visitor.found) return false;
  out = {visitor.best.index, std::sqrt(visitor.best.d2)};
  return true;
}

}  // namespace splatprep
