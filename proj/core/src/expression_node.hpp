#pragma once

#include <memory>
#include <vector>

namespace dferr::detail {

enum class Op { kConst, kVar, kAdd, kSub, kMul, kNeg, kSin, kCos, kExp, kSq, kSmoothStep, kCompose };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

// Variables index into the evaluation environment: the coordinates of the
// point at the root, the inner values inside a composition's outer tree.
struct Node {
  Op op = Op::kConst;
  double constant = 0.0;
  int index = 0;
  std::vector<NodePtr> children;
  NodePtr outer;
};

}  // namespace dferr::detail
