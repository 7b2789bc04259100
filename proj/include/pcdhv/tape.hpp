#pragma once

#include <functional>
#include <vector>

#include "pcdhv/tensor.hpp"

namespace pcdhv {

// Reverse-mode tape. Nodes are appended in evaluation order, so the record is
// topologically sorted by construction; backward() walks it once in reverse.
class Tape {
  public:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated on demand, same dims as value
        std::vector<int> inputs;
        // accumulates into the grads of this node's inputs
        std::function<void(Tape&, int)> backward;
    };

    int leaf(Tensor value) { return emit(std::move(value), {}, nullptr); }

    int emit(Tensor value, std::vector<int> inputs, std::function<void(Tape&, int)> backward) {
        nodes_.push_back(Node{std::move(value), Tensor{}, std::move(inputs), std::move(backward)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    const Tensor& value(int id) const { return nodes_[id].value; }
    Tensor& value(int id) { return nodes_[id].value; }

    Tensor& grad(int id) {
        Node& n = nodes_[id];
        if (n.grad.dims.empty()) n.grad = Tensor::zeros(n.value.dims);
        return n.grad;
    }

    bool has_grad(int id) const { return !nodes_[id].grad.dims.empty(); }

    size_t node_count() const { return nodes_.size(); }

    // Seeds d(root)/d(root) = 1 and propagates to every node the root depends on.
    void backward(int root) {
        if (value(root).size() != 1) throw ShapeError("backward root must be scalar");
        std::vector<char> needed(nodes_.size(), 0);
        needed[root] = 1;
        for (int id = root; id >= 0; --id) {
            if (!needed[id]) continue;
            for (int in : nodes_[id].inputs) needed[in] = 1;
        }
        grad(root).data[0] = Real(1);
        for (int id = root; id >= 0; --id) {
            if (!needed[id] || !nodes_[id].backward) continue;
            if (!has_grad(id)) grad(id);  // untouched grad is all-zero
            nodes_[id].backward(*this, id);
        }
    }

  private:
    std::vector<Node> nodes_;
};

}  // namespace pcdhv
