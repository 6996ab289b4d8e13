#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "structalign/tensor.hpp"

namespace structalign {

// Reverse-mode autodiff over a dynamically built graph. Nodes are created in
// topological order; backward() walks the node list in reverse. Single
// threaded and fully deterministic: accumulation order is fixed by node
// creation order.
class Tape {
public:
    using Var = int;

    Var leaf(Tensor value, bool requires_grad = false);

    const Tensor& val(Var v) const { return nodes_[v].value; }
    Tensor& grad(Var v) { return nodes_[v].grad; }
    const Tensor& grad(Var v) const { return nodes_[v].grad; }
    bool requires_grad(Var v) const { return nodes_[v].requires_grad; }
    std::size_t num_nodes() const { return nodes_.size(); }

    // --- ops ---
    Var matmul(Var a, Var b);                       // (m x k)(k x n) -> (m x n)
    Var transpose(Var a);
    Var add(Var a, Var b);                          // same shape
    Var add_rowvec(Var a, Var bias);                // (m x n) + (n)
    Var mul_elem(Var a, Var b);
    Var scale(Var a, double c);
    Var scale_var(Var a, Var s);                    // scalar s times tensor a
    Var exp_elem(Var a);
    Var gelu(Var a);
    Var layernorm(Var x, Var gain, Var bias, double eps = 1e-5);
    Var attention(Var q, Var k, Var v, int n_heads); // all (L x d_model)
    Var gather_rows(Var a, std::vector<int> rows);
    Var concat_rows(const std::vector<Var>& parts);
    Var l2_normalize_rows(Var a);
    // Per-row cross entropy of softmax(logits) against target ids -> (m).
    Var softmax_ce_rows(Var logits, std::vector<int> targets);
    Var mean_all(Var a);                            // scalar
    // Mean over entries where mask != 0; errors on all-zero mask.
    Var masked_mean(Var a, std::vector<std::uint8_t> mask);
    // c0 + sum_i coeff_i * scalar_var_i
    Var weighted_sum_scalars(const std::vector<std::pair<double, Var>>& terms, double c0 = 0.0);

    void backward(Var root);

private:
    struct Node {
        Tensor value;
        Tensor grad;                      // allocated lazily in backward()
        bool requires_grad = false;
        std::function<void(Tape&)> back; // empty for leaves
    };

    Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
    void ensure_grad(Var v);
    void accum(Var v, const Tensor& g);   // grad(v) += g (allocates if needed)

    std::vector<Node> nodes_;
};

// Shared math used by both the tape ops and value-level loss helpers.
// Computes per-row CE losses; if probs != nullptr also stores row softmax.
std::vector<double> softmax_ce_rows_values(const Tensor& logits, const std::vector<int>& targets,
                                           Tensor* probs = nullptr);

}  // namespace structalign
