#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "structalign/optim.hpp"
#include "structalign/tape.hpp"
#include "structalign/tensor.hpp"

namespace structalign {

struct PlmConfig {
    int vocab = 22;        // 20 residues + [mask] + pad
    int d_model = 64;      // D_a
    int n_layers = 4;
    int n_heads = 4;
    int max_len = 64;
    int proj_dim = 32;     // D, shared projection width
    int d_g = 16;          // D_g, structure-embedding width
    int codebook_k = 20;   // K, structure vocabulary

    void validate() const;
    bool operator==(const PlmConfig&) const = default;
};

// pLM parameters plus both heads, the dual projections and the similarity
// log-scale, stored as named tensors in a fixed order. Names are prefixed
// "backbone." or "heads." which also defines the two optimizer groups.
struct ModelBundle {
    PlmConfig config;
    std::vector<std::pair<std::string, Tensor>> params;
    bool frozen = false;

    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;
    double scale_s() const;   // exp of heads.log_s

    bool all_finite() const;
};

ModelBundle init_model(const PlmConfig& config, std::uint64_t seed);

// Two groups exactly: backbone and heads.
std::vector<ParamGroup> param_groups(ModelBundle& bundle, double peak_lr_backbone,
                                     double peak_lr_heads, double weight_decay);

// Builds the forward graph for one bundle on one tape. Parameter leaves are
// created once and shared by every subsequent call, so gradients accumulate
// across all records of a batch.
class PlmGraph {
public:
    PlmGraph(Tape& tape, const ModelBundle& bundle, bool with_grad);

    Tape::Var encode(const std::vector<int>& ids);           // L x D_a
    Tape::Var mlm_logits(Tape::Var hidden);                  // L x vocab
    Tape::Var struct_logits(Tape::Var hidden);               // L x K
    Tape::Var project_a(Tape::Var hidden);                   // L x D, unit rows
    Tape::Var project_g(const Tensor& gnn_embedding);        // L x D, unit rows
    Tape::Var scale_var();                                   // scalar s = exp(log_s)

    const ModelBundle& bundle() const { return bundle_; }
    Tape& tape() { return tape_; }

    // After tape.backward(): gradient per parameter (zeros if untouched).
    std::map<std::string, Tensor> collect_grads() const;

private:
    Tape::Var pvar(const std::string& name) const;
    Tape::Var linear(Tape::Var x, const std::string& w, const std::string& b);

    Tape& tape_;
    const ModelBundle& bundle_;
    std::vector<std::pair<std::string, Tape::Var>> pvars_;
    bool with_grad_;
};

// Value-level wrappers (fresh throwaway tape, no gradients).
Tensor encode_values(const ModelBundle& bundle, const std::vector<int>& ids);
Tensor mlm_logits_values(const ModelBundle& bundle, const std::vector<int>& ids);
Tensor struct_logits_values(const ModelBundle& bundle, const std::vector<int>& ids);
// which = 'a' projects hidden states, 'g' projects structure embeddings.
Tensor project_values(const ModelBundle& bundle, const Tensor& input, char which);

struct Checkpoint {
    ModelBundle bundle;
    AdamState opt_state;       // empty when saved outside training
    std::int64_t step = 0;
    int epoch = 0;
    std::uint64_t run_seed = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace structalign
