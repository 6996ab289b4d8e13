#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "structalign/corpus.hpp"
#include "structalign/plm.hpp"
#include "structalign/tape.hpp"

namespace structalign {

// Flat residue indexing over a batch: index runs over record 0's residues,
// then record 1's, and so on.
struct ResidueIndexMap {
    std::vector<std::pair<int, int>> flat_to_pos;   // (record index, residue index)
    std::vector<int> record_offset;                 // flat index of each record's residue 0

    static ResidueIndexMap of(const Batch& batch);
    int total() const { return static_cast<int>(flat_to_pos.size()); }
};

// Per-residue values of the three structural loss families.
struct ResidueLossSet {
    std::vector<double> a2g;
    std::vector<double> g2a;
    std::vector<double> physical;
    ResidueIndexMap map;
};

struct LossWeights {
    double latent = 0.5;
    double physical = 0.5;

    void validate() const;
};

// Per-family selection masks over flat residue indices; an empty vector
// means "all residues".
struct SelectionMasks {
    std::vector<std::uint8_t> a2g;
    std::vector<std::uint8_t> g2a;
    std::vector<std::uint8_t> physical;
};

// Row-wise contrastive losses of a similarity matrix against its diagonal.
// a2g is row-wise (sequence residue vs all structure residues), g2a is
// column-wise; both are plain softmax cross entropies.
std::vector<double> a2g_losses(const Tensor& delta);
std::vector<double> g2a_losses(const Tensor& delta);

double latent_loss(double a2g_mean, double g2a_mean);

// One forward pass of a bundle over a masked batch, with every loss family
// available as both tape variables (for training) and plain values (for
// logging and selection). All three structural families are computed on the
// masked input's hidden states; MLM covers masked positions only.
class BatchGraph {
public:
    BatchGraph(Tape& tape, const ModelBundle& bundle, const Batch& batch, bool with_grad);

    Tape::Var hidden();                 // N x D_a
    Tape::Var delta();                  // N x N similarity matrix
    Tape::Var mlm_vec();                // per masked position CE
    Tape::Var mlm_mean();               // scalar
    Tape::Var a2g_vec();                // length N
    Tape::Var g2a_vec();                // length N
    Tape::Var physical_vec();           // length N

    // L_mlm + gamma_latent * latent + gamma_physical * physical, structural
    // terms averaged over their selection masks.
    Tape::Var overall(const LossWeights& weights, const SelectionMasks& masks);

    ResidueLossSet residue_losses();    // values of all three families
    const ResidueIndexMap& index_map() const { return map_; }
    PlmGraph& plm() { return plm_; }

private:
    Tape& tape_;
    const Batch& batch_;
    PlmGraph plm_;
    ResidueIndexMap map_;
    std::optional<Tape::Var> hidden_, delta_, mlm_vec_, mlm_mean_, a2g_, g2a_, physical_;
};

// Value-level operations (no gradients).
std::pair<double, std::vector<double>> mlm_loss(const ModelBundle& bundle, const Batch& batch);
Tensor similarity_matrix(const ModelBundle& bundle, const Batch& batch);
std::vector<double> physical_losses(const ModelBundle& bundle, const Batch& batch);
std::pair<double, ResidueLossSet> overall_loss(const ModelBundle& bundle, const Batch& batch,
                                               const LossWeights& weights,
                                               const SelectionMasks& masks);

}  // namespace structalign
