#pragma once

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "structalign/corpus.hpp"
#include "structalign/tensor.hpp"

namespace structalign {

// Surrogate for the frozen structure encoder: invariant local-geometry
// features passed through a fixed seeded random projection. The "alt"
// variant stands in for a second frozen teacher in the embedding ablation.
enum class EmbedVariant : std::uint8_t { Geom = 0, GeomAlt = 1 };

struct EmbedConfig {
    int k_neighbors = 4;
    int d_g = 16;
    std::uint64_t proj_seed = 0xe5b1d0f4u;
    EmbedVariant variant = EmbedVariant::Geom;
};

struct GeneratorConfig {
    int n_proteins = 64;
    int len_min = 24;
    int len_max = 48;
    double helix_fraction = 0.35;
    double strand_fraction = 0.30;        // remainder is coil
    double seq_structure_coupling = 0.8;  // 0 = independent, 1 = disjoint subsets
    double noise_fraction = 0.0;          // fraction of records to corrupt
    double coord_noise_sigma = 2.0;       // Å, used when corrupting
    EmbedConfig embed;
    std::uint64_t seed = 0;

    void validate() const;
};

// Synthetic protein-like records: ideal-helix / ideal-strand / coil-walk
// segments, residues drawn from segment-conditional distributions, surrogate
// embeddings, SS labels and quality metadata. Records flagged by
// noise_fraction are corrupted so that curate_reference excludes them.
std::vector<ProteinRecord> generate(const GeneratorConfig& config);

// Rotation/translation-invariant per-residue embedding of local geometry.
Tensor surrogate_gnn_embed(const Tensor& coords, const EmbedConfig& config);

// Gaussian coordinate noise, embeddings recomputed from the noisy coords,
// quality metadata raised past the curation thresholds. Records must not
// carry structure tokens yet; tokenization happens after corruption so
// tokens always reflect the stored coordinates.
ProteinRecord corrupt(const ProteinRecord& record, double coord_noise_sigma, std::uint64_t seed,
                      const EmbedConfig& embed);

// Unordered pairs (i, j), i < j, with |i - j| > min_separation and Cα
// distance <= threshold.
std::set<std::pair<int, int>> contacts(const Tensor& coords, double threshold = 8.0,
                                       int min_separation = 6);

// Ideal-geometry builders (exposed for tests).
Tensor ideal_helix(int length);
Tensor ideal_strand(int length);

// Segment-conditional residue distribution p(residue | ss, coupling).
std::vector<double> residue_distribution(SsLabel ss, double coupling);

}  // namespace structalign
