#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "structalign/corpus.hpp"
#include "structalign/tensor.hpp"

namespace structalign {

inline constexpr int kDescriptorDim = 5;

struct Codebook {
    int k = 0;
    int dim = kDescriptorDim;
    Tensor centroids;           // k x dim
    std::uint64_t fit_seed = 0;

    void validate() const;
};

// Invariant descriptor of residue i relative to its spatially nearest
// residue j* with |i - j*| >= 2: distance, sign of the sequence offset, and
// the three angles among the chain segment through i, the segment through
// j*, and the connecting vector. Boundary residues use one-sided segments.
Tensor descriptor(const Tensor& coords, int i);

// Descriptors for all residues of one chain, L x dim.
Tensor descriptor_rows(const Tensor& coords);

// Seeded k-means++ / Lloyd; empty clusters are reseeded to the farthest
// point. Requires at least K descriptors. objective_trace, when given,
// receives the mean squared quantization error after every assignment pass.
Codebook fit_codebook(const Tensor& descriptors, int k, std::uint64_t seed, int max_iters = 100,
                      std::vector<double>* objective_trace = nullptr);

// Nearest-centroid assignment, ties to the lower centroid id.
std::vector<int> assign_descriptors(const Tensor& descriptors, const Codebook& codebook);
std::vector<int> tokenize(const Tensor& coords, const Codebook& codebook);

// Quantization objective (mean squared distance to assigned centroid).
double quantization_error(const Tensor& descriptors, const Codebook& codebook);

void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

// Fits a codebook on every residue descriptor of the corpus.
Codebook fit_codebook_on_corpus(const std::vector<ProteinRecord>& corpus, int k,
                                std::uint64_t seed);

// Fills structure_tokens for every record (overwrites existing tokens).
void tokenize_corpus(std::vector<ProteinRecord>& corpus, const Codebook& codebook);

}  // namespace structalign
