#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "structalign/corpus.hpp"
#include "structalign/plm.hpp"

namespace structalign {

struct ProbeConfig {
    int epochs = 20;
    int batch_size = 128;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double weight_decay = 0.01;
    int hidden = 128;
    int max_train_pairs = 8192;      // contact head training pairs (balanced subsample)
    int max_train_residues = 20000;  // ss head training residues
    int length_cutoff = 512;         // sequences above this are skipped

    void validate() const;
};

struct ProbeReport {
    std::string task;
    std::string metric;
    double value = 0.0;
    std::vector<double> per_protein;
    std::uint64_t seed = 0;
};

// Frozen-backbone contact probe: an MLP on symmetrized pairwise residue
// features, trained on train_records, reported as mean P@L/5 over
// test_records. Proteins with no eligible pair are skipped with a warning.
ProbeReport probe_contact(const ModelBundle& bundle, const std::vector<ProteinRecord>& train_records,
                          const std::vector<ProteinRecord>& test_records, const ProbeConfig& config,
                          std::uint64_t seed);

// Frozen-backbone secondary-structure probe: per-residue 3-class head,
// reported as mean accuracy over test residues.
ProbeReport probe_ss(const ModelBundle& bundle, const std::vector<ProteinRecord>& train_records,
                     const std::vector<ProteinRecord>& test_records, const ProbeConfig& config,
                     std::uint64_t seed);

// Precision of the top floor(L/5) (min 1) scored eligible pairs. scores and
// labels are parallel over the eligible pairs of one protein.
double p_at_l5(const std::vector<double>& scores, const std::vector<std::uint8_t>& is_contact,
               int protein_length);

// Generic heads reused by the probes and by tests with synthetic features.
// Binary head returns scores; multiclass head returns predicted classes.
std::vector<double> train_binary_head_scores(const Tensor& train_x,
                                             const std::vector<std::uint8_t>& train_y,
                                             const Tensor& test_x, const ProbeConfig& config,
                                             std::uint64_t seed);
std::vector<int> train_multiclass_head_predict(const Tensor& train_x,
                                               const std::vector<int>& train_y, int n_classes,
                                               const Tensor& test_x, const ProbeConfig& config,
                                               std::uint64_t seed);

}  // namespace structalign
