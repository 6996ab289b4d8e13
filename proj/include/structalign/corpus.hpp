#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "structalign/tensor.hpp"

namespace structalign {

// Residue alphabet, in canonical order. Token ids 0..19 are residues,
// 20 is [mask], 21 is pad; vocabulary size is 22.
inline constexpr char kAlphabet[] = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr int kNumResidues = 20;
inline constexpr int kMaskId = 20;
inline constexpr int kPadId = 21;
inline constexpr int kVocabSize = 22;

int residue_id(char symbol);          // throws on unknown symbol
char residue_symbol(int id);

enum class SsLabel : std::uint8_t { Helix = 0, Strand = 1, Coil = 2 };
char ss_char(SsLabel s);
SsLabel ss_from_char(char c);

struct ProteinRecord {
    std::string id;
    std::vector<int> sequence;              // residue ids, length L
    Tensor coords;                          // L x 3, Cα positions in Å
    Tensor gnn_embedding;                   // L x D_g, empty if absent
    std::vector<int> structure_tokens;      // length L, empty if absent
    double resolution = 0.0;                // Å
    double r_free = 0.0;
    std::vector<SsLabel> ss_labels;         // empty if absent

    int length() const { return static_cast<int>(sequence.size()); }
    bool has_embedding() const { return gnn_embedding.size() > 0; }
    bool has_tokens() const { return !structure_tokens.empty(); }
    bool has_ss() const { return !ss_labels.empty(); }

    void validate() const;                  // throws naming the record id
};

std::vector<ProteinRecord> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::vector<ProteinRecord>& records, const std::filesystem::path& path);

// Keeps records with resolution < res_max and r_free < rfree_max (both
// strict), preserving order. Warns on stderr when the result is empty.
std::vector<ProteinRecord> curate_reference(const std::vector<ProteinRecord>& corpus,
                                            double res_max = 2.0, double rfree_max = 0.20);

enum class MaskAction : std::uint8_t { Mask = 0, Random = 1, Keep = 2 };

struct MaskPlan {
    std::vector<int> positions;             // sorted, non-empty
    std::vector<MaskAction> actions;        // parallel to positions
};

// BERT-style masking: |M| = max(1, round(mask_rate * L)) positions; 80% of
// them become [mask], 10% a random residue, 10% stay unchanged. Targets are
// always the original residues at the chosen positions.
std::pair<std::vector<int>, MaskPlan> mask_sequence(const ProteinRecord& record, double mask_rate,
                                                    std::uint64_t seed);

struct BatchEntry {
    ProteinRecord record;                   // possibly truncated
    std::vector<int> masked_ids;            // ã, filled by mask_batch
    MaskPlan plan;
};

struct Batch {
    std::vector<BatchEntry> entries;
    int total_residues = 0;                 // N = sum of lengths

    bool masked() const {
        return !entries.empty() && !entries.front().plan.positions.empty();
    }
};

// Seeded shuffle of the corpus, contiguous-window truncation of records
// longer than max_len (all per-residue fields sliced identically), grouping
// into batches of at most max_records_per_batch.
std::vector<Batch> make_batches(const std::vector<ProteinRecord>& corpus, int max_records_per_batch,
                                int max_len, std::uint64_t seed);

// Fills masked_ids and plans for every entry of the batch.
void mask_batch(Batch& batch, double mask_rate, std::uint64_t seed);

// Truncates one record to a contiguous window (exposed for tests).
ProteinRecord truncate_record(const ProteinRecord& record, int max_len, std::uint64_t seed);

}  // namespace structalign
