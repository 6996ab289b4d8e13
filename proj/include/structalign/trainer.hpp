#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "structalign/losses.hpp"
#include "structalign/selection.hpp"
#include "structalign/synthgen.hpp"
#include "structalign/tokenizer.hpp"

namespace structalign {

struct TrainConfig {
    int epochs = 20;
    int warmup_epochs = 2;
    double peak_lr_backbone = 1e-4;
    double peak_lr_heads = 1e-3;
    double rho = 0.8;
    double gamma_latent = 0.5;
    double gamma_physical = 0.5;
    StrategyKind strategy = StrategyKind::Excess;
    bool selection_enabled = true;
    std::uint64_t seed = 0;
    int batch_records = 16;
    int max_len = 64;
    double mask_rate = 0.15;
    double val_fraction = 0.10;
    AdamConfig adam;                 // betas (0.9, 0.95), eps 1e-8
    double weight_decay = 0.01;
    double clip_norm = 0.0;          // 0 disables clipping
    PlmConfig model;
    bool save_checkpoints = true;
    bool audit_selection = false;
    int stop_after_epoch = 0;        // testing hook; 0 runs to completion

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double val_mlm = 0, val_a2g = 0, val_g2a = 0, val_latent = 0, val_physical = 0,
           val_overall = 0;
};

struct TrainResult {
    ModelBundle bundle;
    std::vector<EpochStats> curves;
    std::int64_t steps = 0;
    std::filesystem::path run_dir;
};

// Fills in surrogate embeddings / structure tokens for records that lack
// them, and drops nothing.
void prepare_corpus(std::vector<ProteinRecord>& records, const EmbedConfig& embed,
                    const Codebook& codebook);

// Seeded validation split; val gets round(val_fraction * n) records.
std::pair<std::vector<ProteinRecord>, std::vector<ProteinRecord>> split_corpus(
    const std::vector<ProteinRecord>& corpus, double val_fraction, std::uint64_t seed);

// Main alignment loop. Writes config.json, logs/metrics.jsonl, curves.csv
// and checkpoints/ under run_dir. reference may be null unless the excess
// strategy is selected. resume continues a previous run bit-exactly.
TrainResult align(ModelBundle init, const std::vector<ProteinRecord>& corpus,
                  const ModelBundle* reference, const TrainConfig& config,
                  const std::filesystem::path& run_dir, const Checkpoint* resume = nullptr);

// Trains the half-size reference model on the curated reference corpus with
// the full (unselected) objective and returns it frozen.
ModelBundle train_reference(const std::vector<ProteinRecord>& reference_corpus,
                            const TrainConfig& config, const std::filesystem::path& run_dir);

PlmConfig reference_model_config(const PlmConfig& main);

// --- ablation grid ---

struct GridCell {
    std::string name;
    std::optional<double> gamma_latent;
    std::optional<double> gamma_physical;
    std::optional<double> rho;
    std::optional<StrategyKind> strategy;
    std::optional<int> codebook_k;
    std::optional<EmbedVariant> embed_variant;
};

struct GridSpec {
    std::vector<GridCell> cells;
};

GridSpec load_grid_spec(const std::filesystem::path& path);

struct AblationRow {
    GridCell cell;
    EpochStats final_val;
    double contact_p_at_l5 = 0;
    double ss_accuracy = 0;
    double pseudo_perplexity = 0;
};

// One aligned model per cell with a shared seed; rows carry final validation
// losses and the probe metrics. Writes ablation.csv in out_dir.
std::vector<AblationRow> run_ablation_grid(const std::vector<ProteinRecord>& corpus,
                                           const GridSpec& spec, const TrainConfig& base,
                                           const EmbedConfig& embed_base,
                                           const std::filesystem::path& out_dir);

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

}  // namespace structalign
