#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "structalign/corpus.hpp"
#include "structalign/plm.hpp"

namespace structalign {

// log p(residue a at position i | sequence with position i masked), with the
// probability normalized over the 20-residue alphabet only.
double masked_log_prob(const ModelBundle& bundle, const std::vector<int>& sequence, int position,
                       int residue);

// exp of the mean single-position masked negative log-likelihood; one
// forward pass per position.
double pseudo_perplexity(const ModelBundle& bundle, const std::vector<int>& sequence);

// Same computation with an arbitrary per-position log-prob source (for
// hand-set probability tests).
double pseudo_perplexity_from(const std::function<double(int)>& logprob_of_position, int length);

struct Substitution {
    int position = 0;        // 0-based
    int residue = 0;         // residue id
};

// log p(mut) - log p(wt) with the position masked; multi-substitution
// variants sum the per-position scores.
double zero_shot_score(const ModelBundle& bundle, const std::vector<int>& wild_type,
                       const std::vector<Substitution>& variant);

// Spearman rank correlation with average ranks for ties. Errors when either
// argument has zero rank variance.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// CSV of one residue embedding per row: id, index, symbol, ss, D_a floats.
void export_embeddings(const ModelBundle& bundle, const std::vector<ProteinRecord>& corpus,
                       const std::filesystem::path& out_path);

// Parses variant notation "A12G" or "12G", multi-substitutions joined by
// '+'; positions in the text are 1-based.
std::vector<Substitution> parse_variant(const std::string& text, const std::vector<int>& wild_type);

}  // namespace structalign
