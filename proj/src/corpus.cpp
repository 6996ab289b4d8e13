#include "structalign/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "structalign/rng.hpp"

namespace structalign {

using nlohmann::json;

int residue_id(char symbol) {
    for (int i = 0; i < kNumResidues; ++i)
        if (kAlphabet[i] == symbol) return i;
    throw std::invalid_argument(std::string("unknown residue symbol '") + symbol + "'");
}

char residue_symbol(int id) {
    if (id < 0 || id >= kNumResidues) throw std::out_of_range("residue id out of range");
    return kAlphabet[id];
}

char ss_char(SsLabel s) {
    switch (s) {
        case SsLabel::Helix: return 'H';
        case SsLabel::Strand: return 'E';
        case SsLabel::Coil: return 'C';
    }
    throw std::logic_error("bad ss label");
}

SsLabel ss_from_char(char c) {
    switch (c) {
        case 'H': return SsLabel::Helix;
        case 'E': return SsLabel::Strand;
        case 'C': return SsLabel::Coil;
    }
    throw std::invalid_argument(std::string("unknown ss symbol '") + c + "'");
}

void ProteinRecord::validate() const {
    const int L = length();
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("record '" + id + "': " + what);
    };
    if (L < 2) fail("length must be >= 2");
    for (int s : sequence)
        if (s < 0 || s >= kNumResidues) fail("sequence symbol out of alphabet");
    if (coords.rank() != 2 || coords.shape[0] != L || coords.shape[1] != 3)
        fail("coords must be Lx3");
    if (has_embedding() && (gnn_embedding.rank() != 2 || gnn_embedding.shape[0] != L))
        fail("gnn_embedding row count != L");
    if (has_tokens()) {
        if (static_cast<int>(structure_tokens.size()) != L) fail("tokens length != L");
        for (int t : structure_tokens)
            if (t < 0) fail("negative structure token");
    }
    if (has_ss() && static_cast<int>(ss_labels.size()) != L) fail("ss length != L");
    if (!(resolution > 0.0)) fail("resolution must be > 0");
    if (!coords.all_finite()) fail("non-finite coords");
}

namespace {

Tensor matrix_from_json(const json& j, int expect_cols, const std::string& what) {
    if (!j.is_array()) throw std::runtime_error(what + " must be an array");
    const int rows = static_cast<int>(j.size());
    int cols = expect_cols;
    if (rows > 0) {
        if (!j[0].is_array()) throw std::runtime_error(what + " rows must be arrays");
        cols = static_cast<int>(j[0].size());
        if (expect_cols > 0 && cols != expect_cols)
            throw std::runtime_error(what + " has wrong row width");
    }
    Tensor t({rows, cols});
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols)
            throw std::runtime_error(what + " has ragged rows");
        for (int c = 0; c < cols; ++c) t.at(r, c) = j[r][c].get<double>();
    }
    return t;
}

json matrix_to_json(const Tensor& t) {
    json rows = json::array();
    for (int r = 0; r < t.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < t.cols(); ++c) row.push_back(t.at(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

ProteinRecord record_from_json(const json& j) {
    ProteinRecord rec;
    rec.id = j.at("id").get<std::string>();
    const std::string seq = j.at("seq").get<std::string>();
    rec.sequence.reserve(seq.size());
    for (char c : seq) rec.sequence.push_back(residue_id(c));
    rec.coords = matrix_from_json(j.at("coords"), 3, "coords");
    if (j.contains("gnn_emb")) rec.gnn_embedding = matrix_from_json(j.at("gnn_emb"), -1, "gnn_emb");
    if (j.contains("tokens")) rec.structure_tokens = j.at("tokens").get<std::vector<int>>();
    rec.resolution = j.at("resolution").get<double>();
    rec.r_free = j.at("r_free").get<double>();
    if (j.contains("ss")) {
        const std::string ss = j.at("ss").get<std::string>();
        rec.ss_labels.reserve(ss.size());
        for (char c : ss) rec.ss_labels.push_back(ss_from_char(c));
    }
    return rec;
}

json record_to_json(const ProteinRecord& rec) {
    json j;
    j["id"] = rec.id;
    std::string seq;
    for (int s : rec.sequence) seq += residue_symbol(s);
    j["seq"] = seq;
    j["coords"] = matrix_to_json(rec.coords);
    if (rec.has_embedding()) j["gnn_emb"] = matrix_to_json(rec.gnn_embedding);
    if (rec.has_tokens()) j["tokens"] = rec.structure_tokens;
    j["resolution"] = rec.resolution;
    j["r_free"] = rec.r_free;
    if (rec.has_ss()) {
        std::string ss;
        for (SsLabel s : rec.ss_labels) ss += ss_char(s);
        j["ss"] = ss;
    }
    return j;
}

}  // namespace

std::vector<ProteinRecord> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file " + path.string());
    std::vector<ProteinRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error("corpus " + path.string() + " line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
        ProteinRecord rec;
        try {
            rec = record_from_json(j);
        } catch (const std::exception& e) {
            throw std::runtime_error("corpus " + path.string() + " line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
        rec.validate();
        records.push_back(std::move(rec));
    }
    return records;
}

void save_corpus(const std::vector<ProteinRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write corpus file " + path.string());
    for (const auto& rec : records) out << record_to_json(rec).dump() << "\n";
}

std::vector<ProteinRecord> curate_reference(const std::vector<ProteinRecord>& corpus,
                                            double res_max, double rfree_max) {
    std::vector<ProteinRecord> kept;
    for (const auto& rec : corpus)
        if (rec.resolution < res_max && rec.r_free < rfree_max) kept.push_back(rec);
    if (kept.empty() && !corpus.empty())
        std::cerr << "warning: reference curation kept 0 of " << corpus.size() << " records\n";
    return kept;
}

std::pair<std::vector<int>, MaskPlan> mask_sequence(const ProteinRecord& record, double mask_rate,
                                                    std::uint64_t seed) {
    if (!(mask_rate > 0.0 && mask_rate < 1.0))
        throw std::invalid_argument("mask_sequence: mask_rate must be in (0,1)");
    const int L = record.length();
    const int n_mask = std::max<int>(1, static_cast<int>(std::llround(mask_rate * L)));

    Rng rng(seed);
    std::vector<int> chosen = rng.sample_without_replacement(L, n_mask);
    std::sort(chosen.begin(), chosen.end());

    MaskPlan plan;
    plan.positions = chosen;
    plan.actions.reserve(chosen.size());
    std::vector<int> masked = record.sequence;
    for (int pos : chosen) {
        double u = rng.uniform();
        if (u < 0.8) {
            masked[pos] = kMaskId;
            plan.actions.push_back(MaskAction::Mask);
        } else if (u < 0.9) {
            masked[pos] = rng.uniform_int(0, kNumResidues - 1);
            plan.actions.push_back(MaskAction::Random);
        } else {
            plan.actions.push_back(MaskAction::Keep);
        }
    }
    return {std::move(masked), std::move(plan)};
}

ProteinRecord truncate_record(const ProteinRecord& record, int max_len, std::uint64_t seed) {
    const int L = record.length();
    if (L <= max_len) return record;
    Rng rng(seed);
    const int start = rng.uniform_int(0, L - max_len);

    ProteinRecord out;
    out.id = record.id;
    out.resolution = record.resolution;
    out.r_free = record.r_free;
    out.sequence.assign(record.sequence.begin() + start, record.sequence.begin() + start + max_len);
    out.coords = Tensor({max_len, 3});
    for (int r = 0; r < max_len; ++r)
        for (int c = 0; c < 3; ++c) out.coords.at(r, c) = record.coords.at(start + r, c);
    if (record.has_embedding()) {
        const int dg = record.gnn_embedding.cols();
        out.gnn_embedding = Tensor({max_len, dg});
        for (int r = 0; r < max_len; ++r)
            for (int c = 0; c < dg; ++c)
                out.gnn_embedding.at(r, c) = record.gnn_embedding.at(start + r, c);
    }
    if (record.has_tokens())
        out.structure_tokens.assign(record.structure_tokens.begin() + start,
                                    record.structure_tokens.begin() + start + max_len);
    if (record.has_ss())
        out.ss_labels.assign(record.ss_labels.begin() + start,
                             record.ss_labels.begin() + start + max_len);
    return out;
}

std::vector<Batch> make_batches(const std::vector<ProteinRecord>& corpus, int max_records_per_batch,
                                int max_len, std::uint64_t seed) {
    if (max_len < 2) throw std::invalid_argument("make_batches: max_len must be >= 2");
    if (max_records_per_batch < 1)
        throw std::invalid_argument("make_batches: max_records_per_batch must be >= 1");
    Rng rng(derive_seed(seed, "shuffle"));
    std::vector<int> order = rng.permutation(static_cast<int>(corpus.size()));

    std::vector<Batch> batches;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i % max_records_per_batch == 0) batches.emplace_back();
        Batch& b = batches.back();
        BatchEntry entry;
        entry.record =
            truncate_record(corpus[order[i]], max_len, derive_seed(seed, "trunc", order[i]));
        b.total_residues += entry.record.length();
        b.entries.push_back(std::move(entry));
    }
    return batches;
}

void mask_batch(Batch& batch, double mask_rate, std::uint64_t seed) {
    for (std::size_t i = 0; i < batch.entries.size(); ++i) {
        auto& entry = batch.entries[i];
        auto [masked, plan] = mask_sequence(entry.record, mask_rate, derive_seed(seed, "mask", i));
        entry.masked_ids = std::move(masked);
        entry.plan = std::move(plan);
    }
}

}  // namespace structalign
