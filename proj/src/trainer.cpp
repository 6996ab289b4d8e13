#include "structalign/trainer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

#include "structalign/errors.hpp"
#include "structalign/probes.hpp"
#include "structalign/rng.hpp"
#include "structalign/scoring.hpp"

namespace structalign {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kLogScaleCap = 4.60517018598809137;   // ln(100)

double masked_mean_value(const std::vector<double>& values, const std::vector<std::uint8_t>& mask) {
    if (mask.empty()) {
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc / static_cast<double>(values.size());
    }
    double acc = 0.0;
    std::int64_t count = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (mask[i]) {
            acc += values[i];
            ++count;
        }
    return acc / static_cast<double>(count);
}

int mask_count(const std::vector<std::uint8_t>& mask, int n) {
    if (mask.empty()) return n;
    int c = 0;
    for (auto m : mask) c += m != 0;
    return c;
}

void clip_gradients(std::map<std::string, Tensor>& grads, double clip_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads)
        for (double x : g.data) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm <= clip_norm) return;
    const double s = clip_norm / norm;
    for (auto& [name, g] : grads)
        for (double& x : g.data) x *= s;
}

json config_json(const TrainConfig& c) {
    json j;
    j["epochs"] = c.epochs;
    j["warmup_epochs"] = c.warmup_epochs;
    j["peak_lr_backbone"] = c.peak_lr_backbone;
    j["peak_lr_heads"] = c.peak_lr_heads;
    j["rho"] = c.rho;
    j["gamma_latent"] = c.gamma_latent;
    j["gamma_physical"] = c.gamma_physical;
    j["strategy"] = strategy_name(c.strategy);
    j["selection_enabled"] = c.selection_enabled;
    j["seed"] = c.seed;
    j["batch_records"] = c.batch_records;
    j["max_len"] = c.max_len;
    j["mask_rate"] = c.mask_rate;
    j["val_fraction"] = c.val_fraction;
    j["beta1"] = c.adam.beta1;
    j["beta2"] = c.adam.beta2;
    j["adam_eps"] = c.adam.eps;
    j["weight_decay"] = c.weight_decay;
    j["clip_norm"] = c.clip_norm;
    j["model"] = {{"vocab", c.model.vocab},       {"d_model", c.model.d_model},
                  {"n_layers", c.model.n_layers}, {"n_heads", c.model.n_heads},
                  {"max_len", c.model.max_len},   {"proj_dim", c.model.proj_dim},
                  {"d_g", c.model.d_g},           {"codebook_k", c.model.codebook_k}};
    return j;
}

struct ValAccumulator {
    double mlm_sum = 0;
    std::int64_t mlm_count = 0;
    double a2g_sum = 0, g2a_sum = 0, physical_sum = 0;
    std::int64_t residue_count = 0;
};

EpochStats validate_epoch(const ModelBundle& bundle, const std::vector<ProteinRecord>& val,
                          const TrainConfig& cfg, int epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    if (val.empty()) return stats;
    auto batches = make_batches(val, cfg.batch_records, cfg.max_len, derive_seed(cfg.seed, "val-batches"));
    ValAccumulator acc;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
        Batch& batch = batches[bi];
        mask_batch(batch, cfg.mask_rate,
                   derive_seed(cfg.seed, "val-mask", static_cast<std::uint64_t>(epoch) * 100000 + bi));
        Tape tape;
        BatchGraph g(tape, bundle, batch, false);
        const auto& mlm = tape.val(g.mlm_vec()).data;
        for (double v : mlm) acc.mlm_sum += v;
        acc.mlm_count += static_cast<std::int64_t>(mlm.size());
        ResidueLossSet set = g.residue_losses();
        for (double v : set.a2g) acc.a2g_sum += v;
        for (double v : set.g2a) acc.g2a_sum += v;
        for (double v : set.physical) acc.physical_sum += v;
        acc.residue_count += static_cast<std::int64_t>(set.a2g.size());
    }
    stats.val_mlm = acc.mlm_sum / static_cast<double>(acc.mlm_count);
    stats.val_a2g = acc.a2g_sum / static_cast<double>(acc.residue_count);
    stats.val_g2a = acc.g2a_sum / static_cast<double>(acc.residue_count);
    stats.val_physical = acc.physical_sum / static_cast<double>(acc.residue_count);
    stats.val_latent = latent_loss(stats.val_a2g, stats.val_g2a);
    stats.val_overall =
        stats.val_mlm + cfg.gamma_latent * stats.val_latent + cfg.gamma_physical * stats.val_physical;
    return stats;
}

void append_curve_row(const fs::path& path, const EpochStats& s, bool write_header) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw DataError("cannot write " + path.string());
    if (write_header)
        out << "epoch,val_mlm,val_a2g,val_g2a,val_latent,val_physical,val_overall\n";
    out.precision(17);
    out << s.epoch << "," << s.val_mlm << "," << s.val_a2g << "," << s.val_g2a << ","
        << s.val_latent << "," << s.val_physical << "," << s.val_overall << "\n";
}

}  // namespace

void TrainConfig::validate() const {
    if (!(warmup_epochs >= 1 && warmup_epochs < epochs))
        throw UsageError("train config: requires 1 <= warmup_epochs < epochs");
    if (!(peak_lr_backbone > 0 && peak_lr_heads > 0))
        throw UsageError("train config: learning rates must be positive");
    if (!(rho > 0 && rho <= 1)) throw UsageError("train config: rho must be in (0,1]");
    if (gamma_latent < 0 || gamma_physical < 0)
        throw UsageError("train config: gammas must be non-negative");
    if (batch_records < 1 || max_len < 2) throw UsageError("train config: bad batch settings");
    if (!(mask_rate > 0 && mask_rate < 1)) throw UsageError("train config: mask_rate in (0,1)");
    if (val_fraction < 0 || val_fraction >= 1)
        throw UsageError("train config: val_fraction must be in [0,1)");
    model.validate();
}

void prepare_corpus(std::vector<ProteinRecord>& records, const EmbedConfig& embed,
                    const Codebook& codebook) {
    for (auto& rec : records) {
        if (!rec.has_embedding()) rec.gnn_embedding = surrogate_gnn_embed(rec.coords, embed);
        if (!rec.has_tokens()) rec.structure_tokens = tokenize(rec.coords, codebook);
    }
}

std::pair<std::vector<ProteinRecord>, std::vector<ProteinRecord>> split_corpus(
    const std::vector<ProteinRecord>& corpus, double val_fraction, std::uint64_t seed) {
    const int n = static_cast<int>(corpus.size());
    const int n_val = static_cast<int>(std::llround(val_fraction * n));
    Rng rng(derive_seed(seed, "val-split"));
    auto order = rng.permutation(n);
    std::vector<ProteinRecord> train, val;
    for (int i = 0; i < n; ++i)
        (i < n_val ? val : train).push_back(corpus[order[i]]);
    return {std::move(train), std::move(val)};
}

PlmConfig reference_model_config(const PlmConfig& main) {
    PlmConfig ref = main;
    ref.n_layers = std::max(1, main.n_layers / 2);
    ref.d_model = std::max(main.n_heads, (main.d_model / 2 / main.n_heads) * main.n_heads);
    return ref;
}

TrainResult align(ModelBundle init, const std::vector<ProteinRecord>& corpus,
                  const ModelBundle* reference, const TrainConfig& config,
                  const fs::path& run_dir, const Checkpoint* resume) {
    config.validate();
    if (init.frozen) throw DataError("align: bundle is frozen; training it is not allowed");
    if (!(init.config == config.model))
        throw DataError("align: bundle config does not match train config");
    const bool needs_reference =
        config.selection_enabled && config.strategy == StrategyKind::Excess;
    if (needs_reference && !reference)
        throw UsageError("align: excess selection strategy requires a reference model");
    if (reference) {
        if (reference->config.d_g != config.model.d_g ||
            reference->config.codebook_k != config.model.codebook_k)
            throw DataError("align: reference model disagrees on D_g or K");
        if (!reference->frozen)
            throw DataError("align: reference model must be frozen");
    }
    if (corpus.empty()) throw DataError("align: empty corpus");
    for (const auto& rec : corpus) {
        if (!rec.has_embedding())
            throw DataError("align: record '" + rec.id + "' lacks structure embeddings");
        if (!rec.has_tokens())
            throw DataError("align: record '" + rec.id + "' lacks structure tokens");
    }

    fs::create_directories(run_dir / "checkpoints");
    fs::create_directories(run_dir / "logs");
    const fs::path metrics_path = run_dir / "logs" / "metrics.jsonl";
    const fs::path audit_path = run_dir / "logs" / "selection_audit.csv";
    const fs::path curves_path = run_dir / "curves.csv";

    if (!resume) {
        std::ofstream cfg_out(run_dir / "config.json");
        cfg_out << config_json(config).dump(2) << "\n";
        std::ofstream(metrics_path, std::ios::trunc);
        std::ofstream(curves_path, std::ios::trunc);
        if (config.audit_selection) {
            std::ofstream audit(audit_path, std::ios::trunc);
            audit << "step,family,flat_index,current,reference,excess,selected\n";
        }
    } else {
        if (resume->run_seed != config.seed)
            throw DataError("align: resume checkpoint was produced with a different seed");
        if (!(resume->bundle.config == config.model))
            throw DataError("align: resume checkpoint model config mismatch");
    }

    auto [train, val] = split_corpus(corpus, config.val_fraction, config.seed);
    if (train.empty()) throw DataError("align: empty training split");

    const std::int64_t steps_per_epoch =
        (static_cast<std::int64_t>(train.size()) + config.batch_records - 1) / config.batch_records;
    Schedule schedule{config.warmup_epochs * steps_per_epoch, config.epochs * steps_per_epoch};
    schedule.validate();

    ModelBundle bundle = resume ? resume->bundle : std::move(init);
    AdamState opt_state = resume ? resume->opt_state : AdamState{};
    std::int64_t step = resume ? resume->step : 0;
    int start_epoch = resume ? resume->epoch : 0;
    auto groups =
        param_groups(bundle, config.peak_lr_backbone, config.peak_lr_heads, config.weight_decay);

    const LossWeights weights{config.gamma_latent, config.gamma_physical};
    const SelectionStrategy strategy{config.strategy, config.strategy == StrategyKind::Full
                                                          ? 1.0
                                                          : config.rho};
    std::string last_good;
    double best_val = std::numeric_limits<double>::infinity();

    std::ofstream metrics(metrics_path, std::ios::app);
    metrics.precision(17);

    TrainResult result;
    auto save = [&](const std::string& name, int completed_epochs) {
        Checkpoint ckpt;
        ckpt.bundle = bundle;
        ckpt.opt_state = opt_state;
        ckpt.step = step;
        ckpt.epoch = completed_epochs;
        ckpt.run_seed = config.seed;
        const fs::path p = run_dir / "checkpoints" / name;
        save_checkpoint(ckpt, p);
        return p.string();
    };

    for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
        auto batches = make_batches(train, config.batch_records, config.max_len,
                                    derive_seed(config.seed, "epoch-batches", epoch));
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            Batch& batch = batches[bi];
            mask_batch(batch, config.mask_rate,
                       derive_seed(config.seed, "train-mask",
                                   static_cast<std::uint64_t>(epoch) * 1000000 + bi));
            ++step;

            Tape tape;
            BatchGraph graph(tape, bundle, batch, true);
            ResidueLossSet current = graph.residue_losses();
            const int n_residues = current.map.total();

            SelectionMasks masks;
            ResidueLossSet ref_set;
            bool have_ref_set = false;
            if (config.selection_enabled && config.strategy != StrategyKind::Full) {
                if (config.strategy == StrategyKind::Excess) {
                    ref_set = reference_losses(*reference, batch);
                    have_ref_set = true;
                    masks = build_selection_masks(current, &ref_set, strategy);
                } else {
                    masks = build_selection_masks(current, nullptr, strategy);
                }
            }

            Tape::Var overall = graph.overall(weights, masks);
            const double loss = tape.val(overall).item();
            const double mlm = tape.val(graph.mlm_mean()).item();
            if (!std::isfinite(loss))
                throw TrainAbortError(step, last_good,
                                      "align: non-finite loss at step " + std::to_string(step));

            tape.backward(overall);
            auto grads = graph.plm().collect_grads();
            if (config.clip_norm > 0.0) clip_gradients(grads, config.clip_norm);
            adamw_step(groups, grads, opt_state, step, schedule, config.adam);
            {
                double& log_s = bundle.param("heads.log_s").data[0];
                log_s = std::min(log_s, kLogScaleCap);
            }

            const double a2g_sel = masked_mean_value(current.a2g, masks.a2g);
            const double g2a_sel = masked_mean_value(current.g2a, masks.g2a);
            const double phys_sel = masked_mean_value(current.physical, masks.physical);
            json line;
            line["step"] = step;
            line["epoch"] = epoch;
            line["lr_backbone"] = lr_at(step, schedule, config.peak_lr_backbone);
            line["lr_heads"] = lr_at(step, schedule, config.peak_lr_heads);
            line["mlm"] = mlm;
            line["a2g"] = a2g_sel;
            line["g2a"] = g2a_sel;
            line["latent"] = latent_loss(a2g_sel, g2a_sel);
            line["physical"] = phys_sel;
            line["overall"] = loss;
            line["sel_a2g"] = mask_count(masks.a2g, n_residues);
            line["sel_g2a"] = mask_count(masks.g2a, n_residues);
            line["sel_physical"] = mask_count(masks.physical, n_residues);
            metrics << line.dump() << "\n";

            if (config.audit_selection && have_ref_set) {
                std::ofstream audit(audit_path, std::ios::app);
                audit.precision(17);
                const char* families[] = {"a2g", "g2a", "physical"};
                const std::vector<double>* cur[] = {&current.a2g, &current.g2a, &current.physical};
                const std::vector<double>* ref[] = {&ref_set.a2g, &ref_set.g2a, &ref_set.physical};
                const std::vector<std::uint8_t>* sel[] = {&masks.a2g, &masks.g2a, &masks.physical};
                for (int f = 0; f < 3; ++f)
                    for (int i = 0; i < n_residues; ++i)
                        audit << step << "," << families[f] << "," << i << "," << (*cur[f])[i] << ","
                              << (*ref[f])[i] << "," << ((*cur[f])[i] - (*ref[f])[i]) << ","
                              << int(sel[f]->empty() ? 1 : (*sel[f])[i]) << "\n";
            }
        }

        EpochStats stats = validate_epoch(bundle, val, config, epoch);
        if (!val.empty()) {
            append_curve_row(curves_path, stats, epoch == 0);
            result.curves.push_back(stats);
            if (config.save_checkpoints && stats.val_overall < best_val) {
                best_val = stats.val_overall;
                save("best.json", epoch + 1);
            }
        }
        if (config.save_checkpoints) last_good = save("last.json", epoch + 1);
        if (config.stop_after_epoch > 0 && epoch + 1 >= config.stop_after_epoch &&
            epoch + 1 < config.epochs) {
            metrics.flush();
            result.bundle = std::move(bundle);
            result.steps = step;
            result.run_dir = run_dir;
            return result;
        }
    }

    if (config.save_checkpoints) save("final.json", config.epochs);
    metrics.flush();
    result.bundle = std::move(bundle);
    result.steps = step;
    result.run_dir = run_dir;
    return result;
}

ModelBundle train_reference(const std::vector<ProteinRecord>& reference_corpus,
                            const TrainConfig& config, const fs::path& run_dir) {
    if (reference_corpus.empty()) throw DataError("train_reference: empty reference corpus");
    TrainConfig ref_cfg = config;
    ref_cfg.strategy = StrategyKind::Full;
    ref_cfg.rho = 1.0;
    ref_cfg.model = reference_model_config(config.model);
    ModelBundle init = init_model(ref_cfg.model, derive_seed(ref_cfg.seed, "reference-init"));
    TrainResult res = align(std::move(init), reference_corpus, nullptr, ref_cfg, run_dir);
    res.bundle.frozen = true;
    if (ref_cfg.save_checkpoints) {
        Checkpoint ckpt;
        ckpt.bundle = res.bundle;
        ckpt.step = res.steps;
        ckpt.epoch = ref_cfg.epochs;
        ckpt.run_seed = ref_cfg.seed;
        save_checkpoint(ckpt, run_dir / "checkpoints" / "final.json");
    }
    return std::move(res.bundle);
}

GridSpec load_grid_spec(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open grid spec " + path.string());
    json j = json::parse(in);
    GridSpec spec;
    for (const auto& cj : j.at("cells")) {
        GridCell cell;
        cell.name = cj.at("name").get<std::string>();
        if (cj.contains("gamma_latent")) cell.gamma_latent = cj["gamma_latent"].get<double>();
        if (cj.contains("gamma_physical")) cell.gamma_physical = cj["gamma_physical"].get<double>();
        if (cj.contains("rho")) cell.rho = cj["rho"].get<double>();
        if (cj.contains("strategy"))
            cell.strategy = strategy_from_name(cj["strategy"].get<std::string>());
        if (cj.contains("codebook_k")) cell.codebook_k = cj["codebook_k"].get<int>();
        if (cj.contains("embed_variant")) {
            const std::string v = cj["embed_variant"].get<std::string>();
            if (v == "geom")
                cell.embed_variant = EmbedVariant::Geom;
            else if (v == "geom-alt")
                cell.embed_variant = EmbedVariant::GeomAlt;
            else
                throw DataError("grid: unknown embed_variant '" + v + "'");
        }
        spec.cells.push_back(std::move(cell));
    }
    if (spec.cells.empty()) throw UsageError("grid: no cells");
    return spec;
}

namespace {

std::string sanitize_name(const std::string& name) {
    std::string out;
    for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '-');
    return out;
}

}  // namespace

std::vector<AblationRow> run_ablation_grid(const std::vector<ProteinRecord>& corpus,
                                           const GridSpec& spec, const TrainConfig& base,
                                           const EmbedConfig& embed_base, const fs::path& out_dir) {
    if (spec.cells.empty()) throw UsageError("ablation grid is empty");
    fs::create_directories(out_dir);
    std::vector<AblationRow> rows;
    std::map<std::pair<int, int>, ModelBundle> reference_cache;

    for (const auto& cell : spec.cells) {
        TrainConfig cfg = base;
        if (cell.gamma_latent) cfg.gamma_latent = *cell.gamma_latent;
        if (cell.gamma_physical) cfg.gamma_physical = *cell.gamma_physical;
        if (cell.rho) cfg.rho = *cell.rho;
        if (cell.strategy) cfg.strategy = *cell.strategy;
        EmbedConfig embed = embed_base;
        if (cell.embed_variant) embed.variant = *cell.embed_variant;
        cfg.model.codebook_k = cell.codebook_k.value_or(base.model.codebook_k);
        cfg.model.d_g = embed.d_g;

        std::vector<ProteinRecord> cell_corpus = corpus;
        if (cell.embed_variant)
            for (auto& rec : cell_corpus) rec.gnn_embedding = surrogate_gnn_embed(rec.coords, embed);
        Codebook cb = fit_codebook_on_corpus(
            cell_corpus, cfg.model.codebook_k,
            derive_seed(cfg.seed, "grid-codebook", cfg.model.codebook_k));
        tokenize_corpus(cell_corpus, cb);

        const ModelBundle* reference = nullptr;
        if (cfg.selection_enabled && cfg.strategy == StrategyKind::Excess) {
            auto key = std::make_pair(cfg.model.codebook_k, static_cast<int>(embed.variant));
            auto it = reference_cache.find(key);
            if (it == reference_cache.end()) {
                auto curated = curate_reference(cell_corpus);
                if (curated.empty())
                    throw DataError("grid: curated reference set is empty for cell " + cell.name);
                ModelBundle ref = train_reference(
                    curated, cfg,
                    out_dir / ("reference-k" + std::to_string(cfg.model.codebook_k) + "-v" +
                               std::to_string(static_cast<int>(embed.variant))));
                it = reference_cache.emplace(key, std::move(ref)).first;
            }
            reference = &it->second;
        }

        ModelBundle init = init_model(cfg.model, derive_seed(cfg.seed, "grid-init"));
        TrainResult res = align(std::move(init), cell_corpus, reference, cfg,
                                out_dir / ("cell-" + sanitize_name(cell.name)));

        auto [train, val] = split_corpus(cell_corpus, cfg.val_fraction, cfg.seed);
        ProbeConfig pc;
        AblationRow row;
        row.cell = cell;
        row.final_val = res.curves.empty() ? EpochStats{} : res.curves.back();
        row.contact_p_at_l5 =
            probe_contact(res.bundle, train, val, pc, derive_seed(cfg.seed, "grid-contact")).value;
        row.ss_accuracy =
            probe_ss(res.bundle, train, val, pc, derive_seed(cfg.seed, "grid-ss")).value;
        double ppl_sum = 0.0;
        const int ppl_n = std::min<int>(8, static_cast<int>(val.size()));
        for (int i = 0; i < ppl_n; ++i)
            ppl_sum += pseudo_perplexity(res.bundle, val[i].sequence);
        row.pseudo_perplexity = ppl_n > 0 ? ppl_sum / ppl_n : 0.0;
        rows.push_back(std::move(row));
    }
    write_ablation_csv(rows, out_dir / "ablation.csv");
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out.precision(12);
    out << "name,strategy,rho,gamma_latent,gamma_physical,codebook_k,embed_variant,"
           "val_mlm,val_a2g,val_g2a,val_latent,val_physical,val_overall,"
           "contact_p_at_l5,ss_accuracy,pseudo_perplexity\n";
    for (const auto& r : rows) {
        const auto& c = r.cell;
        out << c.name << ",";
        out << (c.strategy ? strategy_name(*c.strategy) : "") << ",";
        if (c.rho) out << *c.rho;
        out << ",";
        if (c.gamma_latent) out << *c.gamma_latent;
        out << ",";
        if (c.gamma_physical) out << *c.gamma_physical;
        out << ",";
        if (c.codebook_k) out << *c.codebook_k;
        out << ",";
        if (c.embed_variant)
            out << (*c.embed_variant == EmbedVariant::Geom ? "geom" : "geom-alt");
        out << ",";
        out << r.final_val.val_mlm << "," << r.final_val.val_a2g << "," << r.final_val.val_g2a
            << "," << r.final_val.val_latent << "," << r.final_val.val_physical << ","
            << r.final_val.val_overall << "," << r.contact_p_at_l5 << "," << r.ss_accuracy << ","
            << r.pseudo_perplexity << "\n";
    }
}

}  // namespace structalign
