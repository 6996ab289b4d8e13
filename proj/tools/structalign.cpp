// structalign: synthetic-corpus structure alignment pipeline in one binary.
// Subcommands: gen, fit-tokenizer, train-ref, align, probe, ppl, score,
// ablate. Exit codes: 0 ok, 2 usage, 3 data, 4 numerical failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "structalign/errors.hpp"
#include "structalign/manifest.hpp"
#include "structalign/probes.hpp"
#include "structalign/rng.hpp"
#include "structalign/scoring.hpp"
#include "structalign/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace structalign;

namespace {

std::uint64_t effective_seed(std::uint64_t flag_seed) {
    if (const char* env = std::getenv("STRUCTALIGN_SEED")) return std::strtoull(env, nullptr, 10);
    return flag_seed;
}

RunManifest start_manifest(const std::string& command, const json& config, std::uint64_t seed,
                           const std::vector<fs::path>& inputs, const fs::path& out,
                           bool out_is_dir) {
    RunManifest m;
    m.command = command;
    m.config = config;
    m.seed = seed;
    for (const auto& p : inputs) m.input_hashes[p.string()] = content_hash(p);
    m.started_at = utc_timestamp();
    if (out_is_dir) fs::create_directories(out);
    m.write_file(RunManifest::path_for(out, out_is_dir));
    return m;
}

void finish_manifest(RunManifest& m, const fs::path& out, bool out_is_dir) {
    m.finished_at = utc_timestamp();
    m.write_file(RunManifest::path_for(out, out_is_dir));
}

struct ModelFlags {
    PlmConfig config;

    void attach(CLI::App* cmd) {
        cmd->add_option("--d-model", config.d_model, "pLM hidden width D_a")
            ->capture_default_str();
        cmd->add_option("--layers", config.n_layers, "encoder layers")->capture_default_str();
        cmd->add_option("--heads", config.n_heads, "attention heads")->capture_default_str();
        cmd->add_option("--model-max-len", config.max_len, "positional table size")
            ->capture_default_str();
        cmd->add_option("--proj-dim", config.proj_dim, "shared projection width D")
            ->capture_default_str();
        cmd->add_option("--k", config.codebook_k, "structure codebook size K")
            ->capture_default_str();
    }
};

struct TrainFlags {
    TrainConfig config;
    std::string strategy = "excess";

    void attach(CLI::App* cmd) {
        cmd->add_option("--epochs", config.epochs, "training epochs")->capture_default_str();
        cmd->add_option("--warmup-epochs", config.warmup_epochs, "linear warmup epochs")
            ->capture_default_str();
        cmd->add_option("--lr-backbone", config.peak_lr_backbone, "peak backbone learning rate")
            ->capture_default_str();
        cmd->add_option("--lr-heads", config.peak_lr_heads, "peak heads learning rate")
            ->capture_default_str();
        cmd->add_option("--rho", config.rho, "selection ratio")->capture_default_str();
        cmd->add_option("--gamma-latent", config.gamma_latent, "latent loss weight")
            ->capture_default_str();
        cmd->add_option("--gamma-physical", config.gamma_physical, "physical loss weight")
            ->capture_default_str();
        cmd->add_option("--strategy", strategy, "selection strategy (excess|loss-large|loss-small|full)")
            ->capture_default_str();
        cmd->add_flag("--no-selection", no_selection, "disable the selection module entirely");
        cmd->add_option("--batch", config.batch_records, "records per batch")
            ->capture_default_str();
        cmd->add_option("--max-len", config.max_len, "truncation window length")
            ->capture_default_str();
        cmd->add_option("--mask-rate", config.mask_rate, "masking rate")->capture_default_str();
        cmd->add_option("--val-fraction", config.val_fraction, "validation split fraction")
            ->capture_default_str();
        cmd->add_option("--clip-norm", config.clip_norm, "gradient clip norm (0 disables)")
            ->capture_default_str();
        cmd->add_flag("--audit-selection", config.audit_selection,
                      "write logs/selection_audit.csv");
        cmd->add_option("--stop-after-epoch", config.stop_after_epoch,
                        "stop after this many epochs (testing)")
            ->capture_default_str();
    }

    void resolve(std::uint64_t seed, const PlmConfig& model) {
        config.seed = seed;
        config.model = model;
        config.strategy = strategy_from_name(strategy);
        config.selection_enabled = !no_selection;
        if (config.model.max_len < config.max_len) config.model.max_len = config.max_len;
    }

    bool no_selection = false;
};

// Loads a corpus and fills in embeddings/tokens as needed; the codebook is
// loaded from --codebook or fit on the corpus and saved next to the run.
std::vector<ProteinRecord> prepare_cli_corpus(const fs::path& corpus_path,
                                              const std::string& codebook_path, int k,
                                              std::uint64_t seed, const fs::path& save_codebook_to,
                                              PlmConfig& model, EmbedConfig& embed) {
    auto corpus = load_corpus(corpus_path);
    if (corpus.empty()) throw DataError("corpus is empty: " + corpus_path.string());
    for (const auto& rec : corpus)
        if (rec.has_embedding()) {
            embed.d_g = rec.gnn_embedding.cols();
            break;
        }
    model.d_g = embed.d_g;
    Codebook cb;
    if (!codebook_path.empty()) {
        cb = load_codebook(codebook_path);
        if (cb.k != k && k > 0) model.codebook_k = cb.k;
        model.codebook_k = cb.k;
    } else {
        cb = fit_codebook_on_corpus(corpus, model.codebook_k, derive_seed(seed, "cli-codebook"));
        if (!save_codebook_to.empty()) save_codebook(cb, save_codebook_to);
    }
    int max_token = 0;
    for (const auto& rec : corpus)
        for (int t : rec.structure_tokens) max_token = std::max(max_token, t);
    if (max_token >= model.codebook_k)
        throw DataError("corpus tokens exceed codebook size K");
    prepare_corpus(corpus, embed, cb);
    return corpus;
}

int cmd_gen(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen", "generate a synthetic corpus");
    auto cfg = std::make_shared<GeneratorConfig>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--n", cfg->n_proteins, "number of proteins")->capture_default_str();
    cmd->add_option("--len-min", cfg->len_min, "minimum length")->capture_default_str();
    cmd->add_option("--len-max", cfg->len_max, "maximum length")->capture_default_str();
    cmd->add_option("--helix-frac", cfg->helix_fraction, "helix segment fraction")
        ->capture_default_str();
    cmd->add_option("--strand-frac", cfg->strand_fraction, "strand segment fraction")
        ->capture_default_str();
    cmd->add_option("--coupling", cfg->seq_structure_coupling, "sequence-structure coupling")
        ->capture_default_str();
    cmd->add_option("--noise-frac", cfg->noise_fraction, "fraction of corrupted records")
        ->capture_default_str();
    cmd->add_option("--sigma", cfg->coord_noise_sigma, "corruption noise sigma (Å)")
        ->capture_default_str();
    cmd->add_option("--d-g", cfg->embed.d_g, "surrogate embedding width")->capture_default_str();
    cmd->add_option("--k-neighbors", cfg->embed.k_neighbors, "surrogate embedding neighbors")
        ->capture_default_str();
    cmd->add_option("--seed", cfg->seed, "random seed")->capture_default_str();
    cmd->add_option("--out", *out, "output corpus file (JSON lines)")->required();
    cmd->callback([cfg, out]() {
        cfg->seed = effective_seed(cfg->seed);
        json jc = {{"n", cfg->n_proteins},
                   {"len_min", cfg->len_min},
                   {"len_max", cfg->len_max},
                   {"helix_frac", cfg->helix_fraction},
                   {"strand_frac", cfg->strand_fraction},
                   {"coupling", cfg->seq_structure_coupling},
                   {"noise_frac", cfg->noise_fraction},
                   {"sigma", cfg->coord_noise_sigma},
                   {"d_g", cfg->embed.d_g},
                   {"k_neighbors", cfg->embed.k_neighbors},
                   {"out", *out}};
        auto manifest = start_manifest("gen", jc, cfg->seed, {}, *out, false);
        auto records = generate(*cfg);
        save_corpus(records, *out);
        finish_manifest(manifest, *out, false);
        std::cout << "wrote " << records.size() << " records to " << *out << "\n";
    });
    return 0;
}

int cmd_fit_tokenizer(CLI::App& app) {
    auto* cmd = app.add_subcommand("fit-tokenizer", "fit a structure-token codebook");
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto k = std::make_shared<int>(20);
    auto seed = std::make_shared<std::uint64_t>(0);
    cmd->add_option("--corpus", *corpus, "corpus file")->required();
    cmd->add_option("--k", *k, "codebook size")->capture_default_str();
    cmd->add_option("--seed", *seed, "random seed")->capture_default_str();
    cmd->add_option("--out", *out, "output codebook file")->required();
    cmd->callback([corpus, out, k, seed]() {
        const std::uint64_t s = effective_seed(*seed);
        json jc = {{"corpus", *corpus}, {"k", *k}, {"out", *out}};
        auto manifest = start_manifest("fit-tokenizer", jc, s, {*corpus}, *out, false);
        auto records = load_corpus(*corpus);
        Codebook cb = fit_codebook_on_corpus(records, *k, s);
        save_codebook(cb, *out);
        finish_manifest(manifest, *out, false);
        std::cout << "fit codebook K=" << cb.k << " on " << records.size() << " records\n";
    });
    return 0;
}

int cmd_train_ref(CLI::App& app) {
    auto* cmd = app.add_subcommand("train-ref", "train the frozen reference model");
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto codebook = std::make_shared<std::string>();
    auto res_max = std::make_shared<double>(2.0);
    auto rfree_max = std::make_shared<double>(0.20);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto model = std::make_shared<ModelFlags>();
    auto train = std::make_shared<TrainFlags>();
    cmd->add_option("--corpus", *corpus, "corpus file")->required();
    cmd->add_option("--res-max", *res_max, "resolution cutoff (Å)")->capture_default_str();
    cmd->add_option("--rfree-max", *rfree_max, "R-free cutoff")->capture_default_str();
    cmd->add_option("--codebook", *codebook, "codebook file (fit on corpus when omitted)");
    cmd->add_option("--seed", *seed, "random seed")->capture_default_str();
    cmd->add_option("--out", *out, "run directory")->required();
    model->attach(cmd);
    train->attach(cmd);
    cmd->callback([=]() {
        const std::uint64_t s = effective_seed(*seed);
        const fs::path dir = *out;
        json jc = {{"corpus", *corpus}, {"res_max", *res_max}, {"rfree_max", *rfree_max},
                   {"codebook", *codebook}, {"out", *out}};
        RunLock lock(dir);
        auto manifest = start_manifest("train-ref", jc, s, {*corpus}, dir, true);
        PlmConfig plm = model->config;
        EmbedConfig embed;
        auto records = prepare_cli_corpus(*corpus, *codebook, plm.codebook_k, s,
                                          dir / "codebook.json", plm, embed);
        auto curated = curate_reference(records, *res_max, *rfree_max);
        if (curated.empty()) throw DataError("curated reference set is empty");
        train->resolve(s, plm);
        ModelBundle ref = train_reference(curated, train->config, dir);
        finish_manifest(manifest, dir, true);
        std::cout << "reference model trained on " << curated.size() << " records; checkpoint at "
                  << (dir / "checkpoints" / "final.json") << "\n";
        (void)ref;
    });
    return 0;
}

int cmd_align(CLI::App& app) {
    auto* cmd = app.add_subcommand("align", "run structure alignment training");
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto codebook = std::make_shared<std::string>();
    auto init = std::make_shared<std::string>();
    auto ref = std::make_shared<std::string>();
    auto resume = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto model = std::make_shared<ModelFlags>();
    auto train = std::make_shared<TrainFlags>();
    cmd->add_option("--corpus", *corpus, "corpus file")->required();
    cmd->add_option("--init", *init, "initial checkpoint (fresh init when omitted)");
    cmd->add_option("--ref", *ref, "frozen reference checkpoint (for --strategy excess)");
    cmd->add_option("--resume", *resume, "checkpoint to resume from");
    cmd->add_option("--codebook", *codebook, "codebook file (fit on corpus when omitted)");
    cmd->add_option("--seed", *seed, "random seed")->capture_default_str();
    cmd->add_option("--out", *out, "run directory")->required();
    model->attach(cmd);
    train->attach(cmd);
    cmd->callback([=]() {
        const std::uint64_t s = effective_seed(*seed);
        const fs::path dir = *out;
        json jc = {{"corpus", *corpus}, {"init", *init},     {"ref", *ref},
                   {"resume", *resume}, {"codebook", *codebook}, {"out", *out}};
        RunLock lock(dir);
        std::vector<fs::path> inputs{*corpus};
        if (!init->empty()) inputs.push_back(*init);
        if (!ref->empty()) inputs.push_back(*ref);
        auto manifest = start_manifest("align", jc, s, inputs, dir, true);

        PlmConfig plm = model->config;
        EmbedConfig embed;
        auto records = prepare_cli_corpus(*corpus, *codebook, plm.codebook_k, s,
                                          dir / "codebook.json", plm, embed);
        train->resolve(s, plm);

        std::optional<ModelBundle> reference;
        if (!ref->empty()) {
            Checkpoint rc = load_checkpoint(*ref);
            rc.bundle.frozen = true;
            reference = std::move(rc.bundle);
        }
        std::optional<Checkpoint> resume_ckpt;
        ModelBundle bundle;
        if (!resume->empty()) {
            resume_ckpt = load_checkpoint(*resume);
            train->config.model = resume_ckpt->bundle.config;
            bundle = resume_ckpt->bundle;
        } else if (!init->empty()) {
            Checkpoint ic = load_checkpoint(*init);
            train->config.model = ic.bundle.config;
            bundle = std::move(ic.bundle);
            bundle.frozen = false;
        } else {
            bundle = init_model(train->config.model, derive_seed(s, "align-init"));
        }

        TrainResult res = align(std::move(bundle), records, reference ? &*reference : nullptr,
                                train->config, dir, resume_ckpt ? &*resume_ckpt : nullptr);
        finish_manifest(manifest, dir, true);
        std::cout << "aligned for " << res.steps << " steps; run directory " << dir << "\n";
    });
    return 0;
}

int cmd_probe(CLI::App& app) {
    auto* cmd = app.add_subcommand("probe", "frozen-backbone linear probe");
    auto ckpt = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto task = std::make_shared<std::string>("contact");
    auto seed = std::make_shared<std::uint64_t>(0);
    auto train_frac = std::make_shared<double>(0.8);
    auto pc = std::make_shared<ProbeConfig>();
    cmd->add_option("--ckpt", *ckpt, "model checkpoint")->required();
    cmd->add_option("--task", *task, "probe task (contact|ss)")->capture_default_str();
    cmd->add_option("--corpus", *corpus, "labeled corpus file")->required();
    cmd->add_option("--train-frac", *train_frac, "probe train fraction")->capture_default_str();
    cmd->add_option("--probe-epochs", pc->epochs, "probe head epochs")->capture_default_str();
    cmd->add_option("--probe-batch", pc->batch_size, "probe head batch size")
        ->capture_default_str();
    cmd->add_option("--probe-lr", pc->lr, "probe head learning rate")->capture_default_str();
    cmd->add_option("--probe-hidden", pc->hidden, "probe head hidden width")
        ->capture_default_str();
    cmd->add_option("--length-cutoff", pc->length_cutoff, "skip longer sequences")
        ->capture_default_str();
    cmd->add_option("--seed", *seed, "random seed")->capture_default_str();
    cmd->add_option("--out", *out, "report file (JSON)")->required();
    cmd->callback([=]() {
        const std::uint64_t s = effective_seed(*seed);
        json jc = {{"ckpt", *ckpt}, {"task", *task}, {"corpus", *corpus},
                   {"train_frac", *train_frac}, {"out", *out}};
        auto manifest = start_manifest("probe", jc, s, {*ckpt, *corpus}, *out, false);
        Checkpoint c = load_checkpoint(*ckpt);
        auto records = load_corpus(*corpus);
        auto [test, train] = split_corpus(records, 1.0 - *train_frac, s);
        // split_corpus puts the first fraction into its second return slot
        ProbeReport report;
        if (*task == "contact")
            report = probe_contact(c.bundle, train, test, *pc, derive_seed(s, "cli-probe"));
        else if (*task == "ss")
            report = probe_ss(c.bundle, train, test, *pc, derive_seed(s, "cli-probe"));
        else
            throw UsageError("probe: unknown task '" + *task + "'");
        json jr = {{"task", report.task},
                   {"metric", report.metric},
                   {"value", report.value},
                   {"per_protein", report.per_protein},
                   {"seed", report.seed}};
        std::ofstream o(*out);
        if (!o) throw DataError("cannot write " + *out);
        o << jr.dump(2) << "\n";
        finish_manifest(manifest, *out, false);
        std::cout << report.task << " " << report.metric << " = " << report.value << "\n";
    });
    return 0;
}

int cmd_ppl(CLI::App& app) {
    auto* cmd = app.add_subcommand("ppl", "per-protein pseudo-perplexity");
    auto ckpt = std::make_shared<std::string>();
    auto corpus = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    cmd->add_option("--ckpt", *ckpt, "model checkpoint")->required();
    cmd->add_option("--corpus", *corpus, "corpus file")->required();
    cmd->add_option("--seed", *seed, "random seed")->capture_default_str();
    cmd->add_option("--out", *out, "output CSV")->required();
    cmd->callback([=]() {
        const std::uint64_t s = effective_seed(*seed);
        json jc = {{"ckpt", *ckpt}, {"corpus", *corpus}, {"out", *out}};
        auto manifest = start_manifest("ppl", jc, s, {*ckpt, *corpus}, *out, false);
        Checkpoint c = load_checkpoint(*ckpt);
        auto records = load_corpus(*corpus);
        std::ofstream o(*out);
        if (!o) throw DataError("cannot write " + *out);
        o.precision(17);
        o << "protein_id,pseudo_perplexity\n";
        for (const auto& rec : records)
            o << rec.id << "," << pseudo_perplexity(c.bundle, rec.sequence) << "\n";
        finish_manifest(manifest, *out, false);
        std::cout << "wrote pseudo-perplexities for " << records.size() << " proteins\n";
    });
    return 0;
}

int cmd_score(CLI::App& app) {
    auto* cmd = app.add_subcommand("score", "zero-shot mutation scoring");
    auto ckpt = std::make_shared<std::string>();
    auto wt = std::make_shared<std::string>();
    auto mutations = std::make_shared<std::string>();
    auto labels = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    cmd->add_option("--ckpt", *ckpt, "model checkpoint")->required();
    cmd->add_option("--wt", *wt, "wild-type sequence")->required();
    cmd->add_option("--mutations", *mutations, "file with one variant per line, e.g. A12G+K45M")
        ->required();
    cmd->add_option("--labels", *labels, "optional fitness labels, one number per line");
    cmd->add_option("--seed", *seed, "random seed")->capture_default_str();
    cmd->add_option("--out", *out, "output CSV")->required();
    cmd->callback([=]() {
        const std::uint64_t s = effective_seed(*seed);
        json jc = {{"ckpt", *ckpt}, {"wt", *wt}, {"mutations", *mutations},
                   {"labels", *labels}, {"out", *out}};
        std::vector<fs::path> inputs{*ckpt, *mutations};
        if (!labels->empty()) inputs.push_back(*labels);
        auto manifest = start_manifest("score", jc, s, inputs, *out, false);
        Checkpoint c = load_checkpoint(*ckpt);
        std::vector<int> wt_ids;
        for (char ch : *wt) wt_ids.push_back(residue_id(ch));

        std::ifstream mf(*mutations);
        if (!mf) throw DataError("cannot open " + *mutations);
        std::vector<std::string> variants;
        std::string line;
        while (std::getline(mf, line))
            if (!line.empty()) variants.push_back(line);
        if (variants.empty()) throw DataError("no variants in " + *mutations);

        std::vector<double> scores;
        std::ofstream o(*out);
        if (!o) throw DataError("cannot write " + *out);
        o.precision(17);
        o << "variant,score\n";
        for (const auto& v : variants) {
            double sc = zero_shot_score(c.bundle, wt_ids, parse_variant(v, wt_ids));
            scores.push_back(sc);
            o << v << "," << sc << "\n";
        }

        if (!labels->empty()) {
            std::ifstream lf(*labels);
            if (!lf) throw DataError("cannot open " + *labels);
            std::vector<double> y;
            while (std::getline(lf, line))
                if (!line.empty()) y.push_back(std::stod(line));
            if (y.size() != scores.size())
                throw DataError("labels count does not match variants count");
            double rho = spearman(scores, y);
            json js = {{"spearman", rho}, {"n", scores.size()}};
            std::ofstream so(*out + ".summary.json");
            so << js.dump(2) << "\n";
            std::cout << "spearman = " << rho << "\n";
        }
        finish_manifest(manifest, *out, false);
    });
    return 0;
}

int cmd_ablate(CLI::App& app) {
    auto* cmd = app.add_subcommand("ablate", "run an ablation grid");
    auto corpus = std::make_shared<std::string>();
    auto grid = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto model = std::make_shared<ModelFlags>();
    auto train = std::make_shared<TrainFlags>();
    cmd->add_option("--corpus", *corpus, "corpus file")->required();
    cmd->add_option("--grid", *grid, "grid spec (JSON)")->required();
    cmd->add_option("--seed", *seed, "random seed")->capture_default_str();
    cmd->add_option("--out", *out, "output directory")->required();
    model->attach(cmd);
    train->attach(cmd);
    cmd->callback([=]() {
        const std::uint64_t s = effective_seed(*seed);
        const fs::path dir = *out;
        json jc = {{"corpus", *corpus}, {"grid", *grid}, {"out", *out}};
        RunLock lock(dir);
        auto manifest = start_manifest("ablate", jc, s, {*corpus, *grid}, dir, true);
        auto records = load_corpus(*corpus);
        if (records.empty()) throw DataError("corpus is empty");
        GridSpec spec = load_grid_spec(*grid);
        EmbedConfig embed;
        for (const auto& rec : records)
            if (rec.has_embedding()) {
                embed.d_g = rec.gnn_embedding.cols();
                break;
            }
        PlmConfig plm = model->config;
        plm.d_g = embed.d_g;
        train->resolve(s, plm);
        auto rows = run_ablation_grid(records, spec, train->config, embed, dir);
        finish_manifest(manifest, dir, true);
        std::cout << "wrote " << rows.size() << "-row ablation table to "
                  << (dir / "ablation.csv") << "\n";
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structure alignment pipeline for protein language models"};
    app.require_subcommand(1);
    cmd_gen(app);
    cmd_fit_tokenizer(app);
    cmd_train_ref(app);
    cmd_align(app);
    cmd_probe(app);
    cmd_ppl(app);
    cmd_score(app);
    cmd_ablate(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const TrainAbortError& e) {
        std::cerr << "numerical failure: " << e.what();
        if (!e.last_good.empty()) std::cerr << " (last good checkpoint: " << e.last_good << ")";
        std::cerr << "\n";
        return 4;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
