#include "structalign/plm.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "structalign/rng.hpp"

namespace structalign {

using nlohmann::json;

void PlmConfig::validate() const {
    if (d_model % n_heads != 0)
        throw std::invalid_argument("config: d_model must be divisible by n_heads");
    if (proj_dim < 4) throw std::invalid_argument("config: proj_dim must be >= 4");
    if (n_layers < 1 || d_model < 4 || max_len < 1 || d_g < 1)
        throw std::invalid_argument("config: bad dimensions");
    if (codebook_k < 2) throw std::invalid_argument("config: codebook_k must be >= 2");
    if (vocab < 22) throw std::invalid_argument("config: vocab must cover residues+mask+pad");
}

Tensor& ModelBundle::param(const std::string& name) {
    for (auto& [n, t] : params)
        if (n == name) return t;
    throw std::out_of_range("no parameter named " + name);
}

const Tensor& ModelBundle::param(const std::string& name) const {
    for (const auto& [n, t] : params)
        if (n == name) return t;
    throw std::out_of_range("no parameter named " + name);
}

double ModelBundle::scale_s() const { return std::exp(param("heads.log_s").data[0]); }

bool ModelBundle::all_finite() const {
    for (const auto& [n, t] : params)
        if (!t.all_finite()) return false;
    return true;
}

namespace {

Tensor gaussian(std::vector<int> shape, double stddev, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& x : t.data) x = rng.normal(0.0, stddev);
    return t;
}

double xavier_std(int fan_in, int fan_out) { return std::sqrt(2.0 / (fan_in + fan_out)); }

}  // namespace

ModelBundle init_model(const PlmConfig& config, std::uint64_t seed) {
    config.validate();
    ModelBundle b;
    b.config = config;
    Rng rng(derive_seed(seed, "model-init"));
    const int d = config.d_model;
    const int hidden = 4 * d;

    auto put = [&](const std::string& name, Tensor t) { b.params.emplace_back(name, std::move(t)); };

    put("backbone.tok_emb", gaussian({config.vocab, d}, 0.1, rng));
    put("backbone.pos_emb", gaussian({config.max_len, d}, 0.1, rng));
    for (int l = 0; l < config.n_layers; ++l) {
        const std::string p = "backbone.layer" + std::to_string(l) + ".";
        put(p + "ln1.g", Tensor::full({d}, 1.0));
        put(p + "ln1.b", Tensor({d}));
        for (const char* w : {"wq", "wk", "wv", "wo"})
            put(p + "attn." + w, gaussian({d, d}, xavier_std(d, d), rng));
        for (const char* bn : {"bq", "bk", "bv", "bo"}) put(p + "attn." + bn, Tensor({d}));
        put(p + "ln2.g", Tensor::full({d}, 1.0));
        put(p + "ln2.b", Tensor({d}));
        put(p + "mlp.w1", gaussian({d, hidden}, xavier_std(d, hidden), rng));
        put(p + "mlp.b1", Tensor({hidden}));
        put(p + "mlp.w2", gaussian({hidden, d}, xavier_std(hidden, d), rng));
        put(p + "mlp.b2", Tensor({d}));
    }
    put("backbone.final_ln.g", Tensor::full({d}, 1.0));
    put("backbone.final_ln.b", Tensor({d}));

    put("heads.mlm.w1", gaussian({d, d}, xavier_std(d, d), rng));
    put("heads.mlm.b1", Tensor({d}));
    put("heads.mlm.w2", gaussian({d, config.vocab}, xavier_std(d, config.vocab), rng));
    put("heads.mlm.b2", Tensor({config.vocab}));
    put("heads.struct.w1", gaussian({d, d}, xavier_std(d, d), rng));
    put("heads.struct.b1", Tensor({d}));
    put("heads.struct.w2", gaussian({d, config.codebook_k}, xavier_std(d, config.codebook_k), rng));
    put("heads.struct.b2", Tensor({config.codebook_k}));
    put("heads.proj_a", gaussian({d, config.proj_dim}, xavier_std(d, config.proj_dim), rng));
    put("heads.proj_g", gaussian({config.d_g, config.proj_dim}, xavier_std(config.d_g, config.proj_dim), rng));
    put("heads.log_s", Tensor({1}, {std::log(1.0 / 0.07)}));
    return b;
}

std::vector<ParamGroup> param_groups(ModelBundle& bundle, double peak_lr_backbone,
                                     double peak_lr_heads, double weight_decay) {
    ParamGroup backbone{"backbone", {}, peak_lr_backbone, weight_decay};
    ParamGroup heads{"heads", {}, peak_lr_heads, weight_decay};
    for (auto& [name, t] : bundle.params) {
        if (name.rfind("backbone.", 0) == 0)
            backbone.params.emplace_back(name, &t);
        else
            heads.params.emplace_back(name, &t);
    }
    return {std::move(backbone), std::move(heads)};
}

PlmGraph::PlmGraph(Tape& tape, const ModelBundle& bundle, bool with_grad)
    : tape_(tape), bundle_(bundle), with_grad_(with_grad) {
    bundle.config.validate();
    pvars_.reserve(bundle.params.size());
    for (const auto& [name, t] : bundle.params)
        pvars_.emplace_back(name, tape_.leaf(t, with_grad_));
}

Tape::Var PlmGraph::pvar(const std::string& name) const {
    for (const auto& [n, v] : pvars_)
        if (n == name) return v;
    throw std::out_of_range("no parameter named " + name);
}

Tape::Var PlmGraph::linear(Tape::Var x, const std::string& w, const std::string& b) {
    return tape_.add_rowvec(tape_.matmul(x, pvar(w)), pvar(b));
}

Tape::Var PlmGraph::encode(const std::vector<int>& ids) {
    const auto& cfg = bundle_.config;
    const int L = static_cast<int>(ids.size());
    if (L < 1) throw std::invalid_argument("encode: empty sequence");
    if (L > cfg.max_len) throw std::invalid_argument("encode: sequence longer than max_len");
    for (int id : ids)
        if (id < 0 || id >= cfg.vocab) throw std::out_of_range("encode: token id out of vocab");

    std::vector<int> positions(L);
    std::iota(positions.begin(), positions.end(), 0);
    Tape::Var x = tape_.add(tape_.gather_rows(pvar("backbone.tok_emb"), ids),
                            tape_.gather_rows(pvar("backbone.pos_emb"), positions));
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "backbone.layer" + std::to_string(l) + ".";
        Tape::Var h = tape_.layernorm(x, pvar(p + "ln1.g"), pvar(p + "ln1.b"));
        Tape::Var q = linear(h, p + "attn.wq", p + "attn.bq");
        Tape::Var k = linear(h, p + "attn.wk", p + "attn.bk");
        Tape::Var v = linear(h, p + "attn.wv", p + "attn.bv");
        Tape::Var a = tape_.attention(q, k, v, cfg.n_heads);
        x = tape_.add(x, linear(a, p + "attn.wo", p + "attn.bo"));
        Tape::Var m = tape_.layernorm(x, pvar(p + "ln2.g"), pvar(p + "ln2.b"));
        m = linear(m, p + "mlp.w1", p + "mlp.b1");
        m = tape_.gelu(m);
        x = tape_.add(x, linear(m, p + "mlp.w2", p + "mlp.b2"));
    }
    return tape_.layernorm(x, pvar("backbone.final_ln.g"), pvar("backbone.final_ln.b"));
}

Tape::Var PlmGraph::mlm_logits(Tape::Var hidden) {
    Tape::Var h = tape_.gelu(linear(hidden, "heads.mlm.w1", "heads.mlm.b1"));
    return linear(h, "heads.mlm.w2", "heads.mlm.b2");
}

Tape::Var PlmGraph::struct_logits(Tape::Var hidden) {
    Tape::Var h = tape_.gelu(linear(hidden, "heads.struct.w1", "heads.struct.b1"));
    return linear(h, "heads.struct.w2", "heads.struct.b2");
}

Tape::Var PlmGraph::project_a(Tape::Var hidden) {
    return tape_.l2_normalize_rows(tape_.matmul(hidden, pvar("heads.proj_a")));
}

Tape::Var PlmGraph::project_g(const Tensor& gnn_embedding) {
    if (gnn_embedding.cols() != bundle_.config.d_g)
        throw std::invalid_argument("project_g: embedding width != D_g");
    Tape::Var e = tape_.leaf(gnn_embedding, false);
    return tape_.l2_normalize_rows(tape_.matmul(e, pvar("heads.proj_g")));
}

Tape::Var PlmGraph::scale_var() { return tape_.exp_elem(pvar("heads.log_s")); }

std::map<std::string, Tensor> PlmGraph::collect_grads() const {
    std::map<std::string, Tensor> grads;
    for (const auto& [name, v] : pvars_) {
        const Tensor& g = tape_.grad(v);
        grads[name] = g.data.empty() ? Tensor(tape_.val(v).shape) : g;
    }
    return grads;
}

Tensor encode_values(const ModelBundle& bundle, const std::vector<int>& ids) {
    Tape tape;
    PlmGraph g(tape, bundle, false);
    return tape.val(g.encode(ids));
}

Tensor mlm_logits_values(const ModelBundle& bundle, const std::vector<int>& ids) {
    Tape tape;
    PlmGraph g(tape, bundle, false);
    return tape.val(g.mlm_logits(g.encode(ids)));
}

Tensor struct_logits_values(const ModelBundle& bundle, const std::vector<int>& ids) {
    Tape tape;
    PlmGraph g(tape, bundle, false);
    return tape.val(g.struct_logits(g.encode(ids)));
}

Tensor project_values(const ModelBundle& bundle, const Tensor& input, char which) {
    Tape tape;
    PlmGraph g(tape, bundle, false);
    if (which == 'a') {
        Tape::Var h = tape.leaf(input, false);
        return tape.val(g.project_a(h));
    }
    if (which == 'g') return tape.val(g.project_g(input));
    throw std::invalid_argument("project_values: which must be 'a' or 'g'");
}

namespace {

json tensor_to_json(const Tensor& t) {
    json j;
    j["shape"] = t.shape;
    j["data"] = t.data;
    return j;
}

Tensor tensor_from_json(const json& j) {
    return Tensor(j.at("shape").get<std::vector<int>>(), j.at("data").get<std::vector<double>>());
}

json config_to_json(const PlmConfig& c) {
    return json{{"vocab", c.vocab},     {"d_model", c.d_model},   {"n_layers", c.n_layers},
                {"n_heads", c.n_heads}, {"max_len", c.max_len},   {"proj_dim", c.proj_dim},
                {"d_g", c.d_g},         {"codebook_k", c.codebook_k}};
}

PlmConfig config_from_json(const json& j) {
    PlmConfig c;
    c.vocab = j.at("vocab").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.max_len = j.at("max_len").get<int>();
    c.proj_dim = j.at("proj_dim").get<int>();
    c.d_g = j.at("d_g").get<int>();
    c.codebook_k = j.at("codebook_k").get<int>();
    return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    json j;
    j["format"] = "structalign-checkpoint-v1";
    j["config"] = config_to_json(ckpt.bundle.config);
    j["frozen"] = ckpt.bundle.frozen;
    j["step"] = ckpt.step;
    j["epoch"] = ckpt.epoch;
    j["run_seed"] = ckpt.run_seed;
    json params = json::object();
    for (const auto& [name, t] : ckpt.bundle.params) params[name] = tensor_to_json(t);
    j["params"] = params;
    json m = json::object(), v = json::object();
    for (const auto& [name, t] : ckpt.opt_state.m) m[name] = tensor_to_json(t);
    for (const auto& [name, t] : ckpt.opt_state.v) v[name] = tensor_to_json(t);
    j["opt_m"] = m;
    j["opt_v"] = v;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    json j = json::parse(in);
    if (j.at("format").get<std::string>() != "structalign-checkpoint-v1")
        throw std::runtime_error("unknown checkpoint format in " + path.string());
    Checkpoint ckpt;
    ckpt.bundle.config = config_from_json(j.at("config"));
    ckpt.bundle.frozen = j.at("frozen").get<bool>();
    ckpt.step = j.at("step").get<std::int64_t>();
    ckpt.epoch = j.at("epoch").get<int>();
    ckpt.run_seed = j.at("run_seed").get<std::uint64_t>();

    // Preserve canonical parameter order by rebuilding from a fresh init.
    ModelBundle ref = init_model(ckpt.bundle.config, 0);
    const auto& params = j.at("params");
    for (auto& [name, t] : ref.params) {
        if (!params.contains(name))
            throw std::runtime_error("checkpoint missing parameter " + name);
        t = tensor_from_json(params.at(name));
    }
    ckpt.bundle.params = std::move(ref.params);
    for (const auto& [name, tj] : j.at("opt_m").items()) ckpt.opt_state.m[name] = tensor_from_json(tj);
    for (const auto& [name, tj] : j.at("opt_v").items()) ckpt.opt_state.v[name] = tensor_from_json(tj);
    return ckpt;
}

}  // namespace structalign
