#include "structalign/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "structalign/rng.hpp"

namespace structalign {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 row(const Tensor& coords, int i) {
    return {coords.at(i, 0), coords.at(i, 1), coords.at(i, 2)};
}

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 scale(const Vec3& a, double c) { return {a[0] * c, a[1] * c, a[2] * c}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Vec3 unit(const Vec3& a) {
    double n = norm(a);
    if (n < 1e-12) return {0.0, 0.0, 0.0};
    return scale(a, 1.0 / n);
}

Vec3 random_unit(Rng& rng) {
    while (true) {
        Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        double n = norm(v);
        if (n > 1e-6) return scale(v, 1.0 / n);
    }
}

// Rotation matrix from a random unit quaternion.
std::array<Vec3, 3> random_rotation(Rng& rng) {
    double q[4];
    double n = 0.0;
    do {
        n = 0.0;
        for (double& qi : q) {
            qi = rng.normal();
            n += qi * qi;
        }
    } while (n < 1e-12);
    n = std::sqrt(n);
    for (double& qi : q) qi /= n;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {Vec3{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
            Vec3{2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
            Vec3{2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
}

Vec3 rotate(const std::array<Vec3, 3>& R, const Vec3& v) {
    return {dot(R[0], v), dot(R[1], v), dot(R[2], v)};
}

constexpr double kHelixRadius = 2.3;
constexpr double kHelixRise = 1.5;
constexpr double kHelixTurnDeg = 100.0;
constexpr double kStrandRise = 3.3;
constexpr double kStrandOffset = 0.942;   // keeps the Cα-Cα step near 3.8 Å
constexpr double kCaStep = 3.8;
constexpr double kClashDist = 3.0;

std::vector<Vec3> helix_template(int length) {
    std::vector<Vec3> pts(length);
    const double turn = kHelixTurnDeg * M_PI / 180.0;
    for (int k = 0; k < length; ++k)
        pts[k] = {kHelixRadius * std::cos(turn * k), kHelixRadius * std::sin(turn * k),
                  kHelixRise * k};
    return pts;
}

std::vector<Vec3> strand_template(int length) {
    std::vector<Vec3> pts(length);
    for (int k = 0; k < length; ++k)
        pts[k] = {kStrandRise * k, kStrandOffset * (k % 2 == 0 ? 1.0 : -1.0), 0.0};
    return pts;
}

double min_dist_to_chain(const std::vector<Vec3>& chain, const Vec3& p, int skip_tail) {
    double best = 1e300;
    const int n = static_cast<int>(chain.size()) - skip_tail;
    for (int i = 0; i < n; ++i) best = std::min(best, norm(sub(chain[i], p)));
    return best;
}

// 20-residue subsets favoured by each SS class (disjoint, covering the
// alphabet), used to couple sequence statistics to local geometry.
const std::vector<int>& class_subset(SsLabel ss) {
    static const std::vector<int> helix = {0, 3, 9, 10, 13, 8};          // A E L M Q K
    static const std::vector<int> strand = {17, 7, 4, 19, 18, 16};       // V I F Y W T
    static const std::vector<int> coil = {5, 12, 15, 11, 2, 1, 14, 6};   // G P S N D C R H
    switch (ss) {
        case SsLabel::Helix: return helix;
        case SsLabel::Strand: return strand;
        case SsLabel::Coil: return coil;
    }
    throw std::logic_error("bad ss label");
}

int sample_categorical(Rng& rng, const std::vector<double>& p) {
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(p.size()) - 1;
}

struct RawFeatures {
    Tensor values;   // L x raw_dim
};

// Neighbor ordering key: the distance quantized to 1e-6 Å so that exact
// symmetry ties (ideal helices) break by sequence offset, not by float
// rounding, keeping the features rigid-motion invariant.
struct NeighborKey {
    long long quantized;
    int seq_dist;
    int index;
    double dist;

    bool operator<(const NeighborKey& o) const {
        if (quantized != o.quantized) return quantized < o.quantized;
        if (seq_dist != o.seq_dist) return seq_dist < o.seq_dist;
        return index < o.index;
    }
};

// Chain bend at position m: cosine between the incoming and outgoing bonds.
double curvature_at(const Tensor& coords, int m) {
    const int L = coords.rows();
    if (m < 1 || m + 1 >= L) return 0.0;
    Vec3 u1 = unit(sub(row(coords, m), row(coords, m - 1)));
    Vec3 u2 = unit(sub(row(coords, m + 1), row(coords, m)));
    return dot(u1, u2);
}

// Dihedral of (m-2, m-1, m, m+1); the sign is proper-rotation invariant.
std::pair<double, double> torsion_at(const Tensor& coords, int m) {
    const int L = coords.rows();
    if (m < 2 || m + 1 >= L) return {0.0, 0.0};
    Vec3 b1 = sub(row(coords, m - 1), row(coords, m - 2));
    Vec3 b2 = sub(row(coords, m), row(coords, m - 1));
    Vec3 b3 = sub(row(coords, m + 1), row(coords, m));
    Vec3 n1 = cross(b1, b2);
    Vec3 n2 = cross(b2, b3);
    double denom = norm(n1) * norm(n2);
    if (denom < 1e-12) return {0.0, 0.0};
    double cosd = std::clamp(dot(n1, n2) / denom, -1.0, 1.0);
    double sind = std::clamp(dot(cross(n1, n2), unit(b2)) / denom, -1.0, 1.0);
    return {cosd, sind};
}

RawFeatures raw_geometry_features(const Tensor& coords, const EmbedConfig& cfg) {
    const int L = coords.rows();
    const int k = cfg.k_neighbors;
    if (L < k + 1) throw std::invalid_argument("surrogate_gnn_embed: need L >= k_neighbors+1");
    const bool alt = cfg.variant == EmbedVariant::GeomAlt;
    // k spatial-neighbor distances, k-1 neighbor direction angles, four
    // short-range chain distances, the curvature window, torsion at i
    const int raw_dim = k + (k - 1) + 4 + 3 + 2;
    RawFeatures out;
    out.values = Tensor({L, raw_dim});

    auto chain_dist = [&](int i, int j) {
        if (j < 0 || j >= L) return 0.0;
        double d = norm(sub(row(coords, j), row(coords, i)));
        return alt ? d * d : d;
    };

    std::vector<NeighborKey> dists(L);
    for (int i = 0; i < L; ++i) {
        const Vec3 pi = row(coords, i);
        int m = 0;
        for (int j = 0; j < L; ++j) {
            if (j == i) continue;
            const double d = norm(sub(row(coords, j), pi));
            dists[m++] = {static_cast<long long>(std::llround(d * 1e6)), std::abs(j - i), j, d};
        }
        std::sort(dists.begin(), dists.begin() + m);
        if (dists[0].dist < 1e-9)
            throw std::runtime_error("surrogate_gnn_embed: degenerate geometry (coincident points)");

        double* f = out.values.data.data() + static_cast<std::size_t>(i) * raw_dim;
        int w = 0;
        for (int q = 0; q < k; ++q)
            f[w++] = alt ? dists[q].dist * dists[q].dist : dists[q].dist;
        for (int q = 0; q + 1 < k; ++q) {
            Vec3 u1 = unit(sub(row(coords, dists[q].index), pi));
            Vec3 u2 = unit(sub(row(coords, dists[q + 1].index), pi));
            f[w++] = dot(u1, u2);
        }
        // short-range chain distances: d(i, i±2) and d(i, i±3) are the local
        // bend expressed as distances, crisp per conformation class
        f[w++] = chain_dist(i, i - 2);
        f[w++] = chain_dist(i, i + 2);
        f[w++] = chain_dist(i, i - 3);
        f[w++] = chain_dist(i, i + 3);
        for (int off : {-1, 0, 1}) f[w++] = curvature_at(coords, i + off);
        auto [cosd, sind] =
            alt ? std::pair<double, double>{0.0, 0.0} : torsion_at(coords, i);
        f[w++] = cosd;
        f[w++] = sind;
    }
    return out;
}

Tensor projection_matrix(int raw_dim, const EmbedConfig& cfg) {
    Rng rng(derive_seed(cfg.proj_seed, "embed-proj", static_cast<std::uint64_t>(cfg.variant)));
    Tensor w({raw_dim, cfg.d_g});
    const double s = 1.0 / std::sqrt(static_cast<double>(raw_dim));
    for (auto& x : w.data) x = rng.normal(0.0, s);
    return w;
}

}  // namespace

void GeneratorConfig::validate() const {
    auto frac_ok = [](double f) { return f >= 0.0 && f <= 1.0; };
    if (!frac_ok(helix_fraction) || !frac_ok(strand_fraction) ||
        helix_fraction + strand_fraction > 1.0 || !frac_ok(seq_structure_coupling) ||
        !frac_ok(noise_fraction))
        throw std::invalid_argument("generator config: fractions must lie in [0,1]");
    if (len_min < 8) throw std::invalid_argument("generator config: len_min must be >= 8");
    if (len_max < len_min) throw std::invalid_argument("generator config: len_max < len_min");
    if (n_proteins < 1) throw std::invalid_argument("generator config: n_proteins must be >= 1");
    if (coord_noise_sigma < 0.0) throw std::invalid_argument("generator config: sigma must be >= 0");
}

Tensor ideal_helix(int length) {
    auto pts = helix_template(length);
    Tensor t({length, 3});
    for (int i = 0; i < length; ++i)
        for (int c = 0; c < 3; ++c) t.at(i, c) = pts[i][c];
    return t;
}

Tensor ideal_strand(int length) {
    auto pts = strand_template(length);
    Tensor t({length, 3});
    for (int i = 0; i < length; ++i)
        for (int c = 0; c < 3; ++c) t.at(i, c) = pts[i][c];
    return t;
}

std::vector<double> residue_distribution(SsLabel ss, double coupling) {
    std::vector<double> p(kNumResidues, (1.0 - coupling) / kNumResidues);
    const auto& subset = class_subset(ss);
    for (int id : subset) p[id] += coupling / static_cast<double>(subset.size());
    return p;
}

Tensor surrogate_gnn_embed(const Tensor& coords, const EmbedConfig& config) {
    RawFeatures raw = raw_geometry_features(coords, config);
    Tensor proj = projection_matrix(raw.values.cols(), config);
    const int L = raw.values.rows(), rd = raw.values.cols(), dg = config.d_g;
    Tensor out({L, dg});
    for (int i = 0; i < L; ++i)
        for (int c = 0; c < dg; ++c) {
            double acc = 0.0;
            for (int r = 0; r < rd; ++r) acc += raw.values.at(i, r) * proj.at(r, c);
            out.at(i, c) = acc;
        }
    return out;
}

std::set<std::pair<int, int>> contacts(const Tensor& coords, double threshold, int min_separation) {
    const int L = coords.rows();
    if (L < 2) throw std::invalid_argument("contacts: need L >= 2");
    std::set<std::pair<int, int>> out;
    for (int i = 0; i < L; ++i)
        for (int j = i + 1; j < L; ++j) {
            if (j - i <= min_separation) continue;
            if (norm(sub(row(coords, j), row(coords, i))) <= threshold) out.insert({i, j});
        }
    return out;
}

ProteinRecord corrupt(const ProteinRecord& record, double coord_noise_sigma, std::uint64_t seed,
                      const EmbedConfig& embed) {
    if (coord_noise_sigma < 0.0) throw std::invalid_argument("corrupt: sigma must be >= 0");
    if (record.has_tokens())
        throw std::invalid_argument(
            "corrupt: record carries structure tokens; corrupt before tokenization so they can "
            "be recomputed from the noisy coordinates");
    Rng rng(seed);
    ProteinRecord out = record;
    for (auto& x : out.coords.data) x += rng.normal(0.0, coord_noise_sigma);
    out.gnn_embedding = surrogate_gnn_embed(out.coords, embed);
    out.resolution = 2.5 + 1.5 * rng.uniform();   // above the 2.0 Å cutoff
    out.r_free = 0.25 + 0.15 * rng.uniform();     // above the 0.20 cutoff
    return out;
}

std::vector<ProteinRecord> generate(const GeneratorConfig& config) {
    config.validate();
    std::vector<ProteinRecord> records;
    records.reserve(config.n_proteins);

    for (int p = 0; p < config.n_proteins; ++p) {
        Rng rng(derive_seed(config.seed, "protein", p));
        const int length = rng.uniform_int(config.len_min, config.len_max);

        std::vector<Vec3> chain;
        std::vector<SsLabel> ss;
        chain.reserve(length);
        ss.reserve(length);

        bool has_previous = false;
        SsLabel previous = SsLabel::Coil;
        while (static_cast<int>(chain.size()) < length) {
            const int remaining = length - static_cast<int>(chain.size());
            int seg_len = std::min(remaining, rng.uniform_int(6, 16));
            if (remaining - seg_len < 6) seg_len = remaining;

            // no immediate repeats: a same-type "junction" would carry a
            // random join bond inside a run of identical labels
            SsLabel kind;
            do {
                double u = rng.uniform();
                kind = u < config.helix_fraction
                           ? SsLabel::Helix
                           : (u < config.helix_fraction + config.strand_fraction
                                  ? SsLabel::Strand
                                  : SsLabel::Coil);
            } while (has_previous && kind == previous);
            has_previous = true;
            previous = kind;

            if (kind == SsLabel::Coil) {
                for (int k = 0; k < seg_len; ++k) {
                    if (chain.empty()) {
                        chain.push_back({0.0, 0.0, 0.0});
                        continue;
                    }
                    Vec3 best{};
                    double best_clear = -1.0;
                    bool placed = false;
                    for (int attempt = 0; attempt < 30; ++attempt) {
                        Vec3 cand = add(chain.back(), scale(random_unit(rng), kCaStep));
                        double clear = min_dist_to_chain(chain, cand, 1);
                        if (clear > kClashDist) {
                            chain.push_back(cand);
                            placed = true;
                            break;
                        }
                        if (clear > best_clear) {
                            best_clear = clear;
                            best = cand;
                        }
                    }
                    if (!placed) chain.push_back(best);
                }
            } else {
                auto tmpl = kind == SsLabel::Helix ? helix_template(seg_len)
                                                   : strand_template(seg_len);
                auto R = random_rotation(rng);
                Vec3 join = chain.empty()
                                ? Vec3{0.0, 0.0, 0.0}
                                : add(chain.back(), scale(random_unit(rng), kCaStep));
                for (int k = 0; k < seg_len; ++k)
                    chain.push_back(add(join, rotate(R, sub(tmpl[k], tmpl[0]))));
            }
            for (int k = 0; k < seg_len; ++k) ss.push_back(kind);
        }

        ProteinRecord rec;
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "synth-%05d", p);
        rec.id = idbuf;
        rec.coords = Tensor({length, 3});
        for (int i = 0; i < length; ++i)
            for (int c = 0; c < 3; ++c) rec.coords.at(i, c) = chain[i][c];
        rec.ss_labels = std::move(ss);
        rec.sequence.reserve(length);
        for (int i = 0; i < length; ++i) {
            auto dist = residue_distribution(rec.ss_labels[i], config.seq_structure_coupling);
            rec.sequence.push_back(sample_categorical(rng, dist));
        }
        rec.gnn_embedding = surrogate_gnn_embed(rec.coords, config.embed);
        rec.resolution = 1.2 + 0.7 * rng.uniform();
        rec.r_free = 0.12 + 0.07 * rng.uniform();
        records.push_back(std::move(rec));
    }

    const int n_corrupt =
        static_cast<int>(std::llround(config.noise_fraction * config.n_proteins));
    if (n_corrupt > 0) {
        Rng pick(derive_seed(config.seed, "corrupt-pick"));
        auto ids = pick.sample_without_replacement(config.n_proteins, n_corrupt);
        for (int idx : ids)
            records[idx] = corrupt(records[idx], config.coord_noise_sigma,
                                   derive_seed(config.seed, "corrupt", idx), config.embed);
    }
    return records;
}

}  // namespace structalign
