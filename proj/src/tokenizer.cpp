#include "structalign/tokenizer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "structalign/rng.hpp"

namespace structalign {

using nlohmann::json;

namespace {

using Vec3 = std::array<double, 3>;

Vec3 row(const Tensor& coords, int i) {
    return {coords.at(i, 0), coords.at(i, 1), coords.at(i, 2)};
}
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Chain direction through residue m; one-sided at the termini.
Vec3 segment_dir(const Tensor& coords, int m) {
    const int L = coords.rows();
    const int lo = std::max(0, m - 1);
    const int hi = std::min(L - 1, m + 1);
    return sub(row(coords, hi), row(coords, lo));
}

double angle_between(const Vec3& a, const Vec3& b) {
    double na = norm(a), nb = norm(b);
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return std::acos(std::clamp(dot(a, b) / (na * nb), -1.0, 1.0));
}

double sq_dist(const double* a, const double* b, int dim) {
    double acc = 0.0;
    for (int c = 0; c < dim; ++c) {
        double d = a[c] - b[c];
        acc += d * d;
    }
    return acc;
}

}  // namespace

void Codebook::validate() const {
    if (k < 2) throw std::invalid_argument("codebook: K must be >= 2");
    if (centroids.rank() != 2 || centroids.shape[0] != k || centroids.shape[1] != dim)
        throw std::invalid_argument("codebook: centroid shape mismatch");
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b)
            if (sq_dist(centroids.data.data() + static_cast<std::size_t>(a) * dim,
                        centroids.data.data() + static_cast<std::size_t>(b) * dim, dim) == 0.0)
                throw std::invalid_argument("codebook: duplicate centroids");
}

Tensor descriptor(const Tensor& coords, int i) {
    const int L = coords.rows();
    if (L < 4) throw std::invalid_argument("descriptor: need L >= 4");
    if (i < 0 || i >= L) throw std::out_of_range("descriptor: residue index out of range");

    const Vec3 pi = row(coords, i);
    // Quantize the distance for ordering so that exact symmetry ties (ideal
    // helices) break by index, keeping tokens rigid-motion invariant.
    int jstar = -1;
    double best = std::numeric_limits<double>::infinity();
    long long best_q = std::numeric_limits<long long>::max();
    for (int j = 0; j < L; ++j) {
        if (std::abs(j - i) < 2) continue;
        const double d = norm(sub(row(coords, j), pi));
        const long long q = std::llround(d * 1e6);
        if (q < best_q) {
            best_q = q;
            best = d;
            jstar = j;
        }
    }
    const Vec3 connect = sub(row(coords, jstar), pi);
    const Vec3 seg_i = segment_dir(coords, i);
    const Vec3 seg_j = segment_dir(coords, jstar);

    Tensor out({kDescriptorDim});
    out.data[0] = best;
    out.data[1] = jstar > i ? 1.0 : -1.0;
    out.data[2] = angle_between(seg_i, seg_j);
    out.data[3] = angle_between(seg_i, connect);
    out.data[4] = angle_between(seg_j, connect);
    return out;
}

Tensor descriptor_rows(const Tensor& coords) {
    const int L = coords.rows();
    Tensor out({L, kDescriptorDim});
    for (int i = 0; i < L; ++i) {
        Tensor d = descriptor(coords, i);
        for (int c = 0; c < kDescriptorDim; ++c) out.at(i, c) = d.data[c];
    }
    return out;
}

Codebook fit_codebook(const Tensor& descriptors, int k, std::uint64_t seed, int max_iters,
                      std::vector<double>* objective_trace) {
    const int m = descriptors.rows(), dim = descriptors.cols();
    if (k < 2) throw std::invalid_argument("fit_codebook: K must be >= 2");
    if (m < k) throw std::invalid_argument("fit_codebook: fewer descriptors than centroids");

    Rng rng(seed);
    const double* pts = descriptors.data.data();
    Tensor centroids({k, dim});
    double* cent = centroids.data.data();

    // k-means++ seeding
    std::vector<double> d2(m, std::numeric_limits<double>::infinity());
    int first = rng.uniform_int(0, m - 1);
    std::copy(pts + static_cast<std::size_t>(first) * dim,
              pts + static_cast<std::size_t>(first + 1) * dim, cent);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < m; ++i) {
            double d = sq_dist(pts + static_cast<std::size_t>(i) * dim,
                               cent + static_cast<std::size_t>(c - 1) * dim, dim);
            d2[i] = std::min(d2[i], d);
            total += d2[i];
        }
        int next = 0;
        if (total > 0.0) {
            double u = rng.uniform(0.0, total);
            double acc = 0.0;
            for (int i = 0; i < m; ++i) {
                acc += d2[i];
                if (u < acc) {
                    next = i;
                    break;
                }
                next = i;
            }
        } else {
            next = rng.uniform_int(0, m - 1);
        }
        std::copy(pts + static_cast<std::size_t>(next) * dim,
                  pts + static_cast<std::size_t>(next + 1) * dim,
                  cent + static_cast<std::size_t>(c) * dim);
    }

    std::vector<int> assign(m, -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        double objective = 0.0;
        for (int i = 0; i < m; ++i) {
            int best_c = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                double d = sq_dist(pts + static_cast<std::size_t>(i) * dim,
                                   cent + static_cast<std::size_t>(c) * dim, dim);
                if (d < best_d) {
                    best_d = d;
                    best_c = c;
                }
            }
            objective += best_d;
            if (assign[i] != best_c) {
                assign[i] = best_c;
                changed = true;
            }
        }
        if (objective_trace) objective_trace->push_back(objective / m);
        if (!changed && iter > 0) break;

        std::vector<int> counts(k, 0);
        std::fill(centroids.data.begin(), centroids.data.end(), 0.0);
        for (int i = 0; i < m; ++i) {
            ++counts[assign[i]];
            for (int c = 0; c < dim; ++c)
                cent[static_cast<std::size_t>(assign[i]) * dim + c] +=
                    pts[static_cast<std::size_t>(i) * dim + c];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (int d = 0; d < dim; ++d)
                    cent[static_cast<std::size_t>(c) * dim + d] /= counts[c];
            } else {
                // reseed empty cluster to the point farthest from its centroid
                int far_i = 0;
                double far_d = -1.0;
                for (int i = 0; i < m; ++i) {
                    double d = sq_dist(pts + static_cast<std::size_t>(i) * dim,
                                       cent + static_cast<std::size_t>(assign[i]) * dim, dim);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                std::copy(pts + static_cast<std::size_t>(far_i) * dim,
                          pts + static_cast<std::size_t>(far_i + 1) * dim,
                          cent + static_cast<std::size_t>(c) * dim);
            }
        }
    }

    Codebook cb;
    cb.k = k;
    cb.dim = dim;
    cb.centroids = std::move(centroids);
    cb.fit_seed = seed;
    return cb;
}

std::vector<int> assign_descriptors(const Tensor& descriptors, const Codebook& codebook) {
    if (descriptors.cols() != codebook.dim)
        throw std::invalid_argument("assign: descriptor dimension mismatch");
    const int m = descriptors.rows();
    std::vector<int> tokens(m);
    const double* cent = codebook.centroids.data.data();
    for (int i = 0; i < m; ++i) {
        int best_c = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < codebook.k; ++c) {
            double d = sq_dist(descriptors.data.data() + static_cast<std::size_t>(i) * codebook.dim,
                               cent + static_cast<std::size_t>(c) * codebook.dim, codebook.dim);
            if (d < best_d) {  // strict: ties keep the lower id
                best_d = d;
                best_c = c;
            }
        }
        tokens[i] = best_c;
    }
    return tokens;
}

std::vector<int> tokenize(const Tensor& coords, const Codebook& codebook) {
    if (codebook.dim != kDescriptorDim)
        throw std::invalid_argument("tokenize: codebook dimension mismatch");
    return assign_descriptors(descriptor_rows(coords), codebook);
}

double quantization_error(const Tensor& descriptors, const Codebook& codebook) {
    const int m = descriptors.rows();
    const double* cent = codebook.centroids.data.data();
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < codebook.k; ++c)
            best = std::min(best,
                            sq_dist(descriptors.data.data() + static_cast<std::size_t>(i) * codebook.dim,
                                    cent + static_cast<std::size_t>(c) * codebook.dim, codebook.dim));
        acc += best;
    }
    return acc / m;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
    json j;
    j["k"] = cb.k;
    j["dim"] = cb.dim;
    j["fit_seed"] = cb.fit_seed;
    json rows = json::array();
    for (int r = 0; r < cb.k; ++r) {
        json row = json::array();
        for (int c = 0; c < cb.dim; ++c) row.push_back(cb.centroids.at(r, c));
        rows.push_back(std::move(row));
    }
    j["centroids"] = rows;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write codebook " + path.string());
    out << j.dump(2) << "\n";
}

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open codebook " + path.string());
    json j = json::parse(in);
    Codebook cb;
    cb.k = j.at("k").get<int>();
    cb.dim = j.at("dim").get<int>();
    cb.fit_seed = j.at("fit_seed").get<std::uint64_t>();
    cb.centroids = Tensor({cb.k, cb.dim});
    const auto& rows = j.at("centroids");
    for (int r = 0; r < cb.k; ++r)
        for (int c = 0; c < cb.dim; ++c) cb.centroids.at(r, c) = rows[r][c].get<double>();
    cb.validate();
    return cb;
}

Codebook fit_codebook_on_corpus(const std::vector<ProteinRecord>& corpus, int k,
                                std::uint64_t seed) {
    int total = 0;
    for (const auto& rec : corpus) total += rec.length();
    Tensor all({total, kDescriptorDim});
    int w = 0;
    for (const auto& rec : corpus) {
        Tensor d = descriptor_rows(rec.coords);
        std::copy(d.data.begin(), d.data.end(),
                  all.data.begin() + static_cast<std::size_t>(w) * kDescriptorDim);
        w += rec.length();
    }
    return fit_codebook(all, k, seed);
}

void tokenize_corpus(std::vector<ProteinRecord>& corpus, const Codebook& codebook) {
    for (auto& rec : corpus) rec.structure_tokens = tokenize(rec.coords, codebook);
}

}  // namespace structalign
