#include "structalign/tape.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace structalign {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;

MatMap as_mat(Tensor& t) { return MatMap(t.data.data(), t.rows(), t.cols()); }
CMatMap as_mat(const Tensor& t) { return CMatMap(t.data.data(), t.rows(), t.cols()); }

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
double gelu_deriv(double x) {
    double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

}  // namespace

std::vector<double> softmax_ce_rows_values(const Tensor& logits, const std::vector<int>& targets,
                                           Tensor* probs) {
    const int m = logits.rows(), n = logits.cols();
    if (static_cast<int>(targets.size()) != m)
        throw std::invalid_argument("softmax_ce: target count does not match rows");
    if (probs) *probs = Tensor({m, n});
    std::vector<double> losses(m);
    for (int r = 0; r < m; ++r) {
        if (targets[r] < 0 || targets[r] >= n)
            throw std::out_of_range("softmax_ce: target id out of range");
        const double* row = logits.data.data() + static_cast<std::size_t>(r) * n;
        double mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += std::exp(row[j] - mx);
        double lse = mx + std::log(sum);
        losses[r] = lse - row[targets[r]];
        if (probs) {
            double* prow = probs->data.data() + static_cast<std::size_t>(r) * n;
            for (int j = 0; j < n; ++j) prow[j] = std::exp(row[j] - lse);
        }
    }
    return losses;
}

Tape::Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return static_cast<Var>(nodes_.size()) - 1;
}

Tape::Var Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, {});
}

void Tape::ensure_grad(Var v) {
    if (nodes_[v].grad.data.empty()) nodes_[v].grad = Tensor(nodes_[v].value.shape);
}

void Tape::accum(Var v, const Tensor& g) {
    if (!nodes_[v].requires_grad) return;
    ensure_grad(v);
    auto& dst = nodes_[v].grad.data;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g.data[i];
}

Tape::Var Tape::matmul(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.cols() != tb.rows())
        throw std::invalid_argument("matmul: inner dimensions disagree " + ta.shape_str() + " vs " +
                                    tb.shape_str());
    Tensor out({ta.rows(), tb.cols()});
    as_mat(out) = as_mat(ta) * as_mat(tb);
    bool rg = requires_grad(a) || requires_grad(b);
    Var v = push(std::move(out), rg, {});
    if (rg)
        nodes_[v].back = [v, a, b](Tape& t) {
            const Tensor& gt = t.nodes_[v].grad;
            CMatMap g = as_mat(gt);
            if (t.requires_grad(a)) {
                t.ensure_grad(a);
                as_mat(t.nodes_[a].grad) += g * as_mat(t.val(b)).transpose();
            }
            if (t.requires_grad(b)) {
                t.ensure_grad(b);
                as_mat(t.nodes_[b].grad) += as_mat(t.val(a)).transpose() * g;
            }
        };
    return v;
}

Tape::Var Tape::transpose(Var a) {
    const Tensor& ta = val(a);
    Tensor out({ta.cols(), ta.rows()});
    as_mat(out) = as_mat(ta).transpose();
    Var v = push(std::move(out), requires_grad(a), {});
    if (requires_grad(a))
        nodes_[v].back = [v, a](Tape& t) {
            t.ensure_grad(a);
            as_mat(t.nodes_[a].grad) += as_mat(t.nodes_[v].grad).transpose();
        };
    return v;
}

Tape::Var Tape::add(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.same_shape(tb)) throw std::invalid_argument("add: shape mismatch");
    Tensor out(ta.shape);
    for (std::int64_t i = 0; i < ta.size(); ++i) out.data[i] = ta.data[i] + tb.data[i];
    bool rg = requires_grad(a) || requires_grad(b);
    Var v = push(std::move(out), rg, {});
    if (rg)
        nodes_[v].back = [v, a, b](Tape& t) {
            t.accum(a, t.nodes_[v].grad);
            t.accum(b, t.nodes_[v].grad);
        };
    return v;
}

Tape::Var Tape::add_rowvec(Var a, Var bias) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(bias);
    if (tb.size() != ta.cols()) throw std::invalid_argument("add_rowvec: bias width mismatch");
    Tensor out(ta.shape);
    const int m = ta.rows(), n = ta.cols();
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c)
            out.data[static_cast<std::size_t>(r) * n + c] =
                ta.data[static_cast<std::size_t>(r) * n + c] + tb.data[c];
    bool rg = requires_grad(a) || requires_grad(bias);
    Var v = push(std::move(out), rg, {});
    if (rg)
        nodes_[v].back = [v, a, bias, m, n](Tape& t) {
            const Tensor& g = t.nodes_[v].grad;
            t.accum(a, g);
            if (t.requires_grad(bias)) {
                t.ensure_grad(bias);
                auto& db = t.nodes_[bias].grad.data;
                for (int r = 0; r < m; ++r)
                    for (int c = 0; c < n; ++c) db[c] += g.data[static_cast<std::size_t>(r) * n + c];
            }
        };
    return v;
}

Tape::Var Tape::mul_elem(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.same_shape(tb)) throw std::invalid_argument("mul_elem: shape mismatch");
    Tensor out(ta.shape);
    for (std::int64_t i = 0; i < ta.size(); ++i) out.data[i] = ta.data[i] * tb.data[i];
    bool rg = requires_grad(a) || requires_grad(b);
    Var v = push(std::move(out), rg, {});
    if (rg)
        nodes_[v].back = [v, a, b](Tape& t) {
            const Tensor& g = t.nodes_[v].grad;
            if (t.requires_grad(a)) {
                t.ensure_grad(a);
                auto& da = t.nodes_[a].grad.data;
                const auto& vb = t.val(b).data;
                for (std::size_t i = 0; i < da.size(); ++i) da[i] += g.data[i] * vb[i];
            }
            if (t.requires_grad(b)) {
                t.ensure_grad(b);
                auto& db = t.nodes_[b].grad.data;
                const auto& va = t.val(a).data;
                for (std::size_t i = 0; i < db.size(); ++i) db[i] += g.data[i] * va[i];
            }
        };
    return v;
}

Tape::Var Tape::scale(Var a, double c) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape);
    for (std::int64_t i = 0; i < ta.size(); ++i) out.data[i] = c * ta.data[i];
    Var v = push(std::move(out), requires_grad(a), {});
    if (requires_grad(a))
        nodes_[v].back = [v, a, c](Tape& t) {
            t.ensure_grad(a);
            auto& da = t.nodes_[a].grad.data;
            const auto& g = t.nodes_[v].grad.data;
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += c * g[i];
        };
    return v;
}

Tape::Var Tape::scale_var(Var a, Var s) {
    const Tensor& ta = val(a);
    if (val(s).size() != 1) throw std::invalid_argument("scale_var: scale must be scalar");
    const double sv = val(s).data[0];
    Tensor out(ta.shape);
    for (std::int64_t i = 0; i < ta.size(); ++i) out.data[i] = sv * ta.data[i];
    bool rg = requires_grad(a) || requires_grad(s);
    Var v = push(std::move(out), rg, {});
    if (rg)
        nodes_[v].back = [v, a, s, sv](Tape& t) {
            const auto& g = t.nodes_[v].grad.data;
            if (t.requires_grad(a)) {
                t.ensure_grad(a);
                auto& da = t.nodes_[a].grad.data;
                for (std::size_t i = 0; i < da.size(); ++i) da[i] += sv * g[i];
            }
            if (t.requires_grad(s)) {
                t.ensure_grad(s);
                const auto& va = t.val(a).data;
                double acc = 0.0;
                for (std::size_t i = 0; i < va.size(); ++i) acc += va[i] * g[i];
                t.nodes_[s].grad.data[0] += acc;
            }
        };
    return v;
}

Tape::Var Tape::exp_elem(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape);
    for (std::int64_t i = 0; i < ta.size(); ++i) out.data[i] = std::exp(ta.data[i]);
    Var v = push(std::move(out), requires_grad(a), {});
    if (requires_grad(a))
        nodes_[v].back = [v, a](Tape& t) {
            t.ensure_grad(a);
            auto& da = t.nodes_[a].grad.data;
            const auto& g = t.nodes_[v].grad.data;
            const auto& y = t.nodes_[v].value.data;
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += y[i] * g[i];
        };
    return v;
}

Tape::Var Tape::gelu(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape);
    for (std::int64_t i = 0; i < ta.size(); ++i) out.data[i] = gelu_fwd(ta.data[i]);
    Var v = push(std::move(out), requires_grad(a), {});
    if (requires_grad(a))
        nodes_[v].back = [v, a](Tape& t) {
            t.ensure_grad(a);
            auto& da = t.nodes_[a].grad.data;
            const auto& g = t.nodes_[v].grad.data;
            const auto& x = t.val(a).data;
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += gelu_deriv(x[i]) * g[i];
        };
    return v;
}

Tape::Var Tape::layernorm(Var x, Var gain, Var bias, double eps) {
    const Tensor& tx = val(x);
    const int m = tx.rows(), n = tx.cols();
    if (val(gain).size() != n || val(bias).size() != n)
        throw std::invalid_argument("layernorm: gain/bias width mismatch");
    Tensor out({m, n});
    // Cache normalized rows and inverse stddev for backward.
    auto xhat = std::make_shared<Tensor>(Tensor({m, n}));
    auto inv_std = std::make_shared<std::vector<double>>(m);
    const auto& gv = val(gain).data;
    const auto& bv = val(bias).data;
    for (int r = 0; r < m; ++r) {
        const double* row = tx.data.data() + static_cast<std::size_t>(r) * n;
        double mean = 0.0;
        for (int c = 0; c < n; ++c) mean += row[c];
        mean /= n;
        double var = 0.0;
        for (int c = 0; c < n; ++c) var += (row[c] - mean) * (row[c] - mean);
        var /= n;
        double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (int c = 0; c < n; ++c) {
            double xh = (row[c] - mean) * is;
            xhat->data[static_cast<std::size_t>(r) * n + c] = xh;
            out.data[static_cast<std::size_t>(r) * n + c] = gv[c] * xh + bv[c];
        }
    }
    bool rg = requires_grad(x) || requires_grad(gain) || requires_grad(bias);
    Var v = push(std::move(out), rg, {});
    if (rg)
        nodes_[v].back = [v, x, gain, bias, m, n, xhat, inv_std](Tape& t) {
            const auto& g = t.nodes_[v].grad.data;
            const auto& gv = t.val(gain).data;
            if (t.requires_grad(gain)) {
                t.ensure_grad(gain);
                auto& dg = t.nodes_[gain].grad.data;
                for (int r = 0; r < m; ++r)
                    for (int c = 0; c < n; ++c)
                        dg[c] += g[static_cast<std::size_t>(r) * n + c] *
                                 xhat->data[static_cast<std::size_t>(r) * n + c];
            }
            if (t.requires_grad(bias)) {
                t.ensure_grad(bias);
                auto& db = t.nodes_[bias].grad.data;
                for (int r = 0; r < m; ++r)
                    for (int c = 0; c < n; ++c) db[c] += g[static_cast<std::size_t>(r) * n + c];
            }
            if (t.requires_grad(x)) {
                t.ensure_grad(x);
                auto& dx = t.nodes_[x].grad.data;
                for (int r = 0; r < m; ++r) {
                    const std::size_t off = static_cast<std::size_t>(r) * n;
                    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                    for (int c = 0; c < n; ++c) {
                        double dxh = g[off + c] * gv[c];
                        mean_dxhat += dxh;
                        mean_dxhat_xhat += dxh * xhat->data[off + c];
                    }
                    mean_dxhat /= n;
                    mean_dxhat_xhat /= n;
                    for (int c = 0; c < n; ++c) {
                        double dxh = g[off + c] * gv[c];
                        dx[off + c] += (*inv_std)[r] *
                                       (dxh - mean_dxhat - xhat->data[off + c] * mean_dxhat_xhat);
                    }
                }
            }
        };
    return v;
}

Tape::Var Tape::attention(Var q, Var k, Var v_in, int n_heads) {
    const Tensor& tq = val(q);
    const Tensor& tk = val(k);
    const Tensor& tv = val(v_in);
    const int L = tq.rows(), dm = tq.cols();
    if (tk.rows() != L || tv.rows() != L || tk.cols() != dm || tv.cols() != dm)
        throw std::invalid_argument("attention: q/k/v shape mismatch");
    if (dm % n_heads != 0) throw std::invalid_argument("attention: width not divisible by heads");
    const int hd = dm / n_heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(hd));

    Tensor out({L, dm});
    // Cache softmax matrices, one L x L block per head.
    auto probs = std::make_shared<std::vector<Mat>>();
    probs->reserve(n_heads);
    CMatMap mq = as_mat(tq), mk = as_mat(tk), mv = as_mat(tv);
    MatMap mo = as_mat(out);
    for (int h = 0; h < n_heads; ++h) {
        Mat scores = mq.middleCols(h * hd, hd) * mk.middleCols(h * hd, hd).transpose() * inv_sqrt_d;
        for (int r = 0; r < L; ++r) {
            double mx = scores.row(r).maxCoeff();
            double sum = 0.0;
            for (int c = 0; c < L; ++c) {
                double e = std::exp(scores(r, c) - mx);
                scores(r, c) = e;
                sum += e;
            }
            scores.row(r) /= sum;
        }
        mo.middleCols(h * hd, hd) = scores * mv.middleCols(h * hd, hd);
        probs->push_back(std::move(scores));
    }
    bool rg = requires_grad(q) || requires_grad(k) || requires_grad(v_in);
    Var v = push(std::move(out), rg, {});
    if (rg)
        nodes_[v].back = [v, q, k, v_in, n_heads, hd, inv_sqrt_d, L, probs](Tape& t) {
            const Tensor& gt = t.nodes_[v].grad;
            CMatMap g = as_mat(gt);
            CMatMap mq = as_mat(t.val(q));
            CMatMap mk = as_mat(t.val(k));
            CMatMap mv = as_mat(t.val(v_in));
            t.ensure_grad(q);
            t.ensure_grad(k);
            t.ensure_grad(v_in);
            MatMap dq = as_mat(t.nodes_[q].grad);
            MatMap dk = as_mat(t.nodes_[k].grad);
            MatMap dv = as_mat(t.nodes_[v_in].grad);
            for (int h = 0; h < n_heads; ++h) {
                const Mat& P = (*probs)[h];
                Mat dO = g.middleCols(h * hd, hd);
                dv.middleCols(h * hd, hd) += P.transpose() * dO;
                Mat dP = dO * mv.middleCols(h * hd, hd).transpose();
                Mat dS(L, L);
                for (int r = 0; r < L; ++r) {
                    double dot = P.row(r).dot(dP.row(r));
                    for (int c = 0; c < L; ++c) dS(r, c) = P(r, c) * (dP(r, c) - dot);
                }
                dq.middleCols(h * hd, hd) += dS * mk.middleCols(h * hd, hd) * inv_sqrt_d;
                dk.middleCols(h * hd, hd) += dS.transpose() * mq.middleCols(h * hd, hd) * inv_sqrt_d;
            }
        };
    return v;
}

Tape::Var Tape::gather_rows(Var a, std::vector<int> rows) {
    const Tensor& ta = val(a);
    const int n = ta.cols();
    Tensor out({static_cast<int>(rows.size()), n});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int r = rows[i];
        if (r < 0 || r >= ta.rows()) throw std::out_of_range("gather_rows: index out of range");
        for (int c = 0; c < n; ++c) out.data[i * n + c] = ta.data[static_cast<std::size_t>(r) * n + c];
    }
    Var v = push(std::move(out), requires_grad(a), {});
    if (requires_grad(a))
        nodes_[v].back = [v, a, rows = std::move(rows), n](Tape& t) {
            t.ensure_grad(a);
            auto& da = t.nodes_[a].grad.data;
            const auto& g = t.nodes_[v].grad.data;
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (int c = 0; c < n; ++c)
                    da[static_cast<std::size_t>(rows[i]) * n + c] += g[i * n + c];
        };
    return v;
}

Tape::Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
    const int n = val(parts[0]).cols();
    int m = 0;
    bool rg = false;
    for (Var p : parts) {
        if (val(p).cols() != n) throw std::invalid_argument("concat_rows: width mismatch");
        m += val(p).rows();
        rg = rg || requires_grad(p);
    }
    Tensor out({m, n});
    std::size_t off = 0;
    for (Var p : parts) {
        const auto& src = val(p).data;
        std::copy(src.begin(), src.end(), out.data.begin() + off);
        off += src.size();
    }
    Var v = push(std::move(out), rg, {});
    if (rg)
        nodes_[v].back = [v, parts](Tape& t) {
            const auto& g = t.nodes_[v].grad.data;
            std::size_t off = 0;
            for (Var p : parts) {
                std::size_t sz = t.val(p).data.size();
                if (t.requires_grad(p)) {
                    t.ensure_grad(p);
                    auto& dp = t.nodes_[p].grad.data;
                    for (std::size_t i = 0; i < sz; ++i) dp[i] += g[off + i];
                }
                off += sz;
            }
        };
    return v;
}

Tape::Var Tape::l2_normalize_rows(Var a) {
    const Tensor& ta = val(a);
    const int m = ta.rows(), n = ta.cols();
    Tensor out({m, n});
    auto norms = std::make_shared<std::vector<double>>(m);
    for (int r = 0; r < m; ++r) {
        const double* row = ta.data.data() + static_cast<std::size_t>(r) * n;
        double sq = 0.0;
        for (int c = 0; c < n; ++c) sq += row[c] * row[c];
        double norm = std::sqrt(sq);
        if (norm < 1e-300) throw std::domain_error("l2_normalize_rows: zero-norm row");
        (*norms)[r] = norm;
        for (int c = 0; c < n; ++c) out.data[static_cast<std::size_t>(r) * n + c] = row[c] / norm;
    }
    Var v = push(std::move(out), requires_grad(a), {});
    if (requires_grad(a))
        nodes_[v].back = [v, a, m, n, norms](Tape& t) {
            t.ensure_grad(a);
            auto& da = t.nodes_[a].grad.data;
            const auto& g = t.nodes_[v].grad.data;
            const auto& y = t.nodes_[v].value.data;
            for (int r = 0; r < m; ++r) {
                const std::size_t off = static_cast<std::size_t>(r) * n;
                double dot = 0.0;
                for (int c = 0; c < n; ++c) dot += y[off + c] * g[off + c];
                for (int c = 0; c < n; ++c)
                    da[off + c] += (g[off + c] - y[off + c] * dot) / (*norms)[r];
            }
        };
    return v;
}

Tape::Var Tape::softmax_ce_rows(Var logits, std::vector<int> targets) {
    auto probs = std::make_shared<Tensor>();
    std::vector<double> losses = softmax_ce_rows_values(val(logits), targets, probs.get());
    const int m = val(logits).rows(), n = val(logits).cols();
    Tensor out({m}, std::move(losses));
    Var v = push(std::move(out), requires_grad(logits), {});
    if (requires_grad(logits))
        nodes_[v].back = [v, logits, targets = std::move(targets), m, n, probs](Tape& t) {
            t.ensure_grad(logits);
            auto& dl = t.nodes_[logits].grad.data;
            const auto& g = t.nodes_[v].grad.data;
            for (int r = 0; r < m; ++r) {
                const std::size_t off = static_cast<std::size_t>(r) * n;
                for (int c = 0; c < n; ++c) dl[off + c] += g[r] * probs->data[off + c];
                dl[off + targets[r]] -= g[r];
            }
        };
    return v;
}

Tape::Var Tape::mean_all(Var a) {
    const Tensor& ta = val(a);
    if (ta.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
    double acc = 0.0;
    for (double x : ta.data) acc += x;
    const double inv_n = 1.0 / static_cast<double>(ta.size());
    Var v = push(Tensor::scalar(acc * inv_n), requires_grad(a), {});
    if (requires_grad(a))
        nodes_[v].back = [v, a, inv_n](Tape& t) {
            t.ensure_grad(a);
            auto& da = t.nodes_[a].grad.data;
            const double g = t.nodes_[v].grad.data[0] * inv_n;
            for (auto& x : da) x += g;
        };
    return v;
}

Tape::Var Tape::masked_mean(Var a, std::vector<std::uint8_t> mask) {
    const Tensor& ta = val(a);
    if (static_cast<std::int64_t>(mask.size()) != ta.size())
        throw std::invalid_argument("masked_mean: mask length mismatch");
    std::int64_t count = 0;
    double acc = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) {
            acc += ta.data[i];
            ++count;
        }
    if (count == 0) throw std::invalid_argument("masked_mean: all-zero selection mask");
    const double inv_c = 1.0 / static_cast<double>(count);
    Var v = push(Tensor::scalar(acc * inv_c), requires_grad(a), {});
    if (requires_grad(a))
        nodes_[v].back = [v, a, mask = std::move(mask), inv_c](Tape& t) {
            t.ensure_grad(a);
            auto& da = t.nodes_[a].grad.data;
            const double g = t.nodes_[v].grad.data[0] * inv_c;
            for (std::size_t i = 0; i < mask.size(); ++i)
                if (mask[i]) da[i] += g;
        };
    return v;
}

Tape::Var Tape::weighted_sum_scalars(const std::vector<std::pair<double, Var>>& terms, double c0) {
    double acc = c0;
    bool rg = false;
    for (const auto& [w, s] : terms) {
        if (val(s).size() != 1) throw std::invalid_argument("weighted_sum_scalars: non-scalar term");
        acc += w * val(s).data[0];
        rg = rg || requires_grad(s);
    }
    Var v = push(Tensor::scalar(acc), rg, {});
    if (rg)
        nodes_[v].back = [v, terms](Tape& t) {
            const double g = t.nodes_[v].grad.data[0];
            for (const auto& [w, s] : terms) {
                if (!t.requires_grad(s)) continue;
                t.ensure_grad(s);
                t.nodes_[s].grad.data[0] += w * g;
            }
        };
    return v;
}

void Tape::backward(Var root) {
    if (val(root).size() != 1) throw std::logic_error("backward: root must be scalar");
    if (!requires_grad(root)) throw std::logic_error("backward: root does not require grad");
    ensure_grad(root);
    nodes_[root].grad.data[0] = 1.0;
    for (Var v = root; v >= 0; --v) {
        Node& node = nodes_[v];
        if (!node.requires_grad || node.grad.data.empty() || !node.back) continue;
        node.back(*this);
    }
}

}  // namespace structalign
