#include "structalign/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "structalign/errors.hpp"

namespace structalign {

double masked_log_prob(const ModelBundle& bundle, const std::vector<int>& sequence, int position,
                       int residue) {
    if (position < 0 || position >= static_cast<int>(sequence.size()))
        throw DataError("masked_log_prob: position out of range");
    if (residue < 0 || residue >= kNumResidues)
        throw DataError("masked_log_prob: residue id out of alphabet");
    std::vector<int> ids = sequence;
    ids[position] = kMaskId;
    Tensor logits = mlm_logits_values(bundle, ids);
    // normalize over the 20-residue alphabet only
    const double* r = logits.data.data() + static_cast<std::size_t>(position) * logits.cols();
    double mx = r[0];
    for (int c = 1; c < kNumResidues; ++c) mx = std::max(mx, r[c]);
    double sum = 0.0;
    for (int c = 0; c < kNumResidues; ++c) sum += std::exp(r[c] - mx);
    return r[residue] - (mx + std::log(sum));
}

double pseudo_perplexity_from(const std::function<double(int)>& logprob_of_position, int length) {
    if (length < 1) throw DataError("pseudo_perplexity: empty sequence");
    double nll = 0.0;
    for (int i = 0; i < length; ++i) nll -= logprob_of_position(i);
    return std::exp(nll / static_cast<double>(length));
}

double pseudo_perplexity(const ModelBundle& bundle, const std::vector<int>& sequence) {
    return pseudo_perplexity_from(
        [&](int i) { return masked_log_prob(bundle, sequence, i, sequence[i]); },
        static_cast<int>(sequence.size()));
}

double zero_shot_score(const ModelBundle& bundle, const std::vector<int>& wild_type,
                       const std::vector<Substitution>& variant) {
    double score = 0.0;
    for (const auto& sub : variant) {
        if (sub.position < 0 || sub.position >= static_cast<int>(wild_type.size()))
            throw DataError("zero_shot_score: position out of range");
        score += masked_log_prob(bundle, wild_type, sub.position, sub.residue) -
                 masked_log_prob(bundle, wild_type, sub.position, wild_type[sub.position]);
    }
    return score;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * (i + j) + 1.0;   // 1-based average rank of the tie block
        for (int k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DataError("spearman: length mismatch");
    const int n = static_cast<int>(x.size());
    if (n < 2) throw DataError("spearman: need at least two points");
    auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("spearman: zero variance in ranks");
    return sxy / std::sqrt(sxx * syy);
}

void export_embeddings(const ModelBundle& bundle, const std::vector<ProteinRecord>& corpus,
                       const std::filesystem::path& out_path) {
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path.string());
    out.precision(17);
    const int d = bundle.config.d_model;
    out << "protein_id,index,symbol,ss";
    for (int c = 0; c < d; ++c) out << ",e" << c;
    out << "\n";
    for (const auto& rec : corpus) {
        if (!rec.has_ss())
            throw DataError("export_embeddings: record '" + rec.id + "' has no ss labels");
        Tensor h = encode_values(bundle, rec.sequence);
        for (int i = 0; i < rec.length(); ++i) {
            out << rec.id << "," << i << "," << residue_symbol(rec.sequence[i]) << ","
                << ss_char(rec.ss_labels[i]);
            for (int c = 0; c < d; ++c) out << "," << h.at(i, c);
            out << "\n";
        }
    }
}

std::vector<Substitution> parse_variant(const std::string& text, const std::vector<int>& wild_type) {
    std::vector<Substitution> subs;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('+', start);
        if (end == std::string::npos) end = text.size();
        std::string tok = text.substr(start, end - start);
        if (tok.empty()) throw DataError("variant: empty substitution token in '" + text + "'");

        std::size_t p = 0;
        int wt_letter = -1;
        if (std::isalpha(static_cast<unsigned char>(tok[0]))) {
            wt_letter = residue_id(tok[0]);
            p = 1;
        }
        std::size_t digits_start = p;
        while (p < tok.size() && std::isdigit(static_cast<unsigned char>(tok[p]))) ++p;
        if (p == digits_start || p + 1 != tok.size())
            throw DataError("variant: cannot parse substitution '" + tok + "'");
        const int pos1 = std::stoi(tok.substr(digits_start, p - digits_start));
        if (pos1 < 1 || pos1 > static_cast<int>(wild_type.size()))
            throw DataError("variant: position " + std::to_string(pos1) + " outside sequence");
        Substitution sub;
        sub.position = pos1 - 1;
        sub.residue = residue_id(tok[p]);
        if (wt_letter >= 0 && wild_type[sub.position] != wt_letter)
            throw DataError("variant: wild-type letter mismatch in '" + tok + "'");
        subs.push_back(sub);
        start = end + 1;
        if (end == text.size()) break;
    }
    if (subs.empty()) throw DataError("variant: no substitutions in '" + text + "'");
    return subs;
}

}  // namespace structalign
