#include "codectx/evalstat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace codectx::evalstat {

double f1_from_pr(double precision, double recall) {
    double s = precision + recall;
    return s > 0 ? 2.0 * precision * recall / s : 0.0;
}

Prf1 prf1(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size() || predictions.empty())
        throw LengthMismatch("prf1 needs equal-length non-empty inputs");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == 1 && labels[i] == 1) ++tp;
        else if (predictions[i] == 1 && labels[i] == 0) ++fp;
        else if (predictions[i] == 0 && labels[i] == 1) ++fn;
    }
    Prf1 r;
    r.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = f1_from_pr(r.precision, r.recall);
    return r;
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels, int k) {
    if (predictions.size() != labels.size() || predictions.empty())
        throw LengthMismatch("macro_f1 needs equal-length non-empty inputs");
    if (k < 2) throw std::invalid_argument("macro_f1 needs k >= 2 classes");
    double sum = 0;
    for (int c = 0; c < k; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            bool p = predictions[i] == c, g = labels[i] == c;
            if (p && g) ++tp;
            else if (p) ++fp;
            else if (g) ++fn;
        }
        double prec = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        double rec = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        sum += f1_from_pr(prec, rec);
    }
    return sum / k;
}

// ---------------------------------------------------------------------------
// Generation metrics
// ---------------------------------------------------------------------------

namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const Tokens& toks, std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    if (toks.size() < n) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i)
        ++counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
    return counts;
}

} // namespace

double bleu4(const Tokens& candidate, const Tokens& reference) {
    if (candidate.empty()) return 0.0;
    double log_sum = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        auto c = ngram_counts(candidate, n);
        auto r = ngram_counts(reference, n);
        std::size_t matched = 0, total = 0;
        for (const auto& [gram, cnt] : c) {
            total += cnt;
            auto it = r.find(gram);
            if (it != r.end()) matched += std::min(cnt, it->second);
        }
        double p;
        if (n == 1) {
            if (matched == 0) return 0.0;
            p = static_cast<double>(matched) / static_cast<double>(total);
        } else if (matched == 0) {
            p = static_cast<double>(matched + 1) / static_cast<double>(total + 1); // add-one
        } else {
            p = static_cast<double>(matched) / static_cast<double>(total);
        }
        log_sum += std::log(p);
    }
    double bp = candidate.size() >= reference.size()
                    ? 1.0
                    : std::exp(1.0 - static_cast<double>(reference.size()) /
                                         static_cast<double>(candidate.size()));
    return 100.0 * bp * std::exp(log_sum / 4.0);
}

double rouge_l(const Tokens& candidate, const Tokens& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    const std::size_t n = candidate.size(), m = reference.size();
    std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1
                                                          : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    double lcs = static_cast<double>(prev[m]);
    if (lcs == 0) return 0.0;
    double p = lcs / static_cast<double>(n);
    double r = lcs / static_cast<double>(m);
    return 2.0 * p * r / (p + r);
}

std::string stem(std::string word) {
    for (char& c : word)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    auto ends = [&](std::string_view suf) { return word.ends_with(suf); };
    auto chop = [&](std::size_t n) { word.resize(word.size() - n); };
    auto undouble = [&]() {
        std::size_t n = word.size();
        if (n >= 2 && word[n - 1] == word[n - 2]) {
            char c = word[n - 1];
            if (c != 'a' && c != 'e' && c != 'i' && c != 'o' && c != 'u' && c != 'l' && c != 's')
                word.pop_back();
        }
    };
    if (ends("ies") && word.size() > 4) { chop(3); word.push_back('y'); }
    else if (ends("sses")) chop(2);
    else if ((ends("ches") || ends("shes") || ends("xes") || ends("zes")) && word.size() > 4) chop(2);
    else if (ends("s") && !ends("ss") && !ends("us") && word.size() > 3) chop(1);
    if (ends("ing") && word.size() > 5) { chop(3); undouble(); }
    else if (ends("ed") && word.size() > 4) { chop(2); undouble(); }
    if (ends("ly") && word.size() > 4) chop(2);
    return word;
}

double meteor_lite(const Tokens& candidate, const Tokens& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    std::vector<int> cand_to_ref(candidate.size(), -1);
    std::vector<bool> ref_used(reference.size(), false);

    auto align = [&](auto&& eq) {
        for (std::size_t i = 0; i < candidate.size(); ++i) {
            if (cand_to_ref[i] != -1) continue;
            for (std::size_t j = 0; j < reference.size(); ++j) {
                if (!ref_used[j] && eq(candidate[i], reference[j])) {
                    cand_to_ref[i] = static_cast<int>(j);
                    ref_used[j] = true;
                    break;
                }
            }
        }
    };
    align([](const std::string& a, const std::string& b) { return a == b; });
    align([](const std::string& a, const std::string& b) { return stem(a) == stem(b); });

    std::size_t matches = 0, chunks = 0;
    int prev_ref = -2;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        if (cand_to_ref[i] == -1) continue;
        ++matches;
        if (cand_to_ref[i] != prev_ref + 1) ++chunks;
        prev_ref = cand_to_ref[i];
    }
    if (matches == 0) return 0.0;
    double m = static_cast<double>(matches);
    double p = m / static_cast<double>(candidate.size());
    double r = m / static_cast<double>(reference.size());
    double fmean = 10.0 * p * r / (r + 9.0 * p);
    double frag = static_cast<double>(chunks) / m;
    return fmean * (1.0 - 0.5 * frag * frag * frag);
}

// ---------------------------------------------------------------------------
// Rank statistics
// ---------------------------------------------------------------------------

namespace {

// mid-ranks of |values|
std::vector<double> midranks(const std::vector<double>& abs_values) {
    const std::size_t n = abs_values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return abs_values[a] < abs_values[b]; });
    std::vector<double> ranks(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_values[order[j + 1]] == abs_values[order[i]]) ++j;
        double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

double normal_sf_two_sided(double z_abs) {
    return std::erfc(z_abs / std::sqrt(2.0)); // 2*(1 - Phi(|z|))
}

} // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty())
        throw LengthMismatch("wilcoxon needs equal-length non-empty inputs");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    WilcoxonResult res;
    res.n_effective = diffs.size();
    if (diffs.empty()) return res; // all differences zero: undefined, not p = 1

    std::vector<double> abs_d(diffs.size());
    for (std::size_t i = 0; i < diffs.size(); ++i) abs_d[i] = std::abs(diffs[i]);
    std::vector<double> ranks = midranks(abs_d);
    for (std::size_t i = 0; i < diffs.size(); ++i)
        (diffs[i] > 0 ? res.w_plus : res.w_minus) += ranks[i];

    const std::size_t n = diffs.size();
    if (n <= 25) {
        // Exact distribution of W+ conditional on the observed ranks. Doubled
        // mid-ranks are integers, so a subset-sum table enumerates all 2^n
        // sign assignments exactly (counts stay below 2^53).
        std::vector<long long> dr(n);
        long long total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            dr[i] = std::llround(2.0 * ranks[i]);
            total += dr[i];
        }
        std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
        count[0] = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            for (long long s = total - dr[i]; s >= 0; --s)
                if (count[static_cast<std::size_t>(s)] != 0.0)
                    count[static_cast<std::size_t>(s + dr[i])] += count[static_cast<std::size_t>(s)];
        long long w2 = std::llround(2.0 * res.w_plus);
        double below = 0, above = 0, all = std::ldexp(1.0, static_cast<int>(n));
        for (long long s = 0; s <= total; ++s) {
            if (s <= w2) below += count[static_cast<std::size_t>(s)];
            if (s >= w2) above += count[static_cast<std::size_t>(s)];
        }
        res.p_two_sided = std::min(1.0, 2.0 * std::min(below, above) / all);
        res.method = WilcoxonResult::Method::exact;
        return res;
    }

    double nd = static_cast<double>(n);
    double mu = nd * (nd + 1.0) / 4.0;
    double tie_term = 0;
    {
        std::vector<double> sorted(abs_d);
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            double t = static_cast<double>(j - i + 1);
            tie_term += (t * t * t - t);
            i = j + 1;
        }
    }
    double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0) return res; // completely tied: no sampling variance left
    double centered = res.w_plus - mu;
    double cc = centered > 0 ? -0.5 : centered < 0 ? 0.5 : 0.0; // continuity, toward the mean
    double z = (centered + cc) / std::sqrt(var);
    res.p_two_sided = std::min(1.0, normal_sf_two_sided(std::abs(z)));
    res.method = WilcoxonResult::Method::normal_approx;
    return res;
}

char magnitude_letter(Magnitude m) {
    switch (m) {
    case Magnitude::negligible: return 'N';
    case Magnitude::small: return 'S';
    case Magnitude::medium: return 'M';
    case Magnitude::large: return 'L';
    }
    return 'N';
}

Magnitude bin_magnitude(double abs_delta) {
    if (abs_delta < 0.147) return Magnitude::negligible;
    if (abs_delta < 0.33) return Magnitude::small;
    if (abs_delta < 0.474) return Magnitude::medium;
    return Magnitude::large;
}

EffectSize cliffs_delta(std::span<const double> group_a, std::span<const double> group_b) {
    if (group_a.empty() || group_b.empty()) throw EmptyGroup("cliffs_delta needs non-empty groups");
    long long more = 0, less = 0;
    for (double x : group_a)
        for (double y : group_b) {
            if (x > y) ++more;
            else if (x < y) ++less;
        }
    EffectSize e;
    e.delta = static_cast<double>(more - less) /
              (static_cast<double>(group_a.size()) * static_cast<double>(group_b.size()));
    e.magnitude = bin_magnitude(std::abs(e.delta));
    return e;
}

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw LengthMismatch("kendall_tau_b needs equal-length inputs");
    const std::size_t n = x.size();
    if (n < 2) throw LengthMismatch("kendall_tau_b needs n >= 2");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });

    auto pair_sum = [](const std::vector<double>& group_sizes) {
        double s = 0;
        for (double t : group_sizes) s += t * (t - 1.0) / 2.0;
        return s;
    };

    std::vector<double> x_groups, y_groups, xy_groups;
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
            x_groups.push_back(static_cast<double>(j - i + 1));
            // joint ties inside the x group
            std::size_t k = i;
            while (k <= j) {
                std::size_t l = k;
                while (l + 1 <= j && y[idx[l + 1]] == y[idx[k]]) ++l;
                xy_groups.push_back(static_cast<double>(l - k + 1));
                k = l + 1;
            }
            i = j + 1;
        }
        std::vector<double> ys(y.begin(), y.end());
        std::sort(ys.begin(), ys.end());
        std::size_t p = 0;
        while (p < n) {
            std::size_t q = p;
            while (q + 1 < n && ys[q + 1] == ys[p]) ++q;
            y_groups.push_back(static_cast<double>(q - p + 1));
            p = q + 1;
        }
    }

    // discordant pairs = strict inversions in y after sorting by (x, y)
    std::vector<double> seq(n), tmp(n);
    for (std::size_t i = 0; i < n; ++i) seq[i] = y[idx[i]];
    double discordant = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            std::size_t mid = lo + width, hi = std::min(lo + 2 * width, n);
            std::size_t a = lo, b = mid, out = lo;
            while (a < mid && b < hi) {
                if (seq[b] < seq[a]) {
                    discordant += static_cast<double>(mid - a);
                    tmp[out++] = seq[b++];
                } else {
                    tmp[out++] = seq[a++];
                }
            }
            while (a < mid) tmp[out++] = seq[a++];
            while (b < hi) tmp[out++] = seq[b++];
            std::copy(tmp.begin() + static_cast<long>(lo), tmp.begin() + static_cast<long>(hi),
                      seq.begin() + static_cast<long>(lo));
        }
    }

    double n0 = static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 2.0;
    double n1 = pair_sum(x_groups);
    double n2 = pair_sum(y_groups);
    double n3 = pair_sum(xy_groups);
    double denom_x = n0 - n1, denom_y = n0 - n2;
    if (denom_x <= 0 || denom_y <= 0) return std::nullopt; // a side is entirely tied

    double concordant = n0 - n1 - n2 + n3 - discordant;
    return (concordant - discordant) / std::sqrt(denom_x * denom_y);
}

double kendall_w(const std::vector<std::vector<double>>& rankings_by_rater) {
    const std::size_t m = rankings_by_rater.size();
    if (m < 2) throw DegenerateInput("kendall_w needs at least 2 raters");
    const std::size_t n = rankings_by_rater.front().size();
    if (n < 2) throw DegenerateInput("kendall_w needs at least 2 items");
    for (const auto& r : rankings_by_rater)
        if (r.size() != n) throw LengthMismatch("raters must rank the same items");

    std::vector<double> rank_sums(n, 0.0);
    double tie_sum = 0;
    for (const auto& r : rankings_by_rater) {
        for (std::size_t j = 0; j < n; ++j) rank_sums[j] += r[j];
        std::vector<double> sorted(r);
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
            double t = static_cast<double>(j - i + 1);
            tie_sum += t * t * t - t;
            i = j + 1;
        }
    }
    double mean = std::accumulate(rank_sums.begin(), rank_sums.end(), 0.0) / static_cast<double>(n);
    double s = 0;
    for (double rs : rank_sums) s += (rs - mean) * (rs - mean);
    double md = static_cast<double>(m), nd = static_cast<double>(n);
    double denom = md * md * (nd * nd * nd - nd) - md * tie_sum;
    if (denom <= 0) throw DegenerateInput("every rater tied all items");
    return 12.0 * s / denom;
}

WinTieLoss win_tie_loss(std::span<const double> ranks_system, std::span<const double> ranks_baseline) {
    if (ranks_system.size() != ranks_baseline.size() || ranks_system.empty())
        throw LengthMismatch("win_tie_loss needs equal-length non-empty inputs");
    std::size_t win = 0, tie = 0, loss = 0;
    for (std::size_t i = 0; i < ranks_system.size(); ++i) {
        if (ranks_system[i] < ranks_baseline[i]) ++win;
        else if (ranks_system[i] == ranks_baseline[i]) ++tie;
        else ++loss;
    }
    double n = static_cast<double>(ranks_system.size());
    return {100.0 * static_cast<double>(win) / n, 100.0 * static_cast<double>(tie) / n,
            100.0 * static_cast<double>(loss) / n};
}

double mean_rank(const std::map<int, std::size_t>& rank_counts) {
    double weighted = 0;
    std::size_t total = 0;
    for (const auto& [rank, count] : rank_counts) {
        weighted += static_cast<double>(rank) * static_cast<double>(count);
        total += count;
    }
    if (total == 0) throw EmptyHistogram("mean_rank needs a non-empty histogram");
    return weighted / static_cast<double>(total);
}

} // namespace codectx::evalstat
