#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace codectx::evalstat {

struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyGroup : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyHistogram : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DegenerateInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Classification metrics
// ---------------------------------------------------------------------------

struct Prf1 {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

/// Harmonic-mean step of the F1 computation; 0 when P + R == 0.
double f1_from_pr(double precision, double recall);

/// Binary precision/recall/F1 with 0-on-empty-denominator conventions.
Prf1 prf1(std::span<const int> predictions, std::span<const int> labels);

/// Unweighted mean of one-vs-rest per-class F1 over classes 0..k-1.
double macro_f1(std::span<const int> predictions, std::span<const int> labels, int k);

// ---------------------------------------------------------------------------
// Generation metrics
// ---------------------------------------------------------------------------

using Tokens = std::vector<std::string>;

/// BLEU with n-gram precisions up to 4, add-one smoothing on zero counts for
/// n >= 2, brevity penalty, scaled to 0..100.
double bleu4(const Tokens& candidate, const Tokens& reference);

/// LCS-based F-measure in [0,1].
double rouge_l(const Tokens& candidate, const Tokens& reference);

/// METEOR variant without synonym resources: exact-then-stem unigram
/// alignment, recall-weighted harmonic mean (9:1), fragmentation penalty
/// 0.5*(chunks/matches)^3. Reported as meteor_lite everywhere.
double meteor_lite(const Tokens& candidate, const Tokens& reference);

/// Suffix-stripping stemmer used by meteor_lite (running -> run).
std::string stem(std::string word);

// ---------------------------------------------------------------------------
// Rank statistics
// ---------------------------------------------------------------------------

struct WilcoxonResult {
    double w_plus = 0;
    double w_minus = 0;
    std::size_t n_effective = 0;          // pairs remaining after zero differences drop
    std::optional<double> p_two_sided;    // empty when all differences are zero
    enum class Method { undefined, exact, normal_approx } method = Method::undefined;
};

/// Signed-rank test on paired samples. Zero differences are dropped; |d| is
/// ranked with mid-ranks. Exact two-sided p by full sign-assignment
/// enumeration for n <= 25, tie- and continuity-corrected normal
/// approximation beyond.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

enum class Magnitude { negligible, small, medium, large };

struct EffectSize {
    double delta = 0; // in [-1, 1]
    Magnitude magnitude = Magnitude::negligible;
};

char magnitude_letter(Magnitude m);
Magnitude bin_magnitude(double abs_delta); // thresholds 0.147 / 0.33 / 0.474

/// delta = (#{a>b} - #{a<b}) / (|A|*|B|) over all cross pairs.
EffectSize cliffs_delta(std::span<const double> group_a, std::span<const double> group_b);

/// Tau-b with tie corrections; empty when either side is entirely tied.
std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Concordance over m >= 2 raters ranking the same n >= 2 items, with the
/// per-rater tie correction. Throws DegenerateInput when every rater ties
/// everything.
double kendall_w(const std::vector<std::vector<double>>& rankings_by_rater);

struct WinTieLoss {
    double win_pct = 0;
    double tie_pct = 0;
    double loss_pct = 0;
};

/// Lower rank wins, per item; percentages over items.
WinTieLoss win_tie_loss(std::span<const double> ranks_system, std::span<const double> ranks_baseline);

/// Weighted mean of a rank histogram (rank -> count).
double mean_rank(const std::map<int, std::size_t>& rank_counts);

} // namespace codectx::evalstat
