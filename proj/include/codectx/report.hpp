#pragma once

#include "codectx/evalstat.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codectx::report {

/// Per-item ranks for one evaluation dimension. When several raters ranked
/// the same item, `by_rater` keeps each ranking; item-level ranks used for
/// the comparison tables are the per-system mean across raters.
struct RankedItem {
    std::string item;
    std::map<std::string, std::map<std::string, double>> by_rater; // rater -> system -> rank
    std::map<std::string, double> consolidated() const;            // system -> mean rank
};

struct RankingSet {
    std::string dimension;
    std::vector<std::string> systems; // sorted union
    std::vector<RankedItem> items;    // sorted by item id
};

/// JSONL rows: {"item": ..., "dimension": ..., "rater": ... (optional),
/// "ranks": {"system": rank, ...}}. Ranks are >= 1; fractional mid-ranks are
/// legal so tied annotations stay representable.
std::map<std::string, RankingSet> load_rankings_jsonl(std::string_view bytes);

struct ComparisonRow {
    std::string system;
    evalstat::WinTieLoss wtl;
    std::optional<double> wilcoxon_p;
    std::string wilcoxon_method;
    double abs_delta = 0;
    char magnitude = 'N';
};

struct DistributionRow {
    std::string system;
    std::size_t rank1 = 0, rank2 = 0, rank3 = 0, rank4plus = 0; // 4++ holds every rank >= 4
    double mean_rank = 0;                                        // 4++ counted as 4
};

struct AgreementSummary {
    std::string statistic; // kendall_tau_b (2 raters) or kendall_w (3+)
    double mean = 0;
    double median = 0;
    std::size_t items = 0;
};

struct StatsReport {
    std::string dimension;
    std::string baseline;
    std::vector<ComparisonRow> comparisons;    // one row per non-baseline system
    std::vector<DistributionRow> distributions; // baseline first, then systems
    std::optional<AgreementSummary> agreement;  // present when per-rater data exists
};

StatsReport make_stats_report(const RankingSet& rankings, const std::string& baseline);

std::string to_json(const StatsReport& report);
std::string comparisons_csv(const StatsReport& report);
std::string distributions_csv(const StatsReport& report);

/// Mean/median aggregation of per-item concordance values (pilot-study
/// report format).
AgreementSummary summarize_agreement(const std::string& statistic, std::vector<double> values);

} // namespace codectx::report
