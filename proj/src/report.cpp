#include "codectx/report.hpp"

#include "codectx/dataset.hpp" // SchemaViolation

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace codectx::report {

using json = nlohmann::json;
using dataset::SchemaViolation;

std::map<std::string, double> RankedItem::consolidated() const {
    std::map<std::string, double> sums;
    std::map<std::string, std::size_t> counts;
    for (const auto& [rater, ranks] : by_rater) {
        for (const auto& [system, rank] : ranks) {
            sums[system] += rank;
            ++counts[system];
        }
    }
    std::map<std::string, double> out;
    for (const auto& [system, sum] : sums)
        out[system] = sum / static_cast<double>(counts[system]);
    return out;
}

std::map<std::string, RankingSet> load_rankings_jsonl(std::string_view bytes) {
    std::map<std::string, std::map<std::string, RankedItem>> staging; // dimension -> item -> data
    std::map<std::string, std::set<std::string>> systems_by_dim;

    std::size_t line_no = 0, start = 0;
    while (start < bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        if (end == std::string_view::npos) end = bytes.size();
        std::string_view line = bytes.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw SchemaViolation(line_no, "not a JSON object");
        try {
            std::string item = j.at("item").get<std::string>();
            std::string dim = j.at("dimension").get<std::string>();
            std::string rater = j.value("rater", std::string{"-"});
            const json& ranks = j.at("ranks");
            if (!ranks.is_object() || ranks.empty())
                throw SchemaViolation(line_no, "ranks must be a non-empty object");
            RankedItem& slot = staging[dim].try_emplace(item, RankedItem{item, {}}).first->second;
            for (const auto& [system, rank] : ranks.items()) {
                double r = rank.get<double>();
                if (r < 1.0) throw SchemaViolation(line_no, "ranks must be >= 1");
                slot.by_rater[rater][system] = r;
                systems_by_dim[dim].insert(system);
            }
        } catch (const json::exception& e) {
            throw SchemaViolation(line_no, e.what());
        }
    }

    std::map<std::string, RankingSet> out;
    for (auto& [dim, items] : staging) {
        RankingSet set;
        set.dimension = dim;
        set.systems.assign(systems_by_dim[dim].begin(), systems_by_dim[dim].end());
        for (auto& [_, item] : items) set.items.push_back(std::move(item));
        out.emplace(dim, std::move(set));
    }
    return out;
}

namespace {

int histogram_bucket(double rank) {
    int r = static_cast<int>(std::llround(rank));
    return std::min(std::max(r, 1), 4); // ranks of 4 and beyond land in the 4++ bucket
}

const char* method_name(evalstat::WilcoxonResult::Method m) {
    switch (m) {
    case evalstat::WilcoxonResult::Method::exact: return "exact";
    case evalstat::WilcoxonResult::Method::normal_approx: return "normal_approx";
    case evalstat::WilcoxonResult::Method::undefined: return "undefined";
    }
    return "undefined";
}

} // namespace

AgreementSummary summarize_agreement(const std::string& statistic, std::vector<double> values) {
    AgreementSummary s;
    s.statistic = statistic;
    s.items = values.size();
    if (values.empty()) return s;
    double sum = 0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    s.median = n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    return s;
}

StatsReport make_stats_report(const RankingSet& rankings, const std::string& baseline) {
    if (std::find(rankings.systems.begin(), rankings.systems.end(), baseline) ==
        rankings.systems.end())
        throw std::invalid_argument("baseline system '" + baseline + "' not present in rankings");

    StatsReport report;
    report.dimension = rankings.dimension;
    report.baseline = baseline;

    // item-level consolidated ranks per system, aligned across items
    std::map<std::string, std::vector<double>> ranks_by_system;
    for (const auto& item : rankings.items) {
        auto cons = item.consolidated();
        for (const auto& system : rankings.systems) {
            auto it = cons.find(system);
            if (it == cons.end())
                throw std::invalid_argument("item '" + item.item + "' lacks a rank for system '" +
                                            system + "'");
            ranks_by_system[system].push_back(it->second);
        }
    }

    const std::vector<double>& base_ranks = ranks_by_system.at(baseline);
    for (const auto& system : rankings.systems) {
        const std::vector<double>& sys_ranks = ranks_by_system.at(system);
        DistributionRow dist;
        dist.system = system;
        std::map<int, std::size_t> hist;
        for (double r : sys_ranks) {
            int b = histogram_bucket(r);
            ++hist[b];
            if (b == 1) ++dist.rank1;
            else if (b == 2) ++dist.rank2;
            else if (b == 3) ++dist.rank3;
            else ++dist.rank4plus;
        }
        dist.mean_rank = evalstat::mean_rank(hist);
        report.distributions.push_back(dist);

        if (system == baseline) continue;
        ComparisonRow row;
        row.system = system;
        row.wtl = evalstat::win_tie_loss(sys_ranks, base_ranks);
        auto wil = evalstat::wilcoxon_signed_rank(sys_ranks, base_ranks);
        row.wilcoxon_p = wil.p_two_sided;
        row.wilcoxon_method = method_name(wil.method);
        auto effect = evalstat::cliffs_delta(sys_ranks, base_ranks);
        row.abs_delta = std::abs(effect.delta);
        row.magnitude = evalstat::magnitude_letter(effect.magnitude);
        report.comparisons.push_back(std::move(row));
    }
    // baseline row first, remaining rows keep sorted-system order
    std::stable_partition(report.distributions.begin(), report.distributions.end(),
                          [&](const DistributionRow& d) { return d.system == baseline; });

    // agreement across raters, when per-rater data is present
    std::vector<double> per_item;
    std::string statistic;
    for (const auto& item : rankings.items) {
        if (item.by_rater.size() < 2) continue;
        std::vector<std::vector<double>> by_rater;
        for (const auto& [rater, ranks] : item.by_rater) {
            std::vector<double> row;
            bool complete = true;
            for (const auto& system : rankings.systems) {
                auto it = ranks.find(system);
                if (it == ranks.end()) { complete = false; break; }
                row.push_back(it->second);
            }
            if (complete) by_rater.push_back(std::move(row));
        }
        if (by_rater.size() == 2) {
            auto tau = evalstat::kendall_tau_b(by_rater[0], by_rater[1]);
            if (tau) {
                per_item.push_back(*tau);
                statistic = "kendall_tau_b";
            }
        } else if (by_rater.size() > 2) {
            try {
                per_item.push_back(evalstat::kendall_w(by_rater));
                statistic = "kendall_w";
            } catch (const evalstat::DegenerateInput&) {
            }
        }
    }
    if (!per_item.empty()) report.agreement = summarize_agreement(statistic, std::move(per_item));

    return report;
}

std::string to_json(const StatsReport& report) {
    json j;
    j["dimension"] = report.dimension;
    j["baseline"] = report.baseline;
    j["metadata"] = {
        {"wilcoxon_zero_differences", "dropped"},
        {"wilcoxon_exact_max_n", 25},
        {"cliffs_delta_thresholds", {0.147, 0.33, 0.474}},
        {"rank_4plus_counted_as", 4},
        {"mean_rank_reproduction_tolerance", 0.02},
    };
    j["comparisons"] = json::array();
    for (const auto& c : report.comparisons) {
        json row;
        row["system"] = c.system;
        row["win_pct"] = c.wtl.win_pct;
        row["tie_pct"] = c.wtl.tie_pct;
        row["loss_pct"] = c.wtl.loss_pct;
        row["wilcoxon_p"] = c.wilcoxon_p ? json(*c.wilcoxon_p) : json(nullptr);
        row["wilcoxon_method"] = c.wilcoxon_method;
        row["abs_cliffs_delta"] = c.abs_delta;
        row["magnitude"] = std::string(1, c.magnitude);
        j["comparisons"].push_back(std::move(row));
    }
    j["rank_distributions"] = json::array();
    for (const auto& d : report.distributions) {
        json row;
        row["system"] = d.system;
        row["rank1"] = d.rank1;
        row["rank2"] = d.rank2;
        row["rank3"] = d.rank3;
        row["rank4plus"] = d.rank4plus;
        row["mean_rank"] = d.mean_rank;
        j["rank_distributions"].push_back(std::move(row));
    }
    if (report.agreement) {
        j["agreement"] = {{"statistic", report.agreement->statistic},
                          {"mean", report.agreement->mean},
                          {"median", report.agreement->median},
                          {"items", report.agreement->items}};
    }
    return j.dump(2) + "\n";
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(10);
    ss << v;
    return ss.str();
}

} // namespace

std::string comparisons_csv(const StatsReport& report) {
    std::string out =
        "dimension,system,baseline,win_pct,tie_pct,loss_pct,wilcoxon_p,wilcoxon_method,"
        "abs_cliffs_delta,magnitude\n";
    for (const auto& c : report.comparisons) {
        out += csv_escape(report.dimension) + "," + csv_escape(c.system) + "," +
               csv_escape(report.baseline) + "," + fmt(c.wtl.win_pct) + "," + fmt(c.wtl.tie_pct) +
               "," + fmt(c.wtl.loss_pct) + "," +
               (c.wilcoxon_p ? fmt(*c.wilcoxon_p) : std::string("undefined")) + "," +
               c.wilcoxon_method + "," + fmt(c.abs_delta) + "," + std::string(1, c.magnitude) +
               "\n";
    }
    return out;
}

std::string distributions_csv(const StatsReport& report) {
    std::string out = "dimension,system,rank1,rank2,rank3,rank4plus,mean_rank\n";
    for (const auto& d : report.distributions) {
        out += csv_escape(report.dimension) + "," + csv_escape(d.system) + "," +
               std::to_string(d.rank1) + "," + std::to_string(d.rank2) + "," +
               std::to_string(d.rank3) + "," + std::to_string(d.rank4plus) + "," +
               fmt(d.mean_rank) + "\n";
    }
    return out;
}

} // namespace codectx::report
