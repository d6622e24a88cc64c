#ifndef KGESYM_REPORT_HPP
#define KGESYM_REPORT_HPP

#include <cstdio>
#include <string>

#include <json.hpp>

#include "kgesym/data.hpp"
#include "kgesym/eval.hpp"
#include "kgesym/train.hpp"

namespace kgesym {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace detail

// ---- dataset statistics ----------------------------------------------------

inline std::string stats_to_text(const StatsReport& report, const TripleStore& store) {
    std::string out;
    out += detail::concat("entities   ", report.entity_count, "\n");
    out += detail::concat("relations  ", report.relation_count, "\n");
    out += detail::concat("threshold  ", detail::fmt("%.2f", report.threshold), "  (scope ",
                          selector_name(report.selector), ")\n\n");

    out += "split  triples    sym        sym%     sym%-completed  sym%-completed-guarded\n";
    for (Split s : kSplits) {
        const SplitStats& st = report.splits[static_cast<int>(s)];
        out += detail::pad(split_name(s), 7);
        out += detail::pad(std::to_string(st.triples), 11);
        out += detail::pad(std::to_string(st.symmetric), 11);
        out += detail::pad(detail::fmt("%.2f", st.pct_symmetric), 9);
        out += detail::pad(detail::fmt("%.2f", st.pct_after_completion), 16);
        out += detail::fmt("%.2f", st.pct_after_completion_guarded);
        out += "\n";
    }

    out += "\nrelation symmetry (sorted by ratio, * = classified symmetric)\n";
    std::size_t name_width = 8;
    for (const auto& m : report.relations)
        name_width = std::max(name_width, store.relation_name(m.relation).size());
    for (const auto& m : report.relations) {
        out += detail::pad(store.relation_name(m.relation), name_width + 2);
        out += detail::pad(std::to_string(m.symmetric[3]), 9);
        out += detail::pad(std::to_string(m.total[3]), 9);
        out += detail::fmt("%.3f", m.ratio);
        out += m.is_symmetric ? "  *" : "";
        out += "\n";
    }
    return out;
}

inline json stats_to_json(const StatsReport& report, const TripleStore& store) {
    json j;
    j["entity_count"] = report.entity_count;
    j["relation_count"] = report.relation_count;
    j["threshold"] = report.threshold;
    j["scope"] = selector_name(report.selector);
    json splits;
    for (Split s : kSplits) {
        const SplitStats& st = report.splits[static_cast<int>(s)];
        splits[split_name(s)] = {{"triples", st.triples},
                                 {"symmetric", st.symmetric},
                                 {"missing_reverse", st.missing},
                                 {"missing_reverse_guarded", st.missing_guarded},
                                 {"pct_symmetric", st.pct_symmetric},
                                 {"pct_after_completion", st.pct_after_completion},
                                 {"pct_after_completion_guarded", st.pct_after_completion_guarded}};
    }
    j["splits"] = std::move(splits);
    json syms = json::array();
    for (RelationId r : report.symmetric) syms.push_back(store.relation_name(r));
    j["symmetric_relations"] = std::move(syms);
    json rels = json::array();
    for (const auto& m : report.relations) {
        json row;
        row["id"] = m.relation;
        row["name"] = store.relation_name(m.relation);
        row["total"] = {{"train", m.total[0]}, {"valid", m.total[1]}, {"test", m.total[2]}, {"all", m.total[3]}};
        row["symmetric"] = {{"train", m.symmetric[0]}, {"valid", m.symmetric[1]}, {"test", m.symmetric[2]}, {"all", m.symmetric[3]}};
        row["ratio"] = m.ratio;
        row["is_symmetric"] = m.is_symmetric;
        rels.push_back(std::move(row));
    }
    j["relations"] = std::move(rels);
    return j;
}

// ---- link prediction --------------------------------------------------------

namespace detail {

inline void metrics_row(std::string& out, const std::string& label, const Metrics& m,
                        std::size_t label_width) {
    out += pad(label, label_width + 2);
    out += pad(fmt("%.1f", m.mr), 10);
    out += pad(fmt("%.3f", m.mrr), 8);
    out += pad(fmt("%.3f", m.hits10), 8);
    out += pad(fmt("%.3f", m.hits3), 8);
    out += fmt("%.3f", m.hits1);
    out += "\n";
}

inline json metrics_json(const Metrics& m) {
    return {{"count", m.count},
            {"mr", m.mr},
            {"mrr", m.mrr},
            {"hits", {{"1", m.hits1}, {"3", m.hits3}, {"10", m.hits10}}}};
}

}  // namespace detail

inline std::string eval_to_text(const EvalReport& report, const TripleStore& store) {
    std::size_t width = 7;
    for (const auto& [r, m] : report.per_relation)
        width = std::max(width, store.relation_name(r).size());
    std::string out = detail::concat("link prediction (", eval_mode_name(report.mode), "), ",
                                     report.evaluated_triples, " triples, ",
                                     report.overall.count, " ranks\n");
    out += detail::pad("", width + 2);
    out += "MR        MRR     H10     H3      H1\n";
    detail::metrics_row(out, "overall", report.overall, width);
    for (const auto& [r, m] : report.per_relation)
        detail::metrics_row(out, store.relation_name(r), m, width);
    return out;
}

inline json eval_to_json(const EvalReport& report, const TripleStore& store) {
    json j;
    j["mode"] = eval_mode_name(report.mode);
    j["evaluated_triples"] = report.evaluated_triples;
    j["overall"] = detail::metrics_json(report.overall);
    json rels;
    for (const auto& [r, m] : report.per_relation)
        rels[store.relation_name(r)] = detail::metrics_json(m);
    j["per_relation"] = std::move(rels);
    return j;
}

// ---- circle probe ------------------------------------------------------------

inline std::string circle_to_text(const CircleReport& report, const TripleStore& store) {
    std::size_t width = 7;
    for (const auto& [r, s] : report.per_relation)
        width = std::max(width, store.relation_name(r).size());
    std::string out = detail::concat("circle probe, ", report.overall.count, " triples\n");
    out += detail::pad("", width + 2);
    out += "count     mean-score  mean-rank  ranked-1\n";
    auto row = [&](const std::string& label, const CircleStats& s) {
        out += detail::pad(label, width + 2);
        out += detail::pad(std::to_string(s.count), 10);
        out += detail::pad(detail::fmt("%.4f", s.mean_score), 12);
        out += detail::pad(detail::fmt("%.3f", s.mean_tail_rank), 11);
        out += detail::fmt("%.3f", s.fraction_rank1);
        out += "\n";
    };
    row("overall", report.overall);
    for (const auto& [r, s] : report.per_relation) row(store.relation_name(r), s);
    return out;
}

inline json circle_to_json(const CircleReport& report, const TripleStore& store) {
    auto stats_json = [](const CircleStats& s) {
        return json{{"count", s.count},
                    {"mean_score", s.mean_score},
                    {"mean_tail_rank", s.mean_tail_rank},
                    {"fraction_rank1", s.fraction_rank1}};
    };
    json j;
    j["overall"] = stats_json(report.overall);
    json rels;
    for (const auto& [r, s] : report.per_relation) rels[store.relation_name(r)] = stats_json(s);
    j["per_relation"] = std::move(rels);
    return j;
}

// ---- training history ---------------------------------------------------------

// TSV is the canonical metric file: identical runs produce identical bytes.
// Wall-clock timings live only in the JSON form.
inline std::string history_to_tsv(const TrainHistory& history) {
    std::string out = "epoch\tmean_loss\tmean_entity_norm";
    for (const auto& name : history.trace_names) out += detail::concat("\t", name);
    out += "\n";
    for (const auto& row : history.epochs) {
        out += detail::concat(row.epoch, "\t", detail::fmt("%.17g", row.mean_loss), "\t",
                              detail::fmt("%.17g", row.mean_entity_norm));
        for (double v : row.traces) out += detail::concat("\t", detail::fmt("%.17g", v));
        out += "\n";
    }
    return out;
}

inline json history_to_json(const TrainHistory& history) {
    json j;
    j["trace_names"] = history.trace_names;
    json epochs = json::array();
    for (const auto& row : history.epochs) {
        epochs.push_back({{"epoch", row.epoch},
                          {"mean_loss", row.mean_loss},
                          {"mean_entity_norm", row.mean_entity_norm},
                          {"traces", row.traces},
                          {"seconds", row.seconds}});
    }
    j["epochs"] = std::move(epochs);
    return j;
}

}  // namespace kgesym

#endif
