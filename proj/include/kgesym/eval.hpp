#ifndef KGESYM_EVAL_HPP
#define KGESYM_EVAL_HPP

#include <map>
#include <thread>
#include <vector>

#include "kgesym/common.hpp"
#include "kgesym/data.hpp"
#include "kgesym/model.hpp"

namespace kgesym {

enum class EvalMode { raw, filtered };

inline const char* eval_mode_name(EvalMode m) { return m == EvalMode::raw ? "raw" : "filtered"; }

struct RankPair {
    long head_rank = 0;
    long tail_rank = 0;
};

namespace detail {

// Rank of the true entity among all corruptions of one side, lower score =
// better. Ties use the mean-rank convention rounded half-up: with `better`
// strictly-better candidates and `tied` equal-score candidates (the true
// entity included), rank = 1 + better + floor(tied / 2).
inline long rank_side(const ModelParams& params, const Triple& triple, const TripleStore& store,
                      EvalMode mode, Norm norm, bool corrupt_head) {
    const double true_score = score(params, triple, norm).value;
    const EntityId true_entity = corrupt_head ? triple.head : triple.tail;
    long better = 0, tied = 0;
    Triple candidate = triple;
    const auto n = static_cast<EntityId>(params.entity_count());
    for (EntityId e = 0; e < n; ++e) {
        (corrupt_head ? candidate.head : candidate.tail) = e;
        if (mode == EvalMode::filtered && e != true_entity && store.contains_any(candidate))
            continue;
        const double s = score(params, candidate, norm).value;
        if (s < true_score)
            ++better;
        else if (s == true_score)
            ++tied;
    }
    return 1 + better + tied / 2;
}

}  // namespace detail

// Head and tail ranks of a test triple against all-entity corruptions. The
// filtered mode drops candidates that form a known triple in any split; the
// true triple itself is never dropped.
inline RankPair rank_triple(const ModelParams& params, const Triple& triple,
                            const TripleStore& store, EvalMode mode, Norm norm) {
    store.check_triple(triple);
    if (store.entity_count() != params.entity_count() ||
        store.relation_count() != params.relation_count())
        fail("model/store vocabulary mismatch: model has |E|=", params.entity_count(),
             ", |R|=", params.relation_count(), ", store has |E|=", store.entity_count(),
             ", |R|=", store.relation_count());
    return {detail::rank_side(params, triple, store, mode, norm, true),
            detail::rank_side(params, triple, store, mode, norm, false)};
}

struct Metrics {
    long count = 0;       // ranks pooled (two per triple)
    double mr = 0.0;
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
};

namespace detail {

class MetricsAccumulator {
public:
    void add(long rank) {
        ++count_;
        rank_sum_ += static_cast<double>(rank);
        reciprocal_sum_ += 1.0 / static_cast<double>(rank);
        if (rank <= 1) ++hits1_;
        if (rank <= 3) ++hits3_;
        if (rank <= 10) ++hits10_;
    }

    Metrics finish() const {
        Metrics m;
        m.count = count_;
        if (count_ == 0) return m;
        const double n = static_cast<double>(count_);
        m.mr = rank_sum_ / n;
        m.mrr = reciprocal_sum_ / n;
        m.hits1 = static_cast<double>(hits1_) / n;
        m.hits3 = static_cast<double>(hits3_) / n;
        m.hits10 = static_cast<double>(hits10_) / n;
        return m;
    }

private:
    long count_ = 0;
    double rank_sum_ = 0.0;
    double reciprocal_sum_ = 0.0;
    long hits1_ = 0, hits3_ = 0, hits10_ = 0;
};

// Shards [0, n) across workers; results land in caller-indexed slots so the
// aggregate is independent of thread scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int used = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(workers)));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(used));
    for (int w = 0; w < used; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = static_cast<std::size_t>(w); i < n;
                 i += static_cast<std::size_t>(used))
                fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

struct EvalReport {
    EvalMode mode = EvalMode::filtered;
    long evaluated_triples = 0;
    Metrics overall;
    std::map<RelationId, Metrics> per_relation;
};

// Link prediction over a triple list: both sides of every triple are ranked
// and pooled into one rank list (head rank first, then tail rank, in input
// order), overall and per relation.
inline EvalReport link_prediction(const ModelParams& params, const std::vector<Triple>& triples,
                                  const TripleStore& store, EvalMode mode, Norm norm,
                                  int workers = 1) {
    if (triples.empty()) fail("link prediction needs a non-empty triple list");
    std::vector<RankPair> ranks(triples.size());
    detail::parallel_for(triples.size(), workers, [&](std::size_t i) {
        ranks[i] = rank_triple(params, triples[i], store, mode, norm);
    });

    EvalReport report;
    report.mode = mode;
    report.evaluated_triples = static_cast<long>(triples.size());
    detail::MetricsAccumulator overall;
    std::map<RelationId, detail::MetricsAccumulator> per_relation;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        auto& rel = per_relation[triples[i].relation];
        overall.add(ranks[i].head_rank);
        overall.add(ranks[i].tail_rank);
        rel.add(ranks[i].head_rank);
        rel.add(ranks[i].tail_rank);
    }
    report.overall = overall.finish();
    for (const auto& [r, acc] : per_relation) report.per_relation.emplace(r, acc.finish());
    return report;
}

inline EvalReport link_prediction(const ModelParams& params, const TripleStore& store, Split split,
                                  EvalMode mode, Norm norm, int workers = 1) {
    return link_prediction(params, store.split(split), store, mode, norm, workers);
}

struct CircleStats {
    long count = 0;
    double mean_score = 0.0;
    double mean_tail_rank = 0.0;
    double fraction_rank1 = 0.0;   // circle triples whose true tail ranks first
};

struct CircleReport {
    CircleStats overall;
    std::map<RelationId, CircleStats> per_relation;
};

// Degeneration probe: raw score and raw tail rank of each reflexive triple
// (e, r, e). A model whose symmetric relation vector collapsed to zero scores
// every probe near 0 and ranks the true tail first.
inline CircleReport circle_eval(const ModelParams& params, const std::vector<Triple>& circle,
                                const TripleStore& store, Norm norm, int workers = 1) {
    if (circle.empty()) fail("circle evaluation needs a non-empty triple list");

    struct Row {
        double score = 0.0;
        long rank = 0;
    };
    std::vector<Row> rows(circle.size());
    detail::parallel_for(circle.size(), workers, [&](std::size_t i) {
        store.check_triple(circle[i]);
        rows[i].score = score(params, circle[i], norm).value;
        rows[i].rank = detail::rank_side(params, circle[i], store, EvalMode::raw, norm, false);
    });

    struct Acc {
        long count = 0;
        double score_sum = 0.0;
        double rank_sum = 0.0;
        long rank1 = 0;

        void add(const Row& row) {
            ++count;
            score_sum += row.score;
            rank_sum += static_cast<double>(row.rank);
            if (row.rank == 1) ++rank1;
        }
        CircleStats finish() const {
            CircleStats s;
            s.count = count;
            if (count == 0) return s;
            s.mean_score = score_sum / static_cast<double>(count);
            s.mean_tail_rank = rank_sum / static_cast<double>(count);
            s.fraction_rank1 = static_cast<double>(rank1) / static_cast<double>(count);
            return s;
        }
    };

    Acc overall;
    std::map<RelationId, Acc> per_relation;
    for (std::size_t i = 0; i < circle.size(); ++i) {
        overall.add(rows[i]);
        per_relation[circle[i].relation].add(rows[i]);
    }
    CircleReport report;
    report.overall = overall.finish();
    for (const auto& [r, acc] : per_relation) report.per_relation.emplace(r, acc.finish());
    return report;
}

}  // namespace kgesym

#endif
