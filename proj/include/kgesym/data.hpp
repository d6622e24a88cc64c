#ifndef KGESYM_DATA_HPP
#define KGESYM_DATA_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgesym/common.hpp"
#include "kgesym/rng.hpp"

namespace kgesym {

using TripleSet = std::unordered_set<Triple, TripleHash>;

// Immutable collection of integer-encoded triples: vocabularies, the three
// splits, and per-split membership indexes. Construct through Builder; after
// build() the store is read-only and safe for concurrent readers.
class TripleStore {
public:
    class Builder;

    std::size_t entity_count() const { return entity_names_.size(); }
    std::size_t relation_count() const { return relation_names_.size(); }

    const std::vector<std::string>& entity_names() const { return entity_names_; }
    const std::vector<std::string>& relation_names() const { return relation_names_; }

    const std::string& entity_name(EntityId id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= entity_names_.size())
            fail("entity id ", id, " out of range [0, ", entity_names_.size(), ")");
        return entity_names_[static_cast<std::size_t>(id)];
    }
    const std::string& relation_name(RelationId id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= relation_names_.size())
            fail("relation id ", id, " out of range [0, ", relation_names_.size(), ")");
        return relation_names_[static_cast<std::size_t>(id)];
    }

    // Returns -1 when the name is unknown.
    EntityId find_entity(std::string_view name) const {
        auto it = entity_ids_.find(std::string(name));
        return it == entity_ids_.end() ? EntityId{-1} : it->second;
    }
    RelationId find_relation(std::string_view name) const {
        auto it = relation_ids_.find(std::string(name));
        return it == relation_ids_.end() ? RelationId{-1} : it->second;
    }

    const std::vector<Triple>& split(Split s) const { return splits_[static_cast<int>(s)]; }

    bool contains(Split s, const Triple& t) const {
        return index_[static_cast<int>(s)].count(t) != 0;
    }
    // Membership in any split (the filtered-evaluation candidate test).
    bool contains_any(const Triple& t) const {
        return contains(Split::train, t) || contains(Split::valid, t) || contains(Split::test, t);
    }

    std::size_t total_triples() const {
        return split(Split::train).size() + split(Split::valid).size() + split(Split::test).size();
    }

    // Set union of the three splits; cross-split duplicates appear once.
    TripleSet union_set() const {
        TripleSet u;
        u.reserve(total_triples());
        for (Split s : kSplits)
            for (const Triple& t : split(s)) u.insert(t);
        return u;
    }

    void check_triple(const Triple& t) const {
        if (t.head < 0 || static_cast<std::size_t>(t.head) >= entity_count() || t.tail < 0 ||
            static_cast<std::size_t>(t.tail) >= entity_count())
            fail("triple entity id out of range: (", t.head, ",", t.relation, ",", t.tail,
                 ") with |E|=", entity_count());
        if (t.relation < 0 || static_cast<std::size_t>(t.relation) >= relation_count())
            fail("triple relation id out of range: (", t.head, ",", t.relation, ",", t.tail,
                 ") with |R|=", relation_count());
    }

    // Rebuild-and-compare consistency check between lists and indexes.
    bool index_consistent() const {
        for (Split s : kSplits) {
            TripleSet rebuilt;
            for (const Triple& t : split(s)) rebuilt.insert(t);
            if (rebuilt != index_[static_cast<int>(s)]) return false;
        }
        return true;
    }

private:
    TripleStore() = default;

    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::array<std::vector<Triple>, kSplitCount> splits_;
    std::array<TripleSet, kSplitCount> index_;
};

class TripleStore::Builder {
public:
    EntityId intern_entity(std::string_view name) {
        auto it = store_.entity_ids_.find(std::string(name));
        if (it != store_.entity_ids_.end()) return it->second;
        EntityId id = static_cast<EntityId>(store_.entity_names_.size());
        store_.entity_names_.emplace_back(name);
        store_.entity_ids_.emplace(std::string(name), id);
        return id;
    }

    RelationId intern_relation(std::string_view name) {
        auto it = store_.relation_ids_.find(std::string(name));
        if (it != store_.relation_ids_.end()) return it->second;
        RelationId id = static_cast<RelationId>(store_.relation_names_.size());
        store_.relation_names_.emplace_back(name);
        store_.relation_ids_.emplace(std::string(name), id);
        return id;
    }

    void copy_vocab(const TripleStore& other) {
        store_.entity_names_ = other.entity_names_;
        store_.entity_ids_ = other.entity_ids_;
        store_.relation_names_ = other.relation_names_;
        store_.relation_ids_ = other.relation_ids_;
    }

    // `context` names the source (file:line) in duplicate/range errors.
    void add_triple(Split s, const Triple& t, const std::string& context = {}) {
        store_.check_triple(t);
        auto& idx = store_.index_[static_cast<int>(s)];
        if (!idx.insert(t).second)
            fail("duplicate triple in ", split_name(s), " split",
                 context.empty() ? "" : " at " + context, ": (", t.head, ",", t.relation, ",",
                 t.tail, ")");
        store_.splits_[static_cast<int>(s)].push_back(t);
    }

    TripleStore build() { return std::move(store_); }

private:
    TripleStore store_;
};

enum class TripleFormat { names, ids };

inline const char* format_name(TripleFormat f) { return f == TripleFormat::names ? "names" : "ids"; }

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == '\t' || line[i] == ' ')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != '\t' && line[i] != ' ') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline long parse_long(std::string_view s, const std::string& context) {
    long value = 0;
    bool neg = false;
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
        neg = s[i] == '-';
        ++i;
    }
    if (i == s.size()) fail(context, ": expected integer, got \"", std::string(s), "\"");
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9')
            fail(context, ": expected integer, got \"", std::string(s), "\"");
        value = value * 10 + (s[i] - '0');
    }
    return neg ? -value : value;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open ", path.string());
    return in;
}

// Reads "name<sep>id" lines, tolerating the count-prefixed first line used by
// the id-mapped distributions. Ids must be dense in [0, n).
inline std::vector<std::string> load_id_map(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::vector<std::pair<std::string, long>> pairs;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() == 1 && lineno == 1) continue;  // count prefix
        if (fields.size() != 2)
            fail(path.string(), ":", lineno, ": expected \"name id\", got ", fields.size(),
                 " fields");
        long id = parse_long(fields[1], detail::concat(path.string(), ":", lineno));
        pairs.emplace_back(std::string(fields[0]), id);
    }
    std::vector<std::string> names(pairs.size());
    std::vector<bool> seen(pairs.size(), false);
    for (const auto& [name, id] : pairs) {
        if (id < 0 || static_cast<std::size_t>(id) >= names.size())
            fail(path.string(), ": id ", id, " outside dense range [0, ", names.size(), ")");
        if (seen[static_cast<std::size_t>(id)])
            fail(path.string(), ": id ", id, " assigned twice");
        seen[static_cast<std::size_t>(id)] = true;
        names[static_cast<std::size_t>(id)] = name;
    }
    return names;
}

}  // namespace detail

// Loads the three splits in `names` format (head<sep>relation<sep>tail per
// line) or `ids` format (count-prefixed "head tail relation" id lines with
// entity2id/relation2id maps next to the triple files). The vocabulary is the
// union over all splits; duplicate triples within a split are an error.
inline TripleStore load_triples(const std::filesystem::path& train_path,
                                const std::filesystem::path& valid_path,
                                const std::filesystem::path& test_path, TripleFormat format) {
    TripleStore::Builder builder;
    const std::array<std::filesystem::path, kSplitCount> paths = {train_path, valid_path, test_path};

    if (format == TripleFormat::names) {
        for (Split s : kSplits) {
            const auto& path = paths[static_cast<int>(s)];
            std::ifstream in = detail::open_input(path);
            std::string line;
            long lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                line = detail::strip_cr(line);
                auto fields = detail::split_fields(line);
                if (fields.empty()) continue;
                if (fields.size() != 3)
                    fail(path.string(), ":", lineno, ": expected 3 fields (head relation tail), got ",
                         fields.size());
                Triple t;
                t.head = builder.intern_entity(fields[0]);
                t.relation = builder.intern_relation(fields[1]);
                t.tail = builder.intern_entity(fields[2]);
                builder.add_triple(s, t, detail::concat(path.string(), ":", lineno));
            }
        }
    } else {
        const auto dir = train_path.parent_path();
        const auto entity_names = detail::load_id_map(dir / "entity2id.txt");
        const auto relation_names = detail::load_id_map(dir / "relation2id.txt");
        for (const auto& name : entity_names) builder.intern_entity(name);
        for (const auto& name : relation_names) builder.intern_relation(name);

        for (Split s : kSplits) {
            const auto& path = paths[static_cast<int>(s)];
            std::ifstream in = detail::open_input(path);
            std::string line;
            long lineno = 0;
            long declared = -1, parsed = 0;
            while (std::getline(in, line)) {
                ++lineno;
                line = detail::strip_cr(line);
                auto fields = detail::split_fields(line);
                if (fields.empty()) continue;
                const std::string context = detail::concat(path.string(), ":", lineno);
                if (declared < 0) {
                    if (fields.size() != 1)
                        fail(context, ": expected leading triple count, got ", fields.size(),
                             " fields");
                    declared = detail::parse_long(fields[0], context);
                    continue;
                }
                if (fields.size() != 3)
                    fail(context, ": expected 3 fields (head tail relation), got ", fields.size());
                Triple t;
                t.head = static_cast<EntityId>(detail::parse_long(fields[0], context));
                t.tail = static_cast<EntityId>(detail::parse_long(fields[1], context));
                t.relation = static_cast<RelationId>(detail::parse_long(fields[2], context));
                builder.add_triple(s, t, context);
                ++parsed;
            }
            if (declared < 0) declared = 0;
            if (parsed != declared)
                fail(path.string(), ": declared ", declared, " triples but found ", parsed);
        }
    }
    return builder.build();
}

// Writes one split in `names` format: head\trelation\ttail, UTF-8, LF.
inline void save_split(const TripleStore& store, Split s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write ", path.string());
    for (const Triple& t : store.split(s)) {
        out << store.entity_name(t.head) << '\t' << store.relation_name(t.relation) << '\t'
            << store.entity_name(t.tail) << '\n';
    }
    if (!out) fail("write failure on ", path.string());
}

inline void save_store(const TripleStore& store, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_split(store, Split::train, dir / "train.txt");
    save_split(store, Split::valid, dir / "valid.txt");
    save_split(store, Split::test, dir / "test.txt");
}

// Per-relation symmetry statistics. Counts are indexed by SplitSelector, so
// [3] holds the whole-dataset (union) numbers.
struct RelationMeta {
    RelationId relation = 0;
    std::array<long, 4> total{};
    std::array<long, 4> symmetric{};
    double ratio = 0.0;       // symmetric/total over the classification scope
    bool is_symmetric = false;

    static double safe_ratio(long sym, long total) {
        return total == 0 ? 0.0 : static_cast<double>(sym) / static_cast<double>(total);
    }
};

// One pass over the store computing RelationMeta for every relation. A
// reflexive triple (h == t) is its own reverse and counts as symmetric.
inline std::vector<RelationMeta> relation_stats(const TripleStore& store, double threshold,
                                                SplitSelector selector = SplitSelector::all) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        fail("classification threshold must be in (0, 1], got ", threshold);
    std::vector<RelationMeta> metas(store.relation_count());
    for (std::size_t r = 0; r < metas.size(); ++r) metas[r].relation = static_cast<RelationId>(r);

    for (Split s : kSplits) {
        const int si = static_cast<int>(s);
        for (const Triple& t : store.split(s)) {
            auto& m = metas[static_cast<std::size_t>(t.relation)];
            m.total[si] += 1;
            if (store.contains(s, t.reversed())) m.symmetric[si] += 1;
        }
    }
    const TripleSet u = store.union_set();
    for (const Triple& t : u) {
        auto& m = metas[static_cast<std::size_t>(t.relation)];
        m.total[3] += 1;
        if (u.count(t.reversed()) != 0) m.symmetric[3] += 1;
    }
    const int sel = static_cast<int>(selector);
    for (auto& m : metas) {
        m.ratio = RelationMeta::safe_ratio(m.symmetric[sel], m.total[sel]);
        m.is_symmetric = m.ratio >= threshold;
    }
    return metas;
}

// zeta_r: fraction of the relation's triples in scope whose reverse is also
// in scope. 0 for an empty relation.
inline double symmetry_ratio(const TripleStore& store, RelationId relation,
                             SplitSelector selector = SplitSelector::all) {
    if (relation < 0 || static_cast<std::size_t>(relation) >= store.relation_count())
        fail("unknown relation id ", relation);
    long total = 0, sym = 0;
    if (selector == SplitSelector::all) {
        const TripleSet u = store.union_set();
        for (const Triple& t : u) {
            if (t.relation != relation) continue;
            ++total;
            if (u.count(t.reversed()) != 0) ++sym;
        }
    } else {
        const Split s = static_cast<Split>(selector);
        for (const Triple& t : store.split(s)) {
            if (t.relation != relation) continue;
            ++total;
            if (store.contains(s, t.reversed())) ++sym;
        }
    }
    return RelationMeta::safe_ratio(sym, total);
}

struct ClassifyResult {
    std::vector<RelationId> symmetric;   // ascending relation ids with ratio >= threshold
    std::vector<RelationMeta> metas;     // every relation
};

inline ClassifyResult classify_symmetric(const TripleStore& store, double threshold = 0.5,
                                         SplitSelector selector = SplitSelector::all) {
    ClassifyResult result;
    result.metas = relation_stats(store, threshold, selector);
    for (const auto& m : result.metas)
        if (m.is_symmetric) result.symmetric.push_back(m.relation);
    return result;
}

enum class CompletionScope { train_only, all_splits };

struct CompletionResult {
    TripleStore store;
    std::array<long, kSplitCount> added{};      // reverses appended per split
    std::array<long, kSplitCount> guarded{};    // reverses skipped: present in another split
};

// Adds the missing reverse (t,r,h) for every (h,r,t) of a symmetric relation,
// each split completed against itself. A reverse already present in a
// different split is never added (cross-split leakage guard); the skip count
// is reported. Additions are computed against the input store only, so the
// result is independent of split order and the operation is idempotent.
inline CompletionResult complete_symmetric(const TripleStore& store,
                                           const std::vector<RelationId>& symmetric_relations,
                                           CompletionScope scope = CompletionScope::all_splits) {
    std::unordered_set<RelationId> syms;
    for (RelationId r : symmetric_relations) {
        if (r < 0 || static_cast<std::size_t>(r) >= store.relation_count())
            fail("unknown relation id ", r, " in symmetric set");
        syms.insert(r);
    }

    std::array<long, kSplitCount> added{};
    std::array<long, kSplitCount> guarded{};
    TripleStore::Builder builder;
    builder.copy_vocab(store);

    for (Split s : kSplits) {
        const int si = static_cast<int>(s);
        for (const Triple& t : store.split(s)) builder.add_triple(s, t);
        const bool in_scope = scope == CompletionScope::all_splits || s == Split::train;
        if (!in_scope) continue;
        for (const Triple& t : store.split(s)) {
            if (syms.count(t.relation) == 0) continue;
            const Triple rev = t.reversed();
            if (store.contains(s, rev)) continue;
            bool elsewhere = false;
            for (Split other : kSplits)
                if (other != s && store.contains(other, rev)) elsewhere = true;
            if (elsewhere) {
                guarded[si] += 1;
                continue;
            }
            builder.add_triple(s, rev);
            added[si] += 1;
        }
    }
    return {builder.build(), added, guarded};
}

// Split-level symmetry statistics in the Table-1 shape: sym_count/all before
// completion, and the projected percentage (sym + 2*missing)/(all + missing)
// after. Reported both ways: `missing` counts every absent reverse of a
// classified-symmetric relation, `missing_guarded` excludes reverses that
// already live in another split.
struct SplitStats {
    long triples = 0;
    long symmetric = 0;          // reverse present in the same split (any relation)
    long missing = 0;            // SYM-relation triples lacking their in-split reverse
    long missing_guarded = 0;    // as above, reverse absent from every split
    double pct_symmetric = 0.0;
    double pct_after_completion = 0.0;
    double pct_after_completion_guarded = 0.0;
};

struct StatsReport {
    std::size_t entity_count = 0;
    std::size_t relation_count = 0;
    double threshold = 0.5;
    SplitSelector selector = SplitSelector::all;
    std::array<SplitStats, kSplitCount> splits{};
    std::vector<RelationMeta> relations;        // sorted by ratio descending
    std::vector<RelationId> symmetric;          // classified symmetric, ascending
};

inline double completion_pct(long sym, long missing, long all) {
    const long num = sym + 2 * missing;
    const long den = all + missing;
    return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

inline StatsReport dataset_stats(const TripleStore& store, double threshold = 0.5,
                                 SplitSelector selector = SplitSelector::all) {
    StatsReport report;
    report.entity_count = store.entity_count();
    report.relation_count = store.relation_count();
    report.threshold = threshold;
    report.selector = selector;

    auto classified = classify_symmetric(store, threshold, selector);
    report.symmetric = std::move(classified.symmetric);
    std::unordered_set<RelationId> syms(report.symmetric.begin(), report.symmetric.end());

    for (Split s : kSplits) {
        const int si = static_cast<int>(s);
        SplitStats& stats = report.splits[si];
        stats.triples = static_cast<long>(store.split(s).size());
        for (const Triple& t : store.split(s)) {
            if (store.contains(s, t.reversed())) {
                stats.symmetric += 1;
            } else if (syms.count(t.relation) != 0) {
                stats.missing += 1;
                bool elsewhere = false;
                for (Split other : kSplits)
                    if (other != s && store.contains(other, t.reversed())) elsewhere = true;
                if (!elsewhere) stats.missing_guarded += 1;
            }
        }
        stats.pct_symmetric = stats.triples == 0 ? 0.0
                                                 : 100.0 * static_cast<double>(stats.symmetric) /
                                                       static_cast<double>(stats.triples);
        stats.pct_after_completion = completion_pct(stats.symmetric, stats.missing, stats.triples);
        stats.pct_after_completion_guarded =
            completion_pct(stats.symmetric, stats.missing_guarded, stats.triples);
    }

    report.relations = std::move(classified.metas);
    std::stable_sort(report.relations.begin(), report.relations.end(),
                     [](const RelationMeta& a, const RelationMeta& b) { return a.ratio > b.ratio; });
    return report;
}

// n reflexive probes (e, r_s, e): entity uniform over E, relation uniform
// over the symmetric set, sampled with replacement. Pure function of
// (store, relations, n, seed).
inline std::vector<Triple> generate_circle_set(const TripleStore& store,
                                               const std::vector<RelationId>& symmetric_relations,
                                               std::size_t n, std::uint64_t seed) {
    if (symmetric_relations.empty()) fail("circle generation needs a non-empty symmetric relation set");
    if (n == 0) fail("circle generation needs n >= 1");
    std::vector<RelationId> rels = symmetric_relations;
    std::sort(rels.begin(), rels.end());
    rels.erase(std::unique(rels.begin(), rels.end()), rels.end());
    for (RelationId r : rels)
        if (r < 0 || static_cast<std::size_t>(r) >= store.relation_count())
            fail("unknown relation id ", r, " in symmetric set");
    if (store.entity_count() == 0) fail("circle generation needs a non-empty entity set");

    Rng rng = make_rng(seed, /*stream=*/0x636972636cULL);
    std::vector<Triple> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const EntityId e = static_cast<EntityId>(uniform_index(rng, store.entity_count()));
        const RelationId r = rels[uniform_index(rng, rels.size())];
        out.push_back(Triple{e, r, e});
    }
    return out;
}

inline void save_triples_names(const TripleStore& store, const std::vector<Triple>& triples,
                               const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write ", path.string());
    for (const Triple& t : triples) {
        store.check_triple(t);
        out << store.entity_name(t.head) << '\t' << store.relation_name(t.relation) << '\t'
            << store.entity_name(t.tail) << '\n';
    }
    if (!out) fail("write failure on ", path.string());
}

// Reads a triple list in `names` format against an existing vocabulary.
// Unknown names are an error (the list must refer to the store's graph).
inline std::vector<Triple> load_triples_names(const TripleStore& store,
                                              const std::filesystem::path& path) {
    std::ifstream in = detail::open_input(path);
    std::vector<Triple> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::strip_cr(line);
        auto fields = detail::split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 3)
            fail(path.string(), ":", lineno, ": expected 3 fields (head relation tail), got ",
                 fields.size());
        Triple t;
        t.head = store.find_entity(fields[0]);
        t.relation = store.find_relation(fields[1]);
        t.tail = store.find_entity(fields[2]);
        if (t.head < 0) fail(path.string(), ":", lineno, ": unknown entity \"", std::string(fields[0]), "\"");
        if (t.relation < 0) fail(path.string(), ":", lineno, ": unknown relation \"", std::string(fields[1]), "\"");
        if (t.tail < 0) fail(path.string(), ":", lineno, ": unknown entity \"", std::string(fields[2]), "\"");
        out.push_back(t);
    }
    return out;
}

}  // namespace kgesym

#endif
