// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. The WN18 criterion needs a user-supplied dataset and is
// skipped (without failing) when KGESYM_WN18_DIR is not set.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kgesym/kgesym.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace kgesym;

namespace {

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

Outcome pass(std::string detail) { return {true, false, std::move(detail)}; }
Outcome failure(std::string detail) { return {false, false, std::move(detail)}; }
Outcome skip(std::string detail) { return {false, true, std::move(detail)}; }

std::string fmt(double v, const char* spec = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

// ---- criterion 1: analytical gradients vs central finite differences -------

Outcome gradient_correctness() {
    Rng rng = make_rng(20240601);
    const double eps = 1e-5;
    double worst = 0.0;
    for (ModelKind kind : {ModelKind::transe, ModelKind::transh, ModelKind::transd}) {
        for (bool paired : {false, true}) {
            for (int iter = 0; iter < 100; ++iter) {
                // draw a configuration at d<=8 with an active hinge, away from
                // L1 kinks, the L2 zero vector, and pair-branch switches
                ModelParams params;
                Triple pos, neg;
                Norm norm = Norm::l1;
                for (;;) {
                    const int d = 2 + static_cast<int>(uniform_index(rng, 7));
                    const std::size_t entities = 3 + uniform_index(rng, 3);
                    std::vector<RelationId> syms;
                    if (paired) syms.push_back(0);
                    params = init_params(entities, 1, syms, kind, d, rng());
                    norm = coin_flip(rng) ? Norm::l1 : Norm::l2;
                    pos = Triple{static_cast<EntityId>(uniform_index(rng, entities)), 0,
                                 static_cast<EntityId>(uniform_index(rng, entities))};
                    neg = pos;
                    if (coin_flip(rng))
                        neg.head = static_cast<EntityId>(uniform_index(rng, entities));
                    else
                        neg.tail = static_cast<EntityId>(uniform_index(rng, entities));
                    if (neg == pos) continue;
                    if (oracle::pair_loss(params, pos, neg, 1.0, norm) < 1e-2) continue;

                    bool ok = true;
                    const auto& rel = params.relation(0);
                    std::vector<const RelationSlot*> slots{&rel.plus};
                    if (paired) slots.push_back(&*rel.minus);
                    for (const Triple* t : {&pos, &neg}) {
                        if (paired) {
                            const double fp =
                                oracle::slot_score(params, rel.plus, t->head, t->tail, norm);
                            const double fm =
                                oracle::slot_score(params, *rel.minus, t->head, t->tail, norm);
                            if (std::fabs(fp - fm) < 1e-2) ok = false;
                        }
                        for (const RelationSlot* slot : slots) {
                            // probe distance to the nearest kink via the raw
                            // difference vector
                            const auto h = params.entity(t->head);
                            const auto tt = params.entity(t->tail);
                            std::vector<double> u(h.size());
                            if (kind == ModelKind::transe) {
                                for (std::size_t i = 0; i < u.size(); ++i)
                                    u[i] = h[i] + slot->translation[i] - tt[i];
                            } else if (kind == ModelKind::transh) {
                                double wh = 0, wt = 0;
                                for (std::size_t i = 0; i < u.size(); ++i) {
                                    wh += slot->normal[i] * h[i];
                                    wt += slot->normal[i] * tt[i];
                                }
                                for (std::size_t i = 0; i < u.size(); ++i)
                                    u[i] = (h[i] - wh * slot->normal[i]) + slot->translation[i] -
                                           (tt[i] - wt * slot->normal[i]);
                            } else {
                                double a = 0, b = 0;
                                for (std::size_t i = 0; i < u.size(); ++i) {
                                    a += params.entity_proj(t->head)[i] * h[i];
                                    b += params.entity_proj(t->tail)[i] * tt[i];
                                }
                                for (std::size_t i = 0; i < u.size(); ++i)
                                    u[i] = h[i] - tt[i] + slot->translation[i] +
                                           (a - b) * slot->proj[i];
                            }
                            if (norm == Norm::l1) {
                                for (double x : u)
                                    if (std::fabs(x) < 1e-3) ok = false;
                            } else {
                                double len = 0;
                                for (double x : u) len += x * x;
                                if (std::sqrt(len) < 1e-3) ok = false;
                            }
                        }
                    }
                    if (ok) break;
                }

                auto [grads, loss] = gradients(params, pos, neg, 1.0, norm);
                if (loss <= 0.0) return failure("drew an inactive hinge, generator bug");
                const auto dense = oracle::densify_gradients(params, grads);
                const auto fd = oracle::fd_loss_gradient(params, pos, neg, 1.0, norm, eps);
                for (std::size_t i = 0; i < dense.size(); ++i) {
                    const double denom = std::max({1.0, std::fabs(dense[i]), std::fabs(fd[i])});
                    worst = std::max(worst, std::fabs(dense[i] - fd[i]) / denom);
                }
            }
        }
    }
    if (worst < 1e-4)
        return pass("6 variants x 100 configs, max relative error " + fmt(worst, "%.2e"));
    return failure("max relative error " + fmt(worst, "%.2e") + " >= 1e-4");
}

// ---- criterion 2: ranking equals the brute-force evaluator ------------------

Outcome ranking_oracle_equivalence() {
    Rng rng = make_rng(20240602);
    long ranks_checked = 0;
    for (int iter = 0; iter < 50; ++iter) {
        auto store = testutil::random_store(rng, 10, 3, 12);
        const ModelKind kind = static_cast<ModelKind>(uniform_index(rng, 3));
        std::vector<RelationId> syms;
        for (std::size_t r = 0; r < store.relation_count(); ++r)
            if (coin_flip(rng)) syms.push_back(static_cast<RelationId>(r));
        auto params = init_params(store.entity_count(), store.relation_count(), syms, kind,
                                  2 + static_cast<int>(uniform_index(rng, 5)), rng());
        const Norm norm = coin_flip(rng) ? Norm::l1 : Norm::l2;
        const EvalMode mode = coin_flip(rng) ? EvalMode::raw : EvalMode::filtered;

        for (const Triple& t : store.split(Split::test)) {
            const auto got = rank_triple(params, t, store, mode, norm);
            const auto want = oracle::rank_triple(params, t, store, mode, norm);
            if (got.head_rank != want.head_rank || got.tail_rank != want.tail_rank)
                return failure("rank mismatch on store " + std::to_string(iter));
            ranks_checked += 2;
        }
        const auto got = link_prediction(params, store, Split::test, mode, norm);
        const auto want = oracle::link_prediction(params, store.split(Split::test), store, mode, norm);
        if (got.overall.mr != want.overall.mr || got.overall.mrr != want.overall.mrr ||
            got.overall.hits1 != want.overall.hits1 || got.overall.hits3 != want.overall.hits3 ||
            got.overall.hits10 != want.overall.hits10)
            return failure("metric mismatch on store " + std::to_string(iter));
        for (const auto& [r, m] : want.per_relation) {
            const auto it = got.per_relation.find(r);
            if (it == got.per_relation.end()) return failure("missing per-relation entry");
            if (it->second.mr != m.mr || it->second.mrr != m.mrr || it->second.hits10 != m.hits10)
                return failure("per-relation metric mismatch on store " + std::to_string(iter));
        }
    }
    return pass("50 stores, " + std::to_string(ranks_checked) + " ranks identical, metrics exact");
}

// ---- criteria 3 and 4: the synthetic degeneration fixture -------------------

constexpr int kFixtureEntities = 40;
constexpr int kFixturePairs = 200;
constexpr std::uint64_t kFixtureSeed = 617;

struct Fixture {
    TripleStore store;
    RelationId relation = 0;
};

// `holdout_pairs` of the 200 mutual pairs contribute only their forward
// direction to train; the reverse goes to the test split.
Fixture degeneration_fixture(int holdout_pairs) {
    Rng rng = make_rng(kFixtureSeed, /*stream=*/0x66697874ULL);
    std::vector<std::pair<int, int>> all_pairs;
    for (int a = 0; a < kFixtureEntities; ++a)
        for (int b = a + 1; b < kFixtureEntities; ++b) all_pairs.emplace_back(a, b);
    shuffle(all_pairs, rng);
    all_pairs.resize(kFixturePairs);
    shuffle(all_pairs, rng);   // holdout selection independent of pair choice

    TripleStore::Builder builder;
    for (int e = 0; e < kFixtureEntities; ++e) builder.intern_entity("n" + std::to_string(e));
    const RelationId rel = builder.intern_relation("linked_with");
    for (int i = 0; i < kFixturePairs; ++i) {
        const auto [a, b] = all_pairs[static_cast<std::size_t>(i)];
        const Triple fwd{a, rel, b};
        const Triple rev{b, rel, a};
        builder.add_triple(Split::train, fwd);
        if (i < holdout_pairs)
            builder.add_triple(Split::test, rev);
        else
            builder.add_triple(Split::train, rev);
    }
    return {builder.build(), rel};
}

TrainConfig fixture_config(bool sym) {
    TrainConfig config;
    config.model = ModelKind::transe;
    config.sym_enabled = sym;
    config.dim = 16;
    config.margin = 1.0;
    // L2 gradients keep pressure on the relation vector all the way to the
    // collapse point; under L1 the positive and negative sign gradients cancel
    // once |r_i| dominates the entity differences and r freezes at its
    // initialization.
    config.norm = Norm::l2;
    config.learning_rate = 0.01;
    config.epochs = 500;
    config.batch_size = 1;
    config.seed = kFixtureSeed;
    return config;
}

Outcome degeneration_reproduction() {
    Fixture fx = degeneration_fixture(0);
    auto result = train(fx.store, fixture_config(false));

    const double rel_norm = vec::l2_norm(result.params.relation(fx.relation).plus.translation);
    const double entity_norm = mean_entity_norm(result.params);
    const double bound = 0.05 * entity_norm;

    const auto circle = generate_circle_set(fx.store, {fx.relation}, 1000, kFixtureSeed);
    const auto probe = circle_eval(result.params, circle, fx.store, result.norm);

    std::ostringstream detail;
    detail << "||r|| " << fmt(rel_norm) << " vs bound " << fmt(bound) << ", circle ranked-1 "
           << fmt(probe.overall.fraction_rank1, "%.3f");
    if (rel_norm < bound && probe.overall.fraction_rank1 >= 0.95) return pass(detail.str());
    return failure(detail.str());
}

Outcome bivector_fix() {
    Fixture fx = degeneration_fixture(kFixturePairs / 5);   // 20% of reverses held out

    auto baseline = train(fx.store, fixture_config(false));
    auto sym = train(fx.store, fixture_config(true));

    const auto base_eval =
        link_prediction(baseline.params, fx.store, Split::test, EvalMode::filtered, baseline.norm);
    const auto sym_eval =
        link_prediction(sym.params, fx.store, Split::test, EvalMode::filtered, sym.norm);

    const auto& rel = sym.params.relation(fx.relation);
    const double plus_norm = vec::l2_norm(rel.plus.translation);
    const double minus_norm = vec::l2_norm(rel.minus->translation);
    const double entity_norm = mean_entity_norm(sym.params);
    const double norm_floor = 0.5 * entity_norm;

    const double gap = sym_eval.overall.hits10 - base_eval.overall.hits10;
    std::ostringstream detail;
    detail << "filtered H10 " << fmt(base_eval.overall.hits10, "%.3f") << " -> "
           << fmt(sym_eval.overall.hits10, "%.3f") << " (gap " << fmt(gap, "%.3f")
           << "), subvector norms " << fmt(plus_norm) << "/" << fmt(minus_norm) << " vs floor "
           << fmt(norm_floor);
    if (gap >= 0.20 && plus_norm > norm_floor && minus_norm > norm_floor)
        return pass(detail.str());
    return failure(detail.str());
}

// ---- criterion 5: WN18 desk-scale run (optional) ----------------------------

Outcome wn18_desk_scale() {
    const char* dir_env = std::getenv("KGESYM_WN18_DIR");
    if (dir_env == nullptr || std::string(dir_env).empty())
        return skip("set KGESYM_WN18_DIR to a directory with WN18 splits to run");
    const std::filesystem::path dir(dir_env);
    const char* fmt_env = std::getenv("KGESYM_WN18_FORMAT");
    const TripleFormat format =
        (fmt_env != nullptr && std::string(fmt_env) == "ids") ? TripleFormat::ids
                                                              : TripleFormat::names;
    const auto name = [&](const char* base, const char* ids) {
        return dir / (format == TripleFormat::ids ? ids : base);
    };
    auto store = load_triples(name("train.txt", "train2id.txt"), name("valid.txt", "valid2id.txt"),
                              name("test.txt", "test2id.txt"), format);

    std::ostringstream detail;
    if (store.entity_count() != 40943 || store.relation_count() != 18 ||
        store.split(Split::train).size() != 141442 || store.split(Split::valid).size() != 5000 ||
        store.split(Split::test).size() != 5000)
        return failure("split sizes differ from the expected WN18 distribution");

    const auto stats = dataset_stats(store, 0.5);
    const double train_pct = stats.splits[0].pct_symmetric;
    if (std::fabs(train_pct - 20.97) > 0.05)
        return failure("train symmetric percentage " + fmt(train_pct, "%.2f") + " not 20.97 +/- 0.05");

    const RelationId verb_group = store.find_relation("_verb_group");
    if (verb_group < 0) return failure("relation _verb_group not found");
    const auto metas = relation_stats(store, 0.5);
    const auto& vg = metas[static_cast<std::size_t>(verb_group)];
    if (vg.symmetric[3] != 1060 || vg.total[3] != 1139)
        return failure("_verb_group counts " + std::to_string(vg.symmetric[3]) + "/" +
                       std::to_string(vg.total[3]) + " differ from 1060/1139");

    // WN18-SYM: complete, then compare TransE against TransE-SYM
    auto completed = complete_symmetric(store, stats.symmetric);
    TrainConfig config;
    config.model = ModelKind::transe;
    config.dim = 50;
    config.margin = 1.0;
    config.learning_rate = 0.01;
    config.epochs = 500;
    config.batch_size = 1024;
    config.seed = 42;

    const int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    config.sym_enabled = false;
    auto baseline = train(completed.store, config);
    const auto base_eval = link_prediction(baseline.params, completed.store, Split::test,
                                           EvalMode::filtered, baseline.norm, workers);
    config.sym_enabled = true;
    auto sym = train(completed.store, config);
    const auto sym_eval = link_prediction(sym.params, completed.store, Split::test,
                                          EvalMode::filtered, sym.norm, workers);

    const double gap = sym_eval.overall.hits10 - base_eval.overall.hits10;
    detail << "stats exact, filtered H10 " << fmt(base_eval.overall.hits10, "%.3f") << " -> "
           << fmt(sym_eval.overall.hits10, "%.3f");
    if (gap >= 0.05) return pass(detail.str());
    return failure(detail.str() + " (gap " + fmt(gap, "%.3f") + " < 0.05)");
}

// ---- criterion 6: bit-exact determinism --------------------------------------

Outcome determinism() {
    Fixture fx = degeneration_fixture(kFixturePairs / 5);
    TrainConfig config = fixture_config(true);
    config.epochs = 60;

    testutil::TempDir dir("acceptance_det");
    std::array<std::string, 2> checkpoint_bytes, history_bytes, eval_bytes;
    for (int run = 0; run < 2; ++run) {
        auto result = train(fx.store, config);
        const auto path = dir.path() / ("ckpt" + std::to_string(run) + ".kge");
        save_checkpoint(result.params, {result.norm, config.seed, config.epochs}, path);
        checkpoint_bytes[run] = testutil::read_file(path);
        history_bytes[run] = history_to_tsv(result.history);
        const auto eval = link_prediction(result.params, fx.store, Split::test, EvalMode::filtered,
                                          result.norm, 2);
        eval_bytes[run] = eval_to_json(eval, fx.store).dump(2);
    }
    if (checkpoint_bytes[0] != checkpoint_bytes[1]) return failure("checkpoints differ");
    if (history_bytes[0] != history_bytes[1]) return failure("history TSVs differ");
    if (eval_bytes[0] != eval_bytes[1]) return failure("eval reports differ");
    return pass("checkpoint, history, and eval bytes identical across runs");
}

// ---- criterion 7: data-pipeline properties -----------------------------------

Outcome data_pipeline_properties() {
    Rng rng = make_rng(20240607);
    testutil::TempDir dir("acceptance_data");
    for (int iter = 0; iter < 30; ++iter) {
        auto store = testutil::random_store(rng, 12, 4, 15);
        std::vector<RelationId> rels;
        for (std::size_t r = 0; r < store.relation_count(); ++r)
            rels.push_back(static_cast<RelationId>(r));

        auto completed = complete_symmetric(store, rels);
        for (RelationId r : rels)
            if (symmetry_ratio(completed.store, r, SplitSelector::all) != 1.0)
                return failure("post-completion union ratio below 1.0 (iter " +
                               std::to_string(iter) + ")");
        auto twice = complete_symmetric(completed.store, rels);
        for (Split s : kSplits)
            if (twice.added[static_cast<int>(s)] != 0)
                return failure("completion not idempotent (iter " + std::to_string(iter) + ")");

        save_store(store, dir.path());
        auto reloaded = load_triples(dir.path() / "train.txt", dir.path() / "valid.txt",
                                     dir.path() / "test.txt", TripleFormat::names);
        for (Split s : kSplits) {
            const auto& a = store.split(s);
            const auto& b = reloaded.split(s);
            if (a.size() != b.size()) return failure("round-trip size mismatch");
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (store.entity_name(a[i].head) != reloaded.entity_name(b[i].head) ||
                    store.relation_name(a[i].relation) != reloaded.relation_name(b[i].relation) ||
                    store.entity_name(a[i].tail) != reloaded.entity_name(b[i].tail))
                    return failure("round-trip triple mismatch");
            }
        }
    }
    return pass("30 stores: completion idempotent, union ratio 1.0, round-trip exact");
}

}  // namespace

int main() {
    struct Criterion {
        int number;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "gradient-correctness", gradient_correctness},
        {2, "ranking-oracle-equivalence", ranking_oracle_equivalence},
        {3, "degeneration-reproduction", degeneration_reproduction},
        {4, "bi-vector-fix", bivector_fix},
        {5, "wn18-desk-scale", wn18_desk_scale},
        {6, "determinism", determinism},
        {7, "data-pipeline-properties", data_pipeline_properties},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = failure(std::string("exception: ") + e.what());
        }
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        const char* tag = outcome.skipped ? "SKIP" : (outcome.pass ? "PASS" : "FAIL");
        std::cout << "[" << tag << "] " << c.number << " " << c.name << ": " << outcome.detail
                  << " (" << fmt(elapsed.count(), "%.1f") << "s)\n";
        if (!outcome.pass && !outcome.skipped) ++failures;
    }
    if (failures > 0) std::cout << failures << " criterion(s) failed\n";
    return failures;
}
