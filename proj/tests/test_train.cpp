#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kgesym/checkpoint.hpp"
#include "kgesym/report.hpp"
#include "kgesym/train.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace kgesym;
using testutil::make_store;
using testutil::TempDir;

TEST_CASE("negative sampling corrupts exactly one side and filters train", "[train]") {
    auto store = make_store({{"a", "r", "b"}});
    Rng rng = make_rng(5);
    for (int i = 0; i < 200; ++i) {
        const Triple pos{0, 0, 1};
        const auto neg = sample_negative(store, pos, rng);
        CHECK_FALSE(store.contains(Split::train, neg.triple));
        const bool head_changed = neg.triple.head != pos.head;
        const bool tail_changed = neg.triple.tail != pos.tail;
        CHECK((head_changed != tail_changed || (!head_changed && !tail_changed)));
        CHECK(neg.triple.relation == pos.relation);
    }
}

TEST_CASE("negative sampling head/tail frequency is near one half", "[train]") {
    // large entity pool: corruption almost never collides with the train set
    TripleStore::Builder b;
    for (int e = 0; e < 50; ++e) b.intern_entity("e" + std::to_string(e));
    b.intern_relation("r");
    b.add_triple(Split::train, Triple{0, 0, 1});
    auto store = b.build();

    Rng rng = make_rng(123);
    int heads = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto neg = sample_negative(store, Triple{0, 0, 1}, rng);
        if (neg.triple.head != 0) ++heads;
    }
    const double freq = static_cast<double>(heads) / n;
    CHECK(freq > 0.48);
    CHECK(freq < 0.52);
}

TEST_CASE("negative sampling exhaustion path on a saturated store", "[train]") {
    // |E|=2 and every corruption of (0,r,1) exists in train
    auto store = make_store({{"a", "r", "b"}, {"b", "r", "b"}, {"a", "r", "a"}, {"b", "r", "a"}});
    REQUIRE(store.entity_count() == 2);
    Rng rng = make_rng(6);
    const auto neg = sample_negative(store, Triple{0, 0, 1}, rng);
    CHECK(neg.exhausted);
}

TEST_CASE("zero learning rate cannot change parameters", "[train]") {
    auto store = make_store({{"a", "r", "b"}, {"b", "r", "c"}, {"c", "r", "a"}});
    TrainConfig config;
    config.model = ModelKind::transe;
    config.dim = 4;
    config.epochs = 3;
    config.batch_size = 2;
    config.seed = 7;
    config.learning_rate = 0.0;

    auto result = train(store, config);
    CHECK_FALSE(result.history.epochs.empty());
    CHECK(result.history.epochs[0].mean_loss > 0.0);   // loss still reported
    auto init = init_params(store.entity_count(), store.relation_count(), {}, config.model,
                            config.dim, config.seed);
    for (std::size_t e = 0; e < init.entity_count(); ++e)
        for (int i = 0; i < config.dim; ++i)
            CHECK(result.params.entity(static_cast<EntityId>(e))[i] ==
                  init.entity(static_cast<EntityId>(e))[i]);
}

TEST_CASE("satisfied margin leaves the batch untouched", "[train]") {
    // entities far apart, margin tiny: hinge inactive for the lone positive
    ModelParams params(ModelKind::transe, 2, 3, 1);
    auto set = [&](EntityId e, double x, double y) {
        params.entity(e)[0] = x;
        params.entity(e)[1] = y;
    };
    set(0, 0.1, 0.0);
    set(1, 0.1, 0.0);
    set(2, -0.9, 0.0);
    params.relation(0).plus.translation = {0.0, 0.0};

    TripleStore::Builder b;
    for (const char* n : {"a", "b", "c"}) b.intern_entity(n);
    b.intern_relation("r");
    b.add_triple(Split::train, Triple{0, 0, 1});
    auto store = b.build();

    TrainConfig config;
    config.dim = 2;
    config.margin = 0.5;
    config.epochs = 1;
    config.seed = 3;
    const ModelParams before = params;
    Rng rng = make_rng(3);
    const auto stats = train_epoch(params, store, config, rng);
    CHECK(stats.mean_loss == 0.0);
    for (std::size_t e = 0; e < 3; ++e)
        for (int i = 0; i < 2; ++i)
            CHECK(params.entity(static_cast<EntityId>(e))[i] ==
                  before.entity(static_cast<EntityId>(e))[i]);
}

TEST_CASE("epoch matches a step-through oracle on a tiny instance", "[train]") {
    // 3 entities, 2 train triples, d=2: replay the exact schedule (same rng
    // stream, same shuffle and sampling calls) but recompute every update
    // with finite-difference gradients and hand-applied arithmetic.
    auto store = make_store({{"a", "r", "b"}, {"b", "r", "c"}});
    TrainConfig config;
    config.model = ModelKind::transe;
    config.norm = Norm::l2;
    config.dim = 2;
    config.margin = 1.0;
    config.learning_rate = 0.05;
    config.batch_size = 1;
    config.seed = 11;
    config.epochs = 1;

    ModelParams params = init_params(3, 1, {}, config.model, config.dim, config.seed);
    ModelParams expected = params;

    Rng rng_impl = make_rng(11, 0x747261696eULL);
    Rng rng_oracle = make_rng(11, 0x747261696eULL);

    const auto stats = train_epoch(params, store, config, rng_impl);

    // oracle replay
    double loss_sum = 0.0;
    std::vector<std::uint32_t> order{0, 1};
    kgesym::shuffle(order, rng_oracle);
    for (std::uint32_t idx : order) {
        const Triple pos = store.split(Split::train)[idx];
        const auto neg = sample_negative(store, pos, rng_oracle);
        const double loss = oracle::pair_loss(expected, pos, neg.triple, config.margin, Norm::l2);
        loss_sum += loss;
        if (loss > 0.0) {
            const auto fd =
                oracle::fd_loss_gradient(expected, pos, neg.triple, config.margin, Norm::l2, 1e-7);
            auto components = oracle::parameter_components(expected);
            for (std::size_t i = 0; i < components.size(); ++i)
                *components[i] -= config.learning_rate * fd[i];
        }
        // constraints after each size-1 batch
        for (std::size_t e = 0; e < expected.entity_count(); ++e) {
            auto row = expected.entity(static_cast<EntityId>(e));
            double len = 0;
            for (double x : row) len += x * x;
            len = std::sqrt(len);
            if (len > 1.0)
                for (double& x : row) x /= len;
        }
    }

    CHECK(stats.mean_loss == Catch::Approx(loss_sum / 2.0).margin(1e-8));
    for (std::size_t e = 0; e < 3; ++e)
        for (int i = 0; i < 2; ++i)
            CHECK(params.entity(static_cast<EntityId>(e))[i] ==
                  Catch::Approx(expected.entity(static_cast<EntityId>(e))[i]).margin(1e-7));
    for (int i = 0; i < 2; ++i)
        CHECK(params.relation(0).plus.translation[i] ==
              Catch::Approx(expected.relation(0).plus.translation[i]).margin(1e-7));
}

TEST_CASE("zero epochs returns the initialization and an empty history", "[train]") {
    auto store = make_store({{"a", "r", "b"}});
    TrainConfig config;
    config.dim = 3;
    config.epochs = 0;
    config.seed = 21;
    auto result = train(store, config);
    CHECK(result.history.epochs.empty());
    auto init = init_params(store.entity_count(), store.relation_count(), {}, config.model,
                            config.dim, config.seed);
    for (int i = 0; i < 3; ++i) CHECK(result.params.entity(0)[i] == init.entity(0)[i]);
}

TEST_CASE("same seed gives bit-identical checkpoints", "[train]") {
    auto store = make_store({{"a", "r", "b"},
                             {"b", "r", "a"},
                             {"b", "r", "c"},
                             {"c", "s", "a"},
                             {"a", "s", "c"}});
    TrainConfig config;
    config.model = ModelKind::transh;
    config.sym_enabled = true;
    config.dim = 4;
    config.epochs = 10;
    config.batch_size = 2;
    config.seed = 31;

    auto a = train(store, config);
    auto b = train(store, config);

    TempDir dir("det");
    save_checkpoint(a.params, {a.norm, config.seed, config.epochs}, dir.path() / "a.kge");
    save_checkpoint(b.params, {b.norm, config.seed, config.epochs}, dir.path() / "b.kge");
    CHECK(testutil::read_file(dir.path() / "a.kge") == testutil::read_file(dir.path() / "b.kge"));
    CHECK(history_to_tsv(a.history) == history_to_tsv(b.history));
}

TEST_CASE("sym-disabled training allocates no pair slots", "[train]") {
    auto store = make_store({{"a", "r", "b"}, {"b", "r", "a"}});
    TrainConfig config;
    config.dim = 2;
    config.epochs = 2;
    config.sym_enabled = false;
    auto result = train(store, config);
    CHECK(result.params.paired_relations().empty());
    CHECK(result.symmetric == std::vector<RelationId>{0});   // still classified and traced
    REQUIRE_FALSE(result.history.trace_names.empty());
    CHECK(result.history.trace_names[0] == "r.norm");
}

TEST_CASE("sym-enabled training pairs exactly the classified relations", "[train]") {
    auto store = make_store({{"a", "sym", "b"}, {"b", "sym", "a"}, {"a", "asym", "b"}});
    TrainConfig config;
    config.dim = 2;
    config.epochs = 1;
    config.sym_enabled = true;
    auto result = train(store, config);
    CHECK(result.params.paired_relations() == std::vector<RelationId>{store.find_relation("sym")});
    // paired relation contributes three trace columns
    CHECK(result.history.trace_names ==
          std::vector<std::string>{"sym.plus_norm", "sym.minus_norm", "sym.diff_norm"});
}

TEST_CASE("loss decreases and parameters stay finite on a small run", "[train]") {
    Rng rng = make_rng(41);
    auto store = testutil::random_store(rng, 8, 2, 12);
    TrainConfig config;
    config.model = ModelKind::transe;
    config.dim = 8;
    config.epochs = 200;
    config.batch_size = 4;
    config.learning_rate = 0.02;
    config.seed = 41;
    auto result = train(store, config);
    REQUIRE(result.history.epochs.size() == 200);
    auto smoothed = [&](std::size_t center) {
        double s = 0.0;
        for (std::size_t i = center - 2; i <= center + 2; ++i)
            s += result.history.epochs[i].mean_loss;
        return s / 5.0;
    };
    CHECK(smoothed(197) < smoothed(2));
    CHECK(find_non_finite(result.params).empty());
}
