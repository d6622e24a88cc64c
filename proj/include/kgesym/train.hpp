#ifndef KGESYM_TRAIN_HPP
#define KGESYM_TRAIN_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "kgesym/common.hpp"
#include "kgesym/data.hpp"
#include "kgesym/model.hpp"
#include "kgesym/rng.hpp"

namespace kgesym {

struct TrainConfig {
    ModelKind model = ModelKind::transe;
    bool sym_enabled = false;          // allocate bi-vector slots for classified-symmetric relations
    int dim = 50;
    double margin = 1.0;
    std::optional<Norm> norm;          // defaults to l1 for TransE, l2 otherwise
    double learning_rate = 0.01;
    int epochs = 500;
    int batch_size = 1024;
    int negatives_per_positive = 1;
    std::uint64_t seed = 42;
    double threshold = 0.5;            // symmetric classification threshold
    SplitSelector classify_selector = SplitSelector::all;

    Norm effective_norm() const {
        if (norm) return *norm;
        return model == ModelKind::transe ? Norm::l1 : Norm::l2;
    }

    void validate() const {
        if (dim < 1) fail("dim must be >= 1, got ", dim);
        if (!(margin > 0.0)) fail("margin must be positive, got ", margin);
        if (!(learning_rate >= 0.0)) fail("learning rate must be >= 0, got ", learning_rate);
        if (epochs < 0) fail("epochs must be >= 0, got ", epochs);
        if (batch_size < 1) fail("batch size must be >= 1, got ", batch_size);
        if (negatives_per_positive < 1)
            fail("negatives per positive must be >= 1, got ", negatives_per_positive);
        if (!(threshold > 0.0 && threshold <= 1.0))
            fail("threshold must be in (0, 1], got ", threshold);
    }
};

struct NegativeSample {
    Triple triple;
    bool exhausted = false;   // resampling gave up after the attempt bound
};

// Uniform corruption: flip a fair coin for head vs tail, draw the replacement
// uniformly over E, and resample while the corrupted triple is in the train
// split. After 100 failed attempts the last candidate is returned and flagged.
inline NegativeSample sample_negative(const TripleStore& store, const Triple& pos, Rng& rng) {
    if (store.entity_count() == 0) fail("cannot sample negatives from an empty store");
    constexpr int kMaxAttempts = 100;
    Triple candidate = pos;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        candidate = pos;
        const EntityId e = static_cast<EntityId>(uniform_index(rng, store.entity_count()));
        if (coin_flip(rng))
            candidate.head = e;
        else
            candidate.tail = e;
        if (!store.contains(Split::train, candidate)) return {candidate, false};
    }
    return {candidate, true};
}

struct EpochStats {
    double mean_loss = 0.0;
    long pairs = 0;               // (positive, negative) pairs evaluated
    long active_pairs = 0;        // pairs with a positive hinge
    long exhausted_negatives = 0;
};

// One pass over a seeded shuffle of the train split. Gradients are summed
// over each minibatch, applied in one SGD step, and constraints projected
// once per batch.
inline EpochStats train_epoch(ModelParams& params, const TripleStore& store,
                              const TrainConfig& config, Rng& rng) {
    const Norm norm = config.effective_norm();
    const auto& train = store.split(Split::train);
    if (train.empty()) fail("train split is empty");

    std::vector<std::uint32_t> order(train.size());
    std::iota(order.begin(), order.end(), 0u);
    shuffle(order, rng);

    EpochStats stats;
    double loss_sum = 0.0;
    GradientSet batch_grads;
    std::size_t in_batch = 0;

    auto flush = [&]() {
        if (in_batch == 0) return;
        apply_update(params, batch_grads, config.learning_rate);
        apply_constraints(params);
        batch_grads.clear();
        in_batch = 0;
    };

    for (std::uint32_t idx : order) {
        const Triple& pos = train[idx];
        for (int k = 0; k < config.negatives_per_positive; ++k) {
            const NegativeSample neg = sample_negative(store, pos, rng);
            if (neg.exhausted) stats.exhausted_negatives += 1;
            const double loss =
                accumulate_gradients(params, pos, neg.triple, config.margin, norm, batch_grads);
            if (!std::isfinite(loss))
                fail("non-finite loss at positive (", pos.head, ",", pos.relation, ",", pos.tail, ")");
            loss_sum += loss;
            stats.pairs += 1;
            if (loss > 0.0) stats.active_pairs += 1;
        }
        if (++in_batch >= static_cast<std::size_t>(config.batch_size)) flush();
    }
    flush();

    if (const std::string block = find_non_finite(params); !block.empty())
        fail("non-finite parameter after epoch in block ", block);

    stats.mean_loss = stats.pairs == 0 ? 0.0 : loss_sum / static_cast<double>(stats.pairs);
    return stats;
}

// Norm traces recorded each epoch for classified-symmetric relations: the
// translation norm for single-vector relations; both subvector norms and
// their difference norm for paired relations.
struct TraceSpec {
    struct Column {
        std::string name;
        RelationId relation;
        enum class What { single_norm, plus_norm, minus_norm, diff_norm } what;
    };
    std::vector<Column> columns;

    static TraceSpec build(const TripleStore& store, const ModelParams& params,
                           const std::vector<RelationId>& traced) {
        TraceSpec spec;
        for (RelationId r : traced) {
            std::string base = store.relation_name(r);
            for (char& c : base)
                if (c == '\t' || c == ' ') c = '_';
            using What = Column::What;
            if (params.relation(r).is_pair()) {
                spec.columns.push_back({base + ".plus_norm", r, What::plus_norm});
                spec.columns.push_back({base + ".minus_norm", r, What::minus_norm});
                spec.columns.push_back({base + ".diff_norm", r, What::diff_norm});
            } else {
                spec.columns.push_back({base + ".norm", r, What::single_norm});
            }
        }
        return spec;
    }

    std::vector<double> sample(const ModelParams& params) const {
        std::vector<double> values;
        values.reserve(columns.size());
        for (const auto& col : columns) {
            const RelationParams& rel = params.relation(col.relation);
            using What = Column::What;
            switch (col.what) {
                case What::single_norm:
                    values.push_back(vec::l2_norm(rel.plus.translation));
                    break;
                case What::plus_norm:
                    values.push_back(vec::l2_norm(rel.plus.translation));
                    break;
                case What::minus_norm:
                    values.push_back(vec::l2_norm(rel.minus->translation));
                    break;
                case What::diff_norm: {
                    std::vector<double> diff = rel.plus.translation;
                    for (std::size_t i = 0; i < diff.size(); ++i)
                        diff[i] -= rel.minus->translation[i];
                    values.push_back(vec::l2_norm(diff));
                    break;
                }
            }
        }
        return values;
    }
};

struct TrainHistory {
    struct Epoch {
        int epoch = 0;
        double mean_loss = 0.0;
        double mean_entity_norm = 0.0;
        std::vector<double> traces;
        double seconds = 0.0;
    };
    std::vector<std::string> trace_names;
    std::vector<Epoch> epochs;
};

struct TrainResult {
    ModelParams params;
    TrainHistory history;
    std::vector<RelationId> symmetric;   // classified at setup, traced either way
    Norm norm = Norm::l1;
};

// Full training run: classify symmetric relations, initialize (bi-vector
// slots when sym_enabled), then SGD over the margin ranking loss for
// config.epochs epochs. Deterministic in config.seed.
inline TrainResult train(const TripleStore& store, const TrainConfig& config) {
    config.validate();
    if (store.entity_count() == 0 || store.relation_count() == 0)
        fail("cannot train on an empty vocabulary");

    TrainResult result;
    result.norm = config.effective_norm();
    result.symmetric = classify_symmetric(store, config.threshold, config.classify_selector).symmetric;

    const std::vector<RelationId> paired =
        config.sym_enabled ? result.symmetric : std::vector<RelationId>{};
    result.params = init_params(store.entity_count(), store.relation_count(), paired, config.model,
                                config.dim, config.seed);

    const TraceSpec traces = TraceSpec::build(store, result.params, result.symmetric);
    result.history.trace_names.reserve(traces.columns.size());
    for (const auto& col : traces.columns) result.history.trace_names.push_back(col.name);

    Rng rng = make_rng(config.seed, /*stream=*/0x747261696eULL);
    long exhausted_total = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const EpochStats stats = train_epoch(result.params, store, config, rng);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

        TrainHistory::Epoch row;
        row.epoch = epoch;
        row.mean_loss = stats.mean_loss;
        row.mean_entity_norm = mean_entity_norm(result.params);
        row.traces = traces.sample(result.params);
        row.seconds = elapsed.count();
        result.history.epochs.push_back(std::move(row));
        exhausted_total += stats.exhausted_negatives;
    }
    if (exhausted_total > 0)
        std::cerr << "warning: negative sampling hit the attempt bound " << exhausted_total
                  << " time(s); corrupted train triples were used\n";
    return result;
}

}  // namespace kgesym

#endif
