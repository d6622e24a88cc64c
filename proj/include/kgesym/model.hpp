#ifndef KGESYM_MODEL_HPP
#define KGESYM_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgesym/common.hpp"
#include "kgesym/rng.hpp"

namespace kgesym {

// Per-relation parameter block. `translation` is always present; `normal` is
// the unit hyperplane normal (TransH); `proj` is the relation projection
// vector of the rank-one-plus-identity entity map (TransD).
struct RelationSlot {
    std::vector<double> translation;
    std::vector<double> normal;
    std::vector<double> proj;
};

enum class Branch : std::uint8_t { single = 0, plus = 1, minus = 2 };

inline const char* branch_name(Branch b) {
    switch (b) {
        case Branch::single: return "single";
        case Branch::plus: return "plus";
        case Branch::minus: return "minus";
    }
    return "?";
}

// A relation is either a single slot or a bi-vector pair of slots. Paired
// relations score as the minimum over the two slots, which lets the two
// subvectors specialize to the two directions of a symmetric relation.
struct RelationParams {
    RelationSlot plus;                       // the only slot when not paired
    std::optional<RelationSlot> minus;

    bool is_pair() const { return minus.has_value(); }

    const RelationSlot& slot(Branch b) const {
        if (b == Branch::minus) {
            if (!minus) fail("relation has no minus slot");
            return *minus;
        }
        return plus;
    }
    RelationSlot& slot(Branch b) {
        return const_cast<RelationSlot&>(static_cast<const RelationParams*>(this)->slot(b));
    }
};

struct ScoreResult {
    double value = 0.0;
    Branch branch = Branch::single;
};

class ModelParams {
public:
    ModelParams() = default;
    ModelParams(ModelKind kind, int dim, std::size_t entity_count, std::size_t relation_count)
        : kind_(kind), dim_(dim) {
        if (dim < 1) fail("embedding dimension must be >= 1, got ", dim);
        if (entity_count == 0) fail("model needs at least one entity");
        if (relation_count == 0) fail("model needs at least one relation");
        entity_emb_.assign(entity_count * static_cast<std::size_t>(dim), 0.0);
        if (kind == ModelKind::transd)
            entity_proj_.assign(entity_count * static_cast<std::size_t>(dim), 0.0);
        relations_.resize(relation_count);
    }

    ModelKind kind() const { return kind_; }
    int dim() const { return dim_; }
    std::size_t entity_count() const {
        return entity_emb_.size() / static_cast<std::size_t>(dim_);
    }
    std::size_t relation_count() const { return relations_.size(); }

    std::span<double> entity(EntityId e) {
        return {entity_emb_.data() + static_cast<std::size_t>(e) * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<const double> entity(EntityId e) const {
        return {entity_emb_.data() + static_cast<std::size_t>(e) * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<double> entity_proj(EntityId e) {
        return {entity_proj_.data() + static_cast<std::size_t>(e) * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<const double> entity_proj(EntityId e) const {
        return {entity_proj_.data() + static_cast<std::size_t>(e) * dim_, static_cast<std::size_t>(dim_)};
    }

    RelationParams& relation(RelationId r) { return relations_.at(static_cast<std::size_t>(r)); }
    const RelationParams& relation(RelationId r) const {
        return relations_.at(static_cast<std::size_t>(r));
    }

    std::vector<RelationId> paired_relations() const {
        std::vector<RelationId> ids;
        for (std::size_t r = 0; r < relations_.size(); ++r)
            if (relations_[r].is_pair()) ids.push_back(static_cast<RelationId>(r));
        return ids;
    }

    std::vector<double>& entity_table() { return entity_emb_; }
    const std::vector<double>& entity_table() const { return entity_emb_; }
    std::vector<double>& entity_proj_table() { return entity_proj_; }
    const std::vector<double>& entity_proj_table() const { return entity_proj_; }

private:
    ModelKind kind_ = ModelKind::transe;
    int dim_ = 0;
    std::vector<double> entity_emb_;
    std::vector<double> entity_proj_;   // TransD only
    std::vector<RelationParams> relations_;
};

namespace vec {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_value(std::span<const double> a, Norm n) {
    double s = 0.0;
    if (n == Norm::l1) {
        for (double x : a) s += std::fabs(x);
        return s;
    }
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

// d||u||/du. L1 subgradient is 0 at a kink component; the L2 gradient at the
// zero vector is defined as 0.
inline std::vector<double> norm_gradient(std::span<const double> u, Norm n) {
    std::vector<double> g(u.size(), 0.0);
    if (n == Norm::l1) {
        for (std::size_t i = 0; i < u.size(); ++i)
            g[i] = u[i] > 0.0 ? 1.0 : (u[i] < 0.0 ? -1.0 : 0.0);
        return g;
    }
    const double len = l2_norm(u);
    if (len > 0.0)
        for (std::size_t i = 0; i < u.size(); ++i) g[i] = u[i] / len;
    return g;
}

inline void scale_to_unit(std::span<double> a) {
    const double len = l2_norm(a);
    if (len == 0.0) fail("cannot normalize a zero vector");
    for (double& x : a) x /= len;
}

// Projection onto the closed unit ball: rescale only when outside.
inline void clip_to_unit_ball(std::span<double> a) {
    const double len = l2_norm(a);
    if (len > 1.0)
        for (double& x : a) x /= len;
}

}  // namespace vec

namespace detail {

inline void check_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) fail("dimension mismatch: ", what, " has ", got, ", expected ", want);
}

}  // namespace detail

// ||h + r - t||
inline double score_transe(std::span<const double> h, std::span<const double> r,
                           std::span<const double> t, Norm norm) {
    detail::check_dim(r.size(), h.size(), "relation vector");
    detail::check_dim(t.size(), h.size(), "tail vector");
    std::vector<double> u(h.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = h[i] + r[i] - t[i];
    return vec::norm_value(u, norm);
}

// ||(h - w^T h w) + r - (t - w^T t w)|| with unit normal w.
inline double score_transh(std::span<const double> h, std::span<const double> w,
                           std::span<const double> r, std::span<const double> t, Norm norm) {
    detail::check_dim(w.size(), h.size(), "hyperplane normal");
    detail::check_dim(r.size(), h.size(), "relation vector");
    detail::check_dim(t.size(), h.size(), "tail vector");
    const double wh = vec::dot(w, h);
    const double wt = vec::dot(w, t);
    std::vector<double> u(h.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = (h[i] - wh * w[i]) + r[i] - (t[i] - wt * w[i]);
    return vec::norm_value(u, norm);
}

// ||(h + (hp.h) rp) + r - (t + (tp.t) rp)||. The rank-one-plus-identity maps
// M_h = rp hp^T + I and M_t = rp tp^T + I are never materialized.
inline double score_transd(std::span<const double> h, std::span<const double> hp,
                           std::span<const double> r, std::span<const double> rp,
                           std::span<const double> t, std::span<const double> tp, Norm norm) {
    detail::check_dim(hp.size(), h.size(), "head projection");
    detail::check_dim(r.size(), h.size(), "relation vector");
    detail::check_dim(rp.size(), h.size(), "relation projection");
    detail::check_dim(t.size(), h.size(), "tail vector");
    detail::check_dim(tp.size(), h.size(), "tail projection");
    const double a = vec::dot(hp, h);
    const double b = vec::dot(tp, t);
    std::vector<double> u(h.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = h[i] - t[i] + r[i] + (a - b) * rp[i];
    return vec::norm_value(u, norm);
}

inline double slot_score(const ModelParams& params, const RelationSlot& slot, EntityId head,
                         EntityId tail, Norm norm) {
    const auto h = params.entity(head);
    const auto t = params.entity(tail);
    switch (params.kind()) {
        case ModelKind::transe:
            return score_transe(h, slot.translation, t, norm);
        case ModelKind::transh:
            return score_transh(h, slot.normal, slot.translation, t, norm);
        case ModelKind::transd:
            return score_transd(h, params.entity_proj(head), slot.translation, slot.proj, t,
                                params.entity_proj(tail), norm);
    }
    fail("unreachable model kind");
}

// Dispatches to the relation's slot(s). A paired relation scores as the
// minimum of the two subvector scores; ties select the plus branch.
inline ScoreResult score(const ModelParams& params, const Triple& triple, Norm norm) {
    const RelationParams& rel = params.relation(triple.relation);
    if (!rel.is_pair())
        return {slot_score(params, rel.plus, triple.head, triple.tail, norm), Branch::single};
    const double plus = slot_score(params, rel.plus, triple.head, triple.tail, norm);
    const double minus = slot_score(params, *rel.minus, triple.head, triple.tail, norm);
    if (plus <= minus) return {plus, Branch::plus};
    return {minus, Branch::minus};
}

// Every component uniform in [-6/sqrt(d), 6/sqrt(d)]; entity embeddings and
// TransH normals are then scaled to unit length. Pair slots are allocated for
// the given relations, both subvectors drawn independently from the same
// distribution. Deterministic in `seed`.
inline ModelParams init_params(std::size_t entity_count, std::size_t relation_count,
                               const std::vector<RelationId>& symmetric_relations, ModelKind kind,
                               int dim, std::uint64_t seed) {
    ModelParams params(kind, dim, entity_count, relation_count);
    const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
    Rng rng = make_rng(seed, /*stream=*/0x696e6974ULL);

    auto draw = [&](std::span<double> v) {
        for (double& x : v) x = uniform_real(rng, -bound, bound);
    };

    for (std::size_t e = 0; e < entity_count; ++e) {
        auto row = params.entity(static_cast<EntityId>(e));
        draw(row);
        vec::scale_to_unit(row);
    }
    if (kind == ModelKind::transd)
        for (std::size_t e = 0; e < entity_count; ++e)
            draw(params.entity_proj(static_cast<EntityId>(e)));

    auto init_slot = [&](RelationSlot& slot) {
        slot.translation.resize(static_cast<std::size_t>(dim));
        draw(slot.translation);
        if (kind == ModelKind::transh) {
            slot.normal.resize(static_cast<std::size_t>(dim));
            draw(slot.normal);
            vec::scale_to_unit(slot.normal);
        }
        if (kind == ModelKind::transd) {
            slot.proj.resize(static_cast<std::size_t>(dim));
            draw(slot.proj);
        }
    };

    std::vector<bool> paired(relation_count, false);
    for (RelationId r : symmetric_relations) {
        if (r < 0 || static_cast<std::size_t>(r) >= relation_count)
            fail("symmetric relation id ", r, " out of range [0, ", relation_count, ")");
        paired[static_cast<std::size_t>(r)] = true;
    }
    for (std::size_t r = 0; r < relation_count; ++r) {
        RelationParams& rel = params.relation(static_cast<RelationId>(r));
        init_slot(rel.plus);
        if (paired[r]) {
            rel.minus.emplace();
            init_slot(*rel.minus);
        }
    }
    return params;
}

// Identifies one parameter vector: an entity row, an entity projection row,
// or one field of one relation slot.
struct ParamKey {
    enum class Kind : std::uint8_t { entity_emb, entity_proj, rel_translation, rel_normal, rel_proj };
    Kind kind = Kind::entity_emb;
    std::int32_t index = 0;            // entity id or relation id
    Branch branch = Branch::single;    // meaningful for rel_* kinds

    friend bool operator<(const ParamKey& a, const ParamKey& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.index != b.index) return a.index < b.index;
        return a.branch < b.branch;
    }
    friend bool operator==(const ParamKey&, const ParamKey&) = default;
};

inline std::string param_key_name(const ParamKey& key) {
    switch (key.kind) {
        case ParamKey::Kind::entity_emb: return detail::concat("entity_emb[", key.index, "]");
        case ParamKey::Kind::entity_proj: return detail::concat("entity_proj[", key.index, "]");
        case ParamKey::Kind::rel_translation:
            return detail::concat("relation[", key.index, "].", branch_name(key.branch), ".translation");
        case ParamKey::Kind::rel_normal:
            return detail::concat("relation[", key.index, "].", branch_name(key.branch), ".normal");
        case ParamKey::Kind::rel_proj:
            return detail::concat("relation[", key.index, "].", branch_name(key.branch), ".proj");
    }
    return "?";
}

// Sparse gradient: touched parameter vectors only. std::map keeps the
// application order deterministic.
using GradientSet = std::map<ParamKey, std::vector<double>>;

namespace detail {

inline std::vector<double>& grad_entry(GradientSet& grads, const ParamKey& key, int dim) {
    auto [it, inserted] = grads.try_emplace(key);
    if (inserted) it->second.assign(static_cast<std::size_t>(dim), 0.0);
    return it->second;
}

inline void axpy(std::vector<double>& out, double a, std::span<const double> x) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * x[i];
}

// Adds scale * d f(h, r, t)/d theta for one slot evaluation to `grads`.
// `branch` tags the relation-side keys so paired slots accumulate separately.
inline void accumulate_slot_gradient(const ModelParams& params, const RelationSlot& slot,
                                     Branch branch, const Triple& triple, Norm norm, double scale,
                                     GradientSet& grads) {
    const int dim = params.dim();
    const auto h = params.entity(triple.head);
    const auto t = params.entity(triple.tail);
    std::vector<double> u(static_cast<std::size_t>(dim));

    switch (params.kind()) {
        case ModelKind::transe: {
            for (int i = 0; i < dim; ++i) u[i] = h[i] + slot.translation[i] - t[i];
            const std::vector<double> g = vec::norm_gradient(u, norm);
            axpy(grad_entry(grads, {ParamKey::Kind::rel_translation, triple.relation, branch}, dim),
                 scale, g);
            axpy(grad_entry(grads, {ParamKey::Kind::entity_emb, triple.head, Branch::single}, dim),
                 scale, g);
            axpy(grad_entry(grads, {ParamKey::Kind::entity_emb, triple.tail, Branch::single}, dim),
                 -scale, g);
            return;
        }
        case ModelKind::transh: {
            const auto& w = slot.normal;
            std::vector<double> delta(static_cast<std::size_t>(dim));
            for (int i = 0; i < dim; ++i) delta[i] = h[i] - t[i];
            const double wd = vec::dot(w, delta);
            for (int i = 0; i < dim; ++i) u[i] = delta[i] + slot.translation[i] - wd * w[i];
            const std::vector<double> g = vec::norm_gradient(u, norm);
            const double wg = vec::dot(w, g);

            axpy(grad_entry(grads, {ParamKey::Kind::rel_translation, triple.relation, branch}, dim),
                 scale, g);
            // d f / d h = g - (w.g) w ; tail is the negative.
            auto& gh = grad_entry(grads, {ParamKey::Kind::entity_emb, triple.head, Branch::single}, dim);
            auto& gt = grad_entry(grads, {ParamKey::Kind::entity_emb, triple.tail, Branch::single}, dim);
            for (int i = 0; i < dim; ++i) {
                const double v = g[i] - wg * w[i];
                gh[i] += scale * v;
                gt[i] -= scale * v;
            }
            // d f / d w = -((g.w) delta + (w.delta) g)
            auto& gw = grad_entry(grads, {ParamKey::Kind::rel_normal, triple.relation, branch}, dim);
            for (int i = 0; i < dim; ++i) gw[i] += scale * (-(wg * delta[i] + wd * g[i]));
            return;
        }
        case ModelKind::transd: {
            const auto hp = params.entity_proj(triple.head);
            const auto tp = params.entity_proj(triple.tail);
            const auto& rp = slot.proj;
            const double a = vec::dot(hp, h);
            const double b = vec::dot(tp, t);
            for (int i = 0; i < dim; ++i)
                u[i] = h[i] - t[i] + slot.translation[i] + (a - b) * rp[i];
            const std::vector<double> g = vec::norm_gradient(u, norm);
            const double grp = vec::dot(std::span<const double>(g), std::span<const double>(rp));

            axpy(grad_entry(grads, {ParamKey::Kind::rel_translation, triple.relation, branch}, dim),
                 scale, g);
            auto& gh = grad_entry(grads, {ParamKey::Kind::entity_emb, triple.head, Branch::single}, dim);
            auto& gt = grad_entry(grads, {ParamKey::Kind::entity_emb, triple.tail, Branch::single}, dim);
            auto& ghp = grad_entry(grads, {ParamKey::Kind::entity_proj, triple.head, Branch::single}, dim);
            auto& gtp = grad_entry(grads, {ParamKey::Kind::entity_proj, triple.tail, Branch::single}, dim);
            for (int i = 0; i < dim; ++i) {
                gh[i] += scale * (g[i] + grp * hp[i]);
                gt[i] -= scale * (g[i] + grp * tp[i]);
                ghp[i] += scale * grp * h[i];
                gtp[i] -= scale * grp * t[i];
            }
            auto& grel = grad_entry(grads, {ParamKey::Kind::rel_proj, triple.relation, branch}, dim);
            axpy(grel, scale * (a - b), g);
            return;
        }
    }
    fail("unreachable model kind");
}

}  // namespace detail

// Margin ranking loss for one (positive, negative) pair:
//   loss = max(0, margin + f(pos) - f(neg)).
// When the hinge is active, adds d loss/d theta into `grads` for exactly the
// touched parameters. For paired relations only the branch selected by the
// min receives gradient, independently for pos and neg. Returns the loss.
inline double accumulate_gradients(const ModelParams& params, const Triple& pos, const Triple& neg,
                                   double margin, Norm norm, GradientSet& grads) {
    if (pos.relation != neg.relation)
        fail("positive and negative triples must share the relation, got ", pos.relation, " and ",
             neg.relation);
    if (margin <= 0.0) fail("margin must be positive, got ", margin);

    const ScoreResult fp = score(params, pos, norm);
    const ScoreResult fn = score(params, neg, norm);
    const double loss = margin + fp.value - fn.value;
    if (loss <= 0.0) return 0.0;

    const RelationParams& rel = params.relation(pos.relation);
    detail::accumulate_slot_gradient(params, rel.slot(fp.branch), fp.branch, pos, norm, +1.0, grads);
    detail::accumulate_slot_gradient(params, rel.slot(fn.branch), fn.branch, neg, norm, -1.0, grads);
    return loss;
}

inline std::pair<GradientSet, double> gradients(const ModelParams& params, const Triple& pos,
                                                const Triple& neg, double margin, Norm norm) {
    GradientSet grads;
    const double loss = accumulate_gradients(params, pos, neg, margin, norm, grads);
    return {std::move(grads), loss};
}

inline void apply_update(ModelParams& params, const GradientSet& grads, double learning_rate) {
    for (const auto& [key, g] : grads) {
        std::span<double> target;
        switch (key.kind) {
            case ParamKey::Kind::entity_emb: target = params.entity(key.index); break;
            case ParamKey::Kind::entity_proj: target = params.entity_proj(key.index); break;
            case ParamKey::Kind::rel_translation:
                target = params.relation(key.index).slot(key.branch).translation;
                break;
            case ParamKey::Kind::rel_normal:
                target = params.relation(key.index).slot(key.branch).normal;
                break;
            case ParamKey::Kind::rel_proj:
                target = params.relation(key.index).slot(key.branch).proj;
                break;
        }
        for (std::size_t i = 0; i < target.size(); ++i) target[i] -= learning_rate * g[i];
    }
}

// Entity embeddings back onto the closed unit ball; TransH normals back onto
// the unit sphere. Relation translations and projections are untouched.
inline void apply_constraints(ModelParams& params) {
    for (std::size_t e = 0; e < params.entity_count(); ++e)
        vec::clip_to_unit_ball(params.entity(static_cast<EntityId>(e)));
    if (params.kind() == ModelKind::transh) {
        for (std::size_t r = 0; r < params.relation_count(); ++r) {
            RelationParams& rel = params.relation(static_cast<RelationId>(r));
            vec::scale_to_unit(rel.plus.normal);
            if (rel.is_pair()) vec::scale_to_unit(rel.minus->normal);
        }
    }
}

// Returns the name of the first parameter block holding a non-finite value,
// or an empty string when all parameters are finite.
inline std::string find_non_finite(const ModelParams& params) {
    auto finite = [](std::span<const double> v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    for (std::size_t e = 0; e < params.entity_count(); ++e)
        if (!finite(params.entity(static_cast<EntityId>(e))))
            return param_key_name({ParamKey::Kind::entity_emb, static_cast<std::int32_t>(e), Branch::single});
    if (params.kind() == ModelKind::transd)
        for (std::size_t e = 0; e < params.entity_count(); ++e)
            if (!finite(params.entity_proj(static_cast<EntityId>(e))))
                return param_key_name({ParamKey::Kind::entity_proj, static_cast<std::int32_t>(e), Branch::single});
    for (std::size_t r = 0; r < params.relation_count(); ++r) {
        const RelationParams& rel = params.relation(static_cast<RelationId>(r));
        const Branch branches[] = {rel.is_pair() ? Branch::plus : Branch::single, Branch::minus};
        const int nb = rel.is_pair() ? 2 : 1;
        for (int bi = 0; bi < nb; ++bi) {
            const RelationSlot& slot = rel.slot(branches[bi]);
            const auto idx = static_cast<std::int32_t>(r);
            if (!finite(slot.translation))
                return param_key_name({ParamKey::Kind::rel_translation, idx, branches[bi]});
            if (!slot.normal.empty() && !finite(slot.normal))
                return param_key_name({ParamKey::Kind::rel_normal, idx, branches[bi]});
            if (!slot.proj.empty() && !finite(slot.proj))
                return param_key_name({ParamKey::Kind::rel_proj, idx, branches[bi]});
        }
    }
    return {};
}

inline double mean_entity_norm(const ModelParams& params) {
    double sum = 0.0;
    for (std::size_t e = 0; e < params.entity_count(); ++e)
        sum += vec::l2_norm(params.entity(static_cast<EntityId>(e)));
    return sum / static_cast<double>(params.entity_count());
}

}  // namespace kgesym

#endif
