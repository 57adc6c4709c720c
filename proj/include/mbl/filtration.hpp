#pragma once

// Finite regular filtrations of an interval, stored as an atom tree.
//
// Every atom is a half-open interval; the children of a split atom tile it in
// left-to-right order and each occupies at least a delta-fraction of it.  Leaves
// are numbered left to right, so every atom covers a contiguous range of leaf
// indices; all function calculus downstream works on those ranges.
//
// An atom that is not split at its own level stays a leaf forever: it is carried
// unchanged through the later partitions A_{n+1}, ..., A_N.

#include "mbl/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mbl {

struct Atom {
    AtomId id = 0;
    double a = 0.0;
    double b = 1.0;
    double measure = 1.0;
    int level = 0;
    std::optional<AtomId> parent;
    std::vector<AtomId> children;

    // Leaf-index range [leaf_begin, leaf_end) covered by this atom.
    std::size_t leaf_begin = 0;
    std::size_t leaf_end = 0;

    bool is_split() const { return !children.empty(); }
    std::size_t leaf_count() const { return leaf_end - leaf_begin; }
};

/// Set of atoms partitioning the root interval, ordered by left endpoint.
using Partition = std::vector<AtomId>;

/// One atom split of the refiltration; events are ordered by level, then left endpoint.
struct SplitEvent {
    AtomId atom = 0;
    std::size_t order_index = 0;
};

class Filtration;
using FiltrationPtr = std::shared_ptr<const Filtration>;

class Filtration {
public:
    /// Validates the atom tree and derives leaves, level partitions and the split schedule.
    /// Atom ids must equal their position in `atoms`.
    static FiltrationPtr create(int depth, double delta, std::vector<Atom> atoms) {
        return std::shared_ptr<const Filtration>(new Filtration(depth, delta, std::move(atoms)));
    }

    int depth() const { return depth_; }
    double delta() const { return delta_; }

    const std::vector<Atom>& atoms() const { return atoms_; }
    const Atom& atom(AtomId id) const {
        require(id < atoms_.size(), "atom id out of range");
        return atoms_[id];
    }
    const Atom& root() const { return atoms_[root_]; }
    AtomId root_id() const { return root_; }

    std::size_t num_leaves() const { return leaves_.size(); }
    /// Leaf atom ids in left-to-right order.
    const std::vector<AtomId>& leaves() const { return leaves_; }
    /// Leaf measures, indexed like leaves().
    const Eigen::VectorXd& leaf_weights() const { return leaf_weights_; }

    /// Atom set A_n of F_n, n in [0, depth].
    const Partition& level(int n) const {
        require(n >= 0 && n <= depth_, "level out of range");
        return levels_[static_cast<std::size_t>(n)];
    }

    /// Atoms that are eventually split (the set of counterparts of dyadic intervals).
    const std::vector<AtomId>& dyadic_set() const { return dyadic_set_; }

    const std::vector<SplitEvent>& split_schedule() const { return schedule_; }

    std::optional<SplitEvent> event_of(AtomId id) const {
        const auto& at = atom(id);
        if (!at.is_split()) return std::nullopt;
        return schedule_[event_index_[id]];
    }

    /// Partition of F_J^prev: J still whole, every earlier event applied.
    Partition prev_partition(const SplitEvent& e) const {
        return partition_for_order(schedule_order_, e.order_index, false);
    }

    /// Partition of F_J: F_J^prev with J replaced by its children.
    Partition post_partition(const SplitEvent& e) const {
        return partition_for_order(schedule_order_, e.order_index, true);
    }

    /// Same as prev/post_partition, for an alternative event order (see validate_split_order).
    Partition partition_for_order(std::span<const AtomId> order, std::size_t k, bool after) const {
        require(k < order.size(), "event index out of range");
        const int lvl = atom(order[k]).level;
        std::vector<char> applied(atoms_.size(), 0);
        for (std::size_t j = 0; j < k + (after ? 1 : 0); ++j) {
            if (atoms_[order[j]].level == lvl) applied[order[j]] = 1;
        }
        Partition out;
        for (AtomId id : level(lvl)) {
            if (applied[id]) {
                const auto& ch = atoms_[id].children;
                out.insert(out.end(), ch.begin(), ch.end());
            } else {
                out.push_back(id);
            }
        }
        return out;
    }

    /// Checks that `order` lists every split atom once, in nondecreasing level.
    void validate_split_order(std::span<const AtomId> order) const {
        require(order.size() == dyadic_set_.size(), "split order must list every split atom");
        std::vector<char> seen(atoms_.size(), 0);
        int last_level = 0;
        for (AtomId id : order) {
            const auto& at = atom(id);
            require(at.is_split(), "split order contains an atom that is never split");
            require(!seen[id], "split order repeats an atom");
            require(at.level >= last_level, "split order must be nondecreasing in level");
            seen[id] = 1;
            last_level = at.level;
        }
    }

    /// True when `p` consists of atoms of this filtration tiling the root interval.
    bool is_partition(std::span<const AtomId> p) const {
        std::size_t next = 0;
        for (AtomId id : p) {
            if (id >= atoms_.size()) return false;
            const auto& at = atoms_[id];
            if (at.leaf_begin != next) return false;
            next = at.leaf_end;
        }
        return next == leaves_.size();
    }

private:
    Filtration(int depth, double delta, std::vector<Atom> atoms)
        : depth_(depth), delta_(delta), atoms_(std::move(atoms)) {
        require(depth_ >= 1, "filtration depth must be at least 1");
        require(delta_ > 0.0 && delta_ <= 0.5, "delta must lie in (0, 1/2]");
        require(!atoms_.empty(), "filtration has no atoms");

        std::optional<AtomId> root;
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            auto& at = atoms_[i];
            require(at.id == i, "atom ids must equal their index");
            require(at.a < at.b, "atom interval must satisfy a < b");
            at.measure = at.b - at.a;
            if (!at.parent) {
                require(!root, "filtration has more than one root");
                root = i;
            }
        }
        require(root.has_value(), "filtration has no root");
        root_ = *root;
        require(atoms_[root_].level == 0, "root must have level 0");

        const double ratio_floor = delta_ * (1.0 - 1e-12);
        std::size_t reached = 0;
        int max_level = 0;
        std::vector<AtomId> stack{root_};
        // Depth-first, children pushed in reverse so leaves come out left to right.
        while (!stack.empty()) {
            const AtomId id = stack.back();
            stack.pop_back();
            ++reached;
            auto& at = atoms_[id];
            max_level = std::max(max_level, at.level);
            require(at.level <= depth_, "atom level exceeds filtration depth");
            if (at.children.empty()) {
                at.leaf_begin = leaves_.size();
                at.leaf_end = at.leaf_begin + 1;
                leaves_.push_back(id);
                continue;
            }
            require(at.children.size() >= 2, "a split atom needs at least two children");
            require(at.level < depth_, "atoms at the final level cannot be split");
            double edge = at.a;
            double total = 0.0;
            for (AtomId c : at.children) {
                require(c < atoms_.size(), "child id out of range");
                const auto& ch = atoms_[c];
                require(ch.parent && *ch.parent == id, "child does not point back to its parent");
                require(ch.level == at.level + 1, "child level must be parent level + 1");
                require(ch.a == edge, "children must tile the parent interval in order");
                require(ch.measure / at.measure >= ratio_floor,
                        "child measure ratio below the regularity parameter");
                edge = ch.b;
                total += ch.measure;
            }
            require(edge == at.b, "children must end at the parent's right endpoint");
            require(std::abs(total - at.measure) <= 1e-12 * at.measure,
                    "child measures must sum to the parent measure");
            for (auto it = at.children.rbegin(); it != at.children.rend(); ++it) stack.push_back(*it);
        }
        require(reached == atoms_.size(), "atom tree is not connected");
        require(max_level == depth_, "deepest atom level must equal the filtration depth");

        // Leaf ranges of interior atoms, bottom-up by decreasing level.
        std::vector<AtomId> by_level(atoms_.size());
        for (std::size_t i = 0; i < by_level.size(); ++i) by_level[i] = i;
        std::stable_sort(by_level.begin(), by_level.end(),
                         [&](AtomId x, AtomId y) { return atoms_[x].level > atoms_[y].level; });
        for (AtomId id : by_level) {
            auto& at = atoms_[id];
            if (at.children.empty()) continue;
            at.leaf_begin = atoms_[at.children.front()].leaf_begin;
            at.leaf_end = atoms_[at.children.back()].leaf_end;
        }

        leaf_weights_.resize(static_cast<Eigen::Index>(leaves_.size()));
        for (std::size_t i = 0; i < leaves_.size(); ++i) {
            leaf_weights_[static_cast<Eigen::Index>(i)] = atoms_[leaves_[i]].measure;
        }

        levels_.resize(static_cast<std::size_t>(depth_) + 1);
        levels_[0] = {root_};
        for (int n = 1; n <= depth_; ++n) {
            Partition next;
            for (AtomId id : levels_[static_cast<std::size_t>(n - 1)]) {
                const auto& ch = atoms_[id].children;
                if (ch.empty()) {
                    next.push_back(id);
                } else {
                    next.insert(next.end(), ch.begin(), ch.end());
                }
            }
            levels_[static_cast<std::size_t>(n)] = std::move(next);
        }

        // Level-major, left endpoint within a level: the fixed refiltration order.
        // A split atom belongs to exactly one level partition, so no duplicates arise.
        for (const auto& lvl : levels_) {
            for (AtomId id : lvl) {
                if (atoms_[id].is_split()) dyadic_set_.push_back(id);
            }
        }
        event_index_.assign(atoms_.size(), 0);
        for (std::size_t k = 0; k < dyadic_set_.size(); ++k) {
            schedule_.push_back(SplitEvent{dyadic_set_[k], k});
            schedule_order_.push_back(dyadic_set_[k]);
            event_index_[dyadic_set_[k]] = k;
        }
    }

    int depth_;
    double delta_;
    std::vector<Atom> atoms_;
    AtomId root_ = 0;
    std::vector<AtomId> leaves_;
    Eigen::VectorXd leaf_weights_;
    std::vector<Partition> levels_;
    std::vector<AtomId> dyadic_set_;
    std::vector<SplitEvent> schedule_;
    std::vector<AtomId> schedule_order_;
    std::vector<std::size_t> event_index_;
};

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

namespace detail {

inline AtomId add_child(std::vector<Atom>& atoms, AtomId parent, double a, double b) {
    Atom ch;
    ch.id = atoms.size();
    ch.a = a;
    ch.b = b;
    ch.measure = b - a;
    ch.level = atoms[parent].level + 1;
    ch.parent = parent;
    atoms.push_back(ch);
    atoms[parent].children.push_back(ch.id);
    return ch.id;
}

inline Atom unit_root() {
    Atom root;
    root.id = 0;
    root.a = 0.0;
    root.b = 1.0;
    root.measure = 1.0;
    return root;
}

}  // namespace detail

/// Uniform binary splits of [0, 1) down to `depth`; delta = 1/2.
inline FiltrationPtr build_dyadic(int depth) {
    require(depth >= 1 && depth <= 20, "dyadic depth must lie in [1, 20]");
    std::vector<Atom> atoms{detail::unit_root()};
    atoms.reserve((std::size_t{2} << depth) - 1);
    std::vector<AtomId> frontier{0};
    for (int n = 0; n < depth; ++n) {
        std::vector<AtomId> next;
        next.reserve(frontier.size() * 2);
        for (AtomId id : frontier) {
            const double a = atoms[id].a;
            const double b = atoms[id].b;
            const double mid = 0.5 * (a + b);
            next.push_back(detail::add_child(atoms, id, a, mid));
            next.push_back(detail::add_child(atoms, id, mid, b));
        }
        frontier = std::move(next);
    }
    return Filtration::create(depth, 0.5, std::move(atoms));
}

struct RandomFiltrationParams {
    int depth = 3;
    double delta = 0.25;
    int max_children = 3;
    double split_prob = 0.6;
    std::uint64_t seed = 1;
};

/// Random regular filtration on [0, 1).  Each atom of the current level splits with
/// probability split_prob into k in [2, max_children] children; at least one atom
/// splits per level.  Child ratios are delta plus a Dirichlet share of the spare mass,
/// redrawn whenever rounding pushes a realized ratio below delta.
inline FiltrationPtr build_random_regular(const RandomFiltrationParams& prm) {
    require(prm.depth >= 1 && prm.depth <= 12, "random filtration depth must lie in [1, 12]");
    require(prm.delta > 0.0 && prm.delta <= 0.5, "delta must lie in (0, 1/2]");
    require(prm.split_prob > 0.0 && prm.split_prob <= 1.0, "split_prob must lie in (0, 1]");
    require(prm.max_children >= 2, "max_children must be at least 2");
    require(prm.max_children * prm.delta <= 1.0 + 1e-12,
            "infeasible parameters: max_children * delta exceeds 1");

    constexpr int kBudget = 1000;
    const double ratio_floor = prm.delta * (1.0 - 1e-12);
    Rng rng = make_rng(prm.seed);
    std::vector<Atom> atoms{detail::unit_root()};
    std::vector<AtomId> frontier{0};

    for (int n = 0; n < prm.depth; ++n) {
        std::vector<char> split(frontier.size(), 0);
        bool any = false;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            split[i] = uniform01(rng) < prm.split_prob;
            any = any || split[i];
        }
        if (!any) split[uniform_index(rng, frontier.size())] = 1;

        std::vector<AtomId> next;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            if (!split[i]) continue;
            const AtomId id = frontier[i];
            const double a = atoms[id].a;
            const double b = atoms[id].b;
            const double len = b - a;
            const int k = uniform_int(rng, 2, prm.max_children);
            const double spare = std::max(0.0, 1.0 - k * prm.delta);

            std::vector<double> edges;
            bool ok = false;
            for (int attempt = 0; attempt < kBudget && !ok; ++attempt) {
                std::vector<double> share(static_cast<std::size_t>(k));
                double total = 0.0;
                for (auto& s : share) total += (s = standard_exponential(rng));
                edges.assign(1, a);
                double cum = 0.0;
                for (int c = 0; c + 1 < k; ++c) {
                    cum += prm.delta + spare * share[static_cast<std::size_t>(c)] / total;
                    edges.push_back(a + len * cum);
                }
                edges.push_back(b);
                ok = true;
                for (int c = 0; c < k && ok; ++c) {
                    const double m = edges[static_cast<std::size_t>(c) + 1] - edges[static_cast<std::size_t>(c)];
                    ok = m > 0.0 && m / len >= ratio_floor;
                }
            }
            if (!ok) {
                throw ComputationError(
                    "rejection-sampling budget exceeded; delta is too close to 1/max_children");
            }
            for (int c = 0; c < k; ++c) {
                next.push_back(detail::add_child(atoms, id, edges[static_cast<std::size_t>(c)],
                                                 edges[static_cast<std::size_t>(c) + 1]));
            }
        }
        frontier = std::move(next);
    }
    return Filtration::create(prm.depth, prm.delta, std::move(atoms));
}

/// Minimum child-to-parent measure ratio over the whole tree.
inline double regularity_delta(const Filtration& f) {
    double best = 1.0;
    for (const auto& at : f.atoms()) {
        for (AtomId c : at.children) best = std::min(best, f.atom(c).measure / at.measure);
    }
    return best;
}

inline std::vector<SplitEvent> split_schedule(const Filtration& f) { return f.split_schedule(); }

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Filtration& f) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& at : f.atoms()) {
        nlohmann::json j;
        j["id"] = at.id;
        j["a"] = at.a;
        j["b"] = at.b;
        j["level"] = at.level;
        j["parent"] = at.parent ? nlohmann::json(*at.parent) : nlohmann::json(nullptr);
        j["children"] = at.children;
        atoms.push_back(std::move(j));
    }
    return nlohmann::json{{"delta", f.delta()}, {"depth", f.depth()}, {"atoms", std::move(atoms)}};
}

inline FiltrationPtr filtration_from_json(const nlohmann::json& j) {
    std::vector<Atom> atoms;
    for (const auto& ja : j.at("atoms")) {
        Atom at;
        at.id = ja.at("id").get<AtomId>();
        at.a = ja.at("a").get<double>();
        at.b = ja.at("b").get<double>();
        at.measure = at.b - at.a;
        at.level = ja.at("level").get<int>();
        if (!ja.at("parent").is_null()) at.parent = ja.at("parent").get<AtomId>();
        at.children = ja.at("children").get<std::vector<AtomId>>();
        atoms.push_back(std::move(at));
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.id < y.id; });
    return Filtration::create(j.at("depth").get<int>(), j.at("delta").get<double>(), std::move(atoms));
}

}  // namespace mbl
