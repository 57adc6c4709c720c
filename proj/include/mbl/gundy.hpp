#pragma once

// Martingale transforms T f = sum_n a_n . Delta_n f with predictable H-valued
// multipliers |a_n| <= 1, held in two forms: the multiplier sequence and a
// materialized leaf matrix M (rows: leaves, columns: (leaf, coordinate) pairs).
// Adjoints are taken with respect to the measure-weighted inner products.

#include "mbl/martingale.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <string>
#include <vector>

namespace mbl {

class GundyOperator;
GundyOperator make_transform(FiltrationPtr filt, std::vector<MartFunction> multipliers);

class GundyOperator {
public:
    const FiltrationPtr& filtration() const { return filt_; }
    int dim() const { return dim_; }
    /// multipliers()[n - 1] is a_n, constant on the atoms of A_{n-1}.
    const std::vector<MartFunction>& multipliers() const { return multipliers_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    /// Weighted operator norm computed at construction.
    double norm() const { return norm_; }

private:
    friend GundyOperator make_transform(FiltrationPtr, std::vector<MartFunction>);
    GundyOperator(FiltrationPtr filt, int dim, std::vector<MartFunction> mult)
        : filt_(std::move(filt)), dim_(dim), multipliers_(std::move(mult)) {}

    FiltrationPtr filt_;
    int dim_;
    std::vector<MartFunction> multipliers_;
    Eigen::MatrixXd matrix_;
    double norm_ = 0.0;
};

namespace detail {

inline Eigen::MatrixXd build_transform_matrix(const Filtration& filt, int dim,
                                              const std::vector<MartFunction>& mult) {
    const auto L = static_cast<Eigen::Index>(filt.num_leaves());
    const auto& w = filt.leaf_weights();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(L, L * dim);
    auto add_block = [&](const Atom& A, const MartFunction& a, double sign) {
        for (std::size_t i = A.leaf_begin; i < A.leaf_end; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            for (std::size_t j = A.leaf_begin; j < A.leaf_end; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                const double c = sign * w[jj] / A.measure;
                for (int k = 0; k < dim; ++k) M(ii, jj * dim + k) += c * a.values()(ii, k);
            }
        }
    };
    for (int n = 1; n <= filt.depth(); ++n) {
        const auto& a = mult[static_cast<std::size_t>(n - 1)];
        for (AtomId id : filt.level(n)) add_block(filt.atom(id), a, 1.0);
        for (AtomId id : filt.level(n - 1)) add_block(filt.atom(id), a, -1.0);
    }
    return M;
}

/// Largest singular value of W_out^{1/2} M W_in^{-1/2}.
inline double weighted_spectral_norm(const Eigen::MatrixXd& M, const Eigen::VectorXd& w, int dim) {
    if (M.size() == 0) return 0.0;
    Eigen::VectorXd sw = w.cwiseSqrt();
    Eigen::VectorXd col_scale(M.cols());
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        for (int k = 0; k < dim; ++k) col_scale[j * dim + k] = 1.0 / sw[j];
    }
    const Eigen::MatrixXd A = sw.asDiagonal() * M * col_scale.asDiagonal();
    const Eigen::MatrixXd G = A * A.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline Eigen::VectorXd flatten(const MartFunction& f) {
    const Eigen::MatrixXd rm = f.values().transpose();  // column-major of the transpose is row-major of f
    return Eigen::Map<const Eigen::VectorXd>(rm.data(), rm.size());
}

}  // namespace detail

/// Builds a transform from per-level multipliers; verifies predictability, |a_n| <= 1
/// and the L^2 contraction.
inline GundyOperator make_transform(FiltrationPtr filt, std::vector<MartFunction> multipliers) {
    require(filt != nullptr, "transform needs a filtration");
    require(static_cast<int>(multipliers.size()) == filt->depth(),
            "one multiplier per level n = 1..N is required");
    const int dim = multipliers.front().dim();
    for (int n = 1; n <= filt->depth(); ++n) {
        const auto& a = multipliers[static_cast<std::size_t>(n - 1)];
        require(a.filtration() == filt, "multiplier lives on a different filtration");
        require(a.dim() == dim, "multipliers must share one dimension");
        for (AtomId id : filt->level(n - 1)) {
            const auto& A = filt->atom(id);
            const auto first = a.values().row(static_cast<Eigen::Index>(A.leaf_begin));
            for (std::size_t i = A.leaf_begin + 1; i < A.leaf_end; ++i) {
                require(a.values().row(static_cast<Eigen::Index>(i)) == first,
                        "multiplier a_" + std::to_string(n) + " is not predictable");
            }
        }
        for (Eigen::Index i = 0; i < a.values().rows(); ++i) {
            require(a.values().row(i).norm() <= 1.0 + 1e-12,
                    "multiplier a_" + std::to_string(n) + " exceeds norm 1");
        }
    }
    GundyOperator T(filt, dim, std::move(multipliers));
    T.matrix_ = detail::build_transform_matrix(*filt, dim, T.multipliers_);
    T.norm_ = detail::weighted_spectral_norm(T.matrix_, filt->leaf_weights(), dim);
    if (T.norm_ > 1.0 + 1e-9) {
        throw ComputationError("transform violates the L2 contraction; norm = " + std::to_string(T.norm_));
    }
    return T;
}

/// Multiplier a_n from one vector per atom of A_{n-1} (given in level order).
inline MartFunction predictable_multiplier(const FiltrationPtr& filt, int n, const std::vector<HVec>& per_atom) {
    const auto& part = filt->level(n - 1);
    require(per_atom.size() == part.size(), "need one multiplier vector per atom of A_{n-1}");
    const int dim = static_cast<int>(per_atom.front().size());
    Eigen::MatrixXd v(static_cast<Eigen::Index>(filt->num_leaves()), dim);
    for (std::size_t k = 0; k < part.size(); ++k) {
        const auto& A = filt->atom(part[k]);
        for (std::size_t i = A.leaf_begin; i < A.leaf_end; ++i) {
            v.row(static_cast<Eigen::Index>(i)) = per_atom[k].transpose();
        }
    }
    return MartFunction(filt, std::move(v));
}

/// a_n == a for every level.
inline GundyOperator make_constant_transform(const FiltrationPtr& filt, const HVec& a) {
    std::vector<MartFunction> mult;
    for (int n = 1; n <= filt->depth(); ++n) mult.push_back(MartFunction::constant(filt, a));
    return make_transform(filt, std::move(mult));
}

/// Random predictable multipliers: half the atoms get unit vectors, the rest points of the unit ball.
inline GundyOperator make_random_transform(const FiltrationPtr& filt, int dim, Rng& rng) {
    std::vector<MartFunction> mult;
    for (int n = 1; n <= filt->depth(); ++n) {
        std::vector<HVec> per_atom;
        for (std::size_t k = 0; k < filt->level(n - 1).size(); ++k) {
            HVec v = random_in_unit_ball(rng, dim);
            if (uniform01(rng) < 0.5 && v.norm() > 0.0) v /= v.norm();
            per_atom.push_back(std::move(v));
        }
        mult.push_back(predictable_multiplier(filt, n, per_atom));
    }
    return make_transform(filt, std::move(mult));
}

/// T f through the multiplier formula.
inline MartFunction apply(const GundyOperator& T, const MartFunction& f) {
    require(f.filtration() == T.filtration(), "function and operator filtrations differ");
    require(f.dim() == T.dim(), "function and operator dimensions differ");
    const auto& filt = *T.filtration();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(filt.num_leaves()));
    MartFunction prev = cond_exp_level(f, 0);
    for (int n = 1; n <= filt.depth(); ++n) {
        MartFunction cur = cond_exp_level(f, n);
        const auto& a = T.multipliers()[static_cast<std::size_t>(n - 1)].values();
        out += (a.cwiseProduct(cur.values() - prev.values())).rowwise().sum();
        prev = std::move(cur);
    }
    return MartFunction(T.filtration(), out);
}

/// T f through the materialized matrix.
inline MartFunction apply_matrix(const GundyOperator& T, const MartFunction& f) {
    require(f.filtration() == T.filtration(), "function and operator filtrations differ");
    require(f.dim() == T.dim(), "function and operator dimensions differ");
    Eigen::VectorXd out = T.matrix() * detail::flatten(f);
    return MartFunction(T.filtration(), out);
}

/// T* g from the defining relation <g, Tf> = <T*g, f>: W_in^{-1} M^T W_out g.
inline MartFunction adjoint_apply(const GundyOperator& T, const MartFunction& g) {
    require(g.filtration() == T.filtration(), "function and operator filtrations differ");
    require(g.dim() == 1, "adjoint acts on scalar functions");
    const auto& w = T.filtration()->leaf_weights();
    const Eigen::VectorXd wg = w.cwiseProduct(g.values().col(0));
    const Eigen::VectorXd flat = T.matrix().transpose() * wg;
    const int d = T.dim();
    Eigen::MatrixXd out(w.size(), d);
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        for (int k = 0; k < d; ++k) out(j, k) = flat[j * d + k] / w[j];
    }
    return MartFunction(T.filtration(), std::move(out));
}

/// T* g = sum_n a_n D_n g, valid for multiplier transforms.
inline MartFunction adjoint_closed_form(const GundyOperator& T, const MartFunction& g) {
    require(g.filtration() == T.filtration(), "function and operator filtrations differ");
    require(g.dim() == 1, "adjoint acts on scalar functions");
    const auto& filt = *T.filtration();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(filt.num_leaves()), T.dim());
    MartFunction prev = cond_exp_level(g, 0);
    for (int n = 1; n <= filt.depth(); ++n) {
        MartFunction cur = cond_exp_level(g, n);
        const Eigen::VectorXd dn = cur.values().col(0) - prev.values().col(0);
        out += dn.asDiagonal() * T.multipliers()[static_cast<std::size_t>(n - 1)].values();
        prev = std::move(cur);
    }
    return MartFunction(T.filtration(), std::move(out));
}

/// Recomputes the weighted spectral norm of the materialized matrix.
inline double operator_norm(const GundyOperator& T) {
    return detail::weighted_spectral_norm(T.matrix(), T.filtration()->leaf_weights(), T.dim());
}

/// For each n >= 1 the atoms of A_{n-1} on which Delta_n f does not vanish
/// (the smallest predictable events e_n with Delta_n f = 1_{e_n} Delta_n f).
/// Values below rel_tol * max|f| count as zero.
inline std::vector<Partition> predictable_support(const MartFunction& f, double rel_tol = 1e-12) {
    const auto& filt = *f.filtration();
    double fmax = 0.0;
    for (Eigen::Index i = 0; i < f.values().rows(); ++i) fmax = std::max(fmax, f.values().row(i).norm());
    const double cut = rel_tol * fmax;
    std::vector<Partition> events;
    for (int n = 1; n <= filt.depth(); ++n) {
        const MartFunction dn = level_difference(f, n);
        Partition e;
        for (AtomId id : filt.level(n - 1)) {
            if (max_norm_on(dn, id) > cut) e.push_back(id);
        }
        events.push_back(std::move(e));
    }
    return events;
}

// ---------------------------------------------------------------------------
// Serialization: {multipliers: [{level, values: [{atom_id, coords}]}]}; the
// matrix is rebuilt on load.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const GundyOperator& T) {
    const auto& filt = *T.filtration();
    nlohmann::json mult = nlohmann::json::array();
    for (int n = 1; n <= filt.depth(); ++n) {
        const auto& a = T.multipliers()[static_cast<std::size_t>(n - 1)];
        nlohmann::json vals = nlohmann::json::array();
        for (AtomId id : filt.level(n - 1)) {
            const HVec v = a.value(filt.atom(id).leaf_begin);
            vals.push_back({{"atom_id", id}, {"coords", std::vector<double>(v.data(), v.data() + v.size())}});
        }
        mult.push_back({{"level", n}, {"values", std::move(vals)}});
    }
    return nlohmann::json{{"multipliers", std::move(mult)}};
}

inline GundyOperator gundy_from_json(const nlohmann::json& j, const FiltrationPtr& filt) {
    const auto& jm = j.at("multipliers");
    require(static_cast<int>(jm.size()) == filt->depth(), "one multiplier entry per level is required");
    std::vector<MartFunction> mult(static_cast<std::size_t>(filt->depth()), MartFunction::zero(filt, 1));
    std::vector<char> have(static_cast<std::size_t>(filt->depth()), 0);
    for (const auto& lvl : jm) {
        const int n = lvl.at("level").get<int>();
        require(n >= 1 && n <= filt->depth(), "multiplier level out of range");
        const auto& part = filt->level(n - 1);
        std::vector<HVec> per_atom(part.size());
        std::vector<char> seen(part.size(), 0);
        for (const auto& e : lvl.at("values")) {
            const auto id = e.at("atom_id").get<AtomId>();
            const auto it = std::find(part.begin(), part.end(), id);
            require(it != part.end(), "multiplier atom is not in A_{n-1}; not predictable");
            const auto coords = e.at("coords").get<std::vector<double>>();
            const auto k = static_cast<std::size_t>(it - part.begin());
            per_atom[k] = Eigen::Map<const HVec>(coords.data(), static_cast<Eigen::Index>(coords.size()));
            seen[k] = 1;
        }
        for (char s : seen) require(s != 0, "multiplier must cover every atom of A_{n-1}");
        mult[static_cast<std::size_t>(n - 1)] = predictable_multiplier(filt, n, per_atom);
        have[static_cast<std::size_t>(n - 1)] = 1;
    }
    for (char h : have) require(h != 0, "missing multiplier level");
    return make_transform(filt, std::move(mult));
}

}  // namespace mbl
