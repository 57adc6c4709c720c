#pragma once

// H-valued leaf-constant functions and their martingale calculus.
//
// A MartFunction stores one row of R^d per leaf (leaf order of the filtration).
// Scalar functions are the d = 1 case.  Every integral is measure weighted.

#include "mbl/filtration.hpp"

#include <json.hpp>

#include <cmath>
#include <span>
#include <vector>

namespace mbl {

class MartFunction {
public:
    MartFunction(FiltrationPtr filt, Eigen::MatrixXd values)
        : filt_(std::move(filt)), values_(std::move(values)) {
        require(filt_ != nullptr, "function needs a filtration");
        require(values_.rows() == static_cast<Eigen::Index>(filt_->num_leaves()),
                "function must have one value per leaf");
        require(values_.cols() >= 1, "function dimension must be at least 1");
    }

    static MartFunction zero(FiltrationPtr filt, int dim) {
        const auto rows = static_cast<Eigen::Index>(filt->num_leaves());
        return MartFunction(std::move(filt), Eigen::MatrixXd::Zero(rows, dim));
    }

    static MartFunction constant(FiltrationPtr filt, const HVec& c) {
        const auto rows = static_cast<Eigen::Index>(filt->num_leaves());
        Eigen::MatrixXd v = c.transpose().replicate(rows, 1);
        return MartFunction(std::move(filt), std::move(v));
    }

    /// Builds from a callable leaf_index -> HVec.
    template <class Fn>
    static MartFunction from_leaves(FiltrationPtr filt, int dim, Fn&& fn) {
        Eigen::MatrixXd v(static_cast<Eigen::Index>(filt->num_leaves()), dim);
        for (Eigen::Index i = 0; i < v.rows(); ++i) v.row(i) = fn(static_cast<std::size_t>(i)).transpose();
        return MartFunction(std::move(filt), std::move(v));
    }

    /// Scalar function from per-leaf values.
    static MartFunction scalar(FiltrationPtr filt, std::span<const double> vals) {
        Eigen::MatrixXd v(static_cast<Eigen::Index>(vals.size()), 1);
        for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i), 0) = vals[i];
        return MartFunction(std::move(filt), std::move(v));
    }

    const FiltrationPtr& filtration() const { return filt_; }
    int dim() const { return static_cast<int>(values_.cols()); }
    std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
    const Eigen::MatrixXd& values() const { return values_; }
    HVec value(std::size_t leaf) const { return values_.row(static_cast<Eigen::Index>(leaf)).transpose(); }

    MartFunction operator+(const MartFunction& o) const {
        check_compatible(o);
        return MartFunction(filt_, values_ + o.values_);
    }
    MartFunction operator-(const MartFunction& o) const {
        check_compatible(o);
        return MartFunction(filt_, values_ - o.values_);
    }
    MartFunction operator*(double s) const { return MartFunction(filt_, values_ * s); }
    MartFunction operator-() const { return MartFunction(filt_, -values_); }

    void check_compatible(const MartFunction& o) const {
        require(filt_ == o.filt_, "functions live on different filtrations");
        require(dim() == o.dim(), "function dimensions differ");
    }

private:
    FiltrationPtr filt_;
    Eigen::MatrixXd values_;
};

inline MartFunction operator*(double s, const MartFunction& f) { return f * s; }

namespace detail {

inline HVec range_mean(const MartFunction& f, std::size_t begin, std::size_t end) {
    const auto& w = f.filtration()->leaf_weights();
    HVec acc = HVec::Zero(f.dim());
    double mass = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        acc += w[ii] * f.values().row(ii).transpose();
        mass += w[ii];
    }
    return acc / mass;
}

}  // namespace detail

/// Measure-weighted inner product sum_leaves |leaf| <f, g>.
inline double inner(const MartFunction& f, const MartFunction& g) {
    f.check_compatible(g);
    const auto& w = f.filtration()->leaf_weights();
    return (f.values().cwiseProduct(g.values()).rowwise().sum().array() * w.array()).sum();
}

inline double l2_norm(const MartFunction& f) { return std::sqrt(inner(f, f)); }

/// (sum_leaves |leaf| |f|^p)^(1/p).
inline double lp_norm(const MartFunction& f, double p) {
    require(p >= 1.0 && std::isfinite(p), "lp_norm needs p in [1, inf)");
    const auto& w = f.filtration()->leaf_weights();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.values().rows(); ++i) {
        acc += w[i] * std::pow(f.values().row(i).norm(), p);
    }
    return std::pow(acc, 1.0 / p);
}

/// Average of f over atom J.
inline HVec average(const MartFunction& f, AtomId J) {
    const auto& at = f.filtration()->atom(J);
    return detail::range_mean(f, at.leaf_begin, at.leaf_end);
}

/// Average of |f|^p over atom J.
inline double average_pow(const MartFunction& f, AtomId J, double p) {
    const auto& at = f.filtration()->atom(J);
    const auto& w = f.filtration()->leaf_weights();
    double acc = 0.0;
    for (std::size_t i = at.leaf_begin; i < at.leaf_end; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        acc += w[ii] * std::pow(f.values().row(ii).norm(), p);
    }
    return acc / at.measure;
}

/// Squared oscillation <|f - <f>_J|^2>_J.
inline double osc2(const MartFunction& f, AtomId J) {
    const auto& at = f.filtration()->atom(J);
    const auto& w = f.filtration()->leaf_weights();
    const HVec mean = detail::range_mean(f, at.leaf_begin, at.leaf_end);
    double acc = 0.0;
    for (std::size_t i = at.leaf_begin; i < at.leaf_end; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        acc += w[ii] * (f.values().row(ii).transpose() - mean).squaredNorm();
    }
    return acc / at.measure;
}

/// Same quantity through <|f|^2>_J - |<f>_J|^2.
inline double osc2_moment_form(const MartFunction& f, AtomId J) {
    return average_pow(f, J, 2.0) - average(f, J).squaredNorm();
}

/// Conditional expectation onto the algebra generated by `partition`.
inline MartFunction cond_exp(const MartFunction& f, std::span<const AtomId> partition) {
    const auto& filt = *f.filtration();
    require(filt.is_partition(partition), "partition does not belong to the function's filtration");
    Eigen::MatrixXd out(f.values().rows(), f.values().cols());
    for (AtomId id : partition) {
        const auto& at = filt.atom(id);
        const HVec mean = detail::range_mean(f, at.leaf_begin, at.leaf_end);
        for (std::size_t i = at.leaf_begin; i < at.leaf_end; ++i) {
            out.row(static_cast<Eigen::Index>(i)) = mean.transpose();
        }
    }
    return MartFunction(f.filtration(), std::move(out));
}

/// E_n f.
inline MartFunction cond_exp_level(const MartFunction& f, int n) {
    return cond_exp(f, f.filtration()->level(n));
}

/// Delta_n f = E_n f - E_{n-1} f, n >= 1.
inline MartFunction level_difference(const MartFunction& f, int n) {
    require(n >= 1, "level difference index must be at least 1");
    return cond_exp_level(f, n) - cond_exp_level(f, n - 1);
}

/// Delta_J f for a split event: children means minus the mean over J, zero outside J.
inline MartFunction delta_split(const MartFunction& f, const SplitEvent& e) {
    const auto& filt = *f.filtration();
    const auto& J = filt.atom(e.atom);
    require(J.is_split(), "split event atom is never split");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(f.values().rows(), f.values().cols());
    const HVec parent_mean = detail::range_mean(f, J.leaf_begin, J.leaf_end);
    for (AtomId c : J.children) {
        const auto& Q = filt.atom(c);
        const HVec diff = detail::range_mean(f, Q.leaf_begin, Q.leaf_end) - parent_mean;
        for (std::size_t i = Q.leaf_begin; i < Q.leaf_end; ++i) {
            out.row(static_cast<Eigen::Index>(i)) = diff.transpose();
        }
    }
    return MartFunction(f.filtration(), std::move(out));
}

/// f * 1_J.
inline MartFunction restrict_to(const MartFunction& f, AtomId J) {
    const auto& at = f.filtration()->atom(J);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(f.values().rows(), f.values().cols());
    const auto len = static_cast<Eigen::Index>(at.leaf_count());
    const auto start = static_cast<Eigen::Index>(at.leaf_begin);
    out.middleRows(start, len) = f.values().middleRows(start, len);
    return MartFunction(f.filtration(), std::move(out));
}

/// Largest pointwise norm of f over the leaves of atom J.
inline double max_norm_on(const MartFunction& f, AtomId J) {
    const auto& at = f.filtration()->atom(J);
    double m = 0.0;
    for (std::size_t i = at.leaf_begin; i < at.leaf_end; ++i) {
        m = std::max(m, f.values().row(static_cast<Eigen::Index>(i)).norm());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Serialization: {dim, values: [{atom_id, coords}]}, one entry per leaf.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const MartFunction& f) {
    nlohmann::json vals = nlohmann::json::array();
    const auto& leaves = f.filtration()->leaves();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        const HVec v = f.value(i);
        vals.push_back({{"atom_id", leaves[i]}, {"coords", std::vector<double>(v.data(), v.data() + v.size())}});
    }
    return nlohmann::json{{"dim", f.dim()}, {"values", std::move(vals)}};
}

inline MartFunction mart_function_from_json(const nlohmann::json& j, FiltrationPtr filt) {
    const int dim = j.at("dim").get<int>();
    require(dim >= 1, "function dimension must be at least 1");
    Eigen::MatrixXd v(static_cast<Eigen::Index>(filt->num_leaves()), dim);
    std::vector<char> seen(filt->num_leaves(), 0);
    for (const auto& e : j.at("values")) {
        const auto id = e.at("atom_id").get<AtomId>();
        const auto& at = filt->atom(id);
        require(!at.is_split(), "function values must be attached to leaf atoms");
        const auto coords = e.at("coords").get<std::vector<double>>();
        require(static_cast<int>(coords.size()) == dim, "coordinate count differs from dim");
        require(!seen[at.leaf_begin], "duplicate leaf value");
        seen[at.leaf_begin] = 1;
        for (int k = 0; k < dim; ++k) v(static_cast<Eigen::Index>(at.leaf_begin), k) = coords[static_cast<std::size_t>(k)];
    }
    for (char s : seen) require(s != 0, "function must be defined on every leaf");
    return MartFunction(std::move(filt), std::move(v));
}

}  // namespace mbl
