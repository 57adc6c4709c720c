#pragma once

#include "mbl/estimator.hpp"

#include <vector>

namespace fixture {

/// Depth-1 filtration of [0, 1) split once with the given child ratios.
inline mbl::FiltrationPtr single_split(const std::vector<double>& ratios) {
    std::vector<mbl::Atom> atoms(1);
    atoms[0].id = 0;
    double left = 0.0;
    for (double r : ratios) {
        mbl::Atom c;
        c.id = atoms.size();
        c.a = left;
        c.b = left + r;
        c.measure = r;
        c.level = 1;
        c.parent = 0;
        left += r;
        atoms[0].children.push_back(c.id);
        atoms.push_back(c);
    }
    atoms.back().b = 1.0;
    atoms.back().measure = 1.0 - atoms.back().a;
    const double dmin = *std::min_element(ratios.begin(), ratios.end());
    return mbl::Filtration::create(1, std::min(0.5, dmin), std::move(atoms));
}

/// Random regular filtration with the parameters used across the property tests.
inline mbl::FiltrationPtr random_filtration(std::uint64_t seed, int depth = 3, double delta = 0.25, int max_children = 3) {
    return mbl::build_random_regular(
        {.depth = depth, .delta = delta, .max_children = max_children, .split_prob = 0.6, .seed = seed});
}

inline Eigen::MatrixXd random_values(mbl::Rng& rng, std::size_t rows, int cols) {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(rows), cols);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (Eigen::Index k = 0; k < v.cols(); ++k) v(i, k) = mbl::standard_normal(rng);
    }
    return v;
}

}  // namespace fixture
