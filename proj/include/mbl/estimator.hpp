#pragma once

// L^p-level computations: the optimal homogeneity parameter, empirical L^p
// ratios of transforms, witness search for lower bounds on the Bellman function,
// and the duality assembly of an L^p constant from a verified candidate.
// Every constant reported here is empirical.

#include "mbl/certifier.hpp"

#include <json.hpp>

#include <limits>
#include <optional>
#include <vector>

namespace mbl {

/// Minimizer (q x4 / (p x3))^{1/(p+q)} of lambda -> lambda^p x3 + lambda^{-q} x4.
inline double optimal_lambda(double x3, double x4, double p) {
    require_exponent(p);
    require(x3 > 0.0 && x4 > 0.0, "optimal_lambda needs positive x3 and x4");
    const double q = conjugate_exponent(p);
    return std::pow(q * x4 / (p * x3), 1.0 / (p + q));
}

inline double lambda_objective(double lambda, double x3, double x4, double p) {
    const double q = conjugate_exponent(p);
    return std::pow(lambda, p) * x3 + std::pow(lambda, -q) * x4;
}

/// (lambda x1, lambda^-2 x2, lambda^p x3, lambda^-q x4): the image of x^J under (f, g) -> (lambda f, g / lambda).
inline BellmanPoint homogeneity_orbit(const BellmanPoint& x, double lambda) {
    BellmanPoint y = x;
    y.x1 = lambda * x.x1;
    y.x2 = x.x2 / (lambda * lambda);
    y.x3 = std::pow(lambda, x.p) * x.x3;
    y.x4 = std::pow(lambda, -x.q) * x.x4;
    return y;
}

struct Witness {
    MartFunction f;
    MartFunction g;
    GundyOperator T;
};

inline nlohmann::json to_json(const Witness& w) {
    return nlohmann::json{{"filtration", to_json(*w.T.filtration())},
                          {"f", to_json(w.f)},
                          {"g", to_json(w.g)},
                          {"T", to_json(w.T)}};
}

inline Witness witness_from_json(const nlohmann::json& j) {
    auto filt = filtration_from_json(j.at("filtration"));
    return Witness{mart_function_from_json(j.at("f"), filt), mart_function_from_json(j.at("g"), filt),
                   gundy_from_json(j.at("T"), filt)};
}

// ---------------------------------------------------------------------------
// Test-function families
// ---------------------------------------------------------------------------

/// Root Haar function in coordinate 0: +1 on the first child of the root, constant on
/// the remaining children with overall mean zero.
inline MartFunction root_haar(const FiltrationPtr& filt, int dim) {
    const auto& root = filt->root();
    const auto& first = filt->atom(root.children.front());
    const double low = -first.measure / (root.measure - first.measure);
    return MartFunction::from_leaves(filt, dim, [&](std::size_t i) {
        HVec v = HVec::Zero(dim);
        v[0] = i < first.leaf_end ? 1.0 : low;
        return v;
    });
}

/// Haar witness: f = g = root Haar, a_n = e_0 on every level.
inline Witness haar_witness(const FiltrationPtr& filt, int dim) {
    HVec e0 = HVec::Zero(dim);
    e0[0] = 1.0;
    return Witness{root_haar(filt, dim), root_haar(filt, 1), make_constant_transform(filt, e0)};
}

inline MartFunction random_function(const FiltrationPtr& filt, int dim, Rng& rng) {
    return MartFunction::from_leaves(filt, dim, [&](std::size_t) { return random_hvec(rng, dim); });
}

/// Delta_J of a Gaussian function for a random split event J.
inline MartFunction random_haar_type(const FiltrationPtr& filt, int dim, Rng& rng) {
    const auto& sched = filt->split_schedule();
    const auto& e = sched[uniform_index(rng, sched.size())];
    return delta_split(random_function(filt, dim, rng), e);
}

/// Alternates Gaussian, Haar-type and single-leaf functions by trial index.
inline MartFunction family_function(const FiltrationPtr& filt, int dim, Rng& rng, std::size_t trial) {
    switch (trial % 3) {
        case 0: return random_function(filt, dim, rng);
        case 1: return random_haar_type(filt, dim, rng);
        default: {
            const std::size_t leaf = uniform_index(rng, filt->num_leaves());
            const HVec v = random_hvec(rng, dim);
            return MartFunction::from_leaves(filt, dim, [&](std::size_t i) {
                return i == leaf ? v : HVec::Zero(dim);
            });
        }
    }
}

// ---------------------------------------------------------------------------
// L^p ratio scan
// ---------------------------------------------------------------------------

struct ScanOptions {
    double p = 2.0;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    int dim = 2;
    std::size_t bins = 20;
};

struct ScanReport {
    double max_ratio = 0.0;
    std::size_t argmax_trial = 0;
    std::vector<double> ratios;
    /// Equal-width bins on [0, max_ratio].
    std::vector<std::size_t> histogram;
    std::optional<Witness> argmax_witness;
};

/// Records ||T f||_p / ||f||_p over random transforms and test functions.
inline ScanReport lp_constant_scan(const FiltrationPtr& filt, const ScanOptions& opt) {
    require(opt.p > 1.0 && opt.p <= 2.0, "scan exponent must lie in (1, 2]");
    require(opt.trials >= 1 && opt.bins >= 1, "scan needs at least one trial and one bin");
    ScanReport rep;
    rep.ratios.reserve(opt.trials);
    for (std::size_t t = 0; t < opt.trials; ++t) {
        Rng rng = make_rng(opt.seed, t);
        GundyOperator T = make_random_transform(filt, opt.dim, rng);
        MartFunction f = family_function(filt, opt.dim, rng, t);
        const double nf = lp_norm(f, opt.p);
        const double ratio = nf > 0.0 ? lp_norm(apply(T, f), opt.p) / nf : 0.0;
        rep.ratios.push_back(ratio);
        // Ties keep the earliest trial.
        if (t == 0 || ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.argmax_trial = t;
            rep.argmax_witness = Witness{f, MartFunction::zero(filt, 1), T};
        }
    }
    rep.histogram.assign(opt.bins, 0);
    for (double r : rep.ratios) {
        std::size_t b = rep.max_ratio > 0.0 ? static_cast<std::size_t>(r / rep.max_ratio * static_cast<double>(opt.bins)) : 0;
        rep.histogram[std::min(b, opt.bins - 1)] += 1;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Lower-bound search
// ---------------------------------------------------------------------------

struct SearchOptions {
    double p = 2.0;
    std::size_t trials = 200;
    std::uint64_t seed = 1;
    int dim = 1;
    /// Coordinate-ascent sweeps per trial; step sizes 0.5, 0.25, ... of the value scale.
    int refine_sweeps = 2;
    /// When set, witnesses are rescaled to the target's x3, x4 and must land within
    /// `box_tolerance` of its x1 and x2.  Otherwise x3 = x4 = 1.
    std::optional<BellmanPoint> target = std::nullopt;
    double box_tolerance = 0.05;
    bool force_zero_g = false;
};

struct SearchResult {
    double best_objective = -std::numeric_limits<double>::infinity();
    std::optional<Witness> witness;
    std::optional<BellmanPoint> achieved_point;
    std::size_t trials = 0;
    std::size_t best_trial = 0;
    std::uint64_t seed = 0;
    bool feasible() const { return witness.has_value(); }
};

namespace detail {

struct Normalized {
    MartFunction f;
    MartFunction g;
};

inline Normalized normalize_witness(const MartFunction& f, const MartFunction& g, double p, double x3, double x4) {
    const double q = conjugate_exponent(p);
    const double nf = average_pow(f, f.filtration()->root_id(), p);
    const double ng = average_pow(g, g.filtration()->root_id(), q);
    const double a = nf > 0.0 ? std::pow(x3 / nf, 1.0 / p) : 1.0;
    const double b = ng > 0.0 ? std::pow(x4 / ng, 1.0 / q) : 1.0;
    return {f * a, g * b};
}

inline bool in_box(const BellmanPoint& x, const BellmanPoint& t, double tol) {
    return (x.x1 - t.x1).norm() <= tol && std::abs(x.x2 - t.x2) <= tol && std::abs(x.x3 - t.x3) <= tol &&
           std::abs(x.x4 - t.x4) <= tol;
}

}  // namespace detail

/// Best <g T[f - <f>_I]>_I over sampled witnesses: a lower bound for the Bellman
/// function at the achieved point (or inside the target box).
inline SearchResult lower_bound_search(const FiltrationPtr& filt, const SearchOptions& opt) {
    require_exponent(opt.p);
    const double x3t = opt.target ? opt.target->x3 : 1.0;
    const double x4t = opt.target ? opt.target->x4 : 1.0;
    const int dim = opt.target ? static_cast<int>(opt.target->x1.size()) : opt.dim;
    require(dim >= 1, "search dimension must be at least 1");

    SearchResult res;
    res.trials = opt.trials;
    res.seed = opt.seed;

    for (std::size_t t = 0; t < opt.trials; ++t) {
        Rng rng = make_rng(opt.seed, t);
        std::optional<Witness> w;
        if (t == 0) {
            w = haar_witness(filt, dim);
        } else {
            GundyOperator T = make_random_transform(filt, dim, rng);
            MartFunction f = family_function(filt, dim, rng, t);
            MartFunction g = family_function(filt, 1, rng, t + 1);
            w = Witness{std::move(f), std::move(g), std::move(T)};
        }
        if (opt.force_zero_g) w->g = MartFunction::zero(filt, 1);

        const GundyOperator& T = w->T;
        auto evaluate = [&](const MartFunction& f, const MartFunction& g, double& obj, BellmanPoint& x) {
            const auto n = detail::normalize_witness(f, g, opt.p, x3t, x4t);
            obj = witness_objective(n.f, n.g, T);
            x = bellman_point(n.f, n.g, T, filt->root_id(), opt.p);
            const bool ok = !opt.target || detail::in_box(x, *opt.target, opt.box_tolerance);
            return std::pair<bool, detail::Normalized>(ok, n);
        };

        MartFunction f = w->f;
        MartFunction g = w->g;
        double obj = 0.0;
        BellmanPoint x;
        auto [ok, norm] = evaluate(f, g, obj, x);

        // Coordinate ascent on raw leaf values; accepted moves strictly improve the objective.
        for (int s = 0; s < opt.refine_sweeps; ++s) {
            const double step = std::ldexp(1.0, -(s + 1));
            for (std::size_t i = 0; i < filt->num_leaves(); ++i) {
                for (int which = 0; which < 2; ++which) {
                    if (which == 1 && opt.force_zero_g) continue;
                    const int cols = which == 0 ? dim : 1;
                    for (int k = 0; k < cols; ++k) {
                        for (double sign : {1.0, -1.0}) {
                            Eigen::MatrixXd fv = f.values();
                            Eigen::MatrixXd gv = g.values();
                            const auto ii = static_cast<Eigen::Index>(i);
                            if (which == 0) fv(ii, k) += sign * step * std::max(1.0, fv.cwiseAbs().maxCoeff());
                            else gv(ii, k) += sign * step * std::max(1.0, gv.cwiseAbs().maxCoeff());
                            MartFunction f2(filt, std::move(fv));
                            MartFunction g2(filt, std::move(gv));
                            double obj2 = 0.0;
                            BellmanPoint x2;
                            auto [ok2, norm2] = evaluate(f2, g2, obj2, x2);
                            if (ok2 && (!ok || obj2 > obj)) {
                                f = std::move(f2);
                                g = std::move(g2);
                                obj = obj2;
                                x = std::move(x2);
                                ok = true;
                                norm = std::move(norm2);
                            }
                        }
                    }
                }
            }
        }

        if (ok && (!res.witness || obj > res.best_objective)) {
            res.best_objective = obj;
            res.best_trial = t;
            res.witness = Witness{norm.f, norm.g, T};
            res.achieved_point = x;
        }
    }
    if (res.witness) {
        res.best_objective = witness_objective(res.witness->f, res.witness->g, res.witness->T);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Duality bound
// ---------------------------------------------------------------------------

struct DualityOptions {
    std::size_t samples = 50;
    std::uint64_t seed = 1;
    double tolerance = 1e-6;
};

struct DualityReport {
    /// max over sampled g of |int g T f| / (||f||_p ||g||_q).
    double empirical = 0.0;
    /// C_delta C_p p (q/p)^{1/q} + 1; withheld (NaN) when certification fails.
    double analytic = std::numeric_limits<double>::quiet_NaN();
    bool certified = true;
    std::optional<std::size_t> failing_sample;
    std::size_t evaluated = 0;
    /// Smallest per-sample margin of the assembled bound over int g T f.
    double worst_margin = std::numeric_limits<double>::infinity();
    /// Smallest margin of the Hoelder step over |<f><T*g>|.
    double worst_hoelder_margin = std::numeric_limits<double>::infinity();
    bool consistent() const { return certified && empirical <= analytic + 1e-6; }
};

/// Assembled L^p constant: C_delta C_p min_lambda(lambda^p x3 + lambda^-q x4) / (x3^{1/p} x4^{1/q})
/// plus the Hoelder term.
inline double analytic_lp_constant(double c_delta, double c_p, double p) {
    const double q = conjugate_exponent(p);
    return c_delta * c_p * p * std::pow(q / p, 1.0 / q) + 1.0;
}

/// Tests int g T f <= C ||f||_p ||g||_q over sampled unit-L^q g (and -g), certifying each
/// rescaled witness (lambda f, g / lambda) against B_delta = C_delta * B.
inline DualityReport duality_bound(const GundyOperator& T, const MartFunction& f, const CandidateBellman& B_delta,
                                   const DualityOptions& opt = {}) {
    require(B_delta.shape_cp.has_value(), "duality bound needs a candidate of the form C_p (x3 + x4) - h");
    require(f.filtration() == T.filtration(), "f and T must share one filtration");
    const auto& filt = T.filtration();
    const double p = B_delta.p;
    const double q = B_delta.q;
    const double mI = filt->root().measure;
    const double cp = *B_delta.shape_cp;

    DualityReport rep;
    const double fp = lp_norm(f, p);
    if (fp == 0.0) {
        rep.empirical = 0.0;
        rep.analytic = analytic_lp_constant(B_delta.scale, cp, p);
        return rep;
    }
    const MartFunction Tf = apply(T, f);

    std::vector<MartFunction> gs;
    {
        // Dual extremal direction sign(Tf) |Tf|^{p-1}.
        Eigen::MatrixXd v = Tf.values().unaryExpr([p](double t) {
            return t == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(t), p - 1.0), t);
        });
        gs.emplace_back(filt, std::move(v));
    }
    for (std::size_t s = 0; s < opt.samples; ++s) {
        Rng rng = make_rng(opt.seed, s);
        gs.push_back(s % 2 == 0 ? random_function(filt, 1, rng) : random_haar_type(filt, 1, rng));
    }

    for (std::size_t s = 0; s < gs.size(); ++s) {
        const double gq = lp_norm(gs[s], q);
        if (gq == 0.0) continue;
        for (double sign : {1.0, -1.0}) {
            const MartFunction g = gs[s] * (sign / gq);
            ++rep.evaluated;
            const BellmanPoint x = bellman_point(f, g, T, filt->root_id(), p);
            const double lambda = optimal_lambda(x.x3, x.x4, p);
            const Certificate cert = certify(f * lambda, g * (1.0 / lambda), T, B_delta);
            if (!cert.passed) {
                rep.certified = false;
                if (!rep.failing_sample) rep.failing_sample = s;
                continue;
            }
            const double integral = inner(g, Tf);
            rep.empirical = std::max(rep.empirical, std::abs(integral) / fp);

            const MartFunction tg = adjoint_apply(T, g);
            const double mean_term = average(f, filt->root_id()).dot(average(tg, filt->root_id()));
            rep.worst_hoelder_margin = std::min(rep.worst_hoelder_margin, fp / mI - std::abs(mean_term));

            // <g Tf>_I - <f><T*g> <= B_delta(lambda-point) <= C_delta C_p (lambda^p x3 + lambda^-q x4).
            const double upper = B_delta.scale * cp * lambda_objective(lambda, x.x3, x.x4, p);
            const double assembled = mI * (std::max(cert.root_value, 0.0) + std::abs(mean_term));
            const double bound = mI * upper + fp;
            rep.worst_margin = std::min({rep.worst_margin, assembled - integral, bound - assembled});
        }
    }
    if (rep.certified) rep.analytic = analytic_lp_constant(B_delta.scale, cp, p);
    return rep;
}

}  // namespace mbl
