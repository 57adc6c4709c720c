#pragma once

// Bellman points, the domain Omega_p, candidate functions and the geometric
// concavity condition (B2), plus the dyadic expansion that transfers (B2) from
// weight floor 1/2 to an arbitrary floor delta.

#include "mbl/gundy.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mbl {

struct BellmanPoint {
    HVec x1;
    double x2 = 0.0;
    double x3 = 0.0;
    double x4 = 0.0;
    std::optional<AtomId> atom;
    double p = 2.0;
    double q = 2.0;
};

inline BellmanPoint make_point(HVec x1, double x2, double x3, double x4, double p) {
    return BellmanPoint{std::move(x1), x2, x3, x4, std::nullopt, p, conjugate_exponent(p)};
}

/// Coordinate-wise convex combination sum_k w_k x^k (weights need not sum to 1).
inline BellmanPoint combine(const std::vector<BellmanPoint>& pts, const std::vector<double>& w) {
    BellmanPoint out = pts.front();
    out.atom.reset();
    out.x1.setZero();
    out.x2 = out.x3 = out.x4 = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        out.x1 += w[k] * pts[k].x1;
        out.x2 += w[k] * pts[k].x2;
        out.x3 += w[k] * pts[k].x3;
        out.x4 += w[k] * pts[k].x4;
    }
    return out;
}

/// |x1|^p <= x3, 0 <= x2, x2^q <= x4^2, x4 >= 0, with slack 1e-12 * max(1, right-hand side).
inline bool omega_p_contains(const BellmanPoint& x) {
    constexpr double eps = 1e-12;
    if (!(x.x2 >= 0.0) || !(x.x3 >= -eps) || !(x.x4 >= -eps)) return false;
    if (std::pow(x.x1.norm(), x.p) > x.x3 + eps * std::max(1.0, x.x3)) return false;
    const double x4sq = x.x4 * x.x4;
    return std::pow(x.x2, x.q) <= x4sq + eps * std::max(1.0, x4sq);
}

// ---------------------------------------------------------------------------
// Witness points
// ---------------------------------------------------------------------------

/// x^J from a witness when T* g is already known.
inline BellmanPoint bellman_point(const MartFunction& f, const MartFunction& g,
                                  const MartFunction& tstar_g, AtomId J, double p) {
    require_exponent(p);
    require(f.filtration() == g.filtration() && g.filtration() == tstar_g.filtration(),
            "witness functions must share one filtration");
    require(J < f.filtration()->atoms().size(), "J is not an atom of the filtration");
    const double q = conjugate_exponent(p);
    BellmanPoint x;
    x.x1 = average(f, J);
    x.x2 = average_pow(g, J, 2.0) - osc2(tstar_g, J);
    x.x3 = average_pow(f, J, p);
    x.x4 = average_pow(g, J, q);
    x.atom = J;
    x.p = p;
    x.q = q;
    return x;
}

inline BellmanPoint bellman_point(const MartFunction& f, const MartFunction& g, const GundyOperator& T,
                                  AtomId J, double p) {
    return bellman_point(f, g, adjoint_apply(T, g), J, p);
}

// ---------------------------------------------------------------------------
// Candidates
// ---------------------------------------------------------------------------

struct CandidateBellman {
    std::string name;
    double p = 2.0;
    double q = 2.0;
    /// Weight floor for which membership in K^p_delta is claimed.
    double delta = 0.5;
    /// Claims B(l x1, l^-2 x2, l^p x3, l^-q x4) = B(x).
    bool homogeneous = false;
    std::function<double(const BellmanPoint&)> evaluator;
    /// For candidates of the form C_p (x3 + x4) - h(x1, x2): C_p, before any rescaling.
    std::optional<double> shape_cp;
    /// Rescaling factor already folded into the evaluator.
    double scale = 1.0;

    double operator()(const BellmanPoint& x) const { return evaluator(x); }

    /// c * B, claimed for weight floor `new_delta`.
    CandidateBellman scaled(double c, double new_delta) const {
        CandidateBellman out = *this;
        auto base = evaluator;
        out.evaluator = [base, c](const BellmanPoint& x) { return c * base(x); };
        out.scale = scale * c;
        out.delta = new_delta;
        return out;
    }
};

using ShapeFunction = std::function<double(const HVec& x1, double x2)>;

/// C_p (x3 + x4) - h(x1, x2) with a user-supplied h.
inline CandidateBellman shaped_candidate(std::string name, double cp, ShapeFunction h, double p, double delta) {
    require_exponent(p);
    require(delta > 0.0 && delta <= 0.5, "delta must lie in (0, 1/2]");
    CandidateBellman B;
    B.name = std::move(name);
    B.p = p;
    B.q = conjugate_exponent(p);
    B.delta = delta;
    B.shape_cp = cp;
    B.evaluator = [cp, h = std::move(h)](const BellmanPoint& x) { return cp * (x.x3 + x.x4) - h(x.x1, x.x2); };
    return B;
}

/// C_p (x3 + x4): satisfies (B1) but never absorbs the |d| diam term of (B2).
inline CandidateBellman linear_candidate(double cp, double p) {
    return shaped_candidate("linear", cp, [](const HVec&, double) { return 0.0; }, p, 0.5);
}

/// Exact rescaling constant of the quadratic candidate for weight floor delta:
/// the smallest C with C (Var_lambda(x1) + d^2) >= |d| diam for all admissible weights.
inline double quadratic_rescale_constant(double delta) {
    require(delta > 0.0 && delta <= 0.5, "delta must lie in (0, 1/2]");
    // Worst normalized variance: two extreme points carrying delta each with the rest at
    // their midpoint (needs N >= 3), otherwise the two-point split (delta, 1 - delta).
    const bool three_points = std::floor(1.0 / delta + 1e-12) >= 3.0;
    const double v = three_points ? delta / 2.0 : delta * (1.0 - delta);
    return 1.0 / (2.0 * std::sqrt(v));
}

/// p = 2 candidate x3 + x4 - |x1|^2 - x2, rescaled to be valid for weight floor delta.
/// Nonnegative on all of Omega_2, so (B1) holds; (B2) reduces to
/// C (Var_lambda(x1) + d^2) >= |d| diam{x1^k}.
inline CandidateBellman quadratic_candidate(double delta = 0.5) {
    auto h = [](const HVec& x1, double x2) { return x1.squaredNorm() + x2; };
    CandidateBellman B = shaped_candidate("quadratic", 1.0, h, 2.0, 0.5);
    const double c = quadratic_rescale_constant(delta);
    return c == 1.0 ? B : B.scaled(c, delta);
}

// ---------------------------------------------------------------------------
// (B2) configurations
// ---------------------------------------------------------------------------

struct B2Config {
    std::vector<BellmanPoint> points;
    std::vector<double> weights;
    double d = 0.0;
    BellmanPoint base;
};

/// Base point x = sum_k lambda_k x^k - (0, d^2, 0, 0).
inline B2Config make_b2_config(std::vector<BellmanPoint> points, std::vector<double> weights, double d) {
    require(points.size() >= 2, "a (B2) configuration needs at least two points");
    require(points.size() == weights.size(), "one weight per point is required");
    B2Config c;
    c.base = combine(points, weights);
    c.base.x2 -= d * d;
    c.points = std::move(points);
    c.weights = std::move(weights);
    c.d = d;
    return c;
}

struct Diameter {
    double value = 0.0;
    std::size_t first = 0;
    std::size_t second = 0;
};

/// Max pairwise Euclidean distance of the x1 components; first maximizing pair in index order.
inline Diameter x1_diameter(const std::vector<BellmanPoint>& pts) {
    Diameter best;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double dist = (pts[i].x1 - pts[j].x1).norm();
            if (dist > best.value) best = {dist, i, j};
        }
    }
    return best;
}

/// Throws when the configuration breaks its invariants for weight floor delta.
inline void validate_b2_config(const B2Config& c, double delta) {
    require(c.points.size() >= 2 && c.points.size() == c.weights.size(), "malformed (B2) configuration");
    require(static_cast<double>(c.points.size()) <= std::floor(1.0 / delta + 1e-12),
            "too many points for the weight floor");
    double total = 0.0;
    for (double w : c.weights) {
        require(w >= delta - 1e-12, "weight below the floor delta");
        total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, "weights must sum to 1");
    const BellmanPoint mix = combine(c.points, c.weights);
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)); };
    require((mix.x1 - c.base.x1).norm() <= 1e-10 * std::max(1.0, mix.x1.norm()), "x1 displacement must vanish");
    require(close(mix.x2 - c.base.x2, c.d * c.d), "x2 displacement must equal d^2");
    require(close(mix.x3, c.base.x3) && close(mix.x4, c.base.x4), "x3, x4 displacements must vanish");
}

/// Slack of (B2) without the Omega_p membership checks.
inline double b2_slack(const CandidateBellman& B, const B2Config& c) {
    double mix = 0.0;
    for (std::size_t k = 0; k < c.points.size(); ++k) mix += c.weights[k] * B(c.points[k]);
    return B(c.base) - std::abs(c.d) * x1_diameter(c.points).value - mix;
}

/// B(x) - |d| diam{x1^k} - sum_k lambda_k B(x^k); nonnegative means the configuration passes.
inline double check_b2_config(const CandidateBellman& B, const B2Config& c) {
    require(omega_p_contains(c.base), "(B2) base point lies outside Omega_p");
    for (const auto& x : c.points) require(omega_p_contains(x), "(B2) point lies outside Omega_p");
    return b2_slack(B, c);
}

/// Magnitude used to turn absolute slacks into relative ones.
inline double b2_scale(const CandidateBellman& B, const B2Config& c) {
    double s = std::max(1.0, std::abs(B(c.base)));
    double mix = 0.0;
    for (std::size_t k = 0; k < c.points.size(); ++k) mix += c.weights[k] * std::abs(B(c.points[k]));
    return std::max({s, mix, std::abs(c.d) * x1_diameter(c.points).value});
}

struct B2SamplerOptions {
    double delta = 0.5;
    double p = 2.0;
    std::size_t count = 100;
    std::uint64_t seed = 1;
    int dim = 2;
    bool force_zero_d = false;
    /// When > 0, weights are dyadic rationals a_k / 2^dyadic_bits.
    int dyadic_bits = 0;
    /// Probability that a sampled point sits on the boundary |x1|^p = x3.
    double boundary_prob = 0.25;
};

namespace detail {

inline BellmanPoint sample_omega_point(Rng& rng, int dim, double p, double boundary_prob) {
    const double q = conjugate_exponent(p);
    const double s = std::exp(uniform(rng, -1.0, 1.0));
    HVec x1 = random_hvec(rng, dim, s);
    double x3 = std::pow(x1.norm(), p);
    if (uniform01(rng) >= boundary_prob) x3 += std::pow(s, p) * standard_exponential(rng);
    const double x2 = std::exp(uniform(rng, -1.0, 1.0)) * standard_exponential(rng);
    double x4 = std::pow(x2, q / 2.0);
    if (uniform01(rng) >= boundary_prob) x4 += standard_exponential(rng);
    return make_point(std::move(x1), x2, x3, x4, p);
}

inline std::vector<double> sample_real_weights(Rng& rng, std::size_t n, double delta) {
    std::vector<double> e(n);
    double total = 0.0;
    for (auto& v : e) total += (v = standard_exponential(rng));
    const double spare = std::max(0.0, 1.0 - static_cast<double>(n) * delta);
    std::vector<double> w(n);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) sum += (w[k] = delta + spare * e[k] / total);
    w[n - 1] = 1.0 - sum;
    return w;
}

inline std::vector<double> sample_dyadic_weights(Rng& rng, std::size_t n, double delta, int bits) {
    const long long b = 1LL << bits;
    const auto amin = static_cast<long long>(std::ceil(delta * static_cast<double>(b) - 1e-9));
    long long rest = b - static_cast<long long>(n) * amin;
    std::vector<long long> a(n, amin);
    std::vector<double> e(n);
    double total = 0.0;
    for (auto& v : e) total += (v = standard_exponential(rng));
    long long given = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto add = static_cast<long long>(std::floor(static_cast<double>(rest) * e[k] / total));
        a[k] += add;
        given += add;
    }
    for (long long r = given; r < rest; ++r) a[uniform_index(rng, n)] += 1;
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = static_cast<double>(a[k]) / static_cast<double>(b);
    return w;
}

}  // namespace detail

/// Random (B2) configurations with weight floor delta; deterministic per seed.
inline std::vector<B2Config> sample_b2_configs(const B2SamplerOptions& opt) {
    require(opt.delta > 0.0 && opt.delta <= 0.5, "delta must lie in (0, 1/2]");
    require_exponent(opt.p);
    require(opt.dim >= 1 && opt.dim <= 4, "sampler dimension must lie in [1, 4]");
    require(opt.dyadic_bits >= 0 && opt.dyadic_bits <= 16, "dyadic bits must lie in [0, 16]");
    auto max_n = static_cast<std::size_t>(std::floor(1.0 / opt.delta + 1e-12));
    if (opt.dyadic_bits > 0) {
        const long long b = 1LL << opt.dyadic_bits;
        const auto amin = static_cast<long long>(std::ceil(opt.delta * static_cast<double>(b) - 1e-9));
        max_n = std::min<std::size_t>(max_n, static_cast<std::size_t>(b / amin));
    }
    require(max_n >= 2, "infeasible: fewer than two points fit the weight floor");

    std::vector<B2Config> out;
    out.reserve(opt.count);
    for (std::size_t i = 0; i < opt.count; ++i) {
        Rng rng = make_rng(opt.seed, i);
        for (;;) {
            const auto n = static_cast<std::size_t>(uniform_int(rng, 2, static_cast<int>(max_n)));
            std::vector<double> w = opt.dyadic_bits > 0 ? detail::sample_dyadic_weights(rng, n, opt.delta, opt.dyadic_bits)
                                                        : detail::sample_real_weights(rng, n, opt.delta);
            std::vector<BellmanPoint> pts;
            for (std::size_t k = 0; k < n; ++k) pts.push_back(detail::sample_omega_point(rng, opt.dim, opt.p, opt.boundary_prob));
            double mix_x2 = 0.0;
            for (std::size_t k = 0; k < n; ++k) mix_x2 += w[k] * pts[k].x2;
            double d = 0.0;
            if (!opt.force_zero_d) {
                d = std::sqrt(uniform(rng, 0.0, mix_x2));
                if (uniform01(rng) < 0.5) d = -d;
            }
            B2Config c = make_b2_config(std::move(pts), std::move(w), d);
            if (c.base.x2 < 0.0) c.base.x2 = 0.0;  // rounding at d^2 == mix
            if (omega_p_contains(c.base)) {
                out.push_back(std::move(c));
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dyadic expansion
// ---------------------------------------------------------------------------

struct ExpansionNode {
    BellmanPoint point;
    double weight = 1.0;
    std::vector<ExpansionNode> children;
};

struct ExpansionCertificate {
    ExpansionNode root;
    int bits = 0;
    /// Indices (into the configuration points) of a diameter-realizing pair.
    std::size_t y1 = 0;
    std::size_t y2 = 0;
    double diam = 0.0;
    /// |mean(first half) - mean(second half)| of the sorted copies.
    double separation = 0.0;
    /// |V1 - V2| of the projected halves; separation >= projected_separation.
    double projected_separation = 0.0;
    double ratio = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;
    /// Point index of each sorted copy.
    std::vector<std::size_t> order;
};

namespace detail {

inline int dyadic_bits_of(const std::vector<double>& weights) {
    for (int m = 1; m <= 16; ++m) {
        const double b = std::ldexp(1.0, m);
        bool ok = true;
        for (double w : weights) {
            const double a = w * b;
            ok = ok && std::abs(a - std::round(a)) <= 1e-9 && std::round(a) >= 1.0;
        }
        if (ok) return m;
    }
    return -1;
}

inline ExpansionNode expansion_subtree(const std::vector<BellmanPoint>& pts, const std::vector<std::size_t>& order,
                                       std::size_t lo, std::size_t hi, double b) {
    ExpansionNode node;
    if (hi - lo == 1) {
        node.point = pts[order[lo]];
        node.weight = 1.0 / b;
        return node;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    node.children.push_back(expansion_subtree(pts, order, lo, mid, b));
    node.children.push_back(expansion_subtree(pts, order, mid, hi, b));
    node.point = combine({node.children[0].point, node.children[1].point}, {0.5, 0.5});
    node.weight = static_cast<double>(hi - lo) / b;
    return node;
}

}  // namespace detail

/// Rewrites a configuration with dyadic weights a_k / 2^M as one dyadic split of b = 2^M
/// sorted copies followed by M - 1 levels of midpoint splits.
inline ExpansionCertificate dyadic_expand(const B2Config& c) {
    const int bits = detail::dyadic_bits_of(c.weights);
    require(bits > 0, "weights must be dyadic rationals with denominator at most 2^16");
    const auto b = std::size_t{1} << bits;

    ExpansionCertificate cert;
    cert.bits = bits;
    const Diameter dm = x1_diameter(c.points);
    cert.y1 = dm.first;
    cert.y2 = dm.second;
    cert.diam = dm.value;

    // Copies, each tagged with its point index; sorted by projection onto span{y2 - y1}.
    std::vector<std::size_t> copies;
    copies.reserve(b);
    for (std::size_t k = 0; k < c.points.size(); ++k) {
        const auto a = static_cast<std::size_t>(std::llround(std::ldexp(c.weights[k], bits)));
        copies.insert(copies.end(), a, k);
    }
    require(copies.size() == b, "dyadic weights must sum to 1");
    std::vector<double> key(c.points.size(), 0.0);
    if (dm.value > 0.0) {
        const HVec u = (c.points[dm.second].x1 - c.points[dm.first].x1) / dm.value;
        for (std::size_t k = 0; k < c.points.size(); ++k) key[k] = std::abs(u.dot(c.points[k].x1 - c.points[dm.first].x1));
    }
    std::stable_sort(copies.begin(), copies.end(), [&](std::size_t x, std::size_t y) {
        return key[x] < key[y] || (key[x] == key[y] && x < y);
    });
    cert.order = copies;

    cert.root.point = c.base;
    cert.root.weight = 1.0;
    cert.root.children.push_back(detail::expansion_subtree(c.points, copies, 0, b / 2, static_cast<double>(b)));
    cert.root.children.push_back(detail::expansion_subtree(c.points, copies, b / 2, b, static_cast<double>(b)));
    cert.separation = (cert.root.children[0].point.x1 - cert.root.children[1].point.x1).norm();
    double v1 = 0.0;
    double v2 = 0.0;
    for (std::size_t i = 0; i < b / 2; ++i) v1 += key[copies[i]];
    for (std::size_t i = b / 2; i < b; ++i) v2 += key[copies[i]];
    cert.projected_separation = std::abs(v1 - v2) / static_cast<double>(b / 2);
    if (dm.value > 0.0) {
        cert.ratio = cert.separation / dm.value;
    } else {
        cert.degenerate = true;
    }
    return cert;
}

struct ExpansionCheck {
    /// B(x) - |d| s - (B(X1) + B(X2)) / 2 at the root.
    double top_slack = 0.0;
    /// Sum over internal non-root nodes of weight * (B(node) - mean of children).
    double midpoint_slack = 0.0;
    /// (top_slack + midpoint_slack) / c with c = ratio.
    double recombined = 0.0;
    /// check_b2_config of B / c evaluated directly.
    double direct = 0.0;
};

/// Recombines the per-node slacks of an expansion into the delta-level slack of B / ratio.
inline ExpansionCheck recombine_expansion(const CandidateBellman& B, const B2Config& c,
                                          const ExpansionCertificate& cert) {
    require(!cert.degenerate, "degenerate expansion has no separation ratio");
    ExpansionCheck out;
    const auto& r = cert.root;
    out.top_slack = B(r.point) - std::abs(c.d) * cert.separation -
                    0.5 * (B(r.children[0].point) + B(r.children[1].point));
    std::vector<const ExpansionNode*> stack{&r.children[0], &r.children[1]};
    while (!stack.empty()) {
        const ExpansionNode* n = stack.back();
        stack.pop_back();
        if (n->children.empty()) continue;
        out.midpoint_slack +=
            n->weight * (B(n->point) - 0.5 * (B(n->children[0].point) + B(n->children[1].point)));
        stack.push_back(&n->children[0]);
        stack.push_back(&n->children[1]);
    }
    out.recombined = (out.top_slack + out.midpoint_slack) / cert.ratio;
    out.direct = check_b2_config(B.scaled(1.0 / cert.ratio, B.delta), c);
    return out;
}

// ---------------------------------------------------------------------------
// Rescaling constant
// ---------------------------------------------------------------------------

struct RescaleEstimate {
    double constant = 1.0;
    /// (grid value, number of failing configurations), ascending in C.
    std::vector<std::pair<double, std::size_t>> failures;
};

struct RescaleOptions {
    double delta = 0.25;
    std::size_t samples = 500;
    std::uint64_t seed = 1;
    int dim = 2;
    double tolerance = 1e-9;
};

/// Smallest C on the grid 1.05^k with C B passing every sampled delta-configuration.
/// Empirical: a lower estimate of the true constant.
inline RescaleEstimate estimate_rescale_constant(const CandidateBellman& B, const RescaleOptions& opt) {
    const auto configs = sample_b2_configs(
        {.delta = opt.delta, .p = B.p, .count = opt.samples, .seed = opt.seed, .dim = opt.dim});
    // slack(C B) = C * gap - jump, with gap = B(x) - sum lambda B(x^k) and jump = |d| diam.
    std::vector<double> gap(configs.size());
    std::vector<double> jump(configs.size());
    std::vector<double> mag(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const auto& c = configs[i];
        jump[i] = std::abs(c.d) * x1_diameter(c.points).value;
        gap[i] = check_b2_config(B, c) + jump[i];
        mag[i] = b2_scale(B, c);
    }
    RescaleEstimate est;
    for (double C = 1.0; C <= 1e6 * (1.0 + 1e-12); C *= 1.05) {
        std::size_t fails = 0;
        for (std::size_t i = 0; i < configs.size(); ++i) {
            const double tol = opt.tolerance * std::max(C * mag[i], jump[i]);
            if (C * gap[i] - jump[i] < -tol) ++fails;
        }
        est.failures.emplace_back(C, fails);
        if (fails == 0) {
            est.constant = C;
            return est;
        }
    }
    throw ComputationError("no rescaling constant up to 1e6 passes; candidate " + B.name +
                           " is not in K^p_{1/2} or the sampler is broken");
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const BellmanPoint& x) {
    return nlohmann::json{{"x1", std::vector<double>(x.x1.data(), x.x1.data() + x.x1.size())},
                          {"x2", x.x2},
                          {"x3", x.x3},
                          {"x4", x.x4}};
}

inline BellmanPoint bellman_point_from_json(const nlohmann::json& j, double p) {
    const auto x1 = j.at("x1").get<std::vector<double>>();
    return make_point(Eigen::Map<const HVec>(x1.data(), static_cast<Eigen::Index>(x1.size())),
                      j.at("x2").get<double>(), j.at("x3").get<double>(), j.at("x4").get<double>(), p);
}

inline nlohmann::json to_json(const B2Config& c) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& x : c.points) pts.push_back(to_json(x));
    return nlohmann::json{{"points", std::move(pts)}, {"weights", c.weights}, {"d", c.d}, {"base", to_json(c.base)}};
}

inline B2Config b2_config_from_json(const nlohmann::json& j, double p) {
    std::vector<BellmanPoint> pts;
    for (const auto& e : j.at("points")) pts.push_back(bellman_point_from_json(e, p));
    B2Config c;
    c.points = std::move(pts);
    c.weights = j.at("weights").get<std::vector<double>>();
    c.d = j.at("d").get<double>();
    c.base = bellman_point_from_json(j.at("base"), p);
    return c;
}

inline nlohmann::json to_json(const ExpansionNode& n) {
    nlohmann::json ch = nlohmann::json::array();
    for (const auto& c : n.children) ch.push_back(to_json(c));
    return nlohmann::json{{"point", to_json(n.point)}, {"weight", n.weight}, {"children", std::move(ch)}};
}

inline nlohmann::json to_json(const ExpansionCertificate& cert) {
    return nlohmann::json{{"node", to_json(cert.root)},
                          {"separation", cert.separation},
                          {"ratio", cert.degenerate ? nlohmann::json(nullptr) : nlohmann::json(cert.ratio)}};
}

}  // namespace mbl
