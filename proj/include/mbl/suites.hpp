#pragma once

// Invariant suites over concrete instances (filtration, f, g, T): projection and
// orthogonality of the split differences, localization and predictable support,
// the oscillation identities, and positivity.  Each check compares an error with an
// allowed bound; a suite passes when every ratio error / allowed is at most 1.

#include "mbl/certifier.hpp"
#include "mbl/estimator.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace mbl {

struct SuiteResult {
    std::string name;
    std::size_t checks = 0;
    std::size_t failures = 0;
    double worst_ratio = 0.0;
    std::string first_failure{};

    void check(double err, double allowed, const std::string& what) {
        ++checks;
        const double ratio = allowed > 0.0 ? err / allowed : (err > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (!(ratio <= 1.0)) {
            if (failures == 0) {
                std::ostringstream os;
                os << what << ": error " << format_double(err) << " > allowed " << format_double(allowed);
                first_failure = os.str();
            }
            ++failures;
        }
        if (std::isnan(ratio)) worst_ratio = std::numeric_limits<double>::infinity();
        else worst_ratio = std::max(worst_ratio, ratio);
    }

    void merge(const SuiteResult& o) {
        checks += o.checks;
        if (failures == 0 && o.failures > 0) first_failure = o.first_failure;
        failures += o.failures;
        worst_ratio = std::max(worst_ratio, o.worst_ratio);
    }

    bool passed() const { return failures == 0; }
};

struct FiltrationSpec {
    enum class Kind { dyadic, random } kind = Kind::dyadic;
    int depth = 3;
    double delta = 0.5;
    int max_children = 2;
    double split_prob = 0.5;
    std::uint64_t seed = 1;
};

inline FiltrationPtr build_filtration(const FiltrationSpec& s) {
    if (s.kind == FiltrationSpec::Kind::dyadic) return build_dyadic(s.depth);
    return build_random_regular(
        {.depth = s.depth, .delta = s.delta, .max_children = s.max_children, .split_prob = s.split_prob, .seed = s.seed});
}

/// Corpus cell member: depth cycles through 1..max_depth; delta = 1/2 alternates dyadic
/// and random split patterns; at most three children per split.
inline FiltrationSpec corpus_filtration(double delta, std::uint64_t seed, int max_depth = 5) {
    FiltrationSpec s;
    s.depth = 1 + static_cast<int>(seed % static_cast<std::uint64_t>(max_depth));
    s.delta = delta;
    s.seed = stream_seed(seed, 0xF17);
    s.kind = (delta == 0.5 && seed % 2 == 0) ? FiltrationSpec::Kind::dyadic : FiltrationSpec::Kind::random;
    s.max_children = std::min(3, static_cast<int>(std::floor(1.0 / delta + 1e-12)));
    s.split_prob = 0.5;
    return s;
}

struct Instance {
    FiltrationPtr filt;
    MartFunction f;
    MartFunction h;
    MartFunction g;
    GundyOperator T;
    std::uint64_t seed;
};

inline Instance make_instance(const FiltrationSpec& spec, int dim, std::uint64_t seed) {
    FiltrationPtr filt = build_filtration(spec);
    Rng rng = make_rng(seed, 0xC0FFEE);
    GundyOperator T = make_random_transform(filt, dim, rng);
    MartFunction f = random_function(filt, dim, rng);
    MartFunction h = random_function(filt, dim, rng);
    MartFunction g = random_function(filt, 1, rng);
    return Instance{filt, std::move(f), std::move(h), std::move(g), std::move(T), seed};
}

namespace detail {

/// Up to `limit` split events, chosen deterministically.
inline std::vector<SplitEvent> pick_events(const Filtration& filt, std::size_t limit, Rng& rng) {
    std::vector<SplitEvent> ev = filt.split_schedule();
    if (ev.size() <= limit) return ev;
    for (std::size_t i = 0; i < limit; ++i) std::swap(ev[i], ev[i + uniform_index(rng, ev.size() - i)]);
    ev.resize(limit);
    return ev;
}

inline double rel_allowed(double tol, double a, double b, double floor_scale) {
    return tol * std::max({std::abs(a), std::abs(b), floor_scale});
}

inline bool atom_inside(const Atom& inner_atom, const Atom& outer) {
    return inner_atom.leaf_begin >= outer.leaf_begin && inner_atom.leaf_end <= outer.leaf_end;
}

}  // namespace detail

/// Idempotence, self-adjointness, mutual orthogonality, both evaluation routes of
/// Delta_J and invariance under reordering same-level events.
inline SuiteResult projection_suite(const Instance& in, double tol_scale = 1.0) {
    SuiteResult r{"projection"};
    const auto& filt = *in.filt;
    const double tol = 1e-9 * tol_scale;
    const double nf = l2_norm(in.f);
    const double nh = l2_norm(in.h);
    Rng rng = make_rng(in.seed, 0xA11);
    const auto events = detail::pick_events(filt, 24, rng);

    // Alternative order: reverse the within-level order of the default schedule.
    std::vector<AtomId> alt;
    for (int n = 0; n < filt.depth(); ++n) {
        std::vector<AtomId> lvl;
        for (AtomId id : filt.level(n)) if (filt.atom(id).is_split()) lvl.push_back(id);
        alt.insert(alt.end(), lvl.rbegin(), lvl.rend());
    }
    filt.validate_split_order(alt);

    std::vector<MartFunction> df;
    std::vector<MartFunction> dh;
    for (const auto& e : events) {
        const MartFunction a = delta_split(in.f, e);
        const MartFunction b = delta_split(in.h, e);
        r.check(l2_norm(delta_split(a, e) - a), tol * nf, "idempotence");
        const double fdh = inner(in.f, b);
        const double dfh = inner(a, in.h);
        const double dfdh = inner(a, b);
        r.check(std::abs(fdh - dfh), tol * nf * nh, "self-adjointness <f, D g> = <D f, g>");
        r.check(std::abs(fdh - dfdh), tol * nf * nh, "self-adjointness <f, D g> = <D f, D g>");

        const MartFunction general =
            cond_exp(in.f, filt.post_partition(e)) - cond_exp(in.f, filt.prev_partition(e));
        r.check(l2_norm(general - a), tol * nf, "conditional-expectation route");
        const std::size_t k = static_cast<std::size_t>(std::find(alt.begin(), alt.end(), e.atom) - alt.begin());
        const MartFunction reordered = cond_exp(in.f, filt.partition_for_order(alt, k, true)) -
                                       cond_exp(in.f, filt.partition_for_order(alt, k, false));
        r.check(l2_norm(reordered - a), tol * nf, "order invariance");

        double outside = 0.0;
        const auto& J = filt.atom(e.atom);
        for (std::size_t i = 0; i < filt.num_leaves(); ++i) {
            if (i < J.leaf_begin || i >= J.leaf_end) outside = std::max(outside, a.value(i).norm());
        }
        r.check(outside, 1e-300, "support inside J");
        r.check(average(a, e.atom).norm(), 1e-12 * tol_scale * std::max(1.0, nf), "mean zero over J");
        df.push_back(a);
        dh.push_back(b);
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        for (std::size_t j = 0; j < events.size(); ++j) {
            if (i == j) continue;
            r.check(std::abs(inner(df[i], dh[j])), tol * nf * nh, "mutual orthogonality");
        }
    }
    return r;
}

/// Delta_J-range functions are mapped into J; predictable-support functions are mapped
/// into the union of their support events.
inline SuiteResult localization_suite(const Instance& in, double tol_scale = 1.0) {
    SuiteResult r{"localization"};
    const auto& filt = *in.filt;
    Rng rng = make_rng(in.seed, 0xB22);
    for (const auto& e : detail::pick_events(filt, 24, rng)) {
        const MartFunction phi = delta_split(in.f, e);
        const MartFunction Tphi = apply(in.T, phi);
        const auto& J = filt.atom(e.atom);
        double outside = 0.0;
        for (std::size_t i = 0; i < filt.num_leaves(); ++i) {
            if (i < J.leaf_begin || i >= J.leaf_end) outside += filt.leaf_weights()[static_cast<Eigen::Index>(i)] * std::pow(Tphi.value(i)[0], 2);
        }
        r.check(std::sqrt(outside), 1e-12 * tol_scale, "supp T Delta_J f inside J");
    }

    // f = sum over a random set S of split atoms of Delta_A(random); e_n = S-atoms of level n-1.
    for (int rep = 0; rep < 3; ++rep) {
        std::vector<char> chosen(filt.atoms().size(), 0);
        MartFunction f = MartFunction::zero(in.filt, in.T.dim());
        bool any = false;
        for (AtomId id : filt.dyadic_set()) {
            if (uniform01(rng) < 0.4) {
                chosen[id] = 1;
                any = true;
                f = f + delta_split(random_function(in.filt, in.T.dim(), rng), *filt.event_of(id));
            }
        }
        if (!any) continue;
        r.check(average(f, filt.root_id()).norm(), 1e-12 * tol_scale * std::max(1.0, l2_norm(f)), "Delta_0 f = 0");
        const auto support = predictable_support(f);
        for (int n = 1; n <= filt.depth(); ++n) {
            for (AtomId id : support[static_cast<std::size_t>(n - 1)]) {
                r.check(chosen[id] ? 0.0 : 1.0, 0.5, "predictable support within chosen events");
            }
        }
        const MartFunction Tf = apply(in.T, f);
        std::vector<char> covered(filt.num_leaves(), 0);
        for (AtomId id : filt.dyadic_set()) {
            if (!chosen[id]) continue;
            const auto& A = filt.atom(id);
            for (std::size_t i = A.leaf_begin; i < A.leaf_end; ++i) covered[i] = 1;
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < filt.num_leaves(); ++i) {
            if (!covered[i]) worst = std::max(worst, std::abs(Tf.value(i)[0]));
        }
        r.check(worst, 1e-12 * tol_scale, "Tf vanishes outside the union of e_n");
    }
    return r;
}

/// Oscillation series, d_J^2 identity, restriction identity, telescoping, and the two
/// oscillation formulas.
inline SuiteResult identity_suite(const Instance& in, double tol_scale = 1.0) {
    SuiteResult r{"identity"};
    const auto& filt = *in.filt;
    const double tol = 1e-9 * tol_scale;
    const double p = 2.0;
    const MartFunction tg = adjoint_apply(in.T, in.g);
    const double mI = filt.root().measure;

    std::vector<double> dnorm2(filt.atoms().size(), 0.0);
    for (const auto& e : filt.split_schedule()) dnorm2[e.atom] = std::pow(l2_norm(delta_split(tg, e)), 2);

    double tele = 0.0;
    for (const auto& e : filt.split_schedule()) tele += inner(delta_split(tg, e), delta_split(in.f, e));
    const MartFunction centered = in.f - MartFunction::constant(in.filt, average(in.f, filt.root_id()));
    const double direct = inner(in.g, apply(in.T, centered));
    const double mag = l2_norm(in.g) * l2_norm(in.f);
    r.check(std::abs(tele - direct), detail::rel_allowed(tol, tele, direct, 1e-3 * mag), "telescoping");
    r.check(std::abs(direct - mI * witness_objective(in.f, in.g, in.T)),
            detail::rel_allowed(tol, direct, direct, 1e-3 * mag), "objective");

    for (AtomId Jid : filt.dyadic_set()) {
        const auto& J = filt.atom(Jid);
        const double g2 = average_pow(in.g, Jid, 2.0);
        const double osc = osc2(tg, Jid);
        r.check(std::abs(osc - osc2_moment_form(tg, Jid)), detail::rel_allowed(tol, osc, osc, 1e-3 * g2),
                "oscillation forms");

        double series = 0.0;
        for (AtomId Qid : filt.dyadic_set()) {
            if (detail::atom_inside(filt.atom(Qid), J)) series += dnorm2[Qid];
        }
        series /= J.measure;
        r.check(std::abs(osc - series), detail::rel_allowed(tol, osc, series, 1e-3 * g2), "oscillation series");

        // Exact with g centered on J; for g 1_J itself the coarser splits Q > J only add mass.
        const MartFunction centered_g =
            restrict_to(in.g - MartFunction::constant(in.filt, average(in.g, Jid)), Jid);
        const double restricted = mI / J.measure * osc2(adjoint_apply(in.T, centered_g), filt.root_id());
        r.check(std::abs(osc - restricted), detail::rel_allowed(tol, osc, restricted, 1e-3 * g2),
                "restriction identity");
        const double uncentered = mI / J.measure * osc2(adjoint_apply(in.T, restrict_to(in.g, Jid)), filt.root_id());
        r.check(std::max(0.0, osc - uncentered), detail::rel_allowed(tol, osc, uncentered, 1e-3 * g2),
                "restriction inequality");

        const auto e = *filt.event_of(Jid);
        const double d = compute_dJ_from_adjoint(tg, e);
        const BellmanPoint parent = bellman_point(in.f, in.g, tg, Jid, p);
        double rhs = -parent.x2;
        for (AtomId c : J.children) rhs += filt.atom(c).measure / J.measure * bellman_point(in.f, in.g, tg, c, p).x2;
        r.check(std::abs(d * d - rhs), detail::rel_allowed(tol, d * d, rhs, 1e-3 * g2), "d_J^2 identity");
    }
    return r;
}

/// Operator norm, x2 >= 0 on every atom, the x2 inequality, and the operator's two
/// representations and adjoint relation.
inline SuiteResult positivity_suite(const Instance& in, double tol_scale = 1.0) {
    SuiteResult r{"positivity"};
    const auto& filt = *in.filt;
    r.check(std::max(0.0, operator_norm(in.T) - 1.0), 1e-9 * tol_scale, "operator norm <= 1");
    const MartFunction tg = adjoint_apply(in.T, in.g);
    for (const auto& at : filt.atoms()) {
        const double g2 = average_pow(in.g, at.id, 2.0);
        const double x2 = g2 - osc2(tg, at.id);
        r.check(std::max(0.0, -x2), 1e-12 * tol_scale * std::max(g2, 1e-300), "x2 >= 0");
    }
    const AtomId I = filt.root_id();
    const double lhs = average_pow(in.g, I, 2.0) - osc2(tg, I);
    r.check(std::max(0.0, average(tg, I).squaredNorm() - lhs), 1e-10 * tol_scale, "x2 inequality");

    const double nf = l2_norm(in.f);
    const double ng = l2_norm(in.g);
    const MartFunction Tf = apply(in.T, in.f);
    r.check(l2_norm(Tf - apply_matrix(in.T, in.f)), 1e-10 * tol_scale * std::max(1.0, nf), "matrix route");
    r.check(std::abs(inner(in.g, Tf) - inner(tg, in.f)), 1e-10 * tol_scale * nf * ng, "adjoint relation");
    r.check(l2_norm(tg - adjoint_closed_form(in.T, in.g)), 1e-10 * tol_scale * std::max(1.0, ng), "closed-form adjoint");
    r.check(std::max(0.0, l2_norm(Tf) - nf), 1e-9 * tol_scale * std::max(1.0, nf), "||Tf|| <= ||f||");
    return r;
}

using SuiteFn = SuiteResult (*)(const Instance&, double);

inline std::vector<std::pair<std::string, SuiteFn>> all_suites() {
    return {{"projection", &projection_suite},
            {"localization", &localization_suite},
            {"identity", &identity_suite},
            {"positivity", &positivity_suite}};
}

}  // namespace mbl
