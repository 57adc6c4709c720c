#pragma once

// Runs the Bellman induction on a concrete witness (f, g, T): one (B2) instance per
// split event of the refiltration, leaf boundary values, and the telescoped bound
// B(x^I) >= <g T[f - <f>_I]>_I.  A failing certificate is returned, never thrown.

#include "mbl/bellman.hpp"
#include "mbl/report.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace mbl {

/// d_J = |J|^{-1/2} ||Delta_J T* g||, with T* g precomputed.
inline double compute_dJ_from_adjoint(const MartFunction& tstar_g, const SplitEvent& e) {
    const double mJ = tstar_g.filtration()->atom(e.atom).measure;
    return l2_norm(delta_split(tstar_g, e)) / std::sqrt(mJ);
}

inline double compute_dJ(const MartFunction& g, const GundyOperator& T, const SplitEvent& e) {
    return compute_dJ_from_adjoint(adjoint_apply(T, g), e);
}

/// <g T[f - <f>_I]>_I.
inline double witness_objective(const MartFunction& f, const MartFunction& g, const GundyOperator& T) {
    const auto& filt = *f.filtration();
    const MartFunction centered = f - MartFunction::constant(f.filtration(), average(f, filt.root_id()));
    return inner(g, apply(T, centered)) / filt.root().measure;
}

struct SplitRecord {
    SplitEvent event;
    BellmanPoint parent_point;
    std::vector<BellmanPoint> child_points;
    std::vector<double> weights;
    double d = 0.0;
    double diam = 0.0;
    /// max |Delta_J f| over J; equals max_Q |x1^Q - x1^J|.
    double max_delta_f = 0.0;
    double b2_slack = 0.0;
    /// Magnitude the slack tolerance is measured against.
    double b2_scale = 1.0;
    /// (1/|J|) <Delta_J T* g, Delta_J f>.
    double pairing = 0.0;
    /// sum_Q (|Q|/|J|) x2^Q - x2^J, to compare with d^2.
    double d2_rhs = 0.0;
    bool passed = true;
};

struct Certificate {
    std::string candidate;
    std::vector<SplitRecord> records;
    BellmanPoint root_point;
    double root_value = 0.0;
    double objective = 0.0;
    std::vector<BellmanPoint> leaf_points;
    std::vector<double> leaf_boundary_values;
    double final_slack = 0.0;
    /// sum_J (|J|/|I|)(slack_J + |d_J| diam_J - pairing_J) + sum_L (|L|/|I|) B(x^L).
    double chain_value = 0.0;
    bool passed = true;
    std::optional<std::size_t> failing_record;
    std::optional<std::size_t> failing_leaf;

    const SplitRecord* failing() const { return failing_record ? &records[*failing_record] : nullptr; }
};

struct CertifyOptions {
    double split_tolerance = 1e-9;
    double final_tolerance = 1e-6;
};

inline Certificate certify(const MartFunction& f, const MartFunction& g, const GundyOperator& T,
                           const CandidateBellman& B, const CertifyOptions& opt = {}) {
    require(f.filtration() == T.filtration() && g.filtration() == T.filtration(),
            "witness and operator must share one filtration");
    require(g.dim() == 1, "g must be scalar");
    require(f.dim() == T.dim(), "f and T dimensions differ");
    const auto& filt = *T.filtration();
    const double dstar = regularity_delta(filt);
    require(B.delta <= dstar * (1.0 + 1e-12),
            "candidate claims delta = " + std::to_string(B.delta) + " above the filtration's " + std::to_string(dstar));

    const double p = B.p;
    const double mI = filt.root().measure;
    const MartFunction tstar = adjoint_apply(T, g);

    Certificate cert;
    cert.candidate = B.name;
    cert.root_point = bellman_point(f, g, tstar, filt.root_id(), p);
    cert.root_value = B(cert.root_point);
    cert.objective = witness_objective(f, g, T);

    auto clamp_x2 = [](BellmanPoint x) {
        if (x.x2 < 0.0) x.x2 = 0.0;  // rounding-level negatives; raw value kept in the record
        return x;
    };

    double chain = 0.0;
    for (const auto& e : filt.split_schedule()) {
        const auto& J = filt.atom(e.atom);
        SplitRecord rec;
        rec.event = e;
        rec.parent_point = bellman_point(f, g, tstar, e.atom, p);
        for (AtomId c : J.children) {
            rec.child_points.push_back(bellman_point(f, g, tstar, c, p));
            rec.weights.push_back(filt.atom(c).measure / J.measure);
        }
        const MartFunction dtg = delta_split(tstar, e);
        const MartFunction df = delta_split(f, e);
        rec.d = l2_norm(dtg) / std::sqrt(J.measure);
        rec.pairing = inner(dtg, df) / J.measure;
        rec.max_delta_f = max_norm_on(df, e.atom);
        rec.diam = x1_diameter(rec.child_points).value;
        rec.d2_rhs = -rec.parent_point.x2;
        for (std::size_t k = 0; k < rec.child_points.size(); ++k) rec.d2_rhs += rec.weights[k] * rec.child_points[k].x2;

        B2Config cfg;
        cfg.base = clamp_x2(rec.parent_point);
        for (const auto& x : rec.child_points) cfg.points.push_back(clamp_x2(x));
        cfg.weights = rec.weights;
        cfg.d = rec.d;
        rec.b2_slack = b2_slack(B, cfg);
        rec.b2_scale = b2_scale(B, cfg);
        rec.passed = rec.b2_slack >= -opt.split_tolerance * rec.b2_scale;
        if (!rec.passed && !cert.failing_record) cert.failing_record = cert.records.size();
        chain += (J.measure / mI) * (rec.b2_slack + std::abs(rec.d) * rec.diam - rec.pairing);
        cert.records.push_back(std::move(rec));
    }

    for (std::size_t i = 0; i < filt.num_leaves(); ++i) {
        const AtomId id = filt.leaves()[i];
        BellmanPoint x = bellman_point(f, g, tstar, id, p);
        const double v = B(clamp_x2(x));
        const double scale = std::max({1.0, std::abs(B.scale * (x.x3 + x.x4)), std::abs(v)});
        if (v < -opt.split_tolerance * scale && !cert.failing_leaf) cert.failing_leaf = i;
        chain += (filt.atom(id).measure / mI) * v;
        cert.leaf_points.push_back(std::move(x));
        cert.leaf_boundary_values.push_back(v);
    }

    cert.chain_value = chain;
    cert.final_slack = cert.root_value - cert.objective;
    const double final_scale = std::max({1.0, std::abs(cert.root_value), std::abs(cert.objective)});
    cert.passed = !cert.failing_record && !cert.failing_leaf &&
                  cert.final_slack >= -opt.final_tolerance * final_scale;
    return cert;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const SplitRecord& r) {
    nlohmann::json children = nlohmann::json::array();
    for (const auto& x : r.child_points) children.push_back(to_json(x));
    return nlohmann::json{{"atom_id", r.event.atom},  {"order_index", r.event.order_index},
                          {"parent", to_json(r.parent_point)}, {"children", std::move(children)},
                          {"weights", r.weights},   {"d", r.d},
                          {"diam", r.diam},         {"max_delta_f", r.max_delta_f},
                          {"b2_slack", r.b2_slack}, {"pairing", r.pairing},
                          {"d2_rhs", r.d2_rhs},     {"passed", r.passed}};
}

inline nlohmann::json to_json(const Certificate& c) {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : c.records) recs.push_back(to_json(r));
    return nlohmann::json{
        {"candidate", c.candidate},
        {"passed", c.passed},
        {"root_point", to_json(c.root_point)},
        {"root_value", c.root_value},
        {"objective", c.objective},
        {"final_slack", c.final_slack},
        {"chain_value", c.chain_value},
        {"failing_record", c.failing_record ? nlohmann::json(*c.failing_record) : nlohmann::json(nullptr)},
        {"failing_leaf", c.failing_leaf ? nlohmann::json(*c.failing_leaf) : nlohmann::json(nullptr)},
        {"leaf_boundary_values", c.leaf_boundary_values},
        {"records", std::move(recs)}};
}

/// One row per split: atom id, d, diam, slack, pairing.
inline Report certificate_summary(const Certificate& c) {
    Report r;
    r.columns = {"atom_id", "d", "diam", "slack", "pairing", "passed"};
    for (const auto& rec : c.records) {
        r.add_row({static_cast<std::int64_t>(rec.event.atom), rec.d, rec.diam, rec.b2_slack, rec.pairing, rec.passed});
    }
    return r;
}

}  // namespace mbl
