#include "sr/json_io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "sr/version.hpp"

namespace sr {

namespace {

nlohmann::json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

nlohmann::json bound(double v) {
    if (std::isfinite(v)) return v;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return nullptr;
}

std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

nlohmann::json json_of(const StrataDiagnostics& d) {
    return {
        {"n", d.n},
        {"n_strata", d.n_strata},
        {"s_over_n", d.s_over_n},
        {"max_size", d.max_size},
        {"singletons", d.singletons},
        {"effective_sample", d.effective_sample},
        {"log_group_size", d.log_group_size},
        {"high_strata_warning", d.high_strata_warning},
    };
}

nlohmann::json json_of(const TestResult& r, bool include_permuted) {
    nlohmann::json j{
        {"method", r.method},
        {"statistic", number_or_null(r.statistic)},
        {"critical", number_or_null(r.critical)},
        {"p_value", r.p_value},
        {"phi", r.phi},
        {"decision", decision_name(r.decision)},
        {"rejected", r.rejected},
        {"randomization_u", number_or_null(r.randomization_u)},
        {"alpha", r.alpha},
        {"n_permutations", r.n_permutations},
        {"requested", r.requested},
        {"enumerated", r.enumerated},
        {"trivial", r.trivial},
        {"generalized_inverse", r.generalized_inverse},
        {"seed", r.seed},
        {"strata", json_of(r.strata)},
    };
    j["beta0"] = std::vector<double>(r.beta0.data(), r.beta0.data() + r.beta0.size());
    if (r.approx) {
        j["approx"] = {
            {"s_requested", r.approx->s_requested},
            {"s_realized", r.approx->s_realized},
            {"correlation", r.approx->correlation},
            {"degenerate", r.approx->degenerate},
            {"edges", r.approx->edges},
        };
    }
    if (include_permuted) j["permuted"] = r.permuted;
    return j;
}

nlohmann::json json_of(const ComparatorResult& r) {
    return {
        {"method", r.method},
        {"statistic", number_or_null(r.statistic)},
        {"critical", number_or_null(r.critical)},
        {"p_value", r.p_value},
        {"alpha", r.alpha},
        {"rejected", r.rejected},
        {"n_replicas", r.n_replicas},
        {"enumerated", r.enumerated},
        {"seed", r.seed},
        {"generalized_inverse", r.generalized_inverse},
    };
}

nlohmann::json json_of(const ConfidenceInterval& ci, bool include_grid) {
    nlohmann::json j{
        {"method", ci_method_name(ci.method)},
        {"alpha", ci.alpha},
        {"level", ci.level},
        {"lo", bound(ci.lo)},
        {"hi", bound(ci.hi)},
        {"empty", ci.empty},
        {"trivial", ci.trivial},
        {"convexified", ci.convexified},
        {"boundary_saturated", ci.boundary_saturated},
        {"seed", ci.seed},
        {"grid_points", ci.grid.size()},
        {"accepted_points", ci.raw_region.size()},
    };
    if (include_grid) {
        j["grid"] = ci.grid;
        j["accepted"] = nlohmann::json::array();
        for (char a : ci.accepted) j["accepted"].push_back(a != 0);
        j["raw_region"] = ci.raw_region;
    }
    return j;
}

nlohmann::json json_of(const PowerPoint& p) {
    return {
        {"method", method_label(p.method)},
        {"beta", p.beta},
        {"n", p.n},
        {"p", p.p},
        {"rejection_rate", p.rejection_rate},
        {"se", p.se},
        {"reps", p.reps},
    };
}

nlohmann::json json_of(const std::vector<PowerPoint>& pts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : pts) arr.push_back(json_of(p));
    return arr;
}

nlohmann::json json_of(const StrataMoments& m) {
    return {
        {"mean_s", m.mean_s},
        {"mean_max", m.mean_max},
        {"mean_log_size", m.mean_log_size},
        {"log_mean_size", m.log_mean_size},
        {"reps", m.reps},
    };
}

nlohmann::json envelope(const std::string& command, std::uint64_t seed, nlohmann::json config,
                        nlohmann::json result, const std::vector<std::string>& warnings) {
    return {
        {"tool", "srtest"},
        {"version", kVersion},
        {"command", command},
        {"seed", seed},
        {"config", std::move(config)},
        {"result", std::move(result)},
        {"warnings", warnings},
    };
}

void write_power_csv(std::ostream& os, const std::vector<PowerPoint>& pts,
                     const std::vector<std::string>& comments) {
    os << "# tool: srtest " << kVersion << "\n";
    for (const auto& c : comments) os << "# " << c << "\n";
    os << "method,beta,n,p,rejection_rate,se,reps\n";
    for (const auto& p : pts) {
        os << method_label(p.method) << ',' << shortest(p.beta) << ',' << p.n << ',' << p.p << ','
           << shortest(p.rejection_rate) << ',' << shortest(p.se) << ',' << p.reps << '\n';
    }
}

}  // namespace sr
