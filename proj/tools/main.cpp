#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sr/approx.hpp"
#include "sr/comparators.hpp"
#include "sr/dataset.hpp"
#include "sr/errors.hpp"
#include "sr/inversion.hpp"
#include "sr/json_io.hpp"
#include "sr/montecarlo.hpp"
#include "sr/sr_test.hpp"
#include "sr/strata.hpp"
#include "sr/version.hpp"

namespace {

struct DataArgs {
    std::string path;
    std::string y = "y";
    std::vector<std::string> x;
    std::vector<std::string> z;
    bool no_intercept = false;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
    cmd->add_option("--data", a.path, "CSV file with a header row")->required();
    cmd->add_option("--y", a.y, "outcome column")->capture_default_str();
    cmd->add_option("--x", a.x, "tested regressor columns (default: names starting with 'x')")
        ->delimiter(',');
    cmd->add_option("--z", a.z,
                    "control columns (default: names starting with 'z', skipping 'z1' "
                    "unless --no-intercept)")
        ->delimiter(',');
    cmd->add_flag("--no-intercept", a.no_intercept,
                  "first --z column is already an intercept; do not synthesize one");
}

sr::Dataset load(const DataArgs& a) {
    sr::CsvSpec spec;
    spec.y = a.y;
    spec.x = a.x;
    spec.z = a.z;
    spec.add_intercept = !a.no_intercept;
    if (spec.x.empty() || spec.z.empty()) {
        const auto header = sr::csv_header(a.path);
        if (spec.x.empty())
            for (const auto& h : header)
                if (h.rfind('x', 0) == 0 && h != a.y) spec.x.push_back(h);
        if (spec.z.empty())
            for (const auto& h : header) {
                if (h.rfind('z', 0) != 0) continue;
                if (spec.add_intercept && h == "z1") continue;
                spec.z.push_back(h);
            }
        if (spec.x.empty())
            throw sr::InvalidDataset("no --x given and no header starts with 'x' in '" + a.path +
                                     "'");
    }
    return sr::load_csv(a.path, spec);
}

nlohmann::json data_config(const DataArgs& a) {
    return {{"data", a.path},
            {"y", a.y},
            {"x", a.x},
            {"z", a.z},
            {"add_intercept", !a.no_intercept}};
}

Eigen::VectorXd parse_beta0(const std::vector<double>& values) {
    Eigen::VectorXd b(values.empty() ? 1 : static_cast<Eigen::Index>(values.size()));
    if (values.empty())
        b(0) = 0.0;
    else
        for (std::size_t i = 0; i < values.size(); ++i) b(static_cast<Eigen::Index>(i)) = values[i];
    return b;
}

// "lo:hi:step" -> explicit grid.
std::vector<double> parse_grid(const std::string& text) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw sr::DomainError("grid must be lo:hi:step, got '" + text + "'");
    try {
        const double lo = std::stod(text.substr(0, c1));
        const double hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        const double step = std::stod(text.substr(c2 + 1));
        return sr::make_grid(lo, hi, step);
    } catch (const std::logic_error&) {
        throw sr::DomainError("grid must be lo:hi:step with numeric parts, got '" + text + "'");
    }
}

std::vector<double> parse_betas(const std::string& text) {
    if (text.find(':') != std::string::npos) return parse_grid(text);
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const std::string piece =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            out.push_back(std::stod(piece));
        } catch (const std::logic_error&) {
            throw sr::DomainError("cannot parse beta value '" + piece + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw sr::DomainError("empty beta list");
    return out;
}

void emit(const nlohmann::json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw sr::FileNotFound("cannot write '" + out_path + "'");
    f << text;
    if (!f) throw sr::FileNotFound("write to '" + out_path + "' failed");
}

void warn_all(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void collect_test_warnings(const sr::TestResult& r, std::vector<std::string>& warnings) {
    if (r.trivial)
        warnings.push_back("every stratum is a singleton; the test is trivial (phi = alpha)");
    if (r.strata.high_strata_warning && !r.trivial)
        warnings.push_back("strata use up more than half the sample (S/n > 1/2); power may be low");
    if (r.generalized_inverse)
        warnings.push_back("inner covariance matrix was singular; generalized inverse used");
    if (r.approx && r.approx->degenerate)
        warnings.push_back("fitted index is constant; all rows fell into one stratum");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stratified randomization inference for linear regression subvectors"};
    app.set_version_flag("--version", std::string("srtest ") + sr::kVersion);
    app.set_config("--config", "", "read options from an INI/TOML file");
    app.require_subcommand(1);

    // test
    auto* test_cmd = app.add_subcommand("test", "test H0: beta = beta0 on a CSV dataset");
    DataArgs test_data;
    add_data_options(test_cmd, test_data);
    std::string test_method = "sr";
    test_cmd->add_option("--method", test_method, "sr|sra|approx|pc|hc0|hc1|hc3|f")
        ->check(CLI::IsMember({"sr", "sra", "approx", "pc", "hc0", "hc1", "hc3", "f"}))
        ->capture_default_str();
    std::vector<double> beta0_values;
    test_cmd->add_option("--beta0", beta0_values, "null value(s) for the tested coefficient(s)")
        ->delimiter(',');
    double alpha = 0.05;
    test_cmd->add_option("--alpha", alpha, "nominal level")->capture_default_str();
    int n_prime = 499;
    test_cmd->add_option("--permutations", n_prime, "random permutations N'")
        ->capture_default_str();
    std::uint64_t seed = 1;
    test_cmd->add_option("--seed", seed, "RNG seed")->capture_default_str();
    int threads = 0;
    test_cmd->add_option("--threads", threads, "worker threads (0 = all cores)")
        ->capture_default_str();
    bool conservative = false;
    test_cmd->add_flag("--conservative", conservative, "never reject via randomization");
    std::optional<double> fixed_u;
    test_cmd->add_option("--u", fixed_u, "fixed uniform for the randomized decision");
    int s_bins = 0;
    test_cmd->add_option("--s-bins", s_bins, "strata for --method approx (0 = data-driven)")
        ->capture_default_str();
    bool dump_perms = false;
    test_cmd->add_flag("--dump-permutations", dump_perms,
                       "include the permuted statistics in the output");
    std::string out_path;
    test_cmd->add_option("--out", out_path, "write JSON here instead of stdout");

    // ci
    auto* ci_cmd = app.add_subcommand("ci", "confidence interval by test inversion");
    DataArgs ci_data;
    add_data_options(ci_cmd, ci_data);
    std::string ci_method = "sr";
    ci_cmd->add_option("--method", ci_method, "sr|approx|pc|hc0|hc1|hc3|f")
        ->check(CLI::IsMember({"sr", "approx", "pc", "hc0", "hc1", "hc3", "f"}))
        ->capture_default_str();
    std::string grid_text;
    ci_cmd->add_option("--grid", grid_text, "candidate beta values, lo:hi:step")->required();
    double ci_alpha = 0.05;
    ci_cmd->add_option("--alpha", ci_alpha, "1 - confidence level")->capture_default_str();
    int ci_n_prime = 499;
    ci_cmd->add_option("--permutations", ci_n_prime, "random permutations N'")
        ->capture_default_str();
    std::uint64_t ci_seed = 1;
    ci_cmd->add_option("--seed", ci_seed, "RNG seed")->capture_default_str();
    int ci_threads = 0;
    ci_cmd->add_option("--threads", ci_threads, "worker threads (0 = all cores)")
        ->capture_default_str();
    int ci_s_bins = 0;
    ci_cmd->add_option("--s-bins", ci_s_bins, "strata for --method approx (0 = data-driven)")
        ->capture_default_str();
    bool include_grid = false;
    ci_cmd->add_flag("--include-grid", include_grid, "dump the grid and acceptance flags");
    std::string ci_out;
    ci_cmd->add_option("--out", ci_out, "write JSON here instead of stdout");

    // power
    auto* power_cmd = app.add_subcommand("power", "Monte Carlo rejection rates on synthetic data");
    std::string dgp_text = "dgp1";
    power_cmd->add_option("--dgp", dgp_text, "dgp1|dgp2|dgp3|dgp1exp|dgp1p|dgp2p|dgp3p")
        ->capture_default_str();
    int mc_n = 50, mc_p = 2;
    power_cmd->add_option("--n", mc_n, "sample size")->capture_default_str();
    power_cmd->add_option("--p", mc_p, "controls including the intercept")->capture_default_str();
    std::string betas_text = "0";
    power_cmd->add_option("--betas", betas_text, "comma list or lo:hi:step of true betas")
        ->capture_default_str();
    std::string methods_text = "sr";
    power_cmd->add_option("--methods", methods_text, "comma list: sr,sra,approx,pc,hc0,hc1,hc3,f")
        ->capture_default_str();
    int reps = 1000;
    power_cmd->add_option("--reps", reps, "Monte Carlo replications per beta")
        ->capture_default_str();
    double power_alpha = 0.05;
    power_cmd->add_option("--alpha", power_alpha, "nominal level")->capture_default_str();
    int power_n_prime = 499;
    power_cmd->add_option("--permutations", power_n_prime, "random permutations N'")
        ->capture_default_str();
    std::uint64_t power_seed = 1;
    power_cmd->add_option("--seed", power_seed, "RNG seed")->capture_default_str();
    int power_threads = 0;
    power_cmd->add_option("--threads", power_threads, "worker threads (0 = all cores)")
        ->capture_default_str();
    std::string power_out;
    power_cmd->add_option("--out", power_out, "output file (.csv for CSV, otherwise JSON)");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "draw one synthetic dataset to CSV");
    std::string sim_dgp = "dgp1";
    sim_cmd->add_option("--dgp", sim_dgp, "dgp1|dgp2|dgp3|dgp1exp|dgp1p|dgp2p|dgp3p")
        ->capture_default_str();
    int sim_n = 50, sim_p = 2;
    sim_cmd->add_option("--n", sim_n, "sample size")->capture_default_str();
    sim_cmd->add_option("--p", sim_p, "controls including the intercept")->capture_default_str();
    double sim_beta = 0.0;
    sim_cmd->add_option("--beta", sim_beta, "true coefficient on x")->capture_default_str();
    std::uint64_t sim_seed = 1;
    sim_cmd->add_option("--seed", sim_seed, "RNG seed")->capture_default_str();
    std::string sim_out;
    sim_cmd->add_option("--out", sim_out, "CSV destination")->required();

    // diagnose
    auto* diag_cmd = app.add_subcommand("diagnose", "stratification characteristics");
    DataArgs diag_data;
    diag_cmd->add_option("--data", diag_data.path, "CSV file; reports its exact-match strata");
    diag_cmd->add_option("--y", diag_data.y, "outcome column")->capture_default_str();
    diag_cmd->add_option("--x", diag_data.x, "tested regressor columns")->delimiter(',');
    diag_cmd->add_option("--z", diag_data.z, "control columns")->delimiter(',');
    diag_cmd->add_flag("--no-intercept", diag_data.no_intercept,
                       "first --z column is already an intercept");
    std::string diag_dgp;
    diag_cmd->add_option("--dgp", diag_dgp, "report Monte Carlo strata moments of this DGP");
    int diag_n = 50, diag_p = 2, diag_reps = 1000;
    diag_cmd->add_option("--n", diag_n, "sample size for --dgp")->capture_default_str();
    diag_cmd->add_option("--p", diag_p, "controls for --dgp")->capture_default_str();
    diag_cmd->add_option("--reps", diag_reps, "draws for --dgp")->capture_default_str();
    std::uint64_t diag_seed = 1;
    diag_cmd->add_option("--seed", diag_seed, "RNG seed")->capture_default_str();
    int diag_threads = 0;
    diag_cmd->add_option("--threads", diag_threads, "worker threads (0 = all cores)")
        ->capture_default_str();
    std::string diag_out;
    diag_cmd->add_option("--out", diag_out, "write JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        std::vector<std::string> warnings;

        if (test_cmd->parsed()) {
            const sr::Dataset d = load(test_data);
            const Eigen::VectorXd beta0 = parse_beta0(beta0_values);
            sr::SrOptions opt;
            opt.alpha = alpha;
            opt.n_prime = n_prime;
            opt.seed = seed;
            opt.randomization_u = fixed_u;
            opt.conservative = conservative;
            opt.threads = threads;

            nlohmann::json result;
            if (test_method == "sr" || test_method == "sra" || test_method == "approx") {
                sr::TestResult r;
                if (test_method == "sr")
                    r = sr::sr_test(d, beta0, opt);
                else if (test_method == "sra")
                    r = sr::sra_test(d, beta0, alpha);
                else
                    r = sr::approx_sr_test(d, beta0, opt, s_bins);
                collect_test_warnings(r, warnings);
                result = sr::json_of(r, dump_perms);
            } else {
                sr::ComparatorResult r;
                if (test_method == "pc")
                    r = sr::pc_test(d, beta0, alpha, n_prime, seed, threads);
                else if (test_method == "hc0")
                    r = sr::hc_wald_test(d, beta0, sr::HcFlavor::Hc0, alpha);
                else if (test_method == "hc1")
                    r = sr::hc_wald_test(d, beta0, sr::HcFlavor::Hc1, alpha);
                else if (test_method == "hc3")
                    r = sr::hc_wald_test(d, beta0, sr::HcFlavor::Hc3, alpha);
                else
                    r = sr::f_test(d, beta0, alpha);
                if (r.generalized_inverse)
                    warnings.push_back(
                        "covariance matrix was singular; generalized inverse used");
                result = sr::json_of(r);
            }

            nlohmann::json config = data_config(test_data);
            config["method"] = test_method;
            config["alpha"] = alpha;
            config["permutations"] = n_prime;
            config["threads"] = threads;
            config["conservative"] = conservative;
            if (s_bins > 0) config["s_bins"] = s_bins;
            warn_all(warnings);
            emit(sr::envelope("test", seed, config, result, warnings), out_path);
            return 0;
        }

        if (ci_cmd->parsed()) {
            const sr::Dataset d = load(ci_data);
            sr::CiOptions opt;
            if (ci_method == "sr")
                opt.method = sr::CiMethod::Sr;
            else if (ci_method == "approx")
                opt.method = sr::CiMethod::ApproxSr;
            else if (ci_method == "pc")
                opt.method = sr::CiMethod::Pc;
            else if (ci_method == "hc0")
                opt.method = sr::CiMethod::Hc0;
            else if (ci_method == "hc1")
                opt.method = sr::CiMethod::Hc1;
            else if (ci_method == "hc3")
                opt.method = sr::CiMethod::Hc3;
            else
                opt.method = sr::CiMethod::F;
            opt.alpha = ci_alpha;
            opt.n_prime = ci_n_prime;
            opt.seed = ci_seed;
            opt.threads = ci_threads;
            if (ci_s_bins > 0) opt.s_bins = ci_s_bins;

            const std::vector<double> grid = parse_grid(grid_text);
            const sr::ConfidenceInterval ci = sr::invert_test(d, grid, opt);
            if (ci.trivial)
                warnings.push_back(
                    "every stratum is a singleton; the interval is the whole real line");
            if (ci.empty) warnings.push_back("no grid point was accepted; the interval is empty");
            if (ci.convexified)
                warnings.push_back("acceptance region had gaps; reporting its convex hull");
            if (ci.boundary_saturated && !ci.trivial)
                warnings.push_back("acceptance region touches the grid boundary; widen --grid");

            nlohmann::json config = data_config(ci_data);
            config["method"] = ci_method;
            config["alpha"] = ci_alpha;
            config["permutations"] = ci_n_prime;
            config["threads"] = ci_threads;
            config["grid"] = grid_text;
            if (opt.s_bins) config["s_bins"] = *opt.s_bins;
            warn_all(warnings);
            emit(sr::envelope("ci", ci_seed, config, sr::json_of(ci, include_grid), warnings),
                 ci_out);
            return 0;
        }

        if (power_cmd->parsed()) {
            const auto family = sr::parse_dgp(dgp_text);
            if (!family) throw sr::DomainError("unknown dgp '" + dgp_text + "'");
            std::vector<sr::Method> methods;
            {
                std::size_t pos = 0;
                while (pos <= methods_text.size()) {
                    const auto comma = methods_text.find(',', pos);
                    const std::string piece = methods_text.substr(
                        pos, comma == std::string::npos ? std::string::npos : comma - pos);
                    const auto m = sr::parse_method(piece);
                    if (!m) throw sr::DomainError("unknown method '" + piece + "'");
                    methods.push_back(*m);
                    if (comma == std::string::npos) break;
                    pos = comma + 1;
                }
            }
            const std::vector<double> betas = parse_betas(betas_text);

            sr::DgpSpec spec;
            spec.family = *family;
            spec.n = mc_n;
            spec.p = mc_p;
            sr::PowerOptions opt;
            opt.alpha = power_alpha;
            opt.n_prime = power_n_prime;
            opt.reps = reps;
            opt.seed = power_seed;
            opt.threads = power_threads;

            const std::vector<sr::PowerPoint> pts = sr::power_curve(spec, betas, methods, opt);

            nlohmann::json config{{"dgp", dgp_text},         {"n", mc_n},
                                  {"p", mc_p},               {"betas", betas},
                                  {"methods", methods_text}, {"reps", reps},
                                  {"alpha", power_alpha},    {"permutations", power_n_prime},
                                  {"threads", power_threads}};
            const bool csv = power_out.size() > 4 &&
                             power_out.compare(power_out.size() - 4, 4, ".csv") == 0;
            if (csv) {
                std::ofstream f(power_out);
                if (!f) throw sr::FileNotFound("cannot write '" + power_out + "'");
                std::vector<std::string> comments{
                    "command: power",
                    "dgp: " + dgp_text,
                    "n: " + std::to_string(mc_n),
                    "p: " + std::to_string(mc_p),
                    "alpha: " + std::to_string(power_alpha),
                    "permutations: " + std::to_string(power_n_prime),
                    "reps: " + std::to_string(reps),
                    "seed: " + std::to_string(power_seed),
                };
                sr::write_power_csv(f, pts, comments);
                if (!f) throw sr::FileNotFound("write to '" + power_out + "' failed");
            } else {
                emit(sr::envelope("power", power_seed, config, sr::json_of(pts), warnings),
                     power_out);
            }
            return 0;
        }

        if (sim_cmd->parsed()) {
            const auto family = sr::parse_dgp(sim_dgp);
            if (!family) throw sr::DomainError("unknown dgp '" + sim_dgp + "'");
            sr::DgpSpec spec;
            spec.family = *family;
            spec.n = sim_n;
            spec.p = sim_p;
            spec.beta = sim_beta;
            const sr::Dataset d = sr::generate(spec, sim_seed);
            sr::write_csv(d, sim_out);
            nlohmann::json config{{"dgp", sim_dgp}, {"n", sim_n}, {"p", sim_p}, {"beta", sim_beta}};
            nlohmann::json result{{"path", sim_out},
                                  {"rows", sim_n},
                                  {"columns", 1 + 1 + sim_p}};
            emit(sr::envelope("simulate", sim_seed, config, result, warnings), "");
            return 0;
        }

        if (diag_cmd->parsed()) {
            if (!diag_data.path.empty() && !diag_dgp.empty())
                throw sr::DomainError("pass either --data or --dgp, not both");
            nlohmann::json config, result;
            if (!diag_data.path.empty()) {
                const sr::Dataset d = load(diag_data);
                const sr::StrataPartition part = sr::partition_by_z(d.z);
                const sr::StrataDiagnostics diag = sr::diagnose(part);
                if (diag.high_strata_warning)
                    warnings.push_back(
                        "strata use up more than half the sample (S/n > 1/2); power may be low");
                if (part.all_singletons())
                    warnings.push_back(
                        "every stratum is a singleton; the exact test would be trivial");
                config = data_config(diag_data);
                result = sr::json_of(diag);
            } else if (!diag_dgp.empty()) {
                const auto family = sr::parse_dgp(diag_dgp);
                if (!family) throw sr::DomainError("unknown dgp '" + diag_dgp + "'");
                sr::DgpSpec spec;
                spec.family = *family;
                spec.n = diag_n;
                spec.p = diag_p;
                const sr::StrataMoments m =
                    sr::strata_characteristics(spec, diag_reps, diag_seed, diag_threads);
                config = {{"dgp", diag_dgp}, {"n", diag_n}, {"p", diag_p}, {"reps", diag_reps}};
                result = sr::json_of(m);
            } else {
                throw sr::DomainError("diagnose needs --data or --dgp");
            }
            warn_all(warnings);
            emit(sr::envelope("diagnose", diag_seed, config, result, warnings), diag_out);
            return 0;
        }
    } catch (const sr::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
