#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "sr/dataset.hpp"
#include "sr/inversion.hpp"

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::filesystem::path work_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "srtest_cli";
    std::filesystem::create_directories(dir);
    return dir;
}

RunResult run(const std::string& args) {
    static int counter = 0;
    const auto dir = work_dir();
    const auto out = dir / ("out" + std::to_string(counter) + ".txt");
    const auto err = dir / ("err" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = std::string("\"") + SR_CLI_PATH + "\" " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

nlohmann::json parse(const RunResult& r) { return nlohmann::json::parse(r.out); }

// One simulated file shared by the consuming tests.
std::string sim_csv() {
    static std::string path;
    if (path.empty()) {
        const auto p = work_dir() / "sim.csv";
        const auto r =
            run("simulate --dgp dgp1 --n 40 --p 2 --beta 0.5 --seed 3 --out " + p.string());
        REQUIRE(r.code == 0);
        path = p.string();
    }
    return path;
}

}  // namespace

TEST_CASE("--version names the tool") {
    const auto r = run("--version");
    CHECK(r.code == 0);
    CHECK(r.out.find("srtest 0.1.0") != std::string::npos);
}

TEST_CASE("simulate reports what it wrote and the file round-trips") {
    const auto p = work_dir() / "roundtrip.csv";
    const auto r = run("simulate --dgp dgp2 --n 25 --p 3 --beta 0 --seed 5 --out " + p.string());
    REQUIRE(r.code == 0);
    const auto j = parse(r);
    CHECK(j["tool"] == "srtest");
    CHECK(j["command"] == "simulate");
    CHECK(j["seed"] == 5);
    CHECK(j["result"]["rows"] == 25);
    CHECK(j["result"]["columns"] == 5);

    std::ifstream f(p);
    std::string header;
    std::getline(f, header);
    CHECK(header == "y,x1,z1,z2,z3");

    const auto t = run("test --data " + p.string() + " --permutations 49 --seed 2");
    REQUIRE(t.code == 0);
    const auto tj = parse(t);
    CHECK(tj["result"]["strata"]["n"] == 25);
}

TEST_CASE("test emits the envelope and echoes its configuration") {
    const auto r = run("test --data " + sim_csv() + " --method sr --permutations 99 --seed 2");
    REQUIRE(r.code == 0);
    const auto j = parse(r);
    CHECK(j["tool"] == "srtest");
    CHECK(j["version"] == "0.1.0");
    CHECK(j["command"] == "test");
    CHECK(j["seed"] == 2);
    CHECK(j["config"]["method"] == "sr");
    CHECK(j["config"]["permutations"] == 99);
    CHECK(j["config"]["add_intercept"] == true);
    const auto& res = j["result"];
    CHECK(res["method"] == "sr");
    CHECK(res["beta0"] == nlohmann::json::array({0.0}));
    CHECK(res["p_value"].is_number());
    CHECK(res["p_value"].get<double>() > 0.0);
    CHECK(res["p_value"].get<double>() <= 1.0);
    CHECK(res["n_permutations"].get<int>() >= 1);
    CHECK(res["n_permutations"].get<int>() <= 100);
    CHECK(res["strata"]["n"] == 40);
    CHECK_FALSE(res.contains("permuted"));
}

TEST_CASE("every method name on the command line reaches its test") {
    const std::vector<std::pair<std::string, std::string>> methods{
        {"sr", "sr"},   {"sra", "sra"}, {"approx", "approx-sr"}, {"pc", "pc"},
        {"hc0", "hc0"}, {"hc1", "hc1"}, {"hc3", "hc3"},          {"f", "f"}};
    for (const auto& [flag, recorded] : methods) {
        const auto r =
            run("test --data " + sim_csv() + " --method " + flag + " --permutations 49");
        REQUIRE(r.code == 0);
        const auto j = parse(r);
        CHECK(j["result"]["method"] == recorded);
        const double p = j["result"]["p_value"].get<double>();
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("beta0 and the permutation dump flow through") {
    const auto r = run("test --data " + sim_csv() +
                       " --beta0 0.5 --permutations 49 --dump-permutations");
    REQUIRE(r.code == 0);
    const auto j = parse(r);
    CHECK(j["result"]["beta0"] == nlohmann::json::array({0.5}));
    REQUIRE(j["result"].contains("permuted"));
    CHECK(j["result"]["permuted"].size() == j["result"]["n_permutations"].get<std::size_t>());
}

TEST_CASE("the conservative flag never rejects below phi one") {
    const auto r = run("test --data " + sim_csv() + " --permutations 99 --conservative");
    REQUIRE(r.code == 0);
    const auto j = parse(r);
    CHECK(j["result"]["rejected"] == (j["result"]["phi"].get<double>() == 1.0));
}

TEST_CASE("ci matches the library call it wraps") {
    const auto r = run("ci --data " + sim_csv() +
                       " --grid -1:2:0.25 --permutations 99 --seed 4 --include-grid");
    REQUIRE(r.code == 0);
    const auto j = parse(r);
    CHECK(j["command"] == "ci");
    CHECK(j["config"]["grid"] == "-1:2:0.25");
    const auto& res = j["result"];
    CHECK(res["method"] == "sr");
    CHECK(res["grid_points"] == 13);
    CHECK(res["grid"].size() == 13u);
    CHECK(res["accepted"].size() == 13u);
    CHECK(res["trivial"] == false);

    sr::CsvSpec spec;
    spec.y = "y";
    spec.x = {"x1"};
    spec.z = {"z2"};
    const sr::Dataset d = sr::load_csv(sim_csv(), spec);
    sr::CiOptions opt;
    opt.method = sr::CiMethod::Sr;
    opt.n_prime = 99;
    opt.seed = 4;
    const auto ci = sr::invert_test(d, sr::make_grid(-1.0, 2.0, 0.25), opt);
    CHECK(res["lo"].get<double>() == doctest::Approx(ci.lo).epsilon(1e-12));
    CHECK(res["hi"].get<double>() == doctest::Approx(ci.hi).epsilon(1e-12));
    CHECK(res["accepted_points"] == ci.raw_region.size());
}

TEST_CASE("power writes CSV with a commented preamble") {
    const auto p = work_dir() / "power.csv";
    const auto r = run("power --dgp dgp1 --n 20 --reps 5 --methods hc1,f --betas 0:0.5:0.5"
                       " --permutations 29 --seed 6 --out " +
                       p.string());
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const std::string text = slurp(p);
    CHECK(text.rfind("# tool: srtest 0.1.0\n", 0) == 0);
    CHECK(text.find("# dgp: dgp1\n") != std::string::npos);
    CHECK(text.find("method,beta,n,p,rejection_rate,se,reps\n") != std::string::npos);
    CHECK(text.find("HC1,0,20,2,") != std::string::npos);
    CHECK(text.find("N-R,0.5,20,2,") != std::string::npos);
}

TEST_CASE("power emits JSON when the output is not CSV") {
    const auto r = run("power --dgp dgp1 --n 20 --reps 5 --methods hc1,f --betas 0,0.5"
                       " --permutations 29 --seed 6");
    REQUIRE(r.code == 0);
    const auto j = parse(r);
    CHECK(j["command"] == "power");
    REQUIRE(j["result"].size() == 4u);
    CHECK(j["result"][0]["method"] == "HC1");
    CHECK(j["result"][2]["method"] == "N-R");
    for (const auto& pt : j["result"]) {
        CHECK(pt["reps"] == 5);
        CHECK(pt["rejection_rate"].is_number());
    }
}

TEST_CASE("diagnose summarizes a file or a design") {
    const auto a = run("diagnose --data " + sim_csv());
    REQUIRE(a.code == 0);
    const auto aj = parse(a);
    CHECK(aj["result"]["n"] == 40);
    CHECK(aj["result"]["n_strata"].get<int>() >= 1);

    const auto b = run("diagnose --dgp dgp1 --n 30 --reps 50 --seed 2");
    REQUIRE(b.code == 0);
    const auto bj = parse(b);
    CHECK(bj["result"]["reps"] == 50);
    CHECK(bj["result"]["mean_s"].get<double>() > 1.0);

    CHECK(run("diagnose --data " + sim_csv() + " --dgp dgp1").code == 2);
    CHECK(run("diagnose").code == 2);
}

TEST_CASE("failures use distinct exit codes") {
    CHECK(run("").code == 1);
    CHECK(run("test --data x.csv --nope").code == 1);
    CHECK(run("test --data x.csv --method bogus").code == 1);
    CHECK(run("test --data /definitely/not/here.csv").code == 2);
    CHECK(run("power --dgp dgp9 --reps 2").code == 2);
    CHECK(run("ci --data " + sim_csv() + " --grid nonsense").code == 2);
}
