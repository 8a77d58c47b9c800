#include <doctest.h>

#include "instances.hpp"

#include <mrgl/theory.hpp>
#include <mrgl_app/io.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace mrgl;
using namespace mrgl::app;
namespace fs = std::filesystem;

namespace {

fs::path workdir(const std::string& name)
{
    const fs::path dir = fs::path(MRGL_TEST_TMP) / "cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args)
{
    const std::string cmd = std::string(MRGL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_scenario(const fs::path& dir, const std::string& body)
{
    const fs::path p = dir / "scenario.json";
    std::ofstream(p) << body;
    return p;
}

std::string q(const fs::path& p)
{
    return "\"" + p.string() + "\"";
}

const char* small_scenario =
    R"({"n": 150, "p": 4, "s0": 2, "alpha": 1.5, "sigma": 0.5, "design": "iid_uniform", "seed": 3, "amplitude": 2})";

} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("simulate is deterministic and honours sigma and s0")
    {
        const auto a = workdir("sim_a"), b = workdir("sim_b");
        const auto sc = write_scenario(a, small_scenario);
        REQUIRE(run("simulate --scenario " + q(sc) + " --out " + q(a)) == 0);
        REQUIRE(run("simulate --scenario " + q(sc) + " --out " + q(b)) == 0);
        CHECK(slurp(a / "data.csv") == slurp(b / "data.csv"));
        CHECK(slurp(a / "truth.json") == slurp(b / "truth.json"));
        REQUIRE(run("simulate --scenario " + q(sc) + " --seed 4 --out " + q(b)) == 0);
        CHECK(slurp(a / "data.csv") != slurp(b / "data.csv"));

        const auto c = workdir("sim_quiet");
        REQUIRE(run("simulate --scenario " + q(sc) + " --sigma 0 --out " + q(c)) == 0);
        const auto d = read_dataset(c / "data.csv");
        CHECK(d.y == d.f_star);

        const auto e = workdir("sim_null");
        const auto sc0 = write_scenario(e, R"({"n": 50, "p": 3, "s0": 0, "alpha": 2, "sigma": 1, "design": "uniform", "seed": 1})");
        REQUIRE(run("simulate --scenario " + q(sc0) + " --out " + q(e)) == 0);
        CHECK(read_dataset(e / "data.csv").f_star.isZero());
    }

    TEST_CASE("fit, refit, predict and diagnose")
    {
        const auto dir = workdir("pipeline");
        const auto sc = write_scenario(dir, small_scenario);
        REQUIRE(run("simulate --scenario " + q(sc) + " --out " + q(dir)) == 0);
        const auto a = dir / "a", b = dir / "b";
        REQUIRE(run("fit --scenario " + q(sc) + " --data " + q(dir / "data.csv") + " --out " + q(a)) == 0);
        REQUIRE(run("fit --scenario " + q(sc) + " --data " + q(dir / "data.csv") + " --threads 2 --out " + q(b)) == 0);
        CHECK(slurp(a / "fit.json") == slurp(b / "fit.json"));
        CHECK(slurp(a / "fitted.csv") == slurp(b / "fitted.csv"));

        const auto stored = fit_from_json(read_json(a / "fit.json"));
        CHECK(stored.fit.scheme.p() == 4);

        REQUIRE(run("predict --fit " + q(a / "fit.json") + " --data " + q(dir / "data.csv") + " --out " + q(a)) == 0);
        std::ifstream pred(a / "predictions.csv"), fitted(a / "fitted.csv");
        std::string lp, lf;
        std::getline(pred, lp);
        std::getline(fitted, lf);
        CHECK(lp.rfind("f_hat,f_1", 0) == 0);
        for (int i = 0; i < 5; ++i) {
            std::getline(pred, lp);
            std::getline(fitted, lf);
            CHECK(std::stod(lp.substr(0, lp.find(','))) == doctest::Approx(std::stod(lf)).epsilon(1e-10));
        }

        REQUIRE(run("diagnose --fit " + q(a / "fit.json") + " --data " + q(dir / "data.csv") + " --truth " +
                    q(dir / "truth.json") + " --out " + q(a)) == 0);
        const auto diag = read_json(a / "diagnostics.json");
        CHECK(diag.contains("kkt"));
        CHECK(diag.contains("gram"));
        CHECK(diag.contains("omega0"));
    }

    TEST_CASE("zero response gives an empty active set")
    {
        const auto dir = workdir("zero");
        std::ofstream os(dir / "data.csv");
        os << "x_1,x_2,y\n";
        for (int i = 0; i < 40; ++i) os << (i + 0.5) / 40 << ',' << ((i * 7) % 40 + 0.5) / 40 << ",0\n";
        os.close();
        REQUIRE(run("fit --data " + q(dir / "data.csv") + " --sigma 1 --out " + q(dir)) == 0);
        CHECK(read_json(dir / "fit.json")["active_set"].empty());
    }

    TEST_CASE("zero penalty on one group is the least-squares projection")
    {
        const auto dir = workdir("project");
        const auto inst = [] {
            testing::InstanceSpec spec;
            spec.n = 60;
            spec.p = 1;
            spec.eps = 0.5;
            return testing::make_instance(spec);
        }();
        write_dataset(dir / "data.csv", inst.data);
        REQUIRE(run("fit --data " + q(dir / "data.csv") + " --sigma 1 --eps 0.5 --k-star 2 --k-max 2 --lambda 0 --out " +
                    q(dir)) == 0);
        const auto s = make_scheme_levels({ComponentKind::nonparametric()}, 2, 2);
        const auto d = assemble_design(inst.data.X, BasisFamily::Fourier, s);
        const Eigen::VectorXd proj = d.project(0, inst.data.y);
        std::ifstream in(dir / "fitted.csv");
        std::string line;
        std::getline(in, line);
        double worst = 0.0;
        for (int i = 0; i < 60; ++i) {
            std::getline(in, line);
            worst = std::max(worst, std::abs(std::stod(line) - proj(i)));
        }
        CHECK(worst < 1e-10);
    }

    TEST_CASE("exit codes")
    {
        const auto dir = workdir("exits");
        const auto bad = write_scenario(dir, "{\n  \"n\": 50,\n  \"p\": 2,\n  \"s0\": 5\n}");
        CHECK(run("simulate --scenario " + q(bad) + " --out " + q(dir)) == 2);
        CHECK(run("simulate --out " + q(dir)) == 2);
        CHECK(run("fit --sigma 1") == 2);
        CHECK(run("frobnicate") == 2);
        CHECK(run("fit --data " + q(dir / "missing.csv")) == 2);

        const auto sc = write_scenario(dir, R"({"n": 200, "p": 20, "s0": 5, "alpha": 1, "sigma": 1,
            "design": "correlated_uniform", "correlation": 0.9, "seed": 1, "amplitude": 5})");
        REQUIRE(run("simulate --scenario " + q(sc) + " --out " + q(dir)) == 0);
        CHECK(run("fit --scenario " + q(sc) + " --data " + q(dir / "data.csv") + " --max-sweeps 1 --out " + q(dir)) == 3);
        REQUIRE(run("fit --scenario " + q(sc) + " --data " + q(dir / "data.csv") + " --out " + q(dir)) == 0);
        CHECK(run("diagnose --certify --fit " + q(dir / "fit.json") + " --data " + q(dir / "data.csv") + " --out " +
                  q(dir)) == 4);

        const auto few = write_scenario(dir, R"({"p": 2, "s0": 1, "alpha": 2, "sigma": 1, "design": "uniform",
            "seed": 1, "n_grid": [64, 128]})");
        CHECK(run("rates --scenario " + q(few) + " --out " + q(dir)) == 2);
    }

    TEST_CASE("rates writes points and a degenerate summary for a zero truth")
    {
        const auto dir = workdir("rates");
        const auto sc = write_scenario(dir, R"({"p": 3, "s0": 0, "alpha": 2, "sigma": 1, "design": "uniform",
            "seed": 2, "n_grid": [64, 128, 256], "replicates": 2, "oos_samples": 100})");
        REQUIRE(run("rates --scenario " + q(sc) + " --out " + q(dir)) == 0);
        const auto s = read_json(dir / "rates_summary.json");
        CHECK(s["degenerate"].get<bool>());
        CHECK(s["slope"].is_null());
        std::ifstream in(dir / "rates_points.csv");
        std::string line;
        int rows = -1;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 6);
    }
}
