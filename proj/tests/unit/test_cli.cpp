#include "report.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run qsdkit(const std::string& args) {
    const std::string cmd = std::string(QSDKIT_EXE) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string data(const char* name) { return std::string(QSDKIT_TEST_DATA) + "/" + name; }

} // namespace

TEST_CASE("exit codes") {
    CHECK(qsdkit("check sis1d --R0 2").code == 0);
    CHECK(qsdkit("check nonrev2d").code == 2);
    CHECK(qsdkit("tau nonrev2d --N 50").code == 2);
    CHECK(qsdkit("check sis1d --R0 0.5").code == 1);
    CHECK(qsdkit("check sis1d --bogus 1").code == 1);
    CHECK(qsdkit("check no_such_model").code == 1);
    CHECK(qsdkit("tau sis1d").code == 1);                  // --N missing
    CHECK(qsdkit("simulate sis1d --N 10 --reps 5").code == 1); // --seed missing
    CHECK(qsdkit("frobnicate sis1d").code == 1);
    CHECK(qsdkit("check " + data("broken.json")).code == 1);
    CHECK(qsdkit("oracle linear_birth_quadratic_death --N 2000").code == 3); // state space too large
}

TEST_CASE("tau output") {
    auto r = qsdkit("tau sis1d --R0 2 --N 50");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["A"].get<double>() == doctest::Approx(0.1931471806).epsilon(1e-9));
    CHECK(j["log_tau"].get<double>() == doctest::Approx(9.313433239).epsilon(1e-9));

    auto c = qsdkit("tau competition --N 50");
    REQUIRE(c.code == 0);
    auto jc = nlohmann::json::parse(c.out);
    CHECK(jc["A"].get<double>() == doctest::Approx(0.41222).epsilon(1e-5));
    CHECK(jc["tau"].is_null());
    CHECK(jc.dump().find("prefactor unavailable") != std::string::npos);
}

TEST_CASE("model files are accepted in place of catalog names") {
    auto a = qsdkit("tau " + data("sis_file.json") + " --N 50");
    auto b = qsdkit("tau sis1d --N 50");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(nlohmann::json::parse(a.out)["log_tau"] == nlohmann::json::parse(b.out)["log_tau"]);
}

TEST_CASE("potential CSV and qsd-approx") {
    auto r = qsdkit("potential sis1d --N 100 --grid 0.1:0.9:5");
    REQUIRE(r.code == 0);
    std::istringstream is(r.out);
    std::string line;
    int lines = 0;
    while (std::getline(is, line)) ++lines;
    CHECK(lines == 6);
    auto q = qsdkit("qsd-approx sis1d --N 100 --x 25");
    REQUIRE(q.code == 0);
    CHECK(nlohmann::json::parse(q.out)["u"].get<double>() == doctest::Approx(4.1203e-4).epsilon(1e-4));
}

TEST_CASE("seeded runs are byte-identical") {
    const std::string args = "simulate sis1d --N 15 --reps 300 --seed 42 --threads 3";
    auto a = qsdkit(args);
    auto b = qsdkit(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    auto c = qsdkit("simulate sis1d --N 15 --reps 300 --seed 42 --threads 1");
    CHECK(a.out == c.out);
    auto d = qsdkit("simulate sis1d --N 15 --reps 300 --seed 43");
    CHECK(a.out != d.out);
}

TEST_CASE("--out writes files") {
    const auto dir = std::filesystem::temp_directory_path() / "qsdkit_cli_test";
    std::filesystem::remove_all(dir);
    auto r = qsdkit("oracle sis1d --N 20 --out " + dir.string());
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(dir / "oracle.json"));
    CHECK(std::filesystem::exists(dir / "oracle_u.csv"));
    std::ifstream f(dir / "oracle.json");
    auto j = nlohmann::json::parse(f);
    CHECK(j["tau"].get<double>() > 0.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("compare in-process") {
    qsd::cli::RunConfig c;
    c.command = "compare";
    c.model = "sis1d";
    c.N = {40, 25};
    c.reps = 400;
    c.seed = 5;
    c.threads = 2;
    auto m = qsd::cli::load_model(c);
    auto rep = qsd::cli::compare(m, c);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].N == 25);
    REQUIRE(rep.rows[0].log_tau_exact);
    CHECK(*rep.rows[0].log_tau_exact == doctest::Approx(5.0242642283).epsilon(1e-9));
    REQUIRE(rep.rows[1].log_tau_asymptotic);
    REQUIRE(rep.rows[1].ratio);
    CHECK(*rep.rows[1].ratio ==
          doctest::Approx(std::exp(*rep.rows[1].log_tau_asymptotic - *rep.rows[1].log_tau_exact)).epsilon(1e-12));
    CHECK(*rep.rows[1].log_tau_exact == doctest::Approx(7.6198320950).epsilon(1e-9));
    REQUIRE(rep.rows[0].sim_mean);
    CHECK(std::abs(*rep.rows[0].sim_mean - std::exp(5.0242642283)) < 4.0 * *rep.rows[0].sim_std_error);

    std::ostringstream out, err;
    CHECK(qsd::cli::run(c, out, err) == 0);
    auto j = nlohmann::json::parse(out.str());
    CHECK(j["rows"].size() == 2);
}

TEST_CASE("config validation") {
    qsd::cli::RunConfig c;
    c.command = "simulate";
    c.model = "sis1d";
    c.N = {10};
    c.reps = 10;
    CHECK_THROWS_AS(qsd::cli::validate_config(c), qsd::Error);
    c.seed = 1;
    CHECK_NOTHROW(qsd::cli::validate_config(c));
    CHECK(qsd::cli::exit_code(qsd::ErrorCategory::Condition) == 2);
    CHECK(qsd::cli::exit_code(qsd::ErrorCategory::Numerical) == 3);
    CHECK(qsd::cli::exit_code(qsd::ErrorCategory::Config) == 1);
}

TEST_CASE("table format") {
    auto t = qsdkit("tau sis1d --N 50,100 --format table");
    REQUIRE(t.code == 0);
    CHECK(t.out.rfind("N ", 0) == 0);
    CHECK(t.out.find("9.313433") != std::string::npos);
    CHECK(qsdkit("check sis1d --format table").code == 0);
    CHECK(qsdkit("oracle sis1d --N 20 --format table").code == 1);
    CHECK(qsdkit("equilibria sis1d --format csv").code == 1);
}
