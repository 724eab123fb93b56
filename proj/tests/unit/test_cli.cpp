#include "fraccap/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fraccap;

namespace {

std::string scratch()
{
    const auto dir = std::filesystem::temp_directory_path() / "fraccap_cli_test";
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string write(const std::string& name, const std::string& text)
{
    const std::string path = scratch() + "/" + name;
    std::ofstream(path) << text;
    return path;
}

RunConfig parse(std::vector<std::string> args)
{
    std::vector<const char*> argv = {"fraccap"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return parse_config(static_cast<int>(argv.size()), argv.data());
}

std::string error_of(std::vector<std::string> args)
{
    try {
        parse(std::move(args));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("parse_config examples")
{
    const std::string disk = write("disk.body", "type = ball\ncenter = 0, 0\nradius = 1\n");
    const RunConfig c = parse({"capacity", "--body", disk, "--cell-size", "0.04"});
    CHECK(c.command == "capacity");
    CHECK(c.body == disk);
    CHECK(c.cell_size == 0.04);
    CHECK(c.seed == 0);

    CHECK(error_of({"capacity", "--body", disk, "--foo", "1"}).find("--foo") != std::string::npos);

    const std::string cfg = write("run.cfg", "cell_size = 0.05\nseed = 3\nlambdas = 0.1:0.9:0.1\n");
    const RunConfig o = parse({"bm", "--config", cfg, "--body1", disk, "--body2", disk, "--cell-size", "0.06"});
    CHECK(o.cell_size == 0.06);
    CHECK(o.seed == 3);
    REQUIRE(o.lambdas.size() == 9);
    CHECK(o.lambdas[2] == 0.3);
    CHECK(o.to_text().find("cell-size = 0.06\n") != std::string::npos);
}

TEST_CASE("config errors name the key and range")
{
    const std::string disk = write("disk.body", "type = ball\ncenter = 0, 0\nradius = 1\n");
    CHECK(error_of({"capacity", "--body", "/nonexistent.body"}).find("'body'") != std::string::npos);
    CHECK(error_of({"capacity", "--body", disk, "--cell-size", "2"}).find("(0, 1]") != std::string::npos);
    CHECK(error_of({"bm", "--body1", disk, "--body2", disk, "--lambdas", "0,0.5"}).find("'lambdas'") != std::string::npos);
    CHECK(error_of({"capacity"}).find("'body'") != std::string::npos);
    CHECK(error_of({"capacity", "--body", disk, "--seed", "-1"}).find("'seed'") != std::string::npos);
    CHECK(error_of({"capacity", "--body", disk, "--ladder", "0.04,0.08,0.02"}).find("decrease") != std::string::npos);
    CHECK(error_of({"nonsense"}).size() > 0);
    const std::string bad = write("bad.cfg", "colour = red\n");
    CHECK(error_of({"capacity", "--body", disk, "--config", bad}).find("'colour'") != std::string::npos);
}

TEST_CASE("list and range syntax")
{
    CHECK(parse_list("x", "1,2,3") == std::vector<double>{1, 2, 3});
    CHECK(parse_list("x", "0.2:0.6:0.2") == std::vector<double>{0.2, 0.4, 0.6});
    CHECK_THROWS_AS(parse_list("x", "1:2"), ConfigError);
    CHECK_THROWS_AS(parse_list("x", "1,,2"), ConfigError);
    CHECK_THROWS_AS(parse_list("x", "1:0:0.1"), ConfigError);
}

TEST_CASE("run writes reports and exit codes")
{
    const std::string disk = write("disk.body", "type = ball\ncenter = 0, 0\nradius = 1\n");
    const std::string out = scratch() + "/out";
    std::ostringstream log, err;
    const std::vector<std::string> args = {"capacity", "--body", disk, "--cell-size", "0.1", "--output", out, "--no-timestamp"};
    std::vector<const char*> argv = {"fraccap"};
    for (const auto& a : args) argv.push_back(a.c_str());
    CHECK(cli_main(static_cast<int>(argv.size()), argv.data(), log, err) == 0);
    std::ifstream csv(out + "/convergence.csv");
    std::string head;
    std::getline(csv, head);
    CHECK(head == "# schema: fraccap.capacity.v1");
    CHECK(std::filesystem::exists(out + "/report.json"));
    CHECK(std::filesystem::exists(out + "/profile.dat"));

    const std::vector<std::string> bad = {"capacity", "--body", disk, "--cell-size", "0.9", "--output", out};
    std::vector<const char*> argv2 = {"fraccap"};
    for (const auto& a : bad) argv2.push_back(a.c_str());
    CHECK(cli_main(static_cast<int>(argv2.size()), argv2.data(), log, err) == 1);
    CHECK(err.str().find("too coarse") != std::string::npos);
}
