#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct ScratchDir {
    fs::path path = fs::temp_directory_path() / ("dmsf_cli_test_" + std::to_string(::getpid()));
    ScratchDir() { fs::create_directories(path); }
    ~ScratchDir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

const fs::path& scratch()
{
    static const ScratchDir dir;
    return dir.path;
}

int run(const std::string& args)
{
    const std::string cmd = std::string(DMSF_CLI) + " " + args + " 2>" + (scratch() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

TEST_CASE("gen is deterministic per seed")
{
    const auto a = scratch() / "a.txt", b = scratch() / "b.txt", c = scratch() / "c.txt";
    REQUIRE(run("gen --n 12 --ops 300 --seed 7 --out " + a.string()) == 0);
    REQUIRE(run("gen --n 12 --ops 300 --seed 7 --out " + b.string()) == 0);
    REQUIRE(run("gen --n 12 --ops 300 --seed 8 --out " + c.string()) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
    CHECK(slurp(a).rfind("N 12\n", 0) == 0);
}

TEST_CASE("run on the triangle workload reports the replacement")
{
    const auto w = scratch() / "tri.txt", csv = scratch() / "tri.csv";
    write(w, "N 3\nI 0 1 1\nI 1 2 2\nI 0 2 3\nD 0 1\n");
    REQUIRE(run("run --workload " + w.string() + " --mode both --csv " + csv.string()) == 0);
    std::stringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    CHECK(line == "index,op,became_tree,became_nontree,msf_weight,promotions,down_visits,up_visits,queue_ops,hops,credits_spent");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) rows.push_back(split(line));
    REQUIRE(rows.size() == 4);
    // edge ids follow insertion order: (0,2) is edge 2
    CHECK(rows[3][0] == "3");
    CHECK(rows[3][1] == "D");
    CHECK(rows[3][2] == "2");
    CHECK(rows[3][3] == "");
    CHECK(rows[3][4] == "5");
    CHECK(rows[2][2] == "");
    CHECK(rows[2][4] == "3");
}

TEST_CASE("run output is byte-identical across runs")
{
    const auto w = scratch() / "g.txt", c1 = scratch() / "g1.csv", c2 = scratch() / "g2.csv";
    REQUIRE(run("gen --n 20 --ops 400 --seed 3 --out " + w.string()) == 0);
    REQUIRE(run("run --workload " + w.string() + " --csv " + c1.string()) == 0);
    REQUIRE(run("run --workload " + w.string() + " --csv " + c2.string()) == 0);
    CHECK(slurp(c1) == slurp(c2));
}

TEST_CASE("parse and precondition errors exit with status 2")
{
    const auto bad = scratch() / "bad.txt";
    write(bad, "N 3\nI 0 1 1\nI 1 x 2\n");
    CHECK(run("run --workload " + bad.string()) == 2);
    CHECK(slurp(scratch() / "stderr.txt").find("line 3") != std::string::npos);
    write(bad, "N 3\nI 0 1 1\nD 1 2\n");
    CHECK(run("run --workload " + bad.string()) == 2);
    CHECK(slurp(scratch() / "stderr.txt").find("op 1") != std::string::npos);
    CHECK(run("run") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("run --workload " + (scratch() / "missing.txt").string()) == 2);
}

TEST_CASE("decremental run")
{
    const auto w = scratch() / "dec.txt";
    write(w, "N 4\nI 0 1 4\nI 1 2 1\nI 2 3 3\nI 3 0 0\nI 0 2 2\nD 1 2\nD 3 0\nQ\n");
    CHECK(run("run --decremental --mode both --audit --workload " + w.string() + " --csv " + (scratch() / "dec.csv").string()) == 0);
}

TEST_CASE("fuzz 200 trials up to n = 32")
{
    CHECK(run("fuzz --trials 200 --max-n 32 --seed 5") == 0);
}

TEST_CASE("scale emits one row per size and mode")
{
    const auto csv = scratch() / "scale.csv";
    REQUIRE(run("scale --n 16,32 --ops 100 --seed 2 --csv " + csv.string()) == 0);
    std::stringstream in(slurp(csv));
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
}
