// Exercises the installed command-line surface by spawning the real binary
// (path in the HEMACV_CLI environment variable, set by CTest).
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include "test_helpers.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("HEMACV_CLI");
    REQUIRE_MESSAGE(p != nullptr, "HEMACV_CLI must point at the hemacv binary");
    return p;
}

struct RunResult {
    int exit_code = -1;
    std::string stdout_text;
};

RunResult run(const std::string& args, const fs::path& capture_dir) {
    static int counter = 0;
    const fs::path out_file = capture_dir / ("stdout_" + std::to_string(counter++) + ".txt");
    const std::string cmd =
        cli_path() + " " + args + " > " + out_file.string() + " 2> /dev/null";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.stdout_text = helpers::read_file(out_file);
    return res;
}

} // namespace

TEST_CASE("cli requires a subcommand and rejects unknown flags") {
    helpers::TempDir tmp("cli_usage");
    CHECK(run("", tmp.path()).exit_code == 2);
    CHECK(run("frobnicate", tmp.path()).exit_code == 2);
    CHECK(run("fixture --no-such-flag", tmp.path()).exit_code == 2);
    CHECK(run("--help", tmp.path()).exit_code == 0);
}

TEST_CASE("cli fixture writes the tree and reports via --json") {
    helpers::TempDir tmp("cli_fixture");
    const fs::path out = tmp.path() / "fx";
    const RunResult res =
        run("--json fixture --out " + out.string() + " --per-class 3 --seed 5 --size 64",
            tmp.path());
    CHECK(res.exit_code == 0);
    CHECK(res.stdout_text.find("\"command\":\"fixture\"") != std::string::npos);
    CHECK(res.stdout_text.find("\"images\":15") != std::string::npos);
    CHECK(fs::is_regular_file(out / "basophil" / "basophil_0000.png"));
    CHECK(fs::is_regular_file(out / "masks" / "basophil" / "basophil_0000.png"));

    // unwritable output: the path runs through an existing regular file
    const fs::path blocker = tmp.path() / "blocker";
    std::ofstream(blocker) << "x";
    const RunResult bad =
        run("fixture --out " + (blocker / "sub").string() + " --per-class 3", tmp.path());
    CHECK(bad.exit_code == 1);

    CHECK(run("fixture --out " + out.string() + " --per-class 2", tmp.path()).exit_code == 2);
}

TEST_CASE("cli segment validates flags and mirrors the tree") {
    helpers::TempDir tmp("cli_segment");
    const fs::path fx = tmp.path() / "fx";
    REQUIRE(run("fixture --out " + fx.string() + " --per-class 3 --seed 5 --size 64",
                tmp.path()).exit_code == 0);

    CHECK(run("segment --root " + fx.string() + " --out " + (tmp.path() / "o").string() +
              " --method watershed --target cell",
              tmp.path()).exit_code == 2);
    CHECK(run("segment --root /nonexistent --out " + (tmp.path() / "o").string() +
              " --method otsu --target cell",
              tmp.path()).exit_code == 2);

    const RunResult ok = run("--json segment --root " + fx.string() + " --out " +
                             (tmp.path() / "seg").string() + " --method hue --target nucleus",
                             tmp.path());
    CHECK(ok.exit_code == 0);
    CHECK(ok.stdout_text.find("\"subset_ok\":3") != std::string::npos);
    CHECK(fs::is_regular_file(tmp.path() / "seg" / "monocyte" / "monocyte_0002.png"));
}

TEST_CASE("cli split is deterministic and validates fractions") {
    helpers::TempDir tmp("cli_split");
    const fs::path fx = tmp.path() / "fx";
    REQUIRE(run("fixture --out " + fx.string() + " --per-class 4 --seed 6 --size 64",
                tmp.path()).exit_code == 0);

    const fs::path m1 = tmp.path() / "m1.csv";
    const fs::path m2 = tmp.path() / "m2.csv";
    CHECK(run("split --root " + fx.string() + " --out " + m1.string() + " --seed 3",
              tmp.path()).exit_code == 0);
    CHECK(run("split --root " + fx.string() + " --out " + m2.string() + " --seed 3",
              tmp.path()).exit_code == 0);
    CHECK(helpers::read_file(m1) == helpers::read_file(m2));
    CHECK(!helpers::read_file(m1).empty());

    CHECK(run("split --root " + fx.string() + " --out " + m1.string() +
              " --fractions 0.5,0.2,0.2",
              tmp.path()).exit_code == 2);
}

TEST_CASE("cli train-eval runs a small pipeline and rejects missing trees") {
    helpers::TempDir tmp("cli_te");
    const fs::path fx = tmp.path() / "fx";
    REQUIRE(run("fixture --out " + fx.string() + " --per-class 5 --seed 6 --size 64",
                tmp.path()).exit_code == 0);
    REQUIRE(run("segment --root " + fx.string() + " --out " + (tmp.path() / "seg").string() +
                " --method otsu --target cell",
                tmp.path()).exit_code == 0);
    const fs::path manifest = tmp.path() / "m.csv";
    REQUIRE(run("split --root " + fx.string() + " --out " + manifest.string(), tmp.path())
                .exit_code == 0);

    const RunResult ok = run("--json train-eval --manifest " + manifest.string() +
                             " --out " + (tmp.path() / "rep").string() + " --variant cell-otsu=" +
                             (tmp.path() / "seg").string() + " --epochs 3 --lr 0.1",
                             tmp.path());
    CHECK(ok.exit_code == 0);
    CHECK(fs::is_regular_file(tmp.path() / "rep" / "summary.csv"));
    CHECK(ok.stdout_text.find("cell-otsu") != std::string::npos);

    CHECK(run("train-eval --manifest " + manifest.string() + " --out " +
              (tmp.path() / "rep2").string() + " --variant x=" + (tmp.path() / "missing").string(),
              tmp.path()).exit_code == 2);
    CHECK(run("train-eval --manifest " + manifest.string() + " --out " +
              (tmp.path() / "rep3").string(),
              tmp.path()).exit_code == 2); // no variants at all
}

TEST_CASE("cli attn-bench emits exact MAC columns and skips bad rows") {
    helpers::TempDir tmp("cli_bench");
    const RunResult res =
        run("attn-bench --n 8 --heads 2 --dim 4 --l 1 2 3", tmp.path());
    CHECK(res.exit_code == 0);
    CHECK(res.stdout_text.rfind("n,h,d,l,axis,", 0) == 0);
    CHECK(res.stdout_text.find("8,2,4,1,token,1024,1024,") != std::string::npos);
    CHECK(res.stdout_text.find("8,2,4,2,token,1024,512,") != std::string::npos);
    CHECK(res.stdout_text.find(",3,token,") == std::string::npos); // skipped
}

TEST_CASE("cli report converts a confusion CSV into metrics JSON") {
    helpers::TempDir tmp("cli_report");
    const fs::path cm = tmp.path() / "cm.csv";
    std::ofstream(cm) << "actual\\predicted,a,b\na,40,10\nb,5,95\n";
    const RunResult res = run("report --cm " + cm.string(), tmp.path());
    CHECK(res.exit_code == 0);
    CHECK(res.stdout_text.find("\"overall_accuracy\": 0.9") != std::string::npos);
    CHECK(res.stdout_text.find("\"sensitivity\": 0.8") != std::string::npos);

    CHECK(run("report --cm " + (tmp.path() / "nope.csv").string(), tmp.path()).exit_code == 2);
}

TEST_CASE("cli config file supplies defaults that flags override") {
    helpers::TempDir tmp("cli_config");
    const fs::path cfg = tmp.path() / "cfg.json";
    std::ofstream(cfg) << R"({"fixture": {"per-class": 4, "size": 64, "seed": 9}})";

    const fs::path out1 = tmp.path() / "a";
    CHECK(run("--config " + cfg.string() + " fixture --out " + out1.string(), tmp.path())
              .exit_code == 0);
    int count = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(out1 / "monocyte"))
        ++count;
    CHECK(count == 4);

    const fs::path out2 = tmp.path() / "b";
    CHECK(run("--config " + cfg.string() + " fixture --out " + out2.string() + " --per-class 6",
              tmp.path()).exit_code == 0);
    count = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(out2 / "monocyte"))
        ++count;
    CHECK(count == 6);

    std::ofstream(cfg) << "not json";
    CHECK(run("--config " + cfg.string() + " fixture --out " + (tmp.path() / "c").string(),
              tmp.path()).exit_code == 2);
}
