// End-to-end checks of the opd binary: exit codes, artifacts on disk,
// rerun determinism.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = OPD_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string temp_dir(const char* tag) {
    const fs::path p = fs::temp_directory_path() / (std::string("opd_cli_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

// the seconds column is wall time; mask it before comparing reruns
std::string strip_seconds_column(const std::string& csv) {
    std::istringstream is(csv);
    std::string out, line;
    while (std::getline(is, line)) {
        const auto pos = line.rfind(',');
        out += line.substr(0, pos);
        out += "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("definitely-not-a-subcommand") == 2);
    CHECK(run("synth") == 2);                           // missing --out
    CHECK(run("train --data x") == 2);                  // missing --strategy
    const std::string dir = temp_dir("usage");
    // conflicting noise parameters
    CHECK(run("synth --noise gaussian --sigma 25 --lambda 30 --out " + dir + "/d") == 2);
    // eval needs exactly one of --model / --method
    CHECK(run("eval --data " + dir) == 2);
}

TEST_CASE("synth - train - eval - denoise round trip") {
    const std::string dir = temp_dir("e2e");
    const std::string data = dir + "/data";
    CHECK(run("synth --noise gaussian --sigma 25 --frames 4 --count 4 --size 16 --seed 7 --out " +
              data) == 0);
    CHECK(fs::exists(data + "/manifest.json"));
    CHECK(fs::exists(data + "/sample_0003/frame_03.png"));
    CHECK(fs::exists(data + "/sample_0003/clean.png"));
    CHECK(fs::exists(data + "/sample_0003/frames_f32.bin"));

    // deterministic regeneration
    CHECK(run("synth --noise gaussian --sigma 25 --frames 4 --count 4 --size 16 --seed 7 --out " +
              dir + "/data2") == 0);
    CHECK(slurp(data + "/manifest.json") == slurp(dir + "/data2/manifest.json"));
    CHECK(slurp(data + "/sample_0000/frames_f32.bin") ==
          slurp(dir + "/data2/sample_0000/frames_f32.bin"));

    CHECK(run("train --data " + data + " --strategy opd-al --steps 10 --seed 5 --batch 2" +
              " --log-every 5 --val-every 10 --out " + dir + "/m.opd --log " + dir + "/log.csv") ==
          0);
    CHECK(fs::exists(dir + "/m.opd"));
    const std::string log = slurp(dir + "/log.csv");
    CHECK(log.rfind("step,epoch,strategy,train_loss,mse_term,msa_term,val_psnr,val_ssim,"
                    "val_rmse,seconds\n", 0) == 0);

    // rerun with the same seed: identical checkpoint, identical log modulo timing
    CHECK(run("train --data " + data + " --strategy opd-al --steps 10 --seed 5 --batch 2" +
              " --log-every 5 --val-every 10 --out " + dir + "/m2.opd --log " + dir +
              "/log2.csv") == 0);
    CHECK(slurp(dir + "/m.opd") == slurp(dir + "/m2.opd"));
    CHECK(strip_seconds_column(log) == strip_seconds_column(slurp(dir + "/log2.csv")));

    CHECK(run("eval --data " + data + " --method aar --report " + dir + "/aar.json") == 0);
    CHECK(fs::exists(dir + "/aar.json"));
    CHECK(run("eval --data " + data + " --model " + dir + "/m.opd --report " + dir +
              "/model.json") == 0);
    CHECK(slurp(dir + "/model.json").find("\"psnr\"") != std::string::npos);

    CHECK(run("denoise --model " + dir + "/m.opd --input " + data + "/sample_0000 --output " +
              dir + "/den --mode fused") == 0);
    CHECK(fs::exists(dir + "/den/sample_0000/denoised_00.png"));
    CHECK(fs::exists(dir + "/den/sample_0000/denoised_f32.bin"));

    // numerical divergence exits with code 3
    CHECK(run("train --data " + data + " --strategy n2n --steps 80 --lr 1e14 --seed 1 --out " +
              dir + "/div.opd") == 3);

    // zero-step training preserves the fresh initialization for the seed
    CHECK(run("train --data " + data + " --strategy n2n --steps 0 --seed 5 --out " + dir +
              "/fresh.opd") == 0);
    CHECK(run("train --data " + data + " --strategy opd-rc --steps 0 --seed 5 --out " + dir +
              "/fresh2.opd") == 0);
    const std::string a = slurp(dir + "/fresh.opd");
    const std::string b = slurp(dir + "/fresh2.opd");
    // payloads match; headers differ only in the recorded strategy
    CHECK(a.substr(a.size() - 25761 * 4) == b.substr(b.size() - 25761 * 4));
}

TEST_CASE("compare emits a report over strategies and seeds") {
    const std::string dir = temp_dir("cmp");
    const std::string data = dir + "/data";
    REQUIRE(run("synth --noise gaussian --sigma 25 --frames 2 --count 4 --size 16 --seed 3 "
                "--out " + data) == 0);
    CHECK(run("compare --data " + data + " --strategies n2n opd-al --seeds 2 --steps 6" +
              " --batch 2 --out " + dir + "/report.json --curves-dir " + dir) == 0);
    const std::string rep = slurp(dir + "/report.json");
    CHECK(rep.find("\"kind\": \"compare\"") != std::string::npos);
    CHECK(rep.find("\"n2n\"") != std::string::npos);
    CHECK(rep.find("\"opd-al\"") != std::string::npos);
    CHECK(rep.find("\"input_psnr\"") != std::string::npos);
    CHECK(fs::exists(dir + "/cell_n2n_1.csv"));
    CHECK(fs::exists(dir + "/cell_opd-al_2.csv"));

    // single strategy, single seed matches a standalone train with the same seed
    CHECK(run("compare --data " + data + " --strategies n2n --seeds 1 --steps 6 --batch 2" +
              " --seed 9 --out " + dir + "/single.json") == 0);
    CHECK(run("train --data " + data + " --strategy n2n --steps 6 --batch 2 --seed 9 --out " +
              dir + "/single.opd --log " + dir + "/single.csv") == 0);
    const std::string single = slurp(dir + "/single.json");
    const std::string log = slurp(dir + "/single.csv");
    // the report's cell psnr equals the final validation row of the log
    const auto pos = single.find("\"psnr\": ");
    REQUIRE(pos != std::string::npos);
    const double cell_psnr = std::stod(single.substr(pos + 8));
    const auto lastline = log.rfind("\n", log.size() - 2);
    std::istringstream row(log.substr(lastline + 1));
    std::string field;
    for (int i = 0; i < 7; ++i) std::getline(row, field, ',');
    // the CSV keeps 9 significant digits
    CHECK(cell_psnr == doctest::Approx(std::stod(field)).epsilon(1e-7));
}
