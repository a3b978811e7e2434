#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = AGEUS_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  int n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

fs::path scratch(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("ageus_cli_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Shared tiny corpus + one trained model, built once for the suite.
struct Fixture {
  fs::path dir = scratch("fixture");
  fs::path data = dir / "data";
  fs::path seg_ckpt = dir / "seg.ckpt";
  fs::path log = dir / "seg.log.jsonl";

  Fixture() {
    REQUIRE(run("synth --out " + data.string() + " --n 6 --seed 11 --image-size 64") == 0);
    REQUIRE(run("train --mode pretrain --data " + data.string() + " --out " +
                seg_ckpt.string() + " --log " + log.string() +
                " --epochs 4 --image-size 32 --base-width 8 --batch-size 4 --seed 2") == 0);
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_CASE("synth is deterministic and validates its arguments") {
  const auto dir = scratch("synth");
  REQUIRE(run("synth --out " + (dir / "a").string() + " --n 2 --seed 7 --image-size 64") == 0);
  REQUIRE(run("synth --out " + (dir / "b").string() + " --n 2 --seed 7 --image-size 64") == 0);
  CHECK(slurp(dir / "a" / "synth_0000" / "head.png") ==
        slurp(dir / "b" / "synth_0000" / "head.png"));
  CHECK(slurp(dir / "a" / "truth.csv") == slurp(dir / "b" / "truth.csv"));

  CHECK(run("synth --out " + (dir / "c").string() + " --n 0") != 0);
  CHECK(run("synth --n 2") != 0);  // --out is required
  fs::remove_all(dir);
}

TEST_CASE("train writes a loadable checkpoint and a structured log") {
  const auto& f = fixture();
  CHECK(fs::exists(f.seg_ckpt));

  // Binary header carries the format magic.
  const auto bytes = slurp(f.seg_ckpt);
  CHECK(bytes.find("AGEUS-CKPT-1") == 0);

  // 4 train lines + 2 val lines (validation every other epoch).
  CHECK(count_lines(f.log) == 6);
  std::ifstream in(f.log);
  std::string line;
  std::getline(in, line);
  CHECK(line.find("\"epoch\":1") != std::string::npos);
  CHECK(line.find("\"split\":\"train\"") != std::string::npos);
}

TEST_CASE("finetune requires a starting checkpoint") {
  const auto& f = fixture();
  const auto dir = scratch("finetune");
  CHECK(run("train --mode finetune --data " + f.data.string() + " --out " +
            (dir / "ft.ckpt").string() + " --epochs 2 --image-size 32 --base-width 8") != 0);
  CHECK(run("train --mode finetune --data " + f.data.string() + " --ckpt-in " +
            f.seg_ckpt.string() + " --out " + (dir / "ft.ckpt").string() +
            " --epochs 2 --batch-size 4 --seed 2") == 0);
  CHECK(fs::exists(dir / "ft.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("oracle estimates reproduce the generator truth bit for bit") {
  const auto& f = fixture();
  const auto report = f.dir / "oracle_report.csv";
  REQUIRE(run("estimate --study " + f.data.string() + " --oracle --out " + report.string()) ==
          0);
  CHECK(slurp(report) == slurp(f.data / "truth.csv"));
}

TEST_CASE("learned estimates run end to end with trained checkpoints") {
  const auto& f = fixture();
  const auto dir = scratch("learned");
  const auto fem_ckpt = dir / "fem.ckpt";
  REQUIRE(run("train --mode femur --data " + f.data.string() + " --out " + fem_ckpt.string() +
              " --epochs 2 --image-size 32 --base-width 8 --batch-size 4 --seed 2") == 0);

  const auto report = dir / "report.csv";
  REQUIRE(run("estimate --study " + f.data.string() + " --seg-ckpt " + f.seg_ckpt.string() +
              " --femur-ckpt " + fem_ckpt.string() + " --out " + report.string()) == 0);
  CHECK(count_lines(report) == 7);  // header + 6 studies
  std::ifstream in(report);
  std::string header;
  std::getline(in, header);
  CHECK(header == "study_id,hc_cm,bpd_cm,ac_cm,fl_cm,ga_weeks,warnings");
  fs::remove_all(dir);
}

TEST_CASE("a corrupt study becomes an error row, not a crash") {
  const auto& f = fixture();
  const auto dir = scratch("corrupt");
  REQUIRE(run("synth --out " + (dir / "data").string() + " --n 2 --seed 3 --image-size 64") ==
          0);
  std::ofstream(dir / "data" / "synth_0001" / "head.png") << "not a png";

  const auto report = dir / "report.csv";
  CHECK(run("estimate --study " + (dir / "data").string() + " --oracle --out " +
            report.string()) == 0);
  const auto text = slurp(report);
  CHECK(text.find("synth_0000") != std::string::npos);
  CHECK(text.find("synth_0001") != std::string::npos);
  CHECK(text.find("error:") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("evaluate reports zero error against itself and runs paired tests") {
  const auto& f = fixture();
  const auto report = f.dir / "oracle_report.csv";
  if (!fs::exists(report))
    REQUIRE(run("estimate --study " + f.data.string() + " --oracle --out " + report.string()) ==
            0);

  const auto out = f.dir / "eval.csv";
  REQUIRE(run("evaluate --pred " + report.string() + " --truth " +
              (f.data / "truth.csv").string() + " --out " + out.string()) == 0);
  std::ifstream in(out);
  std::string line;
  std::getline(in, line);
  CHECK(line.find("measure,n,mae") == 0);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string name, n, mae;
    std::getline(ss, name, ',');
    std::getline(ss, n, ',');
    std::getline(ss, mae, ',');
    CHECK(n == "6");
    CHECK(std::stod(mae) == 0.0);
  }

  CHECK(run("evaluate --pred " + report.string() + " --truth " + report.string() +
            " --pred-b " + report.string() + " --out " + (f.dir / "eval_b.csv").string()) != 0);
}

TEST_CASE("bad invocations exit nonzero") {
  CHECK(run("") != 0);                  // a subcommand is required
  CHECK(run("estimate --oracle") != 0); // --study/--out required
  CHECK(run("train --mode bogus --data /nonexistent --out /tmp/x.ckpt") != 0);
}
