#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "experiment.hpp"
#include "pgm.hpp"
#include "trace_io.hpp"

using namespace stovamp;
using namespace stovamp::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("stovamp_test_cli_" + std::to_string(::getpid())) / name;
  fs::create_directories(p.parent_path());
  return p;
}

void write_file(const fs::path &p, const std::string &bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_haar() {
  ExperimentConfig c;
  c.n = 32;
  c.alpha = 2.5;
  c.iterations = 20;
  c.seed = 3;
  return c;
}

int run_binary(const std::string &args) {
  const char *bin = std::getenv("STOVAMP_BIN");
  REQUIRE(bin != nullptr);
  const int status = std::system((std::string(bin) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("config parsing") {
  auto c = parse_config_text("# comment\nexperiment = cdp\n  height= 8 \nwidth =4\nimage = a b.pgm\nrho=0.5\n", "t");
  CHECK(c.experiment == "cdp");
  CHECK(c.height == 8);
  CHECK(c.width == 4);
  CHECK(c.image == "a b.pgm");
  CHECK(c.rho == 0.5);
  CHECK_THROWS_AS(parse_config_text("bogus = 1\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("rho 1\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("n = 12x\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("schedule = both\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("record_wall_time = yes\n", "t"), ConfigError);
  try {
    parse_config_text("n = 4\n\nmystery = 2\n", "cfg");
    FAIL("expected error");
  } catch (const ConfigError &e) {
    CHECK(std::string(e.what()).find("cfg:3") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.haar_rows() == 614);
  c.alpha = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.rho = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.experiment = "cdp";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.image = "x.pgm";
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config round trip through pairs and overrides") {
  ExperimentConfig c;
  c.rho = 0.1 + 0.2;
  c.seed = 12345678901ULL;
  c.schedule = "parallel";
  std::string text;
  for (const auto &[k, v] : c.to_pairs()) {
    text += k + " = " + v + "\n";
  }
  auto back = parse_config_text(text, "t");
  CHECK(back.to_pairs() == c.to_pairs());
  apply_overrides(back, {{"rho", "0.9"}, {"solver", "vamp"}});
  CHECK(back.rho == 0.9);
  CHECK(back.solver == "vamp");
  CHECK_THROWS_AS(apply_overrides(back, {{"nope", "1"}}), ConfigError);
}

TEST_CASE("pgm loading") {
  const std::string p5 = std::string("P5\n2 2\n255\n") + char(0) + char(255) + char(128) + char(64);
  auto img = parse_pgm(p5);
  CHECK(img.height == 2);
  CHECK(img.width == 2);
  CHECK(img.pixels[0] == 0.0);
  CHECK(img.pixels[1] == 1.0);
  CHECK(img.pixels[2].real() == doctest::Approx(128.0 / 255));
  CHECK(img.pixels[3].real() == doctest::Approx(64.0 / 255));
  CHECK(img.pixels.imag().isZero());

  auto ascii = parse_pgm("P2\n# made by hand\n2 2\n255\n0 255\n128 64\n");
  CHECK(ascii.pixels == img.pixels);

  const std::string wide = std::string("P5 1 2 1000\n") + char(0x03) + char(0xE8) + char(0x01) + char(0xF4);
  auto w = parse_pgm(wide);
  CHECK(w.pixels[0] == 1.0);
  CHECK(w.pixels[1] == 0.5);
}

TEST_CASE("pgm errors name a byte offset") {
  for (const std::string &bad : {std::string("P6\n1 1\n255\n\x01"), std::string("P5\n2 2\n255\n\x01\x02"),
                                std::string("P2\n2 2\n255\n1 2 3"), std::string("P5\n2 2\n70000\n"),
                                std::string("P2\n1 1\n10\n11\n")}) {
    try {
      parse_pgm(bad);
      FAIL("expected a format error");
    } catch (const FormatError &e) {
      CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
  }
  CHECK_THROWS_AS(load_pgm("/nonexistent/file.pgm"), FormatError);
}

TEST_CASE("pgm write and read back") {
  const auto path = scratch("scene.pgm");
  auto scene = synthetic_scene(12, 10);
  write_pgm(path.string(), 12, 10, scene);
  auto img = load_pgm(path.string());
  CHECK(img.height == 12);
  CHECK(img.width == 10);
  CHECK((img.pixels.real() - scene).cwiseAbs().maxCoeff() <= 0.5 / 255 + 1e-12);
  CHECK(file_hash(path.string()).size() == 16);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("trace write and read") {
  const auto path = scratch("trace.csv");
  write_trace({}, {" a = 1"}, path.string());
  CHECK(read_file(path) == "# a = 1\niter,block,nmse_db,eta1,gamma1,tau1,wall_ms\n");

  TraceRecord r;
  r.iteration = 4;
  r.block = 2;
  r.nmse_db = -25.123456789012345;
  r.eta1 = 1.0 / 3;
  r.gamma1 = 1e-11;
  r.tau1 = 123456.789;
  r.wall_ms = 0.1;
  TraceRecord no_truth = r;
  no_truth.nmse_db.reset();
  write_trace({r}, {}, path.string());
  std::string text = read_file(path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  write_trace({r, no_truth}, {" x = y"}, path.string());
  auto back = read_trace(path.string());
  REQUIRE(back.records.size() == 2);
  CHECK(back.comments.front() == " x = y");
  CHECK(*back.records[0].nmse_db == *r.nmse_db);
  CHECK(back.records[0].eta1 == r.eta1);
  CHECK(back.records[0].gamma1 == r.gamma1);
  CHECK(back.records[0].tau1 == r.tau1);
  CHECK(back.records[0].wall_ms == r.wall_ms);
  CHECK_FALSE(back.records[1].nmse_db.has_value());
  CHECK_THROWS_AS(write_trace({}, {}, "/nonexistent/dir/trace.csv"), FormatError);
}

TEST_CASE("haar experiment header reports the effective alpha") {
  ExperimentConfig c = small_haar();
  c.n = 512;
  c.alpha = 2.4;
  c.iterations = 1;
  auto inst = synthesize(c);
  CHECK(inst.rows_per_block == 614);
  bool found = false;
  for (const auto &d : inst.derived()) {
    if (d.find("alpha_effective = ") != std::string::npos) {
      CHECK(std::stod(d.substr(d.find('=') + 1)) == 2.0 * 614 / 512);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("same config and seed give byte-identical traces, also when re-run from the echo") {
  ExperimentConfig c = small_haar();
  c.output_dir = scratch("run_a").string();
  auto a = run_experiment(c);
  c.output_dir = scratch("run_b").string();
  auto b = run_experiment(c);
  // Only the output_dir echo line may differ.
  auto strip = [](const std::string &t) {
    std::istringstream in(t);
    std::string line, out;
    while (std::getline(in, line)) {
      if (line.rfind("# output_dir", 0) != 0) {
        out += line + "\n";
      }
    }
    return out;
  };
  CHECK(strip(read_file(a.trace_path)) == strip(read_file(b.trace_path)));
  CHECK(fs::exists(fs::path(a.trace_path).parent_path() / "plot_trace.py"));
  CHECK(fs::exists(fs::path(a.trace_path).parent_path() / "summary.txt"));

  ExperimentConfig echo = config_from_trace(a.trace_path);
  CHECK(echo.seed == 3);
  CHECK(echo.n == 32);
  echo.output_dir = scratch("run_c").string();
  auto again = run_experiment(echo);
  const std::string ta = read_file(a.trace_path), tc = read_file(again.trace_path);
  CHECK(strip(ta) == strip(tc));
}

TEST_CASE("cdp experiment writes a phase-aligned reconstruction") {
  const auto img = scratch("tiny.pgm");
  write_pgm(img.string(), 16, 16, synthetic_scene(16, 16));
  ExperimentConfig c;
  c.experiment = "cdp";
  c.image = img.string();
  c.blocks = 3;
  c.iterations = 30;
  c.output_dir = scratch("cdp").string();
  auto out = run_experiment(c);
  CHECK(out.final_nmse_db < -15);
  // 2L per iteration plus L adjoints once to seed the cache
  CHECK(out.fft_count == 2u * 3u * 30u + 3u);
  auto rec = load_pgm((fs::path(c.output_dir) / "reconstruction.pgm").string());
  CHECK(rec.height == 16);
  auto truth = load_pgm(img.string());
  CHECK((rec.pixels - truth.pixels).norm() / truth.pixels.norm() < 0.1);
  auto trace = read_trace(out.trace_path);
  bool hashed = false;
  for (const auto &cm : trace.comments) {
    hashed = hashed || cm.find("image_fnv1a64 = " + file_hash(img.string())) != std::string::npos;
  }
  CHECK(hashed);
}

TEST_CASE("reconstruction export aligns the global phase") {
  ComplexVector<double> x = synthetic_scene(4, 4).cast<std::complex<double>>();
  ComplexVector<double> rotated = std::polar(1.0, 2.0) * x;
  CHECK((reconstruction_image(x, rotated) - x.real()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("command line exit codes") {
  const auto cfg = scratch("cli.cfg");
  write_file(cfg, "n = 16\nalpha = 2.5\niterations = 5\noutput_dir = " + scratch("cli_out").string() + "\n");
  CHECK(run_binary("run " + cfg.string()) == 0);
  CHECK(fs::exists(scratch("cli_out") / "trace.csv"));
  CHECK(run_binary("run " + cfg.string() + " --rho 0.5 --seed 4") == 0);
  CHECK(run_binary("run " + cfg.string() + " --bogus 1") == 2);
  CHECK(run_binary("run " + cfg.string() + " --rho 7") == 2);
  CHECK(run_binary("run /nonexistent.cfg") == 2);
  CHECK(run_binary("run " + (scratch("cli_out") / "trace.csv").string()) == 0);
  CHECK(run_binary("sweep " + cfg.string() + " --seeds 0..2 --threads 2") == 0);
  for (int s = 0; s <= 2; ++s) {
    CHECK(fs::exists(scratch("cli_out") / ("seed_" + std::to_string(s)) / "trace.csv"));
  }
  CHECK(fs::exists(scratch("cli_out") / "sweep.csv"));
  CHECK(run_binary("sweep " + cfg.string() + " --seeds 3..1") == 2);
}
