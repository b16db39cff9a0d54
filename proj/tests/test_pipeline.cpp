#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "peaktopo/errors.hpp"
#include "peaktopo/neighbors_io.hpp"
#include "peaktopo/pipeline.hpp"
#include "peaktopo/synth.hpp"

using namespace peaktopo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "peaktopo_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = fmt::format("\"{}\" {} > \"{}\" 2>&1", PEAKTOPO_CLI, args, log.string());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_sample(const fs::path& dir, std::size_t n = 1500) {
  const auto s = synth_gmm(3, n, 2, 6.0, 5);
  std::ofstream out(dir / "points.tsv");
  write_points_tsv(out, s.points);
  std::ofstream truth(dir / "truth.tsv");
  write_truth_tsv(truth, s.labels);
  return dir / "points.tsv";
}

}  // namespace

TEST_CASE("fused run writes every output") {
  const auto dir = scratch("fused");
  const auto s = synth_gmm(8, 20000, 2, 3.0, 1);
  {
    std::ofstream out(dir / "points.tsv");
    write_points_tsv(out, s.points);
  }
  RunConfig cfg;
  cfg.input = dir / "points.tsv";
  cfg.z = 1.5;
  cfg.out_dir = dir / "out";
  const auto res = run_pipeline(cfg);
  for (const char* f : {"density.tsv", "assignment.tsv", "merges.tsv", "topography.json",
                        "dendrogram.nwk", "dendrogram_layout.json", "network.dot", "config.txt",
                        "summary.tsv"})
    CHECK(fs::exists(cfg.out_dir / f));
  CHECK(res.n_points == 20000);
  CHECK(res.clustering.assignment.n_clusters >= 1);
  CHECK(slurp(cfg.out_dir / "summary.tsv").rfind("n\t20000\n", 0) == 0);
}

TEST_CASE("same configuration gives identical bytes") {
  const auto dir = scratch("determinism");
  const auto input = write_sample(dir);
  RunConfig cfg;
  cfg.input = input;
  cfg.truth = dir / "truth.tsv";
  cfg.out_dir = dir / "a";
  const auto a = run_pipeline(cfg);
  cfg.out_dir = dir / "b";
  const auto b = run_pipeline(cfg);
  CHECK(a.files == b.files);
  for (const auto& [name, contents] : a.files)
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  CHECK(a.files.count("confusion.tsv") == 1);
}

TEST_CASE("matrix input reproduces the coordinate run") {
  const auto dir = scratch("matrix");
  const auto s = synth_gmm(2, 400, 2, 6.0, 3);
  {
    std::ofstream out(dir / "points.tsv");
    write_points_tsv(out, s.points);
    std::ofstream m(dir / "matrix.tsv");
    for (std::size_t i = 0; i < 400; ++i)
      for (std::size_t j = 0; j < 400; ++j)
        m << fmt::format("{}{}", distance(s.points.row(i), s.points.row(j), Metric::kEuclidean),
                         j + 1 < 400 ? '\t' : '\n');
  }
  RunConfig cfg;
  cfg.input = dir / "points.tsv";
  const auto a = compute_pipeline(cfg);
  cfg.input = dir / "matrix.tsv";
  cfg.format = InputFormat::kMatrix;
  const auto b = compute_pipeline(cfg);
  CHECK(a.files.at("assignment.tsv") == b.files.at("assignment.tsv"));
  CHECK(a.files.at("topography.json") == b.files.at("topography.json"));
}

TEST_CASE("stage errors carry the stage name") {
  const auto dir = scratch("errors");
  { std::ofstream(dir / "empty.tsv"); }
  RunConfig cfg;
  cfg.input = dir / "empty.tsv";
  cfg.out_dir = dir / "out";
  try {
    run_pipeline(cfg);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("stage 'neighbors'") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(dir / "out" / "summary.tsv"));

  const auto input = write_sample(dir, 300);
  cfg.input = input;
  cfg.z = -1.0;
  CHECK_THROWS_AS(compute_pipeline(cfg), ConfigError);
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("exit");
  { std::ofstream(dir / "empty.tsv"); }
  const auto input = write_sample(dir, 400);
  CHECK(cli(fmt::format("run -i {} --out-dir {}", (dir / "empty.tsv").string(),
                        (dir / "o").string()),
            dir / "log") == 3);
  CHECK(cli("run --bogus", dir / "log") == 2);
  CHECK(cli(fmt::format("run -i {} --out-dir {} --z -1", input.string(), (dir / "o").string()),
            dir / "log") == 2);
  CHECK(cli(fmt::format("cluster -i {} --format knn", input.string()), dir / "log") != 0);
  CHECK(cli(fmt::format("estimate-id -i {}", input.string()), dir / "log") == 0);
  const std::string id = slurp(dir / "log");
  CHECK(id.find('\t') != std::string::npos);
  CHECK(id.back() == '\n');
  CHECK(cli("--help", dir / "log") == 0);
}

TEST_CASE("stage outputs feed the next stage") {
  const auto dir = scratch("stages");
  const auto input = write_sample(dir);
  const std::string in = input.string();
  REQUIRE(cli(fmt::format("run -i {} --z 1.5 --out-dir {}", in, (dir / "fused").string()),
              dir / "log") == 0);
  REQUIRE(cli(fmt::format("density -i {} -o {}", in, (dir / "density.tsv").string()),
              dir / "log") == 0);
  CHECK(slurp(dir / "density.tsv") == slurp(dir / "fused" / "density.tsv"));
  REQUIRE(cli(fmt::format("cluster -i {} --z 1.5 --density {} -o {}", in,
                          (dir / "density.tsv").string(), (dir / "assignment.tsv").string()),
              dir / "log") == 0);
  CHECK(slurp(dir / "assignment.tsv") == slurp(dir / "fused" / "assignment.tsv"));
  REQUIRE(cli(fmt::format("topography -i {} --z 1.5 --density {} --out-dir {}", in,
                          (dir / "density.tsv").string(), (dir / "topo").string()),
              dir / "log") == 0);
  for (const char* f : {"topography.json", "dendrogram.nwk", "dendrogram_layout.json", "network.dot"})
    CHECK(slurp(dir / "topo" / f) == slurp(dir / "fused" / f));
  REQUIRE(cli(fmt::format("evaluate --assignment {} --truth {} --out-dir {}",
                          (dir / "assignment.tsv").string(), (dir / "truth.tsv").string(),
                          (dir / "eval").string()),
              dir / "log") == 0);
  CHECK(slurp(dir / "log").rfind("nmi\t", 0) == 0);
  CHECK(fs::exists(dir / "eval" / "confusion.tsv"));
  CHECK(fs::exists(dir / "eval" / "purity.tsv"));
}

TEST_CASE("flags override the config file, which overrides defaults") {
  const auto dir = scratch("config");
  const auto input = write_sample(dir, 600);
  {
    std::ofstream c(dir / "run.conf");
    c << "# settings\nz = 2.5\nhalo = false\nhalo-rule = lowest\nk-max = 100\n";
  }
  REQUIRE(cli(fmt::format("run -i {} --config {} --z 0.5 --out-dir {}", input.string(),
                          (dir / "run.conf").string(), (dir / "o").string()),
              dir / "log") == 0);
  const std::string echo = slurp(dir / "o" / "config.txt");
  CHECK(echo.find("z = 0.5\n") != std::string::npos);
  CHECK(echo.find("halo = false\n") != std::string::npos);
  CHECK(echo.find("halo-rule = lowest\n") != std::string::npos);
  CHECK(echo.find("k-max = 100\n") != std::string::npos);
  CHECK(echo.find("discard = 0.1\n") != std::string::npos);

  // The echoed configuration replays to the same outputs.
  REQUIRE(cli(fmt::format("run --config {} -i {} --out-dir {}", (dir / "o" / "config.txt").string(),
                          input.string(), (dir / "replay").string()),
              dir / "log") == 0);
  CHECK(slurp(dir / "replay" / "assignment.tsv") == slurp(dir / "o" / "assignment.tsv"));

  { std::ofstream(dir / "bad.conf") << "z 2\n"; }
  CHECK(cli(fmt::format("run -i {} --config {} --out-dir {}", input.string(),
                        (dir / "bad.conf").string(), (dir / "o2").string()),
            dir / "log") == 2);
}

TEST_CASE("synth subcommand is reproducible") {
  const auto dir = scratch("synth");
  for (const char* name : {"a", "b"})
    REQUIRE(cli(fmt::format("synth spirals --n 1000 --noise 0.1 --seed 4 -o {} --labels {}",
                            (dir / (std::string(name) + ".tsv")).string(),
                            (dir / (std::string(name) + "_labels.tsv")).string()),
                dir / "log") == 0);
  CHECK(slurp(dir / "a.tsv") == slurp(dir / "b.tsv"));
  CHECK(slurp(dir / "a_labels.tsv") == slurp(dir / "b_labels.tsv"));
  CHECK(cli(fmt::format("synth gmm --k 2 --n 100 --seed 1 -o {}", (dir / "g.tsv").string()),
            dir / "log") == 0);
  CHECK(read_points_tsv(dir / "g.tsv").n_points == 100);
}
