#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "asn/cli.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("asn_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "asn");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return asn::cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  double csv_value(const std::string& csv, const std::string& metric) {
    std::istringstream in(slurp(csv));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto comma = line.rfind(',');
      const auto prev = line.rfind(',', comma - 1);
      if (line.substr(prev + 1, comma - prev - 1) == metric) return std::stod(line.substr(comma + 1));
    }
    ADD_FAILURE() << "metric " << metric << " not in " << csv;
    return NAN;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(Cli, PlanePipelineRecoversTheNormal) {
  ASSERT_EQ(run({"scene", "--kind", "plane", "--res", "64", "--outdir", path("s")}), 0) << err_.str();
  for (const std::string method : {"asn", "sobel", "lsq"}) {
    ASSERT_EQ(run({"normals", "--depth", path("s/depth.asnr"), "--mask", path("s/mask.asnr"), "--intrinsics",
                   path("s/intrinsics.txt"), "--method", method, "--out", path("n.asnr")}),
              0)
        << err_.str();
    ASSERT_EQ(run({"eval", "--pred", path("n.asnr"), "--gt", path("s/normals.asnr"), "--kind", "normal", "--out",
                   path("e.csv")}),
              0)
        << err_.str();
    EXPECT_LT(csv_value(path("e.csv"), "mean"), 1e-4) << method;
  }
}

TEST_F(Cli, NormalsAreByteIdenticalAcrossRunsAndThreads) {
  ASSERT_EQ(run({"scene", "--kind", "hemisphere", "--res", "48", "--sigma", "0.01", "--outdir", path("s")}), 0);
  const std::vector<std::string> common{"normals",      "--depth", path("s/depth.asnr"), "--intrinsics",
                                        path("s/intrinsics.txt"), "--guidance", "oracle", "--segments",
                                        path("s/segments.asnr")};
  auto with = [&](std::vector<std::string> extra, const std::string& out) {
    std::vector<std::string> a = extra;
    a.insert(a.end(), common.begin(), common.end());
    a.push_back("--out");
    a.push_back(path(out));
    return run(a);
  };
  ASSERT_EQ(with({"--threads", "1"}, "a.asnr"), 0) << err_.str();
  ASSERT_EQ(with({"--threads", "1"}, "b.asnr"), 0);
  ASSERT_EQ(with({"--threads", "8"}, "c.asnr"), 0);
  EXPECT_EQ(slurp(path("a.asnr")), slurp(path("b.asnr")));
  EXPECT_EQ(slurp(path("a.asnr")), slurp(path("c.asnr")));
  asn::set_num_threads(1);
}

TEST_F(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(run({"normals", "--bogus"}), 2);
  EXPECT_NE(err_.str().find("Usage"), std::string::npos);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"normals", "--depth", "x", "--intrinsics", "y", "--out", "z", "--method", "magic"}), 2);
}

TEST_F(Cli, ExecutableReportsExitCodes) {
  const std::string bin = ASN_CLI_PATH;
  const auto status = [](const std::string& cmd) { return WEXITSTATUS(std::system((cmd + " 2>/dev/null").c_str())); };
  EXPECT_EQ(status(bin + " normals --bogus"), 2);
  EXPECT_EQ(status(bin + " --help > /dev/null"), 0);
  EXPECT_EQ(status(bin + " normals --depth " + path("missing.asnr") + " --intrinsics " + path("missing.txt") +
                   " --out " + path("n.asnr")),
            3);
}

TEST_F(Cli, ParseFailuresMapToExitThree) {
  std::ofstream(path("bad.asnr"), std::ios::binary) << "NOPE";
  std::ofstream(path("k.txt")) << "fx = 1\nfy = 1\ncx = 0\ncy = 0\nwidth = 1\nheight = 1\n";
  EXPECT_EQ(run({"normals", "--depth", path("bad.asnr"), "--intrinsics", path("k.txt"), "--out", path("n.asnr")}), 3);
  EXPECT_FALSE(fs::exists(path("n.asnr")));
  std::ofstream(path("k2.txt")) << "fx = 1\nzoom = 2\n";
  EXPECT_EQ(run({"normals", "--depth", path("bad.asnr"), "--intrinsics", path("k2.txt"), "--out", path("n.asnr")}), 3);
}

TEST_F(Cli, EmptyJointMaskIsNumericalFailure) {
  ASSERT_EQ(run({"scene", "--kind", "plane", "--res", "8", "--outdir", path("s")}), 0);
  const asn::DepthMap none(8, 8, std::vector<double>(64, 0.0), std::vector<std::uint8_t>(64, 0));
  asn::write_raster(asn::to_raster(none), path("empty.asnr"));
  EXPECT_EQ(run({"eval", "--pred", path("empty.asnr"), "--gt", path("s/depth.asnr"), "--kind", "depth", "--out",
                 path("e.csv")}),
            4);
}

TEST_F(Cli, OracleGuidanceNeedsSegments) {
  ASSERT_EQ(run({"scene", "--kind", "step", "--res", "16", "--outdir", path("s")}), 0);
  EXPECT_EQ(run({"normals", "--depth", path("s/depth.asnr"), "--intrinsics", path("s/intrinsics.txt"), "--guidance",
                 "oracle", "--out", path("n.asnr")}),
            2);
}

TEST_F(Cli, CsvCarriesFullFlagSet) {
  ASSERT_EQ(run({"gradcheck", "--res", "8", "--out", path("g.csv")}), 0) << err_.str();
  const std::string csv = slurp(path("g.csv"));
  EXPECT_EQ(csv.rfind("# asn --threads=1 gradcheck --res=8 --seed=0 --h=1e-05", 0), 0u) << csv;
  EXPECT_NE(csv.find("scene,estimator,config_hash,metric,value\n"), std::string::npos);
  EXPECT_GE(csv_value(path("g.csv"), "fraction_within_1e-4"), 0.99);
}

TEST_F(Cli, ExperimentSubcommandsWriteCsv) {
  ASSERT_EQ(run({"sweep-k", "--res", "24", "--klist", "10,20", "--seeds", "1", "--out", path("k.csv")}), 0)
      << err_.str();
  EXPECT_GT(csv_value(path("k.csv"), "mean_angle_error_k10"), 0.0);
  ASSERT_EQ(run({"sweep-patch", "--res", "24", "--sizes", "3,5", "--seeds", "1", "--out", path("p.csv")}), 0);
  EXPECT_GT(csv_value(path("p.csv"), "mean_angle_error_r3"), 0.0);
  ASSERT_EQ(run({"noise-exp", "--res", "24", "--sigmas", "0.01", "--seeds", "1", "--out", path("n.csv")}), 0);
  EXPECT_NE(slurp(path("n.csv")).find("asn_uniform"), std::string::npos);
  ASSERT_EQ(run({"bench", "--res", "16", "--methods", "asn,lsq", "--repeats", "1", "--out", path("b.csv")}), 0);
  EXPECT_GT(csv_value(path("b.csv"), "per_pixel_us"), 0.0);
  for (const std::string kind : {"hemisphere", "step", "wedge"}) {
    ASSERT_EQ(run({"scene", "--kind", kind, "--res", "16", "--outdir", path(kind)}), 0);
    ASSERT_EQ(run({"eval", "--pred", path(kind + "/depth.asnr"), "--gt", path(kind + "/depth.asnr"), "--kind",
                   "cloud", "--intrinsics", path(kind + "/intrinsics.txt"), "--out", path("c.csv")}),
              0);
    EXPECT_EQ(csv_value(path("c.csv"), "dist"), 0.0);
  }
}
