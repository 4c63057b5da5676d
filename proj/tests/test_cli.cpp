#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "ordnmf/model_io.hpp"
#include "ordnmf/ordinal_matrix.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ordnmf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = ordnmf::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Lines that are neither comments nor the column header.
std::vector<std::string> data_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ordnmf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // quantize + split of the packaged data set
  void prepare() {
    ASSERT_EQ(cli({"quantize", "--input", ORDNMF_DATA_DIR "/synthetic_counts.tsv", "--output", path("all.ordm"),
                   "--boundaries", "1,2,3,4"})
                  .code,
              0);
    ASSERT_EQ(cli({"split", "--input", path("all.ordm"), "--train-out", path("train.ordm"), "--test-out",
                   path("test.ordm"), "--seed", "3"})
                  .code,
              0);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, QuantizeWithDefaultBoundaries) {
  {
    std::ofstream f(path("counts.tsv"));
    f << "a\tx\t35\na\ty\t1\nb\tx\t501\nb\tz\t7\n";
  }
  const auto r = cli({"quantize", "--input", path("counts.tsv"), "--output", path("m.ordm")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = ordnmf::read_matrix(path("m.ordm"));
  EXPECT_EQ(m.n_classes(), 10u);
  EXPECT_EQ(m.at(0, 0), 6u);
  EXPECT_EQ(m.at(0, 1), 1u);
  EXPECT_EQ(m.at(1, 0), 10u);
  EXPECT_EQ(m.at(1, 2), 4u);
  const auto users = ordnmf::read_id_map(path("m.ordm.users.tsv"));
  EXPECT_EQ(users.ids, (std::vector<std::string>{"a", "b"}));
  const json meta = json::parse(slurp(path("m.ordm.meta.json")));
  EXPECT_EQ(meta["schema_version"], ordnmf::cli::kSchemaVersion);
  EXPECT_EQ(meta["matrix"]["nnz"], 4);
}

TEST_F(CliTest, QuantizeErrorsLeaveNoOutputs) {
  {
    std::ofstream f(path("bad.tsv"));
    f << "a\tx\t3\na\tx\t4\n";
  }
  auto r = cli({"quantize", "--input", path("bad.tsv"), "--output", path("m.ordm")});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("duplicate"), std::string::npos);
  r = cli({"quantize", "--input", path("missing.tsv"), "--output", path("m.ordm")});
  EXPECT_NE(r.code, 0);
  for (const auto& e : fs::directory_iterator(dir_)) EXPECT_EQ(e.path().filename(), "bad.tsv");
}

TEST_F(CliTest, SplitIsReproducible) {
  prepare();
  ASSERT_EQ(cli({"split", "--input", path("all.ordm"), "--train-out", path("t2.ordm"), "--test-out", path("s2.ordm"),
                 "--seed", "3"})
                .code,
            0);
  EXPECT_EQ(slurp(path("train.ordm")), slurp(path("t2.ordm")));
  EXPECT_EQ(slurp(path("test.ordm")), slurp(path("s2.ordm")));
  const auto all = ordnmf::read_matrix(path("all.ordm"));
  const auto test = ordnmf::read_matrix(path("test.ordm"));
  EXPECT_EQ(test.nnz(), all.nnz() / 5);
}

TEST_F(CliTest, TrainRestartsAndDeterminism) {
  prepare();
  const std::vector<std::string> args{"train", "--train", path("train.ordm"), "--k", "3", "--max-iter", "40",
                                      "--restarts", "5", "--seed", "10"};
  auto a = args;
  a.insert(a.end(), {"--model", path("a.model")});
  auto r = cli(a);
  ASSERT_EQ(r.code, 0) << r.err;
  int traces = 0;
  for (const auto& e : fs::directory_iterator(dir_)) traces += e.path().filename().string().find(".trace.seed") != std::string::npos;
  EXPECT_EQ(traces, 5);
  auto b = args;
  b.insert(b.end(), {"--model", path("b.model")});
  ASSERT_EQ(cli(b).code, 0);
  EXPECT_EQ(slurp(path("a.model")), slurp(path("b.model")));

  const json meta = json::parse(slurp(path("a.model.meta.json")));
  EXPECT_EQ(meta["schema_version"], ordnmf::cli::kSchemaVersion);
  EXPECT_EQ(meta["restarts"].size(), 5u);
  EXPECT_EQ(meta["config"]["k"], 3);
  double best = -1e300;
  for (const auto& run : meta["restarts"]) best = std::max(best, run["final_elbo"].get<double>());
  EXPECT_EQ(meta["final_elbo"].get<double>(), best);
  EXPECT_TRUE(meta.contains("converged"));
}

TEST_F(CliTest, TrainNonConvergenceIsNotAnError) {
  prepare();
  const auto r = cli({"train", "--train", path("train.ordm"), "--model", path("m.model"), "--k", "3", "--max-iter", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json meta = json::parse(slurp(path("m.model.meta.json")));
  EXPECT_FALSE(meta["converged"].get<bool>());
}

TEST_F(CliTest, TrainMissingInputWritesNothing) {
  const auto r = cli({"train", "--train", path("nope.ordm"), "--model", path("m.model")});
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(fs::is_empty(dir_));
}

TEST_F(CliTest, ConfigFilePrecedence) {
  prepare();
  {
    std::ofstream f(path("run.cfg"));
    f << "# comment\nk = 4\nmax_iter = 7\ntol = 1e-300\nlist-length = 20\n";
  }
  auto r = cli({"train", "--train", path("train.ordm"), "--model", path("m.model"), "--config", path("run.cfg"),
                "--k", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json meta = json::parse(slurp(path("m.model.meta.json")));
  EXPECT_EQ(meta["config"]["k"], 2);
  EXPECT_EQ(meta["config"]["max-iter"], 7);
  EXPECT_EQ(meta["iterations"], 7);
  EXPECT_EQ(ordnmf::read_model(path("m.model")).rank(), 2);
  {
    std::ofstream f(path("typo.cfg"));
    f << "kk = 4\n";
  }
  r = cli({"train", "--train", path("train.ordm"), "--model", path("x.model"), "--config", path("typo.cfg")});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(path("x.model")));
}

TEST_F(CliTest, EvaluateColumnsAndBinaryLnz) {
  prepare();
  ASSERT_EQ(cli({"train", "--train", path("train.ordm"), "--model", path("o.model"), "--k", "3"}).code, 0);
  auto r = cli({"evaluate", "--model", path("o.model"), "--train", path("train.ordm"), "--test", path("test.ordm"),
                "--ndcg-thresholds", "1,2,3,4,5", "--output", path("ev.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = data_rows(path("ev.tsv"));
  ASSERT_EQ(rows.size(), 6u);
  for (int s = 0; s < 5; ++s) EXPECT_EQ(rows[s].rfind("ndcg@100\t" + std::to_string(s + 1) + "\t", 0), 0u);
  EXPECT_EQ(rows[5].rfind("lnz\t", 0), 0u);
  EXPECT_EQ(rows[5].find("N/A"), std::string::npos);

  ASSERT_EQ(cli({"train", "--train", path("train.ordm"), "--model", path("b.model"), "--k", "3", "--pf",
                 "--binarize-at", "1"})
                .code,
            0);
  r = cli({"evaluate", "--model", path("b.model"), "--train", path("train.ordm"), "--test", path("test.ordm")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("L_NZ"), std::string::npos);
  EXPECT_NE(r.out.find("N/A"), std::string::npos);
}

TEST_F(CliTest, EvaluateRejectsMismatchAndEmptyTest) {
  prepare();
  ASSERT_EQ(cli({"train", "--train", path("train.ordm"), "--model", path("o.model"), "--k", "2", "--max-iter", "3"}).code,
            0);
  ordnmf::write_matrix(path("small.ordm"), ordnmf::OrdinalMatrix(3, 3, 5, {{0, 0, 1}}));
  ordnmf::write_matrix(path("empty.ordm"), ordnmf::OrdinalMatrix(200, 149, 5, {}));
  auto r = cli({"evaluate", "--model", path("o.model"), "--train", path("train.ordm"), "--test", path("small.ordm")});
  EXPECT_NE(r.code, 0);
  r = cli({"evaluate", "--model", path("o.model"), "--train", path("train.ordm"), "--test", path("empty.ordm")});
  EXPECT_NE(r.code, 0);
}

TEST_F(CliTest, PpcHistogramAndDeterminism) {
  prepare();
  ASSERT_EQ(cli({"train", "--train", path("train.ordm"), "--model", path("o.model"), "--k", "3"}).code, 0);
  for (const char* name : {"h1.tsv", "h2.tsv"}) {
    const auto r = cli({"ppc", "--model", path("o.model"), "--train", path("train.ordm"), "--output", path(name),
                        "--cells", "20000", "--seed", "9"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(data_rows(path("h1.tsv")).size(), 6u);
  EXPECT_EQ(data_rows(path("h1.tsv")), data_rows(path("h2.tsv")));
  EXPECT_NE(slurp(path("h1.tsv")).find("nonzero_percent"), std::string::npos);
}

TEST_F(CliTest, PredictTopLists) {
  prepare();
  ASSERT_EQ(cli({"train", "--train", path("train.ordm"), "--model", path("o.model"), "--k", "3"}).code, 0);
  auto r = cli({"predict", "--model", path("o.model"), "--train", path("train.ordm"), "--users", "0,5",
                "--list-length", "100", "--output", path("p.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = data_rows(path("p.tsv"));
  const auto train = ordnmf::read_matrix(path("train.ordm"));
  const std::size_t expected0 = std::min<std::size_t>(100, train.n_items() - train.row_nnz(0));
  const std::size_t expected5 = std::min<std::size_t>(100, train.n_items() - train.row_nnz(5));
  ASSERT_EQ(rows.size(), expected0 + expected5);
  double prev = 1e300;
  for (std::size_t k = 0; k < expected0; ++k) {
    std::istringstream in(rows[k]);
    std::string user;
    std::size_t rank = 0, item = 0;
    double score = 0;
    in >> user >> rank >> item >> score;
    EXPECT_EQ(user, "0");
    EXPECT_EQ(rank, k + 1);
    EXPECT_EQ(train.at(0, static_cast<ordnmf::Index>(item)), 0u);
    EXPECT_LE(score, prev);
    prev = score;
  }
  r = cli({"predict", "--model", path("o.model"), "--users", "u0", "--user-map", path("all.ordm.users.tsv"),
           "--item-map", path("all.ordm.items.tsv"), "--list-length", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("u0\t1\ti"), std::string::npos);
  r = cli({"predict", "--model", path("o.model"), "--users", "100000"});
  EXPECT_NE(r.code, 0);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_NE(cli({}).code, 0);
  EXPECT_NE(cli({"train"}).code, 0);
  EXPECT_NE(cli({"frobnicate"}).code, 0);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST_F(CliTest, FullPipelineOnPackagedData) {
  prepare();
  ASSERT_EQ(cli({"train", "--train", path("train.ordm"), "--model", path("o.model"), "--k", "5", "--restarts", "2"}).code,
            0);
  ASSERT_EQ(cli({"train", "--train", path("train.ordm"), "--model", path("pf.model"), "--k", "5", "--pf",
                 "--binarize-at", "1"})
                .code,
            0);
  ASSERT_EQ(cli({"train", "--train", path("train.ordm"), "--model", path("be.model"), "--k", "5", "--bepof",
                 "--binarize-at", "3"})
                .code,
            0);
  for (const char* model : {"o.model", "pf.model", "be.model"}) {
    const auto r = cli({"evaluate", "--model", path(model), "--train", path("train.ordm"), "--test", path("test.ordm")});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const auto r = cli({"ppc", "--model", path("o.model"), "--train", path("train.ordm"), "--output", path("h.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(cli({"predict", "--model", path("o.model"), "--train", path("train.ordm"), "--output", path("p.tsv")}).code,
            0);
}
