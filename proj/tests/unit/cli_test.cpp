#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>
#include "json.hpp"

#include "commands.hpp"
#include "hqf/field_io.hpp"
#include "report.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hqf_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

json load(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json config(const std::string& name) { return load(fs::path(HQF_CONFIG_DIR) / (name + ".json")); }

int run(const std::string& sub, const json& doc, const fs::path& out, std::string* err = nullptr, int jobs = 1) {
  std::ostringstream e;
  hqf::cli::RunOptions opts;
  opts.out_dir = out.string();
  opts.jobs = jobs;
  const int code = hqf::cli::run(sub, doc, opts, e);
  if (err) *err = e.str();
  return code;
}

}  // namespace

TEST(Cli, EmptyConfigListsEveryMissingKey) {
  std::string err;
  const auto out = scratch("empty");
  EXPECT_EQ(run("control", json::object(), out, &err), hqf::cli::kExitSchema);
  EXPECT_NE(err.find("domain"), std::string::npos) << err;
  EXPECT_NE(err.find("metric"), std::string::npos) << err;
  EXPECT_NE(err.find("seed"), std::string::npos) << err;
  EXPECT_NE(err.find("params.points"), std::string::npos) << err;
  // All missing keys on one line.
  const auto at = err.find("missing");
  ASSERT_NE(at, std::string::npos) << err;
  const auto line = err.substr(at, err.find('\n', at) - at);
  EXPECT_NE(line.find("domain"), std::string::npos) << line;
  EXPECT_NE(line.find("params.points"), std::string::npos) << line;
}

TEST(Cli, UnknownKeysAndBadTypesAreSchemaErrors) {
  auto doc = config("solve");
  doc["colour"] = "blue";
  std::string err;
  EXPECT_EQ(run("solve", doc, scratch("unknown"), &err), hqf::cli::kExitSchema);
  EXPECT_NE(err.find("colour"), std::string::npos) << err;

  doc = config("solve");
  doc["domain"]["resolution"] = "big";
  EXPECT_EQ(run("solve", doc, scratch("badtype")), hqf::cli::kExitSchema);

  doc = config("separate");
  doc["params"]["a"] = json::array({0, 7, 8});
  EXPECT_EQ(run("separate", doc, scratch("shallow")), hqf::cli::kExitSchema);
}

TEST(Cli, ProcessExitCodes) {
  const auto dir = scratch("process");
  fs::create_directories(dir);
  std::ofstream(dir / "empty.json") << "{}";
  const std::string cmd = std::string(HQF_EXE) + " solve --config " + (dir / "empty.json").string() + " --out " +
                          (dir / "out").string() + " 2> " + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_NE(slurp(dir / "stderr.txt").find("missing"), std::string::npos);

  const std::string bad_flag = std::string(HQF_EXE) + " solve --no-such-flag 2> /dev/null";
  const int s2 = std::system(bad_flag.c_str());
  ASSERT_TRUE(WIFEXITED(s2));
  EXPECT_EQ(WEXITSTATUS(s2), 2);
}

TEST(Cli, NonSpdMetricFileIsNumericalFailure) {
  const auto dir = scratch("nonspd");
  fs::create_directories(dir);
  hqf::DomainSpec spec;
  spec.resolution = {9, 9, 9};
  const auto dom = hqf::build_domain(spec);
  std::vector<double> g(dom->node_count() * 6, 0.0);
  for (std::size_t n = 0; n < dom->node_count(); ++n) {
    g[6 * n] = 1;
    g[6 * n + 3] = 1;
    g[6 * n + 5] = n == dom->id(4, 4, 4) ? -1.0 : 1.0;
  }
  hqf::io::write_raw(dir / "metric", *dom, 6, g);
  json doc = {{"domain", {{"resolution", 9}}},
              {"metric", {{"file", (dir / "metric").string()}}},
              {"params", {{"problem", "manufactured"}}}};
  std::string err;
  EXPECT_EQ(run("solve", doc, dir / "out", &err), hqf::cli::kExitNumerical) << err;
  EXPECT_TRUE(fs::exists(dir / "out" / "diagnostics.json"));
  EXPECT_EQ(load(dir / "out" / "manifest.json").at("status"), "numerical_failure");
}

TEST(Cli, ControlRankForTwoPoints) {
  const auto out = scratch("control");
  ASSERT_EQ(run("control", config("control"), out), hqf::cli::kExitOk);
  const auto rep = load(out / "report.json");
  EXPECT_EQ(rep.at("rank"), 8);
  EXPECT_EQ(rep.at("rows"), 8);
  EXPECT_TRUE(rep.at("success").get<bool>());
  EXPECT_TRUE(fs::exists(out / "singular_values.csv"));
  EXPECT_TRUE(fs::exists(out / "control.bin"));

  const auto man = load(out / "manifest.json");
  EXPECT_EQ(man.at("subcommand"), "control");
  EXPECT_EQ(man.at("status"), "ok");
  EXPECT_EQ(man.at("seed"), 12345);
  EXPECT_TRUE(std::regex_match(man.at("config_hash").get<std::string>(), std::regex("fnv1a64:[0-9a-f]{16}")));
  for (const auto& f : man.at("outputs")) EXPECT_TRUE(fs::exists(out / f.get<std::string>())) << f;
}

TEST(Cli, SeedFlagOverridesAndIsRequired) {
  auto doc = config("control");
  doc.erase("seed");
  std::string err;
  EXPECT_EQ(run("control", doc, scratch("noseed"), &err), hqf::cli::kExitSchema);
  EXPECT_NE(err.find("seed"), std::string::npos);

  std::ostringstream e;
  hqf::cli::RunOptions opts;
  opts.out_dir = scratch("seedflag").string();
  opts.seed = 777;
  ASSERT_EQ(hqf::cli::run("control", doc, opts, e), hqf::cli::kExitOk) << e.str();
  EXPECT_EQ(load(fs::path(opts.out_dir) / "manifest.json").at("seed"), 777);
}

TEST(Cli, ManufacturedConvergenceRatios) {
  const auto out = scratch("convergence");
  ASSERT_EQ(run("convergence", config("convergence"), out), hqf::cli::kExitOk);
  std::ifstream csv(out / "convergence.csv");
  std::string header, line;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("n,h,", 0), 0u) << header;
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    if (rows == 1) continue;
    const double ratio = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_GE(ratio, 3.5) << line;
  }
  EXPECT_EQ(rows, 3);
}

TEST(Cli, SeventeenDigitFloats) {
  const auto out = scratch("digits");
  ASSERT_EQ(run("separate", config("separate"), out), hqf::cli::kExitOk);
  const auto text = slurp(out / "report.json");
  // Any float with a fractional part and no exponent carries 17 significant digits.
  std::smatch m;
  ASSERT_TRUE(std::regex_search(text, m, std::regex(R"("error_a": ([-0-9.e+]+))"))) << text;
  const std::string v = m[1];
  std::string digits;
  for (char ch : v.substr(0, v.find('e')))
    if (std::isdigit(static_cast<unsigned char>(ch))) digits += ch;
  digits.erase(0, digits.find_first_not_of('0'));
  EXPECT_EQ(digits.size(), 17u) << v;
  EXPECT_EQ(hqf::cli::fmt(0.1), "0.10000000000000001");
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  for (const std::string sub : {"separate", "density"}) {
    const auto a = scratch(sub + "_a"), b = scratch(sub + "_b");
    ASSERT_EQ(run(sub, config(sub), a, nullptr, 1), hqf::cli::kExitOk);
    ASSERT_EQ(run(sub, config(sub), b, nullptr, 3), hqf::cli::kExitOk);
    std::size_t compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), a);
      ASSERT_TRUE(fs::exists(b / rel)) << rel;
      if (rel == "manifest.json") {
        auto ma = load(e.path()), mb = load(b / rel);
        ma.erase("wall_time_seconds");
        mb.erase("wall_time_seconds");
        EXPECT_EQ(ma, mb);
      } else {
        EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << sub << "/" << rel;
      }
      ++compared;
    }
    EXPECT_GT(compared, 3u);
  }
}

TEST(Cli, OutputDirectoryPrecedence) {
  const auto cfg_dir = scratch("from_config");
  auto doc = config("separate");
  doc["output"] = cfg_dir.string();
  std::ostringstream e;
  ASSERT_EQ(hqf::cli::run("separate", doc, {}, e), hqf::cli::kExitOk) << e.str();
  EXPECT_TRUE(fs::exists(cfg_dir / "manifest.json"));

  const auto flag_dir = scratch("from_flag");
  ASSERT_EQ(run("separate", doc, flag_dir), hqf::cli::kExitOk);
  EXPECT_TRUE(fs::exists(flag_dir / "manifest.json"));
}

TEST(Cli, DumpJsonSortsKeysAndNullsNonFinite) {
  const json j = {{"b", 1.5}, {"a", std::numeric_limits<double>::infinity()}, {"c", {1, 2}}};
  const auto s = hqf::cli::dump_json(j);
  EXPECT_LT(s.find("\"a\""), s.find("\"b\""));
  EXPECT_NE(s.find("\"a\": null"), std::string::npos) << s;
  EXPECT_NE(s.find("[1, 2]"), std::string::npos) << s;
  EXPECT_EQ(hqf::cli::fnv1a64(""), 14695981039346656037ull);
  EXPECT_EQ(hqf::cli::fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

class EveryConfig : public ::testing::TestWithParam<std::pair<std::string, std::string>> {};

TEST_P(EveryConfig, RunsCleanly) {
  const auto& [sub, file] = GetParam();
  std::string err;
  const auto out = scratch("every_" + file);
  ASSERT_EQ(run(sub, config(file), out, &err, 2), hqf::cli::kExitOk) << err;
  EXPECT_EQ(load(out / "manifest.json").at("status"), "ok");
  EXPECT_TRUE(fs::exists(out / "report.json"));
}

INSTANTIATE_TEST_SUITE_P(Configs, EveryConfig,
                         ::testing::Values(std::pair{"solve", "solve"}, std::pair{"green", "green"},
                                           std::pair{"jets", "jets"}, std::pair{"recover", "recover"},
                                           std::pair{"analyze", "analyze"}, std::pair{"analyze", "analyze_cavity"},
                                           std::pair{"analyze", "analyze_column"}),
                         [](const auto& info) {
                           std::string n = info.param.second;
                           n.erase(std::remove(n.begin(), n.end(), '_'), n.end());
                           return n;
                         });
