#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "volterra/io/csv.hpp"
#include "volterra/io/experiment.hpp"

using namespace volterra;
using namespace volterra::io;

namespace {

json base_config() {
  return json::parse(R"({
    "model": {"sigma": 1.0, "jumps": {"kind": "none"}},
    "kernel": {"kind": "fractional", "d": 0.25},
    "q": 0.6, "p": 2, "T": 1,
    "grid": {"step": 0.0625, "truncation": 16},
    "n_paths": 200, "seed": 3,
    "checks": []
  })");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Csv, FixedFormatAndLineEndings) {
  Table t{{"a", "b"}, {}};
  t.add_numbers(0.1, 3);
  t.add_numbers(-1e-20, 1.0 / 3.0);
  std::ostringstream os;
  write_csv(os, t);
  EXPECT_EQ(os.str(), "a,b\n0.10000000000000001,3\n-9.9999999999999995e-21,0.33333333333333331\n");
  EXPECT_THROW(t.add({"1"}), std::logic_error);
}

TEST(Csv, PathTables) {
  const PathGrid g{0.0, 1.0, 0.25, {}};
  const auto X = sample_one_sided(LevyModel::compound_poisson(0.0, 5.0, TwoPointJumps{1.0}), 1.0, g, 4);
  const auto t = path_table(X);
  EXPECT_EQ(t.header, (std::vector<std::string>{"time", "value", "jump_size"}));
  EXPECT_EQ(t.rows.size(), X.size());
}

TEST(Config, ParsesModelsAndKernels) {
  auto j = base_config();
  j["model"] = json::parse(R"({"sigma": 0.5, "jumps": {"kind": "compound_poisson", "rate": 2,
                                "distribution": {"kind": "normal", "mean": 0, "sd": 1}}})");
  j["kernel"] = json::parse(R"({"kind": "shifted_support", "tau": -1, "base": {"kind": "exponential", "rate": 2}})");
  const auto c = parse_config(j);
  ASSERT_NE(c.model.compound_poisson_part(), nullptr);
  EXPECT_EQ(c.model.compound_poisson_part()->rate, 2.0);
  EXPECT_EQ(c.kernel.tau(), -1.0);
  EXPECT_NEAR(c.kernel.value(1.0, 0.0), std::exp(-2.0), 1e-15);
  j["model"] = json::parse(R"({"jumps": {"kind": "stable", "alpha": 1.5}})");
  j["p"] = 1.2;
  EXPECT_TRUE(parse_config(j).model.is_stable());
}

TEST(Config, ValidationErrors) {
  auto bad_p = base_config();
  bad_p["model"] = json::parse(R"({"jumps": {"kind": "stable", "alpha": 1.5}})");
  bad_p["p"] = 3;
  EXPECT_THROW(parse_config(bad_p), ConfigError);
  auto typo = base_config();
  typo["n_path"] = 10;
  EXPECT_THROW(parse_config(typo), ConfigError);
  auto unknown = base_config();
  unknown["checks"] = {"no_such_check"};
  EXPECT_THROW(parse_config(unknown), ConfigError);
  auto kern = base_config();
  kern["kernel"] = {{"kind", "fractional"}, {"d", 1.5}};
  EXPECT_THROW(parse_config(kern), ConfigError);
  auto ts = base_config();
  ts.erase("T");
  ts["T_values"] = {1, 4, 2};
  EXPECT_THROW(parse_config(ts), ConfigError);
  auto sigma = base_config();
  sigma["model"]["sigma"] = -1;
  EXPECT_THROW(parse_config(sigma), ConfigError);
}

TEST(Config, ChecksRunInRegistryOrderAndHashIsStable) {
  auto j = base_config();
  j["checks"] = {"kernel_consistency", "kernel_class"};
  const auto c = parse_config(j);
  EXPECT_EQ(c.checks, (std::vector<std::string>{"kernel_class", "kernel_consistency"}));
  EXPECT_EQ(config_hash(j), config_hash(json::parse(j.dump())));
  auto k = j;
  k["seed"] = 4;
  EXPECT_NE(config_hash(j), config_hash(k));
  EXPECT_EQ(config_hash(j).size(), 16u);
}

TEST(Registry, ListsEnoughChecks) {
  const auto& reg = check_registry();
  EXPECT_GE(reg.size(), 10u);
  EXPECT_TRUE(is_known_check("maximal_inequality_general"));
  EXPECT_TRUE(is_known_check("jump_relation"));
  for (const auto& [name, _] : reg) EXPECT_TRUE(check_functions().count(name)) << name;
}

TEST(Experiment, EmptyCheckListEchoesConfig) {
  const auto res = run_experiment(parse_config(base_config()));
  EXPECT_TRUE(res.all_pass);
  EXPECT_EQ(res.report["config"], base_config());
  EXPECT_EQ(res.report["schema_version"], kSchemaVersion);
  EXPECT_EQ(res.report["seed"], 3);
  EXPECT_TRUE(res.report["checks"].empty());
}

TEST(Experiment, KernelChecksPassForExampleKernel) {
  auto j = base_config();
  j["checks"] = {"kernel_class", "kernel_consistency"};
  const auto res = run_experiment(parse_config(j));
  EXPECT_TRUE(res.all_pass);
  j["q"] = 0.8;
  EXPECT_FALSE(run_experiment(parse_config(j)).all_pass);
}

TEST(Experiment, InapplicableCheckIsAConfigError) {
  auto j = base_config();
  j["checks"] = {"stable_integrability"};
  EXPECT_THROW(run_experiment(parse_config(j)), ConfigError);
  j["checks"] = {"self_similarity"};
  j["model"] = json::parse(R"({"jumps": {"kind": "compound_poisson", "rate": 1,
                                "distribution": {"kind": "two_point", "magnitude": 1}}})");
  EXPECT_THROW(run_experiment(parse_config(j)), ConfigError);
}

TEST(Experiment, IdenticalConfigsGiveIdenticalFiles) {
  auto j = base_config();
  j["checks"] = {"jump_relation", "weighted_sup_lemma", "maximal_inequality_general"};
  j["model"] = json::parse(R"({"sigma": 1, "jumps": {"kind": "compound_poisson", "rate": 2,
                                "distribution": {"kind": "normal"}}})");
  j["workers"] = 2;
  const auto dir = std::filesystem::temp_directory_path() / "volterra_io_test";
  std::filesystem::remove_all(dir);
  const auto c = parse_config(j);
  write_outputs(run_experiment(c), dir / "a");
  write_outputs(run_experiment(c), dir / "b");
  for (const auto& e : std::filesystem::directory_iterator(dir / "a" / "tables"))
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / "tables" / e.path().filename())) << e.path();
  EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "b" / "report.json"));
  std::filesystem::remove_all(dir);
}
