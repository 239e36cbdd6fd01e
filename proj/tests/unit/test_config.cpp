#include "ultracarl/config.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace ultracarl;

namespace {

const char* kBase = R"([run]
command = verify-boundary
seed = 4

[domain]
kind = ball
m = 1
n = 2
T = 3
center = 0, 0
radius = 1

[carleman]
a = 9
delta = 0.1

[field]
family = bump
)";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ParsesDefaults) {
  const auto cfg = parse_config(kBase);
  EXPECT_EQ(cfg.command, "verify-boundary");
  EXPECT_EQ(cfg.seed, 4u);
  EXPECT_EQ(cfg.suite_size, 20u);
  EXPECT_EQ(cfg.safety, 0.1);
  EXPECT_EQ(cfg.Cprime, 1.0);
  EXPECT_FALSE(cfg.C);
  EXPECT_EQ(cfg.time_cells, 32);
  EXPECT_EQ(cfg.workers, 1u);
  ASSERT_TRUE(cfg.domain);
  EXPECT_EQ(cfg.domain->sig.n(), 2);
  EXPECT_EQ(*cfg.a, 9.0);
  EXPECT_EQ(*cfg.delta, 0.1);
  EXPECT_EQ(cfg.family, "bump");
}

TEST(Config, CommandLineOverrides) {
  const auto cfg = parse_config(kBase, std::string("verify-interior"), 99);
  EXPECT_EQ(cfg.command, "verify-interior");
  EXPECT_EQ(cfg.seed, 99u);
}

TEST(Config, UnknownKeyReportsPosition) {
  std::string text = kBase;
  text += "colour = red\n";
  const auto msg = error_of(text);
  EXPECT_NE(msg.find("line 19, column 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("unknown key 'colour'"), std::string::npos) << msg;
}

TEST(Config, MalformedNumberReportsValueColumn) {
  std::string text = kBase;
  text.replace(text.find("T = 3"), 5, "T = 3x");
  const auto msg = error_of(text);
  EXPECT_NE(msg.find("line 9, column 5"), std::string::npos) << msg;
}

TEST(Config, StructuralErrors) {
  EXPECT_NE(error_of("[nope]\n").find("unknown section"), std::string::npos);
  EXPECT_NE(error_of("x = 1\n").find("outside of any section"), std::string::npos);
  EXPECT_NE(error_of("[run]\ncommand = fly\n").find("unknown command"), std::string::npos);
  EXPECT_NE(error_of("[run]\nseed = 1\nseed = 2\n").find("duplicate key"), std::string::npos);
  EXPECT_NE(error_of("[run]\ncommand = verify-boundary\n").find("requires a [domain]"), std::string::npos);
  EXPECT_NE(error_of("[run]\n").find("no command"), std::string::npos);
}

TEST(Config, CarlemanConsistency) {
  std::string both = kBase;
  both.replace(both.find("delta = 0.1"), 11, "delta = 0.1\nb = 0.1");
  EXPECT_NE(error_of(both).find("either delta"), std::string::npos);
  std::string none = kBase;
  none.replace(none.find("delta = 0.1"), 11, "b = 0.1");
  EXPECT_NE(error_of(none).find("needs delta"), std::string::npos);
  std::string autoa = kBase;
  autoa.replace(autoa.find("a = 9"), 5, "a = auto");
  EXPECT_TRUE(parse_config(autoa).a_auto);
}

TEST(Config, ValueRanges) {
  auto with = [](const std::string& extra) { return std::string(kBase) + "[grid]\n" + extra + "\n"; };
  EXPECT_NE(error_of(with("time_cells = 0")).find("time_cells"), std::string::npos);
  std::string fam = kBase;
  fam.replace(fam.find("family = bump"), 13, "family = noise");
  EXPECT_NE(error_of(fam).find("unknown field family"), std::string::npos);
  std::string safety = kBase;
  safety.replace(safety.find("seed = 4"), 8, "seed = 4\nsafety = 2");
  EXPECT_NE(error_of(safety).find("safety"), std::string::npos);
}

TEST(Config, FnvKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

TEST(Config, HashIgnoresWorkersOutAndLayout) {
  const auto h = config_hash(parse_config(kBase));
  EXPECT_EQ(h.size(), 16u);
  std::string extra = kBase;
  extra.replace(extra.find("seed = 4"), 8, "seed = 4\nworkers = 8\nout = elsewhere");
  EXPECT_EQ(config_hash(parse_config(extra)), h);
  std::string spaced = kBase;
  spaced.replace(spaced.find("a = 9"), 5, "a   =   9   ");
  spaced = "# comment\n\n" + spaced;
  EXPECT_EQ(config_hash(parse_config(spaced)), h);
  EXPECT_NE(config_hash(parse_config(kBase, std::nullopt, 5)), h);
  std::string changed = kBase;
  changed.replace(changed.find("a = 9"), 5, "a = 10");
  EXPECT_NE(config_hash(parse_config(changed)), h);
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"verify-boundary", "verify-interior", "weight-check", "regions", "absorption",
                           "uniqueness-demo", "fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig2c"}) {
    std::ifstream in(std::string(ULTRACARL_SOURCE_DIR) + "/configs/" + name + ".ini");
    ASSERT_TRUE(in) << name;
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_NO_THROW(parse_config(ss.str())) << name;
  }
}
