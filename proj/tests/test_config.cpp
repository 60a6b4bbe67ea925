#include <gtest/gtest.h>

#include "printers.hpp"

#include "moco/config.hpp"
#include "moco/error.hpp"

using namespace moco;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EmptyTextKeepsDefaults) {
  const Config c = parse_config("");
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.data.dim, SyntheticConfig{}.dim);
  EXPECT_EQ(c.spec.cases, 25u);
  EXPECT_DOUBLE_EQ(c.spec.epsilons.l1, 20.0);
}

TEST(Config, SectionsCommentsQuotesAndLists) {
  const Config c = parse_config(R"(
seed = 7   # trailing comment
out = "runs/a b"
[data]
dim = 64
spread = 0.25
[model]
hidden = [16, 8]
[experiment]
norms = linf, l1
settings = [A, C]
aux_counts = 0, 10
linear = true
[ea]
control_step = gradient
)");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.out, "runs/a b");
  EXPECT_EQ(c.data.dim, 64u);
  EXPECT_DOUBLE_EQ(c.data.spread, 0.25);
  EXPECT_EQ(c.hidden, (std::vector<std::size_t>{16, 8}));
  EXPECT_EQ(c.spec.norms, (std::vector<Norm>{Norm::Linf, Norm::L1}));
  EXPECT_EQ(c.spec.settings, (std::vector<Setting>{Setting::A, Setting::C}));
  EXPECT_EQ(c.spec.aux_counts, (std::vector<std::size_t>{0, 10}));
  EXPECT_TRUE(c.spec.linear);
  EXPECT_TRUE(c.norms_given);
  EXPECT_EQ(c.spec.control_step, ControlStep::Gradient);
}

TEST(Config, UnknownKeyNamesKeyAndLine) {
  const std::string msg = error_of("seed = 1\n[data]\ndimm = 4\n");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("data.dimm"), std::string::npos) << msg;
}

TEST(Config, MalformedValuesAreRejected) {
  EXPECT_NE(error_of("seed = -1").find("seed"), std::string::npos);
  EXPECT_NE(error_of("[budget]\nl2 = abc").find("budget.l2"), std::string::npos);
  EXPECT_NE(error_of("[budget]\nl2 = inf").find("finite"), std::string::npos);
  EXPECT_NE(error_of("[experiment]\nnorms = l3").find("linf, l2 or l1"), std::string::npos);
  EXPECT_NE(error_of("[experiment]\nlinear = yes").find("true or false"), std::string::npos);
  EXPECT_NE(error_of("just a line").find("expected key = value"), std::string::npos);
}

TEST(Config, ApplySettingOverridesOneKey) {
  Config c;
  apply_setting(c, "ea.population", "12");
  apply_setting(c, "budget.linf", "0.1");
  EXPECT_EQ(c.spec.population, 12);
  EXPECT_DOUBLE_EQ(c.spec.epsilons.linf, 0.1);
  EXPECT_THROW(apply_setting(c, "nope", "1"), FormatError);
}

TEST(Config, KeysAreSortedAndComplete) {
  const auto keys = config_keys();
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  for (const char* k : {"seed", "threads", "data.dim", "budget.l1", "ea.quantization_levels", "curve.iterations"}) {
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
  }
}

TEST(Config, MissingFileIsFormatError) { EXPECT_THROW(load_config("/nonexistent/moco.toml"), FormatError); }
