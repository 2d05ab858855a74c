#include <gtest/gtest.h>

#include "rsrf/config.hpp"
#include "rsrf/experiment.hpp"
#include "rsrf/model_io.hpp"

using namespace rsrf;

TEST(ConfigFile, ParsesSectionsAndTypes) {
  const auto cfg = ConfigFile::parse(
      "# comment\n"
      "[model]\n"
      "dim = 3\n"
      "noise_scale = 0.25  # trailing comment\n"
      "\n"
      "[experiment]\n"
      "n_schedule = 100 200 400\n",
      "test.cfg");
  EXPECT_EQ(cfg.get_int("model", "dim"), 3);
  EXPECT_DOUBLE_EQ(cfg.get_double("model", "noise_scale"), 0.25);
  EXPECT_EQ(cfg.get_int_list("experiment", "n_schedule").size(), 3u);
  EXPECT_FALSE(cfg.has("model", "missing"));
}

TEST(ConfigFile, ErrorsAreLinePrecise) {
  try {
    ConfigFile::parse("[model]\ndim = 3\nbroken line\n", "bad.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.cfg:3"), std::string::npos);
  }
  EXPECT_THROW(ConfigFile::parse("[unclosed\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(ConfigFile::parse("[m]\nx = abc\n").get_double("m", "x"),
               ConfigError);
}

TEST(ConfigFile, ModelAndSplitterSpecs) {
  const auto cfg = ConfigFile::parse(
      "[model]\n"
      "dim = 4\n"
      "regression = additive\n"
      "intercept = 0.5\n"
      "components = 0:linear:1.0 2:sine:0.25\n"
      "noise = uniform\n"
      "noise_scale = 0.1\n"
      "[splitter]\n"
      "kind = extratrees\n"
      "nsplit = 12\n");
  const auto model = model_from_config(cfg);
  EXPECT_EQ(model.dim(), 4u);
  EXPECT_TRUE(model.has_exact_rect_moments());
  const auto splitter = splitter_from_config(cfg);
  EXPECT_EQ(splitter_name(splitter), "extratrees(nsplit=12)");
  EXPECT_THROW(
      model_from_config(ConfigFile::parse("[model]\nregression = nope\n")),
      ConfigError);
  EXPECT_THROW(
      splitter_from_config(ConfigFile::parse("[splitter]\nkind = nope\n")),
      ConfigError);
}

TEST(DepthRule, EvenAndGrowing) {
  EXPECT_EQ(even_depth_for(500, 0.2), 2);
  EXPECT_EQ(even_depth_for(8000, 0.2), 4);
  EXPECT_EQ(even_depth_for(2, 0.2), 2);
  for (std::size_t n : {100u, 1000u, 10000u, 100000u}) {
    const int k = even_depth_for(n, 0.2);
    EXPECT_EQ(k % 2, 0);
    EXPECT_GE(k, 0.2 * std::log2(static_cast<double>(n)) - 1e-9);
  }
}

TEST(ExperimentConfig, ValidatesFields) {
  const auto cfg = ConfigFile::parse(
      "[experiment]\n"
      "n_schedule = 100 200\n"
      "n_trees = 4\n"
      "depth_c = 0.2\n"
      "test_size = 50\n"
      "seeds = 1 2\n");
  const auto exp = experiment_from_config(cfg);
  EXPECT_EQ(exp.n_schedule.size(), 2u);
  EXPECT_EQ(exp.seeds.size(), 2u);
  EXPECT_THROW(experiment_from_config(ConfigFile::parse(
                   "[experiment]\nn_schedule = 100\ndepth_c = 0.3\nseeds = 1\n")),
               ConfigError);
}

TEST(Experiment, RowsAreDeterministicAndScheduleOrdered) {
  const PopulationModel model(3, RegressionFunction::example_interaction(),
                              {NoiseSpec::Kind::kGaussian, 0.1});
  ExperimentConfig config;
  config.n_schedule = {60, 120};
  config.n_trees = 2;
  config.test_size = 40;
  config.seeds = {1, 2};
  const auto rows_a =
      run_experiment(model, ExtraTreesConfig{4}, config, 1, true);
  const auto rows_b =
      run_experiment(model, ExtraTreesConfig{4}, config, 2, true);
  EXPECT_EQ(to_csv(rows_a), to_csv(rows_b));
  ASSERT_EQ(rows_a.size(), 4u);
  EXPECT_EQ(rows_a[0].n, 60u);
  EXPECT_EQ(rows_a[1].n, 120u);
  EXPECT_EQ(rows_a[0].seed, 1u);
  EXPECT_EQ(rows_a[3].seed, 2u);
  const std::string csv = to_csv(rows_a);
  EXPECT_EQ(csv.rfind("seed,n,splitter,k,n_trees,train_mse,test_mse,wall_time_ms\n", 0),
            0u);
}

TEST(Experiment, NoiselessDeepCartInterpolates) {
  const auto additive = RegressionFunction::additive(
      0.0, {{0, ComponentShape::kLinear, 1.0}, {1, ComponentShape::kSine, 0.5}});
  const PopulationModel model(2, additive, {});
  ExperimentConfig config;
  config.n_schedule = {2000};
  config.n_trees = 1;
  config.fixed_depth = 14;
  config.test_size = 10;
  config.seeds = {3};
  const auto rows = run_experiment(model, CartConfig{}, config, 1, true);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_LT(rows[0].train_mse, 1e-3);
}

TEST(ModelIo, RoundTripPreservesPredictions) {
  RandomStream stream(90);
  std::vector<double> xs(300 * 3), ys(300);
  for (auto& v : xs) v = stream.uniform01();
  for (auto& v : ys) v = stream.normal();
  const Dataset data(std::move(xs), std::move(ys), 3);
  for (const SplitterConfig& splitter :
       {SplitterConfig{CartConfig{}}, SplitterConfig{ObliqueConfig{6}},
        SplitterConfig{InteractionForestConfig{3}},
        SplitterConfig{RsrfConfig{3}}}) {
    GrowConfig config{2, 1, splitter, std::nullopt};
    const Forest forest = fit_forest(data, config, 3, 17);
    const auto json = forest_to_json(forest, 3);
    const Forest loaded = forest_from_json(json);
    std::vector<double> x(3);
    for (int i = 0; i < 200; ++i) {
      for (auto& v : x) v = stream.uniform01();
      EXPECT_EQ(forest.predict(x), loaded.predict(x))
          << splitter_name(splitter);
    }
  }
}

TEST(ModelIo, RejectsForeignFiles) {
  nlohmann::json j;
  j["format"] = "something-else";
  j["version"] = 1;
  EXPECT_THROW(forest_from_json(j), std::runtime_error);
}

TEST(Csv, FloatFormattingRoundTrips) {
  for (double v : {0.1, 13.0 / 144.0, 1e-17, 123456.789, 0.0}) {
    const std::string s = format_double(v);
    EXPECT_EQ(std::stod(s), v);
  }
}
