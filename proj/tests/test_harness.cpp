#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "interpdim/experiment_config.hpp"
#include "interpdim/harness.hpp"
#include "interpdim/report_io.hpp"
#include "test_support.hpp"

using namespace interpdim;
using interpdim::testing::as_condition_data;
using interpdim::testing::kind_of;
using interpdim::testing::make_planted_condition;
using interpdim::testing::TempDir;

namespace {

ExperimentConfig config_with(std::vector<ModelKind> models) {
  ExperimentConfig cfg;
  cfg.models = std::move(models);
  return cfg;
}

std::string ratings_csv(const RatingDataset& ds) {
  std::string out = "word,rating\n";
  for (const auto& r : ds.rows) out += r.word + "," + text::format_double(r.gold) + "\n";
  return out;
}

std::string seeds_csv(const SeedLexicon& lex) {
  std::string out = "negative,positive\n";
  for (const auto& p : lex.pairs) out += p.negative + "," + p.positive + "\n";
  return out;
}

RunRecord ok_record(ModelKind m, const std::string& cond, double r, double e) {
  RunRecord rec;
  rec.model = m;
  rec.condition = cond;
  rec.r_plus_acc = r;
  rec.mse = e;
  rec.ok = true;
  return rec;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("model kind names round-trip") {
  for (ModelKind k : {ModelKind::Seed, ModelKind::Fit, ModelKind::FitSW, ModelKind::FitSD, ModelKind::FitS,
                      ModelKind::Freq, ModelKind::Random}) {
    CHECK(parse_model_kind(to_string(k)) == k);
  }
  CHECK(parse_model_kind("fit+s") == ModelKind::FitS);
  CHECK_FALSE(parse_model_kind("bogus"));
  CHECK(needs_calibration(ModelKind::Seed));
  CHECK_FALSE(needs_calibration(ModelKind::FitS));
}

TEST_CASE("one model yields k times seeds run records") {
  const auto pc = make_planted_condition(1, 40, 50, 3, 0.3);
  const auto data = as_condition_data(pc);
  const auto cfg = config_with({ModelKind::Fit});
  const auto records = run_condition(cfg, data, pc.store, nullptr);
  REQUIRE(records.size() == 15);
  std::map<std::pair<std::uint64_t, std::size_t>, int> seen;
  for (const auto& r : records) {
    CHECK(r.ok);
    CHECK(r.n_train + r.n_test == 40);
    CHECK(r.train_loss.has_value());
    ++seen[{r.rng_seed, r.fold}];
  }
  CHECK(seen.size() == 15);
}

TEST_CASE("SEED results do not depend on the rng seed") {
  const auto pc = make_planted_condition(2, 30, 5, 3, 0.3);
  const auto records = run_condition(config_with({ModelKind::Seed}), as_condition_data(pc), pc.store, nullptr);
  REQUIRE(records.size() == 15);
  for (std::size_t fold = 0; fold < 5; ++fold) {
    const auto& a = records[fold];
    for (std::size_t s = 1; s < 3; ++s) {
      const auto& b = records[s * 5 + fold];
      CHECK(b.fold == a.fold);
      CHECK(b.r_plus_acc == a.r_plus_acc);
      CHECK(b.mse == a.mse);
    }
  }
}

TEST_CASE("parallel execution matches serial") {
  const auto pc = make_planted_condition(3, 30, 40, 3, 0.3);
  const auto data = as_condition_data(pc);
  const auto cfg = config_with({ModelKind::Seed, ModelKind::Fit, ModelKind::FitS, ModelKind::Random});
  const auto serial = run_condition(cfg, data, pc.store, nullptr, 1);
  const auto parallel = run_condition(cfg, data, pc.store, nullptr, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].model == parallel[i].model);
    CHECK(serial[i].r_plus_acc == parallel[i].r_plus_acc);
    CHECK(serial[i].mse == parallel[i].mse);
  }
}

TEST_CASE("planted signal is recovered above chance") {
  const auto pc = make_planted_condition(4, 60, 70, 4, 0.2);
  const auto records =
      run_condition(config_with({ModelKind::Seed, ModelKind::FitS}), as_condition_data(pc), pc.store, nullptr);
  const auto report = aggregate(records);
  CHECK(report.find(ModelKind::Seed, pc.dataset.condition.name())->mean_r_plus_acc > 0.7);
  CHECK(report.find(ModelKind::FitS, pc.dataset.condition.name())->mean_r_plus_acc > 0.7);
}

TEST_CASE("RANDOM averages close to one half") {
  const auto pc = make_planted_condition(5, 50, 3, 2, 0.3);
  ExperimentConfig cfg = config_with({ModelKind::Random});
  cfg.rng_seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) cfg.rng_seeds.push_back(s);
  const auto report = aggregate(run_condition(cfg, as_condition_data(pc), pc.store, nullptr));
  const double m = report.global.front().mean_r_plus_acc;
  CHECK(m > 0.47);
  CHECK(m < 0.53);
}

TEST_CASE("FREQ uses the table and is calibrated") {
  const auto pc = make_planted_condition(6, 25, 4, 2, 0.3);
  FrequencyTable table;
  for (const auto& r : pc.dataset.rows) table.set(r.word, std::exp(r.gold + 5.0));
  const auto data = as_condition_data(pc);
  const auto plan = make_folds(25, 5, 0);
  const auto out = run_fold(ModelKind::Freq, data, pc.store, &table, plan.train_indices(0), plan.test_indices(0),
                            FitConfig{}, 0);
  CHECK(out.r_plus_acc == 1.0);
  REQUIRE(out.calibration);
  CHECK(out.calibration->slope == Catch::Approx(1.0));
  CHECK(out.mse == Catch::Approx(0.0).margin(1e-12));
  CHECK(kind_of([&] {
          run_fold(ModelKind::Freq, data, pc.store, nullptr, plan.train_indices(0), plan.test_indices(0), FitConfig{}, 0);
        }) == ErrorKind::InvalidConfig);
}

TEST_CASE("test golds never influence training or calibration") {
  const auto pc = make_planted_condition(7, 30, 40, 3, 0.3);
  const auto data = as_condition_data(pc);
  const auto plan = make_folds(30, 5, 1);
  const auto train = plan.train_indices(2);
  const auto test = plan.test_indices(2);
  for (ModelKind kind : {ModelKind::Seed, ModelKind::Fit, ModelKind::FitSW, ModelKind::FitSD, ModelKind::FitS,
                         ModelKind::Random}) {
    auto perturbed = data;
    for (std::size_t t : test) perturbed.dataset.rows[t].gold += 100.0;
    const auto a = run_fold(kind, data, pc.store, nullptr, train, test, default_fit_config(ModelTag::FitS), 9);
    const auto b = run_fold(kind, perturbed, pc.store, nullptr, train, test, default_fit_config(ModelTag::FitS), 9);
    INFO(to_string(kind));
    CHECK(a.predictions == b.predictions);
    if (a.calibration) {
      CHECK(a.calibration->slope == b.calibration->slope);
      CHECK(a.calibration->intercept == b.calibration->intercept);
    }
  }
}

TEST_CASE("a failing model records an error and siblings continue") {
  const auto pc = make_planted_condition(8, 20, 20, 2, 0.3);
  auto data = as_condition_data(pc);
  data.lexicon.reset();
  const auto records = run_condition(config_with({ModelKind::Fit, ModelKind::Seed}), data, pc.store, nullptr);
  REQUIRE(records.size() == 30);
  for (const auto& r : records) {
    if (r.model == ModelKind::Fit) {
      CHECK(r.ok);
    } else {
      CHECK_FALSE(r.ok);
      CHECK(r.error.find("seed lexicon") != std::string::npos);
    }
  }
  const auto report = aggregate(records);
  CHECK(report.find(ModelKind::Seed, data.name)->errors == 15);
  CHECK(report.find(ModelKind::Fit, data.name)->runs == 15);
}

TEST_CASE("too few rows for k folds") {
  const auto pc = make_planted_condition(9, 4, 3, 2, 0.3);
  CHECK(kind_of([&] { run_condition(config_with({ModelKind::Fit}), as_condition_data(pc), pc.store, nullptr); }) ==
        ErrorKind::TooFewRows);
}

TEST_CASE("aggregate: mean, median and standard error") {
  std::vector<RunRecord> rs{ok_record(ModelKind::Fit, "c", 0.6, 1.0), ok_record(ModelKind::Fit, "c", 0.8, 2.0),
                            ok_record(ModelKind::Fit, "c", 0.7, 1000.0)};
  rs.pop_back();
  auto two = aggregate(rs);
  CHECK(two.per_condition.front().mean_r_plus_acc == Catch::Approx(0.7));
  CHECK(two.per_condition.front().stderr_r_plus_acc == Catch::Approx(std::sqrt(0.02) / std::sqrt(2.0)));

  rs.push_back(ok_record(ModelKind::Fit, "c", 0.7, 1000.0));
  const auto three = aggregate(rs);
  CHECK(three.per_condition.front().median_mse == 2.0);
  // A single condition: global equals the per-condition summary.
  const auto& g = three.global.front();
  const auto& s = three.per_condition.front();
  CHECK(g.conditions == 1);
  CHECK(g.mean_r_plus_acc == s.mean_r_plus_acc);
  CHECK(g.median_mse == s.median_mse);
  CHECK(g.stderr_r_plus_acc == s.stderr_r_plus_acc);
}

TEST_CASE("aggregate: global averages over conditions") {
  std::vector<RunRecord> rs{ok_record(ModelKind::Seed, "a", 0.6, 1.0), ok_record(ModelKind::Seed, "a", 0.6, 3.0),
                            ok_record(ModelKind::Seed, "b", 0.9, 10.0)};
  RunRecord bad;
  bad.model = ModelKind::Seed;
  bad.condition = "b";
  bad.error = "boom";
  rs.push_back(bad);
  const auto report = aggregate(rs);
  CHECK(report.find(ModelKind::Seed, "b")->errors == 1);
  CHECK(report.find(ModelKind::Seed)->mean_r_plus_acc == Catch::Approx(0.75));
  CHECK(report.find(ModelKind::Seed)->median_mse == Catch::Approx((2.0 + 10.0) / 2.0));
  CHECK(report.conditions() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("stats helpers") {
  const std::vector<double> xs{1, 2, 3, 4};
  CHECK(stats::mean(xs) == 2.5);
  CHECK(stats::median(xs) == 2.5);
  CHECK(stats::median({1, 2, 1000}) == 2.0);
  CHECK(stats::sample_std(xs) == Catch::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(stats::standard_error(xs) == Catch::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(std::isnan(stats::mean({})));
}

TEST_CASE("scramble diagnostic overfits when dimensions outnumber words") {
  const auto pc = make_planted_condition(10, 10, 50, 2, 0.3);
  auto cfg = config_with({ModelKind::Fit});
  const auto data = as_condition_data(pc);
  const auto d = run_scramble_diagnostic(cfg, data, pc.store);
  CHECK(d.train_loss_real < 1e-6);
  CHECK(d.train_loss_scrambled < 1e-6);
  CHECK_FALSE(d.real.degenerate);
  CHECK_FALSE(d.scrambled.degenerate);
  CHECK(d.scrambled.gold_scale_loss < 1e-3);
  const auto again = run_scramble_diagnostic(cfg, data, pc.store);
  CHECK(again.train_loss_scrambled == d.train_loss_scrambled);
}

TEST_CASE("scramble diagnostic cannot fit one dimension") {
  const auto pc = make_planted_condition(11, 50, 1, 2, 0.3);
  const auto d = run_scramble_diagnostic(config_with({ModelKind::Fit}), as_condition_data(pc), pc.store);
  // The one-dimensional fit either collapses or leaves a large residual in gold units.
  CHECK((d.scrambled.degenerate || d.scrambled.gold_scale_loss > 1e-6));
  CHECK(kind_of([&] { run_scramble_diagnostic(config_with({ModelKind::Seed}), as_condition_data(pc), pc.store); }) ==
        ErrorKind::InvalidConfig);
}

TEST_CASE("config parsing") {
  const auto doc = nlohmann::json::parse(R"({
    "embeddings": "emb.txt",
    "models": ["seed", "fit+s", "random"],
    "k": 4, "rng_seeds": [7],
    "fit": {"defaults": {"learning_rate": 0.02}, "fit+s": {"alpha": 0.3, "jitter": [0.0, 0.01]}},
    "conditions": [{"category": "animals", "property": "size", "ratings": "r.csv", "seeds": "/abs/s.csv"}]
  })");
  const auto cfg = experiment_config_from_json(doc, "/base");
  CHECK(cfg.embeddings == std::filesystem::path("/base/emb.txt"));
  CHECK(cfg.models == std::vector<ModelKind>{ModelKind::Seed, ModelKind::FitS, ModelKind::Random});
  CHECK(cfg.k == 4);
  CHECK(cfg.rng_seeds == std::vector<std::uint64_t>{7});
  CHECK(cfg.fit_config(ModelKind::FitS).alpha == 0.3);
  CHECK(cfg.fit_config(ModelKind::FitS).learning_rate == 0.02);
  CHECK(cfg.fit_config(ModelKind::FitS).jitter_hi == 0.01);
  CHECK(cfg.fit_config(ModelKind::FitSD).alpha == 0.02);
  CHECK(cfg.fit_config(ModelKind::Fit).learning_rate == 0.02);
  REQUIRE(cfg.conditions.size() == 1);
  CHECK(cfg.conditions[0].name == "animals/size");
  CHECK(cfg.conditions[0].ratings == std::filesystem::path("/base/r.csv"));
  CHECK(cfg.conditions[0].seeds == std::filesystem::path("/abs/s.csv"));
}

TEST_CASE("config errors name the offending location") {
  const auto message = [](const char* json) -> std::string {
    try {
      experiment_config_from_json(nlohmann::json::parse(json));
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidConfig);
      return e.what();
    }
    return "";
  };
  CHECK(message(R"({"embeddings": "e", "conditions": [{"ratings": "r"}], "bogus": 1})").find("/bogus") !=
        std::string::npos);
  CHECK(message(R"({"embeddings": "e", "conditions": [{"ratings": "r"}], "models": ["nope"]})").find("/models/0") !=
        std::string::npos);
  CHECK(message(R"({"embeddings": "e", "conditions": []})").find("/conditions") != std::string::npos);
  CHECK(message(R"({"embeddings": "e", "conditions": [{"ratings": "r"}], "k": 1})").find("/k") !=
        std::string::npos);
  CHECK(message(R"({"embeddings": "e", "conditions": [{"ratings": "r"}], "fit": {"fit": {"alpha": 2}}})")
            .find("/fit/fit") != std::string::npos);
  CHECK(message(R"({"conditions": [{"ratings": "r"}]})").find("/embeddings") != std::string::npos);

  TempDir dir;
  const auto path = dir.write("bad.json", "{\"embeddings\": ");
  CHECK(kind_of([&] { load_experiment_config(path); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("end-to-end experiment from files") {
  const auto pc = make_planted_condition(12, 30, 40, 3, 0.3);
  TempDir dir;
  dir.write("emb.txt", format_embeddings(pc.store));
  dir.write("r.csv", ratings_csv(pc.dataset) + "unknownword,1.0\n");
  dir.write("s.csv", seeds_csv(pc.lexicon));
  dir.write("broken.csv", "word,rating\nw0,abc\n");
  dir.write("config.json", R"({
    "embeddings": "emb.txt",
    "models": ["seed", "fit", "fit+s", "random"],
    "scramble_diagnostic": true,
    "conditions": [
      {"name": "good", "ratings": "r.csv", "seeds": "s.csv"},
      {"name": "broken", "ratings": "broken.csv", "seeds": "s.csv"}
    ]
  })");
  const auto cfg = load_experiment_config(dir.path() / "config.json");
  const auto result = run_experiment(cfg, 2);
  const auto& report = result.report;
  CHECK(report.runs.size() == 2 * 15 * 4);
  CHECK(report.find(ModelKind::Fit, "good")->runs == 15);
  CHECK(report.find(ModelKind::Fit, "broken")->errors == 15);
  CHECK(report.find(ModelKind::Fit)->conditions == 1);
  REQUIRE(result.scramble.size() == 1);
  CHECK(result.scramble[0].condition == "good");
  bool dropped_warning = false;
  for (const auto& w : result.warnings) dropped_warning = dropped_warning || w.find("dropped 1") != std::string::npos;
  CHECK(dropped_warning);

  const auto runs = runs_csv(report);
  CHECK(count_lines(runs) == 1 + 120);
  CHECK(runs.rfind("model,condition,rng_seed,fold,", 0) == 0);
  const auto summary = summary_csv(report);
  CHECK(count_lines(summary) == 1 + 8 + 4);
  CHECK(summary.find("global,FIT_S,,") != std::string::npos);
  const auto j = report_to_json(result);
  CHECK(j["runs"].size() == 120);
  CHECK(j["global"].size() == 4);
  CHECK(j["scramble_diagnostic"].size() == 1);
}

TEST_CASE("missing embeddings file aborts the experiment") {
  ExperimentConfig cfg;
  cfg.embeddings = "/nonexistent/embeddings.txt";
  cfg.conditions.push_back({"c", {}, "/nonexistent/r.csv", std::nullopt});
  CHECK(kind_of([&] { run_experiment(cfg); }) == ErrorKind::Io);
}

TEST_CASE("csv fields with commas are quoted") {
  RunRecord rec;
  rec.model = ModelKind::Fit;
  rec.condition = "a,b";
  rec.error = "said \"no\"";
  EvalReport report;
  report.runs.push_back(rec);
  const auto csv = runs_csv(report);
  CHECK(csv.find("\"a,b\"") != std::string::npos);
  CHECK(csv.find("\"said \"\"no\"\"\"") != std::string::npos);
}
