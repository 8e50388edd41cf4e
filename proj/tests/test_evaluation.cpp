#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "common/error.hpp"
#include "eval/gbdt.hpp"
#include "eval/harness.hpp"
#include "eval/image_model.hpp"
#include "eval/metrics.hpp"
#include "eval/tsne.hpp"
#include "nn/layers.hpp"
#include "oracles.hpp"
#include "test_support.hpp"
#include "toy/toy.hpp"

using namespace hybridsynth;
using namespace hybridsynth::eval;

namespace {

toy::ToyCorpus make_toy(int n, std::uint64_t seed, int size = 16) {
  toy::ToySpec spec;
  spec.n = n;
  spec.image_size = size;
  spec.missing_rate = 0.0;
  spec.seed = seed;
  return toy::generate_toy_hybrid(spec);
}

EvalDataset dataset(std::string name, DataRole role, const toy::ToyCorpus& t, std::size_t begin,
                    std::size_t end) {
  EvalDataset d;
  d.name = std::move(name);
  d.role = role;
  d.schema = t.corpus.schema;
  d.records.assign(t.corpus.records.begin() + begin, t.corpus.records.begin() + end);
  return d;
}

EvalConfig quick_config() {
  EvalConfig c = EvalConfig::desk();
  c.tree.boost_rounds = 60;
  c.tree.early_stopping_rounds = 20;
  c.image.max_epochs = 6;
  c.image.patience = 3;
  c.repeats = 2;
  return c;
}

std::vector<std::array<double, 2>> cloud(std::size_t n, double cx, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<std::array<double, 2>> pts(n);
  for (auto& p : pts) p = {cx + d(rng), d(rng)};
  return pts;
}

}  // namespace

TEST_CASE("auroc worked examples") {
  CHECK(auroc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == 0.75);
  CHECK(oracle::pairwise_auroc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == 0.75);
  CHECK(auroc({0.1, 0.2, 0.7, 0.9}, {0, 0, 1, 1}) == 1.0);
  CHECK(auroc({0.3, 0.3, 0.3, 0.3}, {0, 1, 0, 1}) == 0.5);
  CHECK_THROWS_AS(auroc({0.1, 0.2}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(auroc({0.1, 0.2}, {0}), std::invalid_argument);
}

TEST_CASE("auroc equals pair counting on random tied instances") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 7) / 7.0;  // few distinct values, many ties
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    const double a = auroc(s, y);
    CHECK(a == oracle::pairwise_auroc(s, y));

    std::vector<int> flipped(n);
    for (int i = 0; i < n; ++i) flipped[i] = 1 - y[i];
    CHECK(a + auroc(s, flipped) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> warped(n);
    for (int i = 0; i < n; ++i) warped[i] = std::exp(3 * s[i]) - 5;
    CHECK(auroc(warped, y) == a);
  }
}

TEST_CASE("mae arithmetic and invariances") {
  CHECK(mae({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(mae({1, 2}, {2, 4}) == 1.5);
  CHECK_THROWS_AS(mae({1, 2}, {1}), std::invalid_argument);
  CHECK(mae({1.5, -2, 7}, {0, 1, 2}) == doctest::Approx(mae({11.5, 8, 17}, {10, 11, 12})));

  // A constant predictor at the mean scores the mean absolute deviation.
  const auto t = make_toy(300, 5);
  std::vector<double> score;
  for (const auto& r : t.corpus.records) score.push_back(std::get<double>(r.clinical.at(toy::kSizeScore)));
  double m = 0;
  for (double v : score) m += v / score.size();
  double mad = 0;
  for (double v : score) mad += std::abs(v - m) / score.size();
  CHECK(mae(std::vector<double>(score.size(), m), score) == doctest::Approx(mad).epsilon(1e-12));
}

TEST_CASE("Student-t confidence intervals") {
  const auto flat = confidence_interval({0.7, 0.7, 0.7});
  CHECK(flat.first == doctest::Approx(0.7));
  CHECK(flat.second == doctest::Approx(0.7));

  // t_{1, 0.975} = 12.706 from tables; s = 0.7071 for [0, 1]
  const auto ci = confidence_interval({0.0, 1.0}, 0.95);
  const double half = 12.706 * (std::sqrt(0.5) / std::sqrt(2.0));
  CHECK((ci.first + ci.second) / 2 == doctest::Approx(0.5));
  CHECK((ci.second - ci.first) / 2 == doctest::Approx(half).epsilon(1e-4));
  CHECK(half == doctest::Approx(6.353).epsilon(1e-3));

  // t_{4, 0.975} = 2.776
  const std::vector<double> five{0.6, 0.7, 0.65, 0.8, 0.75};
  const auto ci5 = confidence_interval(five, 0.95);
  CHECK((ci5.second - ci5.first) / 2 ==
        doctest::Approx(2.776 * sample_sd(five) / std::sqrt(5.0)).epsilon(1e-3));

  const auto wide = confidence_interval(five, 0.99);
  CHECK(wide.first <= ci5.first);
  CHECK(wide.second >= ci5.second);
  CHECK_THROWS_AS(confidence_interval({1.0}), std::invalid_argument);
}

TEST_CASE("summaries keep the point inside the interval") {
  TaskSpec task{"y", TaskKind::Classification, FeatureSource::NonImage, {}, ""};
  const auto r = summarize("sds1", task, {0.61, 0.7, 0.66, 0.58, 0.72}, {1, 2, 3, 4, 5}, 0.95);
  CHECK(r.ci_low <= r.value);
  CHECK(r.value <= r.ci_high);
  CHECK(r.metric == "auroc");
  CHECK(r.seeds.size() == 5);
}

TEST_CASE("evaluation presets") {
  const auto p = EvalConfig::paper();
  CHECK(p.tree.goss);
  CHECK(p.tree.max_depth == 5);
  CHECK(p.tree.boost_rounds == 1000);
  CHECK(p.tree.early_stopping_rounds == 100);
  CHECK(p.image.arch == ImageArch::ResNet50);
  CHECK(p.image.max_epochs == 1000);
  CHECK(p.image.patience == 20);
  CHECK(p.image.batch_size == 20);
  CHECK(p.image.learning_rate == doctest::Approx(1e-4f));
  CHECK(p.image.augment);
  CHECK(p.repeats == 5);
  CHECK(p.ci_level == 0.95);

  const auto back = eval_config_from_json(to_json(EvalConfig::desk()));
  CHECK(back.image.arch == ImageArch::SmallCnn);
  CHECK(back.image.max_epochs == EvalConfig::desk().image.max_epochs);
  CHECK(eval_config_from_json({{"repeats", 3}}, p).tree.max_depth == 5);
}

TEST_CASE("image networks: 50-layer residual net size and output shapes") {
  Rng rng(1);
  auto resnet = build_image_model(ImageArch::ResNet50, rng);
  // torchvision resnet50 (25,557,032) with a 1-channel stem and a 1-unit head
  CHECK(nn::parameter_count(*resnet) == 23503809);

  auto small = build_image_model(ImageArch::SmallCnn, rng);
  nn::Tensor x({3, 1, 32, 32});
  CHECK(small->infer(x).shape == std::vector<int>{3, 1});
  nn::Tensor big({1, 1, 64, 64});
  CHECK(resnet->infer(big).shape == std::vector<int>{1, 1});
}

TEST_CASE("random affine keeps size and identity parameters change nothing") {
  Rng rng(3);
  Image im(16, 16);
  for (std::size_t i = 0; i < im.pixels.size(); ++i) im.pixels[i] = std::sin(0.1f * i);
  AffineParams none;
  none.max_rotation_deg = 0;
  none.max_translate = 0;
  none.scale_min = none.scale_max = 1.0;
  const Image same = random_affine(im, none, rng);
  for (std::size_t i = 0; i < im.pixels.size(); ++i) CHECK(same.pixels[i] == doctest::Approx(im.pixels[i]).epsilon(1e-5));
  const Image moved = random_affine(im, AffineParams{}, rng);
  CHECK(moved.height == 16);
  CHECK(moved.width == 16);
}

TEST_CASE("boosted trees learn a planted rule") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> d(0, 1);
  auto make = [&](std::size_t n, FeatureMatrix& x, std::vector<double>& y) {
    x = FeatureMatrix(n, 3);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < 3; ++c) x.at(i, c) = d(rng);
      y[i] = x.at(i, 0) + 0.5 * x.at(i, 1) > 0 ? 1.0 : 0.0;
    }
  };
  FeatureMatrix xt, xv, xs;
  std::vector<double> yt, yv, ys;
  make(800, xt, yt);
  make(200, xv, yv);
  make(400, xs, ys);
  GbdtParams p;
  p.boost_rounds = 200;
  p.early_stopping_rounds = 30;
  const Gbdt model = Gbdt::train(xt, yt, p, 1, &xv, &yv);
  std::vector<int> labels(ys.begin(), ys.end());
  CHECK(auroc(model.predict(xs), labels) > 0.95);
  CHECK(model.trees() <= 200);

  p.objective = Objective::Regression;
  std::vector<double> target(800);
  for (std::size_t i = 0; i < 800; ++i) target[i] = 2 * xt.at(i, 2);
  const Gbdt reg = Gbdt::train(xt, target, p, 1);
  std::vector<double> truth(400);
  for (std::size_t i = 0; i < 400; ++i) truth[i] = 2 * xs.at(i, 2);
  CHECK(mae(reg.predict(xs), truth) < 0.3);
}

TEST_CASE("run_task never trains on test rows and reports one value per repeat") {
  const auto t = make_toy(240, 6);
  const EvalDataset train = dataset("pds", DataRole::Train, t, 0, 180);
  const EvalDataset test = dataset("test", DataRole::Test, t, 180, 240);
  const std::set<std::string> test_ids = [&] {
    std::set<std::string> s;
    for (const auto& r : test.records) s.insert(r.id);
    return s;
  }();

  for (FeatureSource source : {FeatureSource::NonImage, FeatureSource::Image}) {
    TaskSpec task{toy::kShadeClass, TaskKind::Classification, source, {"NA"}, ""};
    TrainingAudit audit;
    const auto r = run_task(train, test, task, quick_config(), repeat_seeds(5, 2), "pds", &audit);
    CHECK(r.repeat_values.size() == 2);
    CHECK(r.seeds.size() == 2);
    CHECK(r.metric == "auroc");
    CHECK_FALSE(audit.ids.empty());
    for (const auto& id : audit.ids) CHECK(test_ids.count(id) == 0);
  }

  // role tags are enforced both ways
  TaskSpec task{toy::kSizeScore, TaskKind::Regression, FeatureSource::NonImage, {}, ""};
  CHECK_THROWS_AS(run_once(test, test, task, quick_config(), 1), std::invalid_argument);
  CHECK_THROWS_AS(run_once(train, train, task, quick_config(), 1), std::invalid_argument);
  TaskSpec missing{"no_such_column", TaskKind::Regression, FeatureSource::NonImage, {}, ""};
  CHECK_THROWS(run_once(train, test, missing, quick_config(), 1));
}

TEST_CASE("image task picks up the planted brightness signal") {
  const auto t = make_toy(400, 8);
  const EvalDataset train = dataset("pds", DataRole::Train, t, 0, 300);
  const EvalDataset test = dataset("test", DataRole::Test, t, 300, 400);
  TaskSpec task{toy::kShadeClass, TaskKind::Classification, FeatureSource::Image, {}, ""};
  EvalConfig cfg = quick_config();
  cfg.image.max_epochs = 15;
  CHECK(run_once(train, test, task, cfg, 3) > 0.8);
}

TEST_CASE("degenerate training labels are refused") {
  auto t = make_toy(60, 9);
  for (auto& r : t.corpus.records) r.clinical[toy::kShadeClass] = std::string("dark");
  const EvalDataset train = dataset("pds", DataRole::Train, t, 0, 40);
  const EvalDataset test = dataset("test", DataRole::Test, make_toy(60, 10), 40, 60);
  TaskSpec task{toy::kShadeClass, TaskKind::Classification, FeatureSource::NonImage, {}, ""};
  CHECK_THROWS_AS(run_once(train, test, task, quick_config(), 1), DataError);
}

TEST_CASE("results CSV layout") {
  testing::TempDir dir("results");
  TaskSpec task{"Gender Concept Name", TaskKind::Classification, FeatureSource::Image, {"NA"}, ""};
  const auto r = summarize("uds1", task, {0.5, 0.55}, {11, 12}, 0.95);
  write_results_csv(dir.path() / "r.csv", {r});
  const std::string text = testing::slurp(dir.path() / "r.csv");
  CHECK(text.rfind("scenario,task,feature_source,metric,value,ci_low,ci_high,repeats,seed_list\n", 0) == 0);
  CHECK(text.find("uds1,Gender Concept Name,image,auroc,") != std::string::npos);
  CHECK(text.find(",2,11;12") != std::string::npos);
}

TEST_CASE("mixing score: bounds, symmetry and planted controls") {
  std::mt19937_64 rng(12);
  auto a = cloud(150, 0.0, rng), b = cloud(150, 0.0, rng);
  std::vector<std::array<double, 2>> pts = a;
  pts.insert(pts.end(), b.begin(), b.end());
  std::vector<int> g(150, 0);
  g.resize(300, 1);
  const double mixed = mixing_score(pts, g);
  CHECK(mixed >= 0.4);
  CHECK(mixed <= 0.6);
  std::vector<int> swapped(g.rbegin(), g.rend());
  std::vector<std::array<double, 2>> pts_swapped(pts.rbegin(), pts.rend());
  CHECK(mixing_score(pts_swapped, swapped) == doctest::Approx(mixed));

  auto far = cloud(150, 50.0, rng);
  std::vector<std::array<double, 2>> apart = a;
  apart.insert(apart.end(), far.begin(), far.end());
  const double separated = mixing_score(apart, g);
  CHECK(separated >= 0.0);
  CHECK(separated < 0.1);
}

TEST_CASE("t-SNE overlap on tables: sizes, controls, determinism") {
  const auto t = make_toy(400, 14);
  Table table = clinical_table(t.corpus.records, t.corpus.schema);
  TsneParams params;
  params.iterations = 400;
  const auto self = tsne_overlap(table, table, 150, 3, params);
  CHECK(self.points.size() == 300);
  CHECK(self.group.size() == 300);
  CHECK(self.mixing >= 0.4);
  CHECK(self.mixing <= 0.6);
  CHECK(tsne_overlap(table, table, 150, 3, params).points == self.points);

  Table shifted = table;
  const std::size_t col = *table.schema.index_of("noise_num_b");
  for (auto& row : shifted.rows) row[col] = std::get<double>(row[col]) + 40.0;
  const auto apart = tsne_overlap(table, shifted, 150, 3, params);
  CHECK(apart.mixing < 0.1);

  CHECK_THROWS(tsne_overlap(table, table, 401, 3, params));

  testing::TempDir dir("tsne");
  write_tsne_csv(dir.path() / "t.csv", self, "pds", "sds");
  const std::string text = testing::slurp(dir.path() / "t.csv");
  CHECK(text.rfind("x,y,dataset\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 301);
  write_scatter_png(dir.path() / "t.png", self, 128);
  CHECK(png::read(dir.path() / "t.png").height == 128);
}
