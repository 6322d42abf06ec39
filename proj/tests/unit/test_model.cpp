#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "gradcheck.hpp"
#include "json.hpp"
#include "rrn/checkpoint.hpp"
#include "rrn/error.hpp"
#include "rrn/experiment.hpp"
#include "rrn/rrn_model.hpp"
#include "rrn/trainer.hpp"
#include "test_util.hpp"

using namespace rrn;
using L = LandmarkName;

namespace {

RrnConfig small_config(RuVariant variant = RuVariant::DenseBlock, DropoutMode mode = DropoutMode::None) {
  RrnConfig c;
  c.input_names = {L::CdR, L::Me, L::CorL};
  c.target_names = {L::B, L::Na};
  c.ru_variant = variant;
  c.relation_dim = 8;
  c.mlp_hidden = 8;
  c.dropout.mode = mode;
  return c;
}

void check_model_gradients(RrnConfig config, std::uint64_t seed) {
  auto model = RrnModel::build(config, seed);
  test::expect_report(fd::check_model(model, test::synthetic(6, seed).landmark_sets()));
}

}  // namespace

TEST(RrnModel, PresetRelationUnitCounts) {
  const std::vector<std::pair<std::string, std::size_t>> expected{
      {"5-landmarks", 25}, {"3-regular", 9}, {"3-cross", 9}, {"6-landmarks", 36}, {"9-landmarks", 81}};
  for (const auto& [name, count] : expected) {
    auto cfg = preset(name);
    const auto model = RrnModel::build(cfg.rrn, 0);
    EXPECT_EQ(model.relation_unit_count(), count) << name;
    EXPECT_EQ(cfg.rrn.n() + cfg.rrn.m(), 14u) << name;
  }
}

TEST(RrnModel, PresetTargets) {
  auto six = preset("6-landmarks").rrn;
  EXPECT_EQ(std::count(six.target_names.begin(), six.target_names.end(), L::Na), 0);
  EXPECT_EQ(std::count(six.input_names.begin(), six.input_names.end(), L::Na), 1);
  auto nine = preset("9-landmarks").rrn;
  EXPECT_EQ(canonical_order(nine.target_names), (std::vector<L>{L::Ans, L::A, L::Pr, L::Pns, L::Na}));
  EXPECT_EQ(canonical_order(preset("5-landmarks").rrn.target_names),
            (std::vector<L>{L::Gn, L::Pg, L::B, L::Id, L::Ans, L::A, L::Pr, L::Pns, L::Na}));
  EXPECT_EQ(canonical_order(preset("3-regular").rrn.input_names), (std::vector<L>{L::Me, L::CdL, L::CdR}));
  EXPECT_EQ(canonical_order(preset("3-cross").rrn.input_names), (std::vector<L>{L::Me, L::CorL, L::CdR}));
  EXPECT_EQ(preset("5-landmarks").batch_size, 64u);
  try {
    preset("4-landmarks");
    FAIL();
  } catch (const ConfigError& e) {
    for (const auto& n : preset_names()) EXPECT_NE(std::string(e.what()).find(n), std::string::npos);
  }
}

TEST(RrnModel, UnitWidths) {
  auto model = RrnModel::build(small_config(), 1);
  EXPECT_EQ(model.pairwise_unit(L::Me, L::CdR).input_dim(), kFeatureDim);
  EXPECT_EQ(model.pairwise_unit(L::Me, L::CdR).output_dim(), 8u);
  EXPECT_EQ(model.fusion_unit(L::CorL).input_dim(), 8u);
  EXPECT_EQ(model.fusion_unit(L::CorL).output_dim(), 6u);
  EXPECT_EQ(model.pairwise_unit_count(), 6u);
  EXPECT_EQ(model.fusion_unit_count(), 3u);
}

TEST(RrnModel, ConfigErrors) {
  auto c = small_config();
  c.input_names = {L::CdR, L::CorL};
  EXPECT_THROW(RrnModel::build(c, 0), ConfigError);  // no Me
  c = small_config();
  c.target_names.push_back(L::CdR);
  EXPECT_THROW(RrnModel::build(c, 0), ConfigError);  // overlap
  c = small_config();
  c.input_names = {L::Me};
  EXPECT_THROW(RrnModel::build(c, 0), ConfigError);
  c = small_config();
  c.input_names.push_back(L::Me);
  EXPECT_THROW(RrnModel::build(c, 0), ConfigError);
  c = small_config();
  c.target_names.clear();
  EXPECT_THROW(RrnModel::build(c, 0), ConfigError);
  c = small_config();
  c.relation_dim = 0;
  EXPECT_THROW(RrnModel::build(c, 0), ConfigError);
}

TEST(RrnModel, TwoInputsUseTheSinglePairDirectly) {
  RrnConfig c;
  c.input_names = {L::Me, L::CdL};
  c.target_names = {L::Gn};
  c.relation_dim = 5;
  auto model = RrnModel::build(c, 4);
  const auto s = test::subject(12);
  const auto pred = model.predict(s);
  Rng rng(0);
  const auto f = model.features(s, L::Me, L::CdL);
  Tensor x({1, kFeatureDim}, std::vector<double>(f.begin(), f.end()));
  const auto g = model.pairwise_unit(L::Me, L::CdL).forward(x, Mode::Eval, rng);
  const auto out = model.fusion_unit(L::Me).forward(g, Mode::Eval, rng);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(pred.branches[0][0][i], out[std::size_t(i)]);
}

TEST(RrnModel, TerminalIsBranchMean) {
  auto model = RrnModel::build(small_config(), 2);
  const auto p = model.predict(test::subject(3));
  ASSERT_EQ(p.branches.size(), 3u);
  EXPECT_EQ(p.inputs, (std::vector<L>{L::Me, L::CorL, L::CdR}));
  for (std::size_t k = 0; k < 2; ++k) {
    const Vec3 mean = (p.branches[0][k] + p.branches[1][k] + p.branches[2][k]) / 3.0;
    EXPECT_LT((mean - p.terminal[k]).norm(), 1e-12);
  }
}

TEST(RrnModel, MissingLandmarkIsDatasetError) {
  auto model = RrnModel::build(small_config(), 2);
  auto s = test::subject(4);
  s.coords.erase(L::CorL);
  EXPECT_THROW(model.predict(s), DatasetError);
}

TEST(RrnModel, InputOrderInvariance) {
  auto base = small_config();
  auto permuted = base;
  permuted.input_names = {L::CorL, L::CdR, L::Me};
  auto a = RrnModel::build(base, 8);
  auto b = RrnModel::build(permuted, 8);
  const auto train = test::synthetic(20, 2).landmark_sets();
  a.fit_normalizers(train);
  b.fit_normalizers(train);
  const auto test_sets = test::synthetic(30, 3).landmark_sets();
  const auto pa = a.predict(test_sets);
  const auto pb = b.predict(test_sets);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t k = 0; k < 2; ++k) EXPECT_LT((pa[i].terminal[k] - pb[i].terminal[k]).norm(), 1e-6);
  }
}

TEST(RrnModel, GoldenForward) {
  auto model = load_checkpoint(test::data_dir() / "fixture_checkpoint.json");
  const auto golden = nlohmann::json::parse(test::read_file(test::data_dir() / "golden_forward.json"));
  const auto subjects = load_dataset(test::data_dir() / "fixture_subjects.json");
  std::size_t checked = 0;
  for (const auto& c : golden.at("cases")) {
    const auto pred = model.predict(subjects.find(c.at("id").get<std::string>())->landmarks);
    const auto terminal = c.at("terminal").get<std::vector<double>>();
    for (std::size_t k = 0; k < pred.terminal.size(); ++k) {
      for (int d = 0; d < 3; ++d) EXPECT_NEAR(pred.terminal[k][d], terminal[3 * k + std::size_t(d)], 1e-9);
    }
    const auto branches = c.at("branches").get<std::vector<std::vector<double>>>();
    ASSERT_EQ(branches.size(), pred.branches.size());
    for (std::size_t b = 0; b < branches.size(); ++b) {
      for (std::size_t k = 0; k < pred.branches[b].size(); ++k) {
        for (int d = 0; d < 3; ++d) EXPECT_NEAR(pred.branches[b][k][d], branches[b][3 * k + std::size_t(d)], 1e-9);
      }
    }
    ++checked;
  }
  EXPECT_EQ(checked, 8u);
}

TEST(RrnModel, PredictMm) {
  LandmarkSet s;
  s.spacing_mm = Vec3(0.5, 0.5, 0.25);
  EXPECT_EQ(s.to_mm(Vec3(10, 10, 100)), Vec3(5, 5, 25));
  s.spacing_mm = Vec3(1, 1, 1);
  EXPECT_EQ(s.to_mm(Vec3(1.25, -3, 7)), Vec3(1.25, -3, 7));

  auto model = load_checkpoint(test::data_dir() / "fixture_checkpoint.json");
  const auto subject = load_dataset(test::data_dir() / "fixture_subjects.json")[0].landmarks;
  const auto pred = model.predict(subject);
  const auto mm = model.predict_mm(subject);
  ASSERT_EQ(mm.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(mm.at(pred.targets[k]), pred.terminal[k].cwiseProduct(Vec3(0.4, 0.5, 0.6)));
  }
}

TEST(Loss, HandComputedExample) {
  Prediction p;
  p.inputs = {L::Me, L::CdL};
  p.targets = {L::Gn};
  p.branches = {{Vec3(1, 0, 0)}, {Vec3(0, 2, 0)}};
  p.terminal = {Vec3(0.5, 1, 0)};
  LandmarkSet truth;
  truth.coords[L::Gn] = Vec3(0, 0, 0);
  EXPECT_NEAR(loss(p, truth), 2.5, 1e-12);

  std::vector<Tensor> branches{Tensor({1, 3}, std::vector<double>{1, 0, 0}),
                               Tensor({1, 3}, std::vector<double>{0, 2, 0})};
  RowMatrix target = RowMatrix::Zero(1, 3);
  std::vector<Tensor> grads;
  EXPECT_NEAR(branch_loss(branches, target, &grads), 2.5, 1e-12);
  EXPECT_NEAR(grads[0][0], 2.0 * 1.0 / 2.0, 1e-12);
  EXPECT_NEAR(grads[1][1], 2.0 * 2.0 / 2.0, 1e-12);
}

TEST(Loss, MoreCasesAndZeroIffExact) {
  Prediction p;
  p.inputs = {L::Me, L::CdL, L::CdR};
  p.targets = {L::Gn, L::Na};
  LandmarkSet truth;
  truth.coords[L::Gn] = Vec3(1, 2, 3);
  truth.coords[L::Na] = Vec3(-1, 0, 5);
  p.branches.assign(3, {truth.coords[L::Gn], truth.coords[L::Na]});
  EXPECT_EQ(loss(p, truth), 0.0);
  p.branches[1][1] += Vec3(0, 3, 4);   // 25
  p.branches[2][0] += Vec3(1, 1, 1);   // 3
  EXPECT_NEAR(loss(p, truth), 28.0 / 6.0, 1e-12);
  p.branches[2][0] = truth.coords[L::Gn];
  p.branches[1][1] = truth.coords[L::Na] + Vec3(1e-9, 0, 0);
  EXPECT_GT(loss(p, truth), 0.0);
}

TEST(Loss, BatchAverage) {
  std::vector<Tensor> branches{Tensor({2, 3}, std::vector<double>{1, 0, 0, 0, 0, 0}),
                               Tensor({2, 3}, std::vector<double>{0, 0, 0, 0, 0, 3})};
  RowMatrix target = RowMatrix::Zero(2, 3);
  // per-sample losses (1 + 0)/2 and (0 + 9)/2
  EXPECT_NEAR(branch_loss(branches, target, nullptr), (0.5 + 4.5) / 2.0, 1e-12);
}

TEST(GradCheck, FullModelDense) { check_model_gradients(small_config(), 21); }

TEST(GradCheck, FullModelMlp) { check_model_gradients(small_config(RuVariant::Mlp), 22); }

TEST(GradCheck, FullModelVariational) {
  check_model_gradients(small_config(RuVariant::Mlp, DropoutMode::Variational), 23);
}

TEST(GradCheck, FullModelShared) {
  auto c = small_config();
  c.shared_pairwise = true;
  check_model_gradients(c, 25);
}

TEST(GradCheck, FullModelRegular) { check_model_gradients(small_config(RuVariant::DenseBlock, DropoutMode::Regular), 26); }

TEST(GradCheck, FullModelRegularShared) {
  auto c = small_config(RuVariant::DenseBlock, DropoutMode::Regular);
  c.shared_pairwise = true;
  check_model_gradients(c, 24);
}

TEST(RrnModel, SharedPairwiseUnit) {
  auto c = small_config();
  c.shared_pairwise = true;
  auto model = RrnModel::build(c, 3);
  EXPECT_EQ(model.pairwise_unit_count(), 1u);
  EXPECT_EQ(&model.pairwise_unit(L::Me, L::CdR), &model.pairwise_unit(L::CorL, L::Me));
  EXPECT_NO_THROW(model.predict(test::subject(1)));
}

TEST(Checkpoint, RoundTripBothEncodings) {
  ExperimentConfig cfg;
  cfg.rrn = small_config(RuVariant::Mlp, DropoutMode::Variational);
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 5;
  const auto sets = test::synthetic(24, 9).landmark_sets();
  auto trained = train_model(cfg, std::span(sets).first(20), {}, 0);
  const auto dir = test::scratch("checkpoint");
  for (const std::string file : {"m.cbor", "m.json"}) {
    save_checkpoint(trained.model, dir / file);
    auto loaded = load_checkpoint(dir / file);
    EXPECT_EQ(loaded.params().step(), trained.model.params().step());
    auto ta = trained.model.state_tensors();
    auto tb = loaded.state_tensors();
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
      EXPECT_EQ(ta[i].name, tb[i].name);
      EXPECT_TRUE(std::equal(ta[i].tensor->values().begin(), ta[i].tensor->values().end(),
                             tb[i].tensor->values().begin()));
    }
    for (std::size_t i = 0; i < loaded.params().size(); ++i) {
      EXPECT_EQ(loaded.params().state(i).m, trained.model.params().state(i).m);
      EXPECT_EQ(loaded.params().state(i).v, trained.model.params().state(i).v);
    }
    EXPECT_EQ(loaded.rng(), trained.model.rng());
    const auto pa = trained.model.predict(std::span(sets).subspan(20));
    const auto pb = loaded.predict(std::span(sets).subspan(20));
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i].terminal, pb[i].terminal);
  }
  EXPECT_NE(test::read_file(dir / "m.cbor").front(), '{');
}

TEST(Checkpoint, LoadErrors) {
  const auto dir = test::scratch("checkpoint-errors");
  EXPECT_THROW(load_checkpoint(dir / "absent.cbor"), LoadError);
  {
    std::ofstream(dir / "garbage.cbor") << "\x01\x02 not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint(dir / "garbage.cbor"), LoadError);

  auto j = nlohmann::json::parse(test::read_file(test::data_dir() / "fixture_checkpoint.json"));
  auto bad_version = j;
  bad_version["version"] = 99;
  EXPECT_THROW(model_from_checkpoint(bad_version), LoadError);
  auto missing = j;
  missing["tensors"].erase("fusion/Me/1.weight");
  EXPECT_THROW(model_from_checkpoint(missing), LoadError);
  auto bad_config = j;
  bad_config["config"]["input_names"] = {"CdR", "CorL", "Gn"};
  EXPECT_THROW(model_from_checkpoint(bad_config), LoadError);
}
