// Copyright (C) 2026 vtg contributors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vtg/errors.hpp"
#include "vtg/grounding_head.hpp"

using namespace vtg;
using head::GroundingHead;

namespace {

head::Config cfg_of(int64_t d, int levels, head::Fusion f = head::Fusion::kAdd) {
  head::Config c;
  c.d = d;
  c.num_levels = levels;
  c.fusion = f;
  return c;
}

void zero_param(ParamStore& ps, const std::string& name) {
  Param* p = ps.find(name);
  REQUIRE(p != nullptr);
  for (double& v : p->value.data) v = 0.0;
}

}  // namespace

TEST_CASE("fusion strategies: add, hadamard, gate saturation, commutativity") {
  Rng rng(1);
  Tensor vs = test::random_tensor({4, 6}, rng);
  Tensor ones = Tensor::full({4, 6}, 1.0);
  {
    ParamStore ps;
    GroundingHead h(ps, cfg_of(6, 1, head::Fusion::kAdd), 3);
    Graph g;
    Tape t(g, ps.size());
    Var f = h.fuse(t, g.constant(vs), g.constant(Tensor({4, 6})));
    CHECK(f->value().data == vs.data);  // V_p = 0 -> F = V_s
    Var f2 = h.fuse(t, g.constant(Tensor({4, 6})), g.constant(vs));
    CHECK(f2->value().data == vs.data);  // commutative
  }
  {
    ParamStore ps;
    GroundingHead h(ps, cfg_of(6, 1, head::Fusion::kHadamard), 3);
    Graph g;
    Tape t(g, ps.size());
    Var f = h.fuse(t, g.constant(vs), g.constant(ones));
    CHECK(f->value().data == vs.data);  // multiplicative identity
  }
  {
    ParamStore ps;
    GroundingHead h(ps, cfg_of(6, 1, head::Fusion::kGate), 3);
    zero_param(ps, "head.gate.w");
    Param* b = ps.find("head.gate.b");
    for (double& v : b->value.data) v = -30.0;  // sigmoid -> 0, F -> V_p
    Graph g;
    Tape t(g, ps.size());
    Rng rng2(2);
    Tensor vp = test::random_tensor({4, 6}, rng2);
    Var f = h.fuse(t, g.constant(vs), g.constant(vp));
    for (int64_t i = 0; i < 4; ++i)
      for (int64_t j = 0; j < 6; ++j)
        CHECK(std::fabs(f->value().at(i, j) - vp.at(i, j)) < 1e-3);
  }
  CHECK_THROWS_AS(head::fusion_from_string("mean"), ConfigError);
}

TEST_CASE("pyramid: ceil-halved lengths, any-pooled masks, short-input error") {
  ParamStore ps;
  GroundingHead h(ps, cfg_of(8, 4), 5);
  Rng rng(3);
  {
    Graph g;
    Tape t(g, ps.size());
    head::Pyramid pyr = h.build_pyramid(t, g.constant(test::random_tensor({64, 8}, rng)),
                                        Tensor{});
    REQUIRE(pyr.levels.size() == 4);
    CHECK(pyr.levels[0]->value().rows() == 64);
    CHECK(pyr.levels[1]->value().rows() == 32);
    CHECK(pyr.levels[2]->value().rows() == 16);
    CHECK(pyr.levels[3]->value().rows() == 8);
    CHECK(pyr.strides == std::vector<double>{1, 2, 4, 8});
  }
  {
    ParamStore ps1;
    GroundingHead h1(ps1, cfg_of(8, 1), 5);
    Graph g;
    Tape t(g, ps1.size());
    head::Pyramid pyr =
        h1.build_pyramid(t, g.constant(test::random_tensor({9, 8}, rng)), Tensor{});
    CHECK(pyr.levels.size() == 1);
    CHECK(pyr.levels[0]->value().rows() == 9);
  }
  {
    ParamStore ps2;
    GroundingHead h2(ps2, cfg_of(8, 2), 5);
    Graph g;
    Tape t(g, ps2.size());
    Tensor mask = Tensor::vec({1, 1, 1, 1, 1, 0, 0, 0});
    head::Pyramid pyr =
        h2.build_pyramid(t, g.constant(test::random_tensor({8, 8}, rng)), mask);
    REQUIRE(pyr.masks.size() == 2);
    double live = 0;
    for (int64_t j = 0; j < 4; ++j) live += pyr.masks[1].at(j);
    CHECK(live == 3.0);  // ceil coverage of 5 valid clips
    CHECK(pyr.masks[1].at(3) == 0.0);
  }
  {
    Graph g;
    Tape t(g, ps.size());
    try {
      h.build_pyramid(t, g.constant(test::random_tensor({4, 8}, rng)), Tensor{});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("8") != std::string::npos);  // states minimum T
    }
  }
}

TEST_CASE("predict_moments: flattened count and position metadata") {
  ParamStore ps;
  GroundingHead h(ps, cfg_of(8, 4), 7);
  Graph g;
  Tape t(g, ps.size());
  Rng rng(4);
  head::Pyramid pyr =
      h.build_pyramid(t, g.constant(test::random_tensor({64, 8}, rng)), Tensor{});
  head::RawMomentPredictions raw = h.predict_moments(t, pyr);
  CHECK(raw.cls_logits->value().numel() == 64 + 32 + 16 + 8);
  CHECK(raw.offsets_norm->value().rows() == 120);
  CHECK(raw.positions.size() == 120);
  // first level-2 position: stride 2, center 1.0
  const head::PyramidPosition& p = raw.positions[64];
  CHECK(p.level == 2);
  CHECK(p.stride == 2.0);
  CHECK(p.center == doctest::Approx(1.0));
  // offsets are nonnegative after softplus
  for (double v : raw.offsets_norm->value().data) CHECK(v >= 0.0);
}

TEST_CASE("decode: span arithmetic, degenerate rejection, NMS thresholds, ordering") {
  std::vector<head::PyramidPosition> pos(3);
  for (auto& p : pos) p.valid = true;
  pos[0].center = 10.0;
  pos[0].stride = 1.0;
  pos[1].center = 5.0;
  pos[1].stride = 1.0;
  pos[2].center = 12.0;
  pos[2].stride = 1.0;

  Tensor logits = Tensor::vec({2.0, 1.0, 0.5});
  Tensor offsets = Tensor::mat(3, 2, {4.0, 6.0,    // [6, 16]
                                      0.0, 0.0,    // degenerate, dropped
                                      2.0, 4.0});  // [10, 16]
  auto cands = head::decode_predictions(logits, offsets, pos, 20, 2.0, 0.7, 10);
  REQUIRE(cands.size() == 2);
  CHECK(cands[0].start == doctest::Approx(6.0 / 20.0));
  CHECK(cands[0].end == doctest::Approx(16.0 / 20.0));
  CHECK(cands[0].confidence > cands[1].confidence);
  for (const auto& c : cands) {
    CHECK(c.start >= 0.0);
    CHECK(c.start < c.end);
    CHECK(c.end <= 1.0);
  }

  // identical spans: only the higher-confidence one survives
  {
    std::vector<head::PyramidPosition> p2(2);
    for (auto& p : p2) {
      p.valid = true;
      p.stride = 1.0;
      p.center = 5.0;
    }
    Tensor lg = Tensor::vec({2.1972245773362196, 1.3862943611198906});  // sig = .9, .8
    Tensor of = Tensor::mat(2, 2, {5.0, 5.0, 5.0, 5.0});
    auto kept = head::decode_predictions(lg, of, p2, 10, 2.0, 0.7, 10);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].confidence == doctest::Approx(0.9));
  }
  // IoU 0.8 suppressed at threshold 0.7; IoU 1/3 kept
  {
    std::vector<head::PyramidPosition> p2(3);
    for (auto& p : p2) {
      p.valid = true;
      p.stride = 1.0;
    }
    p2[0].center = 5.0;   // [0,10]
    p2[1].center = 6.0;   // [2,10] -> IoU 0.8 with [0,10]
    p2[2].center = 10.0;  // [5,15] -> IoU 1/3 with [0,10]
    Tensor lg = Tensor::vec({3.0, 2.0, 1.0});
    Tensor of = Tensor::mat(3, 2, {5.0, 5.0, 4.0, 4.0, 5.0, 5.0});
    auto kept = head::decode_predictions(lg, of, p2, 15, 2.0, 0.7, 10);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].start == doctest::Approx(0.0));
    CHECK(kept[1].start == doctest::Approx(5.0 / 15.0));
  }
  // equal confidences: earlier start wins the tie and survives the duplicate
  {
    std::vector<head::PyramidPosition> p2(2);
    for (auto& p : p2) {
      p.valid = true;
      p.stride = 1.0;
    }
    p2[0].center = 8.0;  // [4,12]
    p2[1].center = 4.0;  // [0,8] -> IoU 1/3, both kept; order by start
    Tensor lg = Tensor::vec({1.0, 1.0});
    Tensor of = Tensor::mat(2, 2, {4.0, 4.0, 4.0, 4.0});
    auto kept = head::decode_predictions(lg, of, p2, 12, 2.0, 0.7, 10);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].start < kept[1].start);
  }
  CHECK_THROWS(head::decode_predictions(logits, offsets, pos, 20, 2.0, 0.0, 10));
}

TEST_CASE("saliency head: constant under zero global vector, hand value") {
  ParamStore ps;
  GroundingHead h(ps, cfg_of(2, 1), 9);
  Param* w = ps.find("head.sal.w");
  w->value = Tensor::mat(1, 2, {1.0, 1.0});
  Param* b = ps.find("head.sal.b");
  b->value = Tensor::vec({0.0});
  Graph g;
  Tape t(g, ps.size());
  {
    Rng rng(5);
    Var f = g.constant(test::random_tensor({4, 2}, rng));
    Var s = h.predict_saliency(t, f, g.constant(Tensor({1, 2})));
    for (int64_t i = 0; i < 4; ++i) CHECK(s->value().at(i) == doctest::Approx(0.0));
  }
  {
    Var f = g.constant(Tensor::mat(2, 2, {3.0, 4.0, 3.0, 4.0}));
    Var gv = g.constant(Tensor::mat(1, 2, {1.0, 2.0}));
    Var s = h.predict_saliency(t, f, gv);
    const double expect = (3.0 + 8.0) / std::sqrt(2.0);
    CHECK(s->value().at(0) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(s->value().at(0) == doctest::Approx(7.77817).epsilon(1e-4));
    CHECK(s->value().at(1) == s->value().at(0));  // equal rows, equal scores
  }
}

TEST_CASE("interval iou basics") {
  CHECK(head::interval_iou(0, 10, 0, 10) == doctest::Approx(1.0));
  CHECK(head::interval_iou(0, 1, 2, 3) == 0.0);
  CHECK(head::interval_iou(0, 10, 5, 15) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(head::interval_iou(3, 3, 0, 1), std::invalid_argument);
}
