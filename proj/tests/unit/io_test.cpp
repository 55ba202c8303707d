// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "causalflow/io.hpp"

using namespace causalflow;

namespace {

template <class E>
ErrorCode code_of(E&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

ModelConfig small_model() {
  ModelConfig c;
  c.encoder.hidden_dim = 3;
  c.velocity.width = 5;
  return c;
}

}  // namespace

TEST(Csv, RealsRoundTripExactly) {
  rng::Stream s(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = s.normal() * std::pow(10.0, s.uniform(-300, 300));
    double back = 0;
    ASSERT_TRUE(detail::parse_real(format_real(v), back));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(v), std::bit_cast<std::uint64_t>(back));
  }
}

TEST(Csv, SeriesRoundTrip) {
  auto spec = make_scm(Family::Diamond, Mechanism::Nlna, 2);
  auto series = simulate(spec, 2, 50, 3);
  series.set_origin(0, 123);
  series.set_origin(1, -4);
  auto back = parse_series_csv(series_csv(series));
  EXPECT_EQ(back.origin(0), 123);
  EXPECT_EQ(back.origin(1), -4);
  ASSERT_EQ(back.nodes(), series.nodes());
  for (std::size_t i = 0; i < series.values().size(); ++i) EXPECT_EQ(back.values()[i], series.values()[i]);
  EXPECT_EQ(series_csv(back), series_csv(series));
}

TEST(Csv, SeriesErrors) {
  EXPECT_EQ(code_of([] { (void)parse_series_csv("x,y\n1,2\n"); }), ErrorCode::IoError);
  const std::string h = "batch,node,t,value\n";
  EXPECT_EQ(code_of([&] { (void)parse_series_csv(h + "0,0,0,1\n0,0,2,1\n"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { (void)parse_series_csv(h + "0,0,0,abc\n"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { (void)parse_series_csv(h + "0,0,0,1\n0,1,0,1\n0,0,1,2\n"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([&] { (void)parse_series_csv(h + "0,0,0,1\n0,0,0,2\n"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([] { (void)read_series_csv("/nonexistent/file.csv"); }), ErrorCode::IoError);
}

TEST(Schedule, OneBasedStepsAndRoundTrip) {
  auto s = parse_schedule_csv("node,t,value\n0,11,2.5\n3,12,-1\n", 10, 12);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(*s.lookup(0, 10), 2.5);
  EXPECT_EQ(*s.lookup(3, 11), -1.0);
  EXPECT_EQ(parse_schedule_csv(schedule_csv(s), 10, 12), s);
  EXPECT_TRUE(parse_schedule_csv("node,t,value\n", 10, 12).empty());
}

TEST(Schedule, ParseErrors) {
  EXPECT_EQ(code_of([] { (void)parse_schedule_csv("t,node,value\n", 2, 4); }), ErrorCode::ScheduleParseError);
  EXPECT_EQ(code_of([] { (void)parse_schedule_csv("node,t,value\n0,3\n", 2, 4); }), ErrorCode::ScheduleParseError);
  EXPECT_EQ(code_of([] { (void)parse_schedule_csv("node,t,value\n0,x,1\n", 2, 4); }), ErrorCode::ScheduleParseError);
  EXPECT_EQ(code_of([] { (void)parse_schedule_csv("node,t,value\n-1,3,1\n", 2, 4); }), ErrorCode::ScheduleParseError);
  EXPECT_EQ(code_of([] { (void)parse_schedule_csv("node,t,value\n0,3,1\n0,3,2\n", 2, 4); }),
            ErrorCode::ScheduleParseError);
  EXPECT_EQ(code_of([] { (void)parse_schedule_csv("node,t,value\n0,3,nan\n", 2, 4); }),
            ErrorCode::ScheduleParseError);
  // Step 2 is inside the context.
  EXPECT_EQ(code_of([] { (void)parse_schedule_csv("node,t,value\n0,2,1\n", 2, 4); }), ErrorCode::ScheduleOutOfWindow);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  CausalFlowModel m(tree_dag(), small_model(), 4);
  TrainState st;
  st.epochs_done = 3;
  st.step = 17;
  st.ema = 0.4;
  st.ema_min = 0.3;
  st.ema_started = true;
  st.adam_step = 17;
  for (const auto* p : m.parameters()) {
    st.adam_m.push_back(Tensor2::Constant(p->rows(), p->cols(), 0.25));
    st.adam_v.push_back(Tensor2::Constant(p->rows(), p->cols(), 1e-3));
  }
  const auto bytes = encode_checkpoint(m, st);
  const auto c = decode_checkpoint(bytes);
  const auto back = model_from_checkpoint(c);
  EXPECT_EQ(back, m);
  ASSERT_TRUE(c.train_state);
  EXPECT_EQ(c.train_state->step, 17u);
  EXPECT_EQ(c.train_state->adam_m, st.adam_m);
  EXPECT_EQ(encode_checkpoint(back, c.train_state), bytes);
  EXPECT_FALSE(decode_checkpoint(encode_checkpoint(m)).train_state);
}

TEST(Checkpoint, PerNodeCellsAndNonDefaultFlowSurvive) {
  auto cfg = small_model();
  cfg.encoder.per_node_rnn = true;
  cfg.flow.integrator = Integrator::Euler;
  cfg.flow.steps = 9;
  cfg.velocity.layers = 4;
  CausalFlowModel m(diamond_dag(), cfg, 5);
  EXPECT_EQ(model_from_checkpoint(decode_checkpoint(encode_checkpoint(m))), m);
}

TEST(Checkpoint, CorruptionIsDetected) {
  CausalFlowModel m(tree_dag(), small_model(), 6);
  auto bytes = encode_checkpoint(m);
  for (std::size_t pos : {std::size_t{3}, bytes.size() / 2, bytes.size() - 9}) {
    auto bad = bytes;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x40);
    EXPECT_EQ(code_of([&] { (void)decode_checkpoint(bad); }), ErrorCode::ChecksumMismatch) << pos;
  }
  EXPECT_EQ(code_of([&] { (void)decode_checkpoint(bytes.substr(0, 10)); }), ErrorCode::IoError);
}

TEST(Config, DefaultsAndNormalisedRoundTrip) {
  auto c = parse_config("{}");
  EXPECT_EQ(c.window.context, 90u);
  EXPECT_EQ(c.window.total, 120u);
  EXPECT_EQ(c.model.encoder.hidden_dim, 32u);
  EXPECT_EQ(c.graph(), tree_dag());
  auto j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);

  auto d = parse_config(R"({"seed": 5, "scm": {"family": "diamond", "mechanism": "nlna"},
                            "dag": {"nodes": 3, "edges": [[0, 1], [1, 2]]},
                            "window": {"context": 20, "total": 25},
                            "model": {"hidden_dim": 8, "per_node_rnn": true},
                            "flow": {"integrator": "euler", "steps": 10},
                            "train": {"epochs": 2, "learning_rate": 0.01, "seed": 9},
                            "eval": {"runs": 2, "shift_offset": 5, "bandwidth": "fixed", "fixed_sigma": 2}})");
  EXPECT_EQ(d.scm.family, Family::Diamond);
  EXPECT_EQ(d.graph().node_count(), 3u);
  EXPECT_EQ(d.train_config().seed, 9u);
  EXPECT_EQ(d.eval_seed(), 5u);
  EXPECT_EQ(d.model.flow.integrator, Integrator::Euler);
  auto dj = config_to_json(d);
  EXPECT_EQ(config_to_json(config_from_json(dj)), dj);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  for (const char* text : {R"({"sed": 1})", R"({"train": {"epoch": 3}})", R"({"model": {"depth": 2}})",
                           R"({"window": {"context": 10, "total": 10}})", R"({"scm": {"family": "ring"}})",
                           R"({"flow": {"integrator": "rk45"}})", R"({"train": {"batch_size": -1}})",
                           R"({"train": {"learning_rate": "fast"}})", R"({"dag": {"nodes": 2, "edges": [[0, 0]]}})",
                           R"({"eval": {"shift_offset": 3}})", "[1, 2]", "{not json"}) {
    const auto code = code_of([&] { (void)parse_config(text); });
    EXPECT_TRUE(code == ErrorCode::InvalidConfig || code == ErrorCode::CycleDetected) << text;
  }
}

TEST(ResultFiles, RolloutAndWindowFilesRoundTrip) {
  auto spec = make_scm(Family::Tree, Mechanism::Additive, 7);
  auto series = simulate(spec, 1, 60, 8);
  auto ctx = make_windows(series, 10, 3, 8, 12);
  CausalFlowModel m(tree_dag(), small_model(), 9);
  auto r = forecast(m, ctx, InterventionSchedule(8, 12), 2, 10);
  std::string text;
  append_rollouts_csv(text, 0, r);
  append_rollouts_csv(text, 4, r);
  auto back = parse_rollouts_csv(text, 8, 8, 12);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at(4).values, r.values);
  EXPECT_EQ(back.at(0).samples, 2u);

  std::string wtext;
  append_windows_csv(wtext, 1, ctx);
  auto wb = parse_windows_csv(wtext, 8, 8, 12);
  EXPECT_EQ(wb.at(1), ctx);

  // A missing row breaks alignment.
  auto cut = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  EXPECT_EQ(code_of([&] { (void)parse_rollouts_csv(cut, 8, 8, 12); }), ErrorCode::AlignmentError);
  EXPECT_EQ(code_of([&] { (void)parse_rollouts_csv(text, 8, 9, 12); }), ErrorCode::AlignmentError);
}

TEST(Plots, FanChartHasBandsAndLines) {
  Rollouts r;
  r.windows = 1;
  r.samples = 20;
  r.nodes = 1;
  r.horizon = 3;
  r.context_len = 4;
  rng::Stream s(11);
  for (int i = 0; i < 60; ++i) r.values.push_back(s.normal());
  const double ctx[] = {0.1, 0.2, 0.3, 0.4};
  const double truth[] = {0.5, 0.6, 0.7};
  auto svg = fan_svg(ctx, prediction_band(r, 0.9), prediction_band(r, 0.5), 0, 0, truth, "node 0");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  std::size_t polys = 0;
  for (auto p = svg.find("<polygon"); p != std::string::npos; p = svg.find("<polygon", p + 1)) ++polys;
  EXPECT_EQ(polys, 2u);
  EXPECT_NE(svg.find("stroke-dasharray=\"4 3\""), std::string::npos);
}
