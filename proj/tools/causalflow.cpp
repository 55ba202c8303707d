// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// causalflow command-line tool:
//   synth | train | forecast | intervene | counterfactual | score | eval | a3test
//
// Failures print one line `error: <Code>: <message>` on stderr and exit 2.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>

#include "causalflow/io.hpp"
#include "causalflow/pipeline.hpp"

namespace fs = std::filesystem;
using namespace causalflow;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string data;
  std::string checkpoint;
  std::string schedule;
  std::string pred;
  std::string oracle;
};

ExperimentConfig load(const Options& o) {
  auto cfg = o.config.empty() ? parse_config("{}") : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

std::string out_path(const Options& o, const std::string& name) {
  std::error_code ec;
  fs::create_directories(o.out, ec);
  require(!ec, ErrorCode::IoError, "cannot create '" + o.out + "': " + ec.message());
  return (fs::path(o.out) / name).string();
}

/// `--data` names a series file or a synth output directory holding `file`.
SeriesBatch load_series(const Options& o, const char* file, const ExperimentConfig& cfg) {
  require(!o.data.empty(), ErrorCode::InvalidConfig, "--data is required");
  const auto path = fs::is_directory(o.data) ? (fs::path(o.data) / file).string() : o.data;
  auto s = read_series_csv(path);
  require(s.nodes() == cfg.graph().node_count(), ErrorCode::ModelDagMismatch,
          path + " has " + std::to_string(s.nodes()) + " nodes, the configured graph has " +
              std::to_string(cfg.graph().node_count()));
  return s;
}

CausalFlowModel load_model(const Options& o, const ExperimentConfig& cfg) {
  require(!o.checkpoint.empty(), ErrorCode::InvalidConfig, "--checkpoint is required");
  auto m = model_from_checkpoint(load_checkpoint(o.checkpoint));
  require(m.dag() == cfg.graph(), ErrorCode::ModelDagMismatch, "checkpoint graph differs from the configured graph");
  return m;
}

// ---------------------------------------------------------------- synth

void cmd_synth(const Options& o) {
  const auto cfg = load(o);
  const auto d = synthesize(cfg);
  write_text(out_path(o, "series.csv"), series_csv(d.series));
  write_text(out_path(o, "train.csv"), series_csv(d.train));
  write_text(out_path(o, "test.csv"), series_csv(d.test));
  write_text(out_path(o, "config.json"), config_to_json(cfg).dump(2) + "\n");
  const auto T = cfg.window.total;
  std::string log = "seed=" + std::to_string(cfg.seed) + "\nscm_seed=" + std::to_string(cfg.scm_seed()) +
                    "\ntrain_windows=" + std::to_string(window_count(d.train.total_len(), T)) +
                    "\ntest_windows=" + std::to_string(window_count(d.test.total_len(), T)) + "\n";
  write_text(out_path(o, "seed.log"), log);
  std::cout << log;
}

// ---------------------------------------------------------------- train

void cmd_train(const Options& o) {
  const auto cfg = load(o);
  const auto data = all_windows(load_series(o, "train.csv", cfg), cfg);
  const auto tc = cfg.train_config();
  CausalFlowModel model;
  std::optional<TrainState> resume;
  if (o.checkpoint.empty()) {
    model = CausalFlowModel(cfg.graph(), cfg.model, rng::derive({tc.seed, 0x696e6974ULL}));
  } else {
    auto c = load_checkpoint(o.checkpoint);
    model = model_from_checkpoint(c);
    require(model.dag() == cfg.graph(), ErrorCode::ModelDagMismatch, "checkpoint graph differs from the config");
    resume = c.train_state;
  }
  const auto ckdir = out_path(o, "checkpoints");
  fs::create_directories(ckdir);
  std::size_t last_step = resume ? resume->step : 0;
  auto on_epoch = [&](const CausalFlowModel& m, const TrainState& st, std::size_t epoch) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04zu.cfk", epoch);
    save_checkpoint((fs::path(ckdir) / name).string(), m, st);
    std::cout << "epoch " << epoch << " steps " << st.step - last_step << " ema " << format_real(st.ema) << "\n";
    last_step = st.step;
  };
  const auto res = train(model, data, tc, on_epoch, resume);
  save_checkpoint(out_path(o, "model.cfk"), model, res.state);
  write_text(out_path(o, "loss.csv"), loss_csv(res.curve));
}

// ---------------------------------------------------------------- rollouts

std::vector<InterventionSchedule> schedules_for(const Options& o, const ExperimentConfig& cfg,
                                                const SeriesBatch& windows, Regime regime) {
  if (regime == Regime::Observational || o.schedule.empty()) return eval_schedules(windows, cfg, regime);
  return {parse_schedule_csv(read_text(o.schedule), cfg.window.context, cfg.window.total)};
}

void write_fans(const Options& o, Regime regime, const SeriesBatch& windows, const Rollouts& pred,
                const SeriesBatch* truth) {
  const auto b90 = prediction_band(pred, 0.9), b50 = prediction_band(pred, 0.5);
  const auto tau = windows.context_len();
  for (std::size_t k = 0; k < windows.nodes(); ++k) {
    const auto ctx = windows.series(0, k).first(tau);
    std::span<const double> tr;
    if (truth) tr = truth->series(0, k).subspan(tau);
    const auto name = std::string(to_string(regime)) + "_node" + std::to_string(k) + ".svg";
    write_text(out_path(o, name),
               fan_svg(ctx, b90, b50, 0, k, tr, std::string(to_string(regime)) + " node " + std::to_string(k)));
  }
}

/// Runs every evaluation run of one regime. Predictions go to --out; with
/// --oracle, ground truth and oracle realizations from the configured SCM go
/// there too.
void run_regime(const Options& o, Regime regime) {
  const auto cfg = load(o);
  const auto test = load_series(o, "test.csv", cfg);
  const auto model = load_model(o, cfg);
  const auto spec = cfg.make_spec();
  const std::string tag(to_string(regime));
  std::string pred_csv, truth_csv, oracle_csv;
  for (std::size_t run = 0; run < cfg.eval.runs; ++run) {
    const auto windows = eval_windows(test, cfg, run, cfg.eval.batch);
    const auto sched = schedules_for(o, cfg, windows, regime);
    const auto seed = rng::derive({cfg.eval_seed(), 0x70726564ULL, run});
    const auto pred = regime_predictions(model, regime, windows, sched, cfg.eval.samples, seed);
    append_rollouts_csv(pred_csv, run, pred);
    std::optional<SeriesBatch> truth;
    if (!o.oracle.empty()) {
      truth = regime_truth(regime, spec, windows, sched, rng::derive({cfg.eval_seed(), 0x74727468ULL, run}));
      append_windows_csv(truth_csv, run, *truth);
      if (regime != Regime::Counterfactual)
        append_rollouts_csv(oracle_csv, run,
                            oracle_rollouts(spec, windows, sched, cfg.eval.samples,
                                            rng::derive({cfg.eval_seed(), 0x6f72636cULL, run})));
    }
    if (run == 0) write_fans(o, regime, windows, pred, truth ? &*truth : nullptr);
  }
  write_text(out_path(o, tag + "_rollouts.csv"), pred_csv);
  if (!o.oracle.empty()) {
    Options oo = o;
    oo.out = o.oracle;
    write_text(out_path(oo, tag + "_truth.csv"), truth_csv);
    if (!oracle_csv.empty()) write_text(out_path(oo, tag + "_rollouts.csv"), oracle_csv);
  }
}

// ---------------------------------------------------------------- score

/// Every window of a series, or the windows of a `run,window,origin,...`
/// file (runs concatenated in order).
SeriesBatch load_score_windows(const Options& o, const ExperimentConfig& cfg) {
  if (!o.data.empty() && !fs::is_directory(o.data)) {
    const auto text = read_text(o.data);
    if (text.rfind("run,window,origin,", 0) == 0) {
      const auto K = cfg.graph().node_count(), tau = cfg.window.context, T = cfg.window.total;
      const auto runs = parse_windows_csv(text, K, tau, T);
      std::size_t n = 0;
      for (const auto& [run, b] : runs) n += b.batch();
      SeriesBatch out(n, K, T, tau);
      std::size_t w = 0;
      for (const auto& [run, b] : runs)
        for (std::size_t i = 0; i < b.batch(); ++i, ++w) {
          for (std::size_t k = 0; k < K; ++k)
            for (std::size_t t = 0; t < T; ++t) out.at(w, k, t) = b.at(i, k, t);
          out.set_origin(w, b.origin(i));
        }
      out.refresh_stats();
      return out;
    }
  }
  return all_windows(load_series(o, "test.csv", cfg), cfg);
}

void cmd_score(const Options& o) {
  const auto cfg = load(o);
  const auto windows = load_score_windows(o, cfg);
  const auto model = load_model(o, cfg);
  const auto scores = score_trajectory(model, windows);
  write_text(out_path(o, "scores.csv"), scores_csv(scores, windows.context_len()));
  std::cout << "windows " << scores.windows << " threshold "
            << format_real(anomaly_threshold(scores.total, cfg.eval.anomaly_percentile)) << "\n";
}

// ---------------------------------------------------------------- eval

void cmd_eval(const Options& o) {
  const auto cfg = load(o);
  require(!o.pred.empty() && !o.oracle.empty(), ErrorCode::InvalidConfig, "--pred and --oracle are required");
  const auto K = cfg.graph().node_count();
  const auto tau = cfg.window.context, T = cfg.window.total;
  MmdConfig mmd;
  mmd.bandwidth = cfg.eval.bandwidth;
  mmd.sigma = cfg.eval.fixed_sigma;
  std::string report = "metric,family,mechanism,regime,mean,std,runs\n";
  const auto fam = to_string(cfg.scm.family), mech = to_string(cfg.scm.mechanism);
  std::size_t found = 0;
  for (auto regime : {Regime::Observational, Regime::Interventional, Regime::Counterfactual}) {
    const std::string tag(to_string(regime));
    const auto pred_path = fs::path(o.pred) / (tag + "_rollouts.csv");
    if (!fs::exists(pred_path)) continue;
    ++found;
    const auto preds = parse_rollouts_csv(read_text(pred_path.string()), K, tau, T);
    const auto truths = parse_windows_csv(read_text((fs::path(o.oracle) / (tag + "_truth.csv")).string()), K, tau, T);
    const auto oracle_path = fs::path(o.oracle) / (tag + "_rollouts.csv");
    std::map<std::size_t, Rollouts> oracles;
    if (regime != Regime::Counterfactual && fs::exists(oracle_path))
      oracles = parse_rollouts_csv(read_text(oracle_path.string()), K, tau, T);
    const auto nodes = regime == Regime::Observational ? std::vector<std::size_t>{} : free_nodes(cfg);
    std::vector<double> rmse, mmds;
    for (const auto& [run, pred] : preds) {
      const auto t = truths.find(run);
      require(t != truths.end() && t->second.batch() == pred.windows, ErrorCode::AlignmentError,
              tag + " run " + std::to_string(run) + " has no matching truth windows");
      const auto orc = oracles.find(run);
      if (!oracles.empty())
        require(orc != oracles.end() && orc->second.windows == pred.windows, ErrorCode::AlignmentError,
                tag + " run " + std::to_string(run) + " has no matching oracle rollouts");
      const auto s = score_regime(pred, t->second, oracles.empty() ? nullptr : &orc->second, nodes, mmd);
      rmse.push_back(s.rmse);
      if (!oracles.empty()) mmds.push_back(s.mmd);
    }
    require(preds.size() == truths.size(), ErrorCode::AlignmentError, tag + " prediction and truth runs differ");
    auto line = [&](const char* metric, const std::vector<double>& xs) {
      const auto r = summarize_runs(xs);
      report += std::string(metric) + "," + std::string(fam) + "," + std::string(mech) + "," + tag + "," +
                format_real(r.mean) + "," + format_real(r.std) + "," + std::to_string(r.runs) + "\n";
    };
    line("rmse", rmse);
    if (!mmds.empty()) line("mmd", mmds);
  }
  require(found > 0, ErrorCode::AlignmentError, "no *_rollouts.csv files in " + o.pred);
  write_text(out_path(o, "metrics.csv"), report);
  std::cout << report;
}

// ---------------------------------------------------------------- a3test

void cmd_a3test(const Options& o) {
  const auto cfg = load(o);
  const auto test = load_series(o, "test.csv", cfg);
  const auto model = load_model(o, cfg);
  const auto windows = eval_windows(test, cfg, 0, cfg.eval.batch);
  const auto pairs = collect_latent_pairs(model, windows);
  std::string out = "node,n,model,baseline,ratio\n";
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto r = a3_independence_mmd(pairs[k].z, pairs[k].h, rng::derive({cfg.eval_seed(), 0x6133ULL, k}));
    out += std::to_string(k) + "," + std::to_string(pairs[k].z.size()) + "," + format_real(r.model) + "," +
           format_real(r.baseline) + "," + format_real(r.model / r.baseline) + "\n";
  }
  write_text(out_path(o, "a3.csv"), out);
  std::cout << out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal flow forecasting: synthetic data, training, rollouts, and evaluation"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--seed", o.seed, "overrides the config seed");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
  };
  auto* synth = app.add_subcommand("synth", "simulate the configured SCM and write train/test series");
  common(synth);
  auto* tr = app.add_subcommand("train", "fit the model on train.csv");
  common(tr);
  tr->add_option("--data", o.data, "series file or synth directory");
  tr->add_option("--checkpoint", o.checkpoint, "resume from this checkpoint");
  std::vector<std::pair<CLI::App*, Regime>> rollouts;
  for (auto [name, regime, help] : {std::tuple{"forecast", Regime::Observational, "observational rollouts"},
                                    std::tuple{"intervene", Regime::Interventional, "interventional rollouts"},
                                    std::tuple{"counterfactual", Regime::Counterfactual, "counterfactual rollouts"}}) {
    auto* sub = app.add_subcommand(name, help);
    common(sub);
    sub->add_option("--data", o.data, "series file or synth directory");
    sub->add_option("--checkpoint", o.checkpoint, "trained model")->required();
    if (regime != Regime::Observational)
      sub->add_option("--schedule", o.schedule, "node,t,value CSV; default shifts the intervened nodes");
    sub->add_option("--oracle", o.oracle, "also write ground truth from the configured SCM here");
    rollouts.emplace_back(sub, regime);
  }
  auto* score = app.add_subcommand("score", "log-likelihood of every test window");
  common(score);
  score->add_option("--data", o.data, "series file, synth directory, or windows file");
  score->add_option("--checkpoint", o.checkpoint, "trained model")->required();
  auto* ev = app.add_subcommand("eval", "RMSE and MMD of predictions against ground truth");
  common(ev);
  ev->add_option("--pred", o.pred, "directory with *_rollouts.csv")->required();
  ev->add_option("--oracle", o.oracle, "directory with *_truth.csv and oracle *_rollouts.csv")->required();
  auto* a3 = app.add_subcommand("a3test", "latent/state independence statistic per node");
  common(a3);
  a3->add_option("--data", o.data, "series file or synth directory");
  a3->add_option("--checkpoint", o.checkpoint, "trained model")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: UsageError: " << e.what() << "\n";
    return 2;
  }
  try {
    if (synth->parsed()) cmd_synth(o);
    if (tr->parsed()) cmd_train(o);
    for (auto [sub, regime] : rollouts)
      if (sub->parsed()) run_regime(o, regime);
    if (score->parsed()) cmd_score(o);
    if (ev->parsed()) cmd_eval(o);
    if (a3->parsed()) cmd_a3test(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
