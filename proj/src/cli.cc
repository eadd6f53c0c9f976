#include "bevtrack/cli.h"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "bevtrack/dataset.h"
#include "bevtrack/errors.h"
#include "bevtrack/experiment.h"
#include "bevtrack/io.h"
#include "bevtrack/networks.h"
#include "bevtrack/train.h"

namespace bevtrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string data, out, ckpt;
  std::uint64_t seed = 1;
  std::string search = "rpn";
  int topk = 16;
  std::string aggregation = "all";
  std::string selector = "siamese";
  int epochs = 3;
  int pretrain_epochs = 0;
  double lambda_cls = 1e-2, lambda_reg = 1.0, lambda_tr = 1e-2, lambda_comp = 1e-6;
  double sigma = 1.0;
  int max_candidates = 160;
  bool force = false;
  int tracklets = 100;
  int frames = 40;
};

void write_config(const fs::path& dir, const std::string& command, const json& cfg) {
  json doc = {{"command", command}, {"config", cfg}};
  write_file_atomic(dir / (command + "_config.json"), doc.dump(2) + "\n");
}

json tracker_json(const TrackerConfig& c) {
  return {{"search", to_string(c.search)},
          {"topk", c.topk},
          {"aggregation", to_string(c.aggregation)},
          {"selector", c.selector == Selector::kOracle ? "oracle" : "siamese"},
          {"window_weight", c.window_weight},
          {"seed", c.seed},
          {"bev",
           {{"n_slices", c.bev.n_slices},
            {"vertical_extent", c.bev.vertical_extent},
            {"model_extent", c.bev.model_extent},
            {"search_extent", c.bev.search_extent},
            {"model_px", c.bev.model_px},
            {"search_px", c.bev.search_px}}},
          {"kalman",
           {{"process_std", std::vector<double>(c.kalman.process_std.data(), c.kalman.process_std.data() + 5)},
            {"measurement_std",
             std::vector<double>(c.kalman.measurement_std.data(), c.kalman.measurement_std.data() + 3)}}},
          {"particle", {{"sigma_xz", c.particle.sigma_xz}, {"sigma_theta", c.particle.sigma_theta}}},
          {"exhaustive",
           {{"half_range_m", c.grid.half_range_m},
            {"step_m", c.grid.step_m},
            {"half_range_theta", c.grid.half_range_theta},
            {"step_theta", c.grid.step_theta}}}};
}

TrackerConfig tracker_config(const Options& o) {
  TrackerConfig c;
  c.search = search_mode_from_string(o.search);
  c.topk = o.topk;
  c.aggregation = aggregation_from_string(o.aggregation);
  c.selector = o.selector == "oracle" ? Selector::kOracle : Selector::kSiamese;
  c.seed = o.seed;
  return c;
}

fs::path directory_of(const std::string& file) {
  const fs::path p(file);
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

std::optional<Networks<float>> maybe_load(const Options& o, bool needed) {
  if (o.ckpt.empty()) {
    if (needed) throw InvalidArgument("--ckpt is required for this configuration");
    return std::nullopt;
  }
  auto nets = load_networks(o.ckpt);
  nets.store.set_requires_grad(false);
  return nets;
}

bool needs_networks(const TrackerConfig& c) {
  return c.search == SearchMode::kRpn || c.selector == Selector::kSiamese;
}

int cmd_synth(const Options& o) {
  SceneConfig sc;
  sc.n_tracklets = o.tracklets;
  sc.frames = o.frames;
  sc.seed = o.seed;
  const auto data = generate_synthetic(sc);
  const json scene = {{"n_tracklets", sc.n_tracklets},
                      {"frames", sc.frames},
                      {"w", {sc.w_min, sc.w_max}},
                      {"l", {sc.l_min, sc.l_max}},
                      {"h", {sc.h_min, sc.h_max}},
                      {"speed", {sc.speed_min, sc.speed_max}},
                      {"speed_noise", sc.speed_noise},
                      {"turn_rate_max", sc.turn_rate_max},
                      {"turn_noise", sc.turn_noise},
                      {"sensor_noise", sc.sensor_noise},
                      {"point_density", sc.point_density},
                      {"lateral", {sc.lateral_min, sc.lateral_max}},
                      {"distractors", sc.distractors},
                      {"clutter_blobs", sc.clutter_blobs},
                      {"ground_density", sc.ground_density},
                      {"sensor_height", sc.sensor_height},
                      {"seed", sc.seed}};
  const auto hash = save_dataset(o.out, data, scene.dump());
  write_config(o.out, "synth", scene);
  spdlog::info("wrote {} tracklets to {} (content hash {})", data.tracklets.size(), o.out, hash);
  return 0;
}

int cmd_train(const Options& o) {
  if (o.ckpt.empty()) throw InvalidArgument("train needs --ckpt");
  const auto data = load_sequence(o.data, o.force);
  FitConfig fc;
  fc.network.init_seed = o.seed;
  fc.seed = o.seed;
  fc.epochs = o.epochs;
  fc.pretrain_epochs = o.pretrain_epochs;
  fc.weights = {o.lambda_cls, o.lambda_reg, o.lambda_tr, o.lambda_comp};
  fc.sigma = o.sigma;
  const fs::path out_dir = o.out.empty() ? directory_of(o.ckpt) : fs::path(o.out);
  fs::create_directories(out_dir);
  write_config(out_dir, "train",
               {{"data", o.data},
                {"data_hash", data.content_hash},
                {"ckpt", o.ckpt},
                {"seed", o.seed},
                {"epochs", fc.epochs},
                {"pretrain_epochs", fc.pretrain_epochs},
                {"pretrain_lr", fc.pretrain_lr},
                {"lr", fc.lr},
                {"momentum", fc.momentum},
                {"plateau_patience", fc.plateau_patience},
                {"plateau_factor", fc.plateau_factor},
                {"grad_clip", fc.grad_clip},
                {"val_fraction", fc.val_fraction},
                {"lambda", {fc.weights.cls, fc.weights.reg, fc.weights.tr, fc.weights.comp}},
                {"sigma", fc.sigma},
                {"network", network_metadata(fc.network)}});

  Networks<float> nets(fc.network);
  const auto result = fit(data, fc, nets, [](const LossRow& r) {
    if (r.step % 100 == 0) {
      spdlog::info("epoch {} step {}: total {:.5f} (cls {:.4f} reg {:.4f} tr {:.4f} comp {:.1f})", r.epoch, r.step,
                   r.total, r.l_cls, r.l_reg, r.l_tr, r.l_comp);
    }
  });
  save_networks(o.ckpt, nets,
                {{"data_hash", data.content_hash},
                 {"seed", std::to_string(o.seed)},
                 {"epochs", std::to_string(o.epochs)},
                 {"pretrain_epochs", std::to_string(o.pretrain_epochs)}});
  write_file_atomic(out_dir / "loss_history.csv", loss_history_csv(result.history));
  spdlog::info("saved checkpoint {}", o.ckpt);
  return 0;
}

int cmd_track(const Options& o) {
  if (o.out.empty()) throw InvalidArgument("track needs --out");
  const auto data = load_sequence(o.data, o.force);
  const auto tc = tracker_config(o);
  const auto nets = maybe_load(o, needs_networks(tc));
  write_config(directory_of(o.out), "track", {{"data", o.data}, {"data_hash", data.content_hash},
                                              {"ckpt", o.ckpt}, {"tracker", tracker_json(tc)}});
  std::string csv = results_csv_header();
  for (const auto& tl : data.tracklets) {
    if (tl.frames.size() < 2) continue;
    csv += results_csv_rows(run_tracklet(tl, nets ? &*nets : nullptr, tc));
  }
  write_file_atomic(o.out, csv);
  return 0;
}

int cmd_eval(const Options& o) {
  if (o.out.empty()) throw InvalidArgument("eval needs --out");
  const auto data = load_sequence(o.data, o.force);
  const auto tc = tracker_config(o);
  const auto nets = maybe_load(o, needs_networks(tc));
  fs::create_directories(o.out);
  write_config(o.out, "eval", {{"data", o.data}, {"data_hash", data.content_hash},
                               {"ckpt", o.ckpt}, {"tracker", tracker_json(tc)}});
  const auto ev = evaluate_tracker(data, nets ? &*nets : nullptr, tc);
  std::string csv = results_csv_header();
  for (const auto& r : ev.results) csv += results_csv_rows(r);
  write_file_atomic(fs::path(o.out) / "results.csv", csv);
  char label[128];
  if (tc.search == SearchMode::kExhaustive) {
    std::snprintf(label, sizeof label, "%s", to_string(tc.search));
  } else {
    std::snprintf(label, sizeof label, "%s (top-%d)", to_string(tc.search), tc.topk);
  }
  const std::vector<ReportRun> runs{{label, ev.summary},
                                    {std::string(label) + " best proposal", {ev.oracle_success, ev.oracle_precision}}};
  emit_report(o.out, runs, {});
  std::fputs(report_table(runs).c_str(), stdout);
  return 0;
}

int cmd_compare(const Options& o) {
  if (o.out.empty()) throw InvalidArgument("compare-search needs --out");
  const auto data = load_sequence(o.data, o.force);
  auto base = tracker_config(o);
  const auto nets = maybe_load(o, true);
  fs::create_directories(o.out);
  const auto counts = candidate_counts(o.max_candidates);
  write_config(o.out, "compare-search", {{"data", o.data}, {"data_hash", data.content_hash}, {"ckpt", o.ckpt},
                                         {"counts", counts}, {"tracker", tracker_json(base)}});
  std::vector<ProposalCurve> curves;
  std::vector<ReportRun> runs;
  for (SearchMode m : {SearchMode::kRpn, SearchMode::kKalman, SearchMode::kParticle}) {
    base.search = m;
    std::string name = to_string(m);
    for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    curves.push_back(proposal_curve(data, &*nets, base, counts, name));
    for (const auto& p : curves.back().points) {
      runs.push_back({name + " (top-" + std::to_string(p.candidates) + ")", p.selector});
    }
  }
  emit_report(o.out, runs, curves);
  std::fputs(report_table(runs).c_str(), stdout);
  return 0;
}

}  // namespace

int run_command(int argc, const char* const* argv) {
  CLI::App app{"BEV proposal + 3D Siamese single-object LIDAR tracker"};
  app.require_subcommand(1);
  Options o;

  const std::vector<std::string> modes{"rpn", "kf", "pf", "exhaustive"};
  const std::vector<std::string> aggs{"all", "first", "prev", "first_prev"};

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", o.out, "dataset directory")->required();
  synth->add_option("--tracklets", o.tracklets, "number of tracklets")->check(CLI::PositiveNumber);
  synth->add_option("--frames", o.frames, "frames per tracklet")->check(CLI::Range(2, 100000));
  synth->add_option("--seed", o.seed, "random seed");

  auto* train = app.add_subcommand("train", "train both Siamese networks");
  train->add_option("--data", o.data, "dataset directory")->required();
  train->add_option("--ckpt", o.ckpt, "checkpoint to write")->required();
  train->add_option("--out", o.out, "directory for logs (default: checkpoint directory)");
  train->add_option("--seed", o.seed, "random seed");
  train->add_option("--epochs", o.epochs, "epochs at the scheduled rate")->check(CLI::NonNegativeNumber);
  train->add_option("--pretrain-epochs", o.pretrain_epochs, "warm-up epochs at a larger rate")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--lambda-cls", o.lambda_cls, "classification weight");
  train->add_option("--lambda-reg", o.lambda_reg, "regression weight");
  train->add_option("--lambda-tr", o.lambda_tr, "3D tracking weight");
  train->add_option("--lambda-comp", o.lambda_comp, "completion weight");
  train->add_option("--sigma", o.sigma, "distance target width (m)")->check(CLI::PositiveNumber);
  train->add_flag("--force", o.force, "accept a dataset whose content hash disagrees with its manifest");

  auto add_tracking = [&](CLI::App* cmd) {
    cmd->add_option("--data", o.data, "dataset directory")->required();
    cmd->add_option("--ckpt", o.ckpt, "trained checkpoint");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--search", o.search, "proposal method")->check(CLI::IsMember(modes));
    cmd->add_option("--topk", o.topk, "candidates per frame")->check(CLI::PositiveNumber);
    cmd->add_option("--aggregation", o.aggregation, "model shape aggregation")->check(CLI::IsMember(aggs));
    cmd->add_option("--selector", o.selector, "candidate selector")->check(CLI::IsMember({"siamese", "oracle"}));
    cmd->add_flag("--force", o.force, "accept a dataset whose content hash disagrees with its manifest");
  };
  auto* track = app.add_subcommand("track", "track every tracklet and write a results CSV");
  add_tracking(track);
  track->add_option("--out", o.out, "results CSV")->required();
  auto* eval = app.add_subcommand("eval", "track and report Success / Precision");
  add_tracking(eval);
  eval->add_option("--out", o.out, "report directory")->required();
  auto* compare = app.add_subcommand("compare-search", "candidate-count curves for rpn, kf and pf");
  add_tracking(compare);
  compare->add_option("--out", o.out, "report directory")->required();
  compare->add_option("--max-candidates", o.max_candidates, "largest candidate count")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*train) return cmd_train(o);
    if (*track) return cmd_track(o);
    if (*eval) return cmd_eval(o);
    if (*compare) return cmd_compare(o);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 1;
}

}  // namespace bevtrack
