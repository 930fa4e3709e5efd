#include "stfl/cli/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "stfl/data/clip_io.hpp"
#include "stfl/data/image.hpp"
#include "stfl/data/synth.hpp"
#include "stfl/error.hpp"
#include "stfl/models/gradsuite.hpp"
#include "stfl/models/network.hpp"
#include "stfl/trainer/dft.hpp"
#include "stfl/trainer/train.hpp"

namespace stfl {

namespace {

struct Context {
  std::ostream& out;
  std::ostream& err;
  int code = kExitOk;
};

std::optional<Split> parse_split_option(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split '" + s + "' (expected train, test or all)");
}

Split require_split(const std::string& s) {
  const auto split = parse_split_option(s);
  if (!split) throw ConfigError("a single split (train or test) is required here");
  return *split;
}

AmplitudeMode parse_mode(const std::string& s) {
  if (s == "log") return AmplitudeMode::log;
  if (s == "raw") return AmplitudeMode::raw;
  throw ConfigError("unknown amplitude mode '" + s + "' (expected log or raw)");
}

void emit_report(Context& ctx, const EvalReport& report, const std::string& report_path) {
  const std::string json = report_json(report);
  ctx.out << json;
  if (!report_path.empty()) write_report(report, report_path);
}

void add_synth(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("synth", "Write a synthetic real/fake clip dataset and its manifest");
  auto cfg = std::make_shared<SynthConfig>();
  auto out = std::make_shared<std::string>();
  cmd->add_option("--n-real", cfg->n_real, "Number of real clips")->capture_default_str();
  cmd->add_option("--n-fake", cfg->n_fake, "Number of fake clips")->capture_default_str();
  cmd->add_option("--frames", cfg->frames, "Frames per clip")->capture_default_str();
  cmd->add_option("--hw", cfg->hw, "Frame height and width")->capture_default_str();
  cmd->add_option("--artifact-strength", cfg->artifact_strength, "Fake artifact strength (0 disables)")
      ->capture_default_str();
  cmd->add_option("--test-fraction", cfg->test_fraction, "Per-class fraction assigned to the test split")
      ->capture_default_str();
  cmd->add_option("--out", *out, "Output directory")->required();
  cmd->add_option("--seed", cfg->seed, "Random seed")->capture_default_str();
  cmd->callback([&ctx, cfg, out] {
    const Manifest m = synth_dataset(*cfg, *out);
    const auto tr = m.counts(Split::train), te = m.counts(Split::test);
    ctx.out << "wrote " << m.records.size() << " clips to " << *out << " (train " << tr[0] << " real / " << tr[1]
            << " fake, test " << te[0] << " real / " << te[1] << " fake)\n";
  });
}

void add_crop_faces(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("crop-faces", "Crop PPM frames to per-frame face boxes and stack them into a clip");
  struct Opts {
    std::string frames_dir, boxes, out;
    std::size_t size = 256;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--frames-dir", o->frames_dir, "Directory of .ppm frames")->required();
  cmd->add_option("--boxes", o->boxes, "Face-box CSV (frame,x,y,w,h)")->required();
  cmd->add_option("--size", o->size, "Output frame size")->capture_default_str();
  cmd->add_option("--out", o->out, "Output clip file")->required();
  cmd->add_option("--seed", o->seed, "Accepted for uniformity; cropping is deterministic");
  cmd->callback([&ctx, o] {
    const Tensorf frames = read_frames_dir(o->frames_dir);
    const Tensorf faces = crop_faces(frames, read_boxes_csv(o->boxes), o->size);
    write_clip(o->out, frames_to_clip(faces));
    ctx.out << "wrote " << faces.dim(0) << " frames of " << o->size << "x" << o->size << " to " << o->out << "\n";
  });
}

void add_train(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("train", "Train a video network on a manifest");
  struct Opts {
    std::string arch = "r3d", manifest, out = "run", aggregation = "video";
    double width = 1.0;
    std::size_t crop = 0, length = 0, clips_per_video = 1;
    TrainConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--arch", o->arch, "r3d, mc3, r2plus1d, i3d or rcn")->capture_default_str();
  cmd->add_option("--manifest", o->manifest, "Manifest CSV")->required();
  cmd->add_option("--width-mult", o->width, "Channel width multiplier")->capture_default_str();
  cmd->add_option("--epochs", o->cfg.epochs, "Epochs")->capture_default_str();
  cmd->add_option("--batch", o->cfg.batch_size, "Batch size")->capture_default_str();
  cmd->add_option("--lr", o->cfg.base_lr, "Base learning rate")->capture_default_str();
  cmd->add_option("--momentum", o->cfg.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--weight-decay", o->cfg.weight_decay, "Weight decay")->capture_default_str();
  cmd->add_option("--lr-step", o->cfg.lr_step, "Epochs between learning-rate drops")->capture_default_str();
  cmd->add_option("--lr-gamma", o->cfg.lr_gamma, "Learning-rate drop factor")->capture_default_str();
  cmd->add_option("--crop", o->crop, "Spatial crop size (default: architecture input size)");
  cmd->add_option("--clip-length", o->length, "Frames per clip (default: 16, rcn 10)");
  cmd->add_option("--aggregation", o->aggregation, "Test metric aggregation: clip or video")->capture_default_str();
  cmd->add_option("--clips-per-video", o->clips_per_video, "Eval clips per test video")->capture_default_str();
  cmd->add_option("--out", o->out, "Output directory (best.ckpt, last.ckpt, history.csv)")->capture_default_str();
  cmd->add_option("--seed", o->cfg.seed, "Random seed")->capture_default_str();
  cmd->callback([&ctx, o] {
    TrainConfig cfg = o->cfg;
    cfg.arch = ArchSpec::defaults(parse_family(o->arch), o->width);
    if (o->crop > 0) cfg.arch.clip.h = cfg.arch.clip.w = o->crop;
    if (o->length > 0) cfg.arch.clip.t = o->length;
    cfg.manifest = o->manifest;
    cfg.out_dir = o->out;
    cfg.eval.aggregation = parse_aggregation(o->aggregation);
    cfg.eval.clips_per_video = o->clips_per_video;
    cfg.log = &ctx.out;
    const TrainResult r = train(cfg);
    ctx.out << "best roc_auc " << format_metric(r.best_auc()) << " (epoch " << r.best_auc_epoch << "), best accuracy "
            << format_metric(r.best_acc()) << " (epoch " << r.best_acc_epoch << ")\n"
            << "checkpoint " << r.checkpoint.string() << "\nhistory " << r.history_file.string() << "\n";
  });
}

void add_eval(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("eval", "Evaluate a trained checkpoint on a manifest split");
  struct Opts {
    std::string ckpt, manifest, split = "test", aggregation = "video", report, roc;
    std::size_t clips_per_video = 1, batch = 8;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--ckpt", o->ckpt, "Checkpoint written by train")->required();
  cmd->add_option("--manifest", o->manifest, "Manifest CSV")->required();
  cmd->add_option("--split", o->split, "train or test")->capture_default_str();
  cmd->add_option("--aggregation", o->aggregation, "clip or video")->capture_default_str();
  cmd->add_option("--clips-per-video", o->clips_per_video, "Evenly spaced clips per video")->capture_default_str();
  cmd->add_option("--batch", o->batch, "Batch size")->capture_default_str();
  cmd->add_option("--report", o->report, "Write the JSON report here as well as to stdout");
  cmd->add_option("--roc", o->roc, "Write the ROC curve CSV here");
  cmd->add_option("--seed", o->seed, "Accepted for uniformity; evaluation is deterministic");
  cmd->callback([&ctx, o] {
    TrainedModel m = load_trained(o->ckpt);
    const Split split = require_split(o->split);
    EvalOptions eo{parse_aggregation(o->aggregation), o->clips_per_video, o->batch};
    const EvalResult r = evaluate(m.network, m.norm, load_manifest(o->manifest), split, eo);
    if (!o->roc.empty()) write_roc_csv(r.curve, o->roc);
    emit_report(ctx, make_report(family_name(m.network.spec().family), split, eo.aggregation, r, o->roc, m.epoch),
                o->report);
  });
}

struct DftOpts {
  std::string manifest, split, aggregation = "video", report, roc, mode = "log";
  std::size_t frames_per_video = 4;
  std::uint64_t seed = 0;
};

void add_dft_common(CLI::App* cmd, DftOpts& o) {
  cmd->add_option("--manifest", o.manifest, "Manifest CSV")->required();
  cmd->add_option("--frames-per-video", o.frames_per_video, "Evenly spaced frames per clip")->capture_default_str();
  cmd->add_option("--mode", o.mode, "Spectrum amplitude: log or raw")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
}

void add_dft_train(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("dft-train", "Fit the logistic-regression spectrum detector on the train split");
  auto o = std::make_shared<DftOpts>();
  auto model_path = std::make_shared<std::string>();
  auto lr_opts = std::make_shared<LogRegOptions>();
  add_dft_common(cmd, *o);
  cmd->add_option("--out-model", *model_path, "Model file")->required();
  cmd->add_option("--lr", lr_opts->lr, "Gradient-descent step")->capture_default_str();
  cmd->add_option("--l2", lr_opts->l2, "L2 penalty")->capture_default_str();
  cmd->add_option("--max-iters", lr_opts->max_iters, "Iteration cap")->capture_default_str();
  cmd->callback([&ctx, o, model_path, lr_opts] {
    const FrameFeatures f = dft_features(load_manifest(o->manifest), Split::train, o->frames_per_video,
                                         parse_mode(o->mode));
    const LogRegResult r = logreg_train(f.features, f.labels, *lr_opts);
    save_logreg(r.model, *model_path);
    const EvalResult ev = dft_evaluate(r.model, f, Aggregation::clip);
    ctx.out << "trained on " << f.features.size() << " frames; " << r.model.iterations << " iterations, loss "
            << format_metric(r.model.final_loss) << ", train accuracy " << format_metric(ev.accuracy) << "\n"
            << "model " << *model_path << "\n";
  });
}

void add_dft_eval(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("dft-eval", "Evaluate a spectrum detector model on a manifest split");
  auto o = std::make_shared<DftOpts>();
  o->split = "test";
  auto model_path = std::make_shared<std::string>();
  add_dft_common(cmd, *o);
  cmd->add_option("--model", *model_path, "Model file from dft-train")->required();
  cmd->add_option("--split", o->split, "train or test")->capture_default_str();
  cmd->add_option("--aggregation", o->aggregation, "clip (per frame) or video")->capture_default_str();
  cmd->add_option("--report", o->report, "Write the JSON report here as well as to stdout");
  cmd->add_option("--roc", o->roc, "Write the ROC curve CSV here");
  cmd->callback([&ctx, o, model_path] {
    const Split split = require_split(o->split);
    const FrameFeatures f = dft_features(load_manifest(o->manifest), split, o->frames_per_video, parse_mode(o->mode));
    const Aggregation agg = parse_aggregation(o->aggregation);
    const EvalResult r = dft_evaluate(load_logreg(*model_path), f, agg);
    if (!o->roc.empty()) write_roc_csv(r.curve, o->roc);
    emit_report(ctx, make_report("dft", split, agg, r, o->roc), o->report);
  });
}

void add_dft_cluster(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("dft-cluster", "Cluster spectrum features with k-means (k=2) without labels");
  auto o = std::make_shared<DftOpts>();
  o->split = "all";
  auto out_csv = std::make_shared<std::string>();
  add_dft_common(cmd, *o);
  cmd->add_option("--split", o->split, "train, test or all")->capture_default_str();
  cmd->add_option("--out-csv", *out_csv, "Write source,frame_label,cluster_label rows here");
  cmd->callback([&ctx, o, out_csv] {
    const Manifest m = load_manifest(o->manifest);
    const FrameFeatures f = dft_features(m, parse_split_option(o->split), o->frames_per_video, parse_mode(o->mode));
    const KMeansResult km = kmeans(f.features, 2, o->seed);
    const std::vector<int> mapped = clusters_to_labels(km, f.features);
    ctx.out << "clustered " << f.features.size() << " frames in " << km.iterations << " iterations; agreement with "
            << "labels " << format_metric(cluster_agreement(mapped, f.labels)) << "\n";
    if (!out_csv->empty()) {
      std::ofstream csv(*out_csv, std::ios::binary);
      if (!csv) throw IoError("cannot write " + *out_csv);
      csv << "video,label,cluster_label\n";
      for (std::size_t i = 0; i < mapped.size(); ++i) csv << f.video[i] << ',' << f.labels[i] << ',' << mapped[i] << '\n';
    }
  });
}

void add_dft_stats(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("dft-stats", "Per-bin mean and std of real and fake spectrum features");
  auto o = std::make_shared<DftOpts>();
  o->split = "all";
  auto out_csv = std::make_shared<std::string>();
  add_dft_common(cmd, *o);
  cmd->add_option("--split", o->split, "train, test or all")->capture_default_str();
  cmd->add_option("--out-csv", *out_csv, "Output CSV")->required();
  cmd->callback([&ctx, o, out_csv] {
    const FrameFeatures f = dft_features(load_manifest(o->manifest), parse_split_option(o->split),
                                         o->frames_per_video, parse_mode(o->mode));
    write_stats_csv(spectrum_stats(f.features, f.labels), *out_csv);
    ctx.out << "wrote " << kFeatureLength << " bins from " << f.features.size() << " frames to " << *out_csv << "\n";
  });
}

void add_gradcheck(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable layer");
  struct Opts {
    bool all = false;
    double tol = 1e-4;
    GradcheckOptions g;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_flag("--all", o->all, "Run every check (the only mode)");
  cmd->add_option("--tol", o->tol, "Maximum relative error")->capture_default_str();
  cmd->add_option("--step", o->g.step, "Central-difference step")->capture_default_str();
  cmd->add_option("--seed", o->g.seed, "Random seed")->capture_default_str();
  cmd->callback([&ctx, o] {
    bool ok = true;
    for (const auto& r : run_gradient_suite(o->g)) {
      const bool pass = r.passed(o->tol);
      ok &= pass;
      char line[128];
      std::snprintf(line, sizeof line, "%-24s max_rel_error %.3e %s\n", r.op.c_str(), r.max_error(),
                    pass ? "PASS" : "FAIL");
      ctx.out << line;
    }
    if (!ok) {
      ctx.err << "gradcheck: at least one layer exceeds tolerance " << o->tol << "\n";
      ctx.code = kExitNumeric;
    }
  });
}

void add_params(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("params", "Print the trainable parameter count of an architecture");
  struct Opts {
    std::string arch = "r3d";
    double width = 1.0;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--arch", o->arch, "r3d, mc3, r2plus1d, i3d or rcn")->capture_default_str();
  cmd->add_option("--width-mult", o->width, "Channel width multiplier")->capture_default_str();
  cmd->add_option("--seed", o->seed, "Initialization seed")->capture_default_str();
  cmd->callback([&ctx, o] {
    const Network<float> net = build<float>(ArchSpec::defaults(parse_family(o->arch), o->width), o->seed);
    char line[96];
    std::snprintf(line, sizeof line, "%s %zu (%.2fM)\n", o->arch.c_str(), net.param_count(),
                  static_cast<double>(net.param_count()) / 1e6);
    ctx.out << line;
  });
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};
  CLI::App app{"Spatio-temporal deepfake detection toolkit", "stfl"};
  app.require_subcommand(1);
  app.fallthrough(false);
  add_synth(app, ctx);
  add_crop_faces(app, ctx);
  add_train(app, ctx);
  add_eval(app, ctx);
  add_dft_train(app, ctx);
  add_dft_eval(app, ctx);
  add_dft_cluster(app, ctx);
  add_dft_stats(app, ctx);
  add_gradcheck(app, ctx);
  add_params(app, ctx);

  if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
    try {
      (void)app.get_subcommand(args[0]);
    } catch (const CLI::OptionNotFound&) {
      err << "error: unknown command '" << args[0] << "'\n" << app.help();
      return kExitUsage;
    }
  }
  // CLI11 parses a reversed argument vector.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    err << "error: " << e.what() << "\n" << target->help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return ctx.code;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace stfl
