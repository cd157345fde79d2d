// cinepred: command line front end of the prediction pipeline.

#include "cinepred/config.hpp"
#include "cinepred/csv.hpp"
#include "cinepred/error.hpp"
#include "cinepred/forecasters.hpp"
#include "cinepred/image_io.hpp"
#include "cinepred/metrics.hpp"
#include "cinepred/optical_flow.hpp"
#include "cinepred/pca_model.hpp"
#include "cinepred/pipeline.hpp"
#include "cinepred/synthetic.hpp"
#include "cinepred/warping.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace cinepred;
using nlohmann::json;

namespace {

int fail(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", message}, {"kind", kind}}.dump() << std::endl;
  return 2;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

ExperimentConfig resolve_config(const std::string& profile, const std::string& config_path) {
  ExperimentConfig c = ExperimentConfig::preset(profile);
  if (!config_path.empty()) c = load_config(config_path, c);
  return c;
}

WarpFallback parse_fallback(const std::string& s) {
  if (s == "reference-intensity") return WarpFallback::ReferenceIntensity;
  if (s == "nearest-source") return WarpFallback::NearestSource;
  throw InvalidArgument("unknown fallback: " + s);
}

void add_flow_flags(CLI::App* cmd, FlowParams& p) {
  cmd->add_option("--sigma-init", p.sigma_init, "pre-filter std (0 disables)");
  cmd->add_option("--sigma-sub", p.sigma_sub, "std before each decimation");
  cmd->add_option("--sigma-lk", p.sigma_lk, "std of the moment-matrix window");
  cmd->add_option("--layers", p.n_layers, "pyramid levels");
  cmd->add_option("--iterations", p.n_iter, "refinements per level");
}

void add_warp_flags(CLI::App* cmd, WarpParams& w, std::string& fallback) {
  cmd->add_option("--sigma-warp", w.sigma_warp, "Gaussian kernel std (px)");
  cmd->add_option("--cutoff", w.cutoff_radius, "kernel cutoff radius (px)");
  cmd->add_option("--fallback", fallback, "reference-intensity | nearest-source");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Future-frame prediction for 2D cine sequences"};
  app.require_subcommand(1);

  std::string profile = "desk";
  std::string config_path;
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::string out_dir = "out";

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic two-mode sequence");
  Eigen::Index synth_frames = 200;
  double synth_noise = 2.0;
  synth->add_option("--frames", synth_frames, "number of frames");
  synth->add_option("--noise", synth_noise, "Gaussian intensity noise std");
  synth->add_option("--seed", seed, "generator seed");
  synth->add_option("--out-dir", out_dir, "output directory");

  // flow
  auto* flow = app.add_subcommand("flow", "register every frame onto frame 1");
  std::string manifest;
  FlowParams flow_params;
  flow->add_option("--manifest", manifest, "sequence manifest")->required();
  flow->add_option("--out-dir", out_dir, "output directory");
  add_flow_flags(flow, flow_params);

  // flow-grid
  auto* flow_grid = app.add_subcommand("flow-grid", "grid search of the flow parameters");
  Eigen::Index m_train = 90;
  flow_grid->add_option("--manifest", manifest, "sequence manifest")->required();
  flow_grid->add_option("--m-train", m_train, "frames 2..m_train enter the error");
  flow_grid->add_option("--profile", profile, "desk | paper");
  flow_grid->add_option("--config", config_path, "JSON config overriding the profile");
  flow_grid->add_option("--out-dir", out_dir, "output directory");

  // fit-pca
  auto* fit = app.add_subcommand("fit-pca", "fit the PCA motion model");
  std::string dvfs_path;
  Eigen::Index n_cp = 3;
  fit->add_option("--dvfs", dvfs_path, "DVF list (dvfs.json)")->required();
  fit->add_option("--m-train", m_train, "training fields");
  fit->add_option("--n-cp", n_cp, "number of components");
  fit->add_option("--out-dir", out_dir, "output directory");

  // forecast
  auto* forecast = app.add_subcommand("forecast", "forecast a PCA weight series");
  std::string weights_path, method_str = "lms", out_path = "predicted_weights.csv";
  ForecastSettings fs_settings;
  Eigen::Index m_cv = 180;
  forecast->add_option("--weights", weights_path, "weights CSV (k,w_1,...)")->required();
  forecast->add_option("--method", method_str, "rtrl|uoro|snap1|dni|lms|linreg|frozen_rnn");
  forecast->add_option("--eta", fs_settings.eta, "learning rate");
  forecast->add_option("--L", fs_settings.L, "signal history length");
  forecast->add_option("--q", fs_settings.q, "hidden units");
  forecast->add_option("--horizon", fs_settings.h, "horizon in steps");
  std::string scaling_str = "affine";
  forecast->add_option("--output-scaling", scaling_str, "affine | literal");
  forecast->add_option("--m-train", m_train, "training range end");
  forecast->add_option("--m-cv", m_cv, "cross-validation range end");
  forecast->add_option("--seed", seed, "run seed");
  forecast->add_option("--out", out_path, "predicted weights CSV");

  // warp
  auto* warp = app.add_subcommand("warp", "warp an image by a push-forward field");
  std::string reference_path, dvf_path, fallback = "reference-intensity";
  WarpParams warp_params;
  warp->add_option("--reference", reference_path, "reference PGM")->required();
  warp->add_option("--dvf", dvf_path, "DVF1 field")->required();
  warp->add_option("--out", out_path, "output PGM")->required();
  add_warp_flags(warp, warp_params, fallback);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "image metrics of predicted weights");
  std::string model_dir;
  Eigen::Index first = 0, last = 0;
  evaluate->add_option("--manifest", manifest, "sequence manifest")->required();
  evaluate->add_option("--model", model_dir, "fit-pca output directory")->required();
  evaluate->add_option("--weights", weights_path, "predicted weights CSV")->required();
  evaluate->add_option("--dvfs", dvfs_path, "reference DVF list")->required();
  evaluate->add_option("--first", first, "first time index (default: first predicted row)");
  evaluate->add_option("--last", last, "last time index (default: last predicted row)");
  add_warp_flags(evaluate, warp_params, fallback);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run the full protocol");
  experiment->add_option("--profile", profile, "desk | paper");
  experiment->add_option("--config", config_path, "JSON config overriding the profile");
  experiment->add_option("--seed", seed, "global seed")->each([&](const std::string&) {
    seed_given = true;
  });
  experiment->add_option("--out-dir", out_dir, "output directory");
  bool quiet = false;
  experiment->add_flag("--quiet", quiet, "no progress lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*synth) {
      SyntheticSpec spec = SyntheticSpec::default_two_mode(synth_frames);
      spec.noise_std = synth_noise;
      spec.seed = seed;
      const SyntheticGroundTruth gt = generate_synthetic_sequence(spec);
      const fs::path dir(out_dir);
      const fs::path m = save_sequence(gt.sequence, dir);
      const fs::path d = save_dvf_list(gt.true_dvfs, dir / "true_dvfs");
      Eigen::MatrixXd w(spec.frame_count, static_cast<Eigen::Index>(gt.weight_signals.size()));
      for (std::size_t j = 0; j < gt.weight_signals.size(); ++j)
        for (Eigen::Index k = 0; k < spec.frame_count; ++k)
          w(k, static_cast<Eigen::Index>(j)) = gt.weight_signals[j][static_cast<std::size_t>(k)];
      write_weights_csv(dir / "true_signals.csv", w);
      std::cout << json{{"manifest", m.string()}, {"true_dvfs", d.string()}}.dump() << "\n";
    } else if (*flow) {
      const ImageSequence seq = load_sequence(manifest);
      const DvfSeries series = register_sequence(seq, flow_params);
      const fs::path list = save_dvf_list(series.fields, out_dir);
      std::cout << json{{"dvfs", list.string()}}.dump() << "\n";
    } else if (*flow_grid) {
      const ExperimentConfig c = resolve_config(profile, config_path);
      const ImageSequence seq = load_sequence(manifest);
      const FlowGridResult r = optimize_flow_params(seq, c.flow_grid.expand(), m_train);
      fs::create_directories(out_dir);
      std::ofstream out(fs::path(out_dir) / "flow_grid.csv");
      out << "sigma_init,sigma_sub,sigma_lk,n_layers,n_iter,e_gt\n";
      for (const auto& e : r.entries)
        out << format_double(e.params.sigma_init) << ',' << format_double(e.params.sigma_sub) << ','
            << format_double(e.params.sigma_lk) << ',' << e.params.n_layers << ','
            << e.params.n_iter << ',' << format_double(e.e_gt) << '\n';
      std::cout << json{{"sigma_init", r.best.sigma_init}, {"sigma_sub", r.best.sigma_sub},
                        {"sigma_lk", r.best.sigma_lk},     {"n_layers", r.best.n_layers},
                        {"n_iter", r.best.n_iter},         {"e_gt", r.best_e_gt}}
                       .dump()
                << "\n";
    } else if (*fit) {
      const auto fields = load_dvf_list(dvfs_path);
      const MotionModel model = fit_motion_model(build_data_matrix(fields, m_train), n_cp);
      model.save(out_dir, m_train);
      write_weights_csv(fs::path(out_dir) / "weights.csv", project_all(model, fields));
      json ev = json::array();
      for (Eigen::Index j = 0; j < model.n_cp(); ++j) ev.push_back(model.lambdas()[j]);
      std::cout << json{{"model", out_dir}, {"lambdas", ev}}.dump() << "\n";
    } else if (*forecast) {
      const Eigen::MatrixXd w = read_weights_csv(weights_path);
      fs_settings.method = parse_method(method_str);
      fs_settings.output_scaling = parse_output_scaling(scaling_str);
      const ForecastRun run = run_forecast(fs_settings, w, m_train, w.rows(), seed);
      write_weights_csv(out_path, run.predicted);
      json out{{"predicted", out_path}, {"diverged", run.diverged}};
      if (run.diverged) out["failure"] = run.failure;
      if (!run.diverged && m_cv > m_train && m_cv <= w.rows())
        out["cv_nrmse"] = weight_nrmse(run.predicted, w, {m_train + 1, m_cv});
      if (!run.diverged && m_cv < w.rows())
        out["test_nrmse"] = weight_nrmse(run.predicted, w, {m_cv + 1, w.rows()});
      std::cout << out.dump() << "\n";
    } else if (*warp) {
      warp_params.fallback = parse_fallback(fallback);
      const Image out = warp_image(read_pgm(reference_path), read_dvf(dvf_path), warp_params);
      write_pgm(out_path, out);
      std::cout << json{{"out", out_path}}.dump() << "\n";
    } else if (*evaluate) {
      warp_params.fallback = parse_fallback(fallback);
      const ImageSequence seq = load_sequence(manifest);
      const MotionModel model = MotionModel::load(model_dir);
      const Eigen::MatrixXd w = read_weights_csv(weights_path);
      const auto truth = load_dvf_list(dvfs_path);
      if (w.cols() != model.n_cp()) throw InvalidArgument("weights do not match the model's n_cp");
      if (first == 0) {
        first = 2;
        while (first <= w.rows() && w.row(first - 1).array().isNaN().any()) ++first;
      }
      if (last == 0) last = w.rows();
      const IndexRange range{first, std::min(last, seq.frame_count())};
      if (range.empty()) throw InvalidArgument("no predicted frames to evaluate");
      std::vector<Image> frames;
      std::vector<DisplacementField> fields;
      for (Eigen::Index k = range.first; k <= range.last; ++k) {
        if (w.row(k - 1).array().isNaN().any())
          throw InvalidArgument("missing prediction at k=" + std::to_string(k));
        fields.push_back(model.reconstruct(w.row(k - 1).transpose()));
        frames.push_back(warp_image(seq.frames.front(), fields.back(), warp_params));
      }
      const RunMetrics r = evaluate_predictions(seq, truth, frames, fields, range);
      std::cout << json{{"first", range.first},
                        {"last", range.last},
                        {"image_nrmse", finite_or_null(r.image_nrmse)},
                        {"cross_correlation", finite_or_null(r.cross_correlation)},
                        {"ssim", finite_or_null(r.ssim)},
                        {"mean_dvf_error_mm", finite_or_null(r.mean_dvf_error_mm)},
                        {"max_dvf_error_mm", finite_or_null(r.max_dvf_error_mm)}}
                       .dump()
                << "\n";
    } else if (*experiment) {
      ExperimentConfig c = resolve_config(profile, config_path);
      if (seed_given) c.seed = seed;
      const ExperimentResult r = run_experiment(c, out_dir, quiet ? nullptr : &std::cerr);
      std::cout << json{{"summary", r.summary_path.string()},
                        {"aggregate", (fs::path(out_dir) / "aggregate.csv").string()}}
                       .dump()
                << "\n";
    }
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
