#include "cinepred/pipeline.hpp"

#include "cinepred/csv.hpp"
#include "cinepred/error.hpp"
#include "cinepred/optical_flow.hpp"
#include "cinepred/synthetic.hpp"
#include "cinepred/warping.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace cinepred {

namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kNcpStage = -1;
constexpr std::int64_t kTestStage = -2;

std::string cell(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::string safe_name(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-') ? c : '_';
  return out.empty() ? std::string("sequence") : out;
}

}  // namespace

SplitRanges split_indices(Eigen::Index M, Eigen::Index m_train, Eigen::Index m_cv) {
  if (m_train < 2) throw InvalidArgument("m_train must be >= 2");
  if (m_cv <= m_train) throw InvalidArgument("empty cross-validation range: m_cv <= m_train");
  if (M <= m_cv) throw InvalidArgument("empty test range: M <= m_cv");
  return {{1, m_train}, {m_train + 1, m_cv}, {m_cv + 1, M}};
}

std::string Forecaster::name() const {
  return method ? std::string(method_name(*method)) : std::string("previous_weight");
}

int Forecaster::run_count(int requested) const {
  return method && is_stochastic(*method) ? std::max(requested, 1) : 1;
}

ForecastRun forecast_weights(const Forecaster& f, int h, const Eigen::MatrixXd& weights,
                             Eigen::Index m_train, Eigen::Index k_end, std::uint64_t seed,
                             const std::vector<Eigen::Index>& reset_before) {
  if (f.method) {
    ForecastSettings s;
    s.method = *f.method;
    s.eta = f.params.eta;
    s.L = f.params.L;
    s.q = f.params.q;
    s.h = h;
    s.output_scaling = f.scaling;
    s.reset_before = reset_before;
    return run_forecast(s, weights, m_train, k_end, seed);
  }
  if (k_end > weights.rows()) throw InvalidArgument("k_end beyond the weight series");
  ForecastRun run;
  run.predicted = Eigen::MatrixXd::Constant(weights.rows(), weights.cols(),
                                            std::numeric_limits<double>::quiet_NaN());
  run.predicted.topRows(k_end) = predict_baseline_previous(weights.topRows(k_end), h);
  return run;
}

GridSearchResult run_grid_search(const Eigen::MatrixXd& weights, Method method, int h,
                                 const std::vector<HyperParams>& grid, int runs,
                                 const SplitRanges& split, std::uint64_t global_seed,
                                 OutputScaling scaling) {
  if (grid.empty()) throw InvalidArgument("empty hyper-parameter grid");
  if (weights.rows() < split.cv.last) throw InvalidArgument("weights do not cover the cv range");
  const int n_cp = static_cast<int>(weights.cols());
  GridSearchResult result;
  result.best_cv_nrmse = std::numeric_limits<double>::infinity();
  bool any_valid = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const Forecaster f{method, grid[g], scaling};
    double sum = 0.0;
    int valid = 0;
    for (int i = 0; i < f.run_count(runs); ++i) {
      const auto seed = run_seed(global_seed, method, h, n_cp, static_cast<std::int64_t>(g), i);
      const ForecastRun run = forecast_weights(f, h, weights, split.train.last, split.cv.last, seed);
      if (run.diverged) continue;
      const double e = weight_nrmse(run.predicted, weights, split.cv);
      if (!std::isfinite(e)) continue;
      sum += e;
      ++valid;
    }
    GridCell c{grid[g], valid > 0 ? sum / valid : std::numeric_limits<double>::quiet_NaN(), valid};
    if (valid > 0 && c.cv_nrmse < result.best_cv_nrmse) {
      result.best_cv_nrmse = c.cv_nrmse;
      result.best_index = g;
      result.best = grid[g];
      any_valid = true;
    }
    result.cells.push_back(c);
  }
  if (!any_valid) throw InvalidArgument("every hyper-parameter combination diverged");
  return result;
}

int select_n_cp(const std::map<int, double>& e_pred) {
  if (e_pred.empty()) throw InvalidArgument("no n_cp candidates");
  int best = 0;
  double best_e = std::numeric_limits<double>::infinity();
  for (const auto& [n, e] : e_pred) {  // ascending n, so strict < keeps the smaller on ties
    if (e < best_e) {
      best_e = e;
      best = n;
    }
  }
  if (best == 0) throw InvalidArgument("no n_cp candidate has a finite error");
  return best;
}

NcpSelection select_n_cp(const ImageSequence& seq, const MotionModel& model,
                         const Eigen::MatrixXd& weights, const std::map<int, Forecaster>& candidates,
                         int h, int n_warp, const SplitRanges& split, std::uint64_t global_seed) {
  NcpSelection sel;
  for (const auto& [n_cp, f] : candidates) {
    if (n_cp < 1 || n_cp > model.n_cp() || n_cp > weights.cols())
      throw InvalidArgument("n_cp candidate exceeds the motion model");
    const MotionModel sub = model.truncated(n_cp);
    const Eigen::MatrixXd w = weights.leftCols(n_cp);
    double sum = 0.0;
    int valid = 0;
    for (int i = 0; i < f.run_count(n_warp); ++i) {
      const auto seed =
          run_seed(global_seed, f.method.value_or(Method::Lms), h, n_cp, kNcpStage, i);
      const ForecastRun run = forecast_weights(f, h, w, split.train.last, split.cv.last, seed);
      if (run.diverged) continue;
      std::vector<std::vector<DisplacementField>> fields(1);
      for (Eigen::Index k = split.cv.first; k <= split.cv.last; ++k)
        fields[0].push_back(sub.reconstruct(run.predicted.row(k - 1).transpose()));
      sum += mean_pred_registration_error(fields, seq, split.cv);
      ++valid;
    }
    sel.e_pred[n_cp] = valid > 0 ? sum / valid : std::numeric_limits<double>::infinity();
  }
  sel.n_cp = select_n_cp(sel.e_pred);
  return sel;
}

MetricSummary summarize(const std::vector<double>& samples) {
  std::vector<double> v;
  for (double s : samples)
    if (std::isfinite(s)) v.push_back(s);
  MetricSummary m;
  m.count = static_cast<int>(v.size());
  if (!v.empty()) m.mean = mean(v);
  if (v.size() >= 2) m.half_range = confidence_half_range(v);
  return m;
}

RunMetrics evaluate_predictions(const ImageSequence& seq,
                                const std::vector<DisplacementField>& truth,
                                const std::vector<Image>& predicted_frames,
                                const std::vector<DisplacementField>& predicted_fields,
                                IndexRange test) {
  if (static_cast<Eigen::Index>(predicted_frames.size()) != test.size() ||
      static_cast<Eigen::Index>(predicted_fields.size()) != test.size())
    throw InvalidArgument("prediction count does not match the test range");
  std::vector<double> nrmse, cc, ss, dmean, dmax;
  for (Eigen::Index k = test.first; k <= test.last; ++k) {
    const Image& pred = predicted_frames[k - test.first];
    const Image& gt = seq.frames[k - 1];
    nrmse.push_back(image_nrmse(pred, gt));
    cc.push_back(cross_correlation(pred, gt));
    ss.push_back(ssim(pred, gt));
    const EndpointErrors e =
        dvf_endpoint_errors(predicted_fields[k - test.first], truth[k - 1], seq.pixel_spacing_mm);
    dmean.push_back(e.mean_mm);
    dmax.push_back(e.max_mm);
  }
  RunMetrics r;
  r.image_nrmse = mean(nrmse);
  r.cross_correlation = mean(cc);
  r.ssim = mean(ss);
  r.mean_dvf_error_mm = mean(dmean);
  r.max_dvf_error_mm = mean(dmax);
  return r;
}

namespace {

AggregateRow aggregate(const std::vector<RunMetrics>& runs, AggregateRow row) {
  auto collect = [&](double RunMetrics::*field) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.*field);
    return summarize(v);
  };
  row.weight_nrmse = collect(&RunMetrics::weight_nrmse);
  row.image_nrmse = collect(&RunMetrics::image_nrmse);
  row.cross_correlation = collect(&RunMetrics::cross_correlation);
  row.ssim = collect(&RunMetrics::ssim);
  row.mean_dvf_error_mm = collect(&RunMetrics::mean_dvf_error_mm);
  row.max_dvf_error_mm = collect(&RunMetrics::max_dvf_error_mm);
  return row;
}

}  // namespace

TestOutput evaluate_test(const ImageSequence& seq, const std::vector<DisplacementField>& truth,
                         const MotionModel& model, const Eigen::MatrixXd& weights,
                         const TestPlan& plan, const SplitRanges& split, const WarpParams& warp,
                         std::uint64_t global_seed) {
  const MotionModel sub = model.truncated(plan.n_cp);
  const Eigen::MatrixXd w = weights.leftCols(plan.n_cp);
  const Forecaster& f = plan.forecaster;
  const int n_pca = f.run_count(plan.n_test_pca);
  const int n_img = f.run_count(plan.n_warp);
  std::vector<Eigen::Index> reset;
  if (plan.reset_before_test) reset.push_back(split.test.first);

  AggregateRow row;
  row.sequence = plan.sequence;
  row.method = f.name();
  row.h = plan.h;
  row.n_cp = plan.n_cp;
  row.params = f.params;
  row.prev_weight_nrmse = weight_nrmse(predict_baseline_previous(w, plan.h), w, split.test);

  TestOutput out;
  std::vector<RunMetrics> runs;
  for (int i = 0; i < std::max(n_pca, n_img); ++i) {
    const auto seed =
        run_seed(global_seed, f.method.value_or(Method::Lms), plan.h, plan.n_cp, kTestStage, i);
    const ForecastRun run =
        forecast_weights(f, plan.h, w, split.train.last, split.test.last, seed, reset);
    if (run.diverged) {
      ++row.failed_runs;
      continue;
    }
    RunMetrics rm;
    if (i < n_img) {
      std::vector<DisplacementField> fields;
      std::vector<Image> frames;
      for (Eigen::Index k = split.test.first; k <= split.test.last; ++k) {
        fields.push_back(sub.reconstruct(run.predicted.row(k - 1).transpose()));
        frames.push_back(warp_image(seq.frames.front(), fields.back(), warp));
      }
      rm = evaluate_predictions(seq, truth, frames, fields, split.test);
      if (out.first_run_frames.empty()) out.first_run_frames = std::move(frames);
    }
    if (i < n_pca) rm.weight_nrmse = weight_nrmse(run.predicted, w, split.test);
    if (out.first_run_weights.size() == 0) out.first_run_weights = run.predicted;
    rm.sequence = plan.sequence;
    rm.method = row.method;
    rm.h = plan.h;
    rm.n_cp = plan.n_cp;
    rm.run = i + 1;
    runs.push_back(rm);
  }
  out.report.aggregate.push_back(aggregate(runs, row));
  out.report.runs = std::move(runs);
  return out;
}

MetricsReport evaluate_image_baselines(const std::string& sequence, const ImageSequence& seq,
                                       const std::vector<DisplacementField>& truth, int h,
                                       const SplitRanges& split, const WarpParams& warp) {
  if (split.test.first - h < 1) throw InvalidArgument("horizon reaches before the first frame");
  MetricsReport report;
  auto add = [&](const std::string& name, const std::vector<Image>& frames,
                 const std::vector<DisplacementField>& fields) {
    RunMetrics rm = evaluate_predictions(seq, truth, frames, fields, split.test);
    rm.sequence = sequence;
    rm.method = name;
    rm.h = h;
    rm.run = 1;
    report.runs.push_back(rm);
    AggregateRow row;
    row.sequence = sequence;
    row.method = name;
    row.h = h;
    report.aggregate.push_back(aggregate({rm}, row));
  };
  std::vector<Image> prev_frames, warped;
  std::vector<DisplacementField> prev_fields, exact_fields;
  for (Eigen::Index k = split.test.first; k <= split.test.last; ++k) {
    prev_frames.push_back(seq.frames[k - 1 - h]);
    prev_fields.push_back(truth[k - 1 - h]);
    exact_fields.push_back(truth[k - 1]);
    warped.push_back(warp_image(seq.frames.front(), truth[k - 1], warp));
  }
  add("previous_image", prev_frames, prev_fields);
  add("original_dvf", warped, exact_fields);
  return report;
}

ImageSequence materialize_sequence(const SequenceSource& source) {
  if (source.synthetic) return generate_synthetic_sequence(*source.synthetic).sequence;
  return load_sequence(source.manifest);
}

namespace {

const char* kRunHeader =
    "sequence,method,h,n_cp,run,weight_nrmse,image_nrmse,cross_correlation,ssim,"
    "mean_dvf_error_mm,max_dvf_error_mm\n";

const char* kAggregateHeader =
    "sequence,method,h,n_cp,eta,L,q,failed_runs,"
    "weight_nrmse,weight_nrmse_half,weight_runs,"
    "image_nrmse,image_nrmse_half,"
    "cross_correlation,cross_correlation_half,"
    "ssim,ssim_half,"
    "mean_dvf_error_mm,mean_dvf_error_mm_half,"
    "max_dvf_error_mm,max_dvf_error_mm_half,image_runs,prev_weight_nrmse\n";

void write_run(std::ostream& out, const RunMetrics& r) {
  out << r.sequence << ',' << r.method << ',' << r.h << ',' << r.n_cp << ',' << r.run << ','
      << cell(r.weight_nrmse) << ',' << cell(r.image_nrmse) << ',' << cell(r.cross_correlation)
      << ',' << cell(r.ssim) << ',' << cell(r.mean_dvf_error_mm) << ','
      << cell(r.max_dvf_error_mm) << '\n';
}

void write_aggregate(std::ostream& out, const AggregateRow& a) {
  const bool learned = a.method != "previous_weight" && a.method != "previous_image" &&
                       a.method != "original_dvf";
  out << a.sequence << ',' << a.method << ',' << a.h << ',' << a.n_cp << ',';
  if (learned) {
    out << cell(a.params.eta) << ',' << a.params.L << ',' << (a.params.q > 0 ? std::to_string(a.params.q) : "");
  } else {
    out << ",,";
  }
  out << ',' << a.failed_runs << ',' << cell(a.weight_nrmse.mean) << ','
      << cell(a.weight_nrmse.half_range) << ',' << a.weight_nrmse.count << ','
      << cell(a.image_nrmse.mean) << ',' << cell(a.image_nrmse.half_range) << ','
      << cell(a.cross_correlation.mean) << ',' << cell(a.cross_correlation.half_range) << ','
      << cell(a.ssim.mean) << ',' << cell(a.ssim.half_range) << ','
      << cell(a.mean_dvf_error_mm.mean) << ',' << cell(a.mean_dvf_error_mm.half_range) << ','
      << cell(a.max_dvf_error_mm.mean) << ',' << cell(a.max_dvf_error_mm.half_range) << ','
      << a.image_nrmse.count << ',' << cell(a.prev_weight_nrmse) << '\n';
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("io", "cannot write " + p.string());
  return out;
}

nlohmann::json summary_json(const MetricSummary& m) {
  nlohmann::json j;
  j["mean"] = std::isfinite(m.mean) ? nlohmann::json(m.mean) : nlohmann::json();
  j["half_range"] = std::isfinite(m.half_range) ? nlohmann::json(m.half_range) : nlohmann::json();
  j["count"] = m.count;
  return j;
}

struct PcaFit {
  MotionModel model;
  Eigen::MatrixXd weights;  ///< M x model.n_cp()
};

PcaFit fit_pca(const std::vector<DisplacementField>& fields, Eigen::Index m_train, int max_cp) {
  const MotionDataMatrix data = build_data_matrix(fields, m_train);
  for (int n = max_cp; n >= 1; --n) {
    try {
      MotionModel model = fit_motion_model(data, n);
      Eigen::MatrixXd w = project_all(model, fields);
      return {std::move(model), std::move(w)};
    } catch (const RankError&) {
    }
  }
  throw RankError("motion data has rank zero");
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir,
                                std::ostream* progress) {
  config.validate();
  if (config.sequences.empty()) throw InvalidArgument("config lists no sequences");
  auto log = [&](const std::string& msg) {
    if (progress) *progress << msg << std::endl;
  };

  fs::create_directories(out_dir);
  open_out(out_dir / "config.json") << config_to_json(config).dump(2) << "\n";

  ExperimentResult result;
  nlohmann::json summary;
  summary["profile"] = config.profile;
  summary["seed"] = config.seed;
  summary["sequences"] = nlohmann::json::array();
  const int max_cp = *std::max_element(config.n_cp_range.begin(), config.n_cp_range.end());

  std::vector<std::string> used_names;
  for (std::size_t si = 0; si < config.sequences.size(); ++si) {
    const ImageSequence seq = materialize_sequence(config.sequences[si]);
    seq.validate();
    config.validate(seq.frame_count());
    std::string name = safe_name(seq.name);
    if (std::find(used_names.begin(), used_names.end(), name) != used_names.end())
      name += "_" + std::to_string(si + 1);
    used_names.push_back(name);
    const fs::path dir = out_dir / name;
    fs::create_directories(dir / "weights");
    fs::create_directories(dir / "frames");
    log("[" + name + "] flow grid search");

    const FlowGridResult flow = optimize_flow_params(seq, config.flow_grid.expand(), config.m_train);
    {
      auto out = open_out(dir / "flow_grid.csv");
      out << "sigma_init,sigma_sub,sigma_lk,n_layers,n_iter,e_gt\n";
      for (const auto& e : flow.entries)
        out << cell(e.params.sigma_init) << ',' << cell(e.params.sigma_sub) << ','
            << cell(e.params.sigma_lk) << ',' << e.params.n_layers << ',' << e.params.n_iter << ','
            << cell(e.e_gt) << '\n';
    }
    log("[" + name + "] registering with best flow parameters");
    const std::vector<DisplacementField> truth = register_sequence(seq, flow.best).fields;

    std::map<Eigen::Index, PcaFit> fits;
    for (Method m : config.methods) {
      const Eigen::Index mt = config.m_train_for(m);
      if (!fits.count(mt)) fits.emplace(mt, fit_pca(truth, mt, max_cp));
    }
    if (!fits.count(config.m_train)) fits.emplace(config.m_train, fit_pca(truth, config.m_train, max_cp));

    auto cv_out = open_out(dir / "cv_grid.csv");
    cv_out << "method,h,n_cp,grid_index,eta,L,q,cv_nrmse,valid_runs\n";
    auto ncp_out = open_out(dir / "ncp_selection.csv");
    ncp_out << "method,h,n_cp,e_pred,selected\n";
    auto runs_out = open_out(dir / "test_runs.csv");
    runs_out << kRunHeader;

    nlohmann::json seq_summary;
    seq_summary["name"] = name;
    seq_summary["frames"] = seq.frame_count();
    seq_summary["flow"] = {{"sigma_init", flow.best.sigma_init}, {"sigma_sub", flow.best.sigma_sub},
                           {"sigma_lk", flow.best.sigma_lk},     {"n_layers", flow.best.n_layers},
                           {"n_iter", flow.best.n_iter},         {"e_gt", flow.best_e_gt}};
    seq_summary["results"] = nlohmann::json::array();

    auto record = [&](const TestOutput& t, const std::string& method, int h,
                      const NcpSelection& sel) {
      for (const auto& r : t.report.runs) write_run(runs_out, r);
      result.report.runs.insert(result.report.runs.end(), t.report.runs.begin(), t.report.runs.end());
      result.report.aggregate.insert(result.report.aggregate.end(), t.report.aggregate.begin(),
                                     t.report.aggregate.end());
      const std::string stem = method + "_h" + std::to_string(h);
      if (t.first_run_weights.size() > 0)
        write_weights_csv(dir / "weights" / (stem + ".csv"), t.first_run_weights);
      const SplitRanges split = split_indices(seq.frame_count(), config.m_train, config.m_cv);
      std::vector<Eigen::Index> steps = config.frame_steps;
      if (steps.empty()) steps.push_back(split.test.first);
      for (Eigen::Index k : steps) {
        if (!split.test.contains(k) || t.first_run_frames.empty()) continue;
        write_pgm(dir / "frames" / (stem + "_k" + std::to_string(k) + ".pgm"),
                  t.first_run_frames[k - split.test.first]);
      }
      const AggregateRow& a = t.report.aggregate.front();
      nlohmann::json e_pred = nlohmann::json::object();
      for (const auto& [n, e] : sel.e_pred)
        e_pred[std::to_string(n)] = std::isfinite(e) ? nlohmann::json(e) : nlohmann::json();
      seq_summary["results"].push_back(
          {{"method", method},
           {"h", h},
           {"n_cp", a.n_cp},
           {"eta", a.params.eta},
           {"L", a.params.L},
           {"q", a.params.q},
           {"e_pred", e_pred},
           {"failed_runs", a.failed_runs},
           {"weight_nrmse", summary_json(a.weight_nrmse)},
           {"prev_weight_nrmse", a.prev_weight_nrmse},
           {"image_nrmse", summary_json(a.image_nrmse)},
           {"cross_correlation", summary_json(a.cross_correlation)},
           {"ssim", summary_json(a.ssim)},
           {"mean_dvf_error_mm", summary_json(a.mean_dvf_error_mm)},
           {"max_dvf_error_mm", summary_json(a.max_dvf_error_mm)}});
    };

    auto write_selection = [&](const std::string& method, int h, const NcpSelection& sel) {
      for (const auto& [n, e] : sel.e_pred)
        ncp_out << method << ',' << h << ',' << n << ',' << cell(e) << ','
                << (n == sel.n_cp ? 1 : 0) << '\n';
    };

    for (Method m : config.methods) {
      const PcaFit& fit = fits.at(config.m_train_for(m));
      const SplitRanges split = split_indices(seq.frame_count(), config.m_train_for(m), config.m_cv);
      const RunCounts rc = config.runs_for(m);
      const auto grid = expand_grid(config.grids.at(m), m);
      for (int h : config.horizons) {
        log("[" + name + "] " + std::string(method_name(m)) + " h=" + std::to_string(h));
        std::map<int, Forecaster> candidates;
        for (int n_cp : config.n_cp_range) {
          if (n_cp > fit.model.n_cp()) continue;
          const GridSearchResult gs =
              run_grid_search(fit.weights.leftCols(n_cp), m, h, grid, rc.n_cv, split, config.seed,
                              config.output_scaling);
          for (std::size_t g = 0; g < gs.cells.size(); ++g) {
            const auto& c = gs.cells[g];
            cv_out << method_name(m) << ',' << h << ',' << n_cp << ',' << g << ','
                   << (m == Method::LinReg ? "" : cell(c.params.eta)) << ',' << c.params.L << ','
                   << (c.params.q > 0 ? std::to_string(c.params.q) : "") << ','
                   << cell(c.cv_nrmse) << ',' << c.valid_runs << '\n';
          }
          candidates[n_cp] = Forecaster{m, gs.best, config.output_scaling};
        }
        if (candidates.empty()) throw RankError("no n_cp value fits the motion model rank");
        const NcpSelection sel = select_n_cp(seq, fit.model, fit.weights, candidates, h,
                                             rc.n_warp, split, config.seed);
        write_selection(std::string(method_name(m)), h, sel);
        TestPlan plan{name, candidates.at(sel.n_cp), h, sel.n_cp, rc.n_test_pca, rc.n_warp,
                      config.reset_before_test};
        const TestOutput t =
            evaluate_test(seq, truth, fit.model, fit.weights, plan, split, config.warp, config.seed);
        record(t, std::string(method_name(m)), h, sel);
      }
    }

    // Baselines on the PCA fit shared by the online methods.
    const PcaFit& base_fit = fits.at(config.m_train);
    const SplitRanges split = split_indices(seq.frame_count(), config.m_train, config.m_cv);
    for (int h : config.horizons) {
      log("[" + name + "] baselines h=" + std::to_string(h));
      std::map<int, Forecaster> candidates;
      for (int n_cp : config.n_cp_range)
        if (n_cp <= base_fit.model.n_cp()) candidates[n_cp] = Forecaster{};
      const NcpSelection sel =
          select_n_cp(seq, base_fit.model, base_fit.weights, candidates, h, 1, split, config.seed);
      write_selection("previous_weight", h, sel);
      TestPlan plan{name, Forecaster{}, h, sel.n_cp, 1, 1, false};
      record(evaluate_test(seq, truth, base_fit.model, base_fit.weights, plan, split, config.warp,
                           config.seed),
             "previous_weight", h, sel);

      const MetricsReport img = evaluate_image_baselines(name, seq, truth, h, split, config.warp);
      for (const auto& r : img.runs) write_run(runs_out, r);
      result.report.runs.insert(result.report.runs.end(), img.runs.begin(), img.runs.end());
      for (const auto& a : img.aggregate) {
        result.report.aggregate.push_back(a);
        seq_summary["results"].push_back({{"method", a.method},
                                          {"h", h},
                                          {"image_nrmse", summary_json(a.image_nrmse)},
                                          {"cross_correlation", summary_json(a.cross_correlation)},
                                          {"ssim", summary_json(a.ssim)},
                                          {"mean_dvf_error_mm", summary_json(a.mean_dvf_error_mm)},
                                          {"max_dvf_error_mm", summary_json(a.max_dvf_error_mm)}});
      }
    }
    summary["sequences"].push_back(seq_summary);
  }

  {
    auto out = open_out(out_dir / "aggregate.csv");
    out << kAggregateHeader;
    for (const auto& a : result.report.aggregate) write_aggregate(out, a);
  }
  result.summary_path = out_dir / "summary.json";
  open_out(result.summary_path) << summary.dump(2) << "\n";
  return result;
}

}  // namespace cinepred
