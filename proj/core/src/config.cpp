#include "cinepred/config.hpp"

#include "cinepred/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace cinepred {

using nlohmann::json;

std::vector<HyperParams> expand_grid(const MethodGrid& grid, Method method) {
  const bool uses_eta = method != Method::LinReg;
  const bool uses_q = is_recurrent(method);
  const std::vector<double> etas = uses_eta ? grid.eta : std::vector<double>{0.0};
  const std::vector<int> qs = uses_q ? grid.q : std::vector<int>{0};
  std::vector<HyperParams> out;
  for (double eta : etas)
    for (int L : grid.L)
      for (int q : qs) out.push_back({eta, L, q});
  if (out.empty())
    throw InvalidArgument("empty hyper-parameter grid for " + std::string(method_name(method)));
  return out;
}

std::vector<FlowParams> FlowGridSpec::expand() const {
  return make_flow_grid(sigma_init, sigma_sub, sigma_lk, n_layers, n_iter);
}

namespace {

const std::vector<Method> kAllMethods{Method::Rtrl, Method::Uoro,   Method::Snap1,
                                      Method::Dni,  Method::Lms,    Method::LinReg,
                                      Method::FrozenRnn};

std::map<Method, MethodGrid> paper_grids() {
  const MethodGrid rnn{{0.005, 0.01, 0.015, 0.02}, {6, 12, 18, 24, 30}, {10, 30, 50, 70, 90, 110}};
  std::map<Method, MethodGrid> g;
  for (Method m : {Method::Rtrl, Method::Uoro, Method::Snap1, Method::Dni, Method::FrozenRnn})
    g[m] = rnn;
  g[Method::Lms] = {{0.02, 0.05, 0.1, 0.2}, {6, 12, 18, 24, 30}, {}};
  g[Method::LinReg] = {{}, {6, 12, 18, 24, 30}, {}};
  return g;
}

ModeShape parse_shape(const std::string& s) {
  if (s == "translate_x") return ModeShape::TranslateX;
  if (s == "translate_y") return ModeShape::TranslateY;
  if (s == "bump_x") return ModeShape::BumpX;
  if (s == "bump_y") return ModeShape::BumpY;
  throw InvalidArgument("unknown mode shape: " + s);
}

std::string shape_name(ModeShape s) {
  switch (s) {
    case ModeShape::TranslateX: return "translate_x";
    case ModeShape::TranslateY: return "translate_y";
    case ModeShape::BumpX: return "bump_x";
    case ModeShape::BumpY: return "bump_y";
  }
  return "bump_y";
}

SyntheticSpec synthetic_from_json(const json& j) {
  SyntheticSpec s = SyntheticSpec::default_two_mode(j.value("frames", Eigen::Index{200}));
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.sampling_hz = j.value("sampling_hz", s.sampling_hz);
  s.name = j.value("name", s.name);
  s.noise_std = j.value("noise_std", s.noise_std);
  s.blob_count = j.value("blob_count", s.blob_count);
  s.seed = j.value("seed", s.seed);
  s.quantize = j.value("quantize", s.quantize);
  if (j.contains("modes")) {
    s.modes.clear();
    for (const auto& m : j.at("modes")) {
      SyntheticMode mode;
      mode.shape = parse_shape(m.value("shape", std::string("bump_y")));
      mode.amplitude_px = m.value("amplitude_px", mode.amplitude_px);
      mode.frequency_hz = m.value("frequency_hz", mode.frequency_hz);
      mode.phase_mod_depth = m.value("phase_mod_depth", mode.phase_mod_depth);
      mode.phase_mod_hz = m.value("phase_mod_hz", mode.phase_mod_hz);
      mode.harmonic = m.value("harmonic", mode.harmonic);
      mode.center_x = m.value("center_x", mode.center_x);
      mode.center_y = m.value("center_y", mode.center_y);
      mode.bump_sigma = m.value("bump_sigma", mode.bump_sigma);
      s.modes.push_back(mode);
    }
  }
  return s;
}

json synthetic_to_json(const SyntheticSpec& s) {
  json modes = json::array();
  for (const auto& m : s.modes)
    modes.push_back({{"shape", shape_name(m.shape)},
                     {"amplitude_px", m.amplitude_px},
                     {"frequency_hz", m.frequency_hz},
                     {"phase_mod_depth", m.phase_mod_depth},
                     {"phase_mod_hz", m.phase_mod_hz},
                     {"harmonic", m.harmonic},
                     {"center_x", m.center_x},
                     {"center_y", m.center_y},
                     {"bump_sigma", m.bump_sigma}});
  return {{"frames", s.frame_count}, {"height", s.height},       {"width", s.width},
          {"sampling_hz", s.sampling_hz}, {"name", s.name},      {"noise_std", s.noise_std},
          {"blob_count", s.blob_count},   {"seed", s.seed},      {"quantize", s.quantize},
          {"modes", modes}};
}

RunCounts runs_from_json(const json& j, RunCounts base) {
  base.n_cv = j.value("n_cv", base.n_cv);
  base.n_warp = j.value("n_warp", base.n_warp);
  base.n_test_pca = j.value("n_test_pca", base.n_test_pca);
  return base;
}

json runs_to_json(const RunCounts& r) {
  return {{"n_cv", r.n_cv}, {"n_warp", r.n_warp}, {"n_test_pca", r.n_test_pca}};
}

}  // namespace

ExperimentConfig ExperimentConfig::paper() {
  ExperimentConfig c;
  c.profile = "paper";
  c.m_train = 90;
  c.m_train_linreg = 160;
  c.m_cv = 180;
  c.horizons = {1, 2, 3, 4, 5, 6, 7};
  c.methods = kAllMethods;
  c.grids = paper_grids();
  c.n_cp_range = {1, 2, 3, 4};
  c.runs = {250, 25, 250};
  c.run_overrides[Method::Rtrl] = {10, 5, 10};
  c.flow_grid = {{0.1, 0.5, 1.0}, {0.1, 0.5, 1.0}, {1.0, 2.0, 3.0, 4.0}, {1, 2, 3}, {1, 2, 3}};
  return c;
}

ExperimentConfig ExperimentConfig::desk() {
  ExperimentConfig c;
  c.profile = "desk";
  c.m_train = 90;
  c.m_train_linreg = 160;
  c.m_cv = 180;
  c.horizons = {1, 3, 6};
  c.methods = kAllMethods;
  const MethodGrid rnn{{0.01, 0.02}, {6}, {10}};
  for (Method m : {Method::Rtrl, Method::Uoro, Method::Snap1, Method::Dni, Method::FrozenRnn})
    c.grids[m] = rnn;
  c.grids[Method::Lms] = {{0.05, 0.1, 0.2}, {6, 12}, {}};
  c.grids[Method::LinReg] = {{}, {6, 12}, {}};
  c.n_cp_range = {1, 2, 3, 4};
  c.runs = {10, 5, 10};
  c.flow_grid = {{0.1}, {0.5}, {2.0, 3.0}, {2, 3}, {1}};
  SyntheticSpec synth = SyntheticSpec::default_two_mode(200);
  synth.noise_std = 2.0;
  synth.seed = 7;
  c.sequences.push_back({{}, synth});
  return c;
}

ExperimentConfig ExperimentConfig::preset(std::string_view name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw InvalidArgument("unknown profile: " + std::string(name));
}

RunCounts ExperimentConfig::runs_for(Method m) const {
  const auto it = run_overrides.find(m);
  return it == run_overrides.end() ? runs : it->second;
}

Eigen::Index ExperimentConfig::m_train_for(Method m) const {
  return m == Method::LinReg ? m_train_linreg : m_train;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw InvalidArgument("config lists no methods");
  if (horizons.empty()) throw InvalidArgument("config lists no horizons");
  for (int h : horizons)
    if (h < 1 || h > 7) throw InvalidArgument("horizons must lie in [1, 7]");
  if (n_cp_range.empty()) throw InvalidArgument("config lists no n_cp values");
  for (int n : n_cp_range)
    if (n < 1) throw InvalidArgument("n_cp values must be >= 1");
  for (Method m : methods) {
    const auto it = grids.find(m);
    if (it == grids.end())
      throw InvalidArgument("no grid for method " + std::string(method_name(m)));
    for (const auto& p : expand_grid(it->second, m)) {
      if (p.L < 1) throw InvalidArgument("L must be >= 1");
      if (is_recurrent(m) && p.q < 1) throw InvalidArgument("q must be >= 1");
      if (m != Method::LinReg && !(p.eta >= 0.0)) throw InvalidArgument("eta must be >= 0");
    }
    const RunCounts r = runs_for(m);
    if (r.n_cv < 1 || r.n_warp < 1 || r.n_test_pca < 1)
      throw InvalidArgument("run counts must be >= 1");
  }
  if (m_train < 2) throw InvalidArgument("m_train must be >= 2");
  for (Method m : methods)
    if (m_train_for(m) >= m_cv) throw InvalidArgument("m_train must be < m_cv");
  if (flow_grid.expand().empty()) throw InvalidArgument("empty flow grid");
  warp.validate();
}

void ExperimentConfig::validate(Eigen::Index frame_count) const {
  validate();
  if (m_cv >= frame_count) throw InvalidArgument("m_cv must be < the number of frames");
}

ExperimentConfig config_from_json(const json& doc, ExperimentConfig base) {
  try {
    if (doc.contains("profile")) base.profile = doc.at("profile").get<std::string>();
    base.m_train = doc.value("m_train", base.m_train);
    base.m_train_linreg = doc.value("m_train_linreg", base.m_train_linreg);
    base.m_cv = doc.value("m_cv", base.m_cv);
    if (doc.contains("horizons")) base.horizons = doc.at("horizons").get<std::vector<int>>();
    if (doc.contains("methods")) {
      base.methods.clear();
      for (const auto& m : doc.at("methods")) base.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (doc.contains("grids")) {
      for (const auto& [name, g] : doc.at("grids").items()) {
        MethodGrid& grid = base.grids[parse_method(name)];
        if (g.contains("eta")) grid.eta = g.at("eta").get<std::vector<double>>();
        if (g.contains("L")) grid.L = g.at("L").get<std::vector<int>>();
        if (g.contains("q")) grid.q = g.at("q").get<std::vector<int>>();
      }
    }
    if (doc.contains("n_cp_range")) base.n_cp_range = doc.at("n_cp_range").get<std::vector<int>>();
    if (doc.contains("runs")) base.runs = runs_from_json(doc.at("runs"), base.runs);
    if (doc.contains("run_overrides")) {
      // A document that names overrides defines all of them.
      base.run_overrides.clear();
      for (const auto& [name, r] : doc.at("run_overrides").items())
        base.run_overrides[parse_method(name)] = runs_from_json(r, base.runs);
    }
    base.seed = doc.value("seed", base.seed);
    if (doc.contains("flow_grid")) {
      const auto& f = doc.at("flow_grid");
      auto& g = base.flow_grid;
      if (f.contains("sigma_init")) g.sigma_init = f.at("sigma_init").get<std::vector<double>>();
      if (f.contains("sigma_sub")) g.sigma_sub = f.at("sigma_sub").get<std::vector<double>>();
      if (f.contains("sigma_lk")) g.sigma_lk = f.at("sigma_lk").get<std::vector<double>>();
      if (f.contains("n_layers")) g.n_layers = f.at("n_layers").get<std::vector<int>>();
      if (f.contains("n_iter")) g.n_iter = f.at("n_iter").get<std::vector<int>>();
    }
    if (doc.contains("warp")) {
      const auto& w = doc.at("warp");
      base.warp.sigma_warp = w.value("sigma_warp", base.warp.sigma_warp);
      base.warp.cutoff_radius = w.value("cutoff_radius", base.warp.cutoff_radius);
      if (w.contains("fallback")) {
        const auto f = w.at("fallback").get<std::string>();
        if (f == "reference-intensity") base.warp.fallback = WarpFallback::ReferenceIntensity;
        else if (f == "nearest-source") base.warp.fallback = WarpFallback::NearestSource;
        else throw InvalidArgument("unknown warp fallback: " + f);
      }
    }
    if (doc.contains("frame_steps"))
      base.frame_steps = doc.at("frame_steps").get<std::vector<Eigen::Index>>();
    base.reset_before_test = doc.value("reset_before_test", base.reset_before_test);
    if (doc.contains("output_scaling"))
      base.output_scaling = parse_output_scaling(doc.at("output_scaling").get<std::string>());
    if (doc.contains("sequences")) {
      base.sequences.clear();
      for (const auto& s : doc.at("sequences")) {
        SequenceSource src;
        if (s.is_string()) {
          src.manifest = s.get<std::string>();
        } else if (s.contains("synthetic")) {
          src.synthetic = synthetic_from_json(s.at("synthetic"));
        } else if (s.contains("manifest")) {
          src.manifest = s.at("manifest").get<std::string>();
        } else {
          throw InvalidArgument("sequence entries need 'manifest' or 'synthetic'");
        }
        base.sequences.push_back(std::move(src));
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  return base;
}

json config_to_json(const ExperimentConfig& c) {
  json grids = json::object();
  for (const auto& [m, g] : c.grids)
    if (std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end())
      grids[std::string(method_name(m))] = {{"eta", g.eta}, {"L", g.L}, {"q", g.q}};
  json overrides = json::object();
  for (const auto& [m, r] : c.run_overrides) overrides[std::string(method_name(m))] = runs_to_json(r);
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(std::string(method_name(m)));
  json seqs = json::array();
  for (const auto& s : c.sequences) {
    if (s.synthetic) seqs.push_back({{"synthetic", synthetic_to_json(*s.synthetic)}});
    else seqs.push_back({{"manifest", s.manifest.string()}});
  }
  return {{"profile", c.profile},
          {"m_train", c.m_train},
          {"m_train_linreg", c.m_train_linreg},
          {"m_cv", c.m_cv},
          {"horizons", c.horizons},
          {"methods", methods},
          {"grids", grids},
          {"n_cp_range", c.n_cp_range},
          {"runs", runs_to_json(c.runs)},
          {"run_overrides", overrides},
          {"seed", c.seed},
          {"flow_grid",
           {{"sigma_init", c.flow_grid.sigma_init},
            {"sigma_sub", c.flow_grid.sigma_sub},
            {"sigma_lk", c.flow_grid.sigma_lk},
            {"n_layers", c.flow_grid.n_layers},
            {"n_iter", c.flow_grid.n_iter}}},
          {"warp",
           {{"sigma_warp", c.warp.sigma_warp},
            {"cutoff_radius", c.warp.cutoff_radius},
            {"fallback", c.warp.fallback == WarpFallback::ReferenceIntensity
                             ? "reference-intensity"
                             : "nearest-source"}}},
          {"frame_steps", c.frame_steps},
          {"reset_before_test", c.reset_before_test},
          {"output_scaling", std::string(output_scaling_name(c.output_scaling))},
          {"sequences", seqs}};
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  ExperimentConfig c = config_from_json(doc, std::move(base));
  for (auto& s : c.sequences)
    if (!s.synthetic && s.manifest.is_relative()) s.manifest = path.parent_path() / s.manifest;
  return c;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t run_seed(std::uint64_t global_seed, Method method, int h, int n_cp,
                       std::int64_t grid_index, std::int64_t run_index) {
  std::uint64_t s = splitmix64(global_seed);
  for (std::uint64_t v : {static_cast<std::uint64_t>(method), static_cast<std::uint64_t>(h),
                          static_cast<std::uint64_t>(n_cp), static_cast<std::uint64_t>(grid_index),
                          static_cast<std::uint64_t>(run_index)})
    s = splitmix64(s ^ v);
  return s;
}

}  // namespace cinepred
