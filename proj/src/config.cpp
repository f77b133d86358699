#include "brainseg/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace brainseg {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorKind::Config, where + ": " + what);
}

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) bad(where, "unknown key '" + k + "'");
  }
}

double get_number(const json& obj, const char* key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) bad(where + "." + key, "expected a number");
  return v.get<double>();
}

long long get_integer(const json& obj, const char* key, const std::string& where, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad(where + "." + key, "expected an integer");
  return v.get<long long>();
}

std::uint64_t get_seed(const json& obj, const char* key, const std::string& where, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  bad(where + "." + key, "expected a non-negative integer");
}

std::string get_string(const json& obj, const char* key, const std::string& where, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) bad(where + "." + key, "expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, const char* key, const std::string& where, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) bad(where + "." + key, "expected true or false");
  return v.get<bool>();
}

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, what + " is not valid JSON: " + e.what());
  }
}

// ----- pipeline -----

std::vector<Channel> parse_channels(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty() || v.size() > kMaxChannels) bad(where, "expected 1 to 3 channel names");
  std::vector<Channel> out;
  for (const auto& c : v) {
    if (!c.is_string()) bad(where, "channel names must be strings");
    auto ch = channel_from_name(c.get<std::string>());
    if (!ch) bad(where, "unknown channel '" + c.get<std::string>() + "'");
    for (Channel seen : out) {
      if (seen == *ch) bad(where, "channel listed twice");
    }
    out.push_back(*ch);
  }
  return out;
}

StageConfig parse_stage(const json& obj, const std::string& where, StageConfig stage) {
  allow_keys(obj, where, {"kernel", "a", "b", "sigma", "channels"});
  const std::string kind = get_string(obj, "kernel", where, kernel_name(stage.kernel.kind));
  if (kind == "linear") {
    stage.kernel = KernelSpec::linear();
    stage.sigma_median = false;
  } else if (kind == "sigmoid") {
    stage.kernel = KernelSpec::sigmoid(get_number(obj, "a", where, 1.0), get_number(obj, "b", where, -1.0));
    stage.sigma_median = false;
  } else if (kind == "rbf") {
    stage.kernel = KernelSpec::rbf(1.0);
    stage.sigma_median = true;
    if (obj.contains("sigma")) {
      const json& s = obj.at("sigma");
      if (s.is_string()) {
        if (s.get<std::string>() != "median") bad(where + ".sigma", "expected a number or \"median\"");
      } else if (s.is_number()) {
        stage.kernel.sigma = s.get<double>();
        stage.sigma_median = false;
      } else {
        bad(where + ".sigma", "expected a number or \"median\"");
      }
    }
  } else {
    bad(where + ".kernel", "unknown kernel '" + kind + "'");
  }
  if (obj.contains("channels")) stage.channels = parse_channels(obj.at("channels"), where + ".channels");
  return stage;
}

json stage_to_json(const StageConfig& s) {
  json j;
  j["kernel"] = kernel_name(s.kernel.kind);
  if (s.kernel.kind == KernelSpec::Kind::Sigmoid) {
    j["a"] = s.kernel.a;
    j["b"] = s.kernel.b;
  }
  if (s.kernel.kind == KernelSpec::Kind::Rbf) {
    if (s.sigma_median) {
      j["sigma"] = "median";
    } else {
      j["sigma"] = s.kernel.sigma;
    }
  }
  json ch = json::array();
  for (Channel c : s.channels) ch.push_back(channel_name(c));
  j["channels"] = ch;
  return j;
}

SsimParams parse_ssim(const json& j) {
  allow_keys(j, "ssim", {"window", "sigma", "k1", "k2", "dynamic_range"});
  SsimParams s;
  s.window = static_cast<int>(get_integer(j, "window", "ssim", s.window));
  s.sigma = get_number(j, "sigma", "ssim", s.sigma);
  s.k1 = get_number(j, "k1", "ssim", s.k1);
  s.k2 = get_number(j, "k2", "ssim", s.k2);
  if (j.contains("dynamic_range") && !j.at("dynamic_range").is_null()) {
    s.dynamic_range = get_number(j, "dynamic_range", "ssim", 0.0);
  }
  return s;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

// ----- phantom -----

ChannelTriple parse_triple(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != kMaxChannels) bad(where, "expected [t1w, t2w, pdw]");
  ChannelTriple t{};
  for (int c = 0; c < kMaxChannels; ++c) {
    if (!v[c].is_number()) bad(where, "expected numbers");
    t[c] = v[c].get<double>();
  }
  return t;
}

void parse_tissue_table(const json& obj, const std::string& where, std::array<ChannelTriple, kTissueCodes>& table) {
  allow_keys(obj, where, {"CSF", "GM", "WM", "MWM"});
  for (const auto& [k, v] : obj.items()) table[code(*tissue_from_name(k))] = parse_triple(v, where + "." + k);
}

json tissue_table_to_json(const std::array<ChannelTriple, kTissueCodes>& table) {
  json j = json::object();
  for (Tissue t : {Tissue::Csf, Tissue::Gm, Tissue::Wm, Tissue::Mwm}) {
    const auto& row = table[code(t)];
    j[tissue_name(t)] = {row[0], row[1], row[2]};
  }
  return j;
}

json box_to_json(const Box& b) {
  return json{{"lo", {b.lo[0], b.lo[1], b.lo[2]}}, {"hi", {b.hi[0], b.hi[1], b.hi[2]}}};
}

Box box_from_json(const json& j, const std::string& where) {
  allow_keys(j, where, {"lo", "hi"});
  Box b;
  for (const char* key : {"lo", "hi"}) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 3) bad(where, "box needs lo and hi triples");
  }
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = j.at("lo")[a].get<int>();
    b.hi[a] = j.at("hi")[a].get<int>();
  }
  return b;
}

json cnr_to_json(const Cnr& c) {
  if (c.kind == Cnr::Kind::Finite) return c.value;
  if (c.kind == Cnr::Kind::Infinite) return "inf";
  return nullptr;
}

Cnr cnr_from_json(const json& j) {
  if (j.is_null()) return Cnr::absent();
  if (j.is_string() && j.get<std::string>() == "inf") return Cnr::infinite();
  if (j.is_number()) return Cnr{Cnr::Kind::Finite, j.get<double>()};
  bad("cnr", "expected a number, \"inf\" or null");
}

}  // namespace

void PipelineConfig::validate_parameters() const {
  partition.validate();
  kfda.validate();
  energy.validate();
  anneal.validate();
  ssim.validate();
  if (max_refine_iters < 1 || max_refine_iters > 5) fail(ErrorKind::Config, "max_refine_iters must be in [1, 5]");
  if (threads < 1 || threads > 256) fail(ErrorKind::Config, "threads must be in [1, 256]");
}

void PipelineConfig::validate() const {
  validate_parameters();
  if (inputs.t1w.empty() && partition_channel == Channel::T1w) fail(ErrorKind::Config, "inputs.t1w is required");
  if (inputs.mask.empty()) fail(ErrorKind::Config, "inputs.mask is required");
  if (inputs.init_labels.empty()) fail(ErrorKind::Config, "inputs.init_labels is required");
}

namespace {

PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir) {
  const json doc = parse(text, "pipeline config");
  allow_keys(doc, "config", {"inputs", "age_profile", "partition", "kfda", "stitch", "ssim", "seed",
                             "max_refine_iters", "output_dir", "write_ssim_map", "threads"});
  PipelineConfig cfg;

  if (!doc.contains("inputs")) bad("config", "missing 'inputs'");
  const json& in = doc.at("inputs");
  allow_keys(in, "inputs", {"t1w", "t2w", "pdw", "mask", "init_labels", "ground_truth"});
  auto path_of = [&](const char* key) -> std::filesystem::path {
    const std::string s = get_string(in, key, "inputs", "");
    return s.empty() ? std::filesystem::path() : resolve(base_dir, s);
  };
  cfg.inputs.t1w = path_of("t1w");
  cfg.inputs.t2w = path_of("t2w");
  cfg.inputs.pdw = path_of("pdw");
  cfg.inputs.mask = path_of("mask");
  cfg.inputs.init_labels = path_of("init_labels");
  if (in.contains("ground_truth") && !in.at("ground_truth").is_null()) cfg.inputs.ground_truth = path_of("ground_truth");

  const std::string profile = get_string(doc, "age_profile", "config", "older");
  auto p = profile_from_name(profile);
  if (!p) bad("age_profile", "expected older, infant or early");
  cfg.age_profile = *p;

  if (doc.contains("partition")) {
    const json& j = doc.at("partition");
    allow_keys(j, "partition", {"bin_count", "max_regions", "min_gain_bits", "min_extent_voxels", "margin", "channel"});
    auto& pp = cfg.partition;
    pp.bin_count = static_cast<int>(get_integer(j, "bin_count", "partition", pp.bin_count));
    pp.max_regions = static_cast<int>(get_integer(j, "max_regions", "partition", pp.max_regions));
    pp.min_gain_bits = get_number(j, "min_gain_bits", "partition", pp.min_gain_bits);
    pp.min_extent_voxels = static_cast<int>(get_integer(j, "min_extent_voxels", "partition", pp.min_extent_voxels));
    pp.margin = static_cast<int>(get_integer(j, "margin", "partition", pp.margin));
    auto ch = channel_from_name(get_string(j, "channel", "partition", "t1w"));
    if (!ch) bad("partition.channel", "unknown channel");
    cfg.partition_channel = *ch;
  }

  if (doc.contains("kfda")) {
    const json& j = doc.at("kfda");
    allow_keys(j, "kfda", {"stage1", "stage2", "mu", "n_max", "delta", "k_vote", "outlier_stds"});
    auto& k = cfg.kfda;
    if (j.contains("stage1")) k.stage1 = parse_stage(j.at("stage1"), "kfda.stage1", k.stage1);
    if (j.contains("stage2")) k.stage2 = parse_stage(j.at("stage2"), "kfda.stage2", k.stage2);
    k.mu = get_number(j, "mu", "kfda", k.mu);
    const long long n_max = get_integer(j, "n_max", "kfda", static_cast<long long>(k.n_max));
    if (n_max < 2) bad("kfda.n_max", "must be >= 2");
    k.n_max = static_cast<std::size_t>(n_max);
    k.categories.delta = get_number(j, "delta", "kfda", k.categories.delta);
    k.categories.k_vote = static_cast<int>(get_integer(j, "k_vote", "kfda", k.categories.k_vote));
    k.categories.outlier_stds = get_number(j, "outlier_stds", "kfda", k.categories.outlier_stds);
  }

  if (doc.contains("stitch")) {
    const json& j = doc.at("stitch");
    allow_keys(j, "stitch", {"w", "beta", "t0", "c", "max_sweeps", "stall_sweeps"});
    cfg.energy.w = get_number(j, "w", "stitch", cfg.energy.w);
    cfg.energy.beta = get_number(j, "beta", "stitch", cfg.energy.beta);
    cfg.anneal.t0 = get_number(j, "t0", "stitch", cfg.anneal.t0);
    cfg.anneal.c = get_number(j, "c", "stitch", cfg.anneal.c);
    cfg.anneal.max_sweeps = static_cast<int>(get_integer(j, "max_sweeps", "stitch", cfg.anneal.max_sweeps));
    cfg.anneal.stall_sweeps = static_cast<int>(get_integer(j, "stall_sweeps", "stitch", cfg.anneal.stall_sweeps));
  }

  if (doc.contains("ssim")) cfg.ssim = parse_ssim(doc.at("ssim"));

  cfg.seed = get_seed(doc, "seed", "config", cfg.seed);
  cfg.anneal.seed = cfg.seed;
  cfg.max_refine_iters = static_cast<int>(get_integer(doc, "max_refine_iters", "config", cfg.max_refine_iters));
  cfg.output_dir = resolve(base_dir, get_string(doc, "output_dir", "config", "out"));
  cfg.write_ssim_map = get_bool(doc, "write_ssim_map", "config", false);
  cfg.threads = static_cast<int>(get_integer(doc, "threads", "config", cfg.threads));
  try {
    cfg.validate();
  } catch (const Error& e) {
    // Range problems in a config document are configuration errors.
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, e.what());
  }
  return cfg;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  try {
    return parse_pipeline_config(text, base_dir);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("pipeline config: ") + e.what());
  }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return pipeline_config_from_json(read_text_file(path), path.parent_path());
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  json in;
  in["t1w"] = c.inputs.t1w.string();
  if (!c.inputs.t2w.empty()) in["t2w"] = c.inputs.t2w.string();
  if (!c.inputs.pdw.empty()) in["pdw"] = c.inputs.pdw.string();
  in["mask"] = c.inputs.mask.string();
  in["init_labels"] = c.inputs.init_labels.string();
  if (c.inputs.ground_truth) in["ground_truth"] = c.inputs.ground_truth->string();
  json j;
  j["inputs"] = in;
  j["age_profile"] = profile_name(c.age_profile);
  j["partition"] = {{"bin_count", c.partition.bin_count},
                    {"max_regions", c.partition.max_regions},
                    {"min_gain_bits", c.partition.min_gain_bits},
                    {"min_extent_voxels", c.partition.min_extent_voxels},
                    {"margin", c.partition.margin},
                    {"channel", channel_name(c.partition_channel)}};
  j["kfda"] = {{"stage1", stage_to_json(c.kfda.stage1)},
               {"stage2", stage_to_json(c.kfda.stage2)},
               {"mu", c.kfda.mu},
               {"n_max", c.kfda.n_max},
               {"delta", c.kfda.categories.delta},
               {"k_vote", c.kfda.categories.k_vote},
               {"outlier_stds", c.kfda.categories.outlier_stds}};
  j["stitch"] = {{"w", c.energy.w},   {"beta", c.energy.beta},          {"t0", c.anneal.t0},
                 {"c", c.anneal.c},   {"max_sweeps", c.anneal.max_sweeps}, {"stall_sweeps", c.anneal.stall_sweeps}};
  j["ssim"] = {{"window", c.ssim.window}, {"sigma", c.ssim.sigma}, {"k1", c.ssim.k1}, {"k2", c.ssim.k2}};
  if (c.ssim.dynamic_range) j["ssim"]["dynamic_range"] = *c.ssim.dynamic_range;
  j["seed"] = c.seed;
  j["max_refine_iters"] = c.max_refine_iters;
  j["output_dir"] = c.output_dir.string();
  j["write_ssim_map"] = c.write_ssim_map;
  j["threads"] = c.threads;
  return j.dump(2);
}

namespace {

PhantomSpec parse_phantom_spec(const std::string& text) {
  const json doc = parse(text, "phantom spec");
  allow_keys(doc, "phantom", {"preset", "dims", "spacing", "seed", "tissue_means", "tissue_stds", "bias_amplitude",
                              "wm_streaks", "geometry", "mwm_region", "degrade"});
  const std::string preset = get_string(doc, "preset", "phantom", "standard");
  const std::uint64_t seed = get_seed(doc, "seed", "phantom", 1);
  PhantomSpec s;
  if (preset == "standard") {
    s = PhantomSpec::standard(seed);
  } else if (preset == "low_contrast") {
    s = PhantomSpec::low_contrast(seed);
  } else {
    bad("phantom.preset", "expected standard or low_contrast");
  }
  if (doc.contains("dims")) {
    const json& d = doc.at("dims");
    if (!d.is_array() || d.size() != 3) bad("phantom.dims", "expected [nx, ny, nz]");
    s.dims = Dims{d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
  }
  if (doc.contains("spacing")) {
    const json& d = doc.at("spacing");
    if (!d.is_array() || d.size() != 3) bad("phantom.spacing", "expected [dx, dy, dz]");
    s.spacing = Spacing{d[0].get<double>(), d[1].get<double>(), d[2].get<double>()};
  }
  if (doc.contains("tissue_means")) parse_tissue_table(doc.at("tissue_means"), "phantom.tissue_means", s.tissue_means);
  if (doc.contains("tissue_stds")) parse_tissue_table(doc.at("tissue_stds"), "phantom.tissue_stds", s.tissue_stds);
  s.bias_amplitude = get_number(doc, "bias_amplitude", "phantom", s.bias_amplitude);
  if (doc.contains("wm_streaks")) {
    const json& j = doc.at("wm_streaks");
    allow_keys(j, "phantom.wm_streaks", {"count", "radius", "intensity_factor"});
    s.wm_streaks.count = static_cast<int>(get_integer(j, "count", "phantom.wm_streaks", s.wm_streaks.count));
    s.wm_streaks.radius = get_number(j, "radius", "phantom.wm_streaks", s.wm_streaks.radius);
    s.wm_streaks.intensity_factor =
        get_number(j, "intensity_factor", "phantom.wm_streaks", s.wm_streaks.intensity_factor);
  }
  if (doc.contains("geometry")) {
    const json& j = doc.at("geometry");
    allow_keys(j, "phantom.geometry", {"csf_radius", "gm_radius", "wm_radius"});
    s.geometry.csf_radius = get_number(j, "csf_radius", "phantom.geometry", s.geometry.csf_radius);
    s.geometry.gm_radius = get_number(j, "gm_radius", "phantom.geometry", s.geometry.gm_radius);
    s.geometry.wm_radius = get_number(j, "wm_radius", "phantom.geometry", s.geometry.wm_radius);
  }
  if (doc.contains("mwm_region")) {
    const json& j = doc.at("mwm_region");
    if (j.is_null()) {
      s.mwm_region.reset();
    } else {
      allow_keys(j, "phantom.mwm_region", {"center", "radius"});
      PhantomSpec::MwmRegion r;
      if (j.contains("center")) {
        const json& c = j.at("center");
        if (!c.is_array() || c.size() != 3) bad("phantom.mwm_region.center", "expected three fractions");
        r.center = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
      }
      r.radius = get_number(j, "radius", "phantom.mwm_region", r.radius);
      s.mwm_region = r;
    }
  }
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  return s;
}

}  // namespace

PhantomSpec phantom_spec_from_json(const std::string& text) {
  try {
    return parse_phantom_spec(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("phantom spec: ") + e.what());
  }
}

PhantomSpec load_phantom_spec(const std::filesystem::path& path) { return phantom_spec_from_json(read_text_file(path)); }

std::string phantom_spec_to_json(const PhantomSpec& s) {
  json j;
  j["dims"] = {s.dims.nx, s.dims.ny, s.dims.nz};
  j["spacing"] = {s.spacing.dx, s.spacing.dy, s.spacing.dz};
  j["seed"] = s.seed;
  j["tissue_means"] = tissue_table_to_json(s.tissue_means);
  j["tissue_stds"] = tissue_table_to_json(s.tissue_stds);
  j["bias_amplitude"] = s.bias_amplitude;
  j["wm_streaks"] = {{"count", s.wm_streaks.count},
                     {"radius", s.wm_streaks.radius},
                     {"intensity_factor", s.wm_streaks.intensity_factor}};
  j["geometry"] = {{"csf_radius", s.geometry.csf_radius},
                   {"gm_radius", s.geometry.gm_radius},
                   {"wm_radius", s.geometry.wm_radius}};
  if (s.mwm_region) {
    const auto& r = *s.mwm_region;
    j["mwm_region"] = {{"center", {r.center[0], r.center[1], r.center[2]}}, {"radius", r.radius}};
  } else {
    j["mwm_region"] = nullptr;
  }
  return j.dump(2);
}

DegradeSpec degrade_spec_from_json(const std::string& text) {
  const json doc = parse(text, "degrade spec");
  // Accept either a bare object or a phantom document with a "degrade" member.
  const json& j = doc.contains("degrade") ? doc.at("degrade") : doc;
  allow_keys(j, "degrade", {"csf_erode_iters", "gm_wm_swap_fraction", "seed"});
  DegradeSpec d;
  d.csf_erode_iters = static_cast<int>(get_integer(j, "csf_erode_iters", "degrade", 0));
  d.gm_wm_swap_fraction = get_number(j, "gm_wm_swap_fraction", "degrade", 0.0);
  d.seed = get_seed(j, "seed", "degrade", 1);
  if (d.csf_erode_iters < 0) bad("degrade.csf_erode_iters", "must be >= 0");
  if (!(d.gm_wm_swap_fraction >= 0.0 && d.gm_wm_swap_fraction <= 1.0)) {
    bad("degrade.gm_wm_swap_fraction", "must be in [0, 1]");
  }
  return d;
}

SsimParams ssim_params_from_json(const std::string& text) {
  SsimParams s;
  try {
    s = parse_ssim(parse(text, "SSIM parameters"));
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("SSIM parameters: ") + e.what());
  }
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  return s;
}

std::string partition_tree_to_json(const PartitionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) {
    nodes.push_back({{"box", box_to_json(n.box)},
                     {"parent", n.parent},
                     {"left", n.left},
                     {"right", n.right},
                     {"axis", n.axis},
                     {"plane", n.plane},
                     {"gain", n.gain},
                     {"leaf_id", n.leaf_id}});
  }
  json leaves = json::array();
  for (const auto& s : tree.leaves) {
    leaves.push_back({{"id", s.id},
                      {"core_box", box_to_json(s.core_box)},
                      {"overlap_box", box_to_json(s.overlap_box)},
                      {"mean_intensity", s.mean_intensity},
                      {"cnr", cnr_to_json(s.cnr)}});
  }
  json j;
  j["dims"] = {tree.dims.nx, tree.dims.ny, tree.dims.nz};
  j["margin"] = tree.margin;
  j["total_mi"] = tree.total_mi;
  j["nodes"] = nodes;
  j["leaves"] = leaves;
  return j.dump(2);
}

PartitionTree partition_tree_from_json(const std::string& text) {
  const json doc = parse(text, "partition tree");
  allow_keys(doc, "partition", {"dims", "margin", "total_mi", "nodes", "leaves"});
  PartitionTree t;
  try {
    const json& d = doc.at("dims");
    t.dims = Dims{d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    t.margin = doc.at("margin").get<int>();
    t.total_mi = doc.at("total_mi").get<double>();
    for (const auto& n : doc.at("nodes")) {
      PartitionNode node;
      node.box = box_from_json(n.at("box"), "node.box");
      node.parent = n.at("parent").get<int>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
      node.axis = n.at("axis").get<int>();
      node.plane = n.at("plane").get<int>();
      node.gain = n.at("gain").get<double>();
      node.leaf_id = n.at("leaf_id").get<int>();
      t.nodes.push_back(node);
    }
    for (const auto& l : doc.at("leaves")) {
      Subdomain s;
      s.id = l.at("id").get<int>();
      s.core_box = box_from_json(l.at("core_box"), "leaf.core_box");
      s.overlap_box = box_from_json(l.at("overlap_box"), "leaf.overlap_box");
      s.mean_intensity = l.at("mean_intensity").get<double>();
      s.cnr = cnr_from_json(l.at("cnr"));
      t.leaves.push_back(s);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed partition tree: ") + e.what());
  }
  for (std::size_t i = 0; i < t.leaves.size(); ++i) {
    const auto& s = t.leaves[i];
    if (s.id != static_cast<int>(i)) fail(ErrorKind::Validation, "partition leaf ids must be dense and ordered");
    if (!s.core_box.within(t.dims) || !s.overlap_box.within(t.dims) || !s.overlap_box.contains(s.core_box)) {
      fail(ErrorKind::Validation, "partition leaf box outside the volume");
    }
  }
  return t;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace brainseg
