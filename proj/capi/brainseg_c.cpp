#include "brainseg/brainseg.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <optional>
#include <string>
#include <variant>

#include "brainseg/config.hpp"
#include "brainseg/nifti.hpp"
#include "brainseg/normalize.hpp"
#include "brainseg/phantom.hpp"
#include "brainseg/pipeline.hpp"
#include "json.hpp"

using namespace brainseg;
namespace fs = std::filesystem;

struct bs_context {
  int threads = 0;  // 0: keep the config's value
  std::optional<std::uint64_t> seed;
  bs_log_fn log = nullptr;
  void* log_user = nullptr;
  std::string last_error;
};

struct bs_volume {
  bs_volume_kind kind = BS_VOLUME_SCALAR;
  std::variant<ScalarVolume, LabelVolume, BrainMask> data;

  const Dims& dims() const {
    return std::visit([](const auto& v) -> const Dims& { return v.dims(); }, data);
  }
};

namespace {

bs_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::Format: return BS_ERR_FORMAT;
    case ErrorKind::Unsupported: return BS_ERR_UNSUPPORTED;
    case ErrorKind::Dimension: return BS_ERR_DIMENSION;
    case ErrorKind::Io: return BS_ERR_IO;
    case ErrorKind::Validation: return BS_ERR_VALIDATION;
    case ErrorKind::Degenerate: return BS_ERR_DEGENERATE;
    case ErrorKind::Singular: return BS_ERR_SINGULAR;
    case ErrorKind::Config: return BS_ERR_CONFIG;
    case ErrorKind::ClassAbsent: return BS_ERR_CLASS_ABSENT;
  }
  return BS_ERR_INTERNAL;
}

struct ArgumentError {
  std::string what;
};

void require(bool ok, const char* what) {
  if (!ok) throw ArgumentError{what};
}

template <typename F>
bs_status guarded(bs_context* ctx, F&& body) {
  if (ctx == nullptr) return BS_ERR_INVALID_ARGUMENT;
  ctx->last_error.clear();
  try {
    body();
    return BS_OK;
  } catch (const Error& e) {
    ctx->last_error = e.what();
    return status_of(e.kind());
  } catch (const ArgumentError& e) {
    ctx->last_error = std::string("invalid argument: ") + e.what;
    return BS_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    ctx->last_error = "out of memory";
    return BS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    ctx->last_error = std::string("internal error: ") + e.what();
    return BS_ERR_INTERNAL;
  }
}

PipelineConfig load_config(const bs_context* ctx, const char* path) {
  require(path != nullptr, "config path is null");
  PipelineConfig cfg = load_pipeline_config(path);
  if (ctx->seed) {
    cfg.seed = *ctx->seed;
    cfg.anneal.seed = *ctx->seed;
  }
  if (ctx->threads > 0) cfg.threads = ctx->threads;
  return cfg;
}

LogFn logger(const bs_context* ctx) {
  if (ctx->log == nullptr) return {};
  return [fn = ctx->log, user = ctx->log_user](const std::string& s) { fn(s.c_str(), user); };
}

const ScalarVolume& scalar(const bs_volume* v, const char* what) {
  require(v != nullptr, what);
  if (v->kind != BS_VOLUME_SCALAR) throw ArgumentError{std::string(what) + " must be a scalar volume"};
  return std::get<ScalarVolume>(v->data);
}

const LabelVolume& labels(const bs_volume* v, const char* what) {
  require(v != nullptr, what);
  if (v->kind != BS_VOLUME_LABELS) throw ArgumentError{std::string(what) + " must be a label volume"};
  return std::get<LabelVolume>(v->data);
}

const BrainMask& mask_of(const bs_volume* v, const char* what) {
  require(v != nullptr, what);
  if (v->kind != BS_VOLUME_MASK) throw ArgumentError{std::string(what) + " must be a mask volume"};
  return std::get<BrainMask>(v->data);
}

SsimParams ssim_params(const char* json_text) {
  return json_text ? ssim_params_from_json(json_text) : SsimParams{};
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string());
}

nlohmann::json box_json(const Box& b) {
  return {{"lo", {b.lo[0], b.lo[1], b.lo[2]}}, {"hi", {b.hi[0], b.hi[1], b.hi[2]}}};
}

}  // namespace

extern "C" {

const char* bs_version(void) { return "0.1.0"; }

const char* bs_status_name(bs_status status) {
  switch (status) {
    case BS_OK: return "OK";
    case BS_ERR_FORMAT: return "FormatError";
    case BS_ERR_UNSUPPORTED: return "UnsupportedError";
    case BS_ERR_DIMENSION: return "DimensionError";
    case BS_ERR_IO: return "IoError";
    case BS_ERR_VALIDATION: return "ValidationError";
    case BS_ERR_DEGENERATE: return "DegenerateError";
    case BS_ERR_SINGULAR: return "SingularError";
    case BS_ERR_CONFIG: return "ConfigError";
    case BS_ERR_CLASS_ABSENT: return "ClassAbsent";
    case BS_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case BS_ERR_INTERNAL: return "InternalError";
  }
  return "Unknown";
}

bs_status bs_context_create(bs_context** out) {
  if (out == nullptr) return BS_ERR_INVALID_ARGUMENT;
  *out = new (std::nothrow) bs_context();
  return *out ? BS_OK : BS_ERR_INTERNAL;
}

void bs_context_destroy(bs_context* ctx) { delete ctx; }

bs_status bs_context_set_threads(bs_context* ctx, int threads) {
  return guarded(ctx, [&] {
    require(threads >= 1 && threads <= 256, "threads must be in [1, 256]");
    ctx->threads = threads;
  });
}

bs_status bs_context_set_seed(bs_context* ctx, uint64_t seed) {
  return guarded(ctx, [&] { ctx->seed = seed; });
}

bs_status bs_context_set_log(bs_context* ctx, bs_log_fn fn, void* user) {
  return guarded(ctx, [&] {
    ctx->log = fn;
    ctx->log_user = user;
  });
}

const char* bs_last_error(const bs_context* ctx) { return ctx ? ctx->last_error.c_str() : ""; }

void bs_string_free(char* s) { std::free(s); }

bs_status bs_volume_load(bs_context* ctx, const char* path, bs_volume_kind kind, bs_volume** out) {
  return guarded(ctx, [&] {
    require(path != nullptr && out != nullptr, "path and out must be non-null");
    auto v = std::make_unique<bs_volume>();
    v->kind = kind;
    switch (kind) {
      case BS_VOLUME_SCALAR: v->data = load_volume(path); break;
      case BS_VOLUME_LABELS: v->data = load_labels(path); break;
      case BS_VOLUME_MASK: v->data = load_mask(path); break;
      default: throw ArgumentError{"unknown volume kind"};
    }
    *out = v.release();
  });
}

bs_status bs_volume_save(bs_context* ctx, const bs_volume* vol, const char* path) {
  return guarded(ctx, [&] {
    require(vol != nullptr && path != nullptr, "volume and path must be non-null");
    std::visit([&](const auto& v) { save_volume(v, path); }, vol->data);
  });
}

bs_status bs_volume_create(bs_context* ctx, bs_volume_kind kind, const int dims[3], const double spacing[3],
                           const float* values, bs_volume** out) {
  return guarded(ctx, [&] {
    require(dims != nullptr && out != nullptr, "dims and out must be non-null");
    const Dims d{dims[0], dims[1], dims[2]};
    const Spacing sp = spacing ? Spacing{spacing[0], spacing[1], spacing[2]} : Spacing{};
    auto v = std::make_unique<bs_volume>();
    v->kind = kind;
    switch (kind) {
      case BS_VOLUME_SCALAR: {
        ScalarVolume s(d, sp, 0.0f);
        if (values) std::memcpy(s.data().data(), values, s.size() * sizeof(float));
        s.check_finite();
        v->data = std::move(s);
        break;
      }
      case BS_VOLUME_LABELS: {
        LabelVolume l(d, sp, 0);
        for (std::size_t i = 0; values && i < l.size(); ++i) {
          const float f = values[i];
          if (!(f >= 0.0f && f < kTissueCodes) || f != static_cast<float>(static_cast<int>(f))) {
            fail(ErrorKind::Validation, "label values must be integers 0..4");
          }
          l[i] = static_cast<std::uint8_t>(f);
        }
        v->data = std::move(l);
        break;
      }
      case BS_VOLUME_MASK: {
        BrainMask m(d, sp, 0);
        for (std::size_t i = 0; values && i < m.size(); ++i) m[i] = values[i] != 0.0f;
        v->data = std::move(m);
        break;
      }
      default: throw ArgumentError{"unknown volume kind"};
    }
    *out = v.release();
  });
}

void bs_volume_destroy(bs_volume* vol) { delete vol; }

bs_volume_kind bs_volume_get_kind(const bs_volume* vol) { return vol ? vol->kind : BS_VOLUME_SCALAR; }

void bs_volume_get_dims(const bs_volume* vol, int dims[3]) {
  if (dims == nullptr) return;
  if (vol == nullptr) {
    dims[0] = dims[1] = dims[2] = 0;
    return;
  }
  const Dims& d = vol->dims();
  dims[0] = d.nx;
  dims[1] = d.ny;
  dims[2] = d.nz;
}

bs_status bs_volume_copy_values(bs_context* ctx, const bs_volume* vol, float* out, size_t capacity) {
  return guarded(ctx, [&] {
    require(vol != nullptr && out != nullptr, "volume and out must be non-null");
    const std::size_t n = vol->dims().voxel_count();
    require(capacity >= n, "output buffer too small");
    std::visit(
        [&](const auto& v) {
          for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(v[i]);
        },
        vol->data);
  });
}

bs_status bs_phantom_generate(bs_context* ctx, const char* spec_json, const char* degrade_json, const char* out_dir) {
  return guarded(ctx, [&] {
    require(out_dir != nullptr, "output directory is null");
    PhantomSpec spec = spec_json ? phantom_spec_from_json(spec_json) : PhantomSpec::standard();
    if (ctx->seed) spec.seed = *ctx->seed;
    const DegradeSpec degrade = degrade_json ? degrade_spec_from_json(degrade_json) : DegradeSpec{};
    const Phantom ph = generate_phantom(spec);
    const fs::path dir(out_dir);
    ensure_dir(dir);
    save_volume(ph.volume.channel(Channel::T1w), dir / "t1w.nii");
    save_volume(ph.volume.channel(Channel::T2w), dir / "t2w.nii");
    save_volume(ph.volume.channel(Channel::PDw), dir / "pdw.nii");
    save_volume(ph.volume.mask(), dir / "mask.nii");
    save_volume(ph.truth, dir / "phantom_gt.nii");
    save_volume(degrade_labels(ph.truth, degrade), dir / "init_labels.nii");
    write_text_file(dir / "phantom.json", phantom_spec_to_json(spec));
    // A ready-to-run pipeline config for the generated files.
    nlohmann::json cfg = {{"inputs",
                           {{"t1w", "t1w.nii"},
                            {"t2w", "t2w.nii"},
                            {"pdw", "pdw.nii"},
                            {"mask", "mask.nii"},
                            {"init_labels", "init_labels.nii"},
                            {"ground_truth", "phantom_gt.nii"}}},
                          {"seed", spec.seed},
                          {"output_dir", "out"}};
    write_text_file(dir / "pipeline.json", cfg.dump(2));
  });
}

bs_status bs_phantom_cnr(bs_context* ctx, const char* spec_json, const char* channel, double* cnr, int* is_infinite) {
  return guarded(ctx, [&] {
    require(channel != nullptr && cnr != nullptr, "channel and cnr must be non-null");
    const PhantomSpec spec = spec_json ? phantom_spec_from_json(spec_json) : PhantomSpec::standard();
    auto ch = channel_from_name(channel);
    if (!ch) fail(ErrorKind::Config, std::string("unknown channel ") + channel);
    const Cnr c = phantom_cnr(spec, *ch);
    *cnr = c.value;
    if (is_infinite) *is_infinite = c.kind == Cnr::Kind::Infinite;
  });
}

bs_status bs_degrade(bs_context* ctx, const char* truth_path, const char* degrade_json, const char* out_path) {
  return guarded(ctx, [&] {
    require(truth_path != nullptr && out_path != nullptr, "paths must be non-null");
    DegradeSpec d = degrade_json ? degrade_spec_from_json(degrade_json) : DegradeSpec{};
    if (ctx->seed) d.seed = *ctx->seed;
    save_volume(degrade_labels(load_labels(truth_path), d), out_path);
  });
}

bs_status bs_partition(bs_context* ctx, const char* config_path, const char* out_json_path) {
  return guarded(ctx, [&] {
    require(out_json_path != nullptr, "output path is null");
    const PipelineConfig cfg = load_config(ctx, config_path);
    const MultiChannelVolume raw = load_channels(cfg.inputs);
    const PreparedInputs prep = prepare_inputs(raw, load_labels(cfg.inputs.init_labels), cfg);
    const ScalarVolume& image = prep.normalized.channel(cfg.partition_channel);
    PartitionTree tree = partition_volume(image, prep.normalized.mask(), cfg.partition);
    for (Subdomain& sub : tree.leaves) sub.cnr = subdomain_stats(image, prep.normalized.mask(), prep.initial, sub).cnr;
    write_text_file(out_json_path, partition_tree_to_json(tree));
  });
}

bs_status bs_classify(bs_context* ctx, const char* config_path, const char* partition_json_path, const char* out_dir) {
  return guarded(ctx, [&] {
    require(partition_json_path != nullptr && out_dir != nullptr, "paths must be non-null");
    const PipelineConfig cfg = load_config(ctx, config_path);
    const MultiChannelVolume raw = load_channels(cfg.inputs);
    const PreparedInputs prep = prepare_inputs(raw, load_labels(cfg.inputs.init_labels), cfg);
    const PartitionTree tree = partition_tree_from_json(read_text_file(partition_json_path));
    if (tree.dims != prep.normalized.dims()) fail(ErrorKind::Dimension, "partition does not match the volumes");
    const auto parts = classify_all(prep, prep.initial, tree, cfg);
    const fs::path dir(out_dir);
    ensure_dir(dir);
    nlohmann::json list = nlohmann::json::array();
    for (const auto& p : parts) {
      char name[32];
      std::snprintf(name, sizeof name, "sub_%03d.nii", p.subdomain_id);
      save_volume(p.labels, dir / name);
      list.push_back({{"id", p.subdomain_id}, {"box", box_json(p.box)}, {"labels", name}, {"events", p.events}});
    }
    write_text_file(dir / "manifest.json", nlohmann::json{{"parts", list}}.dump(2));
  });
}

bs_status bs_stitch(bs_context* ctx, const char* config_path, const char* partition_json_path,
                    const char* manifest_path, const char* out_labels_path) {
  return guarded(ctx, [&] {
    require(partition_json_path && manifest_path && out_labels_path, "paths must be non-null");
    const PipelineConfig cfg = load_config(ctx, config_path);
    const BrainMask mask = load_mask(cfg.inputs.mask);
    const PartitionTree tree = partition_tree_from_json(read_text_file(partition_json_path));
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Format, std::string("manifest is not valid JSON: ") + e.what());
    }
    const fs::path base = fs::path(manifest_path).parent_path();
    std::vector<SubdomainLabels> parts;
    try {
      for (const auto& item : doc.at("parts")) {
        SubdomainLabels p;
        p.subdomain_id = item.at("id").get<int>();
        for (int a = 0; a < 3; ++a) {
          p.box.lo[a] = item.at("box").at("lo").at(a).get<int>();
          p.box.hi[a] = item.at("box").at("hi").at(a).get<int>();
        }
        p.labels = load_labels(base / item.at("labels").get<std::string>());
        if (p.labels.dims() != p.box.dims()) fail(ErrorKind::Dimension, "subdomain labels do not match their box");
        parts.push_back(std::move(p));
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Format, std::string("malformed manifest: ") + e.what());
    }
    save_volume(stitch_all(parts, tree, mask, cfg), out_labels_path);
  });
}

bs_status bs_pipeline_run(bs_context* ctx, const char* config_path, char** report_json) {
  return guarded(ctx, [&] {
    const PipelineConfig cfg = load_config(ctx, config_path);
    const QualityReport rep = run_pipeline(cfg, logger(ctx));
    if (report_json) *report_json = dup_string(report_to_json(rep));
  });
}

bs_status bs_mssim(bs_context* ctx, const bs_volume* ref, const bs_volume* test, const bs_volume* mask,
                   const char* ssim_json, double* out) {
  return guarded(ctx, [&] {
    require(out != nullptr, "out is null");
    *out = mssim(scalar(ref, "reference"), scalar(test, "test"), mask_of(mask, "mask"), ssim_params(ssim_json));
  });
}

bs_status bs_ssim_map(bs_context* ctx, const bs_volume* ref, const bs_volume* test, const bs_volume* mask,
                      const char* ssim_json, bs_volume** out) {
  return guarded(ctx, [&] {
    require(out != nullptr, "out is null");
    auto v = std::make_unique<bs_volume>();
    v->kind = BS_VOLUME_SCALAR;
    v->data = ssim_volume(scalar(ref, "reference"), scalar(test, "test"), mask_of(mask, "mask"), ssim_params(ssim_json));
    *out = v.release();
  });
}

bs_status bs_dice(bs_context* ctx, const bs_volume* a, const bs_volume* b, const char* class_name, double* out) {
  return guarded(ctx, [&] {
    require(class_name != nullptr && out != nullptr, "class name and out must be non-null");
    auto t = tissue_from_name(class_name);
    if (!t || *t == Tissue::Background) fail(ErrorKind::Config, std::string("unknown class ") + class_name);
    *out = dice(labels(a, "a"), labels(b, "b"), *t);
  });
}

bs_status bs_render_classified(bs_context* ctx, const bs_volume* lab, const bs_volume* reference,
                               const bs_volume* mask, bs_volume** out) {
  return guarded(ctx, [&] {
    require(out != nullptr, "out is null");
    auto v = std::make_unique<bs_volume>();
    v->kind = BS_VOLUME_SCALAR;
    v->data = render_classified(labels(lab, "labels"), scalar(reference, "reference"), mask_of(mask, "mask"));
    *out = v.release();
  });
}

}  // extern "C"
