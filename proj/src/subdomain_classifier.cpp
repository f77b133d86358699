#include "brainseg/subdomain_classifier.hpp"

#include <algorithm>

#include "brainseg/rng.hpp"

namespace brainseg {
namespace {

bool in_class(Stage stage, int cls, Tissue t) {
  if (stage == Stage::CsfVsTissue) {
    return cls == 1 ? t == Tissue::Csf : (t == Tissue::Gm || t == Tissue::Wm || t == Tissue::Mwm);
  }
  return cls == 1 ? t == Tissue::Gm : t == Tissue::Wm;
}

const char* class_name(Stage stage, int cls) {
  if (stage == Stage::CsfVsTissue) return cls == 1 ? "CSF" : "GM+WM";
  return cls == 1 ? "GM" : "WM";
}

std::vector<std::size_t> subsample(std::vector<std::size_t> candidates, std::size_t n_max, std::uint64_t seed) {
  if (candidates.size() <= n_max) return candidates;
  Rng rng(seed);
  for (std::size_t i = 0; i < n_max; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(n_max);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

StageConfig resolve_channels(const StageConfig& cfg, const MultiChannelVolume& volume) {
  StageConfig out = cfg;
  if (out.channels.empty()) out.channels = volume.available();
  for (Channel c : out.channels) {
    if (!volume.has(c)) fail(ErrorKind::Config, std::string("stage channel ") + channel_name(c) + " is not loaded");
  }
  return out;
}

struct StageOutcome {
  std::vector<CategorizedVoxel> decisions;
};

// Trains and applies one stage over `voxels` (full-volume indices).
StageOutcome run_stage(const MultiChannelVolume& volume, const LabelVolume& init, const Eligibility& eligible,
                       const Box& box, const StageConfig& cfg, Stage stage, const KfdaParams& params,
                       std::uint64_t seed, const std::vector<std::size_t>& voxels, StageReport& report) {
  TrainingSet ts = select_prototypes(init, eligible, box, volume, cfg.channels, stage, params.n_max, seed);
  KernelSpec kernel = cfg.kernel;
  if (kernel.kind == KernelSpec::Kind::Rbf && cfg.sigma_median) kernel.sigma = median_pairwise_distance(ts.samples);
  DiscriminantModel model = train_discriminant(ts, kernel, params.mu);

  std::vector<IntensityVector> x(voxels.size());
  std::vector<std::uint8_t> proto(voxels.size(), 0);
  for (std::size_t v = 0; v < voxels.size(); ++v) {
    x[v] = volume.intensities(voxels[v], cfg.channels);
    proto[v] = std::binary_search(ts.source_voxels.begin(), ts.source_voxels.end(), voxels[v]);
  }
  StageOutcome out;
  out.decisions = categorize_voxels(model, x, proto, params.categories);

  report.ran = true;
  report.training_a = ts.count(1);
  report.training_b = ts.count(-1);
  report.sigma = kernel.kind == KernelSpec::Kind::Rbf ? kernel.sigma : 0.0;
  for (const auto& d : out.decisions) {
    report.overlapping += d.category == VoxelCategory::Overlapping;
    report.outliers += d.category == VoxelCategory::Outlier;
    report.reassigned += d.cls != d.discriminant_class;
  }
  return out;
}

bool recoverable(const Error& e) {
  return e.kind() == ErrorKind::ClassAbsent || e.kind() == ErrorKind::Degenerate || e.kind() == ErrorKind::Singular;
}

}  // namespace

void KfdaParams::validate() const {
  stage1.kernel.validate();
  if (!(stage2.kernel.kind == KernelSpec::Kind::Rbf && stage2.sigma_median)) stage2.kernel.validate();
  if (!(mu >= 0.0)) fail(ErrorKind::Config, "mu must be >= 0");
  if (n_max < 2) fail(ErrorKind::Config, "n_max must be >= 2");
  if (!(categories.delta >= 0.0)) fail(ErrorKind::Config, "delta must be >= 0");
  if (categories.k_vote < 1) fail(ErrorKind::Config, "k_vote must be >= 1");
}

TrainingSet select_prototypes(const LabelVolume& init_labels, const Eligibility& eligible, const Box& box,
                              const MultiChannelVolume& volume, std::span<const Channel> channels, Stage stage,
                              std::size_t n_max, std::uint64_t seed) {
  const Dims& d = init_labels.dims();
  if (box.empty() || !box.within(d)) fail(ErrorKind::Dimension, "subdomain lies outside the volume");
  if (volume.dims() != d) fail(ErrorKind::Dimension, "label and intensity volumes differ in size");
  static constexpr int kOffsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

  TrainingSet ts;
  for (int cls : {1, -1}) {
    auto member = [&](int x, int y, int z) {
      std::size_t i = init_labels.index(x, y, z);
      return eligible(i) && in_class(stage, cls, init_labels.tissue(i));
    };
    std::vector<std::size_t> all, eroded;
    for (int z = box.lo[2]; z <= box.hi[2]; ++z)
      for (int y = box.lo[1]; y <= box.hi[1]; ++y)
        for (int x = box.lo[0]; x <= box.hi[0]; ++x) {
          if (!member(x, y, z)) continue;
          const std::size_t i = init_labels.index(x, y, z);
          all.push_back(i);
          bool interior = true;
          for (const auto& o : kOffsets) {
            int xx = x + o[0], yy = y + o[1], zz = z + o[2];
            if (xx < 0 || yy < 0 || zz < 0 || xx >= d.nx || yy >= d.ny || zz >= d.nz || !member(xx, yy, zz)) {
              interior = false;
              break;
            }
          }
          if (interior) eroded.push_back(i);
        }
    if (all.size() < 2) {
      fail(ErrorKind::ClassAbsent, std::string("stage ") + std::to_string(static_cast<int>(stage)) + ": class " +
                                       class_name(stage, cls) + " has fewer than 2 voxels");
    }
    const auto& pool = eroded.size() >= 2 ? eroded : all;
    auto chosen = subsample(pool, n_max, hash_combine(seed, cls == 1 ? 1 : 2));
    for (std::size_t i : chosen) {
      ts.samples.push_back(volume.intensities(i, channels));
      ts.labels.push_back(cls);
      ts.source_voxels.push_back(i);
    }
  }
  // source_voxels sorted for membership lookups; samples/labels follow.
  std::vector<std::size_t> order(ts.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ts.source_voxels[a] < ts.source_voxels[b]; });
  TrainingSet sorted;
  for (std::size_t i : order) {
    sorted.samples.push_back(ts.samples[i]);
    sorted.labels.push_back(ts.labels[i]);
    sorted.source_voxels.push_back(ts.source_voxels[i]);
  }
  return sorted;
}

SubdomainLabels classify_subdomain(const MultiChannelVolume& volume, const Subdomain& sub,
                                   const LabelVolume& init_labels, const KfdaParams& params, std::uint64_t seed,
                                   const std::vector<std::uint8_t>* pinned) {
  params.validate();
  const Box& box = sub.overlap_box;
  const BrainMask& mask = volume.mask();
  if (init_labels.dims() != volume.dims()) fail(ErrorKind::Dimension, "initial labels do not match the volume");
  if (box.empty() || !box.within(volume.dims())) fail(ErrorKind::Dimension, "subdomain lies outside the volume");

  const StageConfig cfg1 = resolve_channels(params.stage1, volume);
  const StageConfig cfg2 = resolve_channels(params.stage2, volume);

  SubdomainLabels result;
  result.subdomain_id = sub.id;
  result.box = box;
  result.labels = LabelVolume(box.dims(), volume.spacing(), code(Tissue::Background));

  auto is_pinned = [&](std::size_t i) { return pinned != nullptr && (*pinned)[i] != 0; };
  const Eligibility stage1_eligible = [&](std::size_t i) { return mask.inside(i) && !is_pinned(i); };

  std::vector<std::size_t> voxels;
  for (int z = box.lo[2]; z <= box.hi[2]; ++z)
    for (int y = box.lo[1]; y <= box.hi[1]; ++y)
      for (int x = box.lo[0]; x <= box.hi[0]; ++x) {
        std::size_t i = init_labels.index(x, y, z);
        if (stage1_eligible(i)) voxels.push_back(i);
      }

  const std::string prefix = "subdomain " + std::to_string(sub.id) + ": ";

  // Stage 1: CSF vs. GM+WM.
  std::vector<std::uint8_t> csf(init_labels.size(), 0);
  try {
    auto out = run_stage(volume, init_labels, stage1_eligible, box, cfg1, Stage::CsfVsTissue, params,
                         hash_combine(seed, 1), voxels, result.stage1);
    for (std::size_t v = 0; v < voxels.size(); ++v) csf[voxels[v]] = out.decisions[v].cls == BinaryClass::A;
  } catch (const Error& e) {
    if (!recoverable(e)) throw;
    result.events.push_back(prefix + "stage 1 skipped (" + e.what() + "); initialization retained");
    for (std::size_t i : voxels) csf[i] = init_labels.tissue(i) == Tissue::Csf;
  }

  // Stage 2: GM vs. WM over the voxels stage 1 left as tissue.
  std::vector<std::size_t> tissue_voxels;
  for (std::size_t i : voxels) {
    if (!csf[i]) tissue_voxels.push_back(i);
  }
  const Eligibility stage2_eligible = [&](std::size_t i) { return stage1_eligible(i) && !csf[i]; };
  std::vector<std::uint8_t> gm(init_labels.size(), 0);
  try {
    if (tissue_voxels.empty()) fail(ErrorKind::ClassAbsent, "no GM/WM voxels after stage 1");
    auto out = run_stage(volume, init_labels, stage2_eligible, box, cfg2, Stage::GmVsWm, params,
                         hash_combine(seed, 2), tissue_voxels, result.stage2);
    for (std::size_t v = 0; v < tissue_voxels.size(); ++v) gm[tissue_voxels[v]] = out.decisions[v].cls == BinaryClass::A;
  } catch (const Error& e) {
    if (!recoverable(e)) throw;
    result.events.push_back(prefix + "stage 2 skipped (" + e.what() + "); initialization retained");
    std::size_t n_gm = 0, n_wm = 0;
    for (std::size_t i : voxels) {
      n_gm += init_labels.tissue(i) == Tissue::Gm;
      n_wm += init_labels.tissue(i) == Tissue::Wm;
    }
    const bool dominant_gm = n_gm >= n_wm;
    for (std::size_t i : tissue_voxels) {
      Tissue t = init_labels.tissue(i);
      gm[i] = t == Tissue::Gm || (t != Tissue::Wm && dominant_gm);
    }
  }

  for (int z = box.lo[2]; z <= box.hi[2]; ++z)
    for (int y = box.lo[1]; y <= box.hi[1]; ++y)
      for (int x = box.lo[0]; x <= box.hi[0]; ++x) {
        const std::size_t i = init_labels.index(x, y, z);
        Tissue t = Tissue::Background;
        if (mask.inside(i)) {
          if (is_pinned(i)) {
            t = init_labels.tissue(i);
          } else if (csf[i]) {
            t = Tissue::Csf;
          } else {
            t = gm[i] ? Tissue::Gm : Tissue::Wm;
          }
        }
        result.labels.at(x - box.lo[0], y - box.lo[1], z - box.lo[2]) = code(t);
      }
  return result;
}

}  // namespace brainseg
