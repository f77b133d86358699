#include "brainseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "brainseg/nifti.hpp"
#include "brainseg/normalize.hpp"
#include "brainseg/parallel.hpp"
#include "brainseg/rng.hpp"
#include "json.hpp"

namespace brainseg {

using nlohmann::json;

namespace {

constexpr double kRefineMinGain = 1e-4;

json box_json(const Box& b) {
  return json{{"lo", {b.lo[0], b.lo[1], b.lo[2]}}, {"hi", {b.hi[0], b.hi[1], b.hi[2]}}};
}

json cnr_json(const Cnr& c) {
  if (c.kind == Cnr::Kind::Finite) return c.value;
  if (c.kind == Cnr::Kind::Infinite) return "inf";
  return nullptr;
}

json stage_json(const StageReport& s) {
  return json{{"ran", s.ran},
              {"training_a", s.training_a},
              {"training_b", s.training_b},
              {"sigma", s.sigma},
              {"overlapping", s.overlapping},
              {"outliers", s.outliers},
              {"reassigned", s.reassigned}};
}

json per_class(const std::array<double, kTissueCodes>& v) {
  json j = json::object();
  for (Tissue t : {Tissue::Csf, Tissue::Gm, Tissue::Wm, Tissue::Mwm}) j[tissue_name(t)] = v[code(t)];
  return j;
}

json per_class(const std::array<std::size_t, kTissueCodes>& v) {
  json j = json::object();
  for (Tissue t : {Tissue::Csf, Tissue::Gm, Tissue::Wm, Tissue::Mwm}) j[tissue_name(t)] = v[code(t)];
  return j;
}

std::array<std::size_t, kTissueCodes> in_mask_volumes(const LabelVolume& labels, const BrainMask& mask) {
  std::array<std::size_t, kTissueCodes> n{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (mask.inside(i) && labels[i] < kTissueCodes) ++n[labels[i]];
  }
  return n;
}

std::array<double, kTissueCodes> all_dice(const LabelVolume& labels, const LabelVolume& truth) {
  std::array<double, kTissueCodes> d{};
  for (Tissue t : {Tissue::Csf, Tissue::Gm, Tissue::Wm, Tissue::Mwm}) d[code(t)] = dice(labels, truth, t);
  return d;
}

std::vector<Tissue> scored_classes(AgeProfile profile) {
  std::vector<Tissue> c{Tissue::Csf, Tissue::Gm, Tissue::Wm};
  if (profile == AgeProfile::Early) c.push_back(Tissue::Mwm);
  return c;
}

}  // namespace

std::string report_to_json(const QualityReport& r) {
  json j;
  json codes = json::object();
  for (int c = 0; c < kTissueCodes; ++c) codes[std::to_string(c)] = tissue_name(static_cast<Tissue>(c));
  j["label_codes"] = codes;
  j["status"] = r.ok ? "ok" : "failed";
  if (!r.ok) j["error"] = r.error;
  j["age_profile"] = profile_name(r.age_profile);
  j["seed"] = r.seed;
  j["mssim_before"] = r.mssim_before;
  j["mssim_after"] = r.mssim_after;
  json refs = json::array();
  for (const auto& s : r.references) {
    json classes = json::array();
    for (Tissue t : s.classes) classes.push_back(tissue_name(t));
    refs.push_back({{"reference", reference_name(s.reference)},
                    {"classes", classes},
                    {"mssim_before", s.mssim_before},
                    {"mssim_after", s.mssim_after}});
  }
  j["references"] = refs;
  json steps = json::array();
  for (const auto& s : r.refinement) {
    steps.push_back({{"iteration", s.iteration}, {"mssim", s.mssim}, {"accepted", s.accepted}});
  }
  j["refinement"] = steps;
  j["dice"] = r.dice ? per_class(*r.dice) : json(nullptr);
  j["dice_initial"] = r.dice_initial ? per_class(*r.dice_initial) : json(nullptr);
  j["class_volumes"] = per_class(r.class_volumes);
  j["class_volumes_initial"] = per_class(r.class_volumes_initial);
  j["total_mi"] = r.total_mi;
  json subs = json::array();
  for (const auto& s : r.subdomains) {
    subs.push_back({{"id", s.id},
                    {"core_box", box_json(s.core_box)},
                    {"overlap_box", box_json(s.overlap_box)},
                    {"mean_intensity", s.mean_intensity},
                    {"cnr", cnr_json(s.cnr)},
                    {"stage1", stage_json(s.stage1)},
                    {"stage2", stage_json(s.stage2)}});
  }
  j["cnr_map"] = subs;
  if (r.mixture) {
    const Gmm2& g = *r.mixture;
    j["mixture"] = {{"weights", {g.weights[0], g.weights[1]}},
                    {"means", {g.means[0], g.means[1]}},
                    {"stds", {g.stds[0], g.stds[1]}},
                    {"iterations", g.iterations},
                    {"log_likelihood", g.log_likelihood},
                    {"threshold", myelin_threshold(g)},
                    {"mwm_voxels", r.mwm_voxels}};
  } else {
    j["mixture"] = nullptr;
  }
  j["events"] = r.events;
  return j.dump(2);
}

double classification_mssim(const LabelVolume& labels, const MultiChannelVolume& normalized, AgeProfile profile,
                            const SsimParams& ssim, std::vector<ReferenceScore>* per_reference, bool after) {
  std::vector<ReferenceScore> local;
  std::vector<ReferenceScore>& scores = per_reference ? *per_reference : local;
  for (Tissue t : scored_classes(profile)) {
    const Reference kind = reference_kind(t, profile);
    auto it = std::find_if(scores.begin(), scores.end(), [&](const ReferenceScore& s) { return s.reference == kind; });
    if (it == scores.end()) {
      scores.push_back(ReferenceScore{kind, {t}, 0.0, 0.0});
    } else if (std::find(it->classes.begin(), it->classes.end(), t) == it->classes.end()) {
      it->classes.push_back(t);
    }
  }
  double sum = 0.0;
  for (auto& s : scores) {
    const ScalarVolume ref = reference_for_class(s.classes.front(), profile, normalized);
    const ScalarVolume painted = render_classified(labels, ref, normalized.mask());
    const double m = mssim(ref, painted, normalized.mask(), ssim);
    (after ? s.mssim_after : s.mssim_before) = m;
    sum += m;
  }
  return sum / static_cast<double>(scores.size());
}

SegmentationResult segment(const MultiChannelVolume& raw, const LabelVolume& init_labels, const LabelVolume* truth,
                           const PipelineConfig& cfg, const LogFn& log) {
  cfg.validate_parameters();
  raw.validate();
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  if (truth && truth->dims() != raw.dims()) fail(ErrorKind::Dimension, "ground truth does not match the volumes");

  SegmentationResult res;
  QualityReport& rep = res.report;
  rep.age_profile = cfg.age_profile;
  rep.seed = cfg.seed;

  say("preparing inputs");
  PreparedInputs prep = prepare_inputs(raw, init_labels, cfg);
  rep.mixture = prep.mixture;
  rep.mwm_voxels = prep.mwm_voxels;
  rep.events = prep.events;
  res.initial = prep.initial;
  const MultiChannelVolume& vol = prep.normalized;
  const BrainMask& mask = vol.mask();

  say("partitioning");
  res.tree = partition_volume(vol.channel(cfg.partition_channel), mask, cfg.partition);
  rep.total_mi = res.tree.total_mi;
  say("partition: " + std::to_string(res.tree.leaves.size()) + " subdomains");

  rep.mssim_before = classification_mssim(res.initial, vol, cfg.age_profile, cfg.ssim, &rep.references, false);
  rep.class_volumes_initial = in_mask_volumes(res.initial, mask);
  if (truth) rep.dice_initial = all_dice(res.initial, *truth);

  LabelVolume current = res.initial;
  double previous = rep.mssim_before;
  double best_score = 0.0;
  int best_iter = 0;
  std::vector<SubdomainLabels> best_parts;
  for (int it = 1; it <= cfg.max_refine_iters; ++it) {
    say("classification pass " + std::to_string(it));
    std::vector<SubdomainLabels> parts = classify_all(prep, current, res.tree, cfg, it);
    LabelVolume stitched = stitch_all(parts, res.tree, mask, cfg, it);
    std::vector<ReferenceScore> scratch = rep.references;
    const double score = classification_mssim(stitched, vol, cfg.age_profile, cfg.ssim, &scratch, true);
    const bool accept = it == 1 || score > best_score + kRefineMinGain;
    rep.refinement.push_back(RefineStep{it, score, accept});
    for (const auto& part : parts) {
      for (const auto& e : part.events) rep.events.push_back("pass " + std::to_string(it) + ": " + e);
    }
    if (accept) {
      res.labels = std::move(stitched);
      best_parts = std::move(parts);
      best_score = score;
      best_iter = it;
      rep.references = std::move(scratch);
    } else {
      rep.events.push_back("refinement pass " + std::to_string(it) + " did not improve MSSIM; reverted to pass " +
                           std::to_string(best_iter));
    }
    const double gain = score - previous;
    previous = score;
    if (!accept || gain <= kRefineMinGain) {
      if (it < cfg.max_refine_iters) {
        rep.events.push_back("refinement stopped after pass " + std::to_string(it));
      }
      break;
    }
    current = res.labels;
  }
  rep.mssim_after = best_score;

  rep.class_volumes = in_mask_volumes(res.labels, mask);
  if (truth) rep.dice = all_dice(res.labels, *truth);
  const ScalarVolume& t1 = vol.channel(cfg.partition_channel);
  for (std::size_t i = 0; i < res.tree.leaves.size(); ++i) {
    Subdomain& sub = res.tree.leaves[i];
    const SubdomainStats st = subdomain_stats(t1, mask, res.labels, sub);
    sub.mean_intensity = st.mean;
    sub.cnr = st.cnr;
    SubdomainSummary s{sub.id, sub.core_box, sub.overlap_box, st.mean, st.cnr, {}, {}};
    if (i < best_parts.size()) {
      s.stage1 = best_parts[i].stage1;
      s.stage2 = best_parts[i].stage2;
    }
    rep.subdomains.push_back(s);
  }
  res.normalized = std::move(prep.normalized);
  return res;
}

PreparedInputs prepare_inputs(const MultiChannelVolume& raw, const LabelVolume& init_labels,
                              const PipelineConfig& cfg) {
  raw.validate();
  if (init_labels.dims() != raw.dims()) fail(ErrorKind::Dimension, "initial labels do not match the volumes");
  init_labels.check_codes();
  PreparedInputs p;
  p.normalized = normalize_channels(raw);
  const BrainMask& mask = p.normalized.mask();
  p.initial = init_labels;
  for (std::size_t i = 0; i < p.initial.size(); ++i) {
    if (!mask.inside(i)) p.initial[i] = code(Tissue::Background);
  }
  if (cfg.age_profile != AgeProfile::Early) return p;

  const MultiChannelVolume& vol = p.normalized;
  const ScalarVolume diff = difference_image(vol.channel(Channel::PDw), vol.channel(Channel::T1w), mask);
  auto wm_like = [&](std::size_t i) {
    const Tissue t = p.initial.tissue(i);
    return mask.inside(i) && (t == Tissue::Wm || t == Tissue::Mwm);
  };
  std::vector<double> values;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    if (wm_like(i)) values.push_back(diff[i]);
  }
  try {
    const Gmm2 model = gmm2_em(values, gmm2_init(values));
    const double tau = myelin_threshold(model);
    p.pinned.assign(diff.size(), 0);
    for (std::size_t i = 0; i < diff.size(); ++i) {
      if (!wm_like(i)) continue;
      if (static_cast<double>(diff[i]) > tau) {
        p.pinned[i] = 1;
        p.initial[i] = code(Tissue::Mwm);
        ++p.mwm_voxels;
      } else {
        p.initial[i] = code(Tissue::Wm);
      }
    }
    p.mixture = model;
    p.events.push_back("mixture: " + std::to_string(p.mwm_voxels) + " voxels pinned as MWM");
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Degenerate && e.kind() != ErrorKind::Validation) throw;
    p.pinned.clear();
    p.events.push_back(std::string("mixture skipped (") + e.what() + ")");
  }
  return p;
}

std::vector<SubdomainLabels> classify_all(const PreparedInputs& prepared, const LabelVolume& init,
                                          const PartitionTree& tree, const PipelineConfig& cfg, int pass) {
  std::vector<SubdomainLabels> parts(tree.leaves.size());
  const std::uint64_t pass_seed = hash_combine(cfg.seed, static_cast<std::uint64_t>(pass));
  const std::vector<std::uint8_t>* pins = prepared.pinned.empty() ? nullptr : &prepared.pinned;
  parallel_for(tree.leaves.size(), cfg.threads, [&](std::size_t i) {
    const Subdomain& sub = tree.leaves[i];
    parts[i] = classify_subdomain(prepared.normalized, sub, init, cfg.kfda,
                                  hash_combine(pass_seed, static_cast<std::uint64_t>(sub.id)), pins);
  });
  return parts;
}

LabelVolume stitch_all(std::span<const SubdomainLabels> parts, const PartitionTree& tree, const BrainMask& mask,
                       const PipelineConfig& cfg, int pass) {
  AnnealSchedule sched = cfg.anneal;
  sched.seed = hash_combine(hash_combine(cfg.seed, static_cast<std::uint64_t>(pass)), 0x5717c4ULL);
  return assemble_volume(parts, tree, mask, cfg.energy, sched, cfg.threads);
}

MultiChannelVolume load_channels(const PipelineInputs& in) {
  BrainMask mask = load_mask(in.mask);
  MultiChannelVolume vol(std::move(mask));
  if (!in.t1w.empty()) vol.set_channel(Channel::T1w, load_volume(in.t1w));
  if (!in.t2w.empty()) vol.set_channel(Channel::T2w, load_volume(in.t2w));
  if (!in.pdw.empty()) vol.set_channel(Channel::PDw, load_volume(in.pdw));
  vol.validate();
  return vol;
}

QualityReport run_pipeline(const PipelineConfig& cfg, const LogFn& log) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + cfg.output_dir.string());
  const auto report_path = cfg.output_dir / "report.json";
  try {
    const MultiChannelVolume raw = load_channels(cfg.inputs);
    const LabelVolume init = load_labels(cfg.inputs.init_labels);
    std::optional<LabelVolume> truth;
    if (cfg.inputs.ground_truth) truth = load_labels(*cfg.inputs.ground_truth);
    SegmentationResult res = segment(raw, init, truth ? &*truth : nullptr, cfg, log);
    save_volume(res.labels, cfg.output_dir / "labels.nii");
    write_text_file(cfg.output_dir / "partition.json", partition_tree_to_json(res.tree));
    if (cfg.write_ssim_map) {
      const Tissue first = scored_classes(cfg.age_profile).front();
      const ScalarVolume ref = reference_for_class(first, cfg.age_profile, res.normalized);
      const ScalarVolume painted = render_classified(res.labels, ref, res.normalized.mask());
      save_volume(ssim_volume(ref, painted, res.normalized.mask(), cfg.ssim), cfg.output_dir / "ssim_map.nii");
    }
    write_text_file(report_path, report_to_json(res.report));
    return res.report;
  } catch (const Error& e) {
    QualityReport failed;
    failed.ok = false;
    failed.error = e.what();
    failed.age_profile = cfg.age_profile;
    failed.seed = cfg.seed;
    try {
      write_text_file(report_path, report_to_json(failed));
    } catch (const Error&) {
      // The original error is the one worth reporting.
    }
    throw;
  }
}

}  // namespace brainseg
