#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "brainseg/config.hpp"
#include "brainseg/mixture.hpp"
#include "brainseg/quality.hpp"

namespace brainseg {

struct ReferenceScore {
  Reference reference = Reference::T1w;
  std::vector<Tissue> classes;
  double mssim_before = 0.0;
  double mssim_after = 0.0;
};

struct RefineStep {
  int iteration = 0;
  double mssim = 0.0;
  bool accepted = false;
};

struct SubdomainSummary {
  int id = 0;
  Box core_box;
  Box overlap_box;
  double mean_intensity = 0.0;
  Cnr cnr;
  StageReport stage1;
  StageReport stage2;
};

struct QualityReport {
  bool ok = true;
  std::string error;
  AgeProfile age_profile = AgeProfile::Older;
  std::uint64_t seed = 0;
  double mssim_before = 0.0;
  double mssim_after = 0.0;
  std::vector<ReferenceScore> references;
  std::vector<RefineStep> refinement;
  // Indexed by tissue code; set only when ground truth was supplied.
  std::optional<std::array<double, kTissueCodes>> dice;
  std::optional<std::array<double, kTissueCodes>> dice_initial;
  std::array<std::size_t, kTissueCodes> class_volumes{};
  std::array<std::size_t, kTissueCodes> class_volumes_initial{};
  double total_mi = 0.0;
  std::vector<SubdomainSummary> subdomains;
  std::optional<Gmm2> mixture;
  std::size_t mwm_voxels = 0;
  std::vector<std::string> events;
};

std::string report_to_json(const QualityReport& report);

using LogFn = std::function<void(const std::string&)>;

// MSSIM of a labeling: one class-mean painting per distinct reference image
// required by the profile, averaged over those references.
double classification_mssim(const LabelVolume& labels, const MultiChannelVolume& normalized, AgeProfile profile,
                            const SsimParams& ssim, std::vector<ReferenceScore>* per_reference = nullptr,
                            bool after = true);

// Normalized channels and the initialization the classifier starts from. In
// the early profile, myelinated WM is fitted by EM inside the initial WM and
// pinned.
struct PreparedInputs {
  MultiChannelVolume normalized;
  LabelVolume initial;
  std::vector<std::uint8_t> pinned;  // empty when nothing is pinned
  std::optional<Gmm2> mixture;
  std::size_t mwm_voxels = 0;
  std::vector<std::string> events;
};

PreparedInputs prepare_inputs(const MultiChannelVolume& raw, const LabelVolume& init_labels,
                              const PipelineConfig& config);

// Classifies every leaf of the tree (in parallel); `pass` feeds the seeds.
std::vector<SubdomainLabels> classify_all(const PreparedInputs& prepared, const LabelVolume& init,
                                          const PartitionTree& tree, const PipelineConfig& config, int pass = 1);

// Stitches classified parts with the config's stitch parameters.
LabelVolume stitch_all(std::span<const SubdomainLabels> parts, const PartitionTree& tree, const BrainMask& mask,
                       const PipelineConfig& config, int pass = 1);

struct SegmentationResult {
  LabelVolume labels;
  LabelVolume initial;  // initialization after MWM pinning
  PartitionTree tree;
  MultiChannelVolume normalized;
  QualityReport report;
};

// In-memory pipeline: normalize, optional MWM extraction, partition, per-
// subdomain KFDA, stitching, scoring and optional refinement.
SegmentationResult segment(const MultiChannelVolume& raw, const LabelVolume& init_labels, const LabelVolume* truth,
                           const PipelineConfig& config, const LogFn& log = {});

// File-based run: loads the inputs named in the config and writes labels.nii,
// partition.json and report.json (plus ssim_map.nii on request) to
// config.output_dir. On failure a report with ok=false is still written
// before the error propagates.
QualityReport run_pipeline(const PipelineConfig& config, const LogFn& log = {});

// Loads the channels and mask named in the config.
MultiChannelVolume load_channels(const PipelineInputs& inputs);

}  // namespace brainseg
