#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "brainseg/discriminant.hpp"
#include "brainseg/partition.hpp"
#include "brainseg/volume.hpp"

namespace brainseg {

struct StageConfig {
  KernelSpec kernel;
  // Rbf only: derive sigma from the training set's median pairwise distance.
  bool sigma_median = false;
  std::vector<Channel> channels;
};

struct KfdaParams {
  StageConfig stage1{KernelSpec::sigmoid(1.0, -1.0), false, {Channel::T1w, Channel::T2w, Channel::PDw}};
  StageConfig stage2{KernelSpec::rbf(1.0), true, {Channel::T1w, Channel::T2w, Channel::PDw}};
  double mu = 1e-3;
  std::size_t n_max = 1500;
  CategoryParams categories;

  void validate() const;
};

// Stage 1 separates CSF (class A) from GM+WM+MWM (class B); stage 2 separates
// GM (class A) from WM (class B).
enum class Stage { CsfVsTissue = 1, GmVsWm = 2 };

// Full-volume voxel index -> may take part in this stage.
using Eligibility = std::function<bool(std::size_t)>;

// Prototype voxels for one stage inside `box`: each class region is eroded
// with the 6-neighbourhood (radius 1), falling back to the un-eroded set when
// erosion leaves fewer than 2 voxels, then subsampled uniformly to at most
// n_max per class. Throws ClassAbsent when a class has fewer than 2 voxels.
TrainingSet select_prototypes(const LabelVolume& init_labels, const Eligibility& eligible, const Box& box,
                              const MultiChannelVolume& volume, std::span<const Channel> channels, Stage stage,
                              std::size_t n_max, std::uint64_t seed);

struct StageReport {
  bool ran = false;
  std::size_t training_a = 0;
  std::size_t training_b = 0;
  double sigma = 0.0;
  std::size_t overlapping = 0;
  std::size_t outliers = 0;
  std::size_t reassigned = 0;
};

struct SubdomainLabels {
  int subdomain_id = 0;
  Box box;             // overlap box in volume coordinates
  LabelVolume labels;  // dims equal the box extents
  StageReport stage1;
  StageReport stage2;
  std::vector<std::string> events;
};

// Two-stage KFDA over the subdomain's overlap box. A stage with an absent
// class (or failed training) keeps the initialization for its voxels and
// records an event. Out-of-mask voxels are BG; pinned voxels keep their
// initial label.
SubdomainLabels classify_subdomain(const MultiChannelVolume& volume, const Subdomain& sub,
                                   const LabelVolume& init_labels, const KfdaParams& params, std::uint64_t seed,
                                   const std::vector<std::uint8_t>* pinned = nullptr);

}  // namespace brainseg
