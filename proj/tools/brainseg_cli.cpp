// Command-line front end; talks to the library only through the C API.
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "brainseg/brainseg.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool verbose = false;
};

// Owns a context and reports failures on stderr.
class Session {
 public:
  explicit Session(const Globals& g) {
    if (bs_context_create(&ctx_) != BS_OK) throw std::runtime_error("cannot create library context");
    if (g.seed) bs_context_set_seed(ctx_, *g.seed);
    if (g.threads > 0) check(bs_context_set_threads(ctx_, g.threads));
    if (g.verbose) {
      bs_context_set_log(ctx_, [](const char* msg, void*) { std::fprintf(stderr, "[brainseg] %s\n", msg); }, nullptr);
    }
  }
  ~Session() { bs_context_destroy(ctx_); }
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  bs_context* get() const { return ctx_; }

  void check(bs_status s) const {
    if (s != BS_OK) throw StageFailure{std::string(bs_status_name(s)) + ": " + bs_last_error(ctx_)};
  }

  struct StageFailure {
    std::string message;
  };

 private:
  bs_context* ctx_ = nullptr;
};

// Scoped volume handle.
class Volume {
 public:
  Volume(const Session& s, const std::string& path, bs_volume_kind kind) { s.check(bs_volume_load(s.get(), path.c_str(), kind, &v_)); }
  explicit Volume(bs_volume* v) : v_(v) {}
  ~Volume() { bs_volume_destroy(v_); }
  Volume(const Volume&) = delete;
  Volume& operator=(const Volume&) = delete;
  const bs_volume* get() const { return v_; }

 private:
  bs_volume* v_ = nullptr;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Session::StageFailure{"IoError: cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string require_config(const Globals& g, const char* command) {
  if (g.config.empty()) throw CLI::RequiredError(std::string("--config (required by ") + command + ")");
  return g.config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brain tissue classification with subdomain kernel discriminant analysis"};
  app.name("brainseg");
  app.require_subcommand(1);
  app.set_version_flag("--version", bs_version());

  Globals g;
  app.add_option("--config", g.config, "JSON file: pipeline config (phantom: phantom spec)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the random seed");
  app.add_option("--threads", g.threads, "Worker threads (output does not depend on it)")->check(CLI::Range(1, 256));
  app.add_flag("--verbose", g.verbose, "Log progress to stderr");

  // phantom
  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic multi-channel phantom with ground truth");
  std::string ph_out, ph_degrade, ph_preset = "standard";
  int ph_erode = -1;
  double ph_swap = -1.0;
  phantom->add_option("--out", ph_out, "Output directory")->required();
  phantom->add_option("--preset", ph_preset, "Built-in spec when --config is not given")
      ->check(CLI::IsMember({"standard", "low_contrast"}));
  phantom->add_option("--degrade", ph_degrade, "JSON file describing the flawed initialization")
      ->check(CLI::ExistingFile);
  phantom->add_option("--erode-csf", ph_erode, "CSF erosion passes for init_labels.nii")->check(CLI::NonNegativeNumber);
  phantom->add_option("--swap-fraction", ph_swap, "Fraction of GM/WM voxels swapped in init_labels.nii")
      ->check(CLI::Range(0.0, 1.0));

  // partition
  auto* partition = app.add_subcommand("partition", "Partition the brain into subdomains by MI gain");
  std::string part_out;
  partition->add_option("--out", part_out, "Output partition JSON")->required();

  // classify
  auto* classify = app.add_subcommand("classify", "Two-stage KFDA classification of every subdomain");
  std::string cls_partition, cls_out;
  classify->add_option("--partition", cls_partition, "Partition JSON from 'partition'")->required()->check(CLI::ExistingFile);
  classify->add_option("--out", cls_out, "Output directory for subdomain labels and manifest.json")->required();

  // stitch
  auto* stitch = app.add_subcommand("stitch", "Fuse subdomain labelings into one volume");
  std::string st_partition, st_manifest, st_out;
  stitch->add_option("--partition", st_partition, "Partition JSON")->required()->check(CLI::ExistingFile);
  stitch->add_option("--manifest", st_manifest, "manifest.json from 'classify'")->required()->check(CLI::ExistingFile);
  stitch->add_option("--out", st_out, "Output label volume (.nii or .nii.gz)")->required();

  // ssim
  auto* ssim = app.add_subcommand("ssim", "Mean SSIM between two volumes inside a mask");
  std::string ss_ref, ss_test, ss_mask, ss_map;
  int ss_window = 11;
  double ss_sigma = 1.5, ss_k1 = 0.01, ss_k2 = 0.03;
  std::optional<double> ss_range;
  ssim->add_option("--ref", ss_ref, "Reference volume")->required()->check(CLI::ExistingFile);
  ssim->add_option("--test", ss_test, "Test volume")->required()->check(CLI::ExistingFile);
  ssim->add_option("--mask", ss_mask, "Brain mask")->required()->check(CLI::ExistingFile);
  ssim->add_option("--map", ss_map, "Write the per-voxel SSIM map here");
  ssim->add_option("--window", ss_window, "Gaussian window size (odd)")->capture_default_str();
  ssim->add_option("--sigma", ss_sigma, "Gaussian window std in pixels")->capture_default_str();
  ssim->add_option("--k1", ss_k1, "Luminance constant")->capture_default_str();
  ssim->add_option("--k2", ss_k2, "Contrast constant")->capture_default_str();
  ssim->add_option("--range", ss_range, "Dynamic range (default: larger in-mask range of the two)");

  // dice
  auto* dice = app.add_subcommand("dice", "Dice overlap between two label volumes");
  std::string d_a, d_b, d_class = "all";
  dice->add_option("--a", d_a, "First label volume")->required()->check(CLI::ExistingFile);
  dice->add_option("--b", d_b, "Second label volume")->required()->check(CLI::ExistingFile);
  dice->add_option("--class", d_class, "CSF, GM, WM, MWM or all")->capture_default_str()
      ->check(CLI::IsMember({"CSF", "GM", "WM", "MWM", "all"}));

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run the full segmentation pipeline from a config");
  std::string pl_report;
  pipeline->add_option("--print-report", pl_report, "Also copy the report JSON to this path");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    Session s(g);
    if (*phantom) {
      std::string spec;
      if (!g.config.empty()) {
        spec = slurp(g.config);
      } else if (ph_preset != "standard") {
        spec = "{\"preset\": \"" + ph_preset + "\"}";
      }
      std::string degrade = ph_degrade.empty() ? std::string("{}") : slurp(ph_degrade);
      if (ph_erode >= 0 || ph_swap >= 0.0) {
        // Flag shortcuts override the file; build a small JSON object.
        std::ostringstream d;
        d.precision(17);
        d << "{";
        bool first = true;
        if (ph_erode >= 0) {
          d << "\"csf_erode_iters\": " << ph_erode;
          first = false;
        }
        if (ph_swap >= 0.0) d << (first ? "" : ", ") << "\"gm_wm_swap_fraction\": " << ph_swap;
        d << "}";
        degrade = d.str();
      }
      s.check(bs_phantom_generate(s.get(), spec.empty() ? nullptr : spec.c_str(), degrade.c_str(), ph_out.c_str()));
      std::printf("phantom written to %s\n", ph_out.c_str());
    } else if (*partition) {
      s.check(bs_partition(s.get(), require_config(g, "partition").c_str(), part_out.c_str()));
      std::printf("partition written to %s\n", part_out.c_str());
    } else if (*classify) {
      s.check(bs_classify(s.get(), require_config(g, "classify").c_str(), cls_partition.c_str(), cls_out.c_str()));
      std::printf("subdomain labels written to %s\n", cls_out.c_str());
    } else if (*stitch) {
      s.check(bs_stitch(s.get(), require_config(g, "stitch").c_str(), st_partition.c_str(), st_manifest.c_str(),
                        st_out.c_str()));
      std::printf("labels written to %s\n", st_out.c_str());
    } else if (*ssim) {
      std::ostringstream p;
      p.precision(17);
      p << "{\"window\": " << ss_window << ", \"sigma\": " << ss_sigma << ", \"k1\": " << ss_k1 << ", \"k2\": " << ss_k2;
      if (ss_range) p << ", \"dynamic_range\": " << *ss_range;
      p << "}";
      const std::string params = p.str();
      Volume ref(s, ss_ref, BS_VOLUME_SCALAR), test(s, ss_test, BS_VOLUME_SCALAR), mask(s, ss_mask, BS_VOLUME_MASK);
      double value = 0.0;
      s.check(bs_mssim(s.get(), ref.get(), test.get(), mask.get(), params.c_str(), &value));
      std::printf("mssim %.6f\n", value);
      if (!ss_map.empty()) {
        bs_volume* map = nullptr;
        s.check(bs_ssim_map(s.get(), ref.get(), test.get(), mask.get(), params.c_str(), &map));
        Volume owned(map);
        s.check(bs_volume_save(s.get(), owned.get(), ss_map.c_str()));
      }
    } else if (*dice) {
      Volume a(s, d_a, BS_VOLUME_LABELS), b(s, d_b, BS_VOLUME_LABELS);
      for (const char* cls : {"CSF", "GM", "WM", "MWM"}) {
        if (d_class != "all" && d_class != cls) continue;
        double value = 0.0;
        s.check(bs_dice(s.get(), a.get(), b.get(), cls, &value));
        std::printf("dice %s %.6f\n", cls, value);
      }
    } else if (*pipeline) {
      char* report = nullptr;
      s.check(bs_pipeline_run(s.get(), require_config(g, "pipeline").c_str(), &report));
      if (!pl_report.empty()) {
        std::ofstream out(pl_report, std::ios::binary);
        out << report << '\n';
      }
      bs_string_free(report);
      std::printf("pipeline finished\n");
    }
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const Session::StageFailure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return 0;
}
