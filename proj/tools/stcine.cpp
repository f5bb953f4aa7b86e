// Experiment driver: phantom data generation, training, reconstruction,
// persistent-homology analysis, rotation and limited-data studies.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "stcine/cli.hpp"
#include "stcine/io.hpp"

namespace {

using namespace stcine;

constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

train::TrainConfig train_config_from(const io::Config& cfg, uint64_t seed) {
  auto domain = slicing::domain_from_string(cfg.get_str("train.domain", "xt-yt"));
  auto target = train::target_from_string(cfg.get_str("train.target", "image-learning"));
  train::TrainConfig tc = train::desk_train_config(domain, target);
  tc.batch_size = static_cast<int>(cfg.get_int("train.batch_size", tc.batch_size));
  tc.total_backprops = cfg.get_int("train.total_backprops", tc.total_backprops);
  tc.lr_start = cfg.get_double("train.lr_start", tc.lr_start);
  tc.lr_end = cfg.get_double("train.lr_end", tc.lr_start * 1e-2);
  tc.seed = seed;
  tc.stages = static_cast<int>(cfg.get_int("train.stages", tc.stages));
  tc.convs_per_stage = static_cast<int>(cfg.get_int("train.convs_per_stage", tc.convs_per_stage));
  tc.base_features = static_cast<int>(cfg.get_int("train.base_features", tc.base_features));
  return tc;
}

std::vector<int> parse_subjects(const std::string& csv) {
  std::vector<int> out;
  std::string cur;
  for (char ch : csv + ",") {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale radial cine MRI artefact-removal laboratory"};
  app.require_subcommand(1);

  std::string config_path, profile = "desk", out_dir, subjects = "0", val_subjects;
  std::string checkpoint, checkpoint_xy, checkpoint_xtyt, volume, reference, resume;
  std::string data_dir, angles = "-66,-33,0,33,66", n_list = "1,2,4";
  uint64_t seed = 0;
  int n_subjects = 1, nz = 1, test_subject = 0;
  int64_t stop_after = 0;
  double rotation_deg = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key-value config file");
    sub->add_option("--profile", profile, "geometry profile: desk or full");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory")->required();
  };

  CLI::App* gen = app.add_subcommand("generate", "simulate phantoms, k-space and gridding input");
  add_common(gen);
  gen->add_option("--subjects", n_subjects, "number of subjects");
  gen->add_option("--slices", nz, "slices per subject");
  gen->add_option("--rotation-deg", rotation_deg, "rotate phantom and trajectory");

  CLI::App* tr = app.add_subcommand("train", "train a network on generated data");
  add_common(tr);
  tr->add_option("--data", data_dir, "generated dataset directory")->required();
  tr->add_option("--train-subjects", subjects, "comma-separated subject ids");
  tr->add_option("--val-subjects", val_subjects, "comma-separated subject ids");
  tr->add_option("--resume", resume, "checkpoint to continue from");
  tr->add_option("--stop-after", stop_after, "checkpoint mid-schedule after this step");

  CLI::App* rec = app.add_subcommand("reconstruct", "apply a checkpoint to a volume");
  add_common(rec);
  rec->add_option("--checkpoint", checkpoint)->required();
  rec->add_option("--volume", volume, "input x_I volume (.stv)")->required();
  rec->add_option("--reference", reference, "ground-truth volume for metrics");

  CLI::App* hom = app.add_subcommand("homology", "persistent-homology beta0 curves");
  add_common(hom);
  hom->add_option("--data", data_dir)->required();
  hom->add_option("--train-subjects", subjects, "subjects to draw patches from");

  CLI::App* rot = app.add_subcommand("rotation", "metric-vs-rotation-angle experiment");
  add_common(rot);
  rot->add_option("--checkpoint-xy", checkpoint_xy)->required();
  rot->add_option("--checkpoint-xtyt", checkpoint_xtyt)->required();
  rot->add_option("--angles", angles, "comma-separated degrees");
  rot->add_option("--phantom-seed", seed, "seed of the held-out phantom");

  CLI::App* lim = app.add_subcommand("limited-data", "metrics vs number of training subjects");
  add_common(lim);
  lim->add_option("--data", data_dir)->required();
  lim->add_option("--n-list", n_list, "comma-separated subject counts");
  lim->add_option("--test-subject", test_subject);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;  // bad flags are config errors
  }

  try {
    io::Config cfg;
    if (!config_path.empty()) cfg = io::Config::load(config_path);
    auto geom = cli::profile_by_name(cfg.get_str("profile", profile));

    if (gen->parsed()) {
      cli::GenerateOptions opt;
      opt.geom = geom;
      opt.n_subjects = static_cast<int>(cfg.get_int("subjects", n_subjects));
      opt.nz = static_cast<int>(cfg.get_int("slices", nz));
      opt.seed = seed;
      opt.rotation = cfg.get_double("rotation_deg", rotation_deg) * M_PI / 180.0;
      opt.out_dir = out_dir;
      auto slices = cli::cmd_generate(opt);
      std::printf("generated %zu slice volumes under %s\n", slices.size(), out_dir.c_str());
    } else if (tr->parsed()) {
      cli::TrainOptions opt;
      opt.data_dir = data_dir;
      opt.train_subjects = parse_subjects(cfg.get_str("train_subjects", subjects));
      if (cfg.has("val_subjects") || !val_subjects.empty())
        opt.val_subjects = parse_subjects(cfg.get_str("val_subjects", val_subjects));
      opt.cfg = train_config_from(cfg, seed);
      opt.geom = geom;
      opt.out_dir = out_dir;
      if (!resume.empty()) opt.resume = resume;
      opt.stop_after = stop_after;
      auto res = cli::cmd_train(opt);
      std::printf("trained: loss %.6g -> %.6g, checkpoint %s\n", res.first_loss, res.final_loss,
                  res.checkpoint.string().c_str());
    } else if (rec->parsed()) {
      cli::ReconstructOptions opt;
      opt.checkpoint = checkpoint;
      opt.volume = volume;
      if (!reference.empty()) opt.reference = reference;
      opt.geom = geom;
      opt.out_dir = out_dir;
      auto res = cli::cmd_reconstruct(opt);
      if (res.has_report)
        std::printf("frame PSNR %.2f dB, SSIM %.4f, NRMSE %.4f\n", res.report.psnr_frames,
                    res.report.ssim_frames, res.report.nrmse_frames);
    } else if (hom->parsed()) {
      cli::HomologyOptions opt;
      opt.data_dir = data_dir;
      opt.subjects = parse_subjects(cfg.get_str("train_subjects", subjects));
      opt.patch_count = static_cast<int>(cfg.get_int("homology.patches", 400));
      opt.patch_size = static_cast<int>(cfg.get_int("homology.patch_size", 12));
      opt.repeats = static_cast<int>(cfg.get_int("homology.repeats", 10));
      opt.seed = seed;
      opt.out_dir = out_dir;
      auto res = cli::cmd_homology(opt);
      std::printf("beta0 curves written to %s\n", res.csv.string().c_str());
    } else if (rot->parsed()) {
      cli::RotationOptions opt;
      opt.phantom_seed = seed;
      for (int a : parse_subjects(angles)) opt.angles_deg.push_back(a);
      opt.checkpoint_xy = checkpoint_xy;
      opt.checkpoint_xtyt = checkpoint_xtyt;
      opt.geom = geom;
      opt.out_dir = out_dir;
      auto rows = cli::cmd_rotation_experiment(opt);
      std::printf("rotation sweep wrote %zu rows\n", rows.size());
    } else if (lim->parsed()) {
      cli::LimitedDataOptions opt;
      opt.data_dir = data_dir;
      opt.n_list = parse_subjects(n_list);
      opt.test_subject = test_subject;
      opt.cfg = train_config_from(cfg, seed);
      opt.geom = geom;
      opt.out_dir = out_dir;
      auto rows = cli::cmd_limited_data(opt);
      for (const auto& r : rows)
        std::printf("n=%d: frame PSNR %.2f dB\n", r.n_subjects, r.report.psnr_frames);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumericalError;
  }
  return 0;
}
