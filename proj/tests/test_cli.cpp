#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "stcine/cli.hpp"
#include "stcine/io.hpp"

using namespace stcine;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / "stcine_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

/// Tiny geometry so CLI-level tests stay fast.
cli::GeometryProfile tiny_geom() {
  cli::GeometryProfile g = cli::desk_profile();
  g.nx = g.ny = 32;
  g.nt = 12;
  g.n_spokes = 36;
  g.samples_per_spoke = 64;
  g.k_max = 16.0;
  g.crop = 4;
  g.stride = 8;
  return g;
}

train::TrainConfig tiny_train_config() {
  train::TrainConfig cfg;
  cfg.domain = slicing::DomainMode::XtYt;
  cfg.target = train::Target::ImageLearning;
  cfg.batch_size = 4;
  cfg.total_backprops = 30;
  cfg.lr_start = 1e-4;
  cfg.lr_end = 1e-5;
  cfg.stages = 2;
  cfg.convs_per_stage = 1;
  cfg.base_features = 4;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("profiles expose the two geometries") {
  auto desk = cli::profile_by_name("desk");
  CHECK(desk.nx == 64);
  CHECK(desk.nt == 16);
  CHECK(desk.n_spokes == 128);
  auto full = cli::profile_by_name("full");
  CHECK(full.nx == 320);
  CHECK(full.nt == 30);
  CHECK(full.n_spokes == 1130);
  CHECK(full.crop == 50);
  CHECK(full.stride == 50);
  CHECK_THROWS_AS(cli::profile_by_name("giant"), std::invalid_argument);
}

TEST_CASE("generate writes one volume set per subject/slice plus manifests") {
  auto out = temp_dir("cli_generate");
  cli::GenerateOptions opt;
  opt.geom = tiny_geom();
  opt.n_subjects = 1;
  opt.nz = 1;
  opt.seed = 77;
  opt.out_dir = out;
  auto slices = cli::cmd_generate(opt);
  REQUIRE(slices.size() == 1);
  for (const char* f : {"truth.stv", "kspace.stk", "gridding.stv", "input.stv",
                        "residual.stv", "phantom.cfg"})
    CHECK(fs::exists(slices[0].dir / f));
  CHECK(fs::exists(out / "manifest.csv"));

  // counts.csv carries the closed-form sample counts
  auto rows = io::read_csv(out / "counts.csv");
  REQUIRE(rows.size() == 2);
  auto counts = slicing::dataset_counts(1, 1, 32 - 8, 32 - 8, 12);
  CHECK(std::stoll(rows[1][5]) == counts.frames);
  CHECK(std::stoll(rows[1][6]) == counts.sequences);
  CHECK(std::stoll(rows[1][7]) == counts.spatio_temporal);

  // residual = input - truth on disk
  auto input = io::load_real_volume(slices[0].dir / "input.stv");
  auto truth = io::load_real_volume(slices[0].dir / "truth.stv");
  auto residual = io::load_real_volume(slices[0].dir / "residual.stv");
  for (size_t i = 0; i < input.size(); ++i)
    CHECK(residual.v[i] == input.v[i] - truth.v[i]);
}

TEST_CASE("regeneration with the same seed is bit-identical") {
  auto a = temp_dir("cli_gen_a");
  auto b = temp_dir("cli_gen_b");
  cli::GenerateOptions opt;
  opt.geom = tiny_geom();
  opt.n_subjects = 2;
  opt.seed = 99;
  opt.out_dir = a;
  cli::cmd_generate(opt);
  opt.out_dir = b;
  cli::cmd_generate(opt);
  for (const char* f : {"subject00/slice00/input.stv", "subject01/slice00/kspace.stk",
                        "subject00/slice00/truth.stv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("train smoke: loss drops, checkpoints and traces land on disk") {
  auto data = temp_dir("cli_train_data");
  cli::GenerateOptions gen;
  gen.geom = tiny_geom();
  gen.n_subjects = 2;
  gen.seed = 11;
  gen.out_dir = data;
  cli::cmd_generate(gen);

  cli::TrainOptions topt;
  topt.data_dir = data;
  topt.train_subjects = {0};
  topt.val_subjects = {1};
  topt.cfg = tiny_train_config();
  topt.cfg.total_backprops = 100;
  topt.geom = tiny_geom();
  topt.out_dir = temp_dir("cli_train_out");
  auto res = cli::cmd_train(topt);
  CHECK(fs::exists(res.checkpoint));
  CHECK(fs::exists(res.loss_csv));
  CHECK(res.final_loss < res.first_loss);

  SUBCASE("residual and image targets produce different checkpoints") {
    cli::TrainOptions ropt = topt;
    ropt.cfg.target = train::Target::ResidualLearning;
    ropt.out_dir = temp_dir("cli_train_res");
    auto rres = cli::cmd_train(ropt);
    CHECK(slurp(res.checkpoint) != slurp(rres.checkpoint));
  }

  SUBCASE("training is deterministic across reruns") {
    cli::TrainOptions again = topt;
    again.out_dir = temp_dir("cli_train_out2");
    auto res2 = cli::cmd_train(again);
    CHECK(slurp(res.checkpoint) == slurp(res2.checkpoint));
    CHECK(slurp(res.loss_csv) == slurp(res2.loss_csv));
  }

  SUBCASE("resuming continues the schedule at the stored step") {
    // interrupt the 100-step schedule after 50, resume: bit-identical to
    // the uninterrupted run
    cli::TrainOptions first = topt;
    first.stop_after = 50;
    first.out_dir = temp_dir("cli_resume_a");
    auto r1 = cli::cmd_train(first);
    auto ck = train::load_checkpoint<float>(r1.checkpoint);
    CHECK(ck.step == 50);
    cli::TrainOptions second = topt;
    second.resume = r1.checkpoint;
    second.out_dir = temp_dir("cli_resume_b");
    auto r2 = cli::cmd_train(second);
    CHECK(slurp(r2.checkpoint) == slurp(res.checkpoint));
  }

  SUBCASE("reconstruct applies the checkpoint and reports metrics") {
    cli::ReconstructOptions ropt;
    ropt.checkpoint = res.checkpoint;
    ropt.volume = data / "subject01/slice00/input.stv";
    ropt.reference = data / "subject01/slice00/truth.stv";
    ropt.geom = tiny_geom();
    ropt.out_dir = temp_dir("cli_reco");
    auto rec = cli::cmd_reconstruct(ropt);
    CHECK(fs::exists(rec.estimate));
    CHECK(fs::exists(ropt.out_dir / "estimate.pgm"));
    CHECK(rec.has_report);
    CHECK(rec.report.nrmse_frames > 0.0);
    auto vol = io::load_real_volume(rec.estimate);
    CHECK(vol.nx == 32);
  }
}

TEST_CASE("zero-trunk checkpoint reconstructs the input identically") {
  auto dir = temp_dir("cli_zero_trunk");
  auto cfg = tiny_train_config();
  cfg.target = train::Target::ResidualLearning;
  nn::UNet<float> net(train::make_unet_config(cfg, 12));  // zero weights
  train::save_checkpoint(dir / "zero.stc", net, cfg, 0, 12);

  auto data = temp_dir("cli_zero_data");
  cli::GenerateOptions gen;
  gen.geom = tiny_geom();
  gen.seed = 13;
  gen.out_dir = data;
  cli::cmd_generate(gen);

  auto x_i = io::load_real_volume(data / "subject00/slice00/input.stv");
  auto rec = cli::reconstruct_volume(dir / "zero.stc", x_i, &x_i, tiny_geom());
  // estimate == input up to the float32 forward pass
  CHECK(rec.report.nrmse_frames < 1e-6);
  CHECK(rec.report.psnr_frames > 120.0);
  for (int c : {0}) {
    (void)c;
    for (size_t i = 0; i < x_i.size(); ++i)
      CHECK(rec.estimate_volume.v[i] == doctest::Approx(x_i.v[i]).epsilon(1e-6));
  }
}

TEST_CASE("homology command produces deterministic monotone curves") {
  auto data = temp_dir("cli_hom_data");
  cli::GenerateOptions gen;
  gen.geom = tiny_geom();
  gen.n_subjects = 2;
  gen.seed = 17;
  gen.out_dir = data;
  cli::cmd_generate(gen);

  cli::HomologyOptions hopt;
  hopt.data_dir = data;
  hopt.subjects = {0, 1};
  hopt.patch_count = 60;
  hopt.patch_size = 6;
  hopt.repeats = 3;
  hopt.r_points = 50;
  hopt.seed = 19;
  hopt.out_dir = temp_dir("cli_hom_a");
  auto a = cli::cmd_homology(hopt);
  CHECK(fs::exists(a.csv));
  for (const auto* curve : {&a.xy_img, &a.xy_res, &a.xtyt_img, &a.xtyt_res})
    for (size_t i = 1; i < curve->size(); ++i) CHECK((*curve)[i] <= (*curve)[i - 1]);

  hopt.out_dir = temp_dir("cli_hom_b");
  auto b = cli::cmd_homology(hopt);
  CHECK(a.xy_img == b.xy_img);
  CHECK(a.xtyt_res == b.xtyt_res);
}

TEST_CASE("rotation experiment: zero angle reproduces the baseline exactly") {
  auto dir = temp_dir("cli_rot");
  auto cfg = tiny_train_config();
  cfg.target = train::Target::ResidualLearning;
  nn::UNet<float> net(train::make_unet_config(cfg, 12));
  net.init(3);
  train::save_checkpoint(dir / "xtyt.stc", net, cfg, 0, 12);
  auto xy_cfg = cfg;
  xy_cfg.domain = slicing::DomainMode::Xy;
  nn::UNet<float> xy_net(train::make_unet_config(xy_cfg, 12));
  xy_net.init(4);
  train::save_checkpoint(dir / "xy.stc", xy_net, xy_cfg, 0, 12);

  cli::RotationOptions ropt;
  ropt.phantom_seed = cli::subject_slice_seed(23, 0, 0);
  ropt.angles_deg = {0.0, 90.0};
  ropt.checkpoint_xy = dir / "xy.stc";
  ropt.checkpoint_xtyt = dir / "xtyt.stc";
  ropt.geom = tiny_geom();
  ropt.out_dir = dir / "out";
  auto rows = cli::cmd_rotation_experiment(ropt);
  REQUIRE(rows.size() == 4);
  CHECK(fs::exists(ropt.out_dir / "rotation.csv"));

  // theta = 0 equals an independently generated baseline bit-for-bit
  auto data = temp_dir("cli_rot_base");
  cli::GenerateOptions gen;
  gen.geom = tiny_geom();
  gen.seed = 23;
  gen.out_dir = data;
  cli::cmd_generate(gen);
  auto x_i = io::load_real_volume(data / "subject00/slice00/input.stv");
  auto truth = io::load_real_volume(data / "subject00/slice00/truth.stv");
  auto rec = cli::reconstruct_volume(dir / "xy.stc", x_i, &truth, tiny_geom());
  CHECK(rows[0].model == "xy");
  CHECK(rows[0].report.psnr_frames == rec.report.psnr_frames);
  CHECK(rows[0].report.nrmse_frames == rec.report.nrmse_frames);
}

TEST_CASE("limited-data command writes one row per n") {
  auto data = temp_dir("cli_lim_data");
  cli::GenerateOptions gen;
  gen.geom = tiny_geom();
  gen.n_subjects = 3;
  gen.seed = 29;
  gen.out_dir = data;
  cli::cmd_generate(gen);

  cli::LimitedDataOptions lopt;
  lopt.data_dir = data;
  lopt.n_list = {1, 2};
  lopt.test_subject = 2;
  lopt.cfg = tiny_train_config();
  lopt.cfg.total_backprops = 20;
  lopt.geom = tiny_geom();
  lopt.out_dir = temp_dir("cli_lim_out");
  auto rows = cli::cmd_limited_data(lopt);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_subjects == 1);
  CHECK(rows[1].n_subjects == 2);
  auto csv = io::read_csv(lopt.out_dir / "limited.csv");
  CHECK(csv.size() == 3);
}

TEST_CASE("generate rejects bad options") {
  cli::GenerateOptions opt;
  opt.geom = tiny_geom();
  opt.n_subjects = 0;
  opt.out_dir = temp_dir("cli_bad");
  CHECK_THROWS_AS(cli::cmd_generate(opt), std::invalid_argument);
}
