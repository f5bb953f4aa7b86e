#include "stcine/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "stcine/homology.hpp"
#include "stcine/io.hpp"
#include "stcine/phantom.hpp"
#include "stcine/radial.hpp"
#include "stcine/rng.hpp"

namespace stcine::cli {

namespace fs = std::filesystem;

GeometryProfile desk_profile() { return {"desk", 64, 64, 16, 128, 128, 32.0, 10, 10}; }
GeometryProfile full_profile() { return {"full", 320, 320, 30, 1130, 640, 160.0, 50, 50}; }

GeometryProfile profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "full") return full_profile();
  throw std::invalid_argument("unknown profile '" + name + "' (use desk or full)");
}

namespace {

std::string slice_dirname(int subject, int z) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "subject%02d/slice%02d", subject, z);
  return buf;
}

}  // namespace

uint64_t subject_slice_seed(uint64_t master, int subject, int z) {
  return derive_seed(derive_seed(master, static_cast<uint64_t>(subject)),
                     static_cast<uint64_t>(z) + 0x100);
}

std::vector<GeneratedSlice> cmd_generate(const GenerateOptions& opt) {
  if (opt.n_subjects < 1 || opt.nz < 1)
    throw std::invalid_argument("generate: need at least one subject and slice");
  fs::create_directories(opt.out_dir);

  radial::Trajectory traj = radial::golden_angle_trajectory(
      opt.geom.n_spokes, opt.geom.samples_per_spoke, opt.geom.nt, opt.geom.k_max);
  if (opt.rotation != 0.0) traj = radial::rotate_trajectory(traj, opt.rotation);

  std::vector<GeneratedSlice> out;
  io::CsvWriter manifest(opt.out_dir / "manifest.csv");
  for (const auto* h : {"subject", "slice_z", "dir", "nx", "ny", "nt", "n_spokes"})
    manifest.cell(std::string(h));
  manifest.end_row();

  for (int s = 0; s < opt.n_subjects; ++s)
    for (int z = 0; z < opt.nz; ++z) {
      fs::path dir = opt.out_dir / slice_dirname(s, z);
      fs::create_directories(dir);
      auto spec = phantom::random_phantom(subject_slice_seed(opt.seed, s, z), opt.geom.nt);
      phantom::to_config(spec).save(dir / "phantom.cfg");

      RealVolume truth = phantom::render_sequence(spec, opt.geom.nx, opt.geom.ny, opt.rotation);
      radial::KSpaceData k = radial::sample_kspace_analytic(spec, traj, opt.rotation);
      ComplexVolume recon = radial::gridding_reconstruct(k, opt.geom.nx, opt.geom.ny);
      RealVolume input = magnitude(recon);
      RealVolume residual = slicing::compute_residual(input, truth);

      io::save_volume(dir / "truth.stv", truth);
      radial::save_kspace(dir / "kspace.stk", k);
      io::save_volume(dir / "gridding.stv", recon);
      io::save_volume(dir / "input.stv", input);
      io::save_volume(dir / "residual.stv", residual);

      manifest.cell(static_cast<int64_t>(s));
      manifest.cell(static_cast<int64_t>(z));
      manifest.cell(slice_dirname(s, z));
      manifest.cell(static_cast<int64_t>(opt.geom.nx));
      manifest.cell(static_cast<int64_t>(opt.geom.ny));
      manifest.cell(static_cast<int64_t>(opt.geom.nt));
      manifest.cell(static_cast<int64_t>(opt.geom.n_spokes));
      manifest.end_row();
      out.push_back({s, z, dir});
    }

  // sample availability per training perspective (closed forms)
  int w = opt.geom.nx - 2 * opt.geom.crop, h = opt.geom.ny - 2 * opt.geom.crop;
  auto counts = slicing::dataset_counts(opt.n_subjects, opt.nz, w, h, opt.geom.nt);
  io::CsvWriter ccsv(opt.out_dir / "counts.csv");
  for (const auto* hd : {"n", "nz", "nx_cropped", "ny_cropped", "nt", "frames", "sequences",
                         "spatio_temporal"})
    ccsv.cell(std::string(hd));
  ccsv.end_row();
  ccsv.cell(static_cast<int64_t>(opt.n_subjects));
  ccsv.cell(static_cast<int64_t>(opt.nz));
  ccsv.cell(static_cast<int64_t>(w));
  ccsv.cell(static_cast<int64_t>(h));
  ccsv.cell(static_cast<int64_t>(opt.geom.nt));
  ccsv.cell(counts.frames);
  ccsv.cell(counts.sequences);
  ccsv.cell(counts.spatio_temporal);
  ccsv.end_row();
  return out;
}

std::vector<slicing::VolumePair> load_pairs(const fs::path& data_dir,
                                            const std::vector<int>& subjects) {
  std::vector<slicing::VolumePair> pairs;
  for (int s : subjects) {
    for (int z = 0;; ++z) {
      fs::path dir = data_dir / slice_dirname(s, z);
      if (!fs::exists(dir / "input.stv")) {
        if (z == 0)
          throw std::runtime_error("dataset: no slices for subject " + std::to_string(s) +
                                   " under " + data_dir.string());
        break;
      }
      slicing::VolumePair p;
      p.input = io::load_real_volume(dir / "input.stv");
      p.ground_truth = io::load_real_volume(dir / "truth.stv");
      p.subject = s;
      p.slice_z = z;
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

TrainOutput cmd_train(const TrainOptions& opt) {
  opt.cfg.validate();
  fs::create_directories(opt.out_dir);
  auto train_pairs = load_pairs(opt.data_dir, opt.train_subjects);
  std::vector<slicing::VolumePair> val_pairs;
  if (!opt.val_subjects.empty()) val_pairs = load_pairs(opt.data_dir, opt.val_subjects);

  slicing::DatasetSpec dspec;
  dspec.mode = opt.cfg.domain;
  dspec.crop = opt.geom.crop;
  dspec.stride = opt.geom.stride;
  dspec.label_mode = train::select_labels(opt.cfg);
  auto train_ds = slicing::build_dataset(train_pairs, dspec);
  std::vector<slicing::SliceSample> val_ds;
  if (!val_pairs.empty()) val_ds = slicing::build_dataset(val_pairs, dspec);

  int nt = train_pairs.front().input.nt;
  nn::UNet<float> net;
  int64_t start_step = 0;
  if (!opt.resume.empty()) {
    auto ck = train::load_checkpoint<float>(opt.resume);
    net = std::move(ck.net);
    start_step = ck.step;
  } else {
    net = nn::UNet<float>(train::make_unet_config(opt.cfg, nt));
    net.init(derive_seed(opt.cfg.seed, 0x1u));
  }

  int64_t end_step = opt.stop_after > 0 ? std::min(opt.stop_after, opt.cfg.total_backprops)
                                        : opt.cfg.total_backprops;
  auto trace = train::train(net, train_ds, val_ds, opt.cfg, start_step, end_step);

  TrainOutput out;
  out.checkpoint = opt.out_dir / "checkpoint.stc";
  out.loss_csv = opt.out_dir / "loss.csv";
  train::save_checkpoint(out.checkpoint, net, opt.cfg, end_step, nt);
  train::save_loss_trace(out.loss_csv, trace, opt.cfg);
  if (!trace.train_loss.empty()) {
    out.first_loss = trace.train_loss.front();
    out.final_loss = trace.train_loss.back();
  }
  return out;
}

ReconstructOutput reconstruct_volume(const fs::path& checkpoint, const RealVolume& x_i,
                                     const RealVolume* ref, const GeometryProfile& geom) {
  auto ck = train::load_checkpoint<float>(checkpoint);
  int wx = geom.nx - 2 * geom.crop, wy = geom.ny - 2 * geom.crop;
  auto t0 = std::chrono::steady_clock::now();
  auto rec = train::predict_volume(ck.net, x_i, ck.cfg, wx, wy, geom.stride);
  auto t1 = std::chrono::steady_clock::now();

  ReconstructOutput out;
  out.seconds = std::chrono::duration<double>(t1 - t0).count();
  if (ref) {
    auto roi = metrics::central_roi(x_i.nx, x_i.ny);
    out.report = metrics::evaluate_volume(*ref, rec.volume, roi);
    out.has_report = true;
  }
  out.estimate_volume = std::move(rec.volume);
  return out;
}

ReconstructOutput cmd_reconstruct(const ReconstructOptions& opt) {
  fs::create_directories(opt.out_dir);
  RealVolume x_i = io::load_real_volume(opt.volume);
  RealVolume ref;
  bool has_ref = !opt.reference.empty();
  if (has_ref) ref = io::load_real_volume(opt.reference);

  ReconstructOutput out =
      reconstruct_volume(opt.checkpoint, x_i, has_ref ? &ref : nullptr, opt.geom);
  out.estimate = opt.out_dir / "estimate.stv";
  io::save_volume(out.estimate, out.estimate_volume);
  std::printf("reconstructed %dx%dx%d slice in %.3f s\n", x_i.nx, x_i.ny, x_i.nt, out.seconds);

  // mid-cycle frame previews
  int t_mid = x_i.nt / 2;
  double hi = 0.0;
  for (double v : x_i.v) hi = std::max(hi, v);
  io::write_pgm16(opt.out_dir / "input.pgm", x_i.frame(t_mid), 0.0, hi);
  io::write_pgm16(opt.out_dir / "estimate.pgm", out.estimate_volume.frame(t_mid), 0.0, hi);
  if (has_ref) io::write_pgm16(opt.out_dir / "reference.pgm", ref.frame(t_mid), 0.0, hi);

  if (out.has_report)
    append_metrics_csv(opt.out_dir / "metrics.csv", "reconstruct", "", 0, 0.0, out.report);
  return out;
}

namespace {

std::vector<Mat<double>> collect_frames(const std::vector<RealVolume>& vols) {
  std::vector<Mat<double>> out;
  for (const auto& v : vols)
    for (int t = 0; t < v.nt; ++t) out.push_back(v.frame(t));
  return out;
}

std::vector<Mat<double>> collect_st_slices(const std::vector<RealVolume>& vols) {
  std::vector<Mat<double>> out;
  for (const auto& v : vols) {
    for (int y = 0; y < v.ny; ++y) out.push_back(slicing::extract_xt(v, y));
    for (int x = 0; x < v.nx; ++x) out.push_back(slicing::extract_yt(v, x));
  }
  return out;
}

}  // namespace

HomologyOutput cmd_homology(const HomologyOptions& opt) {
  fs::create_directories(opt.out_dir);
  auto pairs = load_pairs(opt.data_dir, opt.subjects);
  std::vector<RealVolume> truths, residuals;
  for (auto& p : pairs) {
    residuals.push_back(slicing::compute_residual(p.input, p.ground_truth));
    truths.push_back(std::move(p.ground_truth));
  }

  HomologyOutput out;
  out.r_grid = homology::uniform_r_grid(opt.r_points);
  auto curve = [&](const std::vector<Mat<double>>& imgs, uint64_t tag) {
    return homology::averaged_betti_curve(imgs, opt.repeats, opt.patch_count, opt.patch_size,
                                          out.r_grid, derive_seed(opt.seed, tag));
  };
  out.xy_img = curve(collect_frames(truths), 1);
  out.xy_res = curve(collect_frames(residuals), 2);
  out.xtyt_img = curve(collect_st_slices(truths), 3);
  out.xtyt_res = curve(collect_st_slices(residuals), 4);

  out.csv = opt.out_dir / "betti.csv";
  io::CsvWriter csv(out.csv);
  for (const auto* h : {"r", "xy_img", "xy_res", "xtyt_img", "xtyt_res"}) csv.cell(std::string(h));
  csv.end_row();
  for (size_t i = 0; i < out.r_grid.size(); ++i) {
    csv.cell(out.r_grid[i]);
    csv.cell(out.xy_img[i]);
    csv.cell(out.xy_res[i]);
    csv.cell(out.xtyt_img[i]);
    csv.cell(out.xtyt_res[i]);
    csv.end_row();
  }
  return out;
}

std::vector<RotationRow> cmd_rotation_experiment(const RotationOptions& opt) {
  fs::create_directories(opt.out_dir);
  std::vector<RotationRow> rows;
  io::CsvWriter csv(opt.out_dir / "rotation.csv");
  for (const auto* h : {"angle_deg", "model", "psnr_frames", "ssim_frames", "nrmse_frames",
                        "psnr_st", "ssim_st", "nrmse_st"})
    csv.cell(std::string(h));
  csv.end_row();

  auto spec = phantom::random_phantom(opt.phantom_seed, opt.geom.nt);
  radial::Trajectory base_traj = radial::golden_angle_trajectory(
      opt.geom.n_spokes, opt.geom.samples_per_spoke, opt.geom.nt, opt.geom.k_max);

  for (double deg : opt.angles_deg) {
    double theta = deg * M_PI / 180.0;
    RealVolume truth = phantom::render_sequence(spec, opt.geom.nx, opt.geom.ny, theta);
    auto traj = theta == 0.0 ? base_traj : radial::rotate_trajectory(base_traj, theta);
    auto k = radial::sample_kspace_analytic(spec, traj, theta);
    RealVolume x_i = magnitude(radial::gridding_reconstruct(k, opt.geom.nx, opt.geom.ny));

    for (auto [name, ckpt] : {std::pair<const char*, const fs::path*>{"xy", &opt.checkpoint_xy},
                              {"xt-yt", &opt.checkpoint_xtyt}}) {
      auto rec = reconstruct_volume(*ckpt, x_i, &truth, opt.geom);
      RotationRow row{deg, name, rec.report};
      rows.push_back(row);
      csv.cell(deg);
      csv.cell(std::string(name));
      csv.cell(row.report.psnr_frames);
      csv.cell(row.report.ssim_frames);
      csv.cell(row.report.nrmse_frames);
      csv.cell(row.report.psnr_st);
      csv.cell(row.report.ssim_st);
      csv.cell(row.report.nrmse_st);
      csv.end_row();
    }
  }
  return rows;
}

std::vector<LimitedDataRow> cmd_limited_data(const LimitedDataOptions& opt) {
  fs::create_directories(opt.out_dir);
  auto test_pairs = load_pairs(opt.data_dir, {opt.test_subject});

  std::vector<LimitedDataRow> rows;
  io::CsvWriter csv(opt.out_dir / "limited.csv");
  for (const auto* h : {"n_subjects", "psnr_frames", "ssim_frames", "nrmse_frames", "psnr_st",
                        "ssim_st", "nrmse_st"})
    csv.cell(std::string(h));
  csv.end_row();

  for (int n : opt.n_list) {
    std::vector<int> subj(n);
    for (int i = 0; i < n; ++i) subj[i] = i;
    TrainOptions topt;
    topt.data_dir = opt.data_dir;
    topt.train_subjects = subj;
    topt.cfg = opt.cfg;
    topt.geom = opt.geom;
    topt.out_dir = opt.out_dir / ("n" + std::to_string(n));
    auto trained = cmd_train(topt);

    metrics::MetricReport mean{};
    for (const auto& tp : test_pairs) {
      auto rec = reconstruct_volume(trained.checkpoint, tp.input, &tp.ground_truth, opt.geom);
      mean.psnr_frames += rec.report.psnr_frames;
      mean.ssim_frames += rec.report.ssim_frames;
      mean.nrmse_frames += rec.report.nrmse_frames;
      mean.psnr_st += rec.report.psnr_st;
      mean.ssim_st += rec.report.ssim_st;
      mean.nrmse_st += rec.report.nrmse_st;
    }
    double cnt = static_cast<double>(test_pairs.size());
    mean.psnr_frames /= cnt;
    mean.ssim_frames /= cnt;
    mean.nrmse_frames /= cnt;
    mean.psnr_st /= cnt;
    mean.ssim_st /= cnt;
    mean.nrmse_st /= cnt;

    rows.push_back({n, mean});
    csv.cell(static_cast<int64_t>(n));
    csv.cell(mean.psnr_frames);
    csv.cell(mean.ssim_frames);
    csv.cell(mean.nrmse_frames);
    csv.cell(mean.psnr_st);
    csv.cell(mean.ssim_st);
    csv.cell(mean.nrmse_st);
    csv.end_row();
  }
  return rows;
}

void append_metrics_csv(const fs::path& path, const std::string& experiment,
                        const std::string& config, int n_subjects, double rotation_deg,
                        const metrics::MetricReport& rep) {
  bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("metrics: cannot write " + path.string());
  if (fresh)
    out << "experiment,config,n_subjects,rotation_deg,psnr_frames,ssim_frames,nrmse_frames,"
           "psnr_st,ssim_st,nrmse_st\n";
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                experiment.c_str(), config.c_str(), n_subjects, rotation_deg, rep.psnr_frames,
                rep.ssim_frames, rep.nrmse_frames, rep.psnr_st, rep.ssim_st, rep.nrmse_st);
  out << buf;
}

}  // namespace stcine::cli
