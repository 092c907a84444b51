#pragma once

// Command-line front end. run() never calls exit(); it maps failures to
// exit codes: 0 success, 2 bad arguments, 3 I/O or parse failure,
// 4 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asn/experiments.hpp"
#include "asn/io.hpp"
#include "asn/parallel.hpp"

namespace asn::cli {

enum ExitCode : int { kOk = 0, kBadArguments = 2, kIoFailure = 3, kNumericalFailure = 4 };

namespace detail {

namespace fs = std::filesystem;

// "asn <subcommand> --flag=value ..." with every option of the subcommand,
// defaults included. --threads does not affect results and is only listed
// when with_threads is set.
inline std::string provenance(const CLI::App& app, const CLI::App& sub, bool with_threads = true) {
  std::string out = "asn";
  const auto* threads = app.get_option_no_throw("--threads");
  if (with_threads && threads) {
    out += " --threads=" + (threads->count() ? threads->results().front() : threads->get_default_str());
  }
  out += " " + sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name() == "--help") continue;
    std::string value;
    if (opt->get_type_size() == 0) {
      value = opt->count() ? "true" : "false";
    } else if (opt->count()) {
      for (std::size_t i = 0; i < opt->results().size(); ++i) value += (i ? "," : "") + opt->results()[i];
    } else {
      value = opt->get_default_str();
    }
    out += " " + opt->get_name() + "=" + value;
  }
  return out;
}

inline std::vector<std::uint64_t> seed_list(int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  return seeds;
}

inline DepthMap load_depth(const std::string& path, const std::string& mask_path) {
  const RasterFile raster = read_raster(path);
  if (mask_path.empty()) return depth_from_raster(raster);
  const RasterFile mask = read_raster(mask_path);
  return depth_from_raster(raster, &mask);
}

inline void write_table(const std::vector<ExperimentRow>& rows, const std::string& flags, const std::string& path) {
  write_csv(to_table(rows, {flags}), path);
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"Adaptive surface normal toolkit"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads; results do not depend on it")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // normals -----------------------------------------------------------------
  struct {
    std::string depth, mask, intrinsics, method = "asn", guidance = "constant", segments, out;
    int patch = 5, k = 40;
    std::uint64_t seed = 0;
    double guidance_scale = 1.0;
    bool no_area = false, no_context = false;
  } nrm;
  auto* normals = app.add_subcommand("normals", "Estimate a normal map from a depth raster");
  normals->add_option("--depth", nrm.depth, "Depth raster (ASNR, float32)")->required();
  normals->add_option("--mask", nrm.mask, "Companion validity mask raster (uint8)");
  normals->add_option("--intrinsics", nrm.intrinsics, "Intrinsics text file")->required();
  normals->add_option("--method", nrm.method)->capture_default_str()->check(CLI::IsMember({"asn", "sobel", "lsq"}));
  normals->add_option("--patch", nrm.patch)->capture_default_str();
  normals->add_option("--k", nrm.k)->capture_default_str();
  normals->add_option("--seed", nrm.seed)->capture_default_str();
  normals->add_option("--guidance", nrm.guidance, "constant, oracle (needs --segments) or a feature raster")
      ->capture_default_str();
  normals->add_option("--segments", nrm.segments, "Segment raster for oracle guidance");
  normals->add_option("--guidance-scale", nrm.guidance_scale, "Multiplier applied to external guidance features")
      ->capture_default_str();
  normals->add_flag("--no-area", nrm.no_area);
  normals->add_flag("--no-context", nrm.no_context);
  normals->add_option("--out", nrm.out, "Output normal raster")->required();

  // eval --------------------------------------------------------------------
  struct {
    std::string pred, gt, pred_mask, gt_mask, intrinsics, kind, out;
  } ev;
  auto* eval = app.add_subcommand("eval", "Compare a prediction against ground truth");
  eval->add_option("--pred", ev.pred)->required();
  eval->add_option("--gt", ev.gt)->required();
  eval->add_option("--pred-mask", ev.pred_mask);
  eval->add_option("--gt-mask", ev.gt_mask);
  eval->add_option("--intrinsics", ev.intrinsics, "Required for --kind cloud");
  eval->add_option("--kind", ev.kind)->required()->check(CLI::IsMember({"depth", "normal", "cloud"}));
  eval->add_option("--out", ev.out)->required();

  // scene -------------------------------------------------------------------
  struct {
    std::string kind, outdir;
    int res = 128;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    bool no_background = false;
  } sc;
  auto* scene = app.add_subcommand("scene", "Render an analytic scene");
  scene->add_option("--kind", sc.kind)->required()->check(CLI::IsMember({"plane", "hemisphere", "step", "wedge"}));
  scene->add_option("--res", sc.res)->capture_default_str()->check(CLI::Range(3, 1 << 14));
  scene->add_option("--sigma", sc.sigma, "Depth noise standard deviation, meters")->capture_default_str();
  scene->add_option("--seed", sc.seed)->capture_default_str();
  scene->add_flag("--no-background", sc.no_background, "Hemisphere without its backing plane");
  scene->add_option("--outdir", sc.outdir)->required();

  // experiment subcommands ----------------------------------------------------
  struct {
    std::string kind = "hemisphere", out;
    double sigma = 0.01;
    std::vector<int> klist{10, 20, 40, 60, 80};
    int res = 64, seeds = 3, patch = 5;
  } sk;
  auto* sweep_k = app.add_subcommand("sweep-k", "Normal error versus triplet count");
  sweep_k->add_option("--kind", sk.kind)->capture_default_str()->check(CLI::IsMember({"hemisphere"}));
  sweep_k->add_option("--sigma", sk.sigma, "Noise, in sphere radii")->capture_default_str();
  sweep_k->add_option("--klist", sk.klist)->delimiter(',')->capture_default_str();
  sweep_k->add_option("--res", sk.res)->capture_default_str();
  sweep_k->add_option("--seeds", sk.seeds)->capture_default_str()->check(CLI::PositiveNumber);
  sweep_k->add_option("--patch", sk.patch)->capture_default_str();
  sweep_k->add_option("--out", sk.out)->required();

  struct {
    std::vector<int> sizes{3, 5, 7, 9};
    double sigma = 0.01;
    int res = 64, seeds = 3, k = 40;
    std::string out;
  } sp;
  auto* sweep_patch = app.add_subcommand("sweep-patch", "Normal error versus patch size");
  sweep_patch->add_option("--sizes", sp.sizes)->delimiter(',')->capture_default_str();
  sweep_patch->add_option("--sigma", sp.sigma, "Noise, in sphere radii")->capture_default_str();
  sweep_patch->add_option("--res", sp.res)->capture_default_str();
  sweep_patch->add_option("--seeds", sp.seeds)->capture_default_str()->check(CLI::PositiveNumber);
  sweep_patch->add_option("--k", sp.k)->capture_default_str();
  sweep_patch->add_option("--out", sp.out)->required();

  struct {
    std::vector<double> sigmas{0.0, 0.002, 0.005, 0.01, 0.02};
    std::vector<std::string> modes{"area", "uniform"};
    int res = 64, seeds = 3;
    std::string out;
  } ne;
  auto* noise = app.add_subcommand("noise-exp", "Area-weighted versus uniform candidate averaging under noise");
  noise->add_option("--sigmas", ne.sigmas, "Noise levels, in sphere radii")->delimiter(',')->capture_default_str();
  noise->add_option("--modes", ne.modes)->delimiter(',')->capture_default_str()->check(
      CLI::IsMember({"area", "uniform"}));
  noise->add_option("--res", ne.res)->capture_default_str();
  noise->add_option("--seeds", ne.seeds)->capture_default_str()->check(CLI::PositiveNumber);
  noise->add_option("--out", ne.out)->required();

  struct {
    int res = 16;
    std::uint64_t seed = 0;
    double h = 1e-5, sigma = 0.01;
    std::string out;
  } gc;
  auto* grad = app.add_subcommand("gradcheck", "Analytic versus central-difference loss gradient");
  grad->set_help_flag("--help", "Print this help message and exit");
  grad->add_option("--res", gc.res)->capture_default_str()->check(CLI::Range(4, 256));
  grad->add_option("--seed", gc.seed)->capture_default_str();
  grad->add_option("--h", gc.h)->capture_default_str()->check(CLI::PositiveNumber);
  grad->add_option("--sigma", gc.sigma, "Prediction noise, in sphere radii")->capture_default_str();
  grad->add_option("--out", gc.out)->required();

  struct {
    std::vector<int> res{64, 128, 256, 512};
    std::vector<std::string> methods{"asn", "sobel", "lsq"};
    std::vector<int> klist;
    int patch = 5, k = 40, repeats = 3;
    std::string out;
  } bn;
  auto* bench = app.add_subcommand("bench", "Wall time of the normal estimators");
  bench->add_option("--res", bn.res)->delimiter(',')->capture_default_str();
  bench->add_option("--methods", bn.methods)->delimiter(',')->capture_default_str()->check(
      CLI::IsMember({"asn", "sobel", "lsq"}));
  bench->add_option("--klist", bn.klist, "Extra ASN timings per triplet count")->delimiter(',');
  bench->add_option("--patch", bn.patch)->capture_default_str();
  bench->add_option("--k", bn.k)->capture_default_str();
  bench->add_option("--repeats", bn.repeats)->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--out", bn.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kBadArguments;
  }

  set_num_threads(threads);

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string flags = provenance(app, *sub);

    if (sub == normals) {
      const Intrinsics intr = read_intrinsics(nrm.intrinsics);
      const DepthMap depth = load_depth(nrm.depth, nrm.mask);
      const PointMap points = backproject(depth, intr);
      AsnConfig cfg;
      cfg.sampler.patch_size = nrm.patch;
      cfg.sampler.triplets = nrm.k;
      cfg.sampler.seed = nrm.seed;
      cfg.use_area = !nrm.no_area;
      cfg.use_context = !nrm.no_context;
      cfg.sampler.validate();
      GuidanceFeatureMap f;
      if (nrm.guidance == "constant") {
        cfg.guidance = GuidanceSource::constant;
        f = constant_guidance(points.width(), points.height());
      } else if (nrm.guidance == "oracle") {
        if (nrm.segments.empty()) throw ContractError("--guidance oracle requires --segments");
        cfg.guidance = GuidanceSource::oracle_segments;
        f = oracle_guidance(segments_from_raster(read_raster(nrm.segments)));
      } else {
        cfg.guidance = GuidanceSource::external;
        f = guidance_from_raster(read_raster(nrm.guidance), nrm.guidance_scale);
      }
      const NormalMap n = estimate_normals(parse_method(nrm.method), points, f, cfg);
      write_raster(to_raster(n), nrm.out);
      return kOk;
    }

    if (sub == eval) {
      std::vector<ExperimentRow> rows;
      std::vector<MetricRow> metrics;
      if (ev.kind == "normal") {
        metrics = normal_metrics(normals_from_raster(read_raster(ev.pred)), normals_from_raster(read_raster(ev.gt))).rows();
      } else {
        const DepthMap pred = load_depth(ev.pred, ev.pred_mask);
        const DepthMap gt = load_depth(ev.gt, ev.gt_mask);
        if (ev.kind == "depth") {
          metrics = depth_metrics(pred, gt).rows();
        } else {
          if (ev.intrinsics.empty()) throw ContractError("--kind cloud requires --intrinsics");
          const Intrinsics intr = read_intrinsics(ev.intrinsics);
          metrics = pointcloud_metrics(backproject(pred, intr), backproject(gt, intr)).rows();
        }
      }
      const std::string config = provenance(app, *sub, false);
      for (const auto& [name, value] : metrics) rows.push_back({ev.gt, ev.pred, config, name, value});
      write_table(rows, flags, ev.out);
      return kOk;
    }

    if (sub == scene) {
      const Intrinsics intr = default_intrinsics(sc.res);
      Scene s;
      if (sc.kind == "plane") {
        s = gen_plane(intr, Plane{Vec3(0.2, -0.1, 1.0).normalized(), 2.0});
      } else if (sc.kind == "hemisphere") {
        HemisphereOptions opt;
        opt.background = !sc.no_background;
        s = gen_hemisphere(intr, opt);
      } else if (sc.kind == "step") {
        s = edge_scene(EdgeSceneKind::step, sc.res);
      } else {
        s = edge_scene(EdgeSceneKind::wedge, sc.res);
      }
      s = add_noise(s, sc.sigma, sc.seed);
      const fs::path dir(sc.outdir);
      fs::create_directories(dir);
      write_raster(to_raster(s.depth), dir / "depth.asnr");
      write_raster(mask_raster(s.depth.mask(), s.depth.width(), s.depth.height()), dir / "mask.asnr");
      write_raster(to_raster(s.normals_gt), dir / "normals.asnr");
      write_raster(to_raster(s.segments), dir / "segments.asnr");
      write_intrinsics(s.intr, dir / "intrinsics.txt");
      return kOk;
    }

    if (sub == sweep_k) {
      HemisphereSetup setup;
      setup.res = sk.res;
      AsnConfig base;
      base.sampler.patch_size = sk.patch;
      std::vector<ExperimentRow> rows;
      for (const auto& p : triplet_sweep(setup, sk.sigma, sk.klist, seed_list(sk.seeds), base)) {
        base.sampler.triplets = p.parameter;
        rows.push_back({"hemisphere", "asn", describe(base) + ";sigma=" + format_double(sk.sigma),
                        "mean_angle_error_k" + std::to_string(p.parameter), p.error});
      }
      write_table(rows, flags, sk.out);
      return kOk;
    }

    if (sub == sweep_patch) {
      HemisphereSetup setup;
      setup.res = sp.res;
      for (int r : sp.sizes) setup.margin = std::max(setup.margin, r / 2);
      AsnConfig base;
      base.sampler.triplets = sp.k;
      std::vector<ExperimentRow> rows;
      for (const auto& p : patch_sweep(setup, sp.sigma, sp.sizes, seed_list(sp.seeds), base)) {
        base.sampler.patch_size = p.parameter;
        rows.push_back({"hemisphere", "asn", describe(base) + ";sigma=" + format_double(sp.sigma),
                        "mean_angle_error_r" + std::to_string(p.parameter), p.error});
      }
      write_table(rows, flags, sp.out);
      return kOk;
    }

    if (sub == noise) {
      HemisphereSetup setup;
      setup.res = ne.res;
      std::vector<ExperimentRow> rows;
      const bool want_area = std::find(ne.modes.begin(), ne.modes.end(), "area") != ne.modes.end();
      const bool want_uniform = std::find(ne.modes.begin(), ne.modes.end(), "uniform") != ne.modes.end();
      for (const auto& p : noise_experiment(setup, ne.sigmas, seed_list(ne.seeds))) {
        const std::string cfg = "sigma=" + format_double(p.relative_sigma) + ";seed=" + std::to_string(p.seed);
        const std::string metric = "mean_angle_error_sigma" + format_double(p.relative_sigma);
        if (want_area) rows.push_back({"hemisphere", "asn_area", cfg, metric, p.area_error});
        if (want_uniform) rows.push_back({"hemisphere", "asn_uniform", cfg, metric, p.uniform_error});
      }
      write_table(rows, flags, ne.out);
      return kOk;
    }

    if (sub == grad) {
      const GradcheckResult r = gradcheck(gc.res, gc.seed, gc.h, gc.sigma);
      const std::string cfg = "res=" + std::to_string(gc.res) + ";seed=" + std::to_string(gc.seed) +
                              ";h=" + format_double(gc.h) + ";sigma=" + format_double(gc.sigma);
      const std::string name = "hemisphere" + std::to_string(gc.res);
      write_table({{name, "total_loss_grad", cfg, "max_rel_error", r.max_rel_error},
                   {name, "total_loss_grad", cfg, "mean_rel_error", r.mean_rel_error},
                   {name, "total_loss_grad", cfg, "fraction_within_1e-4", r.fraction_within},
                   {name, "total_loss_grad", cfg, "checked_pixels", static_cast<double>(r.checked)},
                   {name, "total_loss_grad", cfg, "flagged_pixels", static_cast<double>(r.flagged)}},
                  flags, gc.out);
      return kOk;
    }

    if (sub == bench) {
      std::vector<ExperimentRow> rows;
      for (int res : bn.res) {
        HemisphereOptions opt;
        const Scene s = add_noise(gen_hemisphere(default_intrinsics(res), opt), 0.005, 0);
        const PointMap points = backproject(s.depth, s.intr);
        const GuidanceFeatureMap f = constant_guidance(res, res);
        const double pixels = static_cast<double>(points.valid_count());
        const auto time_one = [&](Method m, const AsnConfig& cfg) {
          const double t = time_estimator(m, points, f, cfg, bn.repeats);
          const std::string name = "hemisphere" + std::to_string(res);
          rows.push_back({name, to_string(m), describe(cfg), "wall_s", t});
          rows.push_back({name, to_string(m), describe(cfg), "per_pixel_us", 1e6 * t / pixels});
        };
        AsnConfig cfg;
        cfg.sampler.patch_size = bn.patch;
        cfg.sampler.triplets = bn.k;
        for (const auto& m : bn.methods) time_one(parse_method(m), cfg);
        for (int k : bn.klist) {
          AsnConfig kc = cfg;
          kc.sampler.triplets = k;
          time_one(Method::asn, kc);
        }
      }
      write_table(rows, flags, bn.out);
      return kOk;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kBadArguments;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kBadArguments;
}

}  // namespace asn::cli
