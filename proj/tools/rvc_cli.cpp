#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rvc/experiment.hpp"

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "INI experiment config");
  cmd->add_option("--set", c.overrides, "Override one key: section.key=value (repeatable)");
  cmd->add_option("-o,--out", c.out, "Output directory (default: output.dir)");
}

rvc::ExperimentConfig resolve(const Common& c) {
  rvc::ExperimentConfig cfg = c.config.empty() ? rvc::ExperimentConfig{} : rvc::load_config(c.config);
  for (const auto& o : c.overrides) rvc::apply_override(cfg, o);
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

std::vector<double> parse_numbers(const std::string& s, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto next = s.find(',', pos);
    const std::string item = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw rvc::ConfigError(std::string(what) + ": cannot parse '" + item + "' as a number");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

void log(const std::string& msg) { std::cerr << "[rvc] " << msg << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pillar voxelization, heatmap sub-head training and detection refinement"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("-j,--threads", threads, "Worker threads (default: RVC_THREADS, else 1)");

  Common c_config, c_synth, c_vox, c_train, c_eval, c_bench;

  auto* config_cmd = app.add_subcommand("config", "Print the resolved experiment config");
  add_common(config_cmd, c_config);

  auto* synth = app.add_subcommand("synth", "Generate synthetic scenes and detections");
  add_common(synth, c_synth);
  std::size_t synth_count = 0;
  synth->add_option("-n,--count", synth_count, "Number of scenes (default: eval.frames)");

  auto* vox = app.add_subcommand("voxelize", "Assign points to pillars and dump features");
  add_common(vox, c_vox);
  std::string vox_input, vox_range, vox_voxel, vox_features, vox_bev, vox_stats;
  vox->add_option("-i,--input", vox_input, "Point cloud (.bin KITTI, .csv, .rvc scene)")->required();
  vox->add_option("--range", vox_range, "xmin,ymin,zmin,xmax,ymax,zmax (default: grid section)");
  vox->add_option("--voxel", vox_voxel, "vx,vy for pillars or vx,vy,vz for voxels");
  vox->add_option("--features", vox_features, "Also write per-point features CSV");
  vox->add_option("--bev", vox_bev, "Also run the backbone and write BEV maps (checkpoint format)");
  vox->add_option("--stats", vox_stats, "Write the stats JSON here as well as stdout");

  auto* train = app.add_subcommand("train-subhead", "Train heatmap crop classifiers");
  add_common(train, c_train);
  std::string train_kinds, train_windows;
  train->add_option("--kinds", train_kinds, "Comma list of kinds, e.g. MLP-1,MLP-2");
  train->add_option("--windows", train_windows, "Comma list of window sizes, e.g. 2,8");

  auto* eval = app.add_subcommand("eval", "Precision of raw, filtered and refined detections");
  add_common(eval, c_eval);
  std::string eval_scenes, eval_ckpt;
  bool eval_refine = false;
  eval->add_option("--scenes", eval_scenes, "Directory from `rvc synth` (default: generate)");
  eval->add_option("--checkpoint", eval_ckpt, "Sub-head checkpoint for the refined row");
  eval->add_flag("--refine", eval_refine, "Require a refined row (fails without --checkpoint)");

  auto* bench = app.add_subcommand("bench", "Time voxelization and features against N");
  add_common(bench, c_bench);
  std::string bench_sizes = "1000000,2000000,4000000";
  std::size_t bench_reps = 5;
  bool bench_backbone = false, bench_json = false;
  bench->add_option("--sizes", bench_sizes, "Comma list of point counts")->capture_default_str();
  bench->add_option("--reps", bench_reps, "Timed repetitions (>= 5)")->capture_default_str();
  bench->add_flag("--backbone", bench_backbone, "Include the backbone forward pass");
  bench->add_flag("--json", bench_json, "Print JSON instead of a table");

  auto* report = app.add_subcommand("report", "Pretty-print a report or ablation CSV");
  std::string report_csv;
  report->add_option("csv", report_csv, "report.csv or ablation.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (threads > 0) rvc::set_thread_count(threads);

    if (*config_cmd) {
      std::cout << rvc::format_config(resolve(c_config));
    } else if (*synth) {
      const auto cfg = resolve(c_synth);
      const std::size_t n = synth_count > 0 ? synth_count : cfg.eval_frames;
      log("generating " + std::to_string(n) + " scenes into " + cfg.output_dir);
      const auto s = rvc::cmd_synth(cfg, n, cfg.output_dir);
      rvc::write_text_file(fs::path(cfg.output_dir) / "config.ini", rvc::format_config(cfg));
      std::cout << "scenes " << s.scenes << "\npoints " << s.points << "\ngt_boxes " << s.gt_boxes
                << "\ndetections " << s.detections << "\nfalse_positives " << s.false_positives
                << "\n";
    } else if (*vox) {
      auto cfg = resolve(c_vox);
      if (!vox_range.empty()) {
        const auto r = parse_numbers(vox_range, "--range");
        if (r.size() != 6) throw rvc::ConfigError("--range needs six numbers");
        cfg.range = rvc::CloudRange{{r[0], r[1], r[2]}, {r[3], r[4], r[5]}};
      }
      rvc::validate(cfg.range);
      rvc::GridConfig grid;
      if (!vox_voxel.empty()) {
        const auto v = parse_numbers(vox_voxel, "--voxel");
        if (v.size() == 2) {
          grid = rvc::compute_pillar_grid(cfg.range, v[0], v[1]);
        } else if (v.size() == 3) {
          grid = rvc::compute_grid(cfg.range, {v[0], v[1], v[2]});
        } else {
          throw rvc::ConfigError("--voxel needs two or three numbers");
        }
      } else {
        grid = rvc::compute_grid(cfg.range, cfg.voxel);
      }
      const rvc::PointCloud cloud = rvc::load_cloud_any(vox_input);
      fs::create_directories(cfg.output_dir);
      rvc::VoxelizeOutputs outs;
      outs.pillars_csv = fs::path(cfg.output_dir) / "pillars.csv";
      if (!vox_features.empty()) outs.features_csv = vox_features;
      if (!vox_bev.empty()) outs.bev_bin = vox_bev;
      log("voxelizing " + std::to_string(cloud.size()) + " points on a " +
          std::to_string(grid.size[0]) + "x" + std::to_string(grid.size[1]) + "x" +
          std::to_string(grid.size[2]) + " grid");
      const auto s = rvc::cmd_voxelize(cloud, grid, outs, cfg.backbone_seed);
      const std::string json = s.to_json();
      if (!vox_stats.empty()) rvc::write_text_file(vox_stats, json + "\n");
      std::cout << json << "\n";
    } else if (*train) {
      auto cfg = resolve(c_train);
      if (!train_kinds.empty()) rvc::apply_override(cfg, "classifier.kinds=" + train_kinds);
      if (!train_windows.empty()) rvc::apply_override(cfg, "classifier.windows=" + train_windows);
      log("training on " + std::to_string(cfg.train_frames) + " frames, " +
          std::to_string(cfg.per_class) + " crops per class");
      const auto s = rvc::cmd_train_subhead(cfg, cfg.output_dir);
      for (const auto& w : s.warnings) log("warning: " + w);
      rvc::write_text_file(fs::path(cfg.output_dir) / "config.ini", rvc::format_config(cfg));
      std::cout << rvc::read_text_file(fs::path(cfg.output_dir) / "ablation_table.txt");
    } else if (*eval) {
      const auto cfg = resolve(c_eval);
      if (eval_refine && eval_ckpt.empty()) {
        throw rvc::ConfigError("--refine needs --checkpoint");
      }
      std::optional<rvc::Classifier> clf;
      if (!eval_ckpt.empty()) {
        clf = rvc::classifier_from_checkpoint(rvc::load_checkpoint(eval_ckpt));
      }
      std::vector<rvc::Frame> frames;
      if (!eval_scenes.empty()) {
        frames = rvc::load_frames(eval_scenes, cfg);
      } else {
        log("generating " + std::to_string(cfg.eval_frames) + " evaluation frames");
        frames = rvc::make_frames(
            [&] {
              rvc::FrameConfig fc = cfg.frame;
              fc.scene.range = cfg.range;
              return fc;
            }(),
            cfg.grid(), cfg.eval_seed, cfg.eval_frames);
      }
      rvc::cmd_eval(frames, cfg, clf ? &*clf : nullptr, cfg.output_dir);
      std::cout << rvc::read_text_file(fs::path(cfg.output_dir) / "report.txt");
    } else if (*bench) {
      const auto cfg = resolve(c_bench);
      std::vector<std::size_t> sizes;
      for (double v : parse_numbers(bench_sizes, "--sizes")) {
        if (v < 1) throw rvc::ConfigError("--sizes must be positive");
        sizes.push_back(static_cast<std::size_t>(v));
      }
      log("benchmarking " + std::to_string(sizes.size()) + " sizes, " + std::to_string(bench_reps) +
          " reps each");
      const auto r = rvc::run_bench(sizes, bench_reps, cfg.grid(), bench_backbone, cfg.backbone_seed);
      std::cout << (bench_json ? r.to_json() + "\n" : r.to_text());
    } else if (*report) {
      if (!fs::exists(report_csv)) throw rvc::DataError("report not found: " + report_csv);
      std::cout << rvc::render_report(rvc::read_text_file(report_csv));
    }
  } catch (const rvc::ConfigError& e) {
    log(std::string("error: ") + e.what());
    return 1;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 2;
  }
  return 0;
}
