// Command-line front end: sampling, score tables, bin histograms,
// neighbor-frequency tables, benchmarks, boundary calibration, and
// synthetic shape generation. All outputs are deterministic per seed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcsamp/pcsamp.hpp"

namespace fs = std::filesystem;
using namespace pcsamp;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string weights_path;
  std::string state_path;
  std::string format;  // empty -> by extension
  bool raw = false;    // skip unit-sphere normalization
};

CloudFormat format_for(const GlobalOpts& g, const std::string& path) {
  if (!g.format.empty()) return parse_format(g.format);
  return fs::path(path).extension() == ".ply" ? CloudFormat::ply_ascii : CloudFormat::xyz;
}

PointCloud load_cloud(const GlobalOpts& g, const std::string& path) {
  PointCloud cloud = load_pointcloud(path, format_for(g, path));
  return g.raw ? cloud : normalize_unit_sphere(cloud);
}

struct Resolved {
  PipelineConfig config;
  std::uint64_t seed;
};

Resolved resolve(const GlobalOpts& g, bool seed_given) {
  Resolved r;
  r.seed = g.seed;
  if (!g.config_path.empty()) {
    ConfigFile file = load_config(g.config_path);
    r.config = file.config;
    if (file.seed && !seed_given) r.seed = *file.seed;
  }
  return r;
}

WeightSet resolve_weights(const GlobalOpts& g, const PointCloud& cloud,
                          const PipelineConfig& cfg, std::uint64_t seed) {
  if (!g.weights_path.empty()) return load_weights(g.weights_path);
  return init_weights(cloud.attended().cols(), cfg.key_dim, cfg.bin_count,
                      derive_seed(seed, kStreamWeights));
}

int with_output(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(std::cout);
    return 0;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "error: cannot open '" << path << "' for writing\n";
    return 1;
  }
  fn(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-guided point cloud sampling toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  bool seed_given = false;
  app.add_option("--seed", g.seed, "run seed")->each([&](const std::string&) { seed_given = true; });
  app.add_option("--config", g.config_path, "flat key-value config file");
  app.add_option("--weights", g.weights_path, "binary weights file");
  app.add_option("--state", g.state_path, "bin boundary state file");
  app.add_option("--format", g.format, "cloud format: xyz or ply-ascii (default: by extension)");
  app.add_flag("--raw", g.raw, "skip unit-sphere normalization of input clouds");

  // --- sample ---------------------------------------------------------
  auto* cmd_sample = app.add_subcommand("sample", "run a sampling policy on a cloud");
  std::string sample_cloud, sample_out, sample_policy;
  Index sample_m = 0;
  double sample_cell = 0.0;
  cmd_sample->add_option("cloud", sample_cloud, "input cloud file")->required();
  cmd_sample->add_option("-M,--count", sample_m, "number of points to sample")->required();
  cmd_sample->add_option("--policy", sample_policy,
                         "override policy: top-m, prior, bin, rs, fps, voxel");
  cmd_sample->add_option("--cell", sample_cell, "voxel cell edge (default: fit to -M)");
  cmd_sample->add_option("-o,--out", sample_out, "output file (default stdout)");

  // --- scores ---------------------------------------------------------
  auto* cmd_scores = app.add_subcommand("scores", "emit the per-point score table");
  std::string scores_cloud, scores_out;
  cmd_scores->add_option("cloud", scores_cloud, "input cloud file")->required();
  cmd_scores->add_option("-o,--out", scores_out, "output file (default stdout)");

  // --- bins -----------------------------------------------------------
  auto* cmd_bins = app.add_subcommand("bins", "emit the per-bin histogram for a shape");
  std::string bins_cloud, bins_out, bins_sample_out;
  Index bins_m = 0;
  cmd_bins->add_option("cloud", bins_cloud, "input cloud file")->required();
  cmd_bins->add_option("-M,--count", bins_m, "number of points to sample")->required();
  cmd_bins->add_option("-o,--out", bins_out, "histogram output (default stdout)");
  cmd_bins->add_option("--sample-out", bins_sample_out, "also write the sample result here");

  // --- knn-freq -------------------------------------------------------
  auto* cmd_freq = app.add_subcommand("knn-freq", "emit the neighbor-frequency table");
  std::string freq_cloud, freq_out;
  Index freq_k = 0;
  cmd_freq->add_option("cloud", freq_cloud, "input cloud file")->required();
  cmd_freq->add_option("--k", freq_k, "neighbor count (default: config k)");
  cmd_freq->add_option("-o,--out", freq_out, "output file (default stdout)");

  // --- bench ----------------------------------------------------------
  auto* cmd_bench = app.add_subcommand("bench", "cross-sampler benchmark report");
  std::vector<std::string> bench_shapes{"grid2d", "circle", "cube-shell", "l-bracket"};
  std::vector<std::string> bench_samplers{"rs", "fps", "voxel", "top-m", "prior", "bin"};
  std::vector<Index> bench_m{16, 32, 64};
  Index bench_points = 256;
  std::string bench_out;
  bool bench_timing = false;
  cmd_bench->add_option("--shapes", bench_shapes, "shape generators to run");
  cmd_bench->add_option("--samplers", bench_samplers, "samplers to run");
  cmd_bench->add_option("-M,--counts", bench_m, "sample sizes");
  cmd_bench->add_option("--points", bench_points, "points per generated shape");
  cmd_bench->add_flag("--timing", bench_timing, "append wall-clock column (not reproducible)");
  cmd_bench->add_option("-o,--out", bench_out, "output file (default stdout)");

  // --- calibrate ------------------------------------------------------
  auto* cmd_cal = app.add_subcommand("calibrate", "adaptive boundary calibration over a corpus");
  std::string cal_dir;
  Index cal_batch = 8;
  cmd_cal->add_option("dir", cal_dir, "directory of cloud files")->required();
  cmd_cal->add_option("--batch", cal_batch, "shapes per batch");

  // --- gen ------------------------------------------------------------
  auto* cmd_gen = app.add_subcommand("gen", "emit a synthetic shape as xyz text");
  std::string gen_id, gen_out, gen_mask_out;
  ShapeParams gen_params;
  cmd_gen->add_option("generator", gen_id, "grid2d, circle, cube-shell, l-bracket")->required();
  cmd_gen->add_option("--nx", gen_params.nx, "lattice width");
  cmd_gen->add_option("--ny", gen_params.ny, "lattice height");
  cmd_gen->add_option("--count", gen_params.count, "point count (circle, cube-shell)");
  cmd_gen->add_option("--spacing", gen_params.spacing, "lattice step");
  cmd_gen->add_option("--radius", gen_params.radius, "circle radius");
  cmd_gen->add_option("--edge-tol", gen_params.edge_tol, "cube-shell edge band");
  cmd_gen->add_option("-o,--out", gen_out, "output file (default stdout)");
  cmd_gen->add_option("--mask-out", gen_mask_out, "write the edge mask table here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_sample) {
      const Resolved r = resolve(g, seed_given);
      PipelineConfig cfg = r.config;
      const PointCloud cloud = load_cloud(g, sample_cloud);
      // The non-learned baselines bypass the attention pipeline entirely.
      if (sample_policy == "rs" || sample_policy == "fps" || sample_policy == "voxel") {
        SampleResult baseline;
        if (sample_policy == "rs") {
          baseline = sample_random(cloud, sample_m, r.seed);
        } else if (sample_policy == "fps") {
          baseline = sample_fps(cloud, sample_m, Index(0));
          baseline.seed = r.seed;
        } else {
          const double cell =
              sample_cell > 0 ? sample_cell : detail::pick_voxel_cell(cloud, sample_m);
          baseline = sample_voxel(cloud, cell, sample_m, r.seed);
        }
        return with_output(sample_out, [&](std::ostream& out) {
          write_sample_result(out, baseline, cloud.size());
        });
      }
      if (!sample_policy.empty()) cfg.policy = parse_policy(sample_policy);
      std::optional<VectorX<double>> frozen;
      if (!g.state_path.empty()) {
        const CalibrationState state = load_state(g.state_path);
        cfg.bin_count = state.bin_count;
        cfg.gamma = state.gamma;
        frozen = state.boundaries;
      }
      const WeightSet ws = resolve_weights(g, cloud, cfg, r.seed);
      const PipelineResult result = run_pipeline(cloud, ws, cfg, frozen, sample_m, r.seed);
      return with_output(sample_out, [&](std::ostream& out) {
        write_sample_result(out, result.sample, cloud.size());
      });
    }

    if (*cmd_scores) {
      const Resolved r = resolve(g, seed_given);
      const PointCloud cloud = load_cloud(g, scores_cloud);
      const WeightSet ws = resolve_weights(g, cloud, r.config, r.seed);
      const ScoreVector scores = compute_scores(cloud, ws, r.config);
      return with_output(scores_out, [&](std::ostream& out) {
        write_score_table(out, scores, r.config);
      });
    }

    if (*cmd_bins) {
      const Resolved r = resolve(g, seed_given);
      PipelineConfig cfg = r.config;
      cfg.policy = SamplePolicy::bin;
      const PointCloud cloud = load_cloud(g, bins_cloud);
      std::optional<VectorX<double>> frozen;
      if (!g.state_path.empty()) {
        const CalibrationState state = load_state(g.state_path);
        cfg.bin_count = state.bin_count;
        cfg.gamma = state.gamma;
        frozen = state.boundaries;
      }
      const WeightSet ws = resolve_weights(g, cloud, cfg, r.seed);
      const PipelineResult result = run_pipeline(cloud, ws, cfg, frozen, bins_m, r.seed);
      int rc = with_output(bins_out, [&](std::ostream& out) {
        write_bin_histogram(out, result.bin_model, cloud.id, cloud.size(), bins_m);
      });
      if (rc == 0 && !bins_sample_out.empty())
        rc = with_output(bins_sample_out, [&](std::ostream& out) {
          write_sample_result(out, result.sample, cloud.size());
        });
      return rc;
    }

    if (*cmd_freq) {
      const Resolved r = resolve(g, seed_given);
      const PointCloud cloud = load_cloud(g, freq_cloud);
      Index k = freq_k > 0 ? freq_k : r.config.k;
      k = std::min(k, cloud.size());
      const IndexVector counts = neighbor_frequency(knn(cloud, k));
      return with_output(freq_out, [&](std::ostream& out) {
        write_frequency_table(out, counts, k);
      });
    }

    if (*cmd_bench) {
      const Resolved r = resolve(g, seed_given);
      std::vector<SyntheticShape> shapes;
      for (std::size_t i = 0; i < bench_shapes.size(); ++i) {
        ShapeParams params;
        params.count = bench_points;
        params.nx = params.ny = std::max<Index>(2, static_cast<Index>(
            std::llround(std::sqrt(static_cast<double>(bench_points)))));
        shapes.push_back(gen_shape(bench_shapes[i], params, derive_seed(r.seed, i)));
      }
      const BenchReport report = run_bench(shapes, bench_samplers, bench_m, r.seed, r.config);
      return with_output(bench_out, [&](std::ostream& out) {
        write_bench_report(out, report, bench_timing);
      });
    }

    if (*cmd_cal) {
      if (g.state_path.empty()) {
        std::cerr << "error: calibrate writes the state file named by --state\n";
        return 1;
      }
      const Resolved r = resolve(g, seed_given);
      std::vector<std::string> files;
      for (const auto& entry : fs::directory_iterator(cal_dir))
        if (entry.is_regular_file()) files.push_back(entry.path().string());
      std::sort(files.begin(), files.end());
      if (files.empty()) {
        std::cerr << "error: no cloud files in '" << cal_dir << "'\n";
        return 1;
      }
      CalibrationState state;
      state.gamma = r.config.gamma;
      state.bin_count = r.config.bin_count;
      std::vector<VectorX<double>> batch;
      for (std::size_t i = 0; i < files.size(); ++i) {
        const PointCloud cloud = load_cloud(g, files[i]);
        const WeightSet ws = resolve_weights(g, cloud, r.config, r.seed);
        batch.push_back(compute_scores(cloud, ws, r.config).normalized);
        if (static_cast<Index>(batch.size()) == cal_batch || i + 1 == files.size()) {
          calibrate_step(state, batch);
          batch.clear();
        }
      }
      save_state(g.state_path, state);
      return 0;
    }

    if (*cmd_gen) {
      const SyntheticShape shape = gen_shape(gen_id, gen_params, g.seed);
      int rc = with_output(gen_out, [&](std::ostream& out) { write_xyz(out, shape.cloud); });
      if (rc == 0 && !gen_mask_out.empty())
        rc = with_output(gen_mask_out, [&](std::ostream& out) {
          out << "# index edge\n";
          for (Index i = 0; i < shape.cloud.size(); ++i)
            out << i << ' ' << (shape.edge_mask[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
        });
      return rc;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
