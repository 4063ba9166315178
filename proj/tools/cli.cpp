#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ndp/config.hpp"
#include "ndp/io.hpp"
#include "ndp/metrics.hpp"
#include "ndp/normalize.hpp"
#include "ndp/pyramid.hpp"
#include "ndp/synth.hpp"

namespace ndp::cli {

namespace fs = std::filesystem;

namespace {

struct RegisterArgs {
  std::string source;
  std::string target;
  std::string corr;
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::string report;
  std::string dump_levels;
  std::string gt;
  std::optional<std::uint64_t> seed;
  std::string manifest;
  int jobs = 1;
};

struct EvalArgs {
  std::string warped;
  std::string source;
  std::string gt;
  std::string report;
};

struct SynthArgs {
  std::string shape = "plane";
  std::string deform;
  std::size_t n = 2000;
  double overlap = 1.0;
  std::string noise;
  std::string out_dir;
  std::uint64_t seed = 0;
};

struct TransferArgs {
  std::string source;
  std::string target;
  std::string query;
  std::string out;
  std::string config;
  std::vector<std::string> overrides;
  std::string report;
  std::optional<std::uint64_t> seed;
};

PyramidConfig build_config(const std::string& config_path, const std::vector<std::string>& overrides,
                           const std::optional<std::uint64_t>& seed) {
  PyramidConfig cfg;
  if (!config_path.empty()) cfg = load_config_file(config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed) cfg.rng_seed = *seed;
  return validate_config(cfg);
}

std::vector<Vec3> read_gt(const std::string& path, std::size_t expected) {
  auto gt = io::read_warp(path);
  if (gt.size() != expected) {
    throw InvalidArgument("ground truth '" + path + "' has " + std::to_string(gt.size()) + " rows, source has " +
                          std::to_string(expected) + " points");
  }
  return gt;
}

io::RunReport make_report(const RegistrationResult& result, const PyramidConfig& cfg, const PointCloud& source,
                          const PointCloud& target, std::size_t matches, const std::vector<Vec3>* gt) {
  io::RunReport report;
  report.config = cfg;
  report.total_iterations = result.total_iterations;
  report.wall_seconds = result.wall_seconds;
  report.source_points = source.size();
  report.target_points = target.size();
  report.correspondences = matches;
  for (const auto& trace : result.levels) {
    io::LevelSummary s;
    s.level = trace.level;
    s.iterations = trace.iterations;
    s.stop_reason = trace.stop_reason;
    s.final_cost = trace.final_cost.e_total;
    s.mean_alpha = trace.alpha.mean;
    if (gt != nullptr) s.metrics = compute_metrics(displacement(source.points, trace.warped.points), *gt);
    report.levels.push_back(s);
  }
  if (gt != nullptr) report.metrics = compute_metrics(displacement(source.points, result.warped.points), *gt);
  return report;
}

std::string summary_line(const io::RunReport& report) {
  std::ostringstream os;
  os << "levels=" << report.levels.size() << " iterations=" << report.total_iterations;
  if (!report.levels.empty()) {
    os << " stop=" << to_string(report.levels.back().stop_reason) << " cost=" << report.levels.back().final_cost;
  }
  os << " seconds=" << report.wall_seconds;
  if (report.metrics) {
    os << " epe=" << report.metrics->epe << " acc_s=" << report.metrics->acc_s << " acc_r=" << report.metrics->acc_r
       << " outlier=" << report.metrics->outlier;
  }
  return os.str();
}

struct PairJob {
  std::string source;
  std::string target;
  std::string out;
  std::string report;
  std::string corr;
  std::string gt;
  std::string dump_levels;
};

std::string register_one(const PairJob& job, const PyramidConfig& cfg) {
  const PointCloud source = io::read_point_cloud(job.source);
  const PointCloud target = io::read_point_cloud(job.target);
  std::optional<CorrespondenceSet> matches;
  if (!job.corr.empty()) matches = io::read_correspondences(job.corr, cfg.corr_conf_threshold);
  std::optional<std::vector<Vec3>> gt;
  if (!job.gt.empty()) gt = read_gt(job.gt, source.size());

  const auto result = register_clouds(source, target, cfg, matches ? &*matches : nullptr);

  if (!job.out.empty()) io::write_point_cloud(result.warped, job.out);
  if (!job.dump_levels.empty()) {
    fs::create_directories(job.dump_levels);
    for (const auto& trace : result.levels) {
      io::write_point_cloud(trace.warped, fs::path(job.dump_levels) / ("level_" + std::to_string(trace.level) + ".ply"));
    }
  }
  const auto report = make_report(result, cfg, source, target, matches ? matches->size() : 0, gt ? &*gt : nullptr);
  if (!job.report.empty()) io::write_text(job.report, io::report_to_json(report));
  return summary_line(report);
}

std::vector<PairJob> read_manifest(const std::string& path) {
  std::istringstream in(io::read_text(path));
  std::vector<PairJob> jobs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 3 || tok.size() > 4) {
      throw IoError(path + ":" + std::to_string(lineno) + ": expected 'source target out [report]'");
    }
    PairJob job;
    job.source = tok[0];
    job.target = tok[1];
    job.out = tok[2];
    if (tok.size() == 4) job.report = tok[3];
    jobs.push_back(std::move(job));
  }
  if (jobs.empty()) throw IoError(path + ": manifest lists no pairs");
  return jobs;
}

int exit_code_for(const std::exception& e) {
  return dynamic_cast<const NumericalError*>(&e) != nullptr ? kNumerical : kUsage;
}

int run_register(const RegisterArgs& a, std::ostream& out, std::ostream& err) {
  const PyramidConfig cfg = build_config(a.config, a.overrides, a.seed);
  if (a.manifest.empty()) {
    if (a.source.empty() || a.target.empty()) throw CLI::ValidationError("register needs --source and --target, or --manifest");
    PairJob job{a.source, a.target, a.out, a.report, a.corr, a.gt, a.dump_levels};
    out << register_one(job, cfg) << '\n';
    return kOk;
  }
  if (!a.source.empty() || !a.target.empty()) {
    throw CLI::ValidationError("--manifest cannot be combined with --source/--target");
  }
  const auto jobs = read_manifest(a.manifest);
  std::vector<std::string> lines(jobs.size());
  std::vector<int> codes(jobs.size(), kOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        lines[i] = register_one(jobs[i], cfg);
      } catch (const std::exception& e) {
        lines[i] = std::string("error: ") + e.what();
        codes[i] = exit_code_for(e);
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::clamp(a.jobs, 1, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kOk;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    (codes[i] == kOk ? out : err) << jobs[i].source << " -> " << jobs[i].target << ": " << lines[i] << '\n';
    code = std::max(code, codes[i]);
  }
  return code;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const PointCloud warped = io::read_point_cloud(a.warped);
  const PointCloud source = io::read_point_cloud(a.source);
  if (warped.size() != source.size()) {
    throw InvalidArgument("warped cloud has " + std::to_string(warped.size()) + " points, source has " +
                          std::to_string(source.size()));
  }
  const auto gt = read_gt(a.gt, source.size());
  const FlowMetrics m = compute_metrics(displacement(source.points, warped.points), gt);
  out << "epe=" << m.epe << " acc_s=" << m.acc_s << " acc_r=" << m.acc_r << " outlier=" << m.outlier
      << " points=" << m.count << '\n';
  if (!a.report.empty()) io::write_text(a.report, io::eval_report_to_json({m.count, m}));
  return kOk;
}

std::pair<double, double> parse_noise(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw InvalidArgument("--noise expects ratio,radius");
  try {
    std::size_t u1 = 0;
    std::size_t u2 = 0;
    const std::string r = text.substr(0, comma);
    const std::string d = text.substr(comma + 1);
    const double ratio = std::stod(r, &u1);
    const double radius = std::stod(d, &u2);
    if (u1 != r.size() || u2 != d.size()) throw std::invalid_argument(text);
    if (ratio < 0.0 || ratio > 1.0 || radius < 0.0) throw InvalidArgument("--noise: ratio must be in [0, 1], radius >= 0");
    return {ratio, radius};
  } catch (const InvalidArgument&) {
    throw;
  } catch (const std::exception&) {
    throw InvalidArgument("--noise expects two numbers, got '" + text + "'");
  }
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  const synth::Shape shape = synth::parse_shape(a.shape);
  const synth::DeformationSpec spec = synth::parse_deformation(a.deform);
  if (a.n == 0) throw InvalidArgument("--n must be positive");
  if (!(a.overlap > 0.0 && a.overlap <= 1.0)) throw InvalidArgument("--overlap must be in (0, 1]");
  std::optional<std::pair<double, double>> noise;
  if (!a.noise.empty()) noise = parse_noise(a.noise);

  synth::Instance inst = synth::make_instance(shape, spec, a.n, a.seed);
  PointCloud target = inst.target;
  if (a.overlap < 1.0) target = synth::make_partial(target, a.overlap, a.seed ^ 0x5bd1e995ull).cloud;
  if (noise && noise->first > 0.0) {
    const double radius = noise->second * bbox_diagonal(inst.source.points);
    target = synth::add_noise(target, noise->first, radius, a.seed ^ 0x27d4eb2full).cloud;
  }

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  io::write_point_cloud(inst.source, dir / "source.ply");
  io::write_point_cloud(target, dir / "target.ply");
  io::write_warp(inst.ground_truth, dir / "gt.warp");
  std::ostringstream echo;
  echo << "shape = " << synth::to_string(shape) << '\n'
       << "deform = " << synth::format_deformation(spec) << '\n'
       << "n = " << a.n << '\n'
       << "overlap = " << a.overlap << '\n'
       << "noise = " << (a.noise.empty() ? "0,0" : a.noise) << '\n'
       << "seed = " << a.seed << '\n'
       << "target_points = " << target.size() << '\n';
  io::write_text(dir / "spec.txt", echo.str());
  out << "wrote " << (dir / "source.ply").string() << ", " << (dir / "target.ply").string() << ", "
      << (dir / "gt.warp").string() << " (" << inst.source.size() << " source, " << target.size()
      << " target points)\n";
  return kOk;
}

int run_transfer(const TransferArgs& a, std::ostream& out) {
  PyramidConfig cfg = build_config(a.config, a.overrides, a.seed);
  cfg.warp_type = WarpFieldType::Similarity;
  cfg.m = 9;
  cfg.k0 = -8;
  validate_config(cfg);

  const PointCloud source = io::read_point_cloud(a.source);
  const PointCloud target = io::read_point_cloud(a.target);
  const auto result = register_clouds(source, target, cfg);

  PointCloud moved;
  if (a.query.empty()) {
    moved = result.warped;
  } else {
    const PointCloud query = io::read_point_cloud(a.query);
    moved.points = result.pyramid.query(query.points);
    moved.attributes = query.attributes;
  }
  io::write_point_cloud(moved, a.out);
  const auto report = make_report(result, cfg, source, target, 0, nullptr);
  if (!a.report.empty()) io::write_text(a.report, io::report_to_json(report));
  out << summary_line(report) << " query_points=" << moved.size() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-rigid point cloud registration with a neural deformation pyramid", "ndp"};
  app.require_subcommand(1, 1);

  RegisterArgs reg;
  auto* r = app.add_subcommand("register", "register a source cloud onto a target cloud");
  r->add_option("--source", reg.source, "source point cloud (.ply or .xyz)");
  r->add_option("--target", reg.target, "target point cloud (.ply or .xyz)");
  r->add_option("--corr", reg.corr, "correspondence file, lines 'u v [confidence]'");
  r->add_option("--config", reg.config, "config file of 'key = value' lines");
  r->add_option("--set", reg.overrides, "override one config key, key=value (repeatable)");
  r->add_option("--out", reg.out, "warped source output (.ply)");
  r->add_option("--report", reg.report, "JSON run report output");
  r->add_option("--dump-levels", reg.dump_levels, "directory for the warped source after every level");
  r->add_option("--gt", reg.gt, "ground-truth warp; adds metrics to the report");
  r->add_option("--seed", reg.seed, "random seed (overrides rng_seed)");
  r->add_option("--manifest", reg.manifest, "file of 'source target out [report]' lines");
  r->add_option("--jobs", reg.jobs, "parallel registrations for --manifest")->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score a warped cloud against a ground-truth warp");
  e->add_option("--warped", ev.warped, "warped source (.ply or .xyz)")->required();
  e->add_option("--source", ev.source, "original source")->required();
  e->add_option("--gt", ev.gt, "ground-truth warp, one 'dx dy dz' row per source point")->required();
  e->add_option("--report", ev.report, "JSON metrics output");

  SynthArgs sy;
  auto* s = app.add_subcommand("synth", "generate a synthetic pair with ground truth");
  s->add_option("--shape", sy.shape, "plane | cylinder | sphere | torus")->required();
  s->add_option("--deform", sy.deform, "deformation spec, e.g. twist:axis=z,rate=0.5")->required();
  s->add_option("--n", sy.n, "source point count");
  s->add_option("--overlap", sy.overlap, "fraction of the deformed cloud kept as target");
  s->add_option("--noise", sy.noise, "ratio,radius: perturb this fraction of target points within radius x bbox diagonal");
  s->add_option("--out-dir", sy.out_dir, "output directory")->required();
  s->add_option("--seed", sy.seed, "random seed")->required();

  TransferArgs tr;
  auto* t = app.add_subcommand("transfer", "Sim(3) shape transfer, then re-query the frozen pyramid");
  t->add_option("--source", tr.source, "source shape")->required();
  t->add_option("--target", tr.target, "target shape")->required();
  t->add_option("--query", tr.query, "points to move (defaults to the source)");
  t->add_option("--out", tr.out, "moved query points (.ply)")->required();
  t->add_option("--config", tr.config, "config file of 'key = value' lines");
  t->add_option("--set", tr.overrides, "override one config key, key=value (repeatable)");
  t->add_option("--report", tr.report, "JSON run report output");
  t->add_option("--seed", tr.seed, "random seed (overrides rng_seed)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& ex) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  }

  try {
    if (r->parsed()) return run_register(reg, out, err);
    if (e->parsed()) return run_eval(ev, out);
    if (s->parsed()) return run_synth(sy, out);
    if (t->parsed()) return run_transfer(tr, out);
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code_for(ex);
  }
  return kUsage;
}

}  // namespace ndp::cli
