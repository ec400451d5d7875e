#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>

#include <nlohmann/json.hpp>

#include "momap/compress.hpp"
#include "momap/dsl.hpp"
#include "momap/error.hpp"
#include "momap/infill.hpp"
#include "momap/io.hpp"
#include "momap/metrics.hpp"
#include "momap/render.hpp"
#include "momap/synth.hpp"

namespace momap::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": malformed JSON: " + e.what());
  }
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = parse_json_text(read_text_file(path), path);
  if (!j.is_object()) throw ParseError(path + ": config must be a JSON object");
  return j;
}

// Flag, then MOMAP_THREADS, then the config file, then 1.
unsigned resolve_thread_count(const std::optional<unsigned>& flag, const json& config) {
  if (flag) return *flag;
  if (const char* env = std::getenv("MOMAP_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0') throw ParseError("MOMAP_THREADS must be a non-negative integer");
    return static_cast<unsigned>(v);
  }
  if (auto it = config.find("threads"); it != config.end()) {
    if (!it->is_number_unsigned()) throw ParseError("/threads: expected a non-negative integer");
    return it->get<unsigned>();
  }
  return 1;
}

template <typename T>
void override_key(json& config, const char* key, const std::optional<T>& flag) {
  if (flag) config[key] = *flag;
}

// Thread counts are left out of summaries so they stay identical across runs
// with different worker counts.
json without_threads(json j) {
  j.erase("threads");
  return j;
}

SegMap seg_or_background(const MoMapBundle& b) {
  return b.seg ? *b.seg : SegMap(b.momap.height(), b.momap.width());
}

const SegMap& require_seg(const MoMapBundle& b, const std::string& path) {
  if (!b.seg) throw ValidationError(path + " carries no segmentation");
  return *b.seg;
}

struct Io {
  std::ostream& out;
  std::ostream& err;
  void summary(const json& j) const { out << j.dump(2) << '\n'; }
};

struct Threads {
  std::optional<unsigned> value;
  void attach(CLI::App* app) {
    app->add_option("--threads", value, "Worker threads (0 = all cores; env MOMAP_THREADS)");
  }
};

// gen -----------------------------------------------------------------------

struct GenArgs {
  std::string spec;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  Threads threads;
};

void cmd_gen(const GenArgs& a, const Io& io) {
  const std::string path = a.spec.empty() ? a.config : a.spec;
  if (path.empty()) throw ParseError("gen needs a scene spec (positional or --config)");
  SceneSpec spec = scene_from_json(parse_json_text(read_text_file(path), path));
  if (a.seed) spec.seed = *a.seed;
  const auto scene = generate(spec);
  const auto bytes = write_momap(a.out, scene.momap, scene.seg, scene.camera);
  const auto moving = moving_mask(scene.momap, MetricConfig{});
  const auto n_moving = std::count(moving.begin(), moving.end(), std::uint8_t{1});
  io.summary({{"command", "gen"},
              {"out", a.out},
              {"bytes", bytes},
              {"height", spec.height},
              {"width", spec.width},
              {"frames", spec.frames},
              {"time_step", spec.time_step},
              {"bodies", spec.bodies.size()},
              {"foreground_fraction",
               static_cast<double>(n_moving) / static_cast<double>(scene.momap.pixels())},
              {"seed", spec.seed}});
  io.err << "wrote " << a.out << " (" << bytes << " bytes)\n";
}

// infill --------------------------------------------------------------------

struct InfillArgs {
  std::string input;
  std::string out;
  std::string config;
  std::optional<double> w_accel, w_arap, grad_tol, step, armijo_c, fg_threshold;
  std::optional<std::size_t> knn, max_iters;
  std::optional<std::string> init;
  Threads threads;
};

void cmd_infill(const InfillArgs& a, const Io& io) {
  json cj = load_config(a.config);
  override_key(cj, "w_accel", a.w_accel);
  override_key(cj, "w_arap", a.w_arap);
  override_key(cj, "grad_tol", a.grad_tol);
  override_key(cj, "step", a.step);
  override_key(cj, "armijo_c", a.armijo_c);
  override_key(cj, "fg_threshold", a.fg_threshold);
  override_key(cj, "knn", a.knn);
  override_key(cj, "max_iters", a.max_iters);
  override_key(cj, "init", a.init);
  const unsigned threads = resolve_thread_count(a.threads.value, cj);
  cj.erase("threads");
  InfillConfig cfg = infill_config_from_json(cj);
  cfg.threads = threads;
  validate(cfg);

  const auto bundle = read_momap(a.input);
  const auto res = infill(bundle.momap, cfg);
  const auto bytes = write_momap(a.out, res.momap, bundle.seg, bundle.camera);
  io.summary({{"command", "infill"},
              {"out", a.out},
              {"bytes", bytes},
              {"energy", res.energy},
              {"iterations", res.iterations},
              {"converged", res.converged},
              {"free_entries", res.free_entries},
              {"config", without_threads(to_json(cfg))}});
  io.err << "infill: " << res.free_entries << " free entries, " << res.iterations
         << " iterations, energy " << res.energy << '\n';
}

// compress / decompress -----------------------------------------------------

struct CompressArgs {
  std::string input;
  std::string out;
  std::string config;
  std::optional<std::size_t> channels;
  Threads threads;
};

void cmd_compress(const CompressArgs& a, const Io& io) {
  json cj = load_config(a.config);
  override_key(cj, "channels", a.channels);
  for (auto it = cj.begin(); it != cj.end(); ++it) {
    if (it.key() != "channels" && it.key() != "threads") {
      throw ParseError("/" + it.key() + ": unknown field");
    }
  }
  std::size_t channels = kDefaultLatentChannels;
  if (auto it = cj.find("channels"); it != cj.end()) {
    if (!it->is_number_unsigned()) throw ParseError("/channels: expected a positive integer");
    channels = it->get<std::size_t>();
  }
  const auto bundle = read_momap(a.input);
  const auto c = compress(bundle.momap, channels);
  const auto bytes = write_compressed(a.out, c);
  const double rmse = reconstruction_rmse(bundle.momap, c);
  const auto stats = compression_stats(c);
  io.summary({{"command", "compress"},
              {"out", a.out},
              {"bytes", bytes},
              {"channels", channels},
              {"rmse", rmse},
              {"raw_values", stats.raw_values},
              {"coefficient_values", stats.coefficient_values},
              {"basis_values", stats.basis_values},
              {"coefficient_ratio", stats.coefficient_ratio},
              {"total_ratio", stats.total_ratio}});
  io.err << "compress: " << channels << " channels, rmse " << rmse << " m, ratio "
         << stats.coefficient_ratio << '\n';
}

struct DecompressArgs {
  std::string input;
  std::string out;
  Threads threads;
};

void cmd_decompress(const DecompressArgs& a, const Io& io) {
  const auto c = read_compressed(a.input);
  const auto m = decompress(c, c.frames);
  const auto bytes = write_momap(a.out, m);
  io.summary({{"command", "decompress"},
              {"out", a.out},
              {"bytes", bytes},
              {"height", m.height()},
              {"width", m.width()},
              {"frames", m.frames()},
              {"channels", c.channels}});
}

// render --------------------------------------------------------------------

struct RenderArgs {
  std::string input;
  std::string out;
  std::string config;
  std::optional<double> splat_radius;
  std::optional<std::size_t> out_height, out_width;
  Threads threads;
};

void cmd_render(const RenderArgs& a, const Io& io) {
  json cj = load_config(a.config);
  override_key(cj, "splat_radius", a.splat_radius);
  override_key(cj, "out_height", a.out_height);
  override_key(cj, "out_width", a.out_width);
  RenderOptions opts;
  opts.threads = resolve_thread_count(a.threads.value, cj);
  for (auto it = cj.begin(); it != cj.end(); ++it) {
    const auto& k = it.key();
    if (k == "splat_radius") {
      if (!it->is_number()) throw ParseError("/splat_radius: expected a number");
      opts.splat_radius = it->get<double>();
    } else if (k == "out_height" || k == "out_width") {
      if (!it->is_number_unsigned()) throw ParseError("/" + k + ": expected an integer");
      (k == "out_height" ? opts.out_height : opts.out_width) = it->get<std::size_t>();
    } else if (k != "threads") {
      throw ParseError("/" + k + ": unknown field");
    }
  }
  const auto bundle = read_momap(a.input);
  if (!bundle.camera) throw ValidationError(a.input + " carries no camera");
  const auto frames = render(bundle.momap, seg_or_background(bundle), *bundle.camera, opts);
  write_frames(a.out, frames);
  io.summary({{"command", "render"},
              {"out", a.out},
              {"frames", frames.size()},
              {"splat_radius", opts.splat_radius},
              {"out_height", frames.empty() ? 0 : frames.front().height},
              {"out_width", frames.empty() ? 0 : frames.front().width},
              {"coverage", coverage(frames)}});
}

// dsl -----------------------------------------------------------------------

struct DslEmitArgs {
  std::string input;
  std::string out;
  std::string config;
  std::optional<double> eps;
};

void cmd_dsl_emit(const DslEmitArgs& a, const Io& io) {
  json cj = load_config(a.config);
  override_key(cj, "eps", a.eps);
  double eps = MetricConfig{}.quantize_eps;
  for (auto it = cj.begin(); it != cj.end(); ++it) {
    if (it.key() == "eps") {
      if (!it->is_number()) throw ParseError("/eps: expected a number");
      eps = it->get<double>();
    } else {
      throw ParseError("/" + it.key() + ": unknown field");
    }
  }
  const auto bundle = read_momap(a.input);
  const auto program = serialize_dsl(emit_dsl(bundle.momap, require_seg(bundle, a.input), eps));
  if (!a.out.empty()) write_text_file(a.out, program.dump(2) + "\n");
  io.summary({{"command", "dsl emit"}, {"eps", eps}, {"program", program}});
}

struct DslGroundArgs {
  std::string program;
  std::string seg_source;
  std::string out;
};

void cmd_dsl_ground(const DslGroundArgs& a, const Io& io) {
  const auto parsed = parse_dsl(read_text_file(a.program));
  const auto bundle = read_momap(a.seg_source);
  const auto& seg = require_seg(bundle, a.seg_source);
  const auto grounded = ground_dsl(parsed.dsl, seg);
  if (!a.out.empty()) {
    std::vector<std::byte> bytes(grounded.size());
    std::transform(grounded.begin(), grounded.end(), bytes.begin(),
                   [](std::int8_t v) { return static_cast<std::byte>(v); });
    write_file_bytes(a.out, bytes);
  }
  MotionDsl readback{parsed.dsl.horizon, readback_flags(grounded, seg)};
  json flags = serialize_dsl(readback)["patches"];
  for (auto& p : flags) p.erase("magnitude");
  io.summary({{"command", "dsl ground"},
              {"height", seg.height()},
              {"width", seg.width()},
              {"patches", flags}});
}

struct DslCheckArgs {
  std::string program;
  std::string seg_source;
  bool lenient = false;
};

void cmd_dsl_check(const DslCheckArgs& a, const Io& io) {
  DslParseOptions opts;
  opts.strict = !a.lenient;
  const auto parsed = parse_dsl(read_text_file(a.program), opts);
  if (!a.seg_source.empty()) {
    const auto bundle = read_momap(a.seg_source);
    ground_dsl(parsed.dsl, require_seg(bundle, a.seg_source));
  }
  for (const auto& w : parsed.warnings) io.err << "warning: " << w << '\n';
  io.summary({{"command", "dsl check"},
              {"valid", true},
              {"horizon", parsed.dsl.horizon},
              {"patches", parsed.dsl.patches.size()},
              {"warnings", parsed.warnings}});
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
  std::string gt;
  std::vector<std::string> candidates;
  std::string config;
  std::optional<double> fg_threshold, quantize_eps;
  std::optional<std::size_t> knn;
  std::optional<std::vector<std::size_t>> dt_values;
  Threads threads;
};

void cmd_eval(const EvalArgs& a, const Io& io) {
  json cj = load_config(a.config);
  override_key(cj, "fg_threshold", a.fg_threshold);
  override_key(cj, "quantize_eps", a.quantize_eps);
  override_key(cj, "knn", a.knn);
  override_key(cj, "dt_values", a.dt_values);
  const unsigned threads = resolve_thread_count(a.threads.value, cj);
  cj.erase("threads");
  MetricConfig cfg = metric_config_from_json(cj);
  cfg.threads = threads;
  validate(cfg);

  const auto gt = read_momap(a.gt);
  std::vector<MoMap> candidates;
  candidates.reserve(a.candidates.size());
  for (const auto& path : a.candidates) {
    auto b = read_momap(path);
    if (b.momap.height() != gt.momap.height() || b.momap.width() != gt.momap.width() ||
        b.momap.frames() != gt.momap.frames()) {
      throw ShapeError(path + " does not match the dimensions of " + a.gt);
    }
    candidates.push_back(std::move(b.momap));
  }
  if (candidates.size() != cfg.n_samples) {
    io.err << "note: " << candidates.size() << " candidates, protocol expects "
           << cfg.n_samples << '\n';
  }
  const auto report = evaluate_best_of_n(gt.momap, candidates, gt.seg, cfg);
  json out = {{"command", "eval"}, {"config", to_json(cfg)}};
  out.update(to_json(report));
  io.summary(out);
  io.err << format_table(report);
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
    case ErrorKind::kParse:
    case ErrorKind::kFormat:
      return kExitIo;
    case ErrorKind::kShape:
    case ErrorKind::kValidation:
    case ErrorKind::kNumerical:
      return kExitInput;
  }
  return kExitIo;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"MoMap dense 3D trajectory toolkit", "momap"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "momap 0.1.0");
  const Io io{out, err};
  std::function<void()> action;

  GenArgs gen;
  auto* s_gen = app.add_subcommand("gen", "Generate a synthetic rigid-body scene");
  s_gen->add_option("spec", gen.spec, "Scene spec JSON");
  s_gen->add_option("--config", gen.config, "Scene spec JSON (alternative to the positional)");
  s_gen->add_option("--out", gen.out, "Output .momap")->required();
  s_gen->add_option("--seed", gen.seed, "Override the scene seed");
  gen.threads.attach(s_gen);
  s_gen->callback([&] { action = [&] { cmd_gen(gen, io); }; });

  InfillArgs inf;
  auto* s_inf = app.add_subcommand("infill", "Fill occluded trajectory entries");
  s_inf->add_option("input", inf.input, "Input .momap")->required();
  s_inf->add_option("--out", inf.out, "Output .momap")->required();
  s_inf->add_option("--config", inf.config, "InfillConfig JSON");
  s_inf->add_option("--w-accel", inf.w_accel);
  s_inf->add_option("--w-arap", inf.w_arap);
  s_inf->add_option("--knn", inf.knn);
  s_inf->add_option("--max-iters", inf.max_iters);
  s_inf->add_option("--grad-tol", inf.grad_tol);
  s_inf->add_option("--step", inf.step);
  s_inf->add_option("--armijo-c", inf.armijo_c);
  s_inf->add_option("--fg-threshold", inf.fg_threshold);
  s_inf->add_option("--init", inf.init, "interpolate or hold");
  inf.threads.attach(s_inf);
  s_inf->callback([&] { action = [&] { cmd_infill(inf, io); }; });

  CompressArgs cmp;
  auto* s_cmp = app.add_subcommand("compress", "Low-rank temporal compression to .momapz");
  s_cmp->add_option("input", cmp.input, "Input .momap")->required();
  s_cmp->add_option("--out", cmp.out, "Output .momapz")->required();
  s_cmp->add_option("--config", cmp.config, "JSON with \"channels\"");
  s_cmp->add_option("--channels", cmp.channels, "Latent channels (default 32)");
  cmp.threads.attach(s_cmp);
  s_cmp->callback([&] { action = [&] { cmd_compress(cmp, io); }; });

  DecompressArgs dec;
  auto* s_dec = app.add_subcommand("decompress", "Expand a .momapz back to .momap");
  s_dec->add_option("input", dec.input, "Input .momapz")->required();
  s_dec->add_option("--out", dec.out, "Output .momap")->required();
  dec.threads.attach(s_dec);
  s_dec->callback([&] { action = [&] { cmd_decompress(dec, io); }; });

  RenderArgs ren;
  auto* s_ren = app.add_subcommand("render", "Splat every frame into partial images");
  s_ren->add_option("input", ren.input, "Input .momap with camera")->required();
  s_ren->add_option("--out", ren.out, "Output directory")->required();
  s_ren->add_option("--config", ren.config, "JSON with splat_radius, out_height, out_width");
  s_ren->add_option("--splat-radius", ren.splat_radius);
  s_ren->add_option("--height", ren.out_height);
  s_ren->add_option("--width", ren.out_width);
  ren.threads.attach(s_ren);
  s_ren->callback([&] { action = [&] { cmd_render(ren, io); }; });

  auto* s_dsl = app.add_subcommand("dsl", "Per-patch motion programs");
  s_dsl->require_subcommand(1);
  DslEmitArgs emit;
  auto* s_emit = s_dsl->add_subcommand("emit", "Derive a program from a segmented .momap");
  s_emit->add_option("input", emit.input, "Input .momap with segmentation")->required();
  s_emit->add_option("--out", emit.out, "Write the program JSON here");
  s_emit->add_option("--config", emit.config, "JSON with \"eps\"");
  s_emit->add_option("--eps", emit.eps, "Stay band half-width in meters");
  s_emit->callback([&] { action = [&] { cmd_dsl_emit(emit, io); }; });
  DslGroundArgs ground;
  auto* s_ground = s_dsl->add_subcommand("ground", "Paint a program onto its segmentation");
  s_ground->add_option("program", ground.program, "Program JSON")->required();
  s_ground->add_option("seg", ground.seg_source, ".momap carrying the segmentation")
      ->required();
  s_ground->add_option("--out", ground.out, "Raw int8 H*W*3 label image");
  s_ground->callback([&] { action = [&] { cmd_dsl_ground(ground, io); }; });
  DslCheckArgs check;
  auto* s_check = s_dsl->add_subcommand("check", "Validate a program");
  s_check->add_option("program", check.program, "Program JSON")->required();
  s_check->add_option("--seg", check.seg_source, "Also check ids against this .momap");
  s_check->add_flag("--lenient", check.lenient, "Unknown fields become warnings");
  s_check->callback([&] { action = [&] { cmd_dsl_check(check, io); }; });

  EvalArgs ev;
  auto* s_ev = app.add_subcommand("eval", "Best-of-N metrics against a ground truth");
  s_ev->add_option("gt", ev.gt, "Ground-truth .momap (segmentation used for patches)")
      ->required();
  s_ev->add_option("candidates", ev.candidates, "Candidate .momap files")->required();
  s_ev->add_option("--config", ev.config, "MetricConfig JSON");
  s_ev->add_option("--fg-threshold", ev.fg_threshold);
  s_ev->add_option("--quantize-eps", ev.quantize_eps);
  s_ev->add_option("--knn", ev.knn);
  s_ev->add_option("--dt", ev.dt_values, "Frame offsets for quantize_acc");
  ev.threads.attach(s_ev);
  s_ev->callback([&] { action = [&] { cmd_eval(ev, io); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitIo;
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace momap::cli
