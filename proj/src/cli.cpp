#include "falldet/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "falldet/alerts.hpp"
#include "falldet/detector.hpp"
#include "falldet/evaluation.hpp"
#include "falldet/pose.hpp"
#include "falldet/synth.hpp"

namespace falldet::cli {

namespace {

struct DetectArgs {
  std::string input;
  std::string config_path;
  std::optional<double> bed_top_y;
  std::vector<std::string> sinks;
};

struct EvalArgs {
  std::string manifest;
  std::string report;
  std::string config_path;
};

struct SweepArgs {
  std::string manifest;
  std::string grid;
  std::string config_path;
};

struct SimulateArgs {
  std::string kind;
  std::int64_t frames = 0;
  std::uint64_t seed = 0;
  double noise = 0.01;
  std::string out;
};

// defaults < config file < flags
DetectorConfig resolve_config(const std::string& path, std::optional<double> bed_top_y) {
  DetectorConfig config;
  if (!path.empty()) config = load_config_file(path);
  if (bed_top_y) config.bed_top_y = bed_top_y;
  validate(config);
  return config;
}

int cmd_detect(const DetectArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  ErrorLog log(err);
  DetectorConfig config;
  std::vector<std::unique_ptr<AlertSink>> sinks;
  try {
    config = resolve_config(a.config_path, a.bed_top_y);
    for (const auto& spec : a.sinks.empty() ? std::vector<std::string>{"stdout"} : a.sinks) {
      sinks.push_back(make_sink(spec, out, log));
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  std::ifstream file;
  std::istream* source = &in;
  if (a.input != "-") {
    file.open(a.input);
    if (!file) {
      err << "error: cannot open input '" << a.input << "'\n";
      return kData;
    }
    source = &file;
  }

  AlertDispatcher dispatcher(std::move(sinks), log);
  const std::string source_id = a.input == "-" ? "stdin" : a.input;
  const std::string digest = config_digest(config);
  Detector detector(config);
  FrameReader reader(*source);
  int status = kOk;
  try {
    while (auto frame = reader.next()) {
      const FrameVerdict v = detector.push(*frame);
      out << verdict_to_jsonl(v) << '\n';
      out.flush();
      if (v.alert_fired) dispatcher.dispatch({source_id, frame->frame_index, frame->timestamp_ms, digest});
    }
  } catch (const std::exception& e) {
    log.write(std::string("error: ") + e.what());
    status = kData;
  }
  dispatcher.flush();
  return status;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  DetectorConfig config;
  try {
    config = resolve_config(a.config_path, std::nullopt);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  try {
    const auto manifest = load_manifest(a.manifest);
    const ConfusionMatrix cm = evaluate(manifest, config);
    const MetricsReport metrics = metrics_from_counts(cm);

    std::ofstream report(a.report);
    if (!report) {
      err << "error: cannot write report '" << a.report << "'\n";
      return kData;
    }
    report << report_to_json(cm, metrics, config).dump(2) << '\n';
    if (!report) {
      err << "error: write to '" << a.report << "' failed\n";
      return kData;
    }
    out << format_report(cm, metrics);
  } catch (const StreamError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const ManifestError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  DetectorConfig base;
  std::vector<DetectorConfig> points;
  try {
    base = resolve_config(a.config_path, std::nullopt);
    std::ifstream in(a.grid);
    if (!in) throw ConfigError("cannot open grid file '" + a.grid + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("grid file is not valid JSON: " + std::string(e.what()));
    }
    points = expand_grid(grid_from_json(doc, base), base);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  try {
    const auto manifest = load_manifest(a.manifest);
    for (const SweepRow& row : sweep(manifest, points)) {
      out << report_to_json(row.counts, metrics_from_counts(row.counts), row.config).dump() << '\n';
    }
  } catch (const StreamError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const ManifestError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  synth::Scenario scenario;
  try {
    const auto kind = synth::kind_from_string(a.kind);
    if (!kind) throw synth::ScenarioError("unknown scenario kind '" + a.kind + "'");
    if (a.frames < 1 || a.frames > UINT32_MAX) throw synth::ScenarioError("--frames must be >= 1");
    scenario = {*kind, static_cast<std::uint32_t>(a.frames), a.seed, a.noise};
    synth::validate(scenario);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  const auto frames = synth::generate(scenario);
  if (a.out == "-") {
    for (const PoseFrame& f : frames) out << serialize_frame(f) << '\n';
    return kOk;
  }

  const std::filesystem::path stream_path(a.out);
  std::ofstream stream(stream_path);
  if (!stream) {
    err << "error: cannot write '" << a.out << "'\n";
    return kData;
  }
  for (const PoseFrame& f : frames) stream << serialize_frame(f) << '\n';

  std::filesystem::path manifest_path = stream_path;
  manifest_path.replace_extension(".manifest.json");
  nlohmann::ordered_json entry;
  entry["id"] = stream_path.stem().string();
  entry["label"] = std::string(to_string(synth::intended_label(scenario.kind)));
  entry["stream"] = stream_path.filename().string();
  entry["kind"] = std::string(synth::to_string(scenario.kind));
  entry["seed"] = scenario.seed;
  nlohmann::ordered_json manifest;
  manifest["videos"] = nlohmann::ordered_json::array({entry});
  std::ofstream sidecar(manifest_path);
  if (sidecar) sidecar << manifest.dump(2) << '\n';
  if (!stream || !sidecar) {
    err << "error: write to '" << a.out << "' or its manifest failed\n";
    return kData;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pose-keypoint fall detection engine", "falldet"};
  app.require_subcommand(1);

  DetectArgs detect;
  auto* detect_cmd = app.add_subcommand("detect", "Run the detector over a keypoint stream");
  detect_cmd->add_option("--input", detect.input, "JSONL keypoint stream, or - for stdin")->required();
  detect_cmd->add_option("--config", detect.config_path, "Detector config JSON");
  detect_cmd->add_option("--bed-top-y", detect.bed_top_y, "Normalized y of the top of the bed");
  detect_cmd->add_option("--sink", detect.sinks, "stdout | file:<path> | webhook:<url> (repeatable)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a labelled manifest");
  eval_cmd->add_option("--manifest", eval.manifest, "Manifest JSON")->required();
  eval_cmd->add_option("--report", eval.report, "Metrics report output path")->required();
  eval_cmd->add_option("--config", eval.config_path, "Detector config JSON");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a manifest over a threshold grid");
  sweep_cmd->add_option("--manifest", sweep_args.manifest, "Manifest JSON")->required();
  sweep_cmd->add_option("--grid", sweep_args.grid, "Grid JSON")->required();
  sweep_cmd->add_option("--config", sweep_args.config_path, "Base detector config JSON");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a synthetic keypoint stream");
  sim_cmd->add_option("--kind", sim.kind, "Scenario kind, e.g. fall_side")->required();
  sim_cmd->add_option("--frames", sim.frames, "Number of frames (>= 1)")->required();
  sim_cmd->add_option("--seed", sim.seed, "Generator seed")->required();
  sim_cmd->add_option("--noise", sim.noise, "Per-coordinate noise amplitude in [0, 0.05]");
  sim_cmd->add_option("--out", sim.out, "Output JSONL path, or - for stdout")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  if (*detect_cmd) return cmd_detect(detect, in, out, err);
  if (*eval_cmd) return cmd_eval(eval, out, err);
  if (*sweep_cmd) return cmd_sweep(sweep_args, out, err);
  return cmd_simulate(sim, out, err);
}

}  // namespace falldet::cli
