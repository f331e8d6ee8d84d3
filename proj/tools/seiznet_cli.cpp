// seiznet: preprocessing, training, inference, evaluation and experiment
// harnesses for multichannel neonatal EEG seizure detection.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seiznet/containers.hpp"
#include "seiznet/equivalence.hpp"
#include "seiznet/experiments.hpp"
#include "seiznet/inference.hpp"
#include "seiznet/metrics.hpp"
#include "seiznet/model.hpp"
#include "seiznet/rng.hpp"
#include "seiznet/signal.hpp"
#include "seiznet/synth.hpp"
#include "seiznet/training.hpp"
#include "seiznet/weights_io.hpp"

namespace fs = std::filesystem;
using namespace seiznet;

namespace {

std::vector<fs::path> recording_dirs(const fs::path& in) {
  if (is_recording_dir(in)) return {in};
  auto dirs = list_recordings(in);
  if (dirs.empty()) throw std::invalid_argument("no recordings under " + in.string());
  return dirs;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& f : split_csv(s)) {
    if (!f.empty()) out.push_back(f);
  }
  return out;
}

// "nano" .. "xl", or "DxW" for a custom depth and width.
ModelConfig parse_model_token(const std::string& tok) {
  const auto x = tok.find('x');
  if (x != std::string::npos && x > 0 && std::isdigit(static_cast<unsigned char>(tok[0]))) {
    return custom_config(std::stoi(tok.substr(0, x)), std::stoi(tok.substr(x + 1)));
  }
  return variant(tok);
}

ModelConfig parse_model_args(const std::vector<std::string>& args) {
  if (args.size() == 1) return parse_model_token(args[0]);
  if (args.size() == 3 && args[0] == "custom") return custom_config(std::stoi(args[1]), std::stoi(args[2]));
  throw std::invalid_argument("--model takes a variant name or 'custom D W'");
}

// Durations declared in an annotation or events file's metadata.
std::map<std::string, double> declared_durations(const EventTable& t) {
  std::map<std::string, double> out;
  for (const auto& [key, value] : t.meta) {
    if (key.rfind("duration_s.", 0) == 0) out[key.substr(11)] = parse_number(value, key);
  }
  if (out.empty() && t.meta.count("duration_s")) {
    const auto id = t.meta.count("recording") ? t.meta.at("recording") : std::string();
    out[id] = parse_number(t.meta.at("duration_s"), "duration_s");
  }
  return out;
}

// Global 1 s reference mask per trace, unanimous over `annotators` if given.
std::vector<Mask> reference_masks(const EventTable& ref, const std::vector<PredictionTrace>& traces,
                                  const std::vector<std::string>& annotators) {
  if (!ref.has_recording_column && traces.size() > 1) {
    throw std::invalid_argument("reference has no recording column but predictions cover several recordings");
  }
  if (annotators.empty() && ref.annotators().size() > 1) {
    throw std::invalid_argument("reference has several annotators; choose with --annotators");
  }
  std::vector<Mask> out;
  for (const auto& t : traces) {
    const EventTable rows = ref.has_recording_column ? ref.for_recording(t.recording) : ref;
    if (annotators.empty()) {
      out.push_back(events_to_mask(global_events(rows), t.duration));
      continue;
    }
    std::vector<Mask> masks;
    for (const auto& a : annotators) {
      const EventTable mine = rows.for_annotator(a);
      if (mine.rows.empty() && ref.for_annotator(a).rows.empty()) {
        throw std::invalid_argument("annotator '" + a + "' not found in reference");
      }
      masks.push_back(events_to_mask(global_events(mine), t.duration));
    }
    out.push_back(consensus(masks));
  }
  return out;
}

void check_consensus(const std::string& c) {
  if (c != "unanimous") throw std::invalid_argument("--consensus supports only 'unanimous'");
}

bool is_prediction_csv(const std::string& text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (line.empty() || line[0] == '#') continue;
    return line.find("t_s") != std::string::npos && line.find("probability") != std::string::npos;
  }
  return false;
}

int run_preprocess(const fs::path& in, const fs::path& out, bool keep_invalid, const std::string& annotator) {
  SegmentDataset ds;
  for (const auto& dir : recording_dirs(in)) {
    const Recording rec = preprocess(read_recording(dir));
    EventTable table;
    if (fs::exists(dir / "annotations.csv")) {
      table = read_event_csv(dir / "annotations.csv");
      if (table.has_recording_column) table = table.for_recording(rec.id);
      if (!annotator.empty()) table = table.for_annotator(annotator);
    } else {
      std::cerr << "warning: " << dir.string() << " has no annotations.csv, all segments non-seizure\n";
    }
    std::size_t n = 0, invalid = 0, seizure = 0;
    for (const auto& s : segment(rec, channel_events(table, rec.channel_names))) {
      ++n;
      invalid += !s.valid;
      if (!s.valid && !keep_invalid) continue;
      seizure += s.seizure;
      ds.add(s.samples, {rec.id, s.channel, s.start, s.seizure, s.valid, s.reason});
    }
    std::cerr << rec.id << ": " << n << " segments, " << seizure << " seizure, " << invalid << " invalid\n";
  }
  write_segment_dataset(out, ds);
  std::cerr << "wrote " << ds.size() << " segments to " << out.string() << "\n";
  return 0;
}

int run_train(const fs::path& data_dir, const std::vector<std::string>& model_args, const std::string& config_path,
              const fs::path& out, std::string log_path, std::optional<std::uint64_t> seed,
              std::optional<std::size_t> epochs) {
  const SegmentDataset data = read_segment_dataset(data_dir);
  const ModelConfig model = parse_model_args(model_args);
  TrainConfig cfg = config_path.empty() ? TrainConfig{} : parse_train_config(read_text(config_path));
  if (seed) cfg.seed = *seed;
  if (epochs) cfg.epochs = *epochs;
  std::cerr << "training " << model.variant_name << " (" << count_params(model) << " params) on " << data.size()
            << " segments, " << data.count(true) << " seizure\n";
  const TrainResult r = train(data, model, cfg, [](const EpochLog& e) {
    std::fprintf(stderr, "epoch %zu loss %.5f lr %.3g auc %s\n", e.epoch, e.loss, e.lr,
                 e.auc_defined ? format_number(e.train_auc).c_str() : "-");
  });
  save_weights(r.params, out);
  if (log_path.empty()) log_path = out.string() + ".log.csv";
  write_text(log_path, format_train_log(r.log));
  if (r.diverged) {
    std::cerr << "training diverged: " << r.diagnostic << "\n";
    return 2;
  }
  return 0;
}

int run_predict(const fs::path& weights, const fs::path& in, const fs::path& out, double threshold,
                std::string events_path) {
  const ModelParams params = load_weights(weights);
  std::vector<PredictionTrace> traces;
  for (const auto& dir : recording_dirs(in)) {
    const Recording rec = preprocess(read_recording(dir));
    traces.push_back(sliding_predict(params, rec));
    std::cerr << rec.id << ": " << traces.back().window_count() << " windows x " << rec.channel_count()
              << " channels\n";
  }
  write_prediction_csv(out, traces);
  if (events_path.empty()) events_path = (out.parent_path() / out.stem()).string() + ".events.csv";
  write_event_csv(events_path, decision_events(traces, threshold));
  return 0;
}

int run_evaluate(const fs::path& pred, const fs::path& ref_path, const std::string& annotators,
                 const std::string& consensus_rule, const fs::path& out, double threshold, const std::string& plots) {
  check_consensus(consensus_rule);
  const auto traces = read_prediction_csv(pred);
  const auto refs = reference_masks(read_event_csv(ref_path), traces, split_list(annotators));
  std::vector<EvalInput> inputs;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const GlobalDecision g = global_decision(traces[i], threshold);
    inputs.push_back({traces[i].recording, g.probability, g.mask, refs[i]});
  }
  std::vector<MetricsReport> reports;
  for (const auto& in : inputs) reports.push_back(evaluate(in));
  reports.push_back(evaluate_concatenated(inputs));
  reports.back().id = "cc";
  write_text(out, format_report_csv(reports));
  if (!plots.empty()) {
    fs::create_directories(plots);
    for (const auto& in : inputs) {
      write_text(fs::path(plots) / (in.id + ".svg"), trace_svg(in.id, in.probability, in.ref, threshold));
    }
  }
  const auto& cc = reports.back();
  std::cerr << "cc: auc " << (cc.auc.defined ? format_number(cc.auc.value) : "-") << ", mcc "
            << (cc.mcc.defined ? format_number(cc.mcc.value) : "-") << "\n";
  return 0;
}

int run_kappa(const std::vector<std::string>& expert_paths, const fs::path& ai_path, std::size_t iterations,
              std::uint64_t seed, const fs::path& out, const std::string& durations_path, double threshold) {
  std::vector<EventTable> experts;
  for (const auto& p : expert_paths) experts.push_back(read_event_csv(p));
  const std::string ai_text = read_text(ai_path);
  EventTable ai;
  std::map<std::string, double> durations;
  if (is_prediction_csv(ai_text)) {
    const auto traces = parse_prediction_csv(ai_text, ai_path.string());
    ai = decision_events(traces, threshold);
    for (const auto& t : traces) durations[t.recording] = t.duration;
  } else {
    ai = parse_event_csv(ai_text, ai_path.string());
    durations = declared_durations(ai);
  }
  if (!durations_path.empty()) durations = parse_durations_csv(read_text(durations_path), durations_path);
  if (durations.empty()) {
    for (const auto& e : experts) {
      durations = declared_durations(e);
      if (!durations.empty()) break;
    }
  }
  if (durations.empty()) throw std::invalid_argument("no recording durations: pass --durations");
  const auto cohort = align_annotations(experts, ai, durations);
  const KappaTestResult r = bootstrap_test(cohort, iterations, seed);
  write_text(out, format_kappa_json(r));
  std::fprintf(stderr, "delta kappa %.4f (%.4f to %.4f), p=%.3f, %s\n", r.point.mean, r.ci_low, r.ci_high,
               r.p_value, r.equivalent ? "equivalent" : "not equivalent");
  return 0;
}

int run_synth(const std::string& config_path, const fs::path& out, std::optional<std::uint64_t> seed) {
  SyntheticCohort cfg = config_path.empty() ? SyntheticCohort{} : parse_cohort_config(read_text(config_path));
  if (seed) cfg.seed = *seed;
  const auto cohort = synth_generate(cfg);
  write_cohort(out, cohort);
  std::string durations = "recording,duration_s\n";
  for (const auto& n : cohort) durations += n.recording.id + "," + format_number(n.recording.duration()) + "\n";
  write_text(out / "durations.csv", durations);
  std::cerr << "wrote " << cohort.size() << " recordings to " << out.string() << "\n";
  return 0;
}

struct ScalingArgs {
  std::string axis = "segments";
  std::vector<std::string> grid;
  fs::path out;
  std::string data, heldout, config, model = "nano";
  std::size_t trials = 3;
  std::uint64_t seed = 0;
  std::size_t task_seizure = 500, task_non_seizure = 25000;
  std::size_t heldout_seizure = 100, heldout_non_seizure = 5000;
  std::optional<std::size_t> epochs;
};

int run_scaling(const ScalingArgs& a) {
  ScalingConfig cfg;
  cfg.axis = parse_axis(a.axis);
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.train = a.config.empty() ? TrainConfig{} : parse_train_config(read_text(a.config));
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.grid.empty()) throw std::invalid_argument("--grid is required");
  if (cfg.axis == ScalingAxis::kModel) {
    for (const auto& g : a.grid) cfg.models.push_back(parse_model_token(g));
  } else {
    for (const auto& g : a.grid) cfg.grid.push_back(static_cast<std::size_t>(parse_number(g, "--grid")));
    cfg.models = {parse_model_token(a.model)};
  }
  if (a.data.empty() != a.heldout.empty()) throw std::invalid_argument("--data and --heldout go together");
  SegmentDataset train_set, held;
  if (a.data.empty()) {
    SeparableTask t;
    t.seizure = a.task_seizure;
    t.non_seizure = a.task_non_seizure;
    t.seed = derive_seed(a.seed, {51});
    train_set = separable_segments(t);
    t.seizure = a.heldout_seizure;
    t.non_seizure = a.heldout_non_seizure;
    t.seed = derive_seed(a.seed, {52});
    held = separable_segments(t);
    std::cerr << "separable task: " << train_set.size() << " training, " << held.size() << " held-out segments\n";
  } else {
    train_set = read_segment_dataset(a.data);
    held = read_segment_dataset(a.heldout);
  }
  const auto r = scaling_run(train_set, held, cfg, [](const ScalingPoint& p, const ScalingTrial& t) {
    std::cerr << "point " << p.label << " trial " << p.trials.size() - 1 << ": "
              << (t.diverged ? "diverged (" + t.diagnostic + ")"
                             : "auc " + (t.metrics.auc.defined ? format_number(t.metrics.auc.value) : "-"))
              << "\n";
  });
  emit_report(r, a.out);
  return 0;
}

int run_montage(const fs::path& pred, const fs::path& ref_path, const std::string& annotators,
                const std::string& consensus_rule, const fs::path& out, const MontageConfig& cfg) {
  check_consensus(consensus_rule);
  const auto traces = read_prediction_csv(pred);
  const auto refs = reference_masks(read_event_csv(ref_path), traces, split_list(annotators));
  const auto r = montage_stress(traces, refs, cfg);
  emit_report(r, out);
  std::cerr << "baseline auc " << (r.baseline.auc.defined ? format_number(r.baseline.auc.value) : "-") << ", mcc "
            << (r.baseline.mcc.defined ? format_number(r.baseline.mcc.value) : "-") << "; " << r.cells.size()
            << " cells\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neonatal EEG seizure detection"};
  app.require_subcommand(1);

  auto* pre = app.add_subcommand("preprocess", "Filter, resample and segment recordings");
  std::string pre_in, pre_out, pre_annotator;
  bool keep_invalid = false;
  pre->add_option("--in", pre_in, "Recording directory or a directory of recordings")->required();
  pre->add_option("--out", pre_out, "Segment set directory")->required();
  pre->add_flag("--keep-invalid", keep_invalid, "Keep artifact segments (flagged invalid)");
  pre->add_option("--annotator", pre_annotator, "Use only this annotator (default: union of all)");

  auto* tr = app.add_subcommand("train", "Train a model on a segment set");
  std::string tr_data, tr_config, tr_out, tr_log;
  std::vector<std::string> tr_model{"nano"};
  std::optional<std::uint64_t> tr_seed;
  std::optional<std::size_t> tr_epochs;
  tr->add_option("--data", tr_data, "Segment set directory")->required();
  tr->add_option("--model", tr_model, "nano|small|medium|large|xl or 'custom D W'")->expected(1, 3);
  tr->add_option("--config", tr_config, "Training config JSON");
  tr->add_option("--out", tr_out, "Weights file")->required();
  tr->add_option("--log", tr_log, "Training log CSV (default <out>.log.csv)");
  tr->add_option("--seed", tr_seed, "Override the config seed");
  tr->add_option("--epochs", tr_epochs, "Override the config epoch count");

  auto* pr = app.add_subcommand("predict", "Sliding-window inference on recordings");
  std::string pr_weights, pr_in, pr_out, pr_events;
  double pr_threshold = kDefaultThreshold;
  pr->add_option("--weights", pr_weights)->required();
  pr->add_option("--in", pr_in, "Recording directory or a directory of recordings")->required();
  pr->add_option("--out", pr_out, "Prediction CSV")->required();
  pr->add_option("--threshold", pr_threshold)->check(CLI::Range(0.0, 1.0));
  pr->add_option("--events", pr_events, "Events CSV (default <out stem>.events.csv)");

  auto* ev = app.add_subcommand("evaluate", "Metrics of predictions against annotations");
  std::string ev_pred, ev_ref, ev_annotators, ev_consensus = "unanimous", ev_out, ev_plots;
  double ev_threshold = kDefaultThreshold;
  ev->add_option("--pred", ev_pred, "Prediction CSV")->required();
  ev->add_option("--ref", ev_ref, "Annotation CSV")->required();
  ev->add_option("--annotators", ev_annotators, "Comma-separated annotators to combine");
  ev->add_option("--consensus", ev_consensus, "Only 'unanimous'");
  ev->add_option("--out", ev_out, "Report CSV")->required();
  ev->add_option("--threshold", ev_threshold)->check(CLI::Range(0.0, 1.0));
  ev->add_option("--plot-dir", ev_plots, "Write one probability-trace SVG per recording");

  auto* kt = app.add_subcommand("kappa-test", "Bootstrap test of expert equivalence");
  std::vector<std::string> kt_experts;
  std::string kt_ai, kt_out, kt_durations;
  std::size_t kt_iterations = 1000;
  std::uint64_t kt_seed = 0;
  double kt_threshold = kDefaultThreshold;
  kt->add_option("--experts", kt_experts, "Three expert annotation CSVs")->required();
  kt->add_option("--ai", kt_ai, "AI events CSV or prediction CSV")->required();
  kt->add_option("--iterations", kt_iterations)->check(CLI::PositiveNumber);
  kt->add_option("--seed", kt_seed);
  kt->add_option("--out", kt_out, "Result JSON")->required();
  kt->add_option("--durations", kt_durations, "recording,duration_s CSV");
  kt->add_option("--threshold", kt_threshold, "For a prediction CSV AI input")->check(CLI::Range(0.0, 1.0));

  auto* sy = app.add_subcommand("synth", "Generate a synthetic annotated cohort");
  std::string sy_config, sy_out;
  std::optional<std::uint64_t> sy_seed;
  sy->add_option("--config", sy_config, "Cohort config JSON");
  sy->add_option("--out", sy_out)->required();
  sy->add_option("--seed", sy_seed);

  auto* sc = app.add_subcommand("scaling-run", "Data or model scaling sweep");
  ScalingArgs sa;
  sc->add_option("--axis", sa.axis)->check(CLI::IsMember({"segments", "neonates", "model"}));
  sc->add_option("--grid", sa.grid, "Counts, or model names / DxW for the model axis")->required();
  sc->add_option("--out", sa.out)->required();
  sc->add_option("--data", sa.data, "Training segment set (default: separable synthetic task)");
  sc->add_option("--heldout", sa.heldout, "Held-out segment set");
  sc->add_option("--config", sa.config, "Training config JSON");
  sc->add_option("--model", sa.model, "Model for the data axes");
  sc->add_option("--trials", sa.trials)->check(CLI::PositiveNumber);
  sc->add_option("--seed", sa.seed);
  sc->add_option("--epochs", sa.epochs);
  sc->add_option("--task-seizure", sa.task_seizure);
  sc->add_option("--task-non-seizure", sa.task_non_seizure);
  sc->add_option("--heldout-seizure", sa.heldout_seizure);
  sc->add_option("--heldout-non-seizure", sa.heldout_non_seizure);

  auto* ms = app.add_subcommand("montage-stress", "Zero runs in per-channel outputs");
  std::string ms_pred, ms_ref, ms_annotators, ms_consensus = "unanimous", ms_out;
  MontageConfig mc;
  ms->add_option("--pred", ms_pred, "Prediction CSV")->required();
  ms->add_option("--ref", ms_ref, "Annotation CSV")->required();
  ms->add_option("--annotators", ms_annotators);
  ms->add_option("--consensus", ms_consensus);
  ms->add_option("--out", ms_out)->required();
  ms->add_option("--trials", mc.trials)->check(CLI::PositiveNumber);
  ms->add_option("--seed", mc.seed);
  ms->add_option("--threshold", mc.threshold)->check(CLI::Range(0.0, 1.0));
  ms->add_option("--fractions", mc.fractions)->check(CLI::Range(0.0, 1.0));

  CLI11_PARSE(app, argc, argv);
  try {
    if (pre->parsed()) return run_preprocess(pre_in, pre_out, keep_invalid, pre_annotator);
    if (tr->parsed()) return run_train(tr_data, tr_model, tr_config, tr_out, tr_log, tr_seed, tr_epochs);
    if (pr->parsed()) return run_predict(pr_weights, pr_in, pr_out, pr_threshold, pr_events);
    if (ev->parsed()) {
      return run_evaluate(ev_pred, ev_ref, ev_annotators, ev_consensus, ev_out, ev_threshold, ev_plots);
    }
    if (kt->parsed()) return run_kappa(kt_experts, kt_ai, kt_iterations, kt_seed, kt_out, kt_durations, kt_threshold);
    if (sy->parsed()) return run_synth(sy_config, sy_out, sy_seed);
    if (sc->parsed()) return run_scaling(sa);
    if (ms->parsed()) return run_montage(ms_pred, ms_ref, ms_annotators, ms_consensus, ms_out, mc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
