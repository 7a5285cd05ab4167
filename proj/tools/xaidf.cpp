// xaidf: segment, explain, attack, evaluate, report, synth.
//
// Exit codes: 0 success, 1 usage error, 2 runtime or data error, 3 transport
// error. Results and written paths go to stdout, everything else to stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "xaidf/attack/nes.hpp"
#include "xaidf/classifier/model_uri.hpp"
#include "xaidf/error.hpp"
#include "xaidf/evaluation/config_json.hpp"
#include "xaidf/evaluation/manifest.hpp"
#include "xaidf/evaluation/report.hpp"
#include "xaidf/evaluation/run.hpp"
#include "xaidf/evaluation/synthetic_suite.hpp"
#include "xaidf/explainers/explain.hpp"
#include "xaidf/imaging/png_io.hpp"
#include "xaidf/imaging/slic.hpp"
#include "xaidf/seeding.hpp"

namespace {

using xaidf::OrderedJson;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kTransport = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void log(const std::string& msg) { std::cerr << "xaidf: " << msg << '\n'; }

// Argument-level validation: InvalidArgument here is the caller's fault.
template <typename F>
auto checked(F&& f) {
  try {
    return f();
  } catch (const xaidf::InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("XAI_EVAL_SEED"); env && *env) {
    return checked([&] { return xaidf::detail::parse_number<std::uint64_t>(env, "XAI_EVAL_SEED"); });
  }
  return 0;
}

void write_json(const OrderedJson& j, const std::string& path) { xaidf::write_text_file(path, j.dump(2) + "\n"); }

OrderedJson prediction_json(const xaidf::Prediction& p) {
  OrderedJson probs = OrderedJson::object();
  for (std::size_t i = 0; i < p.probabilities().size(); ++i) probs[p.class_names()[i]] = p.probabilities()[i];
  return {{"class", p.predicted_name()}, {"probabilities", probs}};
}

// Distinct, stable colour per label.
std::array<double, 3> label_color(int label) {
  const std::uint64_t h = xaidf::mix64(static_cast<std::uint64_t>(label));
  return {static_cast<double>(h & 0xff) / 255.0, static_cast<double>((h >> 8) & 0xff) / 255.0,
          static_cast<double>((h >> 16) & 0xff) / 255.0};
}

xaidf::Image label_image(const xaidf::SegmentationMap& seg) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(seg.height()) * seg.width() * xaidf::kChannels);
  for (int label : seg.labels()) {
    for (double v : label_color(label)) data.push_back(v);
  }
  return xaidf::Image(seg.height(), seg.width(), std::move(data));
}

xaidf::SaliencyMap paint_segments(const xaidf::SegmentScores& scores, const xaidf::SegmentationMap& seg) {
  std::vector<double> values;
  values.reserve(seg.labels().size());
  for (int label : seg.labels()) values.push_back(scores.values()[static_cast<std::size_t>(label)]);
  return xaidf::SaliencyMap(seg.height(), seg.width(), std::move(values));
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& part : xaidf::detail::split(s, ',')) out.push_back(xaidf::detail::parse_number<int>(part, what));
  return out;
}

struct NesFlags {
  xaidf::NesConfig config;
  void add(CLI::App* cmd) {
    cmd->add_option("--sigma", config.sigma, "NES noise scale")->capture_default_str();
    cmd->add_option("--samples", config.n_samples, "antithetic pairs per gradient estimate")->capture_default_str();
    cmd->add_option("--iters", config.max_iterations, "maximum attack iterations")->capture_default_str();
    cmd->add_option("--eps", config.max_distortion, "L-infinity distortion budget")->capture_default_str();
    cmd->add_option("--alpha", config.learning_rate, "step size")->capture_default_str();
  }
};

// ---------------------------------------------------------------- segment

struct SegmentArgs {
  std::string image;
  xaidf::SlicParams slic;
  std::string out;
};

int cmd_segment(const SegmentArgs& a) {
  checked([&] {
    if (a.slic.n_segments < 1) throw xaidf::InvalidArgument("--segments must be >= 1");
    if (!(a.slic.compactness > 0.0)) throw xaidf::InvalidArgument("--compactness must be positive");
    if (a.slic.iterations < 1) throw xaidf::InvalidArgument("--iterations must be >= 1");
    return 0;
  });
  const auto image = xaidf::load_image(a.image);
  const auto seg = xaidf::slic_segment(image, a.slic.n_segments, a.slic.compactness, a.slic.iterations);
  OrderedJson j;
  j["config"] = {{"command", "segment"}, {"image", a.image}, {"slic", xaidf::to_json(a.slic)}};
  j["height"] = seg.height();
  j["width"] = seg.width();
  j["segment_count"] = seg.segment_count();
  j["labels"] = std::vector<int>(seg.labels().begin(), seg.labels().end());
  xaidf::save_image(label_image(seg), a.out + ".png");
  write_json(j, a.out + ".json");
  log("wrote " + a.out + ".png and " + a.out + ".json");
  std::cout << seg.segment_count() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
  std::string method;
  std::string image;
  std::string model = "synthetic";
  std::string target;
  std::optional<std::uint64_t> seed;
  xaidf::SlicParams slic;
  std::string out;
};

int cmd_explain(const ExplainArgs& a) {
  const auto method = checked([&] { return xaidf::parse_method(a.method); });
  const auto model = checked([&] { return xaidf::open_model(a.model); });
  const std::uint64_t seed = resolve_seed(a.seed);
  const auto configs = xaidf::ExplainerConfigs{}.reseeded(seed);
  checked([&] {
    configs.validate();
    if (a.slic.n_segments < 1) throw xaidf::InvalidArgument("--segments must be >= 1");
    return 0;
  });

  const auto image = xaidf::load_image(a.image);
  const auto prediction = model->predict(image);
  const std::size_t target =
      a.target.empty() ? prediction.predicted() : checked([&] { return model->class_index(a.target); });
  const std::string target_name = (*model->class_names())[target];
  const bool segment_level = method == xaidf::Method::lime || method == xaidf::Method::shap;

  OrderedJson config = {{"command", "explain"}, {"method", std::string(xaidf::method_name(method))},
                        {"image", a.image},     {"model", a.model},
                        {"target", target_name}, {"seed", seed},
                        {"params", xaidf::method_config_json(method, configs)}};
  if (segment_level) config["slic"] = xaidf::to_json(a.slic);

  OrderedJson j;
  j["config"] = config;
  j["prediction"] = prediction_json(prediction);
  xaidf::SaliencyMap overlay;
  if (segment_level) {
    const auto seg = xaidf::slic_segment(image, a.slic.n_segments, a.slic.compactness, a.slic.iterations);
    const auto result = xaidf::explain(method, *model, image, target, seg, configs);
    const auto& scores = std::get<xaidf::SegmentScores>(result);
    j["kind"] = "segments";
    j["segment_count"] = seg.segment_count();
    j["scores"] = std::vector<double>(scores.values().begin(), scores.values().end());
    j["labels"] = std::vector<int>(seg.labels().begin(), seg.labels().end());
    overlay = paint_segments(scores, seg);
  } else {
    overlay = method == xaidf::Method::rise ? xaidf::explain_rise(*model, image, target, configs.rise)
                                            : xaidf::explain_sobol(*model, image, target, configs.sobol);
    j["kind"] = "pixels";
    j["height"] = overlay.height();
    j["width"] = overlay.width();
    j["saliency"] = std::vector<double>(overlay.values().begin(), overlay.values().end());
  }
  xaidf::save_overlay(image, overlay, a.out + ".png");
  write_json(j, a.out + ".json");
  std::cout << a.out << ".png\n" << a.out << ".json\n";
  return kOk;
}

// ---------------------------------------------------------------- attack

struct AttackArgs {
  std::string image;
  std::string mask;
  std::string model = "synthetic";
  std::optional<std::uint64_t> seed;
  NesFlags nes;
  std::string out;
};

int cmd_attack(AttackArgs a) {
  const auto model = checked([&] { return xaidf::open_model(a.model); });
  a.nes.config.seed = resolve_seed(a.seed);
  checked([&] {
    a.nes.config.validate();
    return 0;
  });
  const auto image = xaidf::load_image(a.image);
  const auto mask = xaidf::load_mask(a.mask);
  if (mask.height() != image.height() || mask.width() != image.width()) {
    throw xaidf::IoError("mask is " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                         ", image is " + std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  const auto outcome = xaidf::nes_attack(*model, image, mask, a.nes.config);
  OrderedJson j;
  OrderedJson nes = xaidf::to_json(a.nes.config);
  j["config"] = {{"command", "attack"}, {"image", a.image},          {"mask", a.mask},
                 {"model", a.model},    {"seed", a.nes.config.seed}, {"nes", nes}};
  j["flipped"] = outcome.flipped;
  j["iterations"] = outcome.iterations_used;
  j["queries"] = outcome.queries;
  j["masked_pixels"] = mask.count();
  j["real_probability_trace"] = outcome.probability_trace;
  j["final_prediction"] = prediction_json(*outcome.final_prediction);
  xaidf::save_image(outcome.adversarial, a.out + ".png");
  write_json(j, a.out + ".json");
  log(std::string(outcome.flipped ? "flipped" : "not flipped") + " after " +
      std::to_string(outcome.iterations_used) + " iterations, " + std::to_string(outcome.queries) + " queries");
  std::cout << a.out << ".png\n" << a.out << ".json\n";
  return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string manifest;
  std::string model = "synthetic";
  std::string methods = "rise,lime,shap,sobol";
  std::string topk = "1,2,3";
  xaidf::SlicParams slic;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  NesFlags nes;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  xaidf::RunConfig config;
  config.methods.clear();
  checked([&] {
    for (const auto& m : xaidf::detail::split(a.methods, ',')) config.methods.push_back(xaidf::parse_method(m));
    config.ks = parse_int_list(a.topk, "--topk value");
    return 0;
  });
  config.slic = a.slic;
  config.nes = a.nes.config;
  config.seed = resolve_seed(a.seed);
  config.workers = a.workers;
  checked([&] {
    config.validate();
    return 0;
  });
  const auto model = checked([&] { return xaidf::open_model(a.model); });

  const auto manifest = xaidf::load_manifest(a.manifest);
  if (manifest.entries.empty()) throw xaidf::IoError("empty dataset: " + a.manifest);

  const auto progress = [](const xaidf::EvaluationProgress& p) {
    std::cerr << "xaidf: [" << p.done << "/" << p.total << "] " << p.path << '\n';
  };
  xaidf::EvaluationReport report;
  try {
    report = xaidf::run_evaluation(manifest, *model, config, xaidf::load_image, progress);
  } catch (const xaidf::EvaluationAborted& e) {
    report = e.partial();
    report.config["model"] = a.model;
    xaidf::save_report(report, a.out);
    log(std::string(e.what()) + "; partial report written to " + a.out);
    std::cout << a.out << '\n';
    return kTransport;
  }
  report.config["model"] = a.model;
  xaidf::save_report(report, a.out);
  std::cout << a.out << '\n';
  if (!report.errors.empty()) {
    for (const auto& e : report.errors) log("entry " + e.path + ": " + e.message);
    log(std::to_string(report.errors.size()) + " manifest entries failed; report is partial");
    return kData;
  }
  return kOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string in;
  std::string format = "csv";
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  const auto report = xaidf::load_report(a.in);
  const std::string text = a.format == "csv" ? xaidf::report_to_csv(report) : xaidf::report_to_markdown(report);
  if (a.out.empty() || a.out == "-") {
    std::cout << text;
  } else {
    xaidf::write_text_file(a.out, text);
    std::cout << a.out << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string dir;
  int count = 8;
  std::string fake_type = "SYN";
  std::optional<std::uint64_t> seed;
};

// Synthetic planted fakes readable by the "synthetic" model, plus a manifest
// and the region mask.
int cmd_synth(const SynthArgs& a) {
  if (a.count < 1) throw UsageError("--count must be >= 1");
  if (a.fake_type.empty()) throw UsageError("--fake-type must not be empty");
  const std::uint64_t seed = resolve_seed(a.seed);
  const xaidf::SyntheticSuiteSpec spec;
  std::filesystem::create_directories(a.dir);
  xaidf::DatasetManifest manifest;
  const auto suite = xaidf::synthetic_suite(spec, a.count, seed);
  for (int i = 0; i < a.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "fake_%03d.png", i);
    xaidf::save_image(suite[static_cast<std::size_t>(i)].image, (std::filesystem::path(a.dir) / name).string());
    manifest.entries.push_back({name, "", a.fake_type, xaidf::TrueLabel::fake});
  }
  const auto& p = spec.pattern;
  xaidf::save_mask(xaidf::BinaryMask::rectangle(spec.height, spec.width, p.top, p.left, p.height, p.width),
                   (std::filesystem::path(a.dir) / "region_mask.png").string());
  const auto manifest_path = (std::filesystem::path(a.dir) / "manifest.jsonl").string();
  std::ofstream out(manifest_path);
  if (!out) throw xaidf::IoError("cannot write " + manifest_path);
  xaidf::write_manifest(manifest, out);
  std::cout << manifest_path << '\n';
  return kOk;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const UsageError& e) {
    log(std::string("error: ") + e.what());
    return kUsage;
  } catch (const xaidf::TransportError& e) {
    log(std::string("transport error: ") + e.what());
    return kTransport;
  } catch (const xaidf::ProtocolError& e) {
    log(std::string("protocol error: ") + e.what());
    return kTransport;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return kData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate visual explanations of image classifiers by attacking the regions they highlight"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  const auto add_seed = [](CLI::App* cmd, std::optional<std::uint64_t>& seed) {
    cmd->add_option("--seed", seed, "random seed (falls back to XAI_EVAL_SEED, then 0)");
  };
  const auto add_slic = [](CLI::App* cmd, xaidf::SlicParams& slic) {
    cmd->add_option("--segments", slic.n_segments, "SLIC segment count")->capture_default_str();
    cmd->add_option("--compactness", slic.compactness, "SLIC compactness")->capture_default_str();
    cmd->add_option("--slic-iterations", slic.iterations, "SLIC iterations")->capture_default_str();
  };
  const std::string model_help = "synthetic[:top,left,h,w[,gain[,threshold]]] or remote:HOST:PORT";

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "SLIC superpixels of an image");
  segment->add_option("--image", seg.image, "input PNG")->required();
  add_slic(segment, seg.slic);
  segment->add_option("--out", seg.out, "output prefix (<out>.png, <out>.json)")->required();

  ExplainArgs ex;
  auto* explain = app.add_subcommand("explain", "saliency map or segment scores for one image");
  explain->add_option("--method", ex.method, "rise, lime, shap or sobol")->required();
  explain->add_option("--image", ex.image, "input PNG")->required();
  explain->add_option("--model", ex.model, model_help)->capture_default_str();
  explain->add_option("--target", ex.target, "class to explain (default: predicted class)");
  add_seed(explain, ex.seed);
  add_slic(explain, ex.slic);
  explain->add_option("--out", ex.out, "output prefix (<out>.png overlay, <out>.json)")->required();

  AttackArgs at;
  auto* attack = app.add_subcommand("attack", "masked NES attack towards the real class");
  attack->add_option("--image", at.image, "input PNG")->required();
  attack->add_option("--mask", at.mask, "binary mask PNG (0/255)")->required();
  attack->add_option("--model", at.model, model_help)->capture_default_str();
  add_seed(attack, at.seed);
  at.nes.add(attack);
  attack->add_option("--out", at.out, "output prefix (<out>.png adversarial, <out>.json)")->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "run the full framework over a manifest");
  evaluate->add_option("--manifest", ev.manifest, "JSON Lines manifest")->required();
  evaluate->add_option("--model", ev.model, model_help)->capture_default_str();
  evaluate->add_option("--methods", ev.methods, "comma-separated methods")->capture_default_str();
  evaluate->add_option("--topk", ev.topk, "comma-separated k values")->capture_default_str();
  add_slic(evaluate, ev.slic);
  add_seed(evaluate, ev.seed);
  evaluate->add_option("--workers", ev.workers, "parallel images")->capture_default_str();
  ev.nes.add(evaluate);
  evaluate->add_option("--out", ev.out, "report JSON path")->required();

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "flatten a report into CSV or markdown tables");
  report->add_option("--in", rep.in, "report JSON")->required();
  report->add_option("--format", rep.format, "csv or markdown")
      ->check(CLI::IsMember({"csv", "markdown"}))
      ->capture_default_str();
  report->add_option("--out", rep.out, "output path (default: stdout)");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "write a synthetic planted-fake dataset and manifest");
  synth->add_option("--out-dir", sy.dir, "output directory")->required();
  synth->add_option("--count", sy.count, "number of images")->capture_default_str();
  synth->add_option("--fake-type", sy.fake_type, "fake_type tag")->capture_default_str();
  add_seed(synth, sy.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (segment->parsed()) return guarded([&] { return cmd_segment(seg); });
  if (explain->parsed()) return guarded([&] { return cmd_explain(ex); });
  if (attack->parsed()) return guarded([&] { return cmd_attack(at); });
  if (evaluate->parsed()) return guarded([&] { return cmd_evaluate(ev); });
  if (report->parsed()) return guarded([&] { return cmd_report(rep); });
  if (synth->parsed()) return guarded([&] { return cmd_synth(sy); });
  return kUsage;
}
