#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "xaidf/attack/nes.hpp"
#include "xaidf/classifier/classifier.hpp"
#include "xaidf/error.hpp"
#include "xaidf/evaluation/config_json.hpp"
#include "xaidf/evaluation/manifest.hpp"
#include "xaidf/evaluation/metrics.hpp"
#include "xaidf/evaluation/report.hpp"
#include "xaidf/explainers/explain.hpp"
#include "xaidf/imaging/png_io.hpp"
#include "xaidf/imaging/segments.hpp"
#include "xaidf/imaging/slic.hpp"
#include "xaidf/seeding.hpp"

namespace xaidf {

struct RunConfig {
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  std::vector<int> ks{1, 2, 3};
  SlicParams slic;
  NesConfig nes;
  ExplainerConfigs explainers;
  std::uint64_t seed = 0;
  int workers = 1;  // scheduling only; never affects results

  void validate() const {
    if (methods.empty()) throw InvalidArgument("at least one explanation method is required");
    if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size()) {
      throw InvalidArgument("explanation methods must be distinct");
    }
    if (ks.empty()) throw InvalidArgument("at least one k is required");
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (ks[i] < 1) throw InvalidArgument("every k must be >= 1");
      if (i > 0 && ks[i] <= ks[i - 1]) throw InvalidArgument("ks must be strictly ascending");
    }
    if (slic.n_segments < 1) throw InvalidArgument("n_segments must be >= 1");
    if (!(slic.compactness > 0.0)) throw InvalidArgument("compactness must be positive");
    if (slic.iterations < 1) throw InvalidArgument("SLIC iterations must be >= 1");
    nes.validate();
    explainers.validate();
    if (workers < 1) throw InvalidArgument("workers must be >= 1");
  }

  // Everything that influences results. The worker count is deliberately
  // absent so that reports compare equal across schedules.
  OrderedJson to_json() const {
    OrderedJson m = OrderedJson::array();
    for (Method x : methods) m.push_back(std::string(method_name(x)));
    return {{"seed", seed},          {"methods", m},       {"ks", ks},
            {"slic", xaidf::to_json(slic)}, {"nes", xaidf::to_json(nes)},
            {"explainers", xaidf::to_json(explainers)}};
  }
};

struct EvaluationProgress {
  std::size_t done;
  std::size_t total;
  const std::string& path;
};

using ImageLoader = std::function<Image(const std::string&)>;
using ProgressCallback = std::function<void(const EvaluationProgress&)>;

// Thrown when the classifier becomes unreachable mid-run. Carries the
// aggregate of every image finished before the failure.
class EvaluationAborted : public std::runtime_error {
 public:
  EvaluationAborted(const std::string& what, EvaluationReport partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}

  const EvaluationReport& partial() const noexcept { return partial_; }

 private:
  EvaluationReport partial_;
};

inline std::uint64_t image_seed(std::uint64_t seed, const std::string& path, Method method) {
  return derive_seed(derive_seed(seed, path), method_name(method));
}

inline std::uint64_t attack_seed(std::uint64_t seed, const std::string& path, Method method, int k) {
  return derive_seed(image_seed(seed, path, method), static_cast<std::uint64_t>(k));
}

namespace detail {

struct AttackRecord {
  bool flipped = false;
  int iterations = 0;
  std::size_t queries = 0;
  double before = 0.0;  // predicted fake class probability on the original
  double after = 0.0;   // same class on the returned image
};

struct EntryResult {
  enum class Status { pending, failed, excluded, attacked } status = Status::pending;
  std::string message;
  std::vector<AttackRecord> records;  // methods x ks, method-major
};

inline EntryResult evaluate_entry(const ManifestEntry& entry, const Classifier& classifier, const RunConfig& config,
                                  const ImageLoader& loader) {
  EntryResult result;
  Image image;
  try {
    image = loader(entry.resolved);
  } catch (const IoError& e) {
    result.status = EntryResult::Status::failed;
    result.message = e.what();
    return result;
  } catch (const InvalidArgument& e) {
    result.status = EntryResult::Status::failed;
    result.message = e.what();
    return result;
  }

  const Prediction original = classifier.predict(image);
  if (original.is_real()) {
    result.status = EntryResult::Status::excluded;
    return result;
  }
  const std::size_t target = original.predicted();
  const double before = original.probability(target);

  try {
    const SegmentationMap segmentation =
        slic_segment(image, config.slic.n_segments, config.slic.compactness, config.slic.iterations);
    for (Method method : config.methods) {
      const auto configs = config.explainers.reseeded(image_seed(config.seed, entry.path, method));
      const SegmentScores scores =
          to_segment_scores(explain(method, classifier, image, target, segmentation, configs), segmentation);
      for (int k : config.ks) {
        NesConfig nes = config.nes;
        nes.seed = attack_seed(config.seed, entry.path, method, k);
        const auto outcome = nes_attack(classifier, image, top_k_mask(scores, segmentation, k), nes);
        result.records.push_back({outcome.flipped, outcome.iterations_used, outcome.queries, before,
                                  outcome.final_prediction->probability(target)});
      }
    }
  } catch (const NumericalError& e) {
    result.status = EntryResult::Status::failed;
    result.message = e.what();
    result.records.clear();
    return result;
  }
  result.status = EntryResult::Status::attacked;
  return result;
}

inline EvaluationReport aggregate(const DatasetManifest& manifest, const RunConfig& config,
                                  const std::vector<EntryResult>& results, bool complete) {
  EvaluationReport report;
  report.config = config.to_json();
  report.complete = complete;
  const auto types = manifest.fake_types();

  for (const auto& ft : types) {
    FakeTypeSummary s;
    s.fake_type = ft;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      const auto& e = manifest.entries[i];
      if (e.label != TrueLabel::fake || e.fake_type != ft) continue;
      ++s.manifest_count;
      const auto st = results[i].status;
      if (st == EntryResult::Status::excluded) ++s.excluded;
      if (st == EntryResult::Status::excluded || st == EntryResult::Status::attacked) ++s.evaluated;
      if (st == EntryResult::Status::attacked) ++correct;
    }
    if (s.evaluated > 0) {
      s.original_accuracy = round_report_value(static_cast<double>(correct) / static_cast<double>(s.evaluated));
    }
    report.excluded_count += s.excluded;
    report.fake_types.push_back(std::move(s));
  }

  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    for (const auto& ft : types) {
      for (std::size_t ki = 0; ki < config.ks.size(); ++ki) {
        ReportCell cell;
        cell.method = std::string(method_name(config.methods[m]));
        cell.fake_type = ft;
        cell.k = config.ks[ki];
        std::vector<double> before, after;
        double iterations = 0.0, queries = 0.0;
        for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
          const auto& e = manifest.entries[i];
          if (e.label != TrueLabel::fake || e.fake_type != ft) continue;
          if (results[i].status != EntryResult::Status::attacked) continue;
          const auto& rec = results[i].records[m * config.ks.size() + ki];
          ++cell.attacked_count;
          cell.flipped_count += rec.flipped ? 1 : 0;
          before.push_back(rec.before);
          after.push_back(rec.after);
          iterations += rec.iterations;
          queries += static_cast<double>(rec.queries);
        }
        if (cell.attacked_count > 0) {
          const auto n = static_cast<double>(cell.attacked_count);
          cell.adversarial_accuracy = round_report_value(1.0 - static_cast<double>(cell.flipped_count) / n);
          cell.sufficiency = round_report_value(sufficiency(before, after));
          cell.mean_iterations = round_report_value(iterations / n);
          cell.mean_queries = round_report_value(queries / n);
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }

  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (results[i].status == EntryResult::Status::failed) {
      report.errors.push_back({manifest.entries[i].path, results[i].message});
    }
  }
  return report;
}

}  // namespace detail

/// The full framework over a manifest: classify every fake entry, drop the
/// ones already classified as real, segment the rest once, explain with each
/// method (target = predicted fake class), attack the top-k segments for every
/// k and aggregate accuracy and sufficiency per (method, fake type, k).
///
/// Entries are processed by `config.workers` threads; every random stream is
/// derived from (seed, path, method[, k]) and aggregation runs in manifest
/// order, so the report does not depend on the schedule. Unreadable images are
/// recorded as errors. Transport and protocol failures abort the run with
/// EvaluationAborted holding the partial aggregate.
inline EvaluationReport run_evaluation(const DatasetManifest& manifest, const Classifier& classifier,
                                       const RunConfig& config, const ImageLoader& loader = load_image,
                                       const ProgressCallback& progress = {}) {
  config.validate();
  manifest.validate();
  if (manifest.entries.empty()) throw InvalidArgument("empty dataset");

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].label == TrueLabel::fake) todo.push_back(i);
  }
  std::vector<detail::EntryResult> results(manifest.entries.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mutex;
  std::size_t done = 0;
  std::exception_ptr failure;
  std::string failure_message;

  const auto work = [&] {
    while (!stop.load()) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= todo.size()) return;
      const std::size_t i = todo[slot];
      try {
        auto r = detail::evaluate_entry(manifest.entries[i], classifier, config, loader);
        std::lock_guard lock(mutex);
        results[i] = std::move(r);
        ++done;
        if (progress) progress({done, todo.size(), manifest.entries[i].path});
      } catch (const TransportError& e) {
        std::lock_guard lock(mutex);
        if (!failure) {
          failure = std::current_exception();
          failure_message = e.what();
        }
        stop = true;
      } catch (const ProtocolError& e) {
        std::lock_guard lock(mutex);
        if (!failure) {
          failure = std::current_exception();
          failure_message = e.what();
        }
        stop = true;
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) {
          failure = std::current_exception();
          failure_message.clear();
        }
        stop = true;
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(config.workers, static_cast<int>(todo.size())));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  if (failure) {
    // Programming errors and the like propagate unchanged.
    if (failure_message.empty()) std::rethrow_exception(failure);
    for (auto& r : results) {
      if (r.status == detail::EntryResult::Status::pending) r.records.clear();
    }
    auto partial = detail::aggregate(manifest, config, results, false);
    partial.errors.push_back({"", "aborted: " + failure_message});
    throw EvaluationAborted("evaluation aborted: " + failure_message, std::move(partial));
  }
  return detail::aggregate(manifest, config, results, true);
}

}  // namespace xaidf
