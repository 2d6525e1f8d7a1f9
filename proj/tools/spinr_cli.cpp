// spinr: fit, attack, stream, decode, report and replay.
//
// Every command that writes files also writes a manifest.json listing its
// inputs (with hashes), outputs, the resolved configuration, and the exact
// argument list that reproduces it; `spinr replay manifest.json` re-runs it.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "reports.hpp"
#include "spinr/errors.hpp"
#include "spinr/image_io.hpp"
#include "spinr/metrics.hpp"
#include "spinr/models.hpp"
#include "spinr/robustness.hpp"
#include "spinr/stream.hpp"
#include "spinr/trainer.hpp"

namespace fs = std::filesystem;
using namespace spinr;
using spinr::cli::json;

namespace {

constexpr const char* kToolVersion = "spinr " SPINR_VERSION;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kParseFailure = 3,
  kTrainingFailure = 4,
  kDecodeFailure = 5,
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The single place files get written. Commands compute first, then hand
// their artifacts here from the main thread.
class Writer {
 public:
  explicit Writer(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  fs::path path(const fs::path& rel) const { return root_ / rel; }

  void bytes(const fs::path& rel, std::span<const std::uint8_t> data) {
    const fs::path p = path(rel);
    fs::create_directories(p.parent_path());
    io::write_file(p, data);
    written_.push_back(rel.generic_string());
  }
  void text(const fs::path& rel, const std::string& s) {
    bytes(rel, {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }
  void image(const fs::path& rel, const Image& img) { bytes(rel, io::encode_ppm(img)); }
  void json_file(const fs::path& rel, const json& j) { text(rel, j.dump(2) + "\n"); }

  const std::vector<std::string>& written() const { return written_; }

 private:
  fs::path root_;
  std::vector<std::string> written_;
};

json manifest(const std::string& command, const std::vector<std::string>& args,
              const json& config, const std::vector<std::uint64_t>& seeds,
              const std::vector<fs::path>& inputs, const std::vector<std::string>& outputs) {
  json in = json::object();
  for (const auto& p : inputs) in[p.string()] = cli::file_hash(p);
  return {{"tool", kToolVersion}, {"command", command}, {"args", args},
          {"config", config},     {"seeds", seeds},     {"inputs", in},
          {"outputs", outputs}};
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    if constexpr (std::is_floating_point_v<T>)
      out << cli::exact(values[i]);
    else
      out << values[i];
  }
  return out.str();
}

std::vector<AttackSpec> attack_specs(const std::vector<std::size_t>& lose,
                                     const std::vector<double>& noise,
                                     const std::vector<std::size_t>& corrupt, int trials,
                                     std::uint64_t seed) {
  std::vector<AttackSpec> specs;
  for (std::size_t k : lose) specs.push_back(AttackSpec::lose_neurons(k, trials, seed));
  for (double s : noise) specs.push_back(AttackSpec::param_noise(s, trials, seed));
  for (std::size_t l : corrupt) specs.push_back(AttackSpec::corrupt_layer(l, seed));
  return specs;
}

void print_aggregate_table(std::ostream& out, const std::vector<AggregateReport>& rows) {
  std::vector<std::string> labels;
  for (const auto& r : rows)
    for (const auto& [label, s] : r.attacks)
      if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);

  out << "mean +- sample std over runs\n";
  out << std::left << std::setw(8) << "method" << std::setw(6) << "runs" << std::setw(18)
      << "psnr_db" << std::setw(18) << "ssim" << std::setw(10) << "cf";
  for (const auto& l : labels) out << std::setw(18) << l;
  out << "\n";
  for (const auto& r : rows) {
    char cf[32];
    std::snprintf(cf, sizeof cf, "%.3f", r.cf.mean);
    out << std::setw(8) << r.method << std::setw(6) << r.runs << std::setw(18)
        << cli::mean_std(r.psnr) << std::setw(18) << cli::mean_std(r.ssim, 4) << std::setw(10)
        << cf;
    for (const auto& l : labels) {
      auto it = r.attacks.find(l);
      out << std::setw(18) << (it == r.attacks.end() ? "-" : cli::mean_std(it->second));
    }
    out << "\n";
  }
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first failure
// in index order is rethrown after every worker has stopped.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Image load_target(const std::string& path) { return io::load(path); }

// Output raster for decode-style commands: the target image's size when one
// is given, else explicit --height/--width.
CoordGrid output_grid(const std::optional<Image>& target, int height, int width) {
  if (target) return CoordGrid(target->height(), target->width());
  if (height < 1 || width < 1) throw UsageError("give --image or both --height and --width");
  return CoordGrid(height, width);
}

// ---------------------------------------------------------------- fit

struct FitOptions {
  std::string image;
  std::string method = "siren";
  int width = 128;
  int depth = 4;
  int steps = 2000;
  double lr = 0.0;
  int seeds = 1;
  std::uint64_t seed = 0;
  double omega0 = 30.0;
  int fourier_m = 128;
  double fourier_sigma = 10.0;
  std::string quant = "f32";
  std::vector<std::size_t> lose;
  std::vector<double> noise;
  int trials = 10;
  unsigned threads = 0;
  std::string out_dir;

  ModelSpec spec() const {
    if (method == "fourier") return ModelSpec::fourier(width, depth, fourier_m, fourier_sigma);
    return ModelSpec::siren(width, depth, omega0);
  }

  // Arguments that reproduce the run for one seed.
  std::vector<std::string> replay_args(std::uint64_t s) const {
    std::vector<std::string> a = {"fit",       "--image",   absolute(image),
                                  "--method",  method,      "--width",
                                  std::to_string(width),    "--depth",
                                  std::to_string(depth),    "--steps",
                                  std::to_string(steps),    "--lr",
                                  cli::exact(lr),           "--seed",
                                  std::to_string(s),        "--seeds",
                                  "1",                      "--omega0",
                                  cli::exact(omega0),       "--fourier-m",
                                  std::to_string(fourier_m), "--fourier-sigma",
                                  cli::exact(fourier_sigma), "--quant",
                                  quant,                    "--trials",
                                  std::to_string(trials)};
    if (!lose.empty()) a.insert(a.end(), {"--lose-neurons", join(lose)});
    if (!noise.empty()) a.insert(a.end(), {"--noise-sigma", join(noise)});
    a.insert(a.end(), {"--out-dir", absolute(out_dir)});
    return a;
  }
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<std::uint8_t> bitstream;
  Image render;
  std::vector<double> loss_curve;
  std::vector<Image> stage_renders;
  std::vector<double> stage_psnr;
  TrialReport report;
};

SeedRun fit_one(const FitOptions& o, const Image& target, std::uint64_t seed) {
  const ModelSpec spec = o.spec();
  TrainConfig cfg;
  cfg.total_steps = o.steps;
  cfg.learning_rate = o.lr;
  cfg.seed = seed;

  SeedRun run;
  run.seed = seed;
  ParamSet model;
  if (o.method == "spinr") {
    SpinrResult r = fit_spinr(spec, target, cfg);
    model = std::move(r.model);
    run.loss_curve = std::move(r.loss_curve);
    for (const Image& img : r.stage_renders) run.stage_psnr.push_back(evaluate(img, target).psnr);
    run.stage_renders = std::move(r.stage_renders);
  } else {
    FitResult r = fit(spec, target, cfg);
    model = std::move(r.model);
    run.loss_curve = std::move(r.loss_curve);
  }

  const auto quant = stream::parse_quant_mode(o.quant);
  run.bitstream = stream::serialize(model, spec, quant).bytes();
  // Everything below is scored on what a receiver would reconstruct.
  const ParamSet received = stream::deserialize(run.bitstream, stream::DecodeMode::kStrict).model;
  run.render = render(received, CoordGrid(target.height(), target.width()));
  const Fidelity f = evaluate(run.render, target);

  TrialReport& rep = run.report;
  rep.method = o.method;
  rep.seed = seed;
  rep.param_count = spec.param_count();
  rep.psnr = f.psnr;
  rep.ssim = f.ssim;
  rep.cf = compression_factor(raw_image_bytes(target.height(), target.width()),
                              run.bitstream.size());
  for (const AttackSpec& a : attack_specs(o.lose, o.noise, {}, o.trials, seed))
    rep.attacks[a.label()] = run_trials(received, target, a).summary();
  return run;
}

int cmd_fit(const FitOptions& o) {
  if (o.method != "siren" && o.method != "fourier" && o.method != "spinr")
    throw UsageError("--method must be siren, fourier or spinr");
  if (o.seeds < 1) throw UsageError("--seeds must be >= 1");
  const ModelSpec spec = o.spec();
  spec.validate();
  stream::parse_quant_mode(o.quant);
  const Image target = load_target(o.image);

  std::vector<SeedRun> runs(static_cast<std::size_t>(o.seeds));
  std::mutex log_mutex;
  const unsigned threads = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
  parallel_for(runs.size(), threads, [&](std::size_t i) {
    runs[i] = fit_one(o, target, o.seed + i);
    std::lock_guard lock(log_mutex);
    std::cerr << "seed " << runs[i].seed << ": psnr " << cli::db(runs[i].report.psnr) << " dB\n";
  });

  Writer out(o.out_dir);
  std::vector<TrialReport> reports;
  std::string report_lines;
  for (const SeedRun& run : runs) {
    Writer seed_out(out.path("seed_" + std::to_string(run.seed)));
    seed_out.bytes("model.spnr", run.bitstream);
    seed_out.image("render.ppm", run.render);
    std::string curve = "step,loss\n";
    for (std::size_t s = 0; s < run.loss_curve.size(); ++s)
      curve += std::to_string(s) + "," + cli::exact(run.loss_curve[s]) + "\n";
    seed_out.text("loss.csv", curve);
    for (std::size_t k = 0; k < run.stage_renders.size(); ++k)
      seed_out.image("stage_" + std::to_string(k + 1) + ".ppm", run.stage_renders[k]);

    json record = cli::report_json(run.report);
    if (!run.stage_psnr.empty()) record["stage_psnr"] = cli::reals(run.stage_psnr);
    record["bytes"] = run.bitstream.size();
    seed_out.json_file("report.json", record);
    report_lines += record.dump() + "\n";
    reports.push_back(run.report);

    json config = {{"method", o.method},
                   {"family", std::string(to_string(spec.family))},
                   {"width", o.width},
                   {"depth", o.depth},
                   {"steps", o.steps},
                   {"learning_rate", o.lr > 0 ? o.lr : default_learning_rate(spec.family)},
                   {"omega0", o.omega0},
                   {"fourier_m", o.fourier_m},
                   {"fourier_sigma", o.fourier_sigma},
                   {"quant", o.quant},
                   {"lose_neurons", o.lose},
                   {"noise_sigma", o.noise},
                   {"trials", o.trials},
                   {"image_height", target.height()},
                   {"image_width", target.width()}};
    auto outputs = seed_out.written();
    outputs.push_back("manifest.json");
    seed_out.json_file("manifest.json", manifest("fit", o.replay_args(run.seed), config,
                                                 {run.seed}, {o.image}, outputs));
  }
  out.text("report.jsonl", report_lines);
  const AggregateReport agg = aggregate(reports);
  out.json_file("aggregate.json", cli::aggregate_json(agg));

  print_aggregate_table(std::cout, {agg});
  if (o.method == "spinr") {
    for (const SeedRun& run : runs) {
      std::cout << "seed " << run.seed << " stage psnr:";
      for (double p : run.stage_psnr) std::cout << ' ' << cli::db(p);
      std::cout << "\n";
    }
  }
  return kOk;
}

// ---------------------------------------------------------------- attack

struct AttackOptions {
  std::string model;
  std::string image;
  std::vector<std::size_t> lose;
  std::vector<double> noise;
  std::vector<std::size_t> corrupt;
  int trials = 10;
  std::uint64_t seed = 0;
  std::string out_dir;

  std::vector<std::string> replay_args() const {
    std::vector<std::string> a = {"attack",   "--model",  absolute(model),         "--image",
                                  absolute(image), "--trials", std::to_string(trials), "--seed",
                                  std::to_string(seed)};
    if (!lose.empty()) a.insert(a.end(), {"--lose-neurons", join(lose)});
    if (!noise.empty()) a.insert(a.end(), {"--noise-sigma", join(noise)});
    if (!corrupt.empty()) a.insert(a.end(), {"--corrupt-layer", join(corrupt)});
    a.insert(a.end(), {"--out-dir", absolute(out_dir)});
    return a;
  }
};

int cmd_attack(const AttackOptions& o) {
  const auto bytes = io::read_file(o.model);
  const stream::DecodeResult decoded = stream::deserialize(bytes, stream::DecodeMode::kStrict);
  const Image target = load_target(o.image);
  const Fidelity base = evaluate(render(decoded.model, CoordGrid(target.height(), target.width())), target);

  std::vector<AttackResult> results;
  for (const AttackSpec& a : attack_specs(o.lose, o.noise, o.corrupt, o.trials, o.seed))
    results.push_back(run_trials(decoded.model, target, a));

  Writer out(o.out_dir);
  std::string lines = json({{"label", "base"}, {"psnr", cli::real(base.psnr)},
                            {"ssim", base.ssim ? json(cli::real(*base.ssim)) : json(nullptr)}})
                          .dump() +
                      "\n";
  for (const auto& r : results) lines += cli::attack_json(r).dump() + "\n";
  out.text("attack.jsonl", lines);

  std::printf("%-14s %-8s %-18s %-18s\n", "attack", "trials", "psnr_db", "ssim");
  std::printf("%-14s %-8s %-18s %-18s\n", "base", "-", cli::db(base.psnr).c_str(),
              base.ssim ? std::to_string(*base.ssim).c_str() : "-");
  for (const auto& r : results)
    std::printf("%-14s %-8d %-18s %-18s\n", r.spec.label().c_str(), r.spec.trials,
                cli::mean_std(r.psnr).c_str(), r.ssim ? cli::mean_std(*r.ssim, 4).c_str() : "-");

  json config = {{"lose_neurons", o.lose}, {"noise_sigma", o.noise},
                 {"corrupt_layer", o.corrupt}, {"trials", o.trials}};
  auto outputs = out.written();
  outputs.push_back("manifest.json");
  out.json_file("manifest.json",
                manifest("attack", o.replay_args(), config, {o.seed}, {o.model, o.image}, outputs));
  return kOk;
}

// ---------------------------------------------------------------- stream

struct StreamOptions {
  std::string model;
  std::string image;
  int height = 0;
  int width = 0;
  double loss_prob = 0.0;
  std::size_t packet_size = 1024;
  std::uint64_t seed = 0;
  int truncate_after = 0;
  std::string out_dir;

  std::vector<std::string> replay_args() const {
    std::vector<std::string> a = {"stream", "--model", absolute(model)};
    if (!image.empty()) a.insert(a.end(), {"--image", absolute(image)});
    if (height) a.insert(a.end(), {"--height", std::to_string(height)});
    if (width) a.insert(a.end(), {"--width", std::to_string(width)});
    a.insert(a.end(), {"--loss-prob", cli::exact(loss_prob), "--packet-size",
                       std::to_string(packet_size), "--seed", std::to_string(seed),
                       "--truncate-after", std::to_string(truncate_after), "--out-dir",
                       absolute(out_dir)});
    return a;
  }
};

int cmd_stream(const StreamOptions& o) {
  stream::Bitstream bits = stream::split_records(io::read_file(o.model));
  if (o.truncate_after > 0) bits = bits.truncated_to_stage(o.truncate_after);
  std::optional<Image> target;
  if (!o.image.empty()) target = load_target(o.image);
  const CoordGrid grid = output_grid(target, o.height, o.width);

  const stream::ChannelConfig channel{o.packet_size, o.loss_prob, o.seed};
  const stream::TransmitResult tx = stream::transmit(bits, channel);

  Writer out(o.out_dir);
  stream::ProgressiveDecoder decoder(bits.header);
  std::string log;
  std::optional<stream::Frame> latest;
  std::map<int, double> stage_psnr;
  for (std::size_t i = 0; i < tx.sent.size(); ++i) {
    const stream::Packet& p = tx.sent[i];
    json entry = {{"packet", i},
                  {"chunk", p.chunk_id},
                  {"frag", p.frag_index},
                  {"of", p.frag_count},
                  {"bytes", p.payload.size()},
                  {"delivered", static_cast<bool>(tx.delivered_mask[i])}};
    if (tx.delivered_mask[i]) {
      if (auto done = decoder.accept(p)) {
        entry["completed"] = *done;
        // Each completed chunk supersedes the previous reconstruction.
        if (auto frame = decoder.decode(grid)) {
          entry["stage"] = frame->stage;
          const bool first_at_stage = !latest || frame->stage != latest->stage;
          if (target) {
            const double p_db = evaluate(frame->image, *target).psnr;
            entry["psnr"] = cli::real(p_db);
            stage_psnr[frame->stage] = p_db;
          }
          if (first_at_stage)
            out.image("stage_" + std::to_string(frame->stage) + ".ppm", frame->image);
          latest = std::move(frame);
        }
      }
    }
    log += entry.dump() + "\n";
  }
  out.text("delivery.jsonl", log);

  json summary = {{"packets_sent", tx.sent.size()},
                  {"packets_delivered", tx.delivered.size()},
                  {"delivered_fraction", tx.delivered_fraction()},
                  {"chunks_sent", bits.chunks.size()},
                  {"chunks_usable", decoder.available()},
                  {"stage", latest ? latest->stage : 0}};
  if (latest && target) summary["psnr"] = cli::real(evaluate(latest->image, *target).psnr);
  if (latest) out.image("final.ppm", latest->image);
  out.json_file("summary.json", summary);

  json config = {{"loss_prob", o.loss_prob},
                 {"packet_size", o.packet_size},
                 {"truncate_after", o.truncate_after},
                 {"height", grid.height()},
                 {"width", grid.width()}};
  std::vector<fs::path> inputs = {o.model};
  if (!o.image.empty()) inputs.push_back(o.image);
  auto outputs = out.written();
  outputs.push_back("manifest.json");
  out.json_file("manifest.json",
                manifest("stream", o.replay_args(), config, {o.seed}, inputs, outputs));

  std::printf("packets %zu sent, %zu delivered (%.4f)\n", tx.sent.size(), tx.delivered.size(),
              tx.delivered_fraction());
  std::printf("chunks %zu of %zu usable\n", decoder.available().size(), bits.chunks.size());
  for (const auto& [stage, p] : stage_psnr) std::printf("stage %d psnr %s\n", stage, cli::db(p).c_str());
  if (!latest) {
    std::fprintf(stderr, "spinr: undecodable, core chunks (L0 / output%s) were lost\n",
                 bits.header.spec.family == Family::kFourier ? " / B" : "");
    return kDecodeFailure;
  }
  std::printf("reached stage %d\n", latest->stage);
  return kOk;
}

// ---------------------------------------------------------------- decode

struct DecodeOptions {
  std::string model;
  std::string out;
  std::string image;
  int height = 0;
  int width = 0;
  bool partial = false;

  std::vector<std::string> replay_args() const {
    std::vector<std::string> a = {"decode", "--model", absolute(model), "--out", absolute(out)};
    if (!image.empty()) a.insert(a.end(), {"--image", absolute(image)});
    if (height) a.insert(a.end(), {"--height", std::to_string(height)});
    if (width) a.insert(a.end(), {"--width", std::to_string(width)});
    if (partial) a.push_back("--partial");
    return a;
  }
};

int cmd_decode(const DecodeOptions& o) {
  const auto bytes = io::read_file(o.model);
  std::optional<Image> target;
  if (!o.image.empty()) target = load_target(o.image);
  const CoordGrid grid = output_grid(target, o.height, o.width);

  const auto mode = o.partial ? stream::DecodeMode::kPartial : stream::DecodeMode::kStrict;
  const stream::DecodeResult d = stream::deserialize(bytes, mode);
  const auto frame = stream::progressive_decode(d.model, d.present, d.header.spec, grid);
  if (!frame) {
    std::fprintf(stderr, "spinr: undecodable, core chunks missing or corrupt\n");
    return kDecodeFailure;
  }
  const fs::path out_path = o.out;
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  io::save(frame->image, out_path);

  std::printf("stage %d, %zu chunks present, %zu missing, %zu corrupt\n", frame->stage,
              d.present.size(), d.missing.size(), d.corrupt.size());
  if (target) std::printf("psnr %s dB\n", cli::db(evaluate(frame->image, *target).psnr).c_str());

  std::vector<fs::path> inputs = {o.model};
  if (!o.image.empty()) inputs.push_back(o.image);
  json config = {{"partial", o.partial}, {"height", grid.height()}, {"width", grid.width()},
                 {"stage", frame->stage}};
  const json m = manifest("decode", o.replay_args(), config, {}, inputs,
                          {out_path.filename().string()});
  const std::string text = m.dump(2) + "\n";
  io::write_file(out_path.string() + ".manifest.json",
                 {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  return kOk;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_path) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in))
        if (e.is_regular_file() && e.path().filename() == "report.jsonl") files.push_back(e.path());
    } else {
      files.emplace_back(in);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no report.jsonl files found");

  std::map<std::string, std::vector<TrialReport>> by_method;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw std::runtime_error("cannot open " + f.string());
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (line.empty()) continue;
      try {
        const TrialReport r = cli::report_from_json(json::parse(line));
        by_method[r.method].push_back(r);
      } catch (const json::exception& e) {
        throw ParseError(f.string() + ":" + std::to_string(number) + ": " + e.what(), 0);
      }
    }
  }
  std::vector<AggregateReport> rows;
  std::string lines;
  for (const auto& [method, reports] : by_method) {
    rows.push_back(aggregate(reports));
    lines += cli::aggregate_json(rows.back()).dump() + "\n";
  }
  print_aggregate_table(std::cout, rows);
  if (!out_path.empty())
    io::write_file(out_path, {reinterpret_cast<const std::uint8_t*>(lines.data()), lines.size()});
  return kOk;
}

// ---------------------------------------------------------------- main

int run(std::vector<std::string> args);

int cmd_replay(const std::string& manifest_path, const std::string& out_dir) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open " + manifest_path);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(manifest_path + ": " + e.what(), 0);
  }
  auto args = m.at("args").get<std::vector<std::string>>();
  if (!out_dir.empty()) {
    auto it = std::find(args.begin(), args.end(), "--out-dir");
    if (it == args.end() || it + 1 == args.end())
      throw UsageError("manifest command has no --out-dir to override");
    *(it + 1) = absolute(out_dir);
  }
  return run(args);
}

int run(std::vector<std::string> args) {
  CLI::App app{"Implicit neural image codec with staged training and streaming", "spinr"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  FitOptions fit_o;
  auto* fit_cmd = app.add_subcommand("fit", "Train a model on an image and serialize it");
  fit_cmd->add_option("--image", fit_o.image, "Target image (P6 PPM or PNG)")->required();
  fit_cmd->add_option("--method", fit_o.method, "siren, fourier or spinr")->capture_default_str();
  fit_cmd->add_option("--width", fit_o.width, "Hidden width h")->capture_default_str();
  fit_cmd->add_option("--depth", fit_o.depth, "Hidden layers n")->capture_default_str();
  fit_cmd->add_option("--steps", fit_o.steps, "Total optimizer steps")->capture_default_str();
  fit_cmd->add_option("--lr", fit_o.lr, "Learning rate (0: family default)");
  fit_cmd->add_option("--seeds", fit_o.seeds, "Number of seeds, starting at --seed")->capture_default_str();
  fit_cmd->add_option("--seed", fit_o.seed, "First seed")->capture_default_str();
  fit_cmd->add_option("--omega0", fit_o.omega0, "Sine frequency")->capture_default_str();
  fit_cmd->add_option("--fourier-m", fit_o.fourier_m, "Fourier features m")->capture_default_str();
  fit_cmd->add_option("--fourier-sigma", fit_o.fourier_sigma, "Std of B")->capture_default_str();
  fit_cmd->add_option("--quant", fit_o.quant, "f32, u8 or u16")->capture_default_str();
  fit_cmd->add_option("--lose-neurons", fit_o.lose, "Lost-neuron attacks, e.g. 1,5,10")->delimiter(',');
  fit_cmd->add_option("--noise-sigma", fit_o.noise, "Noise attacks, e.g. 1e-4,1e-2")->delimiter(',');
  fit_cmd->add_option("--trials", fit_o.trials, "Trials per attack")->capture_default_str();
  fit_cmd->add_option("--threads", fit_o.threads, "Worker threads (0: all cores)");
  fit_cmd->add_option("--out-dir", fit_o.out_dir, "Output directory")->required();

  AttackOptions atk_o;
  auto* atk_cmd = app.add_subcommand("attack", "Measure degradation under parameter attacks");
  atk_cmd->add_option("--model", atk_o.model, "Bitstream file")->required();
  atk_cmd->add_option("--image", atk_o.image, "Target image")->required();
  atk_cmd->add_option("--lose-neurons", atk_o.lose, "Neuron counts")->delimiter(',');
  atk_cmd->add_option("--noise-sigma", atk_o.noise, "Noise levels")->delimiter(',');
  atk_cmd->add_option("--corrupt-layer", atk_o.corrupt, "Layer indices to zero")->delimiter(',');
  atk_cmd->add_option("--trials", atk_o.trials, "Trials per attack")->capture_default_str();
  atk_cmd->add_option("--seed", atk_o.seed, "Attack seed")->capture_default_str();
  atk_cmd->add_option("--out-dir", atk_o.out_dir, "Output directory")->required();

  StreamOptions str_o;
  auto* str_cmd = app.add_subcommand("stream", "Simulate lossy transmission and progressive decoding");
  str_cmd->add_option("--model", str_o.model, "Bitstream file")->required();
  str_cmd->add_option("--image", str_o.image, "Reference image (size and PSNR)");
  str_cmd->add_option("--height", str_o.height, "Render height without --image");
  str_cmd->add_option("--width", str_o.width, "Render width without --image");
  str_cmd->add_option("--loss-prob", str_o.loss_prob, "Packet loss probability")->capture_default_str();
  str_cmd->add_option("--packet-size", str_o.packet_size, "Packet payload bytes")->capture_default_str();
  str_cmd->add_option("--seed", str_o.seed, "Channel seed")->capture_default_str();
  str_cmd->add_option("--truncate-after", str_o.truncate_after, "Send only stages 1..k (0: all)");
  str_cmd->add_option("--out-dir", str_o.out_dir, "Output directory")->required();

  DecodeOptions dec_o;
  auto* dec_cmd = app.add_subcommand("decode", "Render a bitstream to a P6 image");
  dec_cmd->add_option("--model", dec_o.model, "Bitstream file")->required();
  dec_cmd->add_option("--out", dec_o.out, "Output .ppm")->required();
  dec_cmd->add_option("--image", dec_o.image, "Reference image (size and PSNR)");
  dec_cmd->add_option("--height", dec_o.height, "Render height without --image");
  dec_cmd->add_option("--width", dec_o.width, "Render width without --image");
  dec_cmd->add_flag("--partial", dec_o.partial, "Decode whatever verifies (prefix rule)");

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* rep_cmd = app.add_subcommand("report", "Aggregate report.jsonl files");
  rep_cmd->add_option("inputs", report_inputs, "Directories or report.jsonl files")->required();
  rep_cmd->add_option("--out", report_out, "Write aggregates as JSON lines");

  std::string replay_manifest, replay_out;
  auto* rpl_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  rpl_cmd->add_option("manifest", replay_manifest, "manifest.json")->required();
  rpl_cmd->add_option("--out-dir", replay_out, "Write outputs here instead");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_o);
    if (atk_cmd->parsed()) return cmd_attack(atk_o);
    if (str_cmd->parsed()) return cmd_stream(str_o);
    if (dec_cmd->parsed()) return cmd_decode(dec_o);
    if (rep_cmd->parsed()) return cmd_report(report_inputs, report_out);
    if (rpl_cmd->parsed()) return cmd_replay(replay_manifest, replay_out);
  } catch (const UsageError& e) {
    std::cerr << "spinr: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "spinr: parse error: " << e.what() << "\n";
    return kParseFailure;
  } catch (const TrainingError& e) {
    std::cerr << "spinr: training failed: " << e.what() << "\n";
    return kTrainingFailure;
  } catch (const DecodeError& e) {
    std::cerr << "spinr: decode failed: " << e.what() << "\n";
    return kDecodeFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "spinr: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "spinr: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc));
}
