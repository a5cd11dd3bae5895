// rotpad: stereo primary-ambient decomposition and quad up-mixing.
//
//   rotpad decompose in.wav [--mode pad|ce] [-o DIR]
//   rotpad upmix in.wav --dial N [--layout quad|5.1] [-o out.wav]
//   rotpad rfr quad.wav
//   rotpad loudness file.wav
//   rotpad serve --items DIR [--port P]
//
// Metrics go to stdout, diagnostics to stderr. Usage errors exit with 2,
// runtime failures with 1.

#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "rotpad/audio_io.h"
#include "rotpad/audition_service.h"
#include "rotpad/errors.h"
#include "rotpad/loudness.h"
#include "rotpad/pipeline.h"
#include "rotpad/upmix.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rotpad;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string input;
  std::string output;
  std::string mode = "pad";
  int dial = kReferenceDial;
  std::string layout = "quad";
  std::size_t frame = 1024;
  std::size_t hop = 512;
  std::size_t cov_smooth = 5;
  std::size_t unmix_smooth = 3;
  double target_lufs = 0.0;
  std::string format = "float32";
  std::string config;
  std::string items;
  std::string log;
  int port = 8080;
  bool json = false;
  bool target_from_config = false;
};

// JSON number, or the strings "-inf"/"inf" for the non-finite RFR sentinels.
json metric_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

std::string metric_text(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

double energy_db(const AudioBuffer& buf) {
  double e = 0.0;
  for (const auto& ch : buf.samples)
    for (double v : ch) e += v * v;
  return e > 0 ? 10.0 * std::log10(e) : -std::numeric_limits<double>::infinity();
}

// Config-file values apply only to options not given on the command line.
void apply_config(const CLI::App& cmd, Options& o) {
  if (o.config.empty()) return;
  std::ifstream in(o.config);
  if (!in) throw UsageError("cannot read config " + o.config);
  const json j = json::parse(in, nullptr, false);
  if (!j.is_object()) throw UsageError("config " + o.config + " is not a JSON object");
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (!j.contains(key)) return false;
    const CLI::Option* opt = cmd.get_option_no_throw(flag);
    if (opt && opt->count() > 0) return false;
    try {
      field = j.at(key).get<std::decay_t<decltype(field)>>();
    } catch (const json::exception&) {
      throw UsageError(std::string("config field '") + key + "' has the wrong type");
    }
    return true;
  };
  take("mode", "--mode", o.mode);
  take("dial", "--dial", o.dial);
  take("layout", "--layout", o.layout);
  take("frame", "--frame", o.frame);
  take("hop", "--hop", o.hop);
  take("cov_smooth", "--cov-smooth", o.cov_smooth);
  take("unmix_smooth", "--unmix-smooth", o.unmix_smooth);
  o.target_from_config = take("target_lufs", "--target-lufs", o.target_lufs);
  take("format", "--format", o.format);
  take("port", "--port", o.port);
  take("items", "--items", o.items);
}

PipelineConfig pipeline_from(const CLI::App& cmd, const Options& o) {
  PipelineConfig cfg;
  cfg.stft.frame_len = o.frame;
  cfg.stft.hop = o.hop;
  cfg.cov_smooth_frames = o.cov_smooth;
  cfg.unmix_smooth_frames = o.unmix_smooth;
  try {
    cfg.mode = parse_mode(o.mode);
    const CLI::Option* target = cmd.get_option_no_throw("--target-lufs");
    if (o.target_from_config || (target && target->count() > 0)) cfg.loudness_target = o.target_lufs;
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

AudioBuffer read_stereo(const std::string& path) {
  AudioBuffer in = read_wav(path);
  if (in.channels() != 2) throw UsageError("stereo input required");
  return in;
}

void write_checked(const fs::path& path, const AudioBuffer& buf, SampleFormat format) {
  const WriteReport report = write_wav(path, buf, format);
  if (report.clipped_samples > 0)
    std::cerr << "warning: " << path.string() << ": " << report.clipped_samples
              << " samples clipped to full scale\n";
}

int cmd_decompose(const CLI::App& cmd, const Options& o) {
  const PipelineConfig cfg = pipeline_from(cmd, o);
  const SampleFormat format = parse_sample_format(o.format);
  const AudioBuffer in = read_stereo(o.input);
  const fs::path dir = o.output.empty() ? fs::path(o.input).parent_path() : fs::path(o.output);
  if (!dir.empty()) fs::create_directories(dir);
  const std::string stem = fs::path(o.input).stem().string();

  std::vector<std::pair<fs::path, AudioBuffer>> outputs;
  if (cfg.mode == DecompositionMode::Pad) {
    PadSignals pad = decompose_pad(in, cfg);
    outputs.emplace_back(dir / (stem + ".primary.wav"), std::move(pad.primary));
    outputs.emplace_back(dir / (stem + ".ambient.wav"), std::move(pad.ambient));
  } else {
    CeSignals ce = decompose_ce(in, cfg);
    AudioBuffer left(2, in.frames(), in.sample_rate);
    AudioBuffer right(2, in.frames(), in.sample_rate);
    left.samples[0] = std::move(ce.left.samples[0]);
    right.samples[1] = std::move(ce.right.samples[0]);
    outputs.emplace_back(dir / (stem + ".left.wav"), std::move(left));
    outputs.emplace_back(dir / (stem + ".right.wav"), std::move(right));
    outputs.emplace_back(dir / (stem + ".center.wav"), std::move(ce.center));
  }

  const double input_db = energy_db(in);
  json records = json::array();
  for (const auto& [path, buf] : outputs) {
    write_checked(path, buf, format);
    const double rel = energy_db(buf) - input_db;
    if (o.json)
      records.push_back({{"file", path.string()}, {"energy_rel_db", metric_json(rel)}});
    else
      std::cout << path.string() << "  energy " << metric_text(rel) << " dB re input\n";
  }
  if (o.json) std::cout << records.dump() << '\n';
  return 0;
}

int cmd_upmix(const CLI::App& cmd, const Options& o) {
  const PipelineConfig cfg = pipeline_from(cmd, o);
  if (o.layout != "quad" && o.layout != "5.1") throw UsageError("--layout must be quad or 5.1");
  DialSetting dial;
  try {
    dial = DialSetting::from_index(o.dial);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const SampleFormat format = parse_sample_format(o.format);
  const AudioBuffer in = read_stereo(o.input);
  const double target = cfg.loudness_target.value_or(integrated_loudness(in));
  if (!std::isfinite(target)) throw Error("input is silent; nothing to normalize");

  const PadSignals pad = decompose_pad(in, cfg);
  const QuadRender r = render_normalized(in, pad, dial, target);

  fs::path out = o.output;
  if (out.empty()) out = fs::path(o.input).replace_extension("").string() + ".dial" + std::to_string(o.dial) + ".wav";
  write_checked(out, o.layout == "5.1" ? quad_to_surround51(r.audio) : r.audio, format);

  if (o.json) {
    std::cout << json{{"rfr_db", metric_json(r.rfr_db)},
                      {"loudness_lufs", metric_json(r.loudness_lufs)},
                      {"norm_gain_db", metric_json(r.norm_gain_db)},
                      {"dial_index", dial.index},
                      {"file", out.string()}}
                     .dump()
              << '\n';
  } else {
    std::cout << "dial " << dial.index << " (" << to_string(dial.region) << ")\n"
              << "rfr_db " << metric_text(r.rfr_db) << '\n'
              << "loudness_lufs " << metric_text(r.loudness_lufs) << '\n'
              << "norm_gain_db " << metric_text(r.norm_gain_db) << '\n'
              << "wrote " << out.string() << '\n';
  }
  return 0;
}

// 5.1 files are reduced to their FL FR SL SR channels.
AudioBuffer quad_view(const AudioBuffer& buf) {
  if (buf.channels() == 4) return buf;
  if (buf.channels() == 6) {
    AudioBuffer q(4, buf.frames(), buf.sample_rate);
    const std::vector<std::string> want = {"FL", "FR", "SL", "SR"};
    for (std::size_t i = 0; i < 4; ++i) {
      auto it = std::find(buf.layout.begin(), buf.layout.end(), want[i]);
      if (it == buf.layout.end()) throw UsageError("6-channel file lacks " + want[i]);
      q.samples[i] = buf.samples[std::size_t(it - buf.layout.begin())];
    }
    return q;
  }
  throw UsageError("RFR needs a 4-channel (FL FR SL SR) or 5.1 file");
}

int cmd_rfr(const Options& o) {
  const double v = rfr_db(quad_view(read_wav(o.input)));
  if (o.json)
    std::cout << json{{"rfr_db", metric_json(v)}}.dump() << '\n';
  else
    std::cout << "rfr_db " << metric_text(v) << '\n';
  return 0;
}

int cmd_loudness(const Options& o) {
  const double v = integrated_loudness(read_wav(o.input));
  if (o.json)
    std::cout << json{{"loudness_lufs", metric_json(v)}}.dump() << '\n';
  else
    std::cout << "loudness_lufs " << metric_text(v) << '\n';
  return 0;
}

std::atomic<httplib::Server*> g_server{nullptr};

int cmd_serve(const CLI::App& cmd, const Options& o) {
  if (o.items.empty()) throw UsageError("--items is required");
  ServiceConfig cfg;
  cfg.items_dir = o.items;
  cfg.log_path = o.log;
  cfg.pipeline = pipeline_from(cmd, o);
  std::cerr << "analyzing items in " << o.items << " ...\n";
  AuditionService service(std::move(cfg));
  std::cerr << service.list_items().size() << " items ready\n";

  httplib::Server server;
  install_routes(server, service);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (auto* s = g_server.load()) s->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (auto* s = g_server.load()) s->stop();
  });
  std::cerr << "listening on http://127.0.0.1:" << o.port << '\n';
  if (!server.listen("127.0.0.1", o.port)) throw Error("cannot bind port " + std::to_string(o.port));
  return 0;
}

void add_pipeline_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--frame", o.frame, "STFT frame length in samples");
  cmd->add_option("--hop", o.hop, "STFT hop in samples");
  cmd->add_option("--cov-smooth", o.cov_smooth, "covariance smoothing frames (odd)");
  cmd->add_option("--unmix-smooth", o.unmix_smooth, "un-mixing matrix smoothing frames (odd)");
  cmd->add_option("--config", o.config, "JSON config; command-line flags take precedence");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  if (const char* env = std::getenv("ROTPAD_PORT")) o.port = std::atoi(env);

  CLI::App app{"Stereo primary-ambient decomposition and quad up-mixing"};
  app.require_subcommand(1);

  auto* decompose = app.add_subcommand("decompose", "split a stereo file into primary/ambient or l/r/c stems");
  decompose->add_option("input", o.input, "stereo WAV")->required();
  decompose->add_option("--mode", o.mode, "pad or ce");
  decompose->add_option("-o,--output", o.output, "output directory");
  decompose->add_option("--format", o.format, "pcm16, pcm24 or float32");
  decompose->add_flag("--json", o.json, "print a JSON record");
  add_pipeline_flags(decompose, o);

  auto* upmix = app.add_subcommand("upmix", "render a loudness-normalized quad (or 5.1) up-mix");
  upmix->add_option("input", o.input, "stereo WAV")->required();
  upmix->add_option("--dial", o.dial, "dial position 0-30")->required();
  upmix->add_option("--layout", o.layout, "quad or 5.1");
  upmix->add_option("--target-lufs", o.target_lufs, "loudness target; default matches the input");
  upmix->add_option("-o,--output", o.output, "output WAV");
  upmix->add_option("--format", o.format, "pcm16, pcm24 or float32");
  upmix->add_flag("--json", o.json, "print a JSON record");
  add_pipeline_flags(upmix, o);

  auto* rfr = app.add_subcommand("rfr", "rear-to-front energy ratio of a quad file");
  rfr->add_option("input", o.input, "4-channel WAV")->required();
  rfr->add_flag("--json", o.json, "print a JSON record");

  auto* loudness = app.add_subcommand("loudness", "integrated loudness in LUFS");
  loudness->add_option("input", o.input, "WAV file")->required();
  loudness->add_flag("--json", o.json, "print a JSON record");

  auto* serve = app.add_subcommand("serve", "run the local audition service");
  serve->add_option("--items", o.items, "directory of stereo WAV items");
  serve->add_option("--port", o.port, "TCP port (default $ROTPAD_PORT or 8080)");
  serve->add_option("--log", o.log, "rating log path (default <items>/ratings.jsonl)");
  serve->add_option("--target-lufs", o.target_lufs, "loudness target; default matches each item");
  add_pipeline_flags(serve, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    for (CLI::App* cmd : {decompose, upmix, serve}) {
      if (cmd->parsed()) apply_config(*cmd, o);
    }
    if (decompose->parsed()) return cmd_decompose(*decompose, o);
    if (upmix->parsed()) return cmd_upmix(*upmix, o);
    if (rfr->parsed()) return cmd_rfr(o);
    if (loudness->parsed()) return cmd_loudness(o);
    if (serve->parsed()) return cmd_serve(*serve, o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
