#include "rotpad/audition_service.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>

#include "httplib.h"
#include "rotpad/audio_io.h"
#include "rotpad/loudness.h"

namespace rotpad {

using nlohmann::json;

namespace {

const std::set<std::string> kClassTags = {"speech", "singing", "non-voice", "unclassified"};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int checked_int(const json& j, const char* key, int lo, int hi) {
  if (!j.contains(key) || !j.at(key).is_number_integer())
    throw InvalidArgument(std::string("field '") + key + "' must be an integer");
  const auto v = j.at(key).get<long long>();
  if (v < lo || v > hi)
    throw InvalidArgument(std::string("field '") + key + "' out of range [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");
  return int(v);
}

// Lower median / nearest-rank-below quantile of a sorted sample.
double quantile(const std::vector<double>& sorted, double p) {
  return sorted[std::size_t(std::floor(double(sorted.size() - 1) * p))];
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const Rating& r) {
  json trace = json::array();
  for (const auto& p : r.trace) trace.push_back({{"dial", p.dial}, {"time", p.time_s}});
  return {{"session_id", r.session_id}, {"item_id", r.item_id},   {"final_dial", r.final_dial},
          {"satisfaction", r.satisfaction}, {"timestamp", r.timestamp}, {"trace", trace}};
}

Rating rating_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("rating must be a JSON object");
  Rating r;
  for (const char* key : {"session_id", "item_id"}) {
    if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty())
      throw InvalidArgument(std::string("field '") + key + "' must be a non-empty string");
  }
  r.session_id = j.at("session_id").get<std::string>();
  r.item_id = j.at("item_id").get<std::string>();
  r.final_dial = checked_int(j, "final_dial", 0, kDialPositions - 1);
  r.satisfaction = checked_int(j, "satisfaction", kMinSatisfaction, kMaxSatisfaction);
  if (j.contains("timestamp") && j.at("timestamp").is_string()) r.timestamp = j.at("timestamp");
  if (j.contains("trace")) {
    if (!j.at("trace").is_array()) throw InvalidArgument("field 'trace' must be an array");
    for (const auto& p : j.at("trace")) {
      TracePoint tp;
      tp.dial = checked_int(p, "dial", 0, kDialPositions - 1);
      if (!p.contains("time") || !p.at("time").is_number())
        throw InvalidArgument("trace entries need a numeric 'time'");
      tp.time_s = p.at("time").get<double>();
      r.trace.push_back(tp);
    }
  }
  return r;
}

AuditionService::AuditionService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.pipeline.validate();
  namespace fs = std::filesystem;
  if (!fs::is_directory(cfg_.items_dir))
    throw Error("item directory " + cfg_.items_dir.string() + " does not exist");

  std::vector<fs::path> wavs;
  for (const auto& e : fs::directory_iterator(cfg_.items_dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (e.is_regular_file() && ext == ".wav") wavs.push_back(e.path());
  }
  std::sort(wavs.begin(), wavs.end());
  if (wavs.empty()) throw Error("no .wav items in " + cfg_.items_dir.string());

  for (const auto& path : wavs) {
    Item item;
    item.input = read_wav(path);
    if (item.input.channels() != 2) throw Error(path.string() + ": stereo input required");
    item.entry.item_id = path.stem().string();
    item.entry.title = item.entry.item_id;
    item.entry.duration_s = item.input.duration_s();

    fs::path sidecar = path;
    sidecar.replace_extension(".json");
    if (fs::exists(sidecar)) {
      std::ifstream in(sidecar);
      const json meta = json::parse(in, nullptr, /*allow_exceptions=*/false);
      if (meta.is_object()) {
        if (meta.contains("title") && meta["title"].is_string()) item.entry.title = meta["title"];
        if (meta.contains("class_tag") && meta["class_tag"].is_string() &&
            kClassTags.count(meta["class_tag"].get<std::string>()))
          item.entry.class_tag = meta["class_tag"];
      }
    }

    item.pad = decompose_pad(item.input, cfg_.pipeline);
    item.target_lufs = cfg_.pipeline.loudness_target.value_or(integrated_loudness(item.input));
    if (!std::isfinite(item.target_lufs)) throw Error(path.string() + ": item is silent");
    entries_.push_back(item.entry);
    items_.push_back(std::move(item));
  }

  if (cfg_.log_path.empty()) cfg_.log_path = cfg_.items_dir / "ratings.jsonl";
  if (fs::exists(cfg_.log_path)) {
    std::ifstream in(cfg_.log_path);
    std::string line;
    while (std::getline(in, line)) {
      // A torn final line from a crash is skipped, not fatal.
      const json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      try {
        ratings_.push_back(rating_from_json(j));
      } catch (const InvalidArgument&) {
      }
    }
  }
}

const AuditionService::Item& AuditionService::find(const std::string& item_id) const {
  for (const auto& item : items_)
    if (item.entry.item_id == item_id) return item;
  throw NotFound("unknown item '" + item_id + "'");
}

std::shared_ptr<const AuditionService::Cached> AuditionService::build(const Item& item, int dial) const {
  const QuadRender r =
      render_normalized(item.input, item.pad, DialSetting::from_index(dial), item.target_lufs);
  auto c = std::make_shared<Cached>();
  c->quad_wav = encode_wav(r.audio, SampleFormat::Float32);
  c->folded_wav = encode_wav(fold_down(r.audio), SampleFormat::Float32);
  c->rfr_db = r.rfr_db;
  c->loudness_lufs = r.loudness_lufs;
  c->norm_gain_db = r.norm_gain_db;
  return c;
}

void AuditionService::evict_locked(const Key& keep) {
  while (cache_bytes_ > cfg_.cache_budget_bytes && !lru_.empty()) {
    const Key victim = lru_.back();
    if (victim == keep) break;
    auto it = cache_.find(victim);
    cache_bytes_ -= it->second.bytes;
    lru_.pop_back();
    cache_.erase(it);
  }
}

RenderResult AuditionService::render(const std::string& item_id, int dial, bool fold) {
  const Item& item = find(item_id);
  DialSetting::from_index(dial);
  const Key key{item_id, dial};

  std::shared_future<std::shared_ptr<const Cached>> future;
  std::promise<std::shared_ptr<const Cached>> promise;
  bool owner = false;
  {
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.lru);
      future = it->second.future;
    } else {
      lru_.push_front(key);
      Slot slot;
      slot.future = promise.get_future().share();
      slot.lru = lru_.begin();
      future = slot.future;
      cache_.emplace(key, std::move(slot));
      owner = true;
    }
  }

  if (owner) {
    try {
      auto cached = build(item, dial);
      const std::size_t bytes = cached->bytes();
      promise.set_value(std::move(cached));
      std::lock_guard lock(cache_mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) {
        it->second.bytes = bytes;
        cache_bytes_ += bytes;
        evict_locked(key);
      }
    } catch (...) {
      promise.set_exception(std::current_exception());
      std::lock_guard lock(cache_mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) {
        lru_.erase(it->second.lru);
        cache_.erase(it);
      }
      throw;
    }
  }

  const auto cached = future.get();
  RenderResult out;
  out.wav = std::shared_ptr<const std::string>(cached, fold ? &cached->folded_wav : &cached->quad_wav);
  out.dial = dial;
  out.folded = fold;
  out.from_cache = !owner;
  out.rfr_db = cached->rfr_db;
  out.loudness_lufs = cached->loudness_lufs;
  out.norm_gain_db = cached->norm_gain_db;
  return out;
}

std::size_t AuditionService::cache_bytes() const {
  std::lock_guard lock(cache_mutex_);
  return cache_bytes_;
}

void AuditionService::post_rating(Rating rating) {
  find(rating.item_id);
  if (rating.final_dial < 0 || rating.final_dial >= kDialPositions)
    throw InvalidArgument("final_dial out of range");
  if (rating.satisfaction < kMinSatisfaction || rating.satisfaction > kMaxSatisfaction)
    throw InvalidArgument("satisfaction out of range");
  if (rating.timestamp.empty()) rating.timestamp = utc_timestamp();

  std::lock_guard lock(log_mutex_);
  std::ofstream out(cfg_.log_path, std::ios::app);
  if (!out) throw Error("cannot open rating log " + cfg_.log_path.string());
  out << to_json(rating).dump() << '\n';
  out.flush();
  if (!out) throw Error("failed to append to rating log");
  ratings_.push_back(std::move(rating));
}

std::vector<Rating> AuditionService::ratings() const {
  std::lock_guard lock(log_mutex_);
  return ratings_;
}

json AuditionService::summary() {
  const std::vector<Rating> all = ratings();

  // Sessions that used the worse half of the scale at least once.
  std::set<std::string> screened_out;
  for (const auto& r : all)
    if (r.satisfaction < 0) screened_out.insert(r.session_id);

  // Latest rating per (session, item) wins.
  std::map<std::pair<std::string, std::string>, const Rating*> latest;
  for (const auto& r : all) latest[{r.session_id, r.item_id}] = &r;

  struct Sample {
    double rfr;
    double satisfaction;
    bool screened;
  };
  std::map<std::string, std::vector<Sample>> by_class;
  std::vector<Sample> overall;
  for (const auto& [key, r] : latest) {
    const Sample s{render(r->item_id, r->final_dial, false).rfr_db, double(r->satisfaction),
                   screened_out.count(r->session_id) == 0};
    overall.push_back(s);
    by_class[find(r->item_id).entry.class_tag].push_back(s);
  }

  auto stats = [](const std::vector<Sample>& samples, bool screened_only) -> json {
    std::vector<double> rfr, sat;
    for (const auto& s : samples) {
      if (screened_only && !s.screened) continue;
      rfr.push_back(s.rfr);
      sat.push_back(s.satisfaction);
    }
    if (rfr.empty()) return nullptr;
    std::sort(rfr.begin(), rfr.end());
    std::sort(sat.begin(), sat.end());
    const double median = quantile(rfr, 0.5);
    return {{"median_final_rfr_db", finite_or_null(std::max(median, kRfrDisplayFloorDb))},
            {"median_final_rfr_truncated", median < kRfrDisplayFloorDb},
            {"satisfaction_quartiles", {quantile(sat, 0.25), quantile(sat, 0.5), quantile(sat, 0.75)}}};
  };
  auto group = [&](const std::vector<Sample>& samples) {
    const auto screened_n = std::count_if(samples.begin(), samples.end(), [](const Sample& s) { return s.screened; });
    return json{{"n", samples.size()},
                {"post_screened_n", screened_n},
                {"raw", stats(samples, false)},
                {"screened", stats(samples, true)}};
  };

  json classes = json::object();
  for (const auto& [tag, samples] : by_class) classes[tag] = group(samples);
  return {{"schema_version", kSchemaVersion}, {"overall", group(overall)}, {"classes", classes}};
}

namespace {

void send_json(httplib::Response& res, int status, json body) {
  body["schema_version"] = kSchemaVersion;
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

std::string metric(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return std::to_string(v);
}

}  // namespace

void install_routes(httplib::Server& server, AuditionService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });

  server.Get("/items", [&service](const httplib::Request&, httplib::Response& res) {
    json items = json::array();
    for (const auto& e : service.list_items())
      items.push_back({{"item_id", e.item_id},
                       {"title", e.title},
                       {"duration_s", e.duration_s},
                       {"class_tag", e.class_tag}});
    send_json(res, 200, {{"items", items}});
  });

  server.Get("/render", [&service](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("item") || !req.has_param("dial"))
      return send_error(res, 400, "item and dial are required");
    int dial = -1;
    try {
      std::size_t used = 0;
      const std::string text = req.get_param_value("dial");
      dial = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      return send_error(res, 400, "dial must be an integer");
    }
    const std::string fold_param = req.get_param_value("fold");
    const bool fold = fold_param == "stereo" || fold_param == "1" || fold_param == "true";
    try {
      const RenderResult r = service.render(req.get_param_value("item"), dial, fold);
      res.set_header("X-Dial", std::to_string(r.dial));
      res.set_header("X-RFR-dB", metric(r.rfr_db));
      res.set_header("X-Loudness-LUFS", metric(r.loudness_lufs));
      res.set_header("X-Norm-Gain-dB", metric(r.norm_gain_db));
      res.set_header("X-Cache", r.from_cache ? "hit" : "miss");
      if (fold) res.set_header("X-Fold-Down", "monitoring convenience (FL+0.7*SL, FR+0.7*SR); not part of the rating protocol");
      res.set_content(*r.wav, "audio/wav");
    } catch (const NotFound& e) {
      send_error(res, 404, e.what());
    } catch (const InvalidArgument& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  server.Post("/rating", [&service](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return send_error(res, 400, "body is not valid JSON");
    try {
      service.post_rating(rating_from_json(body));
      send_json(res, 200, {{"status", "stored"}});
    } catch (const NotFound& e) {
      send_error(res, 404, e.what());
    } catch (const InvalidArgument& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  server.Get("/summary", [&service](const httplib::Request&, httplib::Response& res) {
    try {
      json s = service.summary();
      res.status = 200;
      res.set_content(s.dump(), "application/json");
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });
}

}  // namespace rotpad
