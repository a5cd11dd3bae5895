#pragma once

#include <cstddef>
#include <filesystem>
#include <future>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rotpad/errors.h"
#include "rotpad/pipeline.h"
#include "rotpad/upmix.h"

namespace httplib {
class Server;
}

namespace rotpad {

class NotFound : public Error {
 public:
  using Error::Error;
};

inline constexpr int kSchemaVersion = 1;
inline constexpr int kMinSatisfaction = -15;
inline constexpr int kMaxSatisfaction = 15;
/// Display floor for RFR aggregates (an untouched reference render is -inf).
inline constexpr double kRfrDisplayFloorDb = -30.0;

struct ServiceConfig {
  std::filesystem::path items_dir;
  std::filesystem::path log_path;
  std::size_t cache_budget_bytes = std::size_t(1) << 30;
  PipelineConfig pipeline;
};

struct ItemEntry {
  std::string item_id;
  std::string title;
  double duration_s = 0.0;
  std::string class_tag = "unclassified";
};

struct TracePoint {
  int dial = 0;
  double time_s = 0.0;
};

struct Rating {
  std::string session_id;
  std::string item_id;
  int final_dial = kReferenceDial;
  int satisfaction = 0;
  std::string timestamp;
  std::vector<TracePoint> trace;
};

nlohmann::json to_json(const Rating& r);
/// Throws InvalidArgument on missing fields or out-of-range values.
Rating rating_from_json(const nlohmann::json& j);

struct RenderResult {
  std::shared_ptr<const std::string> wav;
  int dial = 0;
  bool folded = false;
  bool from_cache = false;
  double rfr_db = 0.0;
  double loudness_lufs = 0.0;
  double norm_gain_db = 0.0;
};

/// Serves a directory of stereo items for the adjust-then-rate loop: decomposes
/// every item once at startup, renders dial positions on demand behind a
/// byte-bounded LRU cache, and keeps an append-only JSONL rating log.
///
/// Sidecar `<item>.json` may set "title" and "class_tag" (speech, singing,
/// non-voice). Existing log records are reloaded on startup.
class AuditionService {
 public:
  explicit AuditionService(ServiceConfig cfg);

  const std::vector<ItemEntry>& list_items() const { return entries_; }

  /// Loudness-normalized quad render (or its stereo fold-down) as WAV bytes.
  /// Throws NotFound for unknown items and InvalidArgument for bad dials.
  RenderResult render(const std::string& item_id, int dial, bool fold);

  void post_rating(Rating rating);
  std::vector<Rating> ratings() const;

  nlohmann::json summary();

  std::size_t cache_bytes() const;

 private:
  struct Item {
    ItemEntry entry;
    AudioBuffer input;
    PadSignals pad;
    double target_lufs = 0.0;
  };
  struct Cached {
    std::string quad_wav;
    std::string folded_wav;
    double rfr_db = 0.0;
    double loudness_lufs = 0.0;
    double norm_gain_db = 0.0;
    std::size_t bytes() const { return quad_wav.size() + folded_wav.size(); }
  };
  using Key = std::pair<std::string, int>;
  struct Slot {
    std::shared_future<std::shared_ptr<const Cached>> future;
    std::list<Key>::iterator lru;
    std::size_t bytes = 0;
  };

  const Item& find(const std::string& item_id) const;
  std::shared_ptr<const Cached> build(const Item& item, int dial) const;
  void evict_locked(const Key& keep);

  ServiceConfig cfg_;
  std::vector<Item> items_;
  std::vector<ItemEntry> entries_;

  mutable std::mutex cache_mutex_;
  std::map<Key, Slot> cache_;
  std::list<Key> lru_;  // front = most recent
  std::size_t cache_bytes_ = 0;

  mutable std::mutex log_mutex_;
  std::vector<Rating> ratings_;
};

/// GET /healthz, GET /items, GET /render, POST /rating, GET /summary.
void install_routes(httplib::Server& server, AuditionService& service);

}  // namespace rotpad
