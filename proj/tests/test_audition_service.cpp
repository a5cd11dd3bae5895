#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "rotpad/audio_io.h"
#include "rotpad/audition_service.h"
#include "support/signals.h"

using namespace rotpad;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path make_corpus(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rotpad_service_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto items = signals::corpus(3.0);
  write_wav(dir / "alpha.wav", items[0].audio, SampleFormat::Float32);
  write_wav(dir / "beta.wav", items[3].audio, SampleFormat::Pcm16);
  std::ofstream(dir / "beta.json") << R"({"title": "Wide room", "class_tag": "non-voice"})";
  return dir;
}

AudioBuffer decode(const std::string& bytes) {
  return decode_wav({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
}

ServiceConfig config_for(const fs::path& dir) {
  ServiceConfig cfg;
  cfg.items_dir = dir;
  return cfg;
}

Rating rating(std::string session, std::string item, int dial, int satisfaction) {
  Rating r;
  r.session_id = std::move(session);
  r.item_id = std::move(item);
  r.final_dial = dial;
  r.satisfaction = satisfaction;
  r.trace = {{5, 0.0}, {dial, 2.5}};
  return r;
}

AuditionService& shared_service() {
  static AuditionService service(config_for(make_corpus("shared")));
  return service;
}

}  // namespace

TEST_CASE("items are listed with metadata defaults") {
  const auto& items = shared_service().list_items();
  REQUIRE(items.size() == 2);
  CHECK(items[0].item_id == "alpha");
  CHECK(items[0].class_tag == "unclassified");
  CHECK(items[0].title == "alpha");
  CHECK(items[0].duration_s == Catch::Approx(3.0));
  CHECK(items[1].title == "Wide room");
  CHECK(items[1].class_tag == "non-voice");
}

TEST_CASE("repeated renders come from the cache with identical bytes") {
  auto& svc = shared_service();
  const RenderResult first = svc.render("beta", 12, false);
  const RenderResult second = svc.render("beta", 12, false);
  CHECK_FALSE(first.from_cache);
  CHECK(second.from_cache);
  CHECK(*first.wav == *second.wav);
  CHECK(svc.cache_bytes() > 0);

  const AudioBuffer quad = decode(*first.wav);
  CHECK(quad.channels() == 4);
  CHECK(first.rfr_db == Catch::Approx(rfr_db(quad)).margin(1e-4));
}

TEST_CASE("concurrent requests for one key render once") {
  auto& svc = shared_service();
  std::vector<RenderResult> results(6);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < results.size(); ++i)
    threads.emplace_back([&, i] { results[i] = svc.render("alpha", 27, i % 2 == 1); });
  for (auto& t : threads) t.join();
  int misses = 0;
  for (const auto& r : results) misses += !r.from_cache;
  CHECK(misses == 1);
  for (std::size_t i = 2; i < results.size(); ++i) CHECK(*results[i].wav == *results[i % 2].wav);
}

TEST_CASE("fold-down at the reference dial is the original up to the normalization gain") {
  auto& svc = shared_service();
  const RenderResult r = svc.render("alpha", 5, true);
  CHECK(r.folded);
  const AudioBuffer folded = decode(*r.wav);
  const AudioBuffer original = read_wav(fs::temp_directory_path() / "rotpad_service_shared" / "alpha.wav");
  REQUIRE(folded.channels() == 2);
  const double g = std::pow(10.0, r.norm_gain_db / 20.0);
  CHECK(r.norm_gain_db == Catch::Approx(0.0).margin(0.01));  // target is the item's own loudness
  double err = 0.0;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t n = 0; n < original.frames(); ++n) err += std::pow(folded.samples[c][n] - g * original.samples[c][n], 2);
  CHECK(std::sqrt(err / signals::energy(original)) < 1e-6);  // float32 storage
}

TEST_CASE("bad render requests are reported") {
  auto& svc = shared_service();
  CHECK_THROWS_AS(svc.render("missing", 3, false), NotFound);
  CHECK_THROWS_AS(svc.render("alpha", 31, false), InvalidArgument);
  CHECK_THROWS_AS(svc.render("alpha", -1, false), InvalidArgument);
}

TEST_CASE("rating JSON validation") {
  json ok = {{"session_id", "s"}, {"item_id", "alpha"}, {"final_dial", 5}, {"satisfaction", 0}};
  CHECK(rating_from_json(ok).final_dial == 5);
  for (auto [key, value] : std::vector<std::pair<std::string, json>>{
           {"satisfaction", 16}, {"satisfaction", -16}, {"satisfaction", 1.5}, {"final_dial", 31},
           {"session_id", ""}, {"item_id", 3}, {"trace", "x"}}) {
    json bad = ok;
    bad[key] = value;
    INFO(bad.dump());
    CHECK_THROWS_AS(rating_from_json(bad), InvalidArgument);
  }
  json traced = ok;
  traced["trace"] = json::array({{{"dial", 5}, {"time", 0.0}}, {{"dial", 9}, {"time", 1.25}}});
  const Rating r = rating_from_json(traced);
  REQUIRE(r.trace.size() == 2);
  CHECK(r.trace[1].dial == 9);
  CHECK(rating_from_json(to_json(r)).trace[1].time_s == 1.25);
}

TEST_CASE("summary rules") {
  const fs::path dir = make_corpus("summary");
  AuditionService svc(config_for(dir));

  SECTION("no ratings gives empty aggregates") {
    const json s = svc.summary();
    CHECK(s["schema_version"] == kSchemaVersion);
    CHECK(s["overall"]["n"] == 0);
    CHECK(s["overall"]["raw"].is_null());
    CHECK(s["overall"]["screened"].is_null());
  }
  SECTION("a single reference rating reports the -30 dB floor") {
    svc.post_rating(rating("s1", "alpha", 5, 0));
    const json s = svc.summary();
    CHECK(s["overall"]["raw"]["median_final_rfr_db"] == -30.0);
    CHECK(s["overall"]["raw"]["median_final_rfr_truncated"] == true);
    CHECK(s["classes"]["unclassified"]["n"] == 1);
  }
  SECTION("two ratings take the lower median") {
    svc.post_rating(rating("s1", "alpha", 20, 5));
    svc.post_rating(rating("s1", "beta", 5, 5));
    const json s = svc.summary();
    CHECK(s["overall"]["n"] == 2);
    CHECK(s["overall"]["raw"]["median_final_rfr_db"] == -30.0);
  }
  SECTION("lower median of finite values") {
    svc.post_rating(rating("s1", "alpha", 20, 5));
    svc.post_rating(rating("s1", "beta", 30, 10));
    const double lo = std::min(svc.render("alpha", 20, false).rfr_db, svc.render("beta", 30, false).rfr_db);
    const json s = svc.summary();
    CHECK(s["overall"]["raw"]["median_final_rfr_db"].get<double>() == Catch::Approx(std::max(lo, -30.0)));
    // Quartiles take the lower rank: floor((n - 1) p).
    CHECK(s["overall"]["raw"]["satisfaction_quartiles"] == json::array({5.0, 5.0, 5.0}));
  }
  SECTION("a session that used the worse half of the scale is screened out") {
    svc.post_rating(rating("good", "alpha", 12, 5));
    svc.post_rating(rating("picky", "alpha", 15, 10));
    svc.post_rating(rating("picky", "beta", 7, -3));
    const json s = svc.summary();
    CHECK(s["overall"]["n"] == 3);
    CHECK(s["overall"]["post_screened_n"] == 1);
    CHECK(s["overall"]["screened"]["satisfaction_quartiles"] == json::array({5.0, 5.0, 5.0}));
    CHECK(s["classes"]["non-voice"]["screened"].is_null());
  }
  SECTION("re-rating keeps both records and the latest counts") {
    svc.post_rating(rating("s1", "alpha", 10, 1));
    svc.post_rating(rating("s1", "alpha", 25, 7));
    CHECK(svc.ratings().size() == 2);
    const json s = svc.summary();
    CHECK(s["overall"]["n"] == 1);
    CHECK(s["overall"]["raw"]["satisfaction_quartiles"][1] == 7.0);
  }
  SECTION("rejected ratings are not stored") {
    Rating bad = rating("s1", "alpha", 5, 16);
    CHECK_THROWS_AS(svc.post_rating(bad), InvalidArgument);
    CHECK_THROWS_AS(svc.post_rating(rating("s1", "nope", 5, 0)), NotFound);
    CHECK(svc.ratings().empty());
  }
}

TEST_CASE("the rating log persists across restarts and tolerates a torn line") {
  const fs::path dir = make_corpus("persist");
  {
    AuditionService svc(config_for(dir));
    svc.post_rating(rating("s1", "alpha", 14, 3));
    svc.post_rating(rating("s2", "beta", 22, -1));
  }
  std::ofstream(dir / "ratings.jsonl", std::ios::app) << R"({"session_id": "s3", "item)";
  AuditionService again(config_for(dir));
  const auto rs = again.ratings();
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].final_dial == 14);
  CHECK(rs[1].satisfaction == -1);
  CHECK_FALSE(rs[0].timestamp.empty());
}

TEST_CASE("startup rejects empty or unusable item directories") {
  const fs::path empty = fs::temp_directory_path() / "rotpad_service_empty";
  fs::remove_all(empty);
  fs::create_directories(empty);
  CHECK_THROWS_AS(AuditionService(config_for(empty)), Error);
  CHECK_THROWS_AS(AuditionService(config_for(empty / "absent")), Error);

  write_wav(empty / "mono.wav", AudioBuffer(1, 48000, 48000), SampleFormat::Pcm16);
  CHECK_THROWS_WITH(AuditionService(config_for(empty)), Catch::Matchers::ContainsSubstring("stereo input required"));
}

TEST_CASE("HTTP interface") {
  const fs::path dir = make_corpus("http");
  AuditionService svc(config_for(dir));
  httplib::Server server;
  install_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);

  auto get_json = [&](const std::string& path, int expect) {
    auto res = client.Get(path);
    REQUIRE(res);
    CHECK(res->status == expect);
    const json j = json::parse(res->body);
    CHECK(j["schema_version"] == kSchemaVersion);
    return j;
  };

  CHECK(get_json("/healthz", 200)["status"] == "ok");
  const json items = get_json("/items", 200);
  REQUIRE(items["items"].size() == 2);
  CHECK(items["items"][1]["class_tag"] == "non-voice");

  // Sweep the dial the way the browser client does; every position renders
  // once, repeats hit the cache with the same bytes, RFR rises.
  double last_rfr = -std::numeric_limits<double>::infinity();
  for (int dial = 5; dial <= 30; ++dial) {
    const std::string path = "/render?item=alpha&dial=" + std::to_string(dial) + "&fold=stereo";
    auto first = client.Get(path);
    auto again = client.Get(path);
    REQUIRE(first);
    REQUIRE(again);
    REQUIRE(first->status == 200);
    CHECK(first->get_header_value("Content-Type") == "audio/wav");
    CHECK(first->get_header_value("X-Cache") == "miss");
    CHECK(again->get_header_value("X-Cache") == "hit");
    CHECK(first->body == again->body);
    CHECK(first->has_header("X-Fold-Down"));
    CHECK(first->get_header_value("Access-Control-Allow-Origin") == "*");
    const std::string rfr = first->get_header_value("X-RFR-dB");
    const double value = rfr == "-inf" ? -std::numeric_limits<double>::infinity() : std::stod(rfr);
    CHECK(value >= last_rfr);
    last_rfr = value;
  }

  auto quad = client.Get("/render?item=beta&dial=30");
  REQUIRE(quad);
  CHECK(quad->status == 200);
  CHECK_FALSE(quad->has_header("X-Fold-Down"));
  CHECK(decode(quad->body).channels() == 4);

  get_json("/render?item=missing&dial=3", 404);
  get_json("/render?item=alpha&dial=31", 400);
  get_json("/render?item=alpha&dial=abc", 400);
  get_json("/render?item=alpha", 400);

  auto post = [&](const json& body, int expect) {
    auto res = client.Post("/rating", body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == expect);
  };
  post({{"session_id", "ui-1"}, {"item_id", "alpha"}, {"final_dial", 18}, {"satisfaction", 5},
        {"trace", json::array({{{"dial", 5}, {"time", 0.0}}, {{"dial", 18}, {"time", 4.0}}})}},
       200);
  post({{"session_id", "ui-1"}, {"item_id", "alpha"}, {"final_dial", 18}, {"satisfaction", 16}}, 400);
  post({{"session_id", "ui-1"}, {"item_id", "nope"}, {"final_dial", 18}, {"satisfaction", 1}}, 404);
  {
    auto res = client.Post("/rating", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
  }

  json s = get_json("/summary", 200);
  CHECK(s["overall"]["n"] == 1);
  CHECK(s["overall"]["post_screened_n"] == 1);
  CHECK(s["overall"]["screened"]["satisfaction_quartiles"][1] == 5.0);

  // A second session that used -1 once drops out of the screened aggregate.
  post({{"session_id", "ui-2"}, {"item_id", "alpha"}, {"final_dial", 9}, {"satisfaction", 3}}, 200);
  post({{"session_id", "ui-2"}, {"item_id", "beta"}, {"final_dial", 9}, {"satisfaction", -1}}, 200);
  s = get_json("/summary", 200);
  CHECK(s["overall"]["n"] == 3);
  CHECK(s["overall"]["post_screened_n"] == 1);
  CHECK(s["overall"]["screened"]["satisfaction_quartiles"] == json::array({5.0, 5.0, 5.0}));

  server.stop();
  thread.join();
}
