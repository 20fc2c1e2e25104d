#include <gtest/gtest.h>

#include <thread>

#include <cstdlib>

#include "ppa/backend.hpp"
#include "ppa/digest.hpp"
#include "support/fixtures.hpp"

using namespace ppa;
using namespace ppa::backend;

namespace {

prompt::PromptMessages msgs(const std::string& user) { return prompt::build_prompt(TaskKind::DataRecognition, user); }

BackendConfig config(CacheMode mode) {
  BackendConfig c;
  c.cache_mode = mode;
  return c;
}

}  // namespace

TEST(CacheKey, DigestOfFields) {
  EXPECT_EQ(cache_key("m", "t", "s", "u"), sha256_hex("m\x1ft\x1fs\x1fu"));
  EXPECT_NE(cache_key("m", "t", "s", "u"), cache_key("m2", "t", "s", "u"));
}

TEST(Backend, ReplayHitAndMiss) {
  auto cache = std::make_shared<CacheStore>();
  const auto m = msgs("We collect your email.");
  const std::string key = cache_key("gpt-4o", "data_recognition", m.system, m.user);
  cache->append({key, "gpt-4o", "data_recognition", m.system, m.user, "[\"email\"]", "t"});
  Backend b(config(CacheMode::Replay), nullptr, cache);
  const auto r = b.complete(TaskKind::DataRecognition, m);
  EXPECT_TRUE(r.from_cache);
  EXPECT_EQ(r.raw, "[\"email\"]");
  EXPECT_EQ(b.invocations(), 0u);
  try {
    b.complete(TaskKind::DataRecognition, msgs("cold"));
    FAIL();
  } catch (const ReplayMissError& e) {
    const auto cold = msgs("cold");
    EXPECT_EQ(e.digest(), cache_key("gpt-4o", "data_recognition", cold.system, cold.user));
  }
}

TEST(Backend, RecordAppendsOneEntryPerCall) {
  fixtures::TempDir tmp("backend");
  const auto path = tmp.path() / "cache.jsonl";
  auto client = std::make_shared<ScriptedClient>();
  client->set(TaskKind::DataRecognition, "seg", "[\"x\"]");
  auto cfg = config(CacheMode::Record);
  auto cache = std::make_shared<CacheStore>(path);
  Backend b(cfg, client, cache);
  b.complete(TaskKind::DataRecognition, msgs("seg"));
  EXPECT_EQ(client->calls(), 1u);
  CacheStore reloaded(path);
  ASSERT_EQ(reloaded.size(), 1u);
  const auto rec = reloaded.records()[0];
  EXPECT_EQ(rec.model, "gpt-4o");
  EXPECT_EQ(rec.task, "data_recognition");
  EXPECT_EQ(rec.user, "seg");
  EXPECT_EQ(rec.response, "[\"x\"]");
  EXPECT_EQ(rec.key, cache_key(rec.model, rec.task, rec.system, rec.user));
}

TEST(Backend, RetriesOnlyTransportFailures) {
  auto client = std::make_shared<ScriptedClient>();
  client->set(TaskKind::DataRecognition, "seg", "[]");
  client->fail_next(2);
  auto cfg = config(CacheMode::Live);
  std::vector<long> sleeps;
  Backend b(cfg, client, nullptr);
  b.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  const auto r = b.complete(TaskKind::DataRecognition, msgs("seg"));
  EXPECT_EQ(r.attempts, 3);
  EXPECT_EQ(sleeps, (std::vector<long>{500, 1000}));

  client->fail_next(10);
  EXPECT_THROW(b.complete(TaskKind::DataRecognition, msgs("seg")), TransportError);
  client->fail_next(0);
  // A non-retryable failure (unscripted prompt) is not retried.
  const auto before = client->calls();
  EXPECT_THROW(b.complete(TaskKind::DataRecognition, msgs("unknown")), TransportError);
  EXPECT_EQ(client->calls(), before + 1);
}

TEST(Backend, ParseFailureIsNotRetried) {
  auto client = std::make_shared<ScriptedClient>();
  client->set(TaskKind::DataClassification,
              prompt::build_prompt(TaskKind::DataClassification, "seg", {{"e0", SpanKind::Data, "", "x"}}).user,
              "sorry, I cannot do that");
  Backend b(config(CacheMode::Live), client, nullptr);
  EXPECT_THROW(run_task(TaskKind::DataClassification, "seg", {{"e0", SpanKind::Data, "", "x"}}, b),
               repair::OutputParseError);
  EXPECT_EQ(client->calls(), 1u);
}

TEST(Backend, MakeBackendNeedsKeyForLive) {
  ::unsetenv("PPA_TEST_KEY_UNSET");
  BackendConfig c;
  c.cache_mode = CacheMode::Live;
  c.api_key_env = "PPA_TEST_KEY_UNSET";
  EXPECT_THROW(make_backend(c), ConfigError);
  c.cache_mode = CacheMode::Replay;
  EXPECT_THROW(make_backend(c), ConfigError);  // no cache path
  c.cache_path = fixtures::fixture_cache_path();
  EXPECT_NO_THROW(make_backend(c));
}

TEST(CacheStore, LastRecordWinsAndBadLinesFail) {
  fixtures::TempDir tmp("cache");
  const auto path = tmp.path() / "c.jsonl";
  CacheRecord a{"k", "m", "t", "s", "u", "first", "t0"};
  CacheRecord b = a;
  b.response = "second";
  fixtures::write_file(path, a.to_json().dump() + "\n" + b.to_json().dump() + "\n");
  EXPECT_EQ(CacheStore(path).find("k")->response, "second");
  fixtures::write_file(path, "not json\n");
  EXPECT_THROW(CacheStore{path}, CacheError);
}

TEST(CacheStore, ConcurrentAppends) {
  fixtures::TempDir tmp("cache");
  const auto path = tmp.path() / "c.jsonl";
  {
    CacheStore store(path);
    std::vector<std::thread> ts;
    for (int t = 0; t < 8; ++t)
      ts.emplace_back([&, t] {
        for (int i = 0; i < 50; ++i)
          store.append({std::to_string(t) + "-" + std::to_string(i), "m", "t", "s", "u", "r", "x"});
      });
    for (auto& t : ts) t.join();
  }
  EXPECT_EQ(CacheStore(path).size(), 400u);
}

TEST(ShippedCache, KeysMatchRegeneration) {
  fixtures::TempDir tmp("regen");
  const auto path = tmp.path() / "cache.jsonl";
  fixtures::record_fixture_cache(path);
  const auto fresh = CacheStore(path).records();
  const auto shipped = CacheStore(fixtures::fixture_cache_path()).records();
  ASSERT_EQ(fresh.size(), shipped.size());
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    EXPECT_EQ(fresh[i].key, shipped[i].key);
    EXPECT_EQ(fresh[i].response, shipped[i].response);
    EXPECT_EQ(fresh[i].system, shipped[i].system);
    EXPECT_EQ(fresh[i].user, shipped[i].user);
  }
}

TEST(Modes, ParseAndPrint) {
  for (auto m : {CacheMode::Live, CacheMode::Record, CacheMode::Replay}) EXPECT_EQ(parse_cache_mode(to_string(m)), m);
  EXPECT_FALSE(parse_cache_mode("offline").has_value());
}
