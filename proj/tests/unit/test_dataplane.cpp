#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "beeflow/dataplane.hpp"
#include "beeflow/error.hpp"
#include "support.hpp"

using namespace beeflow;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::IoError;
}

std::string random_blob(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::string s(n, '\0');
  for (char& c : s) c = static_cast<char>(rng() & 0xff);
  return s;
}

}  // namespace

TEST(DataStore, RoundTrips) {
  DataStore store("n1");
  const DataId empty = store.put("");
  EXPECT_EQ(store.get(empty), "");
  const DataId a = store.put("same"), b = store.put("same");
  EXPECT_NE(a, b);
  EXPECT_EQ(store.get(a), "same");
  EXPECT_EQ(a.value.rfind("n1/", 0), 0u);
  const std::string blob = random_blob(std::size_t{8} << 20, 3);
  const DataId big = store.put(blob);
  EXPECT_TRUE(store.get(big) == blob);
  EXPECT_EQ(store.stats(), (StoreStats{4, 8 + blob.size()}));
  EXPECT_TRUE(store.contains(big));
}

TEST(DataStore, Errors) {
  DataStore one, two;
  EXPECT_NE(one.node(), two.node());
  const DataId id = one.put("x");
  EXPECT_EQ(code_of([&] { two.get(id); }), Errc::UnknownDataId);
  EXPECT_EQ(code_of([&] { one.get(DataId{"nope"}); }), Errc::UnknownDataId);
  EXPECT_FALSE(two.contains(id));
  one.close();
  EXPECT_TRUE(one.closed());
  EXPECT_EQ(code_of([&] { one.put("y"); }), Errc::StoreClosed);
  EXPECT_EQ(one.get(id), "x");  // reads still work after close
}

TEST(DataStore, UniqueIdsAcrossManyPuts) {
  DataStore store("u");
  std::set<DataId> ids;
  for (int i = 0; i < 100'000; ++i) ids.insert(store.put(std::to_string(i)));
  EXPECT_EQ(ids.size(), 100'000u);
}

TEST(DataStore, ConcurrentPutGet) {
  DataStore store("c");
  constexpr int kThreads = 8, kEach = 2000;
  std::vector<std::vector<std::pair<DataId, std::string>>> got(kThreads);
  std::vector<std::thread> pool;
  for (int t = 0; t < kThreads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = 0; i < kEach; ++i) {
        std::string v = random_blob(1 + (i % 97) * 31, static_cast<std::uint64_t>(t * kEach + i));
        DataId id = store.put(v);
        if (store.get(id) != v) ADD_FAILURE() << "torn read " << id.value;
        got[t].emplace_back(std::move(id), std::move(v));
      }
    });
  }
  for (auto& th : pool) th.join();
  std::set<DataId> ids;
  std::size_t bytes = 0;
  for (const auto& v : got) {
    for (const auto& [id, s] : v) {
      ids.insert(id);
      bytes += s.size();
      EXPECT_EQ(store.get(id), s);
    }
  }
  EXPECT_EQ(ids.size(), std::size_t{kThreads} * kEach);
  EXPECT_EQ(store.stats(), (StoreStats{ids.size(), bytes}));
}

TEST(DataStore, DirectoryMode) {
  testing_support::TempDir dir("store");
  DataStore store("w1", dir.path());
  const std::string blob = random_blob(5000, 1);
  const DataId id = store.put(blob);
  EXPECT_TRUE(testing_support::slurp(dir.path() / id.value) == blob);
  EXPECT_EQ(store.get(id), blob);
}

TEST(CheckPayload, SizeOnly) {
  EXPECT_TRUE(check_payload(Payload{}).ok);
  Payload inline_blob;
  inline_blob.set("data", std::string(std::size_t{2} << 20, 'x'));
  const PayloadCheck c = check_payload(inline_blob, std::size_t{1} << 20);
  EXPECT_FALSE(c.ok);
  EXPECT_EQ(c.size_bytes, serialized_size(inline_blob));
  EXPECT_EQ(c.limit_bytes, std::size_t{1} << 20);

  DataStore store("p");
  Payload by_ref;
  by_ref.set("data", store.put(std::string(std::size_t{2} << 20, 'x')));
  EXPECT_TRUE(check_payload(by_ref).ok);
  // a tiny referenced object serializes the same size
  DataStore other("q");
  Payload small_ref;
  small_ref.set("data", other.put("x"));
  EXPECT_EQ(check_payload(small_ref).size_bytes, check_payload(by_ref).size_bytes);

  Payload edge;
  edge.set("k", std::string(100, 'y'));
  const std::size_t n = serialized_size(edge);
  EXPECT_TRUE(check_payload(edge, n).ok);
  EXPECT_FALSE(check_payload(edge, n - 1).ok);
}
