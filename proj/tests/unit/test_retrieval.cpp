#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <progshot/annotator.hpp>
#include <progshot/error.hpp>
#include <progshot/retrieval.hpp>

#include "support.hpp"

using namespace progshot;
using progshot::testing::TempDir;

namespace {

std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = n(rng);
  normalize(v);
  return v;
}

VectorIndex random_index(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  VectorIndex idx(EmbeddingSpec{}, dim);
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "p%05zu", i);
    idx.add(id, random_unit(rng, dim));
  }
  return idx;
}

// Brute-force oracle in double precision with a full sort.
std::vector<std::string> oracle_top(const VectorIndex& idx, const std::vector<float>& q,
                                    std::size_t m, bool most) {
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double s = 0;
    for (std::size_t d = 0; d < idx.dim(); ++d) s += static_cast<double>(idx.row(i)[d]) * q[d];
    all.emplace_back(most ? -s : s, idx.id(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(m, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

std::vector<std::string> ids(const std::vector<ScoredExemplar>& v) {
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(e.problem_id);
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::io_failure;
}

}  // namespace

TEST_SUITE("retrieval") {
  TEST_CASE("dot kernel matches a scalar double oracle") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(-1, 1);
    for (std::size_t n : {0u, 1u, 7u, 15u, 16u, 17u, 31u, 64u, 100u, 384u, 1536u}) {
      std::vector<float> a(n), b(n);
      for (auto& x : a) x = u(rng);
      for (auto& x : b) x = u(rng);
      double want = 0;
      for (std::size_t i = 0; i < n; ++i) want += static_cast<double>(a[i]) * b[i];
      CHECK(dot(a.data(), b.data(), n) == doctest::Approx(want).epsilon(1e-5).scale(1.0));
    }
  }

  TEST_CASE("cosine") {
    const std::vector<float> a = {1, 0}, b = {0, 2}, c = {3, 3};
    CHECK(cosine(a, b) == doctest::Approx(0.0));
    CHECK(cosine(a, c) == doctest::Approx(std::sqrt(0.5)));
    CHECK(cosine(c, c) == doctest::Approx(1.0));
    const std::vector<float> z = {0, 0}, d3 = {1, 2, 3};
    CHECK(code_of([&] { (void)cosine(a, z); }) == ErrorCode::zero_vector);
    CHECK(code_of([&] { (void)cosine(a, d3); }) == ErrorCode::dimension_mismatch);
  }

  TEST_CASE("most and least similar agree with a brute-force oracle") {
    std::mt19937_64 rng(2);
    const auto idx = random_index(rng, 500, 48);
    for (int trial = 0; trial < 50; ++trial) {
      const auto q = random_unit(rng, 48);
      for (std::size_t m : {1u, 4u, 8u, 32u}) {
        RetrievalConfig cfg;
        cfg.M = m;
        const auto top = retrieve(idx, q, cfg);
        CHECK(ids(top) == oracle_top(idx, q, m, true));
        for (std::size_t i = 1; i < top.size(); ++i) CHECK(top[i - 1].score >= top[i].score);
        cfg.strategy = Strategy::least_similar;
        CHECK(ids(retrieve(idx, q, cfg)) == oracle_top(idx, q, m, false));
      }
    }
  }

  TEST_CASE("ties go to the smaller id") {
    VectorIndex idx(EmbeddingSpec{}, 2);
    const std::vector<float> v = {1, 0};
    for (const char* id : {"d", "b", "a", "c"}) idx.add(id, v);
    RetrievalConfig cfg;
    cfg.M = 3;
    CHECK(ids(retrieve(idx, v, cfg)) == std::vector<std::string>{"a", "b", "c"});
    cfg.strategy = Strategy::least_similar;
    CHECK(ids(retrieve(idx, v, cfg)) == std::vector<std::string>{"a", "b", "c"});
  }

  TEST_CASE("exclusions and clamping") {
    std::mt19937_64 rng(3);
    const auto idx = random_index(rng, 10, 8);
    RetrievalConfig cfg;
    cfg.M = 50;
    CHECK(retrieve(idx, idx.row(0), cfg).size() == 10);
    const auto self = retrieve(idx, idx.row(0), cfg, "p00000");
    CHECK(self.size() == 9);
    CHECK(std::none_of(self.begin(), self.end(), [](auto& e) { return e.problem_id == "p00000"; }));
    cfg.exclude_self = false;
    CHECK(retrieve(idx, idx.row(0), cfg, "p00000").front().problem_id == "p00000");
    cfg.exclude_ids = {"p00001", "p00002"};
    CHECK(retrieve(idx, idx.row(0), cfg).size() == 8);
    for (auto s : {Strategy::most_similar, Strategy::random, Strategy::least_similar}) {
      RetrievalConfig c;
      c.strategy = s;
      c.M = 4;
      c.exclude_ids = {"p00003"};
      const auto r = retrieve(idx, idx.row(0), c, "p00000");
      CHECK(r.size() == 4);
      std::set<std::string> uniq;
      for (const auto& e : r) {
        uniq.insert(e.problem_id);
        CHECK(e.problem_id != "p00000");
        CHECK(e.problem_id != "p00003");
      }
      CHECK(uniq.size() == 4);
    }
  }

  TEST_CASE("random strategy is seeded per query and roughly uniform") {
    std::mt19937_64 rng(4);
    const auto idx = random_index(rng, 20, 8);
    const auto q = random_unit(rng, 8);
    RetrievalConfig cfg;
    cfg.strategy = Strategy::random;
    cfg.M = 5;
    cfg.random_seed = 11;
    const auto a = retrieve(idx, q, cfg, "query-1");
    CHECK(a == retrieve(idx, q, cfg, "query-1"));
    CHECK(ids(a) != ids(retrieve(idx, q, cfg, "query-2")));
    cfg.random_seed = 12;
    CHECK(ids(a) != ids(retrieve(idx, q, cfg, "query-1")));

    std::map<std::string, int> freq;
    const int trials = 4000;
    for (int t = 0; t < trials; ++t) {
      cfg.random_seed = static_cast<std::uint64_t>(t);
      for (const auto& e : retrieve(idx, q, cfg, "q")) ++freq[e.problem_id];
    }
    const double expected = trials * 5.0 / 20.0;
    double chi2 = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double d = freq[idx.id(i)] - expected;
      chi2 += d * d / expected;
    }
    // 19 degrees of freedom; p = 0.001 critical value is 43.8.
    CHECK(chi2 < 43.8);
  }

  TEST_CASE("strategy names") {
    CHECK(strategy_from_string("most_similar") == Strategy::most_similar);
    CHECK(strategy_from_string("least") == Strategy::least_similar);
    CHECK(strategy_from_string("random") == Strategy::random);
    CHECK(code_of([] { (void)strategy_from_string("best"); }) == ErrorCode::config_error);
  }

  TEST_CASE("index persistence round-trips bit-exactly") {
    std::mt19937_64 rng(5);
    VectorIndex idx(EmbeddingSpec{EmbeddingProvider::remote, "emb-x"}, 33);
    for (int i = 0; i < 17; ++i) idx.add("id-" + std::to_string(i), random_unit(rng, 33));
    TempDir dir;
    idx.save(dir / "index.bin");
    const auto back = VectorIndex::load(dir / "index.bin");
    CHECK(back == idx);
    CHECK(back.spec().model_id == "emb-x");
    CHECK(back.find("id-16").value() == 16);

    std::ifstream in(dir / "index.bin", std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "PSIX");

    progshot::testing::write_text(dir / "junk.bin", "PSIXgarbage");
    CHECK(code_of([&] { (void)VectorIndex::load(dir / "junk.bin"); }) == ErrorCode::malformed_record);
    progshot::testing::write_text(dir / "other.bin", "hello world");
    CHECK(code_of([&] { (void)VectorIndex::load(dir / "other.bin"); }) == ErrorCode::malformed_record);
  }

  TEST_CASE("index errors") {
    VectorIndex idx(EmbeddingSpec{}, 3);
    const std::vector<float> v2 = {1, 0}, v3 = {1, 0, 0};
    CHECK(code_of([&] { idx.add("a", v2); }) == ErrorCode::dimension_mismatch);
    CHECK(code_of([&] { (void)retrieve(idx, v3, {}); }) == ErrorCode::empty_index);
    idx.add("a", v3);
    CHECK(code_of([&] { idx.add("a", v3); }) == ErrorCode::malformed_record);
    CHECK(code_of([&] { (void)retrieve(idx, v2, {}); }) == ErrorCode::dimension_mismatch);
    RetrievalConfig zero;
    zero.M = 0;
    CHECK(code_of([&] { (void)retrieve(idx, v3, zero); }) == ErrorCode::config_error);
  }

  TEST_CASE("build_index embeds stored questions in store order") {
    Corpus corpus;
    corpus.add({"t1", "apples and pears", 1, Dataset::custom, Split::train});
    corpus.add({"t2", "trains and buses", 2, Dataset::custom, Split::train});
    corpus.add({"t3", "never stored", 3, Dataset::custom, Split::train});
    AnnotationStore store;
    store.add({"t2", "p", 2, 0, 0, 1});
    store.add({"t1", "p", 1, 0, 0, 1});
    GatewayConfig gc;
    gc.embedding_dim = 32;
    Gateway g(gc);
    const auto idx = build_index(store, corpus, g, EmbeddingSpec{}, 1);
    REQUIRE(idx.size() == 2);
    CHECK(idx.id(0) == "t2");
    CHECK(idx.dim() == 32);
    const auto q = HashingEmbedder(32).embed("apples and pears");
    CHECK(retrieve(idx, q, {}).front().problem_id == "t1");
    CHECK(code_of([&] { (void)build_index(AnnotationStore{}, corpus, g, EmbeddingSpec{}); }) ==
          ErrorCode::empty_store);
    CHECK(code_of([&] {
            (void)build_index(store, corpus, g, EmbeddingSpec{EmbeddingProvider::remote, "x"});
          }) == ErrorCode::provider_mismatch);
  }
}
