#include "ace/fileio.hpp"
#include "ace/parallel.hpp"
#include "ace/rng.hpp"
#include "helpers.hpp"

#include <atomic>
#include <set>

using namespace ace;

TEST_SUITE("core") {
  TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(42), b(42), c(mix_seed(42, 1));
    for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
    CHECK(Rng(42).next() != c.next());
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) == mix_seed(1, 0));
  }

  TEST_CASE("rng distributions stay in range") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
      const double u = rng.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      CHECK(rng.below(7) < 7u);
    }
    const auto p = rng.permutation(20);
    CHECK(std::set<std::size_t>(p.begin(), p.end()).size() == 20);
  }

  TEST_CASE("fnv1a and hex are stable") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(to_hex(0xabcULL) == "0000000000000abc");
  }

  TEST_CASE("atomic_write replaces contents") {
    const auto dir = test::scratch_dir("fileio");
    atomic_write(dir / "f.txt", "one");
    atomic_write(dir / "f.txt", "two");
    CHECK(read_file(dir / "f.txt") == "two");
    CHECK(test::error_kind_of([&] { read_file(dir / "missing.txt"); }) != ErrorKind::config);
  }

  TEST_CASE("parallel_for visits every index once and rethrows the lowest failure") {
    for (int jobs : {1, 4}) {
      std::vector<std::atomic<int>> hits(100);
      parallel_for(100, jobs, [&](std::size_t i) { ++hits[i]; });
      for (auto& h : hits) CHECK(h.load() == 1);
      try {
        parallel_for(50, jobs, [](std::size_t i) {
          if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
        });
        FAIL("expected an exception");
      } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "7");
      }
    }
  }
}
