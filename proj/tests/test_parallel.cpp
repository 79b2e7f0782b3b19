#include <atomic>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "ppwgan/parallel.hpp"

using namespace ppwgan;

TEST_CASE("every index runs exactly once") {
  for (auto exec : {parallel::Exec::serial, parallel::Exec::threaded}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel::for_each_index(hits.size(), [&](std::size_t i) { ++hits[i]; }, exec);
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK(parallel::max_threads() >= 1);
}

TEST_CASE("the error of the lowest failing index surfaces") {
  for (auto exec : {parallel::Exec::serial, parallel::Exec::threaded}) {
    try {
      parallel::for_each_index(
          500,
          [](std::size_t i) {
            if (i % 97 == 13) throw std::runtime_error(std::to_string(i));
          },
          exec);
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "13");
    }
  }
}
