#include <doctest.h>

#include <atomic>
#include <stdexcept>
#include <string>

#include "thouless/parallel.hpp"

using namespace thouless;

TEST_CASE("parallel_map keeps index order") {
  for (Exec e : {Exec::serial, Exec::parallel}) {
    const auto v = parallel_map<int>(e, 1000, [](std::size_t i) { return static_cast<int>(i * i % 97); });
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<int>(i * i % 97));
  }
  CHECK(parallel_map<int>(Exec::parallel, 0, [](std::size_t) { return 1; }).empty());
}

TEST_CASE("the lowest failing index wins") {
  for (Exec e : {Exec::serial, Exec::parallel}) {
    std::atomic<int> ran{0};
    try {
      parallel_for(e, 64, [&](std::size_t i) {
        ++ran;
        if (i == 17 || i == 40) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& err) {
      CHECK(std::string(err.what()) == "17");
    }
    CHECK(ran >= 18);
  }
}

TEST_CASE("worker knob") {
  set_worker_count(2);
  CHECK(worker_count() == 2);
  set_worker_count(0);
  CHECK(worker_count() == 2);
}
