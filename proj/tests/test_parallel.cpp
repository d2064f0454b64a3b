#include "mmdrb/parallel.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

using namespace mmdrb;

namespace {

// RAII guard so a test cannot leak its thread-count override into the others.
struct ThreadEnvGuard {
    explicit ThreadEnvGuard(const char* value) {
        if (value)
            ::setenv("MMDRB_THREADS", value, 1);
        else
            ::unsetenv("MMDRB_THREADS");
    }
    ~ThreadEnvGuard() { ::unsetenv("MMDRB_THREADS"); }
};

std::vector<double> run_squares(std::size_t n) {
    std::vector<double> out(n, -1.0);
    parallel_for(n, [&](std::size_t i) { out[i] = std::sqrt(static_cast<double>(i)); });
    return out;
}

}  // namespace

TEST_CASE("thread budget is positive and capped by the environment", "[parallel]") {
    {
        ThreadEnvGuard guard(nullptr);
        CHECK(thread_budget() >= 1);
    }
    {
        ThreadEnvGuard guard("1");
        CHECK(thread_budget() == 1);
    }
    {
        // values below 1 and garbage are ignored
        ThreadEnvGuard guard("0");
        CHECK(thread_budget() >= 1);
    }
    {
        ThreadEnvGuard guard("not-a-number");
        CHECK(thread_budget() >= 1);
    }
}

TEST_CASE("every index runs exactly once", "[parallel]") {
    std::vector<std::atomic<int>> hits(257);
    for (auto& h : hits) h.store(0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
    for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i].load() == 1);
}

TEST_CASE("empty and singleton loops", "[parallel]") {
    int calls = 0;
    parallel_for(0, [&](std::size_t) { ++calls; });
    CHECK(calls == 0);
    parallel_for(1, [&](std::size_t i) { calls += static_cast<int>(i) + 1; });
    CHECK(calls == 1);
}

TEST_CASE("results do not depend on the thread count", "[parallel]") {
    std::vector<double> serial;
    {
        ThreadEnvGuard guard("1");
        serial = run_squares(1000);
    }
    {
        ThreadEnvGuard guard("4");
        const auto threaded = run_squares(1000);
        REQUIRE(threaded.size() == serial.size());
        for (std::size_t i = 0; i < serial.size(); ++i) CHECK(threaded[i] == serial[i]);
    }
}

TEST_CASE("worker exceptions surface to the caller", "[parallel]") {
    ThreadEnvGuard guard("4");
    CHECK_THROWS_AS(parallel_for(64,
                                 [](std::size_t i) {
                                     if (i == 13) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    // the loop must still be usable afterwards
    CHECK_NOTHROW(parallel_for(8, [](std::size_t) {}));
}
