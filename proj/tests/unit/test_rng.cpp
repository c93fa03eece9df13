// Tests for the counter-based generator: known-answer block values, the
// documented uniform and normal mappings, determinism, and stream
// separation.

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "sgdsde/rng.hpp"

namespace {

using namespace sgdsde;

TEST_SUITE("rng") {

TEST_CASE("first block at seed 0, stream 0 matches the reference vector") {
  // Philox4x32-10 of the all-zero counter and key, packed two 32-bit outputs
  // per 64-bit word (low word first).
  CounterRng rng(0, 0);
  CHECK(rng.next_u64() == UINT64_C(0xe169c58d6627e8d5));
  CHECK(rng.next_u64() == UINT64_C(0x9b00dbd8bc57ac4c));
}

TEST_CASE("uniform applies the documented 53-bit mapping") {
  CounterRng words(0, 0);
  CounterRng rng(0, 0);
  for (int i = 0; i < 8; ++i) {
    const std::uint64_t w = words.next_u64();
    const double expected =
        static_cast<double>(w >> 11) * 0x1.0p-53 + 0x1.0p-54;
    const double got = rng.uniform();
    CHECK(got == expected);
    CHECK(got > 0.0);
    CHECK(got < 1.0);
  }
}

TEST_CASE("normal pairs Box-Muller draws, cosine first then cached sine") {
  CounterRng uniforms(3, 5);
  const double u1 = uniforms.uniform();
  const double u2 = uniforms.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  CounterRng rng(3, 5);
  CHECK(rng.normal() == doctest::Approx(r * std::cos(2.0 * M_PI * u2))
                            .epsilon(1e-15));
  CHECK(rng.normal() == doctest::Approx(r * std::sin(2.0 * M_PI * u2))
                            .epsilon(1e-15));
}

TEST_CASE("normal draws have unit-Gaussian sample moments") {
  CounterRng rng(42, 0);
  const int n = 200000;
  double sum = 0.0;
  double sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("identical seed and stream reproduce the same sequence") {
  CounterRng a(123, 456);
  CounterRng b(123, 456);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("different streams and seeds yield different sequences") {
  CounterRng base(1, 0);
  CounterRng stream(1, 1);
  CounterRng seed(2, 0);
  bool stream_differs = false;
  bool seed_differs = false;
  std::vector<std::uint64_t> head;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t w = base.next_u64();
    head.push_back(w);
    stream_differs = stream_differs || stream.next_u64() != w;
    seed_differs = seed_differs || seed.next_u64() != w;
  }
  CHECK(stream_differs);
  CHECK(seed_differs);
  // The head of the sequence should not be trivially constant either.
  bool varies = false;
  for (std::size_t i = 1; i < head.size(); ++i) {
    varies = varies || head[i] != head[0];
  }
  CHECK(varies);
}

}  // TEST_SUITE

}  // namespace
