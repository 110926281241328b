// Copyright 2026 The preqeval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <stdexcept>
#include <cstring>

#include "doctest.h"
#include "preqeval/digest.hpp"
#include "preqeval/errors.hpp"
#include "preqeval/rng.hpp"
#include "preqeval/stats.hpp"

using namespace preqeval;

TEST_CASE("sha256 and crc32 match published test vectors") {
  CHECK(to_hex(sha256(std::string_view("abc"))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const char* digits = "123456789";
  CHECK(crc32(std::span(reinterpret_cast<const std::uint8_t*>(digits), 9)) == 0xCBF43926u);
}

TEST_CASE("splitmix64 matches its reference first output") {
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("byte writer and reader round trip little-endian fields") {
  ByteWriter w;
  w.u8(7);
  w.u16(0x1234);
  w.u32(0xdeadbeef);
  w.u64(0x0102030405060708ULL);
  w.i64(-5);
  w.f64(-0.1);
  w.str("head");
  CHECK(w.bytes()[1] == 0x34);
  CHECK(w.bytes()[2] == 0x12);
  ByteReader r(w.bytes());
  CHECK(r.u8() == 7);
  CHECK(r.u16() == 0x1234);
  CHECK(r.u32() == 0xdeadbeefu);
  CHECK(r.u64() == 0x0102030405060708ULL);
  CHECK(r.i64() == -5);
  CHECK(r.f64() == -0.1);
  CHECK(r.str() == "head");
  CHECK(r.remaining() == 0);
  CHECK_THROWS_AS(r.u8(), DecodeError);
}

TEST_CASE("rng draws are reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(a.below(7) < 7);
    b.below(7);
  }
  // Sample moments of the normal and gamma draws.
  Rng r(3);
  double sum = 0.0, sq = 0.0, gsum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
    gsum += r.gamma(0.3);
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  CHECK(std::abs(gsum / n - 0.3) < 0.01);
}

TEST_CASE("spearman uses average ranks for ties") {
  const std::vector<double> a{1, 2, 2, 3};
  const auto ranks = average_ranks(a);
  CHECK(ranks == std::vector<double>{1, 2.5, 2.5, 4});
  const std::vector<double> b{10, 20, 30, 40}, c{4, 3, 2, 1};
  CHECK(spearman(b, c) == doctest::Approx(-1.0));
  CHECK(spearman(b, b) == doctest::Approx(1.0));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(2.0) == doctest::Approx(0.97725).epsilon(1e-5));
}
