#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "kubo_ando/catalog.hpp"
#include "kubo_ando/io.hpp"
#include "test_support.hpp"

namespace {

using namespace kubo_ando;
using kubo_ando::io::json;
using kubo_ando::testing::diag;

TEST(MatrixJson, RoundTrip) {
  Rng rng(91);
  const SymMatrix m = random_symmetric(4, rng);
  const json j = io::matrix_to_json(m);
  EXPECT_EQ(j["n"], 4);
  EXPECT_EQ(j["entries"].size(), 16u);
  EXPECT_EQ(io::matrix_from_json(j).matrix(), m.matrix());
}

TEST(MatrixJson, RejectsMalformed) {
  EXPECT_THROW(io::matrix_from_json(json::parse(R"({"n": 2})")), InputError);
  EXPECT_THROW(io::matrix_from_json(json::parse(R"({"n": 2, "entries": [1, 2, 3]})")), InputError);
  EXPECT_THROW(io::matrix_from_json(json::parse(R"({"n": 2, "entries": [1, 2, 3, "x"]})")), InputError);
  EXPECT_THROW(io::matrix_from_json(json::parse(R"({"n": 2, "entries": [1, 2, 3, 4]})")), InputError);
  EXPECT_THROW(io::matrix_from_json(json::parse(R"({"n": 0, "entries": []})")), InputError);
  EXPECT_THROW(io::matrix_from_json(json::parse(R"({"n": 1.5, "entries": [1]})")), InputError);
  EXPECT_NO_THROW(io::matrix_from_json(json::parse(R"({"n": 2, "entries": [1, 2, 2, 4]})")));
}

TEST(MeasureJson, RoundTripAndValidation) {
  const BorelMeasure m(0.25, 0.25, {{1.0, 0.5}});
  const json j = io::measure_to_json(m);
  EXPECT_EQ(j.dump(), R"({"atom0":0.25,"atomInf":0.25,"nodes":[[1.0,0.5]],"quadrature":false})");
  EXPECT_EQ(io::measure_from_json(j), m);
  EXPECT_THROW(io::measure_from_json(json::parse(R"({"atom0": 0})")), InputError);
  EXPECT_THROW(io::measure_from_json(json::parse(R"({"nodes": [[0, 1]]})")), InputError);
  EXPECT_THROW(io::measure_from_json(json::parse(R"({"nodes": [1, 2]})")), InputError);
  EXPECT_THROW(io::measure_from_json(json::parse(R"({"atom0": "a"})")), InputError);
}

TEST(VerdictJson, SortedKeysAndValidation) {
  const SpdMatrix a(diag({2.0, 1.0}));
  const SpdMatrix b(diag({1.0, 2.0}));
  const OrderVerdict v = order_determination_check(catalog::geometric(), a, b, 10, 1);
  const json j = io::verdict_to_json(v);
  std::string prev;
  for (auto it = j.begin(); it != j.end(); ++it) {
    EXPECT_LT(prev, it.key());
    prev = it.key();
  }
  EXPECT_FALSE(j["witness"].is_null());
  EXPECT_GT(j["witness"]["margin"].get<double>(), 0.0);

  OrderVerdict bad = v;
  bad.norm_dominated = true;
  EXPECT_THROW(io::verdict_to_json(bad), InconsistencyError);
}

TEST(ScanCsv, Format) {
  LimitScan scan;
  scan.s_values = {1.0, 2.0};
  scan.values = {3.0, 0.1};
  scan.target = 3.0;
  EXPECT_EQ(io::scan_to_csv(scan), "s,value,target\n1,3,3\n2,0.10000000000000001,3\n");
}

TEST(ReadJsonFile, ErrorsAreInputErrors) {
  EXPECT_THROW(io::read_json_file("/nonexistent/path.json"), InputError);
  const std::string path = ::testing::TempDir() + "bad.json";
  {
    std::ofstream out(path);
    out << "{not json";
  }
  EXPECT_THROW(io::read_json_file(path), InputError);
  std::remove(path.c_str());
}

}  // namespace
