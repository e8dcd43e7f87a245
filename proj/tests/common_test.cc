#include "tabhybrid/common.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "synthetic.h"
#include "tabhybrid/csv.h"

namespace tabhybrid {
namespace {

TEST(SplitMix64Test, MatchesReferenceSequence) {
  // First two outputs of the reference generator seeded with 0.
  EXPECT_EQ(SplitMix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(SplitMix64(0x9e3779b97f4a7c15ULL), 0x6e789e6aa1b965f4ULL);
}

TEST(DeriveSeedTest, PathSensitive) {
  EXPECT_EQ(DeriveSeed(7, {1, 2}), DeriveSeed(7, {1, 2}));
  EXPECT_NE(DeriveSeed(7, {1, 2}), DeriveSeed(7, {2, 1}));
  EXPECT_NE(DeriveSeed(7, {1}), DeriveSeed(7, {1, 0}));
  EXPECT_NE(DeriveSeed(7, {}), DeriveSeed(8, {}));
}

TEST(HashUniformTest, RangeAndMean) {
  double sum = 0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const double u = HashUniform(3, i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(Fnv1aTest, ReferenceVectors) {
  EXPECT_EQ(Fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(Fnv1a64("abc"), 0xe71fa2190541574bULL);
  EXPECT_EQ(HexDigest(0xabcULL), "0000000000000abc");
}

TEST(FormatDoubleTest, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(FormatDouble(std::nan("")), "nan");
  EXPECT_EQ(FormatDouble(0.85), "0.85");
  EXPECT_EQ(FormatDouble(3.0), "3");
}

TEST(SigmoidTest, IdentityAndTails) {
  EXPECT_EQ(Sigmoid(0.0), 0.5);
  EXPECT_NEAR(Sigmoid(2.0) + Sigmoid(-2.0), 1.0, 1e-15);
  EXPECT_GT(Sigmoid(-800.0), -1.0);
  EXPECT_EQ(Sigmoid(800.0), 1.0);
  EXPECT_FALSE(std::isnan(Sigmoid(-800.0)));
}

TEST(MatrixTest, SelectAndStack) {
  const Matrix m({{1, 2}, {3, 4}, {5, 6}});
  const std::vector<std::size_t> idx = {2, 0};
  const Matrix s = m.SelectRows(idx);
  EXPECT_EQ(s, Matrix({{5, 6}, {1, 2}}));
  EXPECT_EQ(s.HStack(Matrix({{7}, {8}})), Matrix({{5, 6, 7}, {1, 2, 8}}));
  EXPECT_THROW(s.HStack(Matrix({{7}})), Error);
}

TEST(TextFileTest, WriteCreatesParentsAndReadsBack) {
  testing::TempDir dir("common");
  const auto path = dir.path() / "a" / "b" / "f.txt";
  WriteTextFile(path, "hello\n");
  EXPECT_EQ(ReadTextFile(path), "hello\n");
  try {
    ReadTextFile(dir.path() / "missing");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(CsvTest, QuotedFieldsAndLineEndings) {
  const auto doc = csv::Parse("a,b,c\r\n1,\"x, \"\"y\"\"\",3\n\n4,,\"\"\n");
  ASSERT_EQ(doc.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(doc.rows.size(), 2u);
  EXPECT_EQ(doc.rows[0][1], "x, \"y\"");
  EXPECT_EQ(doc.rows[1], (std::vector<std::string>{"4", "", ""}));
}

TEST(CsvTest, ByteOrderMarkAndMissingFinalNewline) {
  const auto doc = csv::Parse("\xEF\xBB\xBFid,v\n1,2");
  EXPECT_EQ(doc.header[0], "id");
  ASSERT_EQ(doc.rows.size(), 1u);
  EXPECT_EQ(doc.rows[0][1], "2");
}

TEST(CsvTest, UnterminatedQuoteIsRejected) {
  EXPECT_THROW(csv::Parse("a\n\"open\n"), Error);
}

TEST(CsvTest, JoinRowEscapesAndParsesBack) {
  const std::vector<std::string> fields = {"plain", "with,comma", "quote\"d", "line\nbreak"};
  const std::string line = csv::JoinRow(fields);
  EXPECT_EQ(line, "plain,\"with,comma\",\"quote\"\"d\",\"line\nbreak\"");
  const auto doc = csv::Parse(line + "\n");
  EXPECT_EQ(doc.header, fields);
}

}  // namespace
}  // namespace tabhybrid
