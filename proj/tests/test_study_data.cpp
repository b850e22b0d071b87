#include <gtest/gtest.h>

#include <sstream>

#include "stopover/errors.hpp"
#include "stopover/study_data.hpp"
#include "test_support.hpp"

using namespace stopover;

namespace {

StudyDesign design_of(const std::string& csv) {
  std::istringstream in(csv);
  return parse_design(in);
}

ObservedData histories_of(const StudyDesign& d, const std::string& csv) {
  std::istringstream in(csv);
  ObservedData data;
  data.counts.assign(static_cast<std::size_t>(d.T()), std::nullopt);
  parse_histories(in, d, data);
  return data;
}

const char* kCCR = "day,type,effort,location\n1,C,2,1\n2,C,3.5,2\n3,R,,\n";

}  // namespace

TEST(StudyDesign, ThirtyEightDaysWithNineNulls) {
  std::string csv = "day,type,effort,location\n";
  for (int t = 1; t <= 38; ++t) {
    if (t % 4 == 0 && t <= 36) csv += std::to_string(t) + ",N,,\n";
    else if (t % 2 == 0) csv += std::to_string(t) + ",R,,\n";
    else csv += std::to_string(t) + ",C,4," + std::to_string(1 + t % 3) + "\n";
  }
  const auto d = design_of(csv);
  EXPECT_EQ(d.T(), 38);
  EXPECT_EQ(d.K(), 29);
}

TEST(StudyDesign, MinimalDesign) {
  const auto d = design_of("day,type,effort,location\n1,C,1,1\n");
  EXPECT_EQ(d.T(), 1);
  EXPECT_EQ(d.K(), 1);
}

TEST(StudyDesign, RejectsMalformedRows) {
  EXPECT_THROW(design_of("day,type,effort,location\n1,R,2,\n"), DataError);
  EXPECT_THROW(design_of("day,type,effort,location\n1,C,1,1\n1,C,1,1\n"), DataError);
  EXPECT_THROW(design_of("day,type,effort,location\n1,C,1,4\n"), DataError);
  EXPECT_THROW(design_of("day,type,effort,location\n1,C,-1,1\n"), DataError);
  EXPECT_THROW(design_of("day,type,effort,location\n1,C,1,1\n3,R,,\n"), DataError);
  EXPECT_THROW(design_of("day,kind,effort,location\n1,C,1,1\n"), DataError);
  EXPECT_THROW(design_of("day,type,effort,location\n1,X,,\n"), DataError);
}

TEST(ObservedData, AcceptsWellFormedRow) {
  const auto d = design_of(kCCR);
  const auto data = histories_of(d, "history,count\n102,3\n");
  EXPECT_EQ(data.marked(), 3);
}

TEST(ObservedData, RejectsInvalidHistories) {
  const auto d = design_of(kCCR);
  EXPECT_THROW(histories_of(d, "history,count\n210,1\n"), DataError);  // resight before marking
  EXPECT_THROW(histories_of(d, "history,count\n000,1\n"), DataError);  // latent zero history
  EXPECT_THROW(histories_of(d, "history,count\n10,1\n"), DataError);   // wrong length
  EXPECT_THROW(histories_of(d, "history,count\n101,1\n"), DataError);  // 1 on a resight day
  EXPECT_THROW(histories_of(d, "history,count\n120,1\n"), DataError);  // 2 on a capture day
  EXPECT_THROW(histories_of(d, "history,count\n10-,1\n"), DataError);  // '-' on a sampled day
  EXPECT_THROW(histories_of(d, "history,count\n100,0\n"), DataError);
}

TEST(ObservedData, MergesIdenticalRows) {
  const auto d = design_of(kCCR);
  const auto data = histories_of(d, "history,count\n100,2\n010,1\n100,4\n");
  ASSERT_EQ(data.H(), 2u);
  EXPECT_EQ(data.multiplicity[0], 6);
  EXPECT_EQ(data.marked(), 7);
}

TEST(ObservedData, CountsFollowTheResightSchedule) {
  const auto d = design_of(kCCR);
  ObservedData data;
  {
    std::istringstream in("day,count\n1,\n2,\n3,7\n");
    parse_counts(in, d, data);
  }
  EXPECT_EQ(data.counts[2], 7);
  EXPECT_FALSE(data.counts[0]);
  std::istringstream neg("day,count\n3,-1\n");
  EXPECT_THROW(parse_counts(neg, d, data), DataError);
  std::istringstream wrong("day,count\n1,4\n3,1\n");
  EXPECT_THROW(parse_counts(wrong, d, data), DataError);
  std::istringstream missing("day,count\n1,\n");
  EXPECT_THROW(parse_counts(missing, d, data), DataError);
}

TEST(HistoryBounds, ByDefinition) {
  auto b = bounds_of("01020");
  EXPECT_EQ(b.first, 2);
  EXPECT_EQ(b.last, 4);
  b = bounds_of("10000");
  EXPECT_EQ(b.first, 1);
  EXPECT_EQ(b.last, 1);
  b = bounds_of("011-2");
  EXPECT_EQ(b.first, 2);
  EXPECT_EQ(b.last, 5);
}

TEST(StudyData, SerialisationRoundTrips) {
  const std::string design_csv = "day,type,effort,location\n1,C,2,1\n2,N,,\n3,R,,\n4,C,0.125,3\n";
  const auto d = design_of(design_csv);
  EXPECT_EQ(serialize_design(d), design_csv);
  const std::string hist_csv = "history,count\n1-01,2\n1-21,1\n";
  const auto data = histories_of(d, hist_csv);
  EXPECT_EQ(serialize_histories(data), hist_csv);
  ObservedData c;
  std::istringstream in("day,count\n1,\n2,\n3,5\n4,\n");
  parse_counts(in, d, c);
  EXPECT_EQ(serialize_counts(c), "day,count\n1,\n2,\n3,5\n4,\n");
}

TEST(StudyData, MissingnessPatternIsDeterminedByTheDesign) {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const auto d = testing_support::random_design(rng, static_cast<int>(uniform_int(rng, 1, 10)));
    const auto x = testing_support::random_history(rng, d);
    ASSERT_NO_THROW(validate_history(d, x)) << x;
    for (int t = 1; t <= d.T(); ++t)
      EXPECT_EQ(x[static_cast<std::size_t>(t - 1)] == code::missing, !d.sampled(t));
  }
}
