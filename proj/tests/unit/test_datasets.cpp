#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fedswitch/datasets.hpp"

using namespace fedswitch;

namespace {

CsvSchema breast_cancer_schema() {
  CsvSchema s;
  s.label_column = "diagnosis";
  s.positive_label = "M";
  return s;
}

RngStreamKey split_key(std::uint64_t seed) { return {seed, -1, -1, -1, Purpose::data_split, 0}; }
RngStreamKey partition_key(std::uint64_t seed) { return {seed, -1, -1, -1, Purpose::data_partition, 0}; }

Table small_table(std::size_t rows, std::size_t positives) {
  Table t;
  t.cols = 1;
  t.feature_names = {"x"};
  t.is_numeric = {true};
  for (std::size_t r = 0; r < rows; ++r) {
    t.features.push_back(static_cast<double>(r));
    t.labels.push_back(r < positives ? 1 : 0);
  }
  t.rows = rows;
  return t;
}

}  // namespace

TEST(ParseCsv, HandWrittenTable) {
  std::istringstream in("a,b,label\n1.5,2,yes\n-3,4e1,no\n0,0.25,yes\n");
  CsvSchema s;
  s.label_column = "label";
  s.positive_label = "yes";
  const Table t = parse_csv(in, s);
  EXPECT_EQ(t.rows, 3u);
  EXPECT_EQ(t.cols, 2u);
  EXPECT_EQ(t.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.features, (std::vector<double>{1.5, 2.0, -3.0, 40.0, 0.0, 0.25}));
  EXPECT_EQ(t.labels, (std::vector<int>{1, 0, 1}));
}

TEST(ParseCsv, RaggedRowNamesTheLine) {
  std::istringstream in("a,b,label\n1,2,0\n3,1\n");
  CsvSchema s;
  s.label_column = "label";
  try {
    parse_csv(in, s, "toy.csv");
    FAIL() << "expected data_error";
  } catch (const data_error& e) {
    EXPECT_NE(std::string(e.what()).find("toy.csv:3"), std::string::npos) << e.what();
  }
}

TEST(ParseCsv, UnparseableCellNamesColumn) {
  std::istringstream in("a,b,label\n1,abc,0\n");
  CsvSchema s;
  s.label_column = "label";
  try {
    parse_csv(in, s, "toy.csv");
    FAIL() << "expected data_error";
  } catch (const data_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("toy.csv:2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
  }
}

TEST(ParseCsv, CategoricalOneHotMissingRowsAndProtected) {
  std::istringstream in("age,color,sex,y\n30,red,F,1\n40,?,M,0\n50,blue,M,0\n");
  CsvSchema s;
  s.label_column = "y";
  s.categorical_columns = {{"color", {"blue", "red"}}};
  s.protected_column = "sex";
  s.protected_values = {"F"};
  const Table t = parse_csv(in, s);
  EXPECT_EQ(t.rows, 2u);
  EXPECT_EQ(t.dropped_rows, 1u);
  EXPECT_EQ(t.feature_names, (std::vector<std::string>{"age", "color=blue", "color=red"}));
  EXPECT_EQ(t.features, (std::vector<double>{30, 0, 1, 50, 1, 0}));
  EXPECT_EQ(t.is_protected, (std::vector<bool>{true, false}));
  EXPECT_EQ(t.is_numeric, (std::vector<bool>{true, false, false}));

  std::istringstream bad("age,color,sex,y\n30,green,F,1\n");
  EXPECT_THROW(parse_csv(bad, s), data_error);
}

TEST(LoadCsv, MissingFile) {
  EXPECT_THROW(load_csv("/nonexistent/file.csv", breast_cancer_schema()), data_error);
}

TEST(LoadCsv, BreastCancerShape) {
  const Table t = load_csv(std::string(FEDSWITCH_DATA) + "/breast_cancer.csv", breast_cancer_schema());
  EXPECT_EQ(t.rows, 569u);
  EXPECT_EQ(t.cols, 30u);
  EXPECT_EQ(std::count(t.labels.begin(), t.labels.end(), 1), 212);
}

TEST(SplitTrainTest, FloorOnTrainAndPartition) {
  const Table t = small_table(569, 200);
  const auto [train, test] = split_train_test(t, 0.8, split_key(1));
  EXPECT_EQ(train.rows, 455u);
  EXPECT_EQ(test.rows, 114u);
  std::multiset<double> ids(train.features.begin(), train.features.end());
  ids.insert(test.features.begin(), test.features.end());
  EXPECT_EQ(ids.size(), 569u);
  EXPECT_EQ(std::set<double>(ids.begin(), ids.end()).size(), 569u);
  const auto again = split_train_test(t, 0.8, split_key(1));
  EXPECT_EQ(again.first.features, train.features);
  EXPECT_NE(split_train_test(t, 0.8, split_key(2)).first.features, train.features);
  EXPECT_THROW(split_train_test(t, 1.0, split_key(1)), invalid_argument);
}

TEST(Standardizer, TrainStatisticsOnlyAndIdempotent) {
  Table t = small_table(10, 5);
  const Standardizer s = Standardizer::fit(t);
  EXPECT_DOUBLE_EQ(s.mean[0], 4.5);
  s.apply(t);
  double sum = 0.0, ss = 0.0;
  for (double v : t.features) {
    sum += v;
    ss += v * v;
  }
  EXPECT_NEAR(sum, 0.0, 1e-12);
  EXPECT_NEAR(ss / 10.0, 1.0, 1e-12);
  const Standardizer again = Standardizer::fit(t);
  EXPECT_NEAR(again.mean[0], 0.0, 1e-12);
  EXPECT_NEAR(again.scale[0], 1.0, 1e-12);

  Table other = small_table(4, 2);
  s.apply(other);
  EXPECT_DOUBLE_EQ(other.features[0], -4.5 / s.scale[0]);
}

TEST(Standardizer, SkipsOneHotColumns) {
  Table t;
  t.cols = 2;
  t.rows = 2;
  t.is_numeric = {true, false};
  t.feature_names = {"a", "c=x"};
  t.features = {1.0, 1.0, 3.0, 0.0};
  t.labels = {0, 1};
  const Standardizer s = Standardizer::fit(t);
  s.apply(t);
  EXPECT_EQ(t.features[1], 1.0);
  EXPECT_EQ(t.features[3], 0.0);
}

TEST(IidPartition, SizesAndClassBalance) {
  const Table t = small_table(455, 170);
  const Stratum by[] = {Stratum::label};
  const auto clients = iid_partition(t, 20, partition_key(3), by);
  ASSERT_EQ(clients.size(), 20u);
  std::set<double> seen;
  for (const auto& c : clients) {
    EXPECT_TRUE(c.size() == 22u || c.size() == 23u) << c.size();
    EXPECT_TRUE(c.class1.size() == 8u || c.class1.size() == 9u);
    EXPECT_EQ(c.class0.size() + c.class1.size(), c.size());
    for (double v : c.features) EXPECT_TRUE(seen.insert(v).second);
  }
  EXPECT_EQ(seen.size(), 455u);
}

TEST(IidPartition, SingleClientOwnsEverything) {
  const Table t = small_table(30, 10);
  const Stratum by[] = {Stratum::label};
  const auto clients = iid_partition(t, 1, partition_key(3), by);
  ASSERT_EQ(clients.size(), 1u);
  EXPECT_EQ(clients[0].size(), 30u);
}

TEST(IidPartition, SmallStratumNamesIt) {
  const Table t = small_table(30, 3);
  const Stratum by[] = {Stratum::label};
  try {
    iid_partition(t, 5, partition_key(1), by);
    FAIL() << "expected invalid_configuration";
  } catch (const invalid_configuration& e) {
    EXPECT_NE(std::string(e.what()).find("label=1"), std::string::npos) << e.what();
  }
}

TEST(IidPartition, ProtectedStrata) {
  Table t = small_table(80, 40);
  for (std::size_t r = 0; r < 80; ++r) t.is_protected.push_back(r % 4 < 2);
  const Stratum by[] = {Stratum::label, Stratum::protected_attribute};
  const auto clients = iid_partition(t, 4, partition_key(2), by);
  for (const auto& c : clients) {
    EXPECT_EQ(c.size(), 20u);
    EXPECT_EQ(c.protected_group.size(), 10u);
    EXPECT_EQ(c.unprotected_group.size(), 10u);
  }
  Table plain = small_table(20, 10);
  EXPECT_THROW(iid_partition(plain, 2, partition_key(2), by), invalid_configuration);
}
