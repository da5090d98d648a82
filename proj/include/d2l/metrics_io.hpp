#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "d2l/matrix.hpp"
#include "d2l/trainer.hpp"

namespace d2l {

// Fraction of rows whose argmax (ties to the lowest index) equals the label.
double accuracy(const Matrix& probs, const std::vector<int>& labels);

inline constexpr const char* kRecordsHeader = "epoch,train_loss,train_acc,test_acc,lid,alpha,rolled_back";

// Floats are written with 17 significant digits so a round trip is exact.
void write_records_csv(std::ostream& out, const std::vector<EpochRecord>& records);
void write_records_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& records);
std::vector<EpochRecord> read_records_csv(std::istream& in);
std::vector<EpochRecord> read_records_csv(const std::filesystem::path& path);

struct MeanStd {
  double mean = 0.0;
  std::optional<double> std;  // sample std; absent for a single value
};

MeanStd mean_std(const std::vector<double>& values);

struct RunSummary {
  std::string strategy;
  double noise_rate = 0.0;
  std::vector<std::uint64_t> seeds;
  MeanStd final_test_acc;
  MeanStd best_test_acc;
  MeanStd min_lid;
  MeanStd final_lid;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> records;
};

RunSummary summarize(const std::string& strategy, double noise_rate, const std::vector<SeedRun>& runs);

// JSON text with a fixed key order.
std::string summary_to_json(const RunSummary& summary);
std::string summaries_to_json(const std::vector<RunSummary>& summaries);

}  // namespace d2l
