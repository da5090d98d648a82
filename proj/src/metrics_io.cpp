#include "d2l/metrics_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "d2l/error.hpp"
#include "d2l/strategies.hpp"
#include "json.hpp"

namespace d2l {

double accuracy(const Matrix& probs, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size())
    throw Error(ErrorCode::ShapeMismatch, "one label per prediction row is required");
  if (labels.empty()) return 0.0;
  const auto predicted = argmax_rows(probs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// strtod rather than stod: stod rejects subnormals, which %.17g can emit.
double parse_double(const std::string& field) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) throw std::invalid_argument(field);
  return v;
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<EpochRecord>& records) {
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << r.epoch << ',' << fmt17(r.train_loss) << ',' << fmt17(r.train_acc) << ',' << fmt17(r.test_acc) << ','
        << fmt17(r.lid) << ',' << fmt17(r.alpha) << ',' << (r.rolled_back ? 1 : 0) << '\n';
  }
}

void write_records_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_records_csv(out, records);
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::vector<EpochRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader)
    throw Error(ErrorCode::BadMagic, "records file does not start with the expected header");
  std::vector<EpochRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 7)
      throw Error(ErrorCode::TruncatedFile, "line " + std::to_string(lineno) + " has " +
                                                std::to_string(fields.size()) + " fields, expected 7");
    try {
      EpochRecord r;
      r.epoch = std::stoi(fields[0]);
      r.train_loss = parse_double(fields[1]);
      r.train_acc = parse_double(fields[2]);
      r.test_acc = parse_double(fields[3]);
      r.lid = parse_double(fields[4]);
      r.alpha = parse_double(fields[5]);
      r.rolled_back = fields[6] == "1";
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidConfig, "malformed number on line " + std::to_string(lineno));
    }
  }
  return out;
}

std::vector<EpochRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_records_csv(in);
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

RunSummary summarize(const std::string& strategy, double noise_rate, const std::vector<SeedRun>& runs) {
  if (runs.empty()) throw Error(ErrorCode::InvalidConfig, "summary needs at least one run");
  RunSummary s;
  s.strategy = strategy;
  s.noise_rate = noise_rate;
  std::vector<double> final_acc, best_acc, min_lid, final_lid;
  for (const auto& run : runs) {
    if (run.records.empty()) throw Error(ErrorCode::InvalidConfig, "run without records");
    s.seeds.push_back(run.seed);
    final_acc.push_back(run.records.back().test_acc);
    final_lid.push_back(run.records.back().lid);
    double best = run.records.front().test_acc;
    double lo = run.records.front().lid;
    for (const auto& r : run.records) {
      best = std::max(best, r.test_acc);
      lo = std::min(lo, r.lid);
    }
    best_acc.push_back(best);
    min_lid.push_back(lo);
  }
  s.final_test_acc = mean_std(final_acc);
  s.best_test_acc = mean_std(best_acc);
  s.min_lid = mean_std(min_lid);
  s.final_lid = mean_std(final_lid);
  return s;
}

namespace {

nlohmann::ordered_json to_json(const MeanStd& m) {
  nlohmann::ordered_json j;
  j["mean"] = m.mean;
  j["std"] = m.std ? nlohmann::ordered_json(*m.std) : nlohmann::ordered_json(nullptr);
  return j;
}

nlohmann::ordered_json to_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["strategy"] = s.strategy;
  j["noise_rate"] = s.noise_rate;
  j["seeds"] = s.seeds;
  j["final_test_acc"] = to_json(s.final_test_acc);
  j["best_test_acc"] = to_json(s.best_test_acc);
  j["min_lid"] = to_json(s.min_lid);
  j["final_lid"] = to_json(s.final_lid);
  return j;
}

}  // namespace

std::string summary_to_json(const RunSummary& summary) { return to_json(summary).dump(2) + "\n"; }

std::string summaries_to_json(const std::vector<RunSummary>& summaries) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : summaries) arr.push_back(to_json(s));
  return arr.dump(2) + "\n";
}

}  // namespace d2l
