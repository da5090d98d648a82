#include "d2l/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "d2l/data.hpp"
#include "d2l/error.hpp"
#include "d2l/lid.hpp"
#include "d2l/metrics_io.hpp"
#include "d2l/trainer.hpp"
#include "json.hpp"

namespace d2l {

namespace fs = std::filesystem;

namespace {

// Thrown for configuration problems detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SourceOptions {
  std::string data_dir;
  bool blobs = false;
  BlobSpec blob{16, 32, 10, 10000, 1, 1.0, 1.0, 0.0};
  std::size_t n_test = 2000;
  std::string idx_images;
  std::string idx_labels;
  std::string idx_test_images;
  std::string idx_test_labels;
  std::size_t limit = 0;
};

void add_source_options(CLI::App* cmd, SourceOptions& o, const std::string& seed_flag) {
  cmd->add_option("--data", o.data_dir, "Directory written by gen-data (train.d2ldata, test.d2ldata)");
  cmd->add_flag("--blobs", o.blobs, "Generate manifold blobs");
  cmd->add_option("--d-intrinsic", o.blob.d_intrinsic, "Blob manifold dimension")->capture_default_str();
  cmd->add_option("--d-ambient", o.blob.d_ambient, "Blob ambient dimension")->capture_default_str();
  cmd->add_option("--classes", o.blob.classes, "Number of classes")->capture_default_str();
  cmd->add_option("--n", o.blob.n, "Training samples")->capture_default_str();
  cmd->add_option("--n-test", o.n_test, "Held-out samples")->capture_default_str();
  cmd->add_option(seed_flag, o.blob.seed, "Blob generator seed")->capture_default_str();
  cmd->add_option("--separation", o.blob.separation, "Scale of the class offsets")->capture_default_str();
  cmd->add_option("--radius", o.blob.radius, "Radius of each class ball")->capture_default_str();
  cmd->add_option("--jitter", o.blob.jitter, "Ambient Gaussian noise")->capture_default_str();
  cmd->add_option("--idx-images", o.idx_images, "IDX training images");
  cmd->add_option("--idx-labels", o.idx_labels, "IDX training labels");
  cmd->add_option("--idx-test-images", o.idx_test_images, "IDX test images");
  cmd->add_option("--idx-test-labels", o.idx_test_labels, "IDX test labels");
  cmd->add_option("--limit", o.limit, "Use only the first N training samples (0 = all)")->capture_default_str();
}

SplitDataset load_source(const SourceOptions& o) {
  const int chosen = int{!o.data_dir.empty()} + int{o.blobs} + int{!o.idx_images.empty()};
  if (chosen != 1) throw UsageError("choose exactly one data source: --data, --blobs or --idx-images");

  SplitDataset sd;
  if (!o.data_dir.empty()) {
    sd.train = load_dataset(fs::path(o.data_dir) / "train.d2ldata");
    sd.test = load_dataset(fs::path(o.data_dir) / "test.d2ldata");
  } else if (o.blobs) {
    sd = gen_manifold_blobs_split(o.blob, o.n_test);
  } else {
    if (o.idx_labels.empty()) throw UsageError("--idx-images requires --idx-labels");
    Dataset all = load_idx(o.idx_images, o.idx_labels, Split::Train);
    if (!o.idx_test_images.empty()) {
      if (o.idx_test_labels.empty()) throw UsageError("--idx-test-images requires --idx-test-labels");
      sd.test = load_idx(o.idx_test_images, o.idx_test_labels, Split::Test);
      sd.train = std::move(all);
    } else {
      // Hold out the last n_test rows.
      if (all.size() <= o.n_test) throw UsageError("IDX set too small to hold out --n-test samples");
      std::vector<std::size_t> train_rows(all.size() - o.n_test), test_rows(o.n_test);
      std::iota(train_rows.begin(), train_rows.end(), std::size_t{0});
      std::iota(test_rows.begin(), test_rows.end(), all.size() - o.n_test);
      sd.train = all.subset(train_rows);
      sd.test = all.subset(test_rows);
      sd.test.split = Split::Test;
    }
  }
  if (o.limit > 0 && o.limit < sd.train.size()) {
    std::vector<std::size_t> rows(o.limit);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    sd.train = sd.train.subset(rows);
  }
  return sd;
}

std::vector<LrDrop> parse_lr_drops(const std::string& text) {
  std::vector<LrDrop> drops;
  if (text.empty() || text == "none") return drops;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto colon = item.find(':');
    try {
      LrDrop d;
      d.epoch = std::stoi(item.substr(0, colon));
      d.divisor = colon == std::string::npos ? 10.0 : std::stod(item.substr(colon + 1));
      drops.push_back(d);
    } catch (const std::logic_error&) {
      throw UsageError("bad --lr-drops entry '" + item + "', expected EPOCH[:DIVISOR]");
    }
  }
  return drops;
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void print_dataset_stats(std::ostream& out, const char* name, const Dataset& ds) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(ds.class_count), 0);
  for (int y : ds.true_labels) ++counts[static_cast<std::size_t>(y)];
  out << name << ": n=" << ds.size() << " d=" << ds.dim() << " classes=" << ds.class_count << " counts=[";
  for (std::size_t c = 0; c < counts.size(); ++c) out << (c ? "," : "") << counts[c];
  out << "]\n";
}

// ---------------------------------------------------------------------------
// config files
// ---------------------------------------------------------------------------

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Resolved value of every long option, one "key = value" line each, in
// registration order. Feeding the file back through --config reproduces the run.
std::string config_echo(const CLI::App& cmd) {
  std::ostringstream out;
  for (const CLI::Option* opt : cmd.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help" || names.front() == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    if (value.empty()) continue;
    if (value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
    out << names.front() << " = " << value << "\n";
  }
  return out.str();
}

// Expands "--config FILE" in the arguments of the train subcommand: each
// "key = value" line becomes "--key=value" unless the key was given explicitly.
std::vector<std::string> merge_config_file(const std::vector<std::string>& args, const CLI::App& cmd) {
  if (args.empty() || args.front() != cmd.get_name()) return args;
  std::string file;
  std::vector<std::string> rest;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (file.empty()) return args;

  std::set<std::string> explicit_keys;
  for (const auto& a : rest) {
    if (a.size() < 2 || a[0] != '-') continue;
    std::string name = a[1] == '-' ? a.substr(2, a.find('=') - 2) : a.substr(1, 1);
    for (const CLI::Option* opt : cmd.get_options()) {
      if (opt->check_lname(name) || opt->check_sname(name)) {
        if (!opt->get_lnames().empty()) name = opt->get_lnames().front();
        break;
      }
    }
    explicit_keys.insert(name);
  }

  std::ifstream in(file);
  if (!in) throw UsageError("cannot open config file " + file);
  std::vector<std::string> merged{args.front()};
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';' || t[0] == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError(file + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!explicit_keys.contains(key)) merged.push_back("--" + key + "=" + value);
  }
  merged.insert(merged.end(), rest.begin(), rest.end());
  return merged;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

struct GenDataOptions {
  SourceOptions source;
  std::string out_dir;
};

int cmd_gen_data(const GenDataOptions& o, std::ostream& out) {
  SplitDataset sd = load_source(o.source);
  fs::create_directories(o.out_dir);
  save_dataset(sd.train, fs::path(o.out_dir) / "train.d2ldata");
  save_dataset(sd.test, fs::path(o.out_dir) / "test.d2ldata");
  print_dataset_stats(out, "train", sd.train);
  print_dataset_stats(out, "test", sd.test);
  const std::size_t probe = std::min<std::size_t>(sd.train.size(), 1280);
  if (probe > 20) {
    std::vector<std::size_t> rows(probe);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    out << "raw_feature_lid(k=20, n=" << probe
        << ")=" << fmt(batch_lid_mean(sd.train.subset(rows).features, 20), "%.4f") << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
  SourceOptions source;
  TrainConfig cfg;
  std::string strategy = "d2l";
  std::string lr_drops = "40:10,80:10";
  std::string std_kind = "population";
  std::vector<std::uint64_t> seeds;
  std::uint64_t seed = 1;
  std::string out_dir;
  bool quiet = false;
};

nlohmann::ordered_json run_info(const TrainConfig& cfg, const TrainResult& r) {
  nlohmann::ordered_json j;
  j["strategy"] = std::string(to_string(cfg.strategy));
  j["noise_rate"] = cfg.noise_rate;
  j["seed"] = cfg.seed;
  j["epochs_completed"] = r.records.size();
  j["turning_epoch"] = r.trajectory.turning_epoch;
  j["lid_seconds"] = r.timing.lid_seconds;
  j["total_seconds"] = r.timing.total_seconds;
  j["lid_fraction"] = r.timing.lid_fraction();
  return j;
}

int cmd_train(TrainOptions& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  const auto strategy = parse_strategy(o.strategy);
  if (!strategy) throw UsageError("unknown strategy '" + o.strategy + "'");
  o.cfg.strategy = *strategy;
  o.cfg.optimizer.lr_drops = parse_lr_drops(o.lr_drops);
  if (o.std_kind == "population") {
    o.cfg.std_kind = StdKind::Population;
  } else if (o.std_kind == "sample") {
    o.cfg.std_kind = StdKind::Sample;
  } else {
    throw UsageError("--std must be population or sample");
  }
  std::vector<std::uint64_t> seeds = o.seeds.empty() ? std::vector<std::uint64_t>{o.seed} : o.seeds;
  o.cfg.seed = seeds.front();
  o.cfg.validate();

  const SplitDataset clean = load_source(o.source);
  if (clean.train.size() <= static_cast<std::size_t>(o.cfg.lid_k) ||
      std::min<std::size_t>(clean.train.size(), static_cast<std::size_t>(o.cfg.batch_size)) <=
          static_cast<std::size_t>(o.cfg.lid_k))
    throw UsageError("InsufficientPoints: LID batches must hold more than k points");

  const fs::path root(o.out_dir);
  fs::create_directories(root);
  {
    std::ofstream echo(root / "config.ini");
    echo << config_echo(sub);
  }

  std::vector<SeedRun> runs;
  for (std::uint64_t seed : seeds) {
    TrainConfig cfg = o.cfg;
    cfg.seed = seed;
    const fs::path dir = seeds.size() == 1 ? root : root / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    const Dataset train = inject_symmetric_noise(clean.train, {cfg.noise_rate, seed});

    std::optional<TrainResult> trained;
    try {
      trained = run_training(train, clean.test, cfg, [&](const EpochRecord& r, const Network& model, const Sgd& opt) {
        if (r.rolled_back) save_checkpoint(snapshot(model, opt, r.epoch), dir / "turning.ckpt");
        if (!o.quiet)
          out << "seed " << seed << " epoch " << r.epoch << " loss " << fmt(r.train_loss, "%.4f") << " train_acc "
              << fmt(r.train_acc, "%.4f") << " test_acc " << fmt(r.test_acc, "%.4f") << " lid "
              << fmt(r.lid, "%.3f") << " alpha " << fmt(r.alpha, "%.4f") << (r.rolled_back ? " rollback" : "")
              << "\n";
      });
    } catch (const Error& e) {
      err << "training aborted (seed " << seed << "): " << e.what() << "\n";
      return kExitRuntime;
    }
    TrainResult& result = *trained;

    write_records_csv(dir / "records.csv", result.records);
    save_checkpoint(Checkpoint{result.model.layers(), result.momentum, static_cast<int>(result.records.size()) - 1},
                    dir / "final.ckpt");
    std::ofstream(dir / "run.json") << run_info(cfg, result).dump(2) << "\n";
    out << "seed " << seed << " final_test_acc " << fmt(result.records.back().test_acc, "%.4f")
        << " turning_epoch " << result.trajectory.turning_epoch << " lid_time_fraction "
        << fmt(result.timing.lid_fraction(), "%.4f") << "\n";
    runs.push_back({seed, std::move(result.records)});
  }

  const RunSummary summary = summarize(std::string(to_string(o.cfg.strategy)), o.cfg.noise_rate, runs);
  const std::string text = summary_to_json(summary);
  std::ofstream(root / "summary.json") << text;
  out << text;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate-lid
// ---------------------------------------------------------------------------

struct EstimateOptions {
  SourceOptions source;
  std::string points_file;
  std::string checkpoint;
  int m = 10;
  int k = 20;
  int batch_size = 128;
  std::uint64_t seed = 0;
};

Dataset read_points(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> row;
    for (double v; ss >> v;) row.push_back(v);
    if (!ss.eof()) throw UsageError("unparsable value on line " + std::to_string(lineno) + " of " + path.string());
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw UsageError("line " + std::to_string(lineno) + " has " + std::to_string(row.size()) + " coordinates");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw UsageError(path.string() + " holds no points");
  Dataset ds;
  ds.class_count = 1;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  ds.true_labels.assign(rows.size(), 0);
  ds.observed_labels = ds.true_labels;
  return ds;
}

int cmd_estimate_lid(const EstimateOptions& o, std::ostream& out, std::ostream& err) {
  Dataset ds;
  if (!o.points_file.empty()) {
    if (!o.source.data_dir.empty() || o.source.blobs || !o.source.idx_images.empty())
      throw UsageError("--points cannot be combined with another data source");
    ds = read_points(o.points_file);
  } else {
    ds = load_source(o.source).train;
  }
  if (o.m < 1 || o.batch_size < 1) throw UsageError("--m and --batch-size must be positive");
  if (o.k < 2) throw UsageError("--k must be at least 2");
  const std::size_t batch = std::min<std::size_t>(ds.size(), static_cast<std::size_t>(o.batch_size));
  if (batch <= static_cast<std::size_t>(o.k))
    throw UsageError("InsufficientPoints: batch of " + std::to_string(batch) + " points cannot supply k=" +
                     std::to_string(o.k) + " neighbours");

  // Without a checkpoint the raw coordinates are scored.
  std::optional<Network> model;
  if (!o.checkpoint.empty()) {
    model.emplace(load_checkpoint(o.checkpoint).layers);
    if (model->input_width() != ds.dim())
      throw UsageError("checkpoint expects " + std::to_string(model->input_width()) + " inputs, data has " +
                       std::to_string(ds.dim()));
  }

  std::vector<double> scores;
  try {
    for (int j = 0; j < o.m; ++j) {
      if (model) {
        scores.push_back(epoch_lid_score(*model, ds, 1, o.k, o.batch_size, o.seed, j));
      } else {
        const auto picked = batches(ds.size(), batch, o.seed, static_cast<std::uint64_t>(j)).front();
        scores.push_back(batch_lid_mean(ds.subset(picked).features, static_cast<std::size_t>(o.k)));
      }
    }
  } catch (const Error& e) {
    err << "LID estimation failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  const MeanStd ms = mean_std(scores);
  out << "space " << (model ? "penultimate" : "raw") << "\n";
  out << "batches " << scores.size() << " batch_size " << batch << " k " << o.k << "\n";
  out << "lid_mean " << fmt(ms.mean, "%.6f") << "\n";
  out << "lid_std " << (ms.std ? fmt(*ms.std, "%.6f") : std::string("nan")) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// summarize
// ---------------------------------------------------------------------------

struct SummarizeOptions {
  std::vector<std::string> runs;
  std::string out_file;
};

int cmd_summarize(const SummarizeOptions& o, std::ostream& out) {
  std::vector<fs::path> run_dirs;
  for (const auto& r : o.runs) {
    const fs::path p(r);
    if (fs::exists(p / "records.csv")) {
      run_dirs.push_back(p);
      continue;
    }
    if (!fs::is_directory(p)) throw UsageError(r + " is not a run directory");
    std::vector<fs::path> children;
    for (const auto& entry : fs::directory_iterator(p))
      if (entry.is_directory() && fs::exists(entry.path() / "records.csv")) children.push_back(entry.path());
    if (children.empty()) throw UsageError(r + " contains no records.csv");
    std::sort(children.begin(), children.end());
    run_dirs.insert(run_dirs.end(), children.begin(), children.end());
  }

  // Group by (strategy, noise rate), preserving first-seen order.
  std::vector<std::pair<std::string, double>> keys;
  std::map<std::pair<std::string, double>, std::vector<SeedRun>> groups;
  for (const auto& dir : run_dirs) {
    std::string strategy = "unknown";
    double noise = 0.0;
    std::uint64_t seed = 0;
    if (std::ifstream info(dir / "run.json"); info) {
      const auto j = nlohmann::json::parse(info, nullptr, false);
      if (j.is_discarded()) throw UsageError("malformed " + (dir / "run.json").string());
      strategy = j.value("strategy", strategy);
      noise = j.value("noise_rate", noise);
      seed = j.value("seed", seed);
    }
    const auto key = std::make_pair(strategy, noise);
    if (!groups.contains(key)) keys.push_back(key);
    groups[key].push_back({seed, read_records_csv(dir / "records.csv")});
  }

  std::vector<RunSummary> summaries;
  for (const auto& key : keys) summaries.push_back(summarize(key.first, key.second, groups[key]));
  const std::string text = summaries_to_json(summaries);
  if (!o.out_file.empty()) std::ofstream(o.out_file) << text;
  out << text;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dimensionality-driven learning: LID-monitored training on noisy labels", "d2l"};
  app.require_subcommand(1);

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate or convert a dataset into the cache format");
  add_source_options(gen_cmd, gen.source, "--seed");
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train with LID monitoring under a chosen strategy");
  std::string config_file;
  train_cmd->add_option("--config", config_file, "key = value file; explicit flags take precedence");
  add_source_options(train_cmd, tr.source, "--data-seed");
  train_cmd->add_option("--strategy", tr.strategy, "ce | d2l | boot-soft | boot-hard | forward | backward")
      ->capture_default_str();
  train_cmd->add_option("--noise-rate", tr.cfg.noise_rate, "Symmetric label-noise rate in [0,1)")
      ->capture_default_str();
  train_cmd->add_option("-T,--epochs", tr.cfg.epochs, "Total epochs T")->capture_default_str();
  train_cmd->add_option("-w,--window", tr.cfg.window, "Turning-point window w")->capture_default_str();
  train_cmd->add_option("-m,--m", tr.cfg.lid_batches, "Batches per LID score")->capture_default_str();
  train_cmd->add_option("-k,--k", tr.cfg.lid_k, "LID neighbourhood size")->capture_default_str();
  train_cmd->add_option("--batch-size", tr.cfg.batch_size, "Training and LID batch size")->capture_default_str();
  train_cmd->add_option("--lr", tr.cfg.optimizer.learning_rate, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--momentum", tr.cfg.optimizer.momentum, "SGD momentum")->capture_default_str();
  train_cmd->add_option("--weight-decay", tr.cfg.optimizer.weight_decay, "L2 weight decay")->capture_default_str();
  train_cmd->add_option("--lr-drops", tr.lr_drops, "EPOCH:DIVISOR list, or none")->capture_default_str();
  train_cmd->add_option("--hidden", tr.cfg.hidden, "Hidden widths")->delimiter(',')->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Run seed (init, batches, noise)")->capture_default_str();
  train_cmd->add_option("--seeds", tr.seeds, "Comma-separated seeds for a sweep")->delimiter(',');
  train_cmd->add_option("--beta-soft", tr.cfg.beta_soft, "Soft bootstrapping weight")->capture_default_str();
  train_cmd->add_option("--beta-hard", tr.cfg.beta_hard, "Hard bootstrapping weight")->capture_default_str();
  train_cmd->add_option("--std", tr.std_kind, "Turning-point std: population | sample")->capture_default_str();
  train_cmd->add_option("--patience", tr.cfg.patience, "Early-stopping patience on test accuracy (0 = off)")
      ->capture_default_str();
  train_cmd->add_flag("--lid-on-test", tr.cfg.lid_on_test, "Score LID on the held-out set");
  train_cmd->add_option("--out", tr.out_dir, "Output directory")->required();
  train_cmd->add_flag("-q,--quiet", tr.quiet, "Only print per-seed results");

  EstimateOptions est;
  auto* est_cmd = app.add_subcommand("estimate-lid", "Mean LID over m sampled batches");
  add_source_options(est_cmd, est.source, "--data-seed");
  est_cmd->add_option("--points", est.points_file, "Text file, one point per line");
  est_cmd->add_option("--checkpoint", est.checkpoint, "Score penultimate representations of this model");
  est_cmd->add_option("-m,--m", est.m, "Number of batches")->capture_default_str();
  est_cmd->add_option("-k,--k", est.k, "Neighbourhood size")->capture_default_str();
  est_cmd->add_option("--batch-size", est.batch_size, "Points per batch")->capture_default_str();
  est_cmd->add_option("--seed", est.seed, "Batch sampling seed")->capture_default_str();

  SummarizeOptions sum;
  auto* sum_cmd = app.add_subcommand("summarize", "Mean and std across seeds of finished runs");
  sum_cmd->add_option("runs", sum.runs, "Run directories or sweep directories")->required();
  sum_cmd->add_option("--out", sum.out_file, "Also write the report here");

  std::vector<std::string> merged;
  try {
    merged = merge_config_file(args, *train_cmd);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<std::string> reversed(merged.rbegin(), merged.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
    if (train_cmd->parsed()) return cmd_train(tr, *train_cmd, out, err);
    if (est_cmd->parsed()) return cmd_estimate_lid(est, out, err);
    if (sum_cmd->parsed()) return cmd_summarize(sum, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace d2l
