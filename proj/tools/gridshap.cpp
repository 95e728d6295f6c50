// gridshap: trains per-line flow models on DC power flow data, explains them
// with SHAP, and recovers the network's PTDF sensitivities from the
// explanations.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridshap/dataset.hpp"
#include "gridshap/dcflow.hpp"
#include "gridshap/errors.hpp"
#include "gridshap/gbtree.hpp"
#include "gridshap/network.hpp"
#include "gridshap/recovery.hpp"
#include "gridshap/shap.hpp"
#include "gridshap/version.hpp"

namespace fs = std::filesystem;
using namespace gridshap;

namespace {

// Exit codes: 0 success, 1 usage, 2 data/validation, 3 numeric.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// Showcase operating point explained by `reproduce` (low PG2, high PG3).
constexpr double kDemoPg2 = 15.0;
constexpr double kDemoPg3 = 267.8;

struct Options {
  std::string case_name = "case9";  // "case9" or a case file path
  std::uint64_t seed = 83;
  int n = 1001;
  double low = 0.0;
  double high = 500.0;
  double split_fraction = 0.75;
  std::string line = "4-5";
  long row = -1;
  bool all = false;
  int bg_size = 0;  // 0 = full training split
  std::string out_dir;
  std::string model_kind = "gbt";
  TrainConfig train;
  std::string config_path;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("GRIDSHAP_OUT_DIR")) return env;
  return "out";
}

double to_real(const std::string& s, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw UsageError("config: bad number for '" + key + "': " + s);
  }
  return v;
}

long to_long(const std::string& s, const std::string& key) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw UsageError("config: bad integer for '" + key + "': " + s);
  }
  return v;
}

// Key=value config file; `#` starts a comment. Flags given on the command
// line win over config values.
void apply_config(Options& opt, const std::map<std::string, bool>& flag_given) {
  if (opt.config_path.empty()) return;
  std::ifstream in(opt.config_path);
  if (!in) throw IoError("cannot open config '" + opt.config_path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto given = [&](const char* name) {
      auto it = flag_given.find(name);
      return it != flag_given.end() && it->second;
    };
    if (key == "case") { if (!given("case")) opt.case_name = val; }
    else if (key == "seed") { if (!given("seed")) opt.seed = static_cast<std::uint64_t>(to_long(val, key)); }
    else if (key == "n") { if (!given("n")) opt.n = static_cast<int>(to_long(val, key)); }
    else if (key == "low") { if (!given("low")) opt.low = to_real(val, key); }
    else if (key == "high") { if (!given("high")) opt.high = to_real(val, key); }
    else if (key == "split") { if (!given("split")) opt.split_fraction = to_real(val, key); }
    else if (key == "line") { if (!given("line")) opt.line = val; }
    else if (key == "row") { if (!given("row")) opt.row = to_long(val, key); }
    else if (key == "bg_size") { if (!given("bg-size")) opt.bg_size = static_cast<int>(to_long(val, key)); }
    else if (key == "out_dir") { if (!given("out-dir")) opt.out_dir = val; }
    else if (key == "model_kind") { if (!given("model-kind")) opt.model_kind = val; }
    else if (key == "n_trees") { opt.train.n_trees = static_cast<int>(to_long(val, key)); }
    else if (key == "max_depth") { opt.train.max_depth = static_cast<int>(to_long(val, key)); }
    else if (key == "learning_rate") { opt.train.learning_rate = to_real(val, key); }
    else if (key == "min_samples_leaf") { opt.train.min_samples_leaf = static_cast<int>(to_long(val, key)); }
    else if (key == "tool_version" || key == "command") { /* manifest extras */ }
    else if (key == "demo_pg2" || key == "demo_pg3") { /* manifest extras */ }
    else { throw UsageError("config: unknown key '" + key + "'"); }
  }
}

// Artifacts are written to a temp name then renamed, so an interrupted run
// never clobbers a previous run's file.
void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Network load_case(const Options& opt) {
  if (opt.case_name == "case9") return builtin_case9();
  return parse_case(read_file(opt.case_name));
}

fs::path dataset_path(const Options& opt) { return fs::path(opt.out_dir) / "dataset.csv"; }
fs::path models_dir(const Options& opt) { return fs::path(opt.out_dir) / "models"; }
fs::path model_path(const Options& opt, const std::string& kind, const std::string& line) {
  return models_dir(opt) / (kind + "_F" + line + ".model");
}

Dataset load_dataset(const Options& opt) { return read_csv(dataset_path(opt).string()); }

void check_kind(const Options& opt) {
  if (opt.model_kind != "gbt" && opt.model_kind != "linear") {
    throw UsageError("--model-kind must be 'gbt' or 'linear'");
  }
}

BackgroundSet make_background(const Options& opt, const Dataset& train) {
  if (opt.bg_size <= 0) return BackgroundSet::from_dataset(train);
  return BackgroundSet::subsample(train, opt.bg_size, opt.seed);
}

ExplanationSet explain_rows(const Options& opt, const Dataset& rows_to_explain,
                            const Dataset& train, const std::string& line) {
  const BackgroundSet bg = make_background(opt, train);
  if (opt.model_kind == "gbt") {
    const Ensemble model = load_gbt(model_path(opt, "gbt", line).string());
    return explain_dataset(model, rows_to_explain, bg);
  }
  const LinearModel model = load_linear(model_path(opt, "linear", line).string());
  return explain_dataset(model, rows_to_explain, bg);
}

void write_manifest(const Options& opt, const std::string& command) {
  std::string m;
  m += "# gridshap run manifest\n";
  const std::time_t now = std::time(nullptr);
  char stamp[64];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m += std::string("# created ") + stamp + "\n";
  m += "tool_version=" + std::string(kVersion) + "\n";
  m += "command=" + command + "\n";
  m += "case=" + opt.case_name + "\n";
  m += "seed=" + std::to_string(opt.seed) + "\n";
  m += "n=" + std::to_string(opt.n) + "\n";
  m += "low=" + fmt(opt.low) + "\n";
  m += "high=" + fmt(opt.high) + "\n";
  m += "split=" + fmt(opt.split_fraction) + "\n";
  m += "n_trees=" + std::to_string(opt.train.n_trees) + "\n";
  m += "max_depth=" + std::to_string(opt.train.max_depth) + "\n";
  m += "learning_rate=" + fmt(opt.train.learning_rate) + "\n";
  m += "min_samples_leaf=" + std::to_string(opt.train.min_samples_leaf) + "\n";
  m += "bg_size=" + std::to_string(opt.bg_size) + "\n";
  m += "line=" + opt.line + "\n";
  m += "model_kind=" + opt.model_kind + "\n";
  m += "out_dir=" + opt.out_dir + "\n";
  if (command == "reproduce") {
    m += "demo_pg2=" + fmt(kDemoPg2) + "\n";
    m += "demo_pg3=" + fmt(kDemoPg3) + "\n";
  }
  atomic_write(fs::path(opt.out_dir) / "manifest.txt", m);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_generate(const Options& opt) {
  if (!(opt.low < opt.high)) throw UsageError("--low must be smaller than --high");
  if (opt.n < 1) throw UsageError("--n must be at least 1");
  const Network net = load_case(opt);
  const Dataset ds = sample_scenarios(net, opt.n, opt.low, opt.high, opt.seed);
  fs::create_directories(opt.out_dir);
  atomic_write(dataset_path(opt), to_csv(ds));
  write_manifest(opt, "generate");
  std::cout << "wrote " << dataset_path(opt).string() << " (" << ds.rows() << " scenarios)\n";
  return 0;
}

int cmd_train(const Options& opt) {
  const Network net = load_case(opt);
  const Dataset ds = load_dataset(opt);
  std::vector<std::string> labels;
  for (const Branch& br : net.branches) labels.push_back(br.label);
  if (ds.target_names != labels) {
    throw ValidationError("dataset header does not match the case's branch list");
  }
  const SplitResult parts = split(ds, opt.split_fraction, opt.seed);
  fs::create_directories(models_dir(opt));
  for (const std::string& line : labels) {
    const Ensemble gbt = fit_gbt(parts.train, line, opt.train);
    atomic_write(model_path(opt, "gbt", line), serialize_model(gbt));
    const LinearModel lin = fit_linear(parts.train, line);
    atomic_write(model_path(opt, "linear", line), serialize_model(lin));
  }
  std::cout << "trained " << labels.size() << " gbt + " << labels.size()
            << " linear models (" << parts.train.rows() << " train / "
            << parts.test.rows() << " test rows) -> " << models_dir(opt).string() << "\n";
  return 0;
}

std::string waterfall_csv(const Explanation& ex) {
  std::string out = "step,label,feature_value,phi,cumulative\n";
  out += "0,base,,," + fmt(ex.base_value) + "\n";
  std::vector<int> order(static_cast<std::size_t>(ex.phis.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(ex.phis(a)) > std::abs(ex.phis(b));
  });
  double running = ex.base_value;
  int step = 1;
  for (int i : order) {
    running += ex.phis(i);
    out += std::to_string(step++) + "," + ex.feature_names[static_cast<std::size_t>(i)] +
           "," + fmt(ex.feature_values(i)) + "," + fmt(ex.phis(i)) + "," + fmt(running) + "\n";
  }
  out += std::to_string(step) + ",prediction,,," + fmt(ex.fx) + "\n";
  return out;
}

void print_waterfall(const Explanation& ex, const std::string& line) {
  std::printf("local explanation, line %s\n", line.c_str());
  std::printf("  E[f(X)] = %8.1f MW\n", ex.base_value);
  std::vector<int> order(static_cast<std::size_t>(ex.phis.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(ex.phis(a)) > std::abs(ex.phis(b));
  });
  for (int i : order) {
    std::printf("  %-4s = %6.1f MW   phi = %+8.1f MW\n",
                ex.feature_names[static_cast<std::size_t>(i)].c_str(),
                ex.feature_values(i), ex.phis(i));
  }
  std::printf("  f(x)    = %8.1f MW\n", ex.fx);
}

int cmd_explain(const Options& opt, bool quiet = false) {
  check_kind(opt);
  if (opt.row < 0 && !opt.all) throw UsageError("explain needs --row N or --all");
  const Dataset ds = load_dataset(opt);
  const SplitResult parts = split(ds, opt.split_fraction, opt.seed);
  fs::create_directories(opt.out_dir);

  if (opt.all) {
    const ExplanationSet es = explain_rows(opt, ds, parts.train, opt.line);
    const fs::path out = fs::path(opt.out_dir) /
                         ("explanations_F" + opt.line + "_" + opt.model_kind + ".csv");
    atomic_write(out, explanations_to_csv(es, /*include_local_acc=*/true));
    if (!quiet) std::cout << "wrote " << out.string() << " (" << es.explanations.size() << " rows)\n";
    return 0;
  }

  if (opt.row >= ds.rows()) {
    throw UsageError("--row " + std::to_string(opt.row) + " out of range (dataset has " +
                     std::to_string(ds.rows()) + " rows)");
  }
  Dataset one;
  one.feature_names = ds.feature_names;
  one.target_names = ds.target_names;
  one.injections = ds.injections.row(opt.row);
  one.flows = ds.flows.row(opt.row);
  const ExplanationSet es = explain_rows(opt, one, parts.train, opt.line);
  const Explanation& ex = es.explanations.front();
  const fs::path out = fs::path(opt.out_dir) /
                       ("waterfall_F" + opt.line + "_" + opt.model_kind + ".csv");
  atomic_write(out, waterfall_csv(ex));
  if (!quiet) {
    print_waterfall(ex, opt.line);
    std::cout << "wrote " << out.string() << "\n";
  }
  return 0;
}

int cmd_global(const Options& opt, bool quiet = false) {
  check_kind(opt);
  const Dataset ds = load_dataset(opt);
  const SplitResult parts = split(ds, opt.split_fraction, opt.seed);
  // Global view = local explanations of the whole training split.
  const ExplanationSet es = explain_rows(opt, parts.train, parts.train, opt.line);
  fs::create_directories(opt.out_dir);

  const auto k = parts.train.injections.cols();
  Eigen::VectorXd lo(k), hi(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    lo(c) = parts.train.injections.col(c).minCoeff();
    hi(c) = parts.train.injections.col(c).maxCoeff();
  }
  std::string bees = "row,feature,feature_value,feature_value_norm,phi\n";
  for (std::size_t r = 0; r < es.explanations.size(); ++r) {
    const Explanation& ex = es.explanations[r];
    for (Eigen::Index c = 0; c < k; ++c) {
      const double norm = hi(c) > lo(c) ? (ex.feature_values(c) - lo(c)) / (hi(c) - lo(c)) : 0.0;
      bees += std::to_string(r) + "," + ex.feature_names[static_cast<std::size_t>(c)] + "," +
              fmt(ex.feature_values(c)) + "," + fmt(norm) + "," + fmt(ex.phis(c)) + "\n";
    }
  }
  const fs::path bees_path = fs::path(opt.out_dir) /
                             ("beeswarm_F" + opt.line + "_" + opt.model_kind + ".csv");
  atomic_write(bees_path, bees);

  const auto ranked = feature_importance(es);
  std::string imp = "rank,feature,mean_abs_phi\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    imp += std::to_string(i + 1) + "," + ranked[i].first + "," + fmt(ranked[i].second) + "\n";
  }
  const fs::path imp_path = fs::path(opt.out_dir) /
                            ("importance_F" + opt.line + "_" + opt.model_kind + ".csv");
  atomic_write(imp_path, imp);

  if (!quiet) {
    std::printf("global importance, line %s (mean |phi| over %zu training scenarios)\n",
                opt.line.c_str(), es.explanations.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      std::printf("  %zu. %-4s %8.2f MW\n", i + 1, ranked[i].first.c_str(), ranked[i].second);
    }
    std::cout << "wrote " << bees_path.string() << ", " << imp_path.string() << "\n";
  }
  return 0;
}

int cmd_ptdf(const Options& opt, bool quiet = false) {
  const Network net = load_case(opt);
  const PtdfMatrix ptdf = analytical_ptdf(net);
  fs::create_directories(opt.out_dir);
  const fs::path out = fs::path(opt.out_dir) / "ptdf_true.csv";
  atomic_write(out, ptdf_csv(ptdf));
  if (!quiet) {
    std::cout << ptdf_table(ptdf);
    std::cout << "wrote " << out.string() << "\n";
  }
  return 0;
}

PtdfMatrix recover_from_models(const Options& opt, const Network& net, const Dataset& ds,
                               std::vector<RecoveryResult>* per_line = nullptr) {
  const SplitResult parts = split(ds, opt.split_fraction, opt.seed);
  const BackgroundSet bg = make_background(opt, parts.train);
  std::vector<ShapLibrary> libs;
  for (const Branch& br : net.branches) {
    ExplanationSet es;
    if (opt.model_kind == "gbt") {
      const Ensemble model = load_gbt(model_path(opt, "gbt", br.label).string());
      es = explain_dataset(model, ds, bg);
    } else {
      const LinearModel model = load_linear(model_path(opt, "linear", br.label).string());
      es = explain_dataset(model, ds, bg);
    }
    libs.push_back(build_library(es, ds));
  }
  if (per_line) {
    for (const ShapLibrary& lib : libs) per_line->push_back(recover_ptdf(lib));
  }
  return recover_all(net, libs);
}

void write_recovery_outputs(const Options& opt, const PtdfMatrix& recovered,
                            const std::vector<RecoveryResult>& per_line) {
  atomic_write(fs::path(opt.out_dir) / ("recovered_ptdf_" + opt.model_kind + ".csv"),
               ptdf_csv(recovered));
  std::string summary = "line,epsilon_mw,residual_rms_mw\n";
  for (std::size_t l = 0; l < per_line.size(); ++l) {
    summary += recovered.line_labels[l] + "," + fmt(per_line[l].epsilon) + "," +
               fmt(per_line[l].residual_rms) + "\n";
  }
  atomic_write(fs::path(opt.out_dir) / ("recovery_summary_" + opt.model_kind + ".csv"), summary);
}

int cmd_recover(const Options& opt, bool quiet = false) {
  check_kind(opt);
  const Network net = load_case(opt);
  const Dataset ds = load_dataset(opt);
  fs::create_directories(opt.out_dir);
  std::vector<RecoveryResult> per_line;
  const PtdfMatrix recovered = recover_from_models(opt, net, ds, &per_line);
  write_recovery_outputs(opt, recovered, per_line);
  if (!quiet) {
    std::cout << "SHAP-recovered PTDF (" << opt.model_kind << " models)\n"
              << ptdf_table(recovered);
  }
  return 0;
}

int cmd_compare(const Options& opt, bool quiet = false) {
  check_kind(opt);
  const Network net = load_case(opt);
  const Dataset ds = load_dataset(opt);
  fs::create_directories(opt.out_dir);
  std::vector<RecoveryResult> per_line;
  const PtdfMatrix recovered = recover_from_models(opt, net, ds, &per_line);
  write_recovery_outputs(opt, recovered, per_line);
  const PtdfComparison cmp = compare_ptdf(analytical_ptdf(net), recovered);
  atomic_write(fs::path(opt.out_dir) / ("ptdf_compare_" + opt.model_kind + ".csv"),
               comparison_csv(cmp));
  if (!quiet) {
    std::cout << "analytical vs SHAP-recovered PTDF (" << opt.model_kind << " models)\n"
              << comparison_table(cmp);
  }
  return 0;
}

int cmd_reproduce(const Options& base_opt) {
  const auto t0 = std::chrono::steady_clock::now();
  Options opt = base_opt;
  cmd_generate(opt);
  cmd_train(opt);

  // Local explanation of the test scenario nearest the demo operating point.
  const Dataset ds = load_dataset(opt);
  const SplitResult parts = split(ds, opt.split_fraction, opt.seed);
  Eigen::Index nearest_test = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < parts.test.rows(); ++r) {
    const double d = std::hypot(parts.test.injections(r, 0) - kDemoPg2,
                                parts.test.injections(r, 1) - kDemoPg3);
    if (d < best) {
      best = d;
      nearest_test = r;
    }
  }
  // Map the test row back to its dataset row (rows are bit-identical copies).
  Eigen::Index ds_row = -1;
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    if (ds.injections.row(r) == parts.test.injections.row(nearest_test)) {
      ds_row = r;
      break;
    }
  }

  Options ex_opt = opt;
  ex_opt.model_kind = "gbt";
  ex_opt.row = ds_row;
  cmd_explain(ex_opt, /*quiet=*/true);
  ex_opt.row = -1;
  ex_opt.all = true;
  cmd_explain(ex_opt, /*quiet=*/true);
  cmd_global(ex_opt, /*quiet=*/true);
  cmd_ptdf(opt, /*quiet=*/true);

  Options cmp_opt = opt;
  cmp_opt.model_kind = "linear";
  cmd_compare(cmp_opt, /*quiet=*/true);
  cmp_opt.model_kind = "gbt";
  cmd_compare(cmp_opt, /*quiet=*/true);

  write_manifest(opt, "reproduce");
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("reproduce: dataset, 18 models, explanations, global summary, PTDF tables\n");
  std::printf("           in %s (%.1f s, seed %llu)\n", opt.out_dir.c_str(), elapsed,
              static_cast<unsigned long long>(opt.seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SHAP explanations for DC line-flow models, and PTDF recovery from them"};
  app.require_subcommand(1);

  Options opt;
  opt.out_dir = default_out_dir();

  std::map<std::string, bool> given;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--case", opt.case_name, "'case9' or a case file path");
    cmd->add_option("--seed", opt.seed, "run seed (sampling, split, background)");
    cmd->add_option("--split", opt.split_fraction, "train fraction");
    cmd->add_option("--bg-size", opt.bg_size, "background subsample size, 0 = full training split");
    cmd->add_option("--out-dir", opt.out_dir, "artifact directory (env GRIDSHAP_OUT_DIR)");
    cmd->add_option("--line", opt.line, "branch label, e.g. 4-5");
    cmd->add_option("--model-kind", opt.model_kind, "gbt or linear");
    cmd->add_option("--config", opt.config_path, "key=value config file (flags win)");
  };

  CLI::App* generate = app.add_subcommand("generate", "sample scenarios to dataset.csv");
  generate->add_option("--n", opt.n, "scenario count");
  generate->add_option("--low", opt.low, "sampling lower bound, MW");
  generate->add_option("--high", opt.high, "sampling upper bound, MW");
  CLI::App* train = app.add_subcommand("train", "fit gbt + linear models per line");
  CLI::App* explain = app.add_subcommand("explain", "local SHAP explanation(s)");
  explain->add_option("--row", opt.row, "dataset row to explain");
  explain->add_flag("--all", opt.all, "explain every dataset row");
  CLI::App* global = app.add_subcommand("global", "global SHAP summary for one line");
  CLI::App* ptdf = app.add_subcommand("ptdf", "analytical PTDF table");
  CLI::App* recover = app.add_subcommand("recover", "PTDF recovered from SHAP values");
  CLI::App* compare = app.add_subcommand("compare", "analytical vs recovered PTDF");
  CLI::App* reproduce = app.add_subcommand("reproduce", "full pipeline under one seed");
  reproduce->add_option("--n", opt.n, "scenario count");
  reproduce->add_option("--low", opt.low, "sampling lower bound, MW");
  reproduce->add_option("--high", opt.high, "sampling upper bound, MW");

  for (CLI::App* cmd : {generate, train, explain, global, ptdf, recover, compare, reproduce}) {
    add_common(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* active = app.get_subcommands().front();
  for (const CLI::Option* o : active->get_options()) {
    const std::string name = o->get_name();
    if (name.size() > 2 && o->count() > 0) given[name.substr(2)] = true;
  }

  try {
    apply_config(opt, given);
    const std::string cmd = active->get_name();
    if (cmd == "generate") return cmd_generate(opt);
    if (cmd == "train") return cmd_train(opt);
    if (cmd == "explain") return cmd_explain(opt);
    if (cmd == "global") return cmd_global(opt);
    if (cmd == "ptdf") return cmd_ptdf(opt);
    if (cmd == "recover") return cmd_recover(opt);
    if (cmd == "compare") return cmd_compare(opt);
    if (cmd == "reproduce") return cmd_reproduce(opt);
    throw UsageError("unknown command");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
