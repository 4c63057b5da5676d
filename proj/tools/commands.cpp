#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ordnmf/baselines.hpp"
#include "ordnmf/errors.hpp"
#include "ordnmf/evaluation.hpp"
#include "ordnmf/inference.hpp"
#include "ordnmf/model_io.hpp"
#include "ordnmf/ordinal_matrix.hpp"
#include "ordnmf/synthetic.hpp"

namespace ordnmf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Files are written under a temporary name and renamed only once the whole
// command has succeeded.
class StagedOutputs {
 public:
  StagedOutputs() = default;
  StagedOutputs(const StagedOutputs&) = delete;
  StagedOutputs& operator=(const StagedOutputs&) = delete;
  ~StagedOutputs() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& [tmp, final_path] : files_) fs::remove(tmp, ec);
  }

  fs::path stage(const fs::path& final_path) {
    fs::path tmp = final_path;
    tmp += ".partial";
    files_.emplace_back(tmp, final_path);
    return tmp;
  }

  void commit() {
    for (const auto& [tmp, final_path] : files_) fs::rename(tmp, final_path);
    committed_ = true;
  }

 private:
  std::vector<std::pair<fs::path, fs::path>> files_;
  bool committed_ = false;
};

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out += suffix;
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw DataError("cannot write " + path.string());
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw DataError(what + " not found: " + path.string());
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Numbers are echoed as numbers, everything else as strings.
json typed(const std::string& text) {
  if (text.empty()) return text;
  std::size_t used = 0;
  try {
    if (text.find_first_not_of("-0123456789") == std::string::npos) {
      const long long n = std::stoll(text, &used);
      if (used == text.size()) return n;
    }
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  return text;
}

// Effective value of every option of a subcommand, after command line and
// config file have been merged.
json effective_config(const CLI::App& sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->get_items_expected_max() == 0) {
      cfg[name] = opt->count() > 0 && opt->as<bool>();
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      std::string joined;
      for (std::size_t r = 0; r < res.size(); ++r) joined += (r ? "," : "") + res[r];
      cfg[name] = typed(joined);
    } else {
      cfg[name] = typed(opt->get_default_str());
    }
  }
  return cfg;
}

std::string tsv_preamble(const std::string& command, const json& config) {
  return "# schema_version: " + std::to_string(kSchemaVersion) + "\n# command: " + command +
         "\n# config: " + config.dump() + "\n";
}

json meta_base(const std::string& command, const json& config) {
  return json{{"schema_version", kSchemaVersion}, {"command", command}, {"config", config}};
}

char parse_delimiter(const std::string& d) {
  if (d == "tab" || d == "\\t") return '\t';
  if (d == "space" || d == "whitespace") return ' ';
  if (d == "comma") return ',';
  if (d.size() == 1) return d[0];
  throw ConfigError("unknown delimiter '" + d + "' (use tab, space, comma or a single character)");
}

json matrix_summary(const OrdinalMatrix& m) {
  std::vector<std::size_t> counts(m.class_counts().begin(), m.class_counts().end());
  return json{{"n_users", m.n_users()},
              {"n_items", m.n_items()},
              {"n_classes", m.n_classes()},
              {"nnz", m.nnz()},
              {"class_counts", counts}};
}

// ---------------------------------------------------------------- options

struct QuantizeOptions {
  std::string input, output, delimiter = "tab";
  std::vector<double> boundaries{1, 2, 5, 10, 20, 50, 100, 200, 500};
  bool closed_top = false, skip_header = false, single_pass = false;
  std::size_t min_user = 0, min_item = 0;
};

struct SplitOptions {
  std::string input, train_out, test_out;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct TrainOptions {
  std::string train, model;
  long k = 10;
  double alpha_w = 0.3, alpha_h = 0.3, tol = 1e-5, init_jitter = FitConfig{}.init_jitter;
  std::size_t max_iter = 1000, restarts = 1;
  std::uint64_t seed = 0;
  bool bepof = false, pf = false, no_threshold_learning = false;
  Class binarize_at = 0;
  unsigned threads = 1;
};

struct EvaluateOptions {
  std::string model, train, test, output;
  std::vector<Class> thresholds;
  std::size_t list_length = 100;
  bool no_train_exclusion = false, score_empty_users = false;
  unsigned threads = 1;
};

struct PpcOptions {
  std::string model, train, output;
  std::size_t cells = kDefaultPpcCells;
  std::uint64_t seed = 0;
};

struct PredictOptions {
  std::string model, train, output, user_map, item_map;
  std::vector<std::string> users;
  std::size_t list_length = 100;
  bool no_train_exclusion = false;
};

struct SimulateOptions {
  std::string output;
  Index users = 200, items = 150;
  long k = 5;
  std::vector<double> theta{1.0, 0.6, 0.35, 0.2, 0.1};
  double shape = 0.3, rate = 1.0;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------- commands

void cmd_quantize(const QuantizeOptions& o, const json& config, std::ostream& out) {
  require_file(o.input, "input file");
  TripletFormat format;
  format.delimiter = parse_delimiter(o.delimiter);
  format.skip_header = o.skip_header;
  const LoadedTriplets loaded = load_triplets(o.input, format);

  QuantizationScheme scheme;
  scheme.boundaries = o.boundaries;
  scheme.open_top = !o.closed_top;
  const OrdinalMatrix quantized = quantize_counts(loaded.counts, scheme);
  const FilterResult filtered = filter_activity(quantized, o.min_user, o.min_item, !o.single_pass);
  const IdMap users = loaded.users.subset(filtered.kept_users);
  const IdMap items = loaded.items.subset(filtered.kept_items);

  StagedOutputs staged;
  const fs::path out_path = o.output;
  write_matrix(staged.stage(out_path), filtered.matrix);
  write_id_map(staged.stage(with_suffix(out_path, ".users.tsv")), users);
  write_id_map(staged.stage(with_suffix(out_path, ".items.tsv")), items);
  json meta = meta_base("quantize", config);
  meta["matrix"] = matrix_summary(filtered.matrix);
  meta["before_filtering"] = matrix_summary(quantized);
  write_text(staged.stage(with_suffix(out_path, ".meta.json")), meta.dump(2) + "\n");
  staged.commit();

  out << "quantized " << loaded.counts.entries.size() << " triplets into V = " << filtered.matrix.n_classes()
      << " classes; kept " << filtered.matrix.n_users() << " users, " << filtered.matrix.n_items() << " items, "
      << filtered.matrix.nnz() << " entries\n";
}

void cmd_split(const SplitOptions& o, const json& config, std::ostream& out) {
  require_file(o.input, "matrix file");
  const OrdinalMatrix m = read_matrix(o.input);
  const auto [train, test] = train_test_split(m, o.test_fraction, o.seed);

  StagedOutputs staged;
  write_matrix(staged.stage(o.train_out), train);
  write_matrix(staged.stage(o.test_out), test);
  for (const auto& [path, part] : {std::pair{fs::path(o.train_out), &train}, std::pair{fs::path(o.test_out), &test}}) {
    json meta = meta_base("split", config);
    meta["matrix"] = matrix_summary(*part);
    write_text(staged.stage(with_suffix(path, ".meta.json")), meta.dump(2) + "\n");
  }
  staged.commit();
  out << "split " << m.nnz() << " entries into " << train.nnz() << " train / " << test.nnz() << " test\n";
}

void cmd_train(const TrainOptions& o, const json& config, std::ostream& out, std::ostream& err) {
  if (o.restarts < 1) throw ConfigError("restarts must be at least 1");
  if (o.bepof && o.pf) throw ConfigError("--bepof and --pf are mutually exclusive");
  require_file(o.train, "train matrix");
  OrdinalMatrix data = read_matrix(o.train);
  if (o.binarize_at > 0) data = binarize(data, {o.binarize_at});

  FitConfig fc;
  fc.rank = o.k;
  fc.alpha_w = o.alpha_w;
  fc.alpha_h = o.alpha_h;
  fc.tolerance = o.tol;
  fc.max_iterations = o.max_iter;
  fc.init_jitter = o.init_jitter;
  fc.learn_thresholds = !o.no_threshold_learning;
  fc.threads = o.threads;
  if (o.bepof) fc = make_bepof_config(fc);
  if (o.pf) fc = make_pf_config(fc);
  if ((o.bepof || o.pf) && data.n_classes() != 1) {
    throw ConfigError("binary models need V = 1 data; pass --binarize-at <s>");
  }

  StagedOutputs staged;
  json runs = json::array();
  std::optional<FitResult> best;
  std::uint64_t best_seed = o.seed;
  for (std::size_t r = 0; r < o.restarts; ++r) {
    fc.seed = o.seed + r;
    FitResult result = fit(data, fc);
    for (const auto& line : result.log) err << "seed " << fc.seed << ": " << line << "\n";

    std::string trace = tsv_preamble("train", config) + "# seed: " + std::to_string(fc.seed) + "\niteration\telbo\n";
    for (std::size_t t = 0; t < result.elbo_trace.size(); ++t) {
      trace += std::to_string(t) + "\t" + fmt(result.elbo_trace[t]) + "\n";
    }
    write_text(staged.stage(with_suffix(o.model, ".trace.seed" + std::to_string(fc.seed) + ".tsv")), trace);

    const double final_elbo = result.elbo_trace.back();
    runs.push_back(json{{"seed", fc.seed},
                        {"final_elbo", final_elbo},
                        {"iterations", result.iterations},
                        {"converged", result.converged},
                        {"log", result.log}});
    out << "seed " << fc.seed << ": ELBO " << fmt(final_elbo) << " after " << result.iterations << " iterations"
        << (result.converged ? "" : " (not converged)") << "\n";
    if (!best || final_elbo > best->elbo_trace.back()) {
      best = std::move(result);
      best_seed = fc.seed;
    }
  }

  write_model(staged.stage(o.model), best->state);
  const auto thetas = best->state.thresholds.thetas();
  json meta = meta_base("train", config);
  meta["data"] = matrix_summary(data);
  meta["restarts"] = runs;
  meta["best_seed"] = best_seed;
  meta["final_elbo"] = best->elbo_trace.back();
  meta["converged"] = best->converged;
  meta["iterations"] = best->iterations;
  meta["theta"] = std::vector<double>(thetas.begin(), thetas.end());
  write_text(staged.stage(with_suffix(o.model, ".meta.json")), meta.dump(2) + "\n");
  staged.commit();
  out << "kept seed " << best_seed << "; model written to " << o.model << "\n";
}

void check_model_shape(const VariationalState& state, const OrdinalMatrix& m, const std::string& what) {
  if (state.n_users() != m.n_users() || state.n_items() != m.n_items()) {
    throw DataError("model is " + std::to_string(state.n_users()) + " x " + std::to_string(state.n_items()) + " but " +
                    what + " is " + std::to_string(m.n_users()) + " x " + std::to_string(m.n_items()));
  }
}

void cmd_evaluate(const EvaluateOptions& o, const json& config, std::ostream& out) {
  require_file(o.model, "model file");
  require_file(o.train, "train matrix");
  require_file(o.test, "test matrix");
  const VariationalState state = read_model(o.model);
  const OrdinalMatrix train = read_matrix(o.train);
  const OrdinalMatrix test = read_matrix(o.test);
  check_model_shape(state, train, "train matrix");
  check_model_shape(state, test, "test matrix");
  if (test.empty()) throw DataError("test matrix has no entries");

  std::vector<Class> thresholds = o.thresholds;
  if (thresholds.empty()) {
    thresholds.resize(test.n_classes());
    std::iota(thresholds.begin(), thresholds.end(), Class{1});
  }
  NdcgOptions nopt;
  nopt.list_length = o.list_length;
  nopt.exclude_train = !o.no_train_exclusion;
  nopt.skip_users_without_relevant = !o.score_empty_users;
  nopt.threads = o.threads;
  const RankingMetricsReport report = ndcg_at_m(state, train, test, thresholds, nopt);

  std::optional<double> lnz;
  if (state.thresholds.n_classes() > 1) {
    if (state.thresholds.n_classes() != test.n_classes()) {
      throw DataError("model has V = " + std::to_string(state.thresholds.n_classes()) + " but test data has V = " +
                      std::to_string(test.n_classes()));
    }
    lnz = log_lik_nonzeros(test, state);
  }

  std::ostringstream table;
  table << std::left << std::setw(22) << "metric" << std::setw(14) << "value" << "users\n";
  std::string tsv = tsv_preamble("evaluate", config) + "metric\tthreshold\tvalue\tn_users\n";
  for (const auto& r : report.results) {
    const std::string name = "NDCG@" + std::to_string(report.list_length) + " s=" + std::to_string(r.threshold);
    const std::string value = r.empty() ? "N/A" : fmt(r.mean_ndcg);
    table << std::setw(22) << name << std::setw(14) << (r.empty() ? "N/A" : std::to_string(r.mean_ndcg))
          << r.n_users << "\n";
    tsv += "ndcg@" + std::to_string(report.list_length) + "\t" + std::to_string(r.threshold) + "\t" + value + "\t" +
           std::to_string(r.n_users) + "\n";
  }
  table << std::setw(22) << "L_NZ" << (lnz ? fmt(*lnz) : std::string("N/A")) << "\n";
  tsv += "lnz\t\t" + (lnz ? fmt(*lnz) : std::string("N/A")) + "\t\n";

  if (!o.output.empty()) {
    StagedOutputs staged;
    write_text(staged.stage(o.output), tsv);
    staged.commit();
  }
  out << table.str();
}

void cmd_ppc(const PpcOptions& o, const json& config, std::ostream& out) {
  require_file(o.model, "model file");
  require_file(o.train, "train matrix");
  const VariationalState state = read_model(o.model);
  const OrdinalMatrix train = read_matrix(o.train);
  check_model_shape(state, train, "train matrix");
  std::mt19937_64 rng(o.seed);
  const PPCReport report = ppc_histogram(state, train, rng, o.cells);

  std::string hist = tsv_preamble("ppc", config);
  hist += "# nonzero_percent observed: " + fmt(100 * report.observed_nonzero) +
          " simulated: " + fmt(100 * report.simulated_nonzero) + "\n";
  hist += "class\tfrequency\n";
  for (std::size_t v = 0; v < report.simulated.size(); ++v) hist += std::to_string(v) + "\t" + fmt(report.simulated[v]) + "\n";

  json meta = meta_base("ppc", config);
  meta["n_cells"] = report.n_cells;
  meta["observed"] = report.observed;
  meta["simulated"] = report.simulated;
  meta["observed_nonzero_percent"] = 100 * report.observed_nonzero;
  meta["simulated_nonzero_percent"] = 100 * report.simulated_nonzero;

  StagedOutputs staged;
  write_text(staged.stage(o.output), hist);
  write_text(staged.stage(with_suffix(o.output, ".meta.json")), meta.dump(2) + "\n");
  staged.commit();

  out << "class  observed     simulated\n";
  for (std::size_t v = 0; v < report.simulated.size(); ++v) {
    out << std::left << std::setw(7) << v << std::setw(13) << report.observed[v] << report.simulated[v] << "\n";
  }
  out << "non-zero: observed " << 100 * report.observed_nonzero << "%, simulated " << 100 * report.simulated_nonzero
      << "% (" << report.n_cells << " cells)\n";
}

void cmd_predict(const PredictOptions& o, const json& config, std::ostream& out) {
  require_file(o.model, "model file");
  const VariationalState state = read_model(o.model);
  std::optional<OrdinalMatrix> train;
  if (!o.train.empty()) {
    require_file(o.train, "train matrix");
    train = read_matrix(o.train);
    check_model_shape(state, *train, "train matrix");
  }
  std::optional<IdMap> user_map, item_map;
  if (!o.user_map.empty()) user_map = read_id_map(o.user_map);
  if (!o.item_map.empty()) item_map = read_id_map(o.item_map);
  if (user_map && user_map->size() != state.n_users()) throw DataError("user map does not match the model");
  if (item_map && item_map->size() != state.n_items()) throw DataError("item map does not match the model");

  std::vector<Index> users;
  if (o.users.empty()) {
    users.resize(state.n_users());
    std::iota(users.begin(), users.end(), Index{0});
  } else {
    std::map<std::string, Index> lookup;
    if (user_map) {
      for (Index u = 0; u < user_map->size(); ++u) lookup.emplace(user_map->ids[u], u);
    }
    for (const auto& id : o.users) {
      if (user_map) {
        const auto it = lookup.find(id);
        if (it == lookup.end()) throw LookupError("unknown user id " + id);
        users.push_back(it->second);
      } else {
        std::size_t used = 0;
        unsigned long idx = 0;
        try {
          idx = std::stoul(id, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != id.size()) throw ConfigError("user '" + id + "' is not an index; pass --user-map for ids");
        users.push_back(static_cast<Index>(idx));
      }
    }
  }
  const RowMatrix scores = predict_scores(state, users);

  std::string tsv = tsv_preamble("predict", config) + "user\trank\titem\tscore\n";
  for (std::size_t r = 0; r < users.size(); ++r) {
    const Index u = users[r];
    std::vector<char> excluded(state.n_items(), 0);
    if (train && !o.no_train_exclusion) {
      for (std::size_t p = train->row_begin(u); p < train->row_end(u); ++p) excluded[train->item(p)] = 1;
    }
    std::vector<Index> items;
    for (Index i = 0; i < state.n_items(); ++i) {
      if (!excluded[i]) items.push_back(i);
    }
    const auto row = scores.row(static_cast<Eigen::Index>(r));
    const std::size_t depth = std::min(o.list_length, items.size());
    std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(depth), items.end(),
                      [&](Index a, Index b) { return row(a) != row(b) ? row(a) > row(b) : a < b; });
    const std::string uid = user_map ? user_map->ids[u] : std::to_string(u);
    for (std::size_t k = 0; k < depth; ++k) {
      const Index i = items[k];
      tsv += uid + "\t" + std::to_string(k + 1) + "\t" + (item_map ? item_map->ids[i] : std::to_string(i)) + "\t" +
             fmt(row(i)) + "\n";
    }
  }
  if (o.output.empty()) {
    out << tsv;
  } else {
    StagedOutputs staged;
    write_text(staged.stage(o.output), tsv);
    staged.commit();
    out << "wrote top-" << o.list_length << " lists for " << users.size() << " users to " << o.output << "\n";
  }
}

void cmd_simulate(const SimulateOptions& o, const json& config, std::ostream& out) {
  SyntheticSpec spec;
  spec.n_users = o.users;
  spec.n_items = o.items;
  spec.rank = o.k;
  spec.theta = o.theta;
  spec.shape_w = spec.shape_h = o.shape;
  spec.rate_w = spec.rate_h = o.rate;
  spec.seed = o.seed;
  const SyntheticData data = simulate(spec);

  std::string text = "# schema_version: " + std::to_string(kSchemaVersion) + "\n# config: " + config.dump() + "\n";
  for (const auto& e : data.matrix.entries()) {
    text += "u" + std::to_string(e.user) + "\ti" + std::to_string(e.item) + "\t" + std::to_string(e.cls) + "\n";
  }
  StagedOutputs staged;
  write_text(staged.stage(o.output), text);
  staged.commit();
  out << "simulated " << data.matrix.nnz() << " non-zero entries (V = " << data.matrix.n_classes() << ")\n";
}

// ---------------------------------------------------------------- config

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat "key = value" file; '#' starts a comment line.
std::vector<std::pair<std::string, std::string>> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value in " + path.string(), lineno);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw ParseError("empty key in " + path.string(), lineno);
    out.emplace_back(key, value);
  }
  return out;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Appends --key=value for config-file keys that the active subcommand knows
// and the command line does not set. Keys unknown to every subcommand are
// rejected so that typos surface.
void merge_config(CLI::App& app, std::vector<std::string>& args) {
  std::string config_path;
  for (std::size_t a = 0; a < args.size(); ++a) {
    if (args[a] == "--config" && a + 1 < args.size()) config_path = args[a + 1];
    if (args[a].rfind("--config=", 0) == 0) config_path = args[a].substr(9);
  }
  if (config_path.empty()) return;
  CLI::App* active = nullptr;
  for (const auto& a : args) {
    if (a.empty() || a[0] == '-') continue;
    for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) {
      if (sub->get_name() == a) active = sub;
    }
    break;
  }
  if (active == nullptr) return;
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (key == "config") throw ConfigError("config files cannot include other config files");
    bool known = false;
    for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) {
      known = known || sub->get_option_no_throw("--" + key) != nullptr;
    }
    if (!known) throw ConfigError("unknown config key '" + key + "'");
    if (active->get_option_no_throw("--" + key) == nullptr || given_on_command_line(args, key)) continue;
    args.push_back("--" + key + "=" + value);
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ordinal non-negative matrix factorization with inverse-gamma noise", "ordnmf"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value file; command-line flags take precedence");
  };

  QuantizeOptions qo;
  auto* quantize = app.add_subcommand("quantize", "Quantize a count triplet file into an ordinal matrix");
  quantize->add_option("--input", qo.input, "user, item, count triplets")->required();
  quantize->add_option("--output", qo.output, "binary matrix file")->required();
  quantize->add_option("--boundaries", qo.boundaries, "increasing class boundaries")->delimiter(',');
  quantize->add_flag("--closed-top", qo.closed_top, "reject counts above the last boundary");
  quantize->add_option("--delimiter", qo.delimiter, "tab, space, comma or a single character");
  quantize->add_flag("--skip-header", qo.skip_header, "ignore the first line");
  quantize->add_option("--min-user-nnz", qo.min_user, "minimum entries per user");
  quantize->add_option("--min-item-nnz", qo.min_item, "minimum entries per item");
  quantize->add_flag("--single-pass-filter", qo.single_pass, "filter once instead of to a fixed point");
  add_config(quantize);

  SplitOptions so;
  auto* split = app.add_subcommand("split", "Split a matrix into train and test entries");
  split->add_option("--input", so.input, "binary matrix file")->required();
  split->add_option("--train-out", so.train_out, "train matrix output")->required();
  split->add_option("--test-out", so.test_out, "test matrix output")->required();
  split->add_option("--test-fraction", so.test_fraction, "fraction of entries held out");
  split->add_option("--seed", so.seed, "random seed");
  add_config(split);

  TrainOptions to;
  auto* train = app.add_subcommand("train", "Fit the model by coordinate-ascent variational inference");
  train->add_option("--train", to.train, "train matrix")->required();
  train->add_option("--model", to.model, "model output file")->required();
  train->add_option("--k", to.k, "number of latent factors");
  train->add_option("--alpha-w", to.alpha_w, "user factor prior shape");
  train->add_option("--alpha-h", to.alpha_h, "item factor prior shape");
  train->add_option("--tol", to.tol, "relative ELBO tolerance");
  train->add_option("--max-iter", to.max_iter, "iteration cap");
  train->add_option("--init-jitter", to.init_jitter, "relative spread of the initial shapes");
  train->add_option("--seed", to.seed, "seed of the first restart");
  train->add_option("--restarts", to.restarts, "number of random restarts");
  train->add_flag("--bepof", to.bepof, "Bernoulli-Poisson model on binary data");
  train->add_flag("--pf", to.pf, "Poisson factorization on binary data");
  train->add_option("--binarize-at", to.binarize_at, "binarize y >= s before fitting");
  train->add_flag("--no-threshold-learning", to.no_threshold_learning, "keep the initial thresholds");
  train->add_option("--threads", to.threads, "worker threads");
  add_config(train);

  EvaluateOptions eo;
  auto* evaluate = app.add_subcommand("evaluate", "NDCG and non-zero log-likelihood on a test matrix");
  evaluate->add_option("--model", eo.model, "model file")->required();
  evaluate->add_option("--train", eo.train, "train matrix")->required();
  evaluate->add_option("--test", eo.test, "test matrix")->required();
  evaluate->add_option("--ndcg-thresholds", eo.thresholds, "relevance thresholds s (default 1..V)")->delimiter(',');
  evaluate->add_option("--list-length", eo.list_length, "recommendation list length m");
  evaluate->add_flag("--no-train-exclusion", eo.no_train_exclusion, "rank train items too");
  evaluate->add_flag("--score-empty-users", eo.score_empty_users, "count users without relevant items as 0");
  evaluate->add_option("--output", eo.output, "metrics file (tab separated)");
  evaluate->add_option("--threads", eo.threads, "worker threads");
  add_config(evaluate);

  PpcOptions po;
  auto* ppc = app.add_subcommand("ppc", "Posterior predictive check of the class histogram");
  ppc->add_option("--model", po.model, "model file")->required();
  ppc->add_option("--train", po.train, "train matrix")->required();
  ppc->add_option("--output", po.output, "histogram file")->required();
  ppc->add_option("--cells", po.cells, "number of simulated cells");
  ppc->add_option("--seed", po.seed, "random seed");
  add_config(ppc);

  PredictOptions pro;
  auto* predict = app.add_subcommand("predict", "Top-m recommendations per user");
  predict->add_option("--model", pro.model, "model file")->required();
  predict->add_option("--train", pro.train, "train matrix, for excluding seen items");
  predict->add_option("--users", pro.users, "users to score (default all)")->delimiter(',');
  predict->add_option("--user-map", pro.user_map, "user id sidecar; --users then takes ids");
  predict->add_option("--item-map", pro.item_map, "item id sidecar for the output");
  predict->add_option("--list-length", pro.list_length, "items per user");
  predict->add_flag("--no-train-exclusion", pro.no_train_exclusion, "keep train items in the lists");
  predict->add_option("--output", pro.output, "output file (default stdout)");
  add_config(predict);

  SimulateOptions sio;
  auto* sim = app.add_subcommand("simulate", "Draw a synthetic ordinal data set as a triplet file");
  sim->add_option("--output", sio.output, "triplet output")->required();
  sim->add_option("--users", sio.users, "number of users");
  sim->add_option("--items", sio.items, "number of items");
  sim->add_option("--k", sio.k, "number of latent factors");
  sim->add_option("--theta", sio.theta, "decreasing inverse thresholds")->delimiter(',');
  sim->add_option("--shape", sio.shape, "gamma shape of both factor matrices");
  sim->add_option("--rate", sio.rate, "gamma rate of both factor matrices");
  sim->add_option("--seed", sio.seed, "random seed");
  add_config(sim);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    merge_config(app, args);
    std::vector<const char*> merged{argv[0]};
    for (const auto& a : args) merged.push_back(a.c_str());
    app.parse(static_cast<int>(merged.size()), merged.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (quantize->parsed()) cmd_quantize(qo, effective_config(*quantize), out);
    if (split->parsed()) cmd_split(so, effective_config(*split), out);
    if (train->parsed()) cmd_train(to, effective_config(*train), out, err);
    if (evaluate->parsed()) cmd_evaluate(eo, effective_config(*evaluate), out);
    if (ppc->parsed()) cmd_ppc(po, effective_config(*ppc), out);
    if (predict->parsed()) cmd_predict(pro, effective_config(*predict), out);
    if (sim->parsed()) cmd_simulate(sio, effective_config(*sim), out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ordnmf::cli
