// Command line front end: outlier detection on CSV data, contamination-case
// simulations, cutoff/PA table management and scree exports.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icsdetect/io.hpp"
#include "icsdetect/random.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

std::filesystem::path default_tables_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ICSDETECT_TABLES")) return env;
  return {};
}

ics::ScatterPair seeded_pair(const std::string& tag, std::uint64_t seed) {
  ics::ScatterPair pair = ics::parse_pair(tag);
  pair.v1.mcd_seed = ics::rng::derive_seed(seed, {11});
  pair.v2.mcd_seed = ics::rng::derive_seed(seed, {12});
  return pair;
}

struct DetectArgs {
  std::string input;
  std::string output = "report.json";
  std::string distances;
  std::string pair = "cov-cov4";
  std::string select = "pa";
  std::string tables;
  double alpha = 0.05;
  double gamma = 0.02;
  std::uint64_t seed = 1;
  int reps = 0;  // 0 = defaults (1000 PA / 100 cutoff)
  int threads = 1;
};

int run_detect(const DetectArgs& args) {
  ics::io::CsvData csv = ics::io::read_csv(args.input);
  const ics::Index n = csv.values.rows(), p = csv.values.cols();
  if (n <= p)
    throw ics::input_error("need more observations than variables, got n=" + std::to_string(n) +
                           ", p=" + std::to_string(p));

  ics::SelectionRule rule = ics::SelectionRule::parse(args.select);
  ics::DetectOptions opts;
  opts.alpha = args.alpha;
  opts.gamma = args.gamma;
  opts.seed = args.seed;
  opts.threads = args.threads;
  if (args.reps > 0) {
    opts.pa_reps = args.reps;
    opts.cutoff_reps = args.reps;
  }
  ics::TableStore tables(default_tables_dir(args.tables));

  ics::DetectionReport report =
      ics::detect_ics(csv.values, seeded_pair(args.pair, args.seed), rule, opts, tables);
  ics::io::write_report_json(args.output, report);
  if (!args.distances.empty()) ics::io::write_distances_csv(args.distances, report);

  std::cout << "flagged " << report.flag_count() << " of " << n << " observations (k="
            << report.k_used.value_or(0);
  if (report.cutoff) std::cout << ", cutoff=" << ics::io::format_double(*report.cutoff);
  std::cout << ") -> " << args.output << "\n";
  return kExitOk;
}

struct SimulateArgs {
  std::vector<int> cases{0, 1, 2, 3, 4, 5};
  std::vector<long> dims{6};
  long n = 1000;
  std::vector<std::string> pairs{"cov-cov4"};
  std::vector<std::string> methods;  // full method tags
  std::vector<std::string> selects;  // shorthand: pa -> ics:pa
  std::string output = "experiment.csv";
  std::string tables;
  int reps = 100;
  double alpha = 0.05;
  double gamma = 0.02;
  int pa_reps = 1000;
  int cutoff_reps = 100;
  bool mask = false;
  std::uint64_t seed = 1;
  int threads = 1;
};

int run_simulate(const SimulateArgs& args) {
  ics::simgen::ExperimentConfig config;
  config.cases = args.cases;
  config.dims.assign(args.dims.begin(), args.dims.end());
  config.n = args.n;
  config.pairs = args.pairs;
  std::vector<std::string> methods = args.methods;
  for (const std::string& s : args.selects) {
    bool family_tag = s.rfind("ics:", 0) == 0 || s == "md" || s == "rd" || s == "pca" ||
                      s == "pca-std" || s == "true-subspace";
    methods.push_back(family_tag ? s : "ics:" + s);
  }
  if (methods.empty()) methods.push_back("ics:pa");
  for (const std::string& m : methods) config.methods.push_back(ics::simgen::MethodSpec::parse(m));
  config.reps = args.reps;
  config.alpha = args.alpha;
  config.gamma = args.gamma;
  config.pa_reps = args.pa_reps;
  config.cutoff_reps = args.cutoff_reps;
  config.mask_affine = args.mask;
  config.seed = args.seed;
  config.threads = args.threads;

  ics::TableStore tables(default_tables_dir(args.tables));
  std::vector<ics::simgen::CellResult> cells = ics::simgen::run_experiment(config, tables);
  ics::io::write_experiment_csv(args.output, cells);

  std::cout << "case  p   pair       method          mean_k      TP       FP\n";
  for (const auto& c : cells) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-5d %-3ld %-10s %-15s %7s %8s %8s%s\n", c.case_id,
                  static_cast<long>(c.p), c.pair.empty() ? "-" : c.pair.c_str(), c.method.c_str(),
                  c.mean_k ? ics::io::format_double(*c.mean_k).c_str() : "-",
                  c.tp ? ics::io::format_double(*c.tp).c_str() : "-",
                  c.fp ? ics::io::format_double(*c.fp).c_str() : "-",
                  c.marked ? "  [failed replicates above 10%]" : "");
    std::cout << line;
  }
  std::cout << "written " << args.output << "\n";
  return kExitOk;
}

struct TablesArgs {
  long n = 1000;
  std::vector<long> dims{6};
  std::vector<std::string> pairs{"cov-cov4"};
  std::vector<long> ks;  // empty = 1..p
  double alpha = 0.05;
  double gamma = 0.02;
  int reps = 1000;
  int cutoff_reps = 100;
  std::string tables;
  std::uint64_t seed = 1;
  int threads = 1;
};

int run_tables(const TablesArgs& args) {
  std::filesystem::path dir = default_tables_dir(args.tables);
  if (dir.empty()) throw ics::input_error("tables command needs --tables DIR or ICSDETECT_TABLES");
  ics::TableStore store(dir);
  for (long p : args.dims) {
    for (const std::string& tag : args.pairs) {
      ics::ScatterPair pair = seeded_pair(tag, args.seed);
      store.pa(args.n, p, pair, args.alpha, args.reps, ics::rng::derive_seed(args.seed, {0x7041}),
               args.threads);
      std::vector<long> ks = args.ks;
      if (ks.empty())
        for (long k = 1; k <= p; ++k) ks.push_back(k);
      for (long k : ks)
        store.cutoff(args.n, p, pair, k, args.gamma, args.cutoff_reps,
                     ics::rng::derive_seed(args.seed, {0xC07}), args.threads);
    }
  }
  std::cout << "tables ready in " << dir.string() << " (" << store.builds() << " built, "
            << store.hits() << " reused)\n";
  return kExitOk;
}

struct ScreeArgs {
  std::string input;
  std::string output = "scree.csv";
  std::string pair = "cov-cov4";
  std::uint64_t seed = 1;
};

int run_scree(const ScreeArgs& args) {
  ics::io::CsvData csv = ics::io::read_csv(args.input);
  if (csv.values.rows() <= csv.values.cols())
    throw ics::input_error("need more observations than variables");
  ics::IcsResult res = ics::invariant_coordinates(csv.values, seeded_pair(args.pair, args.seed));
  ics::io::write_text_atomic(args.output, ics::io::scree_csv(res.eigenvalues));
  std::cout << "written " << args.output << " (" << res.eigenvalues.size() << " eigenvalues)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariant coordinate selection for multivariate outlier detection"};
  app.require_subcommand(1);

  DetectArgs detect;
  CLI::App* cmd_detect = app.add_subcommand("detect", "Detect outliers in a CSV data set");
  cmd_detect->add_option("--input", detect.input, "input CSV (rows = observations)")->required();
  cmd_detect->add_option("--output", detect.output, "output JSON report");
  cmd_detect->add_option("--distances", detect.distances, "optional CSV of distances");
  cmd_detect->add_option("--pair", detect.pair, "scatter pair: cov-cov4|mlt-cov|mcd-cov|mcd-mlt");
  cmd_detect->add_option("--select", detect.select, "selection: pa|da|ag|bs|jb|fixed:K|none");
  cmd_detect->add_option("--alpha", detect.alpha, "selection level");
  cmd_detect->add_option("--gamma", detect.gamma, "flagging level");
  cmd_detect->add_option("--seed", detect.seed, "random seed");
  cmd_detect->add_option("--reps", detect.reps, "Monte-Carlo replicates for tables");
  cmd_detect->add_option("--tables", detect.tables, "table cache directory");
  cmd_detect->add_option("--threads", detect.threads, "worker threads");

  SimulateArgs simulate;
  CLI::App* cmd_simulate = app.add_subcommand("simulate", "Run the contamination benchmark");
  cmd_simulate->add_option("--case", simulate.cases, "cases to run (0..5)")->delimiter(',');
  cmd_simulate->add_option("--p", simulate.dims, "dimensions")->delimiter(',');
  cmd_simulate->add_option("--n", simulate.n, "sample size");
  cmd_simulate->add_option("--pair", simulate.pairs, "scatter pairs for ICS rows")->delimiter(',');
  cmd_simulate->add_option("--method", simulate.methods,
                           "methods: ics:SEL, md, rd, pca, pca-std, true-subspace")
      ->delimiter(',');
  cmd_simulate->add_option("--select", simulate.selects,
                           "shorthand for ICS selection methods (pa -> ics:pa)")
      ->delimiter(',');
  cmd_simulate->add_option("--reps", simulate.reps, "replicates per cell");
  cmd_simulate->add_option("--alpha", simulate.alpha, "selection level");
  cmd_simulate->add_option("--gamma", simulate.gamma, "flagging level");
  cmd_simulate->add_option("--pa-reps", simulate.pa_reps, "PA table replicates");
  cmd_simulate->add_option("--cutoff-reps", simulate.cutoff_reps, "cutoff table replicates");
  cmd_simulate->add_flag("--mask", simulate.mask, "apply a random affine masking transform");
  cmd_simulate->add_option("--seed", simulate.seed, "master seed");
  cmd_simulate->add_option("--threads", simulate.threads, "worker threads");
  cmd_simulate->add_option("--output", simulate.output, "output CSV");
  cmd_simulate->add_option("--tables", simulate.tables, "table cache directory");

  TablesArgs tables;
  CLI::App* cmd_tables = app.add_subcommand("tables", "Precompute PA and cutoff tables");
  cmd_tables->add_option("--n", tables.n, "sample size the tables are keyed to");
  cmd_tables->add_option("--p", tables.dims, "dimensions")->delimiter(',');
  cmd_tables->add_option("--pair", tables.pairs, "scatter pairs")->delimiter(',');
  cmd_tables->add_option("--k", tables.ks, "component counts for cutoffs (default 1..p)")->delimiter(',');
  cmd_tables->add_option("--alpha", tables.alpha, "PA level");
  cmd_tables->add_option("--gamma", tables.gamma, "cutoff level");
  cmd_tables->add_option("--reps", tables.reps, "PA replicates");
  cmd_tables->add_option("--cutoff-reps", tables.cutoff_reps, "cutoff replicates");
  cmd_tables->add_option("--tables", tables.tables, "table cache directory")->required(false);
  cmd_tables->add_option("--seed", tables.seed, "master seed");
  cmd_tables->add_option("--threads", tables.threads, "worker threads");

  ScreeArgs scree;
  CLI::App* cmd_scree = app.add_subcommand("scree", "Export eigenvalues for scree plotting");
  cmd_scree->add_option("--input", scree.input, "input CSV")->required();
  cmd_scree->add_option("--output", scree.output, "output CSV of (rank, eigenvalue)");
  cmd_scree->add_option("--pair", scree.pair, "scatter pair");
  cmd_scree->add_option("--seed", scree.seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_detect->parsed()) return run_detect(detect);
    if (cmd_simulate->parsed()) return run_simulate(simulate);
    if (cmd_tables->parsed()) return run_tables(tables);
    if (cmd_scree->parsed()) return run_scree(scree);
  } catch (const ics::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ics::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
