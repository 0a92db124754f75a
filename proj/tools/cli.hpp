#pragma once

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cpsbm/classic.hpp"
#include "cpsbm/experiments.hpp"
#include "cpsbm/gibbs.hpp"
#include "cpsbm/graph.hpp"
#include "cpsbm/mdl.hpp"
#include "cpsbm/metrics.hpp"
#include "cpsbm/partition.hpp"
#include "cpsbm/synth.hpp"

namespace cpsbm::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "CPSBM_OUTPUT_DIR";

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"infer", "mdl", "compare", "kcores", "twoblock", "coreness", "synth", "experiment"};
  return c;
}

inline std::string usage() {
  return "usage: cpsbm <command> [options]\n"
         "\n"
         "commands:\n"
         "  infer GRAPH       fit a hub-and-spoke or layered model by Gibbs sampling\n"
         "  mdl GRAPH         description length of a partition (--partition)\n"
         "  compare P1 P2     VI, normalized VI and AMI between two partition CSVs\n"
         "  kcores GRAPH      k-core numbers and shells\n"
         "  twoblock GRAPH    Borgatti-Everett two-block partition\n"
         "  coreness RESULT   per-node coreness from an infer result\n"
         "  synth generate|discernment|layers CONFIG\n"
         "                    synthetic networks and validation experiments\n"
         "  experiment GRAPH  full typology pipeline for one network\n"
         "\n"
         "Run `cpsbm <command> --help` for the options of a command.\n"
         "Outputs go to --out, else $" +
         std::string(kOutputDirEnv) + ", else ./cpsbm-output.\n";
}

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

// Collects what a run needs for its manifest and writes output files.
class Run {
 public:
  Run(std::string command, std::vector<std::string> argv) : command_(std::move(command)), argv_(std::move(argv)) {}

  void set_output_dir(const std::string& flag) {
    if (!flag.empty()) dir_ = flag;
    else if (const char* env = std::getenv(kOutputDirEnv); env && *env) dir_ = env;
    else dir_ = "cpsbm-output";
  }

  void input(const std::string& path) { inputs_.push_back({{"path", path}, {"sha256", sha256_file(path)}}); }
  Json& parameters() { return parameters_; }
  Json& seeds() { return seeds_; }

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir_);
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir_ / name).string());
    out << content;
    outputs_.push_back(name);
  }

  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  void finish() {
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json m;
    m["command"] = command_;
    m["argv"] = argv_;
    m["parameters"] = parameters_;
    m["seeds"] = seeds_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["version"] = kVersion;
    m["duration_seconds"] = seconds;
    fs::create_directories(dir_);
    std::ofstream(dir_ / "manifest.json") << m.dump(2) << "\n";
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  fs::path dir_ = "cpsbm-output";
  Json parameters_ = Json::object();
  Json seeds_ = Json::object();
  Json inputs_ = Json::array();
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline Graph load_graph(const std::string& path, const std::string& format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  auto raw = load_edge_list(in, format == "konect" ? EdgeListFormat::konect_tsv : EdgeListFormat::plain);
  return preprocess(raw);
}

inline Partition load_partition(const std::string& path, const Graph& g) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return read_partition_csv(in, g);
}

inline std::string partition_csv(const Graph& g, const Partition& p) {
  std::ostringstream out;
  write_partition_csv(out, g, p);
  return out.str();
}

inline std::string label_map_csv(const Graph& g) {
  std::ostringstream out;
  write_label_map(out, g);
  return out.str();
}

inline Json one_based(const Partition& p) {
  Json a = Json::array();
  for (BlockId b : p.block) a.push_back(b + 1);
  return a;
}

inline ModelKind parse_model(const std::string& model, std::size_t layers) {
  if (model == "hub-spoke") return ModelKind::hub_and_spoke();
  if (layers < 2) throw Error("layers must be ≥ 2");
  return ModelKind::layered(layers);
}

inline std::optional<Estimator> parse_estimator(const std::string& s) {
  if (s.empty() || s == "auto") return std::nullopt;
  return s == "naive" ? Estimator::naive : Estimator::importance;
}

// Options shared by the fitting commands.
struct FitFlags {
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::optional<std::uint64_t> samples;
  std::size_t gibbs = 250;
  std::size_t mcmc_per_node = 10;
  std::size_t restarts = 3;
  std::string estimator = "auto";
  std::string proposal = "uniform";
  double epsilon = 0.1;

  void add_to(CLI::App& app, bool restarts_as_chains = false) {
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    app.add_option("--samples", samples, "Monte-Carlo samples per description length");
    app.add_option("--gibbs", gibbs, "Gibbs iterations T")->capture_default_str()->check(CLI::Range(2, 1 << 30));
    app.add_option("--mcmc-per-node", mcmc_per_node, "label proposals per node per Gibbs iteration")
        ->capture_default_str()
        ->check(CLI::Range(1, 1 << 20));
    app.add_option(restarts_as_chains ? "--chains,--restarts" : "--restarts", restarts,
                   "independent restarts per model; the lowest description length is kept")
        ->capture_default_str()
        ->check(CLI::Range(1, 1 << 20));
    app.add_option("--estimator", estimator, "description length estimator")
        ->check(CLI::IsMember({"auto", "naive", "importance"}))
        ->capture_default_str();
    app.add_option("--proposal", proposal, "label proposal")
        ->check(CLI::IsMember({"uniform", "neighborhood"}))
        ->capture_default_str();
    app.add_option("--epsilon", epsilon, "neighborhood proposal smoothing")->capture_default_str();
  }

  std::size_t worker_threads() const { return threads > 0 ? threads : default_threads(); }

  FitOptions fit_options(std::size_t nodes) const {
    FitOptions f;
    f.gibbs.gibbs_iterations = gibbs;
    f.gibbs.mcmc_steps = mcmc_per_node * std::max<std::size_t>(nodes, 1);
    f.gibbs.proposal = {proposal == "neighborhood" ? ProposalKind::neighborhood : ProposalKind::uniform, epsilon};
    f.gibbs.keep_samples = false;
    f.restarts = restarts;
    f.mdl_samples = samples;
    f.estimator = parse_estimator(estimator);
    return f;
  }

  // Per-node step counts are recorded because T_MCMC depends on the graph.
  void record(Json& p) const {
    p["gibbs"] = gibbs;
    p["mcmc_per_node"] = mcmc_per_node;
    p["restarts"] = restarts;
    p["samples"] = samples ? Json(*samples) : Json("default");
    p["estimator"] = estimator;
    p["proposal"] = proposal;
    p["epsilon"] = epsilon;
  }
};

inline Json dl_json(const DLEstimate& e) {
  Json j;
  j["dl_bits"] = e.dl_bits;
  j["dl_bits_per_edge"] = e.dl_bits_per_edge;
  j["ess"] = e.ess;
  j["samples"] = e.samples;
  j["seed"] = e.seed;
  return j;
}

// key = value lines; `#` starts a comment.
inline std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

class Config {
 public:
  Config(std::map<std::string, std::string> kv, std::set<std::string> allowed) : kv_(std::move(kv)) {
    for (const auto& [k, v] : kv_)
      if (!allowed.count(k)) throw Error("unknown config key '" + k + "'");
  }

  bool has(const std::string& k) const { return kv_.count(k) > 0; }

  double number(const std::string& k, double fallback) const {
    if (!has(k)) return fallback;
    return parse_double(k, kv_.at(k));
  }

  std::size_t count(const std::string& k, std::size_t fallback) const {
    if (!has(k)) return fallback;
    auto v = detail::parse_integer(kv_.at(k));
    if (!v || *v < 0) throw Error("config key '" + k + "' needs a non-negative integer");
    return static_cast<std::size_t>(*v);
  }

  std::string text(const std::string& k, const std::string& fallback) const { return has(k) ? kv_.at(k) : fallback; }

  std::vector<double> numbers(const std::string& k, std::vector<double> fallback) const {
    if (!has(k)) return fallback;
    std::vector<double> out;
    std::stringstream ss(kv_.at(k));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(k, item));
    if (out.empty()) throw Error("config key '" + k + "' is empty");
    return out;
  }

  std::vector<std::size_t> counts(const std::string& k, std::vector<std::size_t> fallback) const {
    if (!has(k)) return fallback;
    std::vector<std::size_t> out;
    for (double v : numbers(k, {})) {
      if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw Error("config key '" + k + "' needs non-negative integers");
      out.push_back(static_cast<std::size_t>(v));
    }
    return out;
  }

  // Rows separated by `;`, entries by `,`.
  BlockMatrix matrix(const std::string& k) const {
    BlockMatrix m;
    std::stringstream rows(kv_.at(k));
    std::string row;
    while (std::getline(rows, row, ';')) {
      std::vector<double> r;
      std::stringstream cols(row);
      std::string item;
      while (std::getline(cols, item, ',')) r.push_back(parse_double(k, item));
      m.push_back(std::move(r));
    }
    return m;
  }

  Json json() const {
    Json j = Json::object();
    for (const auto& [k, v] : kv_) j[k] = v;
    return j;
  }

 private:
  static double parse_double(const std::string& k, const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (s.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error("config key '" + k + "' has a non-numeric value '" + s + "'");
    }
  }

  std::map<std::string, std::string> kv_;
};

// Fit keys shared by the experiment configs; command-line flags win.
inline const std::set<std::string> kFitKeys{"seed", "threads", "gibbs", "mcmc_per_node", "restarts", "samples", "estimator"};

inline FitOptions config_fit(const Config& c, const FitFlags& flags, const CLI::App& app, std::size_t nodes) {
  FitFlags f = flags;
  auto from_config = [&](const char* flag, const char* key) { return app.count(flag) == 0 && c.has(key); };
  if (from_config("--gibbs", "gibbs")) f.gibbs = c.count("gibbs", f.gibbs);
  if (from_config("--mcmc-per-node", "mcmc_per_node")) f.mcmc_per_node = c.count("mcmc_per_node", f.mcmc_per_node);
  if (from_config("--restarts", "restarts")) f.restarts = c.count("restarts", f.restarts);
  if (from_config("--samples", "samples")) f.samples = c.count("samples", 0);
  if (from_config("--estimator", "estimator")) f.estimator = c.text("estimator", f.estimator);
  if (f.gibbs < 2) throw Error("gibbs must be ≥ 2");
  return f.fit_options(nodes);
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

inline std::string edge_list_text(const Graph& g) {
  std::ostringstream out;
  out << "# nodes " << g.node_count() << " edges " << g.edge_count() << "\n";
  for (auto [a, b] : g.edges()) out << a << ' ' << b << '\n';
  return out.str();
}

inline int dispatch(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  if (argc < 2) {
    err << usage();
    return 2;
  }
  const std::string command = argv[1];
  if (command == "--help" || command == "-h" || command == "help") {
    out << usage();
    return 0;
  }
  if (command == "--version") {
    out << kVersion << "\n";
    return 0;
  }
  if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
    err << "unknown command '" << command << "'\n\n" << usage();
    return 2;
  }

  std::vector<std::string> args(argv, argv + argc);
  CLI::App app("cpsbm " + command, "cpsbm " + command);
  std::string out_dir;
  std::string format = "plain";
  app.add_option("--out", out_dir, std::string("output directory (default $") + kOutputDirEnv + " or ./cpsbm-output)");
  app.add_option("--format", format, "edge list format")->check(CLI::IsMember({"plain", "konect"}))->capture_default_str();

  FitFlags fit;
  std::string graph_path, partition_path, second_path, model = "hub-spoke", sub;
  std::size_t layers = 2, min_layers = 2, max_layers = 6, bootstrap = 1000;
  std::optional<std::size_t> binned;

  if (command == "infer" || command == "mdl" || command == "kcores" || command == "twoblock" || command == "experiment")
    app.add_option("graph", graph_path, "edge list file")->required();
  if (command == "infer" || command == "mdl") {
    app.add_option("--model", model, "model family")->check(CLI::IsMember({"hub-spoke", "layered"}))->capture_default_str();
    app.add_option("--layers", layers, "layer count for the layered model")->capture_default_str();
  }
  if (command == "infer" || command == "experiment") fit.add_to(app, command == "infer");
  if (command == "mdl") {
    app.add_option("--partition", partition_path, "partition CSV (label,block)")->required();
    app.add_option("--seed", fit.seed, "random seed")->capture_default_str();
    app.add_option("--threads", fit.threads, "worker threads (0 = all cores)");
    app.add_option("--samples", fit.samples, "Monte-Carlo samples");
    app.add_option("--estimator", fit.estimator, "estimator")
        ->check(CLI::IsMember({"auto", "naive", "importance"}))
        ->capture_default_str();
  }
  if (command == "compare") {
    app.add_option("first", partition_path, "partition CSV")->required();
    app.add_option("second", second_path, "partition CSV")->required();
  }
  if (command == "kcores") app.add_option("--binned", binned, "merge shells into a two-block core of about this size");
  if (command == "coreness") {
    app.add_option("result", partition_path, "infer JSON result")->required();
    app.add_option("--graph", graph_path, "graph file, for node labels");
  }
  if (command == "synth") {
    app.add_option("kind", sub, "generate, discernment or layers")
        ->required()
        ->check(CLI::IsMember({"generate", "discernment", "layers"}));
    app.add_option("config", second_path, "key = value config file")->required();
    fit.add_to(app);
  }
  if (command == "experiment") {
    app.add_option("--min-layers", min_layers, "smallest layer count")->capture_default_str();
    app.add_option("--max-layers", max_layers, "largest layer count")->capture_default_str();
    app.add_option("--bootstrap", bootstrap, "bootstrap replicates for the difference interval")->capture_default_str();
  }

  try {
    std::vector<std::string> rest(args.begin() + 2, args.end());
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "cpsbm " << command << ": " << e.what() << "\n";
    return 1;
  }

  try {
    Run run(command, args);
    run.set_output_dir(out_dir);
    const std::size_t threads = fit.worker_threads();
    auto& params = run.parameters();

    if (command == "infer") {
      auto kind = parse_model(model, layers);
      run.input(graph_path);
      Graph g = load_graph(graph_path, format);
      if (g.node_count() < kind.blocks())
        throw Error("graph has " + std::to_string(g.node_count()) + " nodes, fewer than " +
                    std::to_string(kind.blocks()) + " blocks");
      params["model"] = kind.name();
      params["layers"] = kind.blocks();
      params["format"] = format;
      fit.record(params);
      run.seeds()["seed"] = fit.seed;
      auto result = fit_model(g, kind, fit.fit_options(g.node_count()), fit.seed, threads);
      const auto& chain = result.chain;
      Json j;
      j["model"] = kind.name();
      j["layers"] = kind.blocks();
      j["seed"] = fit.seed;
      j["map_partition"] = one_based(chain.map_partition);
      j["marginals"] = chain.marginals;
      j["coreness"] = chain.coreness;
      j["acceptance_rate"] = chain.acceptance_rate;
      j["log_posterior_trace"] = chain.log_posterior_trace;
      run.write_json("infer.json", j);
      run.write("partition.csv", partition_csv(g, chain.map_partition));
      run.write("labels.csv", label_map_csv(g));
      std::ostringstream core;
      core << "label,coreness\n";
      for (NodeId i = 0; i < g.node_count(); ++i) core << g.label(i) << ',' << fmt(chain.coreness[i]) << '\n';
      run.write("coreness.csv", core.str());
      Json dl = dl_json(result.dl);
      dl["restart_dl_bits"] = result.restart_dl_bits;
      run.write_json("infer_dl.json", dl);
      out << j.dump() << "\n";
    } else if (command == "mdl") {
      run.input(graph_path);
      run.input(partition_path);
      Graph g = load_graph(graph_path, format);
      Partition theta = load_partition(partition_path, g);
      if (model == "layered" && app.count("--layers") == 0) layers = theta.block_count;
      auto kind = parse_model(model, layers);
      if (theta.block_count != kind.blocks())
        throw Error("partition has " + std::to_string(theta.block_count) + " blocks, model needs " +
                    std::to_string(kind.blocks()));
      const auto samples = fit.samples.value_or(default_samples(kind));
      if (samples < 1) throw Error("samples must be ≥ 1");
      const auto estimator = parse_estimator(fit.estimator).value_or(default_estimator(kind));
      params["model"] = kind.name();
      params["layers"] = kind.blocks();
      params["samples"] = samples;
      params["estimator"] = to_string(estimator);
      run.seeds()["seed"] = fit.seed;
      auto e = estimate_dl(g, theta, kind, samples, estimator, fit.seed, threads);
      Json j = dl_json(e);
      run.write_json("mdl.json", j);
      out << j.dump() << "\n";
    } else if (command == "compare") {
      run.input(partition_path);
      run.input(second_path);
      auto read = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot read " + path);
        return read_labeled_blocks(in);
      };
      auto a = read(partition_path), b = read(second_path);
      std::map<std::string, BlockId> second;
      for (auto& [label, block] : b)
        if (!second.emplace(label, block).second) throw Error("node '" + label + "' assigned twice");
      if (a.size() != second.size()) throw Error("partitions cover different node sets");
      Partition pa, pb;
      std::set<std::string> seen;
      for (auto& [label, block] : a) {
        auto it = second.find(label);
        if (it == second.end()) throw Error("node '" + label + "' missing from the second partition");
        if (!seen.insert(label).second) throw Error("node '" + label + "' assigned twice");
        pa.block.push_back(block);
        pb.block.push_back(it->second);
      }
      pa = compact(pa);
      pb = compact(pb);
      if (pa.node_count() < 2) throw Error("partitions need at least two nodes");
      Json j;
      j["vi_bits"] = variation_of_information(pa, pb);
      j["nvi"] = normalized_vi(pa, pb);
      j["ami"] = adjusted_mutual_information(pa, pb);
      run.write_json("compare.json", j);
      out << j.dump() << "\n";
    } else if (command == "kcores") {
      run.input(graph_path);
      Graph g = load_graph(graph_path, format);
      auto d = k_core_decomposition(g);
      std::ostringstream csv;
      if (binned) {
        params["binned"] = *binned;
        auto p = binned_kcores(d.shells, *binned);
        csv << "label,block,core_number\n";
        for (NodeId i = 0; i < g.node_count(); ++i)
          csv << g.label(i) << ',' << p.block[i] + 1 << ',' << d.core_number[i] << '\n';
      } else {
        csv << "label,block,core_number\n";
        for (NodeId i = 0; i < g.node_count(); ++i)
          csv << g.label(i) << ',' << d.shells.block[i] + 1 << ',' << d.core_number[i] << '\n';
      }
      run.write("kcores.csv", csv.str());
      out << csv.str();
    } else if (command == "twoblock") {
      run.input(graph_path);
      Graph g = load_graph(graph_path, format);
      auto r = two_block_partition(g);
      run.write("twoblock.csv", partition_csv(g, r.partition));
      Json j;
      j["core_size"] = r.partition.sizes()[0];
      j["errors"] = r.errors;
      run.write_json("twoblock.json", j);
      out << partition_csv(g, r.partition);
    } else if (command == "coreness") {
      run.input(partition_path);
      std::ifstream in(partition_path);
      if (!in) throw Error("cannot read " + partition_path);
      Json result = Json::parse(in, nullptr, false);
      if (result.is_discarded() || !result.contains("marginals") || !result.contains("layers"))
        throw Error(partition_path + " is not an infer result");
      auto marginals = result["marginals"].get<std::vector<std::vector<double>>>();
      const auto l = result["layers"].get<std::size_t>();
      for (const auto& row : marginals)
        if (row.size() != l) throw Error("marginal rows do not match the layer count");
      std::optional<Graph> g;
      if (!graph_path.empty()) {
        run.input(graph_path);
        g = load_graph(graph_path, format);
        if (g->node_count() != marginals.size()) throw Error("graph and result have different node counts");
      }
      auto c = coreness(marginals, l);
      std::ostringstream csv;
      csv << "label,coreness\n";
      for (std::size_t i = 0; i < c.size(); ++i) csv << (g ? g->label(i) : std::to_string(i)) << ',' << fmt(c[i]) << '\n';
      run.write("coreness.csv", csv.str());
      out << csv.str();
    } else if (command == "synth") {
      run.input(second_path);
      auto kv = read_config(second_path);
      if (!app.count("--seed") && kv.count("seed")) {
        auto v = detail::parse_integer(kv.at("seed"));
        if (!v || *v < 0) throw Error("config key 'seed' needs a non-negative integer");
        fit.seed = static_cast<std::uint64_t>(*v);
      }
      auto config_threads = [&](const Config& c) {
        return app.count("--threads") || c.count("threads", 0) == 0 ? threads : c.count("threads", 0);
      };
      params["subcommand"] = sub;
      run.seeds()["seed"] = fit.seed;
      if (sub == "generate") {
        Config c(kv, {"seed", "nodes", "sizes", "matrix", "model", "p", "gamma", "delta", "densities", "first", "last",
                      "layers"});
        params["config"] = c.json();
        const std::string m = c.text("model", "matrix");
        PlantedConfig cfg;
        BlockMatrix matrix;
        if (m == "matrix") {
          if (!c.has("matrix")) throw Error("config needs 'matrix'");
          matrix = c.matrix("matrix");
        } else if (m == "discernment") {
          matrix = discernment_matrix(c.number("p", 0.05), c.number("gamma", 1), c.number("delta", 0));
        } else if (m == "layered") {
          std::vector<double> dens = c.has("densities")
                                         ? c.numbers("densities", {})
                                         : geometric_layer_densities(c.number("first", 0.3), c.number("last", 0.01),
                                                                     c.count("layers", 3));
          matrix = layered_block_matrix(dens);
        } else {
          throw Error("unknown model '" + m + "'");
        }
        if (c.has("sizes")) {
          cfg.sizes = c.counts("sizes", {});
          cfg.matrix = matrix;
        } else {
          if (matrix.empty()) throw Error("block matrix is empty");
          cfg = equal_blocks(c.count("nodes", 1000), matrix);
        }
        Rng rng = make_rng(fit.seed);
        auto planted = sbm_generate(cfg, rng);
        run.write("graph.txt", edge_list_text(planted.graph));
        run.write("planted.csv", partition_csv(planted.graph, planted.planted));
        Json j;
        j["nodes"] = planted.graph.node_count();
        j["edges"] = planted.graph.edge_count();
        j["expected_average_degree"] = expected_average_degree(cfg);
        j["average_degree"] = 2.0 * static_cast<double>(planted.graph.edge_count()) /
                              static_cast<double>(std::max<std::size_t>(planted.graph.node_count(), 1));
        j["seed"] = fit.seed;
        run.write_json("generate.json", j);
        out << j.dump() << "\n";
      } else if (sub == "discernment") {
        auto allowed = kFitKeys;
        allowed.insert({"gammas", "deltas", "nodes", "baseline_density", "reps", "layered_layers"});
        Config c(kv, allowed);
        params["config"] = c.json();
        DiscernmentConfig cfg;
        cfg.gammas = c.numbers("gammas", cfg.gammas);
        cfg.deltas = c.numbers("deltas", cfg.deltas);
        cfg.nodes = c.count("nodes", cfg.nodes);
        cfg.baseline_density = c.number("baseline_density", cfg.baseline_density);
        cfg.reps = c.count("reps", cfg.reps);
        cfg.layered_layers = c.count("layered_layers", cfg.layered_layers);
        if (cfg.layered_layers < 2) throw Error("layers must be ≥ 2");
        for (double gmm : cfg.gammas)
          for (double d : cfg.deltas) discernment_matrix(cfg.baseline_density, gmm, d);
        cfg.fit = config_fit(c, fit, app, cfg.nodes);
        const std::size_t t = config_threads(c);
        auto cells = run_discernment_experiment(cfg, fit.seed, t);
        std::ostringstream csv;
        csv << "gamma,delta,rep,seed,edges,hub_spoke_bits,layered_bits,difference_bits_per_edge\n";
        Json rows = Json::array();
        for (const auto& cell : cells) {
          csv << fmt(cell.gamma) << ',' << fmt(cell.delta) << ',' << cell.rep << ',' << cell.seed << ',' << cell.edges << ','
              << fmt(cell.hub_spoke_bits) << ',' << fmt(cell.layered_bits) << ',' << fmt(cell.difference_per_edge) << '\n';
          rows.push_back({{"gamma", cell.gamma}, {"delta", cell.delta}, {"rep", cell.rep}, {"seed", cell.seed},
                          {"edges", cell.edges}, {"hub_spoke_bits", cell.hub_spoke_bits},
                          {"layered_bits", cell.layered_bits}, {"difference_bits_per_edge", cell.difference_per_edge}});
          run.seeds()["cells"].push_back(cell.seed);
        }
        run.write("discernment.csv", csv.str());
        Json j;
        j["seed"] = fit.seed;
        j["cells"] = rows;
        run.write_json("discernment.json", j);
        out << csv.str();
      } else {
        auto allowed = kFitKeys;
        allowed.insert({"planted_layers", "fitted_layers", "networks", "nodes", "base_layers", "core_density", "outer_density"});
        Config c(kv, allowed);
        params["config"] = c.json();
        LayersConfig cfg;
        cfg.planted_layers = c.counts("planted_layers", cfg.planted_layers);
        cfg.fitted_layers = c.counts("fitted_layers", cfg.fitted_layers);
        cfg.networks_per_layer_count = c.count("networks", cfg.networks_per_layer_count);
        cfg.nodes = c.count("nodes", cfg.nodes);
        cfg.base_layers = c.count("base_layers", cfg.base_layers);
        cfg.core_density = c.number("core_density", cfg.core_density);
        cfg.outer_density = c.number("outer_density", cfg.outer_density);
        for (auto l : cfg.fitted_layers)
          if (l < 2) throw Error("layers must be ≥ 2");
        for (auto l : cfg.planted_layers)
          if (l < 1 || l > cfg.base_layers) throw Error("planted layer counts must lie in [1, base_layers]");
        if (cfg.nodes < cfg.base_layers) throw Error("fewer nodes than layers");
        cfg.fit = config_fit(c, fit, app, cfg.nodes);
        const std::size_t t = config_threads(c);
        auto r = run_layers_experiment(cfg, fit.seed, t);
        std::ostringstream table;
        table << "planted,fitted,mean_bits_per_edge,argmin\n";
        for (const auto& [planted, row] : r.mean_bits_per_edge)
          for (const auto& [fitted, v] : row)
            table << planted << ',' << fitted << ',' << fmt(v) << ',' << (r.argmin.at(planted) == fitted ? 1 : 0) << '\n';
        run.write("layers.csv", table.str());
        std::ostringstream nets;
        nets << "planted,network,seed,edges,fitted,dl_bits,best\n";
        for (const auto& net : r.networks) {
          for (const auto& [fitted, bits] : net.dl_bits)
            nets << net.planted << ',' << net.network << ',' << net.seed << ',' << net.edges << ',' << fitted << ','
                 << fmt(bits) << ',' << (net.best_layers == fitted ? 1 : 0) << '\n';
          run.seeds()["networks"].push_back(net.seed);
        }
        run.write("layers_networks.csv", nets.str());
        Json argmin = Json::object();
        for (auto [planted, best] : r.argmin) argmin[std::to_string(planted)] = best;
        Json j;
        j["seed"] = fit.seed;
        j["argmin"] = argmin;
        run.write_json("layers.json", j);
        out << table.str();
      }
    } else if (command == "experiment") {
      run.input(graph_path);
      Graph g = load_graph(graph_path, format);
      if (min_layers < 2) throw Error("layers must be ≥ 2");
      PipelineOptions o;
      o.min_layers = min_layers;
      o.max_layers = max_layers;
      o.fit = fit.fit_options(g.node_count());
      o.bootstrap_replicates = bootstrap;
      fit.record(params);
      params["min_layers"] = min_layers;
      params["max_layers"] = max_layers;
      params["bootstrap"] = bootstrap;
      params["indifference_bits_per_edge"] = o.indifference_bits_per_edge;
      run.seeds()["seed"] = fit.seed;
      auto report = full_pipeline(g, o, fit.seed, threads);
      auto baselines = [](const BaselineDistances& d) {
        return Json{{"vi_kcores", d.vi_kcores},   {"vi_two_block", d.vi_two_block},   {"nvi_kcores", d.nvi_kcores},
                    {"nvi_two_block", d.nvi_two_block}, {"ami_kcores", d.ami_kcores}, {"ami_two_block", d.ami_two_block}};
      };
      Json layered = Json::object();
      for (const auto& [l, f] : report.layered) layered[std::to_string(l)] = dl_json(f.dl);
      Json j;
      j["verdict"] = to_string(report.verdict);
      j["nodes"] = g.node_count();
      j["edges"] = g.edge_count();
      j["hub_spoke"] = dl_json(report.hub_spoke.dl);
      j["layered"] = layered;
      j["best_layers"] = report.best_layers;
      j["difference_bits"] = report.comparison.difference_bits;
      j["difference_bits_per_edge"] = report.comparison.difference_bits / static_cast<double>(std::max<std::size_t>(g.edge_count(), 1));
      j["difference_ci"] = {report.comparison.ci_low, report.comparison.ci_high};
      j["vi_kcores_two_block"] = report.vi_kcores_two_block;
      j["hub_spoke_baselines"] = baselines(report.hub_spoke_baselines);
      j["layered_baselines"] = baselines(report.layered_baselines);
      j["seed"] = fit.seed;
      run.write_json("report.json", j);
      const auto& best = report.layered.at(report.best_layers).chain;
      run.write("hub_spoke_partition.csv", partition_csv(g, report.hub_spoke.chain.map_partition));
      run.write("layered_partition.csv", partition_csv(g, best.map_partition));
      std::ostringstream core;
      core << "label,hub_spoke_coreness,layered_coreness\n";
      for (NodeId i = 0; i < g.node_count(); ++i)
        core << g.label(i) << ',' << fmt(report.hub_spoke.chain.coreness[i]) << ',' << fmt(best.coreness[i]) << '\n';
      run.write("coreness.csv", core.str());
      out << j.dump() << "\n";
    }
    run.finish();
    return 0;
  } catch (const ParseError& e) {
    err << "cpsbm " << command << ": parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "cpsbm " << command << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cpsbm::cli
