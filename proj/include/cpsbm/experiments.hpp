#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "cpsbm/classic.hpp"
#include "cpsbm/gibbs.hpp"
#include "cpsbm/graph.hpp"
#include "cpsbm/mdl.hpp"
#include "cpsbm/metrics.hpp"
#include "cpsbm/model.hpp"
#include "cpsbm/parallel.hpp"
#include "cpsbm/synth.hpp"

namespace cpsbm {

struct FitOptions {
  GibbsOptions gibbs{};
  std::size_t restarts = 3;
  std::optional<std::uint64_t> mdl_samples;  // default_samples(kind) when unset
  std::optional<Estimator> estimator;        // default_estimator(kind) when unset
};

struct ModelFit {
  ModelKind kind = ModelKind::hub_and_spoke();
  ChainResult chain;             // restart with the smallest description length
  DLEstimate dl;
  std::vector<double> restart_dl_bits;
};

// Independent restarts of one model; the restart with minimum description
// length is kept. Restart r uses substream r of `seed`.
inline ModelFit fit_model(const Graph& g, const ModelKind& kind, const FitOptions& options, std::uint64_t seed,
                          std::size_t threads = 1) {
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  std::vector<ChainResult> chains(restarts);
  std::vector<DLEstimate> dls(restarts);
  const auto samples = options.mdl_samples.value_or(default_samples(kind));
  const auto estimator = options.estimator.value_or(default_estimator(kind));
  parallel_for(restarts, threads, [&](std::size_t r) {
    chains[r] = run_gibbs(g, kind, options.gibbs, substream_seed(seed, 2 * r));
    dls[r] = estimate_dl(g, chains[r].fitted_partition(), kind, samples, estimator, substream_seed(seed, 2 * r + 1));
  });
  ModelFit fit;
  fit.kind = kind;
  std::size_t best = 0;
  for (std::size_t r = 0; r < restarts; ++r) {
    fit.restart_dl_bits.push_back(dls[r].dl_bits);
    if (dls[r].dl_bits < dls[best].dl_bits) best = r;
  }
  fit.chain = std::move(chains[best]);
  fit.dl = std::move(dls[best]);
  return fit;
}

// ---------------------------------------------------------------------------
// Hub-and-spoke vs layered discernment grid.

struct DiscernmentConfig {
  std::vector<double> gammas{1.0, 2.0, 3.0, 4.0};
  std::vector<double> deltas{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t nodes = 1500;
  double baseline_density = 0.05;  // 0.0075 at N = 10^4, rescaled to keep the mean degree
  std::size_t reps = 1;
  std::size_t layered_layers = 3;
  FitOptions fit{};
};

struct DiscernmentCell {
  double gamma = 0;
  double delta = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::size_t edges = 0;
  double hub_spoke_bits = 0;
  double layered_bits = 0;
  // (Sigma_H - Sigma_L) per edge: negative where hub-and-spoke is preferred.
  double difference_per_edge = 0;
};

inline DiscernmentCell run_discernment_cell(const DiscernmentConfig& cfg, double gamma, double delta,
                                            std::size_t rep, std::uint64_t cell_seed) {
  DiscernmentCell cell{gamma, delta, rep, cell_seed};
  Rng rng = make_rng(cell_seed, 0);
  auto planted = sbm_generate(equal_blocks(cfg.nodes, discernment_matrix(cfg.baseline_density, gamma, delta)), rng);
  cell.edges = planted.graph.edge_count();
  auto hub = fit_model(planted.graph, ModelKind::hub_and_spoke(), cfg.fit, substream_seed(cell_seed, 1));
  auto lay = fit_model(planted.graph, ModelKind::layered(cfg.layered_layers), cfg.fit, substream_seed(cell_seed, 2));
  cell.hub_spoke_bits = hub.dl.dl_bits;
  cell.layered_bits = lay.dl.dl_bits;
  cell.difference_per_edge = (cell.hub_spoke_bits - cell.layered_bits) / static_cast<double>(std::max<std::size_t>(cell.edges, 1));
  return cell;
}

// Cells are keyed by (gamma index, delta index, rep), so output does not
// depend on scheduling.
inline std::vector<DiscernmentCell> run_discernment_experiment(const DiscernmentConfig& cfg, std::uint64_t seed,
                                                               std::size_t threads = 1) {
  struct Job {
    std::size_t gi, di, rep;
  };
  std::vector<Job> jobs;
  for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi)
    for (std::size_t di = 0; di < cfg.deltas.size(); ++di)
      for (std::size_t rep = 0; rep < cfg.reps; ++rep) jobs.push_back({gi, di, rep});
  std::vector<DiscernmentCell> cells(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const auto& job = jobs[j];
    const std::uint64_t key = (job.gi << 40) ^ (job.di << 20) ^ job.rep;
    cells[j] = run_discernment_cell(cfg, cfg.gammas[job.gi], cfg.deltas[job.di], job.rep, substream_seed(seed, key));
  });
  return cells;
}

// ---------------------------------------------------------------------------
// Layer-count recovery on networks with merged outer layers.

struct LayersConfig {
  std::vector<std::size_t> planted_layers{2, 3, 4, 5, 6};
  std::vector<std::size_t> fitted_layers{2, 3, 4, 5, 6};
  std::size_t networks_per_layer_count = 10;
  std::size_t nodes = 1200;
  std::size_t base_layers = 6;
  double core_density = 0.3;
  double outer_density = 0.01;
  FitOptions fit{};
};

struct LayersNetwork {
  std::size_t planted = 0;
  std::size_t network = 0;
  std::uint64_t seed = 0;
  std::size_t edges = 0;
  std::map<std::size_t, double> dl_bits;  // fitted layer count -> best DL
  std::size_t best_layers = 0;
};

struct LayersResult {
  std::vector<LayersNetwork> networks;
  // planted -> fitted -> mean DL per edge over networks
  std::map<std::size_t, std::map<std::size_t, double>> mean_bits_per_edge;
  std::map<std::size_t, std::size_t> argmin;  // planted -> fitted count of lowest mean
};

inline PlantedConfig merged_layers_config(const LayersConfig& cfg, std::size_t planted) {
  auto base = geometric_layer_densities(cfg.core_density, cfg.outer_density, cfg.base_layers);
  auto merged = merged_layer_densities(base, planted, cfg.nodes / cfg.base_layers);
  return equal_blocks(cfg.nodes, layered_block_matrix(merged));
}

inline LayersResult run_layers_experiment(const LayersConfig& cfg, std::uint64_t seed, std::size_t threads = 1) {
  struct Job {
    std::size_t network_index, fitted;
  };
  LayersResult result;
  std::vector<Graph> graphs;
  for (std::size_t planted : cfg.planted_layers) {
    for (std::size_t k = 0; k < cfg.networks_per_layer_count; ++k) {
      LayersNetwork net;
      net.planted = planted;
      net.network = k;
      net.seed = substream_seed(seed, (planted << 32) ^ k);
      Rng rng = make_rng(net.seed, 0);
      auto g = sbm_generate(merged_layers_config(cfg, planted), rng);
      net.edges = g.graph.edge_count();
      graphs.push_back(std::move(g.graph));
      result.networks.push_back(std::move(net));
    }
  }
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < result.networks.size(); ++i)
    for (std::size_t fitted : cfg.fitted_layers) jobs.push_back({i, fitted});
  std::vector<double> dl(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const auto& job = jobs[j];
    auto fit = fit_model(graphs[job.network_index], ModelKind::layered(job.fitted), cfg.fit,
                         substream_seed(result.networks[job.network_index].seed, job.fitted));
    dl[j] = fit.dl.dl_bits;
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) result.networks[jobs[j].network_index].dl_bits[jobs[j].fitted] = dl[j];

  std::map<std::size_t, std::map<std::size_t, std::size_t>> counts;
  for (auto& net : result.networks) {
    double best = std::numeric_limits<double>::infinity();
    for (auto [fitted, bits] : net.dl_bits) {
      if (bits < best) {
        best = bits;
        net.best_layers = fitted;
      }
      result.mean_bits_per_edge[net.planted][fitted] += bits / static_cast<double>(std::max<std::size_t>(net.edges, 1));
      ++counts[net.planted][fitted];
    }
  }
  for (auto& [planted, row] : result.mean_bits_per_edge) {
    double best = std::numeric_limits<double>::infinity();
    for (auto& [fitted, value] : row) {
      value /= static_cast<double>(counts[planted][fitted]);
      if (value < best) {
        best = value;
        result.argmin[planted] = fitted;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Typology report for one network.

struct PipelineOptions {
  std::size_t min_layers = 2;
  std::size_t max_layers = 6;
  FitOptions fit{};
  // |Sigma_H - Sigma_L| per edge below this is reported as indeterminate.
  double indifference_bits_per_edge = 0.05;
  std::size_t bootstrap_replicates = 1000;
};

struct BaselineDistances {
  double vi_kcores = 0;
  double vi_two_block = 0;
  double nvi_kcores = 0;
  double nvi_two_block = 0;
  double ami_kcores = 0;
  double ami_two_block = 0;
};

struct TypologyReport {
  ModelFit hub_spoke;
  std::map<std::size_t, ModelFit> layered;
  std::size_t best_layers = 0;
  ModelComparison comparison;
  Verdict verdict = Verdict::indeterminate;
  double vi_kcores_two_block = 0;
  BaselineDistances hub_spoke_baselines;
  BaselineDistances layered_baselines;
};

inline BaselineDistances baseline_distances(const Partition& p, const Partition& kcores, const Partition& two_block) {
  BaselineDistances d;
  d.vi_kcores = variation_of_information(p, kcores);
  d.vi_two_block = variation_of_information(p, two_block);
  if (p.node_count() >= 2) {
    d.nvi_kcores = normalized_vi(p, kcores);
    d.nvi_two_block = normalized_vi(p, two_block);
  }
  d.ami_kcores = adjusted_mutual_information(p, kcores);
  d.ami_two_block = adjusted_mutual_information(p, two_block);
  return d;
}

// Verdict: sign of Sigma_H - Sigma_L, unless its bootstrap interval covers 0
// or its magnitude per edge is below the indifference threshold.
inline Verdict typology_verdict(const ModelComparison& c, std::size_t edges, double indifference_bits_per_edge) {
  const double per_edge = std::abs(c.difference_bits) / static_cast<double>(std::max<std::size_t>(edges, 1));
  if (c.ci_low <= 0 && c.ci_high >= 0) return Verdict::indeterminate;
  if (per_edge < indifference_bits_per_edge) return Verdict::indeterminate;
  return c.verdict;
}

inline TypologyReport full_pipeline(const Graph& g, const PipelineOptions& options, std::uint64_t seed,
                                    std::size_t threads = 1) {
  if (options.min_layers < 2 || options.max_layers < options.min_layers) throw Error("invalid layer range");
  TypologyReport report;
  std::vector<ModelKind> kinds{ModelKind::hub_and_spoke()};
  for (std::size_t l = options.min_layers; l <= options.max_layers; ++l)
    if (l <= g.node_count()) kinds.push_back(ModelKind::layered(l));
  if (kinds.size() == 1) throw Error("graph too small for the requested layer range");
  std::vector<ModelFit> fits(kinds.size());
  parallel_for(kinds.size(), threads, [&](std::size_t i) {
    fits[i] = fit_model(g, kinds[i], options.fit, substream_seed(seed, i));
  });
  report.hub_spoke = std::move(fits[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < fits.size(); ++i) {
    const auto l = fits[i].kind.blocks();
    if (fits[i].dl.dl_bits < best) {
      best = fits[i].dl.dl_bits;
      report.best_layers = l;
    }
    report.layered.emplace(l, std::move(fits[i]));
  }
  const auto& best_layered = report.layered.at(report.best_layers);
  report.comparison = compare_models(report.hub_spoke.dl, best_layered.dl, options.bootstrap_replicates, seed);
  report.verdict = typology_verdict(report.comparison, g.edge_count(), options.indifference_bits_per_edge);

  auto kcores = k_core_decomposition(g).shells;
  auto two_block = two_block_partition(g).partition;
  report.vi_kcores_two_block = variation_of_information(kcores, two_block);
  report.hub_spoke_baselines = baseline_distances(report.hub_spoke.chain.map_partition, kcores, two_block);
  report.layered_baselines = baseline_distances(best_layered.chain.map_partition, kcores, two_block);
  return report;
}

}  // namespace cpsbm
