#include "moco/harness.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "moco/error.hpp"
#include "moco/geometry.hpp"
#include "moco/parallel.hpp"
#include "moco/pgd.hpp"
#include "moco/rng.hpp"

namespace moco {

Budget BudgetTable::budget(Norm norm) const {
  switch (norm) {
    case Norm::Linf:
      return Budget(norm, linf);
    case Norm::L2:
      return Budget(norm, l2);
    case Norm::L1:
      return Budget(norm, l1);
  }
  throw ContractViolation("BudgetTable: unknown norm");
}

void ExperimentSpec::validate() const {
  require(repetitions >= 1, "experiment: repetitions must be >= 1");
  require(points >= 2, "experiment: points must be >= 2");
  require(threads >= 1, "experiment: threads must be >= 1");
  require(pgd_restarts >= 1, "experiment: pgd_restarts must be >= 1");
  require(!epochs_list.empty(), "experiment: epochs_list must not be empty");
  for (int e : epochs_list) require(e >= 1, "experiment: epochs must be >= 1");
  require(!sample_counts.empty(), "experiment: sample_counts must not be empty");
  const std::size_t densest = *std::max_element(sample_counts.begin(), sample_counts.end());
  require(densest >= 2, "experiment: sample_counts must be >= 2");
  for (std::size_t c : sample_counts) {
    require(c >= 1 && densest % c == 0, "experiment: every sample count must divide the largest one");
  }
  require(!aux_counts.empty(), "experiment: aux_counts must not be empty");
  require(optimize.iterations >= 1 && optimize.t_samples_per_iter >= 1, "experiment: bad curve optimisation config");
  require(mutation_rel_std >= 0.0, "experiment: mutation_rel_std must be >= 0");
  require(quantization_levels >= 1, "experiment: quantization_levels must be >= 1");
  ea_config(Norm::Linf, CrossoverKind::Bezier).validate();
}

EaConfig ExperimentSpec::ea_config(Norm norm, CrossoverKind kind) const {
  EaConfig c(epsilons.budget(norm));
  c.population = population;
  c.elites = elites;
  c.tournament_size = tournament_size;
  c.mutation_prob = mutation_prob;
  c.mutation_std = mutation_rel_std * c.budget.epsilon;
  c.max_generations = max_generations;
  c.crossover = kind;
  c.bezier.rule = control_step;
  return c;
}

Pools Pools::build(const Classifier& model, const Dataset& data) {
  Pools p;
  p.train.resize(data.class_count);
  p.test.resize(data.class_count);
  p.aux.resize(data.class_count);
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    if (model.forward(data.train[i].x).predicted() == data.train[i].label) p.train[data.train[i].label].push_back(i);
  }
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    if (model.forward(data.test[i].x).predicted() == data.test[i].label) p.test[data.test[i].label].push_back(i);
  }
  for (std::size_t i = 0; i < data.aux.size(); ++i) p.aux[data.aux[i].label].push_back(i);
  return p;
}

namespace {

std::vector<std::size_t> shuffled(std::vector<std::size_t> v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  return v;
}

std::size_t pick_class(const std::vector<std::vector<std::size_t>>& pool, std::size_t min_size, Rng& rng,
                       std::optional<std::size_t> exclude = std::nullopt) {
  std::vector<std::size_t> eligible;
  for (std::size_t c = 0; c < pool.size(); ++c) {
    if (pool[c].size() >= min_size && c != exclude) eligible.push_back(c);
  }
  require(!eligible.empty(), "draw_case: not enough correctly classified training images");
  return eligible[rng.below(eligible.size())];
}

std::string label(Setting s) { return std::string(setting_name(s)); }
std::string label(Norm n) { return std::string(norm_name(n)); }

}  // namespace

CaseImages draw_case(Setting setting, const Dataset& data, const Pools& pools, Rng& rng, std::size_t aux_count,
                     std::size_t eval_count) {
  CaseImages out;
  std::vector<std::size_t> classes;
  if (setting == Setting::A) {
    const std::size_t c = pick_class(pools.train, 1, rng);
    const auto order = shuffled(pools.train[c], rng);
    out.main.push_back(data.train[order[0]]);
    classes = {c};
  } else if (setting == Setting::B) {
    const std::size_t c = pick_class(pools.train, 2, rng);
    const auto order = shuffled(pools.train[c], rng);
    out.main.push_back(data.train[order[0]]);
    out.main.push_back(data.train[order[1]]);
    classes = {c};
  } else {
    const std::size_t c1 = pick_class(pools.train, 1, rng);
    const std::size_t c2 = pick_class(pools.train, 1, rng, c1);
    out.main.push_back(data.train[shuffled(pools.train[c1], rng)[0]]);
    out.main.push_back(data.train[shuffled(pools.train[c2], rng)[0]]);
    classes = {c1, c2};
  }

  // Auxiliary images alternate between the main classes.
  std::vector<std::vector<std::size_t>> aux_orders;
  for (std::size_t c : classes) aux_orders.push_back(shuffled(pools.aux[c], rng));
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const std::size_t need = aux_count / classes.size() + (k < aux_count % classes.size() ? 1 : 0);
    if (aux_orders[k].size() < need) {
      throw ContractViolation("aux pool too small: need " + std::to_string(need) + " images of class " +
                              std::to_string(classes[k]) + ", have " + std::to_string(aux_orders[k].size()));
    }
  }
  for (std::size_t k = 0; k < aux_count; ++k) {
    const std::size_t which = k % classes.size();
    out.aux.push_back(data.aux[aux_orders[which][k / classes.size()]]);
  }

  std::vector<std::size_t> test_all;
  for (const auto& ids : pools.test) test_all.insert(test_all.end(), ids.begin(), ids.end());
  std::sort(test_all.begin(), test_all.end());
  if (test_all.size() < eval_count) {
    throw ContractViolation("test pool too small: need " + std::to_string(eval_count) +
                            " correctly classified test images, have " + std::to_string(test_all.size()));
  }
  const auto test_order = shuffled(std::move(test_all), rng);
  for (std::size_t k = 0; k < eval_count; ++k) out.eval.push_back(data.test[test_order[k]]);
  return out;
}

TransferStats transfer_stats(const BezierPath& path, const std::vector<Sample>& images,
                             const std::vector<double>& ts, const Classifier& model, QueryLedger& ledger) {
  TransferStats s;
  if (images.empty()) return s;
  std::vector<Vector> points;
  points.reserve(ts.size());
  for (double t : ts) points.push_back(eval_projected(path, t));

  auto fools = [&](const Sample& img, const Vector& delta) {
    ledger.charge_forward();
    return model.forward(perturbed_input(img.x, delta)).predicted() != img.label;
  };

  double endpoint_sum = 0.0;
  std::size_t path_hits = 0;
  std::size_t rescued = 0;
  std::size_t point_hits = 0;
  for (const Sample& img : images) {
    const bool e1 = fools(img, path.delta1);
    const bool e2 = fools(img, path.delta2);
    endpoint_sum += (e1 ? 0.5 : 0.0) + (e2 ? 0.5 : 0.0);
    std::size_t hits = 0;
    for (const Vector& p : points) hits += fools(img, p) ? 1 : 0;
    s.endpoint_hit.push_back(e1 || e2);
    s.path_hit.push_back(hits > 0);
    if (hits > 0) ++path_hits;
    if (hits > 0 && !(e1 || e2)) ++rescued;
    point_hits += hits;
  }
  const double n = static_cast<double>(images.size());
  s.endpoint_avg = 100.0 * endpoint_sum / n;
  s.path_success = 100.0 * static_cast<double>(path_hits) / n;
  s.rescued = 100.0 * static_cast<double>(rescued) / n;
  s.avg_points = static_cast<double>(point_hits) / n;
  return s;
}

namespace {

struct Endpoints {
  bool ok = false;
  Vector delta1;
  Vector delta2;
};

Endpoints make_endpoints(const Classifier& model, const std::vector<Sample>& main, const Budget& budget,
                         std::uint64_t seed, int restarts, QueryLedger& ledger) {
  PgdConfig cfg = PgdConfig::standard(budget, 0);
  const std::uint64_t s1 = derive_seed(seed, "endpoint", 0);
  const std::uint64_t s2 = derive_seed(seed, "endpoint", 1);
  Endpoints e;
  if (main.size() == 1) {
    EndpointPair pair = pgd_endpoint_pair(model, main[0].x, main[0].label, cfg, {s1, s2}, ledger, restarts);
    e.ok = pair.ok();
    e.delta1 = std::move(pair.first.delta);
    e.delta2 = std::move(pair.second.delta);
  } else {
    cfg.seed = s1;
    PgdResult r1 = pgd_with_restarts(model, main[0].x, main[0].label, cfg, ledger, restarts);
    cfg.seed = s2;
    PgdResult r2 = pgd_with_restarts(model, main[1].x, main[1].label, cfg, ledger, restarts);
    e.ok = r1.success && r2.success;
    e.delta1 = std::move(r1.delta);
    e.delta2 = std::move(r2.delta);
  }
  return e;
}

std::vector<Sample> first_n(const std::vector<Sample>& v, std::size_t n) {
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(n, v.size()))};
}

BezierPath optimise(const ExperimentSpec& spec, Setting setting, const CaseImages& images, std::size_t aux,
                    const Endpoints& ends, const Budget& budget, std::uint64_t seed, const Classifier& model,
                    QueryLedger& ledger, int iterations, const OptimizeObserver& observer = {}) {
  const CurveObjective objective =
      CurveObjective::make(setting, images.main, first_n(images.aux, aux), spec.w_main, spec.w_aux);
  OptimizeConfig cfg = spec.optimize;
  cfg.iterations = iterations;
  cfg.seed = seed;
  return optimize_control(objective, linear_path(ends.delta1, ends.delta2, budget), cfg, model, ledger, observer);
}

// One unit of parallel work: a (setting, norm, index) triple.
struct Job {
  Setting setting;
  Norm norm;
  std::size_t index;
};

std::vector<Job> jobs_for(const ExperimentSpec& spec, std::size_t per_cell) {
  std::vector<Job> jobs;
  for (Setting s : spec.settings) {
    for (Norm n : spec.norms) {
      for (std::size_t i = 0; i < per_cell; ++i) jobs.push_back({s, n, i});
    }
  }
  return jobs;
}

std::string stream(const std::string& family, const Job& job, bool with_norm = true) {
  std::string name = family + "/" + label(job.setting);
  if (with_norm) name += "/" + label(job.norm);
  return name;
}

nlohmann::json skip_record(const std::string& kind, const Job& job) {
  nlohmann::json r;
  r["skipped"] = true;
  r["reason"] = "endpoint generation failed";
  r["experiment"] = kind;
  r["setting"] = label(job.setting);
  r["norm"] = label(job.norm);
  r["case"] = job.index;
  return r;
}

std::string skip_text(const Job& job) {
  return label(job.setting) + "/" + label(job.norm) + " case " + std::to_string(job.index) +
         ": endpoint generation failed";
}

void collect(Report& report, std::vector<std::vector<nlohmann::json>>& per_job) {
  for (auto& records : per_job) {
    for (auto& r : records) {
      if (r.contains("skipped")) {
        report.skipped.push_back(r["setting"].get<std::string>() + "/" + r["norm"].get<std::string>() + " case " +
                                 std::to_string(r["case"].get<std::size_t>()) + ": " +
                                 r["reason"].get<std::string>());
      }
      report.records.push_back(std::move(r));
    }
  }
}

std::optional<double> opt(bool present, double value) {
  if (!present) return std::nullopt;
  return value;
}

}  // namespace

Report run_connectivity(const ExperimentSpec& spec, const Classifier& model, const Dataset& data) {
  spec.validate();
  const Pools pools = Pools::build(model, data);
  const std::vector<Job> jobs = jobs_for(spec, spec.cases);
  std::vector<std::vector<nlohmann::json>> out(jobs.size());

  parallel_for(jobs.size(), spec.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    QueryLedger ledger;
    Rng image_rng(derive_seed(spec.seed, stream("curve-images", job, false), job.index));
    const CaseImages images = draw_case(job.setting, data, pools, image_rng, spec.connect_aux, 0);
    const Budget budget = spec.epsilons.budget(job.norm);
    const Endpoints ends = make_endpoints(model, images.main, budget,
                                          derive_seed(spec.seed, stream("curve-endpoints", job), job.index),
                                          spec.pgd_restarts, ledger);
    if (!ends.ok) {
      out[j].push_back(skip_record("connectivity", job));
      return;
    }
    const BezierPath curve =
        optimise(spec, job.setting, images, spec.connect_aux, ends, budget,
                 derive_seed(spec.seed, stream("curve-opt", job), job.index), model, ledger, spec.optimize.iterations);

    auto emit = [&](const BezierPath& path, const char* kind) {
      const ConnectivityReport c = evaluate_connectivity(path, images.main, spec.points, model, ledger);
      const bool pair = images.main.size() == 2;
      nlohmann::json r = make_record("connectivity", {label(job.setting), label(job.norm), kind},
                                     {{"ASR1", opt(pair, c.per_case_asr[0])},
                                      {"ASR2", opt(pair, pair ? c.per_case_asr[1] : 0.0)},
                                      {"ASR Both", c.asr_both},
                                      {"ASR Avg", c.asr_avg}});
      r["case"] = job.index;
      r["mean_loss"] = c.mean_loss;
      r["min_loss"] = c.min_loss;
      out[j].push_back(std::move(r));
    };
    emit(curve, "bezier");
    if (spec.linear) emit(linear_path(ends.delta1, ends.delta2, budget), "linear");
    out[j].back()["forwards"] = ledger.forwards();
  });

  Report report;
  report.kind = "connectivity";
  collect(report, out);
  report.tables.push_back(table_from_records("connectivity", {"Setting", "Norm", "Path"},
                                             {"ASR1", "ASR2", "ASR Both", "ASR Avg"}, report.records));
  return report;
}

Report run_transfer(const ExperimentSpec& spec, const Classifier& model, const Dataset& data) {
  spec.validate();
  const Pools pools = Pools::build(model, data);
  const std::vector<Job> jobs = jobs_for(spec, spec.cases);
  const std::vector<double> ts = evaluation_grid(spec.points);
  std::vector<std::vector<nlohmann::json>> out(jobs.size());

  parallel_for(jobs.size(), spec.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    QueryLedger ledger;
    Rng image_rng(derive_seed(spec.seed, stream("curve-images", job, false), job.index));
    const CaseImages images = draw_case(job.setting, data, pools, image_rng, spec.transfer_aux, spec.eval_images);
    const Budget budget = spec.epsilons.budget(job.norm);
    const Endpoints ends = make_endpoints(model, images.main, budget,
                                          derive_seed(spec.seed, stream("curve-endpoints", job), job.index),
                                          spec.pgd_restarts, ledger);
    if (!ends.ok) {
      out[j].push_back(skip_record("transfer", job));
      return;
    }
    const BezierPath curve =
        optimise(spec, job.setting, images, spec.transfer_aux, ends, budget,
                 derive_seed(spec.seed, stream("curve-opt", job), job.index), model, ledger, spec.optimize.iterations);
    const TransferStats s = transfer_stats(curve, images.eval, ts, model, ledger);
    nlohmann::json r = make_record("transfer", {label(job.setting), label(job.norm)},
                                   {{"Endp. Avg", s.endpoint_avg},
                                    {"Path Succ.", s.path_success},
                                    {"Imgs Resc.", s.rescued},
                                    {"Avg. pts.", s.avg_points}});
    r["case"] = job.index;
    r["endpoint_hit"] = s.endpoint_hit;
    r["path_hit"] = s.path_hit;
    r["forwards"] = ledger.forwards();
    out[j].push_back(std::move(r));
  });

  Report report;
  report.kind = "transfer";
  collect(report, out);
  report.tables.push_back(table_from_records("transfer", {"Setting", "Norm"},
                                             {"Endp. Avg", "Path Succ.", "Imgs Resc.", "Avg. pts."},
                                             report.records));
  return report;
}

namespace {

// Per-case outcome for the repetition-based experiments; empty when the
// endpoints could not be generated.
struct AblationCase {
  bool ok = false;
  std::vector<TransferStats> per_aux;                    // aux ablation
  std::vector<std::vector<double>> coverage;             // [aux][epoch]
  std::vector<std::vector<double>> density_coverage;     // [aux][density]
  std::vector<std::vector<double>> density_per_point;    // [aux][density]
};

struct AblationJob {
  Job cell;
  std::size_t repetition;
  std::size_t slot;
};

std::vector<AblationJob> ablation_jobs(const ExperimentSpec& spec) {
  std::vector<AblationJob> jobs;
  for (const Job& j : jobs_for(spec, spec.repetitions)) {
    for (std::size_t k = 0; k < spec.cases_per_repetition; ++k) {
      jobs.push_back({{j.setting, j.norm, j.index * spec.cases_per_repetition + k}, j.index, k});
    }
  }
  return jobs;
}

// Everything shared by the two repetition experiments up to the endpoints.
struct AblationSetup {
  CaseImages images;
  Endpoints ends;
  Budget budget;
};

AblationSetup ablation_setup(const ExperimentSpec& spec, const Job& job, const Dataset& data, const Pools& pools,
                             const Classifier& model, QueryLedger& ledger) {
  const std::size_t max_aux = *std::max_element(spec.aux_counts.begin(), spec.aux_counts.end());
  Rng image_rng(derive_seed(spec.seed, stream("ablation-images", job, false), job.index));
  CaseImages images = draw_case(job.setting, data, pools, image_rng, max_aux, spec.eval_images);
  const Budget budget = spec.epsilons.budget(job.norm);
  Endpoints ends = make_endpoints(model, images.main, budget,
                                  derive_seed(spec.seed, stream("ablation-endpoints", job), job.index),
                                  spec.pgd_restarts, ledger);
  return {std::move(images), std::move(ends), budget};
}

double mean_of(const std::vector<double>& v) { return v.empty() ? 0.0 : summarize(v).mean; }

}  // namespace

Report run_aux_ablation(const ExperimentSpec& spec, const Classifier& model, const Dataset& data) {
  spec.validate();
  const Pools pools = Pools::build(model, data);
  const std::vector<AblationJob> jobs = ablation_jobs(spec);
  const std::vector<double> ts = evaluation_grid(spec.points);
  std::vector<AblationCase> results(jobs.size());

  parallel_for(jobs.size(), spec.threads, [&](std::size_t j) {
    const Job& job = jobs[j].cell;
    QueryLedger ledger;
    const AblationSetup setup = ablation_setup(spec, job, data, pools, model, ledger);
    if (!setup.ends.ok) return;
    AblationCase& res = results[j];
    res.ok = true;
    const std::uint64_t opt_seed = derive_seed(spec.seed, stream("ablation-opt", job), job.index);
    for (std::size_t aux : spec.aux_counts) {
      const BezierPath curve = optimise(spec, job.setting, setup.images, aux, setup.ends, setup.budget, opt_seed, model,
                                        ledger, spec.optimize.iterations);
      res.per_aux.push_back(transfer_stats(curve, setup.images.eval, ts, model, ledger));
    }
  });

  Report report;
  report.kind = "aux_ablation";
  // One record per (cell, repetition, aux count), averaging the repetition's cases.
  for (std::size_t start = 0; start < jobs.size(); start += spec.cases_per_repetition) {
    const AblationJob& head = jobs[start];
    std::vector<Job> failed;
    for (std::size_t a = 0; a < spec.aux_counts.size(); ++a) {
      std::vector<double> endp, path, rescue;
      for (std::size_t k = 0; k < spec.cases_per_repetition; ++k) {
        const AblationCase& c = results[start + k];
        if (!c.ok) {
          if (a == 0) failed.push_back(jobs[start + k].cell);
          continue;
        }
        endp.push_back(c.per_aux[a].endpoint_avg);
        path.push_back(c.per_aux[a].path_success);
        rescue.push_back(c.per_aux[a].rescued);
      }
      const bool any = !endp.empty();
      const double e = mean_of(endp);
      const double p = mean_of(path);
      nlohmann::json r = make_record(
          "aux", {label(head.cell.setting), label(head.cell.norm), std::to_string(spec.aux_counts[a])},
          {{"Endp. Avg", opt(any, e)}, {"Path Succ.", opt(any, p)}, {"Imp.", opt(any, p - e)},
           {"Rescue Rate", opt(any, mean_of(rescue))}});
      r["repetition"] = head.repetition;
      r["cases"] = endp.size();
      report.records.push_back(std::move(r));
    }
    for (const Job& f : failed) {
      report.records.push_back(skip_record("aux_ablation", f));
      report.skipped.push_back(skip_text(f));
    }
  }
  report.tables.push_back(table_from_records("aux", {"Setting", "Norm", "Aux"},
                                             {"Endp. Avg", "Path Succ.", "Imp.", "Rescue Rate"}, report.records));
  return report;
}

Report run_convergence(const ExperimentSpec& spec, const Classifier& model, const Dataset& data) {
  spec.validate();
  const Pools pools = Pools::build(model, data);
  const std::vector<AblationJob> jobs = ablation_jobs(spec);
  const std::size_t densest = *std::max_element(spec.sample_counts.begin(), spec.sample_counts.end());
  const std::vector<double> ts = evaluation_grid(densest);
  const int last_epoch = *std::max_element(spec.epochs_list.begin(), spec.epochs_list.end());
  std::vector<AblationCase> results(jobs.size());

  // hits[point][image] for every point of the densest grid.
  auto hit_matrix = [&](const BezierPath& path, const std::vector<Sample>& images, QueryLedger& ledger) {
    std::vector<std::vector<bool>> hits;
    for (double t : ts) {
      const Vector p = eval_projected(path, t);
      std::vector<bool> row;
      for (const Sample& img : images) {
        ledger.charge_forward();
        row.push_back(model.forward(perturbed_input(img.x, p)).predicted() != img.label);
      }
      hits.push_back(std::move(row));
    }
    return hits;
  };
  // Coverage over the points with index % stride == 0.
  auto coverage = [](const std::vector<std::vector<bool>>& hits, std::size_t stride) {
    const std::size_t images = hits.front().size();
    std::size_t covered = 0;
    for (std::size_t i = 0; i < images; ++i) {
      for (std::size_t p = 0; p < hits.size(); p += stride) {
        if (hits[p][i]) {
          ++covered;
          break;
        }
      }
    }
    return 100.0 * static_cast<double>(covered) / static_cast<double>(images);
  };
  auto per_point = [](const std::vector<std::vector<bool>>& hits, std::size_t stride) {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t p = 0; p < hits.size(); p += stride) {
      sum += 100.0 * static_cast<double>(std::count(hits[p].begin(), hits[p].end(), true)) /
             static_cast<double>(hits[p].size());
      ++used;
    }
    return sum / static_cast<double>(used);
  };

  parallel_for(jobs.size(), spec.threads, [&](std::size_t j) {
    const Job& job = jobs[j].cell;
    QueryLedger ledger;
    const AblationSetup setup = ablation_setup(spec, job, data, pools, model, ledger);
    if (!setup.ends.ok) return;
    require(!setup.images.eval.empty(), "run_convergence: eval_images must be >= 1");
    AblationCase& res = results[j];
    res.ok = true;
    const std::uint64_t opt_seed = derive_seed(spec.seed, stream("ablation-opt", job), job.index);
    for (std::size_t aux : spec.aux_counts) {
      std::map<int, double> at_epoch;
      std::optional<BezierPath> final_path;
      optimise(spec, job.setting, setup.images, aux, setup.ends, setup.budget, opt_seed, model, ledger, last_epoch,
               [&](int done, const BezierPath& path) {
                 if (std::find(spec.epochs_list.begin(), spec.epochs_list.end(), done) != spec.epochs_list.end()) {
                   at_epoch[done] = coverage(hit_matrix(path, setup.images.eval, ledger), 1);
                 }
                 if (done == last_epoch) final_path = path;
               });
      std::vector<double> cov;
      for (int e : spec.epochs_list) cov.push_back(at_epoch.at(e));
      res.coverage.push_back(std::move(cov));

      const auto hits = hit_matrix(*final_path, setup.images.eval, ledger);
      std::vector<double> dc, dp;
      for (std::size_t count : spec.sample_counts) {
        dc.push_back(coverage(hits, densest / count));
        dp.push_back(per_point(hits, densest / count));
      }
      res.density_coverage.push_back(std::move(dc));
      res.density_per_point.push_back(std::move(dp));
    }
  });

  Report report;
  report.kind = "convergence";
  for (std::size_t start = 0; start < jobs.size(); start += spec.cases_per_repetition) {
    const AblationJob& head = jobs[start];
    const std::string s = label(head.cell.setting);
    const std::string n = label(head.cell.norm);
    std::vector<const AblationCase*> ok;
    for (std::size_t k = 0; k < spec.cases_per_repetition; ++k) {
      if (results[start + k].ok) {
        ok.push_back(&results[start + k]);
      } else {
        report.records.push_back(skip_record("convergence", jobs[start + k].cell));
        report.skipped.push_back(skip_text(jobs[start + k].cell));
      }
    }
    const bool any = !ok.empty();
    for (std::size_t a = 0; a < spec.aux_counts.size(); ++a) {
      const std::string aux = std::to_string(spec.aux_counts[a]);
      for (std::size_t e = 0; e < spec.epochs_list.size(); ++e) {
        std::vector<double> v;
        for (const AblationCase* c : ok) v.push_back(c->coverage[a][e]);
        nlohmann::json r = make_record("coverage", {s, n, aux, std::to_string(spec.epochs_list[e])},
                                       {{"Coverage", opt(any, mean_of(v))}});
        r["repetition"] = head.repetition;
        report.records.push_back(std::move(r));
      }
      for (std::size_t d = 0; d < spec.sample_counts.size(); ++d) {
        std::vector<double> cov, pp;
        for (const AblationCase* c : ok) {
          cov.push_back(c->density_coverage[a][d]);
          pp.push_back(c->density_per_point[a][d]);
        }
        nlohmann::json r = make_record("density", {s, n, aux, std::to_string(spec.sample_counts[d])},
                                       {{"Coverage", opt(any, mean_of(cov))}, {"Coverage/pt", opt(any, mean_of(pp))}});
        r["repetition"] = head.repetition;
        report.records.push_back(std::move(r));
      }
    }
  }
  report.tables.push_back(
      table_from_records("coverage", {"Setting", "Norm", "Aux", "Epochs"}, {"Coverage"}, report.records));
  report.tables.push_back(table_from_records("density", {"Setting", "Norm", "Aux", "Points"},
                                             {"Coverage", "Coverage/pt"}, report.records));
  return report;
}

namespace {

// Correctly classified test indices (under every model given), shuffled by
// the named stream, truncated to count.
std::vector<std::size_t> attack_samples(const ExperimentSpec& spec, const Dataset& data,
                                        const std::vector<const Classifier*>& models, const std::string& name,
                                        std::size_t count) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    bool correct = true;
    for (const Classifier* m : models) correct = correct && m->forward(data.test[i].x).predicted() == data.test[i].label;
    if (correct) ids.push_back(i);
  }
  Rng rng(derive_seed(spec.seed, name, 0));
  ids = shuffled(std::move(ids), rng);
  if (ids.size() > count) ids.resize(count);
  return ids;
}

nlohmann::json attack_record(const std::string& table, std::vector<std::string> row, const AttackResult& r,
                             std::size_t sample_id, std::string_view method, const Budget& budget, bool timing) {
  nlohmann::json rec = nlohmann::json::parse(attack_result_json(r, sample_id, method, budget));
  if (!timing) rec["seconds"] = nullptr;
  nlohmann::json tagged =
      make_record(table, std::move(row),
                  {{"Succ. rate", r.success ? 100.0 : 0.0},
                   {"Avg. gen.", opt(r.success, static_cast<double>(r.generations))},
                   {"Avg. queries", static_cast<double>(r.forwards)},
                   {"Avg. time", opt(timing, r.seconds)}});
  tagged.update(rec);
  return tagged;
}

}  // namespace

Report run_ea_compare(const ExperimentSpec& spec, const Classifier& model, const Dataset& data) {
  spec.validate();
  const auto samples = attack_samples(spec, data, {&model}, "ea-compare-samples", spec.ea_samples);
  const CrossoverKind kinds[] = {CrossoverKind::Uniform, CrossoverKind::Bezier};

  struct EaJob {
    Norm norm;
    std::size_t sample;
    CrossoverKind kind;
  };
  std::vector<EaJob> jobs;
  for (Norm n : spec.norms) {
    for (CrossoverKind k : kinds) {
      for (std::size_t i = 0; i < samples.size(); ++i) jobs.push_back({n, i, k});
    }
  }
  std::vector<nlohmann::json> out(jobs.size());
  parallel_for(jobs.size(), spec.threads, [&](std::size_t j) {
    const EaJob& job = jobs[j];
    const Sample& s = data.test[samples[job.sample]];
    const EaConfig cfg = spec.ea_config(job.norm, job.kind);
    const std::uint64_t seed = derive_seed(spec.seed, "ea/" + label(job.norm), job.sample);
    QueryLedger ledger;
    const AttackResult r = run_ea(model, s.x, s.label, cfg, seed, ledger);
    const std::string method(crossover_name(job.kind));
    out[j] = attack_record("compare", {label(job.norm), method}, r, samples[job.sample], method, cfg.budget,
                           spec.timing);
  });

  Report report;
  report.kind = "ea_compare";
  report.records = std::move(out);
  report.tables.push_back(table_from_records("compare", {"Norm", "Method"},
                                             {"Succ. rate", "Avg. gen.", "Avg. queries", "Avg. time"},
                                             report.records));

  // Improvement of the Bezier crossover over the baseline, from the raw means.
  const Table& compare = report.tables.front();
  const std::string base(crossover_name(CrossoverKind::Uniform));
  const std::string moco(crossover_name(CrossoverKind::Bezier));
  std::vector<nlohmann::json> derived;
  for (Norm n : spec.norms) {
    const Row* b = compare.find({label(n), base});
    const Row* m = compare.find({label(n), moco});
    if (b == nullptr || m == nullptr) continue;
    auto reduction = [&](std::size_t col) -> std::optional<double> {
      const Cell& bc = b->cells[col];
      const Cell& mc = m->cells[col];
      if (bc.empty() || mc.empty() || bc.summary.mean == 0.0) return std::nullopt;
      return 100.0 * (1.0 - mc.summary.mean / bc.summary.mean);
    };
    nlohmann::json r = make_record(
        "improvement", {label(n)},
        {{"Succ. gain", m->cells[0].summary.mean - b->cells[0].summary.mean},
         {"Gen. reduction", reduction(1)},
         {"Query reduction", reduction(2)},
         {"Time reduction", reduction(3)}});
    derived.push_back(std::move(r));
  }
  report.records.insert(report.records.end(), derived.begin(), derived.end());
  report.tables.push_back(table_from_records("improvement", {"Norm"},
                                             {"Succ. gain", "Gen. reduction", "Query reduction", "Time reduction"},
                                             report.records));
  return report;
}

Report run_obfuscated(const ExperimentSpec& spec, const Mlp& model, const Dataset& data) {
  spec.validate();
  const DefenseWrapper defended(model, spec.quantization_levels);
  const auto samples = attack_samples(spec, data, {&model, &defended}, "obfuscated-samples", spec.ea_samples);
  const std::string defence = "quantize-" + std::to_string(spec.quantization_levels);

  struct ObfJob {
    Norm norm;
    bool defended;
    bool evolutionary;
    std::size_t sample;
  };
  std::vector<ObfJob> jobs;
  for (Norm n : spec.norms) {
    for (bool d : {false, true}) {
      for (bool e : {false, true}) {
        for (std::size_t i = 0; i < samples.size(); ++i) jobs.push_back({n, d, e, i});
      }
    }
  }
  std::vector<nlohmann::json> out(jobs.size());
  parallel_for(jobs.size(), spec.threads, [&](std::size_t j) {
    const ObfJob& job = jobs[j];
    const Sample& s = data.test[samples[job.sample]];
    const Classifier& target = job.defended ? static_cast<const Classifier&>(defended) : model;
    const Budget budget = spec.epsilons.budget(job.norm);
    const std::uint64_t seed = derive_seed(spec.seed, "obfuscated/" + label(job.norm), job.sample);
    QueryLedger ledger;
    bool success = false;
    std::string method;
    if (job.evolutionary) {
      method = crossover_name(CrossoverKind::Bezier);
      success = run_ea(target, s.x, s.label, spec.ea_config(job.norm, CrossoverKind::Bezier), seed, ledger).success;
    } else {
      method = "pgd";
      success = pgd(target, s.x, s.label, PgdConfig::standard(budget, seed), ledger).success;
    }
    nlohmann::json r = make_record("obfuscated", {job.defended ? defence : "none", label(job.norm), method},
                                   {{"ASR", success ? 100.0 : 0.0}});
    r["sample_id"] = samples[job.sample];
    r["forwards"] = ledger.forwards();
    r["seed"] = seed;
    out[j] = std::move(r);
  });

  Report report;
  report.kind = "obfuscated";
  report.records = std::move(out);
  report.tables.push_back(
      table_from_records("obfuscated", {"Defense", "Norm", "Method"}, {"ASR"}, report.records));
  return report;
}

}  // namespace moco
