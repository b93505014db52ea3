#include "support/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "support/synthetic.hpp"
#include "tmb/fitting.hpp"
#include "tmb/measurements.hpp"
#include "tmb/pathloss.hpp"
#include "tmb/rate_model.hpp"

namespace testsupport {
namespace {

tmb::PathLossParams random_params(Rng& rng) {
  tmb::PathLossParams p;
  p.l0_db = rng.uniform(40.0, 60.0);
  p.gamma = rng.uniform(1.2, 4.0);
  p.k_db_per_wall = rng.uniform(0.0, 10.0);
  p.wbar_walls_per_m = rng.uniform(0.01, 0.5);
  p.fc_ghz = rng.uniform(2.4, 6.0);
  p.n_itu = rng.uniform(20.0, 40.0);
  p.lf_itu_db = rng.uniform(0.0, 10.0);
  return p;
}

tmb::Model random_model(Rng& rng) {
  return tmb::kAllModels[static_cast<std::size_t>(rng.uniform_int(0, 5))];
}

void record_failure(PropertyResult& result, const std::string& detail) {
  if (result.failures == 0) result.first_failure = detail;
  ++result.failures;
}

template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace

PropertyResult check_monotonicity(std::size_t cases) {
  PropertyResult result;
  result.name = "monotonicity";
  Rng rng(101);
  for (std::size_t i = 0; i < cases; ++i) {
    const auto params = random_params(rng);
    const auto model = random_model(rng);
    tmb::LinkGeometry near;
    near.walls = rng.uniform_int(0, 6);
    near.floors = rng.uniform_int(0, 3);
    near.distance_m = rng.uniform(0.05, 99.0);
    tmb::LinkGeometry far = near;
    far.distance_m = rng.uniform(near.distance_m + 1e-5, 100.0);
    const double pl_near = tmb::evaluate(model, near, params);
    const double pl_far = tmb::evaluate(model, far, params);
    ++result.cases;
    if (!(pl_near < pl_far)) {
      std::ostringstream msg;
      msg << "model " << tmb::model_name(model) << ": pl(" << near.distance_m
          << ") = " << pl_near << " !< pl(" << far.distance_m
          << ") = " << pl_far;
      record_failure(result, msg.str());
    }
  }
  return result;
}

PropertyResult check_breakpoint_continuity(std::size_t cases) {
  PropertyResult result;
  result.name = "breakpoint-continuity";
  Rng rng(202);
  for (std::size_t i = 0; i < cases; ++i) {
    const double fc = rng.uniform(2.4, 6.0);
    const int walls = rng.uniform_int(0, 6);
    const int floors = rng.uniform_int(0, 3);
    ++result.cases;
    bool ok = true;
    std::ostringstream msg;
    const auto check = [&](const char* label, double break_m, auto&& eval) {
      const double below = eval(std::nextafter(break_m, 0.0));
      const double at = eval(break_m);
      const double above = eval(std::nextafter(break_m, break_m + 1.0));
      if (std::abs(above - below) > 1e-9 || std::abs(at - below) > 1e-9) {
        ok = false;
        msg << label << " jump at " << break_m << " m: " << below << " / "
            << at << " / " << above << "; ";
      }
      const double wide = std::abs(eval(break_m + 1e-4) - eval(break_m - 1e-4));
      if (wide >= 0.01) {
        ok = false;
        msg << label << " +-1e-4 m spread " << wide << "; ";
      }
    };
    check("residential", 5.0, [&](double d) {
      return tmb::pl_residential(d, fc, walls, floors);
    });
    check("enterprise", 10.0,
          [&](double d) { return tmb::pl_enterprise(d, fc, walls); });
    if (!ok) record_failure(result, msg.str());
  }
  return result;
}

PropertyResult check_wall_additivity(std::size_t cases) {
  PropertyResult result;
  result.name = "wall-additivity";
  Rng rng(303);
  for (std::size_t i = 0; i < cases; ++i) {
    const auto params = random_params(rng);
    const double d = rng.uniform(0.1, 100.0);
    const int w = rng.uniform_int(0, 8);
    ++result.cases;
    const double wf_delta =
        tmb::pl_wall_factor(d, w + 1, params.l0_db, params.gamma,
                            params.k_db_per_wall) -
        tmb::pl_wall_factor(d, w, params.l0_db, params.gamma,
                            params.k_db_per_wall);
    const double res_delta =
        tmb::pl_residential(d, params.fc_ghz, w + 1, 0) -
        tmb::pl_residential(d, params.fc_ghz, w, 0);
    const double ent_delta = tmb::pl_enterprise(d, params.fc_ghz, w + 1) -
                             tmb::pl_enterprise(d, params.fc_ghz, w);
    if (std::abs(wf_delta - params.k_db_per_wall) > 1e-12 ||
        std::abs(res_delta - 5.0) > 1e-12 || std::abs(ent_delta - 7.0) > 1e-12) {
      std::ostringstream msg;
      msg << "per-wall increments " << wf_delta << " (want "
          << params.k_db_per_wall << "), " << res_delta << " (want 5), "
          << ent_delta << " (want 7) at d = " << d << ", w = " << w;
      record_failure(result, msg.str());
    }
  }
  return result;
}

PropertyResult check_link_budget_round_trip(std::size_t cases) {
  PropertyResult result;
  result.name = "link-budget-round-trip";
  Rng rng(404);
  for (std::size_t i = 0; i < cases; ++i) {
    const auto params = random_params(rng);
    const auto model = random_model(rng);
    tmb::LinkGeometry g;
    g.distance_m = rng.uniform(0.1, 100.0);
    g.walls = rng.uniform_int(0, 6);
    g.floors = rng.uniform_int(0, 3);
    const double ptx = rng.uniform(-10.0, 30.0);
    ++result.cases;
    const auto budget = tmb::link_budget(model, g, params, ptx);
    const double pl = tmb::evaluate(model, g, params);
    const double rssi = tmb::rssi_at(model, g, params, ptx);
    const bool consistent = budget.ptx_dbm == ptx && budget.pl_db == pl &&
                            budget.rssi_dbm == rssi;
    const bool recovers = std::abs((ptx - budget.rssi_dbm) - pl) <= 1e-9 &&
                          std::abs(budget.ptx_dbm -
                                   (budget.pl_db + budget.rssi_dbm)) <= 1e-9;
    if (!consistent || !recovers) {
      std::ostringstream msg;
      msg << "model " << tmb::model_name(model) << " ptx " << ptx << " pl "
          << pl << " rssi " << budget.rssi_dbm;
      record_failure(result, msg.str());
    }
  }
  return result;
}

PropertyResult check_probability_normalization(std::size_t cases) {
  PropertyResult result;
  result.name = "probability-normalization";
  Rng rng(505);
  const int bws[] = {20, 40, 80};
  const double ptxs[] = {4.0, 10.0, 23.0};
  for (std::size_t i = 0; i < cases; ++i) {
    const int n = 50 + rng.uniform_int(0, 150);
    std::vector<tmb::PacketRecord> records;
    records.reserve(static_cast<std::size_t>(n));
    std::size_t expect_excluded = 0;
    std::size_t expect_out_of_range = 0;
    for (int j = 0; j < n; ++j) {
      tmb::PacketRecord rec;
      rec.timestamp_s = j;
      rec.location_id = "p";
      const double roll = rng.uniform();
      if (roll < 0.03) {
        rec.rssi_dbm = rng.uniform(-120.0, -97.001);
        ++expect_out_of_range;
      } else if (roll < 0.06) {
        rec.rssi_dbm = rng.uniform(-21.999, -5.0);
        ++expect_out_of_range;
      } else {
        rec.rssi_dbm = rng.uniform(-96.9, -22.1);
      }
      rec.bw_mhz = bws[rng.uniform_int(0, 2)];
      rec.ptx_dbm = ptxs[rng.uniform_int(0, 2)];
      rec.mcs = rng.uniform_int(0, 9);
      rec.nss = rng.uniform_int(1, 2);
      if (rec.mcs == 9 && rec.bw_mhz == 20) {
        ++expect_excluded;
        if (rec.rssi_dbm < tmb::kBinFloorDbm ||
            rec.rssi_dbm >= tmb::kBinCeilingDbm) {
          --expect_out_of_range;  // exclusion takes precedence over binning
        }
      }
      rec.channel = 36;
      records.push_back(rec);
    }
    ++result.cases;
    const auto table = tmb::build_table(records);
    bool ok = table.excluded == expect_excluded &&
              table.out_of_range == expect_out_of_range;
    std::size_t binned = 0;
    for (const auto& [key, cell] : table.cells) {
      binned += cell.samples;
      double sum = 0.0;
      for (const auto& entry : cell.entries) sum += entry.probability;
      if (std::abs(sum - 1.0) > 1e-9) ok = false;
      for (std::size_t e = 1; e < cell.entries.size(); ++e) {
        const auto& a = cell.entries[e - 1];
        const auto& b = cell.entries[e];
        if (std::pair(a.mcs, a.nss) >= std::pair(b.mcs, b.nss)) ok = false;
      }
      for (const auto& entry : cell.entries) {
        if (!(entry.probability > 0.0)) ok = false;
      }
      const auto bin = tmb::bin_for_rssi(key.rssi_bin_low);
      if (!bin || bin->lower_dbm != key.rssi_bin_low) ok = false;
    }
    if (binned + table.out_of_range + table.excluded !=
        static_cast<std::size_t>(n)) {
      ok = false;
    }
    if (!ok) {
      std::ostringstream msg;
      msg << "case " << i << ": accounting " << binned << " + "
          << table.out_of_range << " + " << table.excluded << " != " << n;
      record_failure(result, msg.str());
    }
  }
  return result;
}

PropertyResult check_permutation_invariance(std::size_t cases) {
  PropertyResult result;
  result.name = "permutation-invariance";
  Rng rng(606);
  for (std::size_t i = 0; i < cases; ++i) {
    const int n = rng.uniform_int(8, 21);
    std::vector<tmb::PathLossSample> samples;
    tmb::LocationRegistry registry;
    std::vector<tmb::PacketRecord> records;
    for (int j = 0; j < n; ++j) {
      tmb::PathLossSample s;
      s.location_id = "s" + std::to_string(j);
      s.distance_m = rng.uniform(0.7, 60.0);
      s.walls = (j % 2 == 0) ? 0 : rng.uniform_int(1, 4);
      s.pl_db = tmb::pl_wall_factor(s.distance_m, s.walls, 54.0, 2.1, 5.0) +
                1.5 * rng.gaussian();
      s.records = 1;
      samples.push_back(s);

      tmb::RegistryEntry entry;
      entry.id = s.location_id;
      entry.geom.distance_m = s.distance_m;
      entry.geom.walls = s.walls;
      registry.add(entry);
      for (int r = 0; r < 4; ++r) {
        tmb::PacketRecord rec;
        rec.timestamp_s = j * 10 + r;
        rec.location_id = s.location_id;
        rec.rssi_dbm = 23.0 - s.pl_db - rng.uniform(0.0, 3.0);
        rec.mcs = rng.uniform_int(0, 8);
        rec.nss = rng.uniform_int(1, 2);
        rec.bw_mhz = 20;
        rec.ptx_dbm = 23.0;
        rec.channel = 36;
        records.push_back(rec);
      }
    }
    auto shuffled_samples = samples;
    shuffle(shuffled_samples, rng);
    auto shuffled_records = records;
    shuffle(shuffled_records, rng);

    ++result.cases;
    bool ok = true;
    std::ostringstream msg;

    const auto wall_free = [](const std::vector<tmb::PathLossSample>& all) {
      std::vector<tmb::PathLossSample> subset;
      for (const auto& s : all) {
        if (s.walls == 0) subset.push_back(s);
      }
      return subset;
    };
    const auto fit_a = tmb::fit_log_distance(wall_free(samples));
    const auto fit_b = tmb::fit_log_distance(wall_free(shuffled_samples));
    if (fit_a.l0_db != fit_b.l0_db || fit_a.gamma != fit_b.gamma) {
      ok = false;
      msg << "fit drift " << fit_a.l0_db - fit_b.l0_db << ", "
          << fit_a.gamma - fit_b.gamma << "; ";
    }

    const double k_a = tmb::fit_wall_k(samples, 54.0, 2.1);
    const double k_b = tmb::fit_wall_k(shuffled_samples, 54.0, 2.1);
    if (k_a != k_b) {
      ok = false;
      msg << "k drift " << k_a << " vs " << k_b << "; ";
    }

    const auto agg_a = tmb::aggregate_path_loss(records, registry);
    const auto agg_b = tmb::aggregate_path_loss(shuffled_records, registry);
    if (agg_a.size() != agg_b.size()) {
      ok = false;
    } else {
      for (std::size_t s = 0; s < agg_a.size(); ++s) {
        if (agg_a[s].location_id != agg_b[s].location_id ||
            agg_a[s].pl_db != agg_b[s].pl_db ||
            agg_a[s].records != agg_b[s].records) {
          ok = false;
          msg << "aggregate drift at " << agg_a[s].location_id << "; ";
          break;
        }
      }
    }

    const auto table_a = tmb::build_table(records);
    const auto table_b = tmb::build_table(shuffled_records);
    if (tmb::serialize_table(table_a) != tmb::serialize_table(table_b)) {
      ok = false;
      msg << "table drift; ";
    }

    if (!ok) record_failure(result, msg.str());
  }
  return result;
}

PropertyResult check_k_grid_optimality(std::size_t min_cases) {
  PropertyResult result;
  result.name = "k-grid-optimality";
  Rng rng(707);
  const auto& registry = tmb::LocationRegistry::reference();
  while (result.cases < min_cases) {
    tmb::PathLossParams truth;
    truth.l0_db = rng.uniform(48.0, 58.0);
    truth.gamma = rng.uniform(1.8, 2.6);
    truth.k_db_per_wall = rng.uniform(1.0, 9.0);
    const auto samples = synthetic_samples(
        registry, truth, 0.5, static_cast<std::uint32_t>(900 + result.cases));
    const auto scan = tmb::scan_wall_k(samples, truth.l0_db, truth.gamma);

    double best_k = 0.0;
    double best_rmse = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1000; ++i) {
      const double k = i / 100.0;
      tmb::PathLossParams p = truth;
      p.k_db_per_wall = k;
      const double r = tmb::rmse(tmb::Model::WallFactor, samples, p);
      ++result.cases;
      if (std::abs(r - scan.trace[static_cast<std::size_t>(i)].rmse_db) >
          1e-9) {
        record_failure(result, "trace rmse mismatch at k = " +
                                   std::to_string(k));
      }
      if (r < best_rmse) {
        best_rmse = r;
        best_k = k;
      }
    }
    if (best_k != scan.best_k_db) {
      std::ostringstream msg;
      msg << "independent argmin " << best_k << " vs scan " << scan.best_k_db;
      record_failure(result, msg.str());
    }
  }
  return result;
}

std::vector<PropertyResult> run_invariant_suite(
    std::size_t cases_per_property) {
  return {
      check_monotonicity(cases_per_property),
      check_breakpoint_continuity(cases_per_property),
      check_wall_additivity(cases_per_property),
      check_link_budget_round_trip(cases_per_property),
      check_probability_normalization(cases_per_property),
      check_permutation_invariance(cases_per_property),
      check_k_grid_optimality(cases_per_property),
  };
}

}  // namespace testsupport
