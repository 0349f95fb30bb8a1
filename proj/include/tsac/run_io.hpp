#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsac/mdp.hpp"
#include "tsac/trainer.hpp"

namespace tsac {

// --- MDP definition files ----------------------------------------------------
//
// JSON with layers, kernel entries (s, a, s2, r, p; s2 = -1 ends the
// episode), an initial block ({"s0":..,"a0":..} or {"s0_dist":{"0":1.0}}),
// and the reward bound.

Mdp load_mdp(const std::filesystem::path& file);
Mdp parse_mdp_json(const std::string& text);
std::string mdp_to_json(const Mdp& mdp);

// --- run artifacts ------------------------------------------------------------

inline constexpr const char* kRunCsvHeader =
    "n,loss_h,loss_g,h_norm,f_norm,dtheta,domega,z1,z2,m1_sq,m2_sq";

std::string run_csv(const RunRecord& rec);
void write_run_csv(const RunRecord& rec, const std::filesystem::path& file);
std::vector<RunRow> read_run_csv(const std::filesystem::path& file);

// Per-metric two-column (n, value) text files, one per CSV column.
// Returns the written file names; empty input produces empty files.
std::vector<std::string> emit_plot_data(const std::filesystem::path& run_csv,
                                        const std::filesystem::path& out_dir);

struct RunSummary {
  int schema_version = 1;
  std::string algorithm;
  std::uint64_t seed = 0;
  bool converged = false;
  long iterations = 0;
  double final_loss_h = 0.0;
  double final_loss_g = 0.0;
  double final_z1 = 0.0;
  double final_z2 = 0.0;
  double max_m1_sq = 0.0;
  double max_m2_sq = 0.0;
  std::vector<int> greedy_actions;
  std::optional<bool> greedy_matches_optimal;
  std::optional<double> omega_distance_to_ode_limit;
  bool schedule_valid = true;
};

std::string summary_to_json(const RunSummary& s);
void write_summary(const RunSummary& s, const std::filesystem::path& file);

// Flat parameter snapshot with a shape header.
std::string params_to_json(const std::vector<int>& layer_sizes, const Vec& values);
std::pair<std::vector<int>, Vec> params_from_json(const std::string& text);

// --- experiment configuration --------------------------------------------------

struct ExperimentConfig {
  std::filesystem::path mdp_path;
  TrainConfig train;
  std::vector<std::uint64_t> sweep_seeds;
  bool allow_invalid_schedule = false;
  std::filesystem::path out_dir = ".";
};

ExperimentConfig load_config(const std::filesystem::path& file);
ExperimentConfig parse_config_json(const std::string& text,
                                   const std::filesystem::path& base_dir);

}  // namespace tsac
