#include "tsac/run_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tsac {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write file: " + file.string());
  out << text;
}

// Shortest round-trippable decimal form, '.' separator, no locale.
std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  // Prefer shorter forms when they round-trip.
  for (int prec = 1; prec <= 16; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof probe, "%.*g", prec, x);
    if (std::strtod(probe, nullptr) == x) return probe;
  }
  return buf;
}

json parse(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError(std::string(what) + ": malformed JSON");
  return j;
}

}  // namespace

Mdp parse_mdp_json(const std::string& text) {
  const json j = parse(text, "mdp file");
  try {
    std::vector<std::vector<int>> layers = j.at("layers").get<std::vector<std::vector<int>>>();
    const int num_actions = j.at("num_actions").get<int>();
    const double bound = j.at("reward_bound").get<double>();
    MdpBuilder builder(std::move(layers), num_actions, bound);
    for (const json& e : j.at("kernel")) {
      builder.add(e.at("s").get<int>(), e.at("a").get<int>(), e.at("s2").get<int>(),
                  e.at("r").get<double>(), e.at("p").get<double>());
    }
    const json& init = j.at("initial");
    if (init.contains("s0_dist")) {
      std::vector<std::pair<int, double>> dist;
      for (const auto& [key, value] : init.at("s0_dist").items())
        dist.emplace_back(std::stoi(key), value.get<double>());
      std::sort(dist.begin(), dist.end());
      builder.start_distribution(std::move(dist));
    } else {
      builder.fixed_start(init.at("s0").get<int>(), init.at("a0").get<int>());
    }
    return builder.build();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mdp file: ") + e.what());
  }
}

Mdp load_mdp(const std::filesystem::path& file) { return parse_mdp_json(read_file(file)); }

std::string mdp_to_json(const Mdp& mdp) {
  json j;
  j["num_actions"] = mdp.num_actions();
  j["reward_bound"] = mdp.reward_bound();
  json layers = json::array();
  for (int t = 0; t <= mdp.horizon(); ++t) layers.push_back(mdp.layer(t));
  j["layers"] = std::move(layers);
  json kernel = json::array();
  for (int s = 0; s < mdp.num_states(); ++s)
    for (int a = 0; a < mdp.num_actions(); ++a)
      for (const Mdp::Outcome& o : mdp.outcomes(s, a))
        kernel.push_back({{"s", s}, {"a", a}, {"s2", o.next_state}, {"r", o.reward},
                          {"p", o.prob}});
  j["kernel"] = std::move(kernel);
  if (const auto* fixed = std::get_if<FixedStart>(&mdp.initial())) {
    j["initial"] = {{"s0", fixed->state}, {"a0", fixed->action}};
  } else {
    json dist;
    for (const auto& [s, p] : std::get<StartDistribution>(mdp.initial()).state_probs)
      dist[std::to_string(s)] = p;
    j["initial"] = {{"s0_dist", std::move(dist)}};
  }
  return j.dump(2);
}

std::string run_csv(const RunRecord& rec) {
  std::string out = kRunCsvHeader;
  out += '\n';
  for (const RunRow& r : rec.rows) {
    out += std::to_string(r.n);
    for (double x : {r.loss_h, r.loss_g, r.h_norm, r.f_norm, r.dtheta, r.domega, r.z1, r.z2,
                     r.m1_sq, r.m2_sq}) {
      out += ',';
      out += fmt(x);
    }
    out += '\n';
  }
  return out;
}

void write_run_csv(const RunRecord& rec, const std::filesystem::path& file) {
  write_file(file, run_csv(rec));
}

std::vector<RunRow> read_run_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open run CSV: " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw MissingColumn("run CSV: missing header");
  if (line != kRunCsvHeader) throw MissingColumn("run CSV: unexpected header");
  std::vector<RunRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw MissingColumn("run CSV: wrong column count");
    RunRow r;
    r.n = std::stol(cells[0]);
    r.loss_h = std::strtod(cells[1].c_str(), nullptr);
    r.loss_g = std::strtod(cells[2].c_str(), nullptr);
    r.h_norm = std::strtod(cells[3].c_str(), nullptr);
    r.f_norm = std::strtod(cells[4].c_str(), nullptr);
    r.dtheta = std::strtod(cells[5].c_str(), nullptr);
    r.domega = std::strtod(cells[6].c_str(), nullptr);
    r.z1 = std::strtod(cells[7].c_str(), nullptr);
    r.z2 = std::strtod(cells[8].c_str(), nullptr);
    r.m1_sq = std::strtod(cells[9].c_str(), nullptr);
    r.m2_sq = std::strtod(cells[10].c_str(), nullptr);
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::string> emit_plot_data(const std::filesystem::path& run_csv_path,
                                        const std::filesystem::path& out_dir) {
  const std::vector<RunRow> rows = read_run_csv(run_csv_path);
  std::filesystem::create_directories(out_dir);
  const std::vector<std::pair<std::string, double RunRow::*>> metrics = {
      {"loss_h", &RunRow::loss_h},   {"loss_g", &RunRow::loss_g},
      {"h_norm", &RunRow::h_norm},   {"f_norm", &RunRow::f_norm},
      {"dtheta", &RunRow::dtheta},   {"domega", &RunRow::domega},
      {"z1", &RunRow::z1},           {"z2", &RunRow::z2},
      {"m1_sq", &RunRow::m1_sq},     {"m2_sq", &RunRow::m2_sq},
  };
  std::vector<std::string> written;
  for (const auto& [name, member] : metrics) {
    std::string text;
    for (const RunRow& r : rows) {
      text += std::to_string(r.n);
      text += ' ';
      text += fmt(r.*member);
      text += '\n';
    }
    const std::string fname = "metric_" + name + ".dat";
    write_file(out_dir / fname, text);
    written.push_back(fname);
  }
  return written;
}

std::string summary_to_json(const RunSummary& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["algorithm"] = s.algorithm;
  j["seed"] = s.seed;
  j["converged"] = s.converged;
  j["iterations"] = s.iterations;
  j["final_loss_h"] = s.final_loss_h;
  j["final_loss_g"] = s.final_loss_g;
  j["final_z1"] = s.final_z1;
  j["final_z2"] = s.final_z2;
  j["max_m1_sq"] = s.max_m1_sq;
  j["max_m2_sq"] = s.max_m2_sq;
  j["greedy_actions"] = s.greedy_actions;
  if (s.greedy_matches_optimal) j["greedy_matches_optimal"] = *s.greedy_matches_optimal;
  if (s.omega_distance_to_ode_limit)
    j["omega_distance_to_ode_limit"] = *s.omega_distance_to_ode_limit;
  j["schedule_valid"] = s.schedule_valid;
  return j.dump(2) + "\n";
}

void write_summary(const RunSummary& s, const std::filesystem::path& file) {
  write_file(file, summary_to_json(s));
}

std::string params_to_json(const std::vector<int>& layer_sizes, const Vec& values) {
  json j;
  j["layer_sizes"] = layer_sizes;
  j["values"] = values;
  return j.dump();
}

std::pair<std::vector<int>, Vec> params_from_json(const std::string& text) {
  const json j = parse(text, "parameter snapshot");
  return {j.at("layer_sizes").get<std::vector<int>>(), j.at("values").get<Vec>()};
}

ExperimentConfig parse_config_json(const std::string& text,
                                   const std::filesystem::path& base_dir) {
  const json j = parse(text, "config");
  ExperimentConfig cfg;
  try {
    const std::string mdp = j.at("mdp").get<std::string>();
    cfg.mdp_path = std::filesystem::path(mdp).is_absolute()
                       ? std::filesystem::path(mdp)
                       : base_dir / mdp;
    cfg.train.algo = algo_from_name(j.at("algorithm").get<std::string>());
    if (j.contains("schedule")) {
      const json& s = j.at("schedule");
      cfg.train.schedule.a0 = s.value("a0", cfg.train.schedule.a0);
      cfg.train.schedule.p_a = s.value("p_a", cfg.train.schedule.p_a);
      cfg.train.schedule.b0 = s.value("b0", cfg.train.schedule.b0);
      cfg.train.schedule.p_b = s.value("p_b", cfg.train.schedule.p_b);
    }
    if (j.contains("control")) {
      const json& c = j.at("control");
      cfg.train.control.beta = c.value("beta", cfg.train.control.beta);
      if (c.contains("z2_mode")) {
        const std::string mode = c.at("z2_mode").get<std::string>();
        if (mode == "geometric")
          cfg.train.control.z2_mode = Z2Mode::Geometric;
        else if (mode == "rational")
          cfg.train.control.z2_mode = Z2Mode::Rational;
        else
          throw ConfigError("config: z2_mode must be 'geometric' or 'rational'");
      }
      cfg.train.control.alpha = c.value("alpha", cfg.train.control.alpha);
      cfg.train.control.z2_init = c.value("z2_init", cfg.train.control.z2_init);
      cfg.train.control.kl_eps = c.value("kl_eps", cfg.train.control.kl_eps);
      cfg.train.control.weight_decay =
          c.value("weight_decay", cfg.train.control.weight_decay);
    }
    cfg.train.seed = j.value("seed", std::uint64_t{1});
    cfg.train.max_iters = j.value("max_iters", cfg.train.max_iters);
    cfg.train.stop_tol = j.value("stop_tol", cfg.train.stop_tol);
    cfg.train.stop_window = j.value("stop_window", cfg.train.stop_window);
    cfg.train.record_every = j.value("record_every", cfg.train.record_every);
    cfg.train.param_clamp = j.value("param_clamp", cfg.train.param_clamp);
    cfg.train.hidden_width = j.value("hidden_width", cfg.train.hidden_width);
    cfg.train.init_scale = j.value("init_scale", cfg.train.init_scale);
    if (j.contains("sampler")) {
      const std::string s = j.at("sampler").get<std::string>();
      if (s == "auto")
        cfg.train.sampler = SamplerKind::Auto;
      else if (s == "inverse-transform")
        cfg.train.sampler = SamplerKind::InverseTransform;
      else if (s == "sequential")
        cfg.train.sampler = SamplerKind::Sequential;
      else
        throw ConfigError("config: unknown sampler kind");
    }
    if (j.contains("sweep_seeds"))
      cfg.sweep_seeds = j.at("sweep_seeds").get<std::vector<std::uint64_t>>();
    cfg.allow_invalid_schedule = j.value("allow_invalid_schedule", false);
    if (j.contains("out")) cfg.out_dir = base_dir / j.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  return parse_config_json(read_file(file), file.parent_path());
}

}  // namespace tsac
