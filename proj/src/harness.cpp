// SPDX-License-Identifier: Apache-2.0
#include "mmwnoma/harness.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

namespace mmwnoma::harness {

namespace fs = std::filesystem;

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, v));
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", key, v));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& part : split(v, ',')) {
    if (part.empty()) continue;
    out.push_back(parse_double(key, part));
  }
  return out;
}

// "re:im" pairs separated by commas.
std::vector<Complex> parse_complex_list(const std::string& key, const std::string& v) {
  std::vector<Complex> out;
  for (const auto& part : split(v, ',')) {
    if (part.empty()) continue;
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      out.emplace_back(parse_double(key, part), 0.0);
    } else {
      out.emplace_back(parse_double(key, part.substr(0, colon)),
                       parse_double(key, part.substr(colon + 1)));
    }
  }
  return out;
}

std::string join(const std::vector<double>& v) { return fmt::format("{}", fmt::join(v, ", ")); }

GaussianGains& gaussian_gains(MultipathSpec& spec) {
  if (!std::holds_alternative<GaussianGains>(spec.gains)) spec.gains = GaussianGains{};
  return std::get<GaussianGains>(spec.gains);
}

UniformAngles& uniform_angles(MultipathSpec& spec) {
  if (!std::holds_alternative<UniformAngles>(spec.angles)) spec.angles = UniformAngles{};
  return std::get<UniformAngles>(spec.angles);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.mode", [](auto& c, auto&, auto& v) { c.mode = mode_from_string(trim(v)); }},
      {"run.seed", [](auto& c, auto& k, auto& v) { c.seed = parse_u64(k, v); }},
      {"run.id", [](auto& c, auto&, auto& v) { c.run_id = trim(v); }},
      {"run.out_dir", [](auto& c, auto&, auto& v) { c.out_dir = trim(v); }},
      {"run.checkpoint",
       [](auto& c, auto&, auto& v) {
         const auto t = trim(v);
         if (t.empty()) c.checkpoint.reset();
         else c.checkpoint = fs::path(t);
       }},
      {"run.allow_train", [](auto& c, auto& k, auto& v) { c.allow_train = parse_bool(k, v); }},

      {"link.snr_db", [](auto& c, auto& k, auto& v) { c.snr_db = parse_double(k, v); }},
      {"link.min_rate",
       [](auto& c, auto& k, auto& v) { c.min_rate1 = c.min_rate2 = parse_double(k, v); }},
      {"link.min_rate1", [](auto& c, auto& k, auto& v) { c.min_rate1 = parse_double(k, v); }},
      {"link.min_rate2", [](auto& c, auto& k, auto& v) { c.min_rate2 = parse_double(k, v); }},

      {"channel.n_antennas",
       [](auto& c, auto& k, auto& v) { c.env.steering.n_antennas = parse_u64(k, v); }},
      {"channel.n_paths", [](auto& c, auto& k, auto& v) { c.env.spec.n_paths = parse_u64(k, v); }},
      {"channel.gains",
       [](auto& c, auto& k, auto& v) {
         const auto t = trim(v);
         if (t == "gaussian") gaussian_gains(c.env.spec);
         else if (t == "fixed") {
           if (!std::holds_alternative<FixedGains>(c.env.spec.gains)) c.env.spec.gains = FixedGains{};
         } else throw ConfigError(fmt::format("{}: expected gaussian or fixed, got '{}'", k, v));
       }},
      {"channel.gain_dominant_variance",
       [](auto& c, auto& k, auto& v) {
         gaussian_gains(c.env.spec).dominant_variance = parse_double(k, v);
       }},
      {"channel.gain_secondary_variance",
       [](auto& c, auto& k, auto& v) {
         gaussian_gains(c.env.spec).secondary_variance = parse_double(k, v);
       }},
      {"channel.gain_values",
       [](auto& c, auto& k, auto& v) { c.env.spec.gains = FixedGains{parse_complex_list(k, v)}; }},
      {"channel.angles",
       [](auto& c, auto& k, auto& v) {
         const auto t = trim(v);
         if (t == "uniform") uniform_angles(c.env.spec);
         else if (t == "fixed") {
           if (!std::holds_alternative<FixedAngles>(c.env.spec.angles))
             c.env.spec.angles = FixedAngles{};
         } else throw ConfigError(fmt::format("{}: expected uniform or fixed, got '{}'", k, v));
       }},
      {"channel.angle_min_deg",
       [](auto& c, auto& k, auto& v) {
         uniform_angles(c.env.spec).lo = parse_double(k, v) / kDegPerRad;
       }},
      {"channel.angle_max_deg",
       [](auto& c, auto& k, auto& v) {
         uniform_angles(c.env.spec).hi = parse_double(k, v) / kDegPerRad;
       }},
      {"channel.angle_values_deg",
       [](auto& c, auto& k, auto& v) {
         FixedAngles a;
         for (double d : parse_list(k, v)) a.radians.push_back(d / kDegPerRad);
         c.env.spec.angles = std::move(a);
       }},
      {"channel.fixed", [](auto& c, auto& k, auto& v) { c.fixed_channel = parse_bool(k, v); }},
      {"channel.fixed_seed",
       [](auto& c, auto& k, auto& v) { c.fixed_channel_seed = parse_u64(k, v); }},

      {"env.steps_per_episode",
       [](auto& c, auto& k, auto& v) { c.env.steps_per_episode = parse_u64(k, v); }},
      {"env.power_logit_scale",
       [](auto& c, auto& k, auto& v) { c.env.power_logit_scale = parse_double(k, v); }},

      {"agent.gamma", [](auto& c, auto& k, auto& v) { c.agent.gamma = parse_double(k, v); }},
      {"agent.actor_lr", [](auto& c, auto& k, auto& v) { c.agent.actor_lr = parse_double(k, v); }},
      {"agent.critic_lr",
       [](auto& c, auto& k, auto& v) { c.agent.critic_lr = parse_double(k, v); }},
      {"agent.tau", [](auto& c, auto& k, auto& v) { c.agent.tau = parse_double(k, v); }},
      {"agent.batch_size",
       [](auto& c, auto& k, auto& v) { c.agent.batch_size = parse_u64(k, v); }},
      {"agent.buffer_capacity",
       [](auto& c, auto& k, auto& v) { c.agent.buffer_capacity = parse_u64(k, v); }},
      {"agent.episodes", [](auto& c, auto& k, auto& v) { c.agent.episodes = parse_u64(k, v); }},
      {"agent.score_window",
       [](auto& c, auto& k, auto& v) { c.agent.score_window = parse_u64(k, v); }},
      {"agent.updates_per_step",
       [](auto& c, auto& k, auto& v) { c.agent.updates_per_step = parse_u64(k, v); }},
      {"agent.reward_scale",
       [](auto& c, auto& k, auto& v) { c.agent.reward_scale = parse_double(k, v); }},
      {"agent.hidden_width",
       [](auto& c, auto& k, auto& v) { c.agent.arch.hidden_width = parse_u64(k, v); }},
      {"agent.actor_output",
       [](auto& c, auto& k, auto& v) {
         try {
           c.agent.arch.actor_output = nn::activation_from_string(trim(v));
         } catch (const std::exception&) {
           throw ConfigError(fmt::format("{}: unknown activation '{}'", k, v));
         }
       }},

      {"noise.kind",
       [](auto& c, auto& k, auto& v) {
         const auto t = trim(v);
         if (t == "gaussian") c.agent.noise.kind = ddpg::NoiseKind::gaussian;
         else if (t == "ou" || t == "ornstein_uhlenbeck")
           c.agent.noise.kind = ddpg::NoiseKind::ornstein_uhlenbeck;
         else throw ConfigError(fmt::format("{}: expected gaussian or ou, got '{}'", k, v));
       }},
      {"noise.sigma_start",
       [](auto& c, auto& k, auto& v) { c.agent.noise.sigma_start = parse_double(k, v); }},
      {"noise.sigma_end",
       [](auto& c, auto& k, auto& v) { c.agent.noise.sigma_end = parse_double(k, v); }},
      {"noise.ou_theta",
       [](auto& c, auto& k, auto& v) { c.agent.noise.ou_theta = parse_double(k, v); }},

      {"eval.draws", [](auto& c, auto& k, auto& v) { c.eval_draws = parse_u64(k, v); }},
      {"eval.oracle", [](auto& c, auto& k, auto& v) { c.eval_oracle = parse_bool(k, v); }},
      {"eval.oracle_grid", [](auto& c, auto& k, auto& v) { c.oracle_grid = parse_u64(k, v); }},

      {"sweep.snr_db", [](auto& c, auto& k, auto& v) { c.sweep_snr_db = parse_list(k, v); }},
      {"sweep.min_rate", [](auto& c, auto& k, auto& v) { c.sweep_min_rate = parse_list(k, v); }},
  };
  return table;
}

std::string format_label(double x) {
  std::string s = fmt::format("{}", x);
  std::replace(s.begin(), s.end(), '.', 'p');
  std::replace(s.begin(), s.end(), '-', 'm');
  return s;
}

std::ofstream open_csv(const fs::path& path, const char* header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << header << '\n';
  return out;
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", dir.string(),
                                         ec ? ec.message() : "not a directory"));
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(now)),
                     static_cast<int>(ms));
}

Rng stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return Rng(seq);
}

constexpr std::uint64_t kEvalDrawTag = 0xE7A1;
constexpr std::uint64_t kEvalRandomTag = 0x7A2D;
constexpr std::uint64_t kFixedChannelTag = 0xF1C5;

std::vector<nn::NamedNetwork> named(const ddpg::Networks& n) {
  return {{"actor", n.actor},
          {"critic", n.critic},
          {"actor_target", n.actor_target},
          {"critic_target", n.critic_target}};
}

void write_summary(const fs::path& path, const TrainOutcome& o) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << fmt::format("first_full_score = {}\nfinal_score = {}\nbest_score = {}\nrandom_mean_reward = {}\n",
                     o.first_full_score, o.final_score, o.best_score, o.random_mean_reward);
}

std::optional<double> read_final_score(const fs::path& checkpoint) {
  std::ifstream in(checkpoint.parent_path() / "summary.txt");
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)) != "final_score") continue;
    try {
      return parse_double("final_score", line.substr(eq + 1));
    } catch (const ConfigError&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

struct Accumulator {
  double sum_rate = 0.0;
  double reward = 0.0;
  std::size_t zeros = 0;
  std::size_t n = 0;

  void add(double s, double r) {
    sum_rate += s;
    reward += r;
    zeros += r == 0.0 ? 1 : 0;
    ++n;
  }
  MethodStats stats() const {
    MethodStats m;
    m.draws = n;
    if (n == 0) return m;
    m.mean_sum_rate = sum_rate / static_cast<double>(n);
    m.mean_reward = reward / static_cast<double>(n);
    m.zero_reward_fraction = static_cast<double>(zeros) / static_cast<double>(n);
    return m;
  }
};

bool oracle_enabled(const ExperimentConfig& cfg) {
  return cfg.eval_oracle && cfg.env.steering.n_antennas <= kOracleMaxAntennas;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

void write_method_rows(std::ofstream& out, const EvalReport& r, bool with_ddpg) {
  auto row = [&](const char* name, const MethodStats& m) {
    out << fmt::format("{},{},{},{},{}\n", name, m.mean_sum_rate, m.mean_reward,
                       m.zero_reward_fraction, m.draws);
  };
  if (with_ddpg) row("ddpg", r.ddpg);
  row("tdma", r.tdma);
  row("matched_filter", r.matched_filter);
  row("random", r.random);
  if (r.oracle) row("oracle", *r.oracle);
}

constexpr const char* kMethodHeader = "method,mean_sum_rate,mean_reward,zero_reward_fraction,draws";

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::train: return "train";
    case Mode::eval: return "eval";
    case Mode::sweep_snr: return "sweep-snr";
    case Mode::sweep_minrate: return "sweep-minrate";
    case Mode::baseline: return "baseline";
    case Mode::oracle_check: return "oracle-check";
  }
  return "train";
}

Mode mode_from_string(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), '_', '-');
  for (Mode m : {Mode::train, Mode::eval, Mode::sweep_snr, Mode::sweep_minrate, Mode::baseline,
                 Mode::oracle_check})
    if (to_string(m) == t) return m;
  throw ConfigError(fmt::format("unknown mode '{}'", s));
}

ExperimentConfig::ExperimentConfig() { env.budget = LinkBudget::from_snr_db(snr_db, min_rate1, min_rate2); }

void ExperimentConfig::finalize() {
  env.budget = LinkBudget::from_snr_db(snr_db, min_rate1, min_rate2);
  validate();
}

void ExperimentConfig::validate() const {
  try {
    if (!std::isfinite(snr_db)) throw std::invalid_argument("link.snr_db must be finite");
    env.validate();
    agent.validate();
    if (eval_draws == 0) throw std::invalid_argument("eval.draws must be >= 1");
    if (oracle_grid < 3) throw std::invalid_argument("eval.oracle_grid must be >= 3");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string ExperimentConfig::effective_run_id() const {
  return run_id.empty() ? fmt::format("{}-seed{}", to_string(mode), seed) : run_id;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(trim(key));
  if (it == table.end()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  it->second(cfg, it->first, value);
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("line {}: expected 'key = value'", lineno));
    try {
      apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", lineno, e.what()));
    }
  }
  return base;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const ExperimentConfig& c) {
  std::string s;
  auto put = [&](const char* k, const auto& v) { s += fmt::format("{} = {}\n", k, v); };
  put("run.mode", to_string(c.mode));
  put("run.seed", c.seed);
  put("run.id", c.run_id);
  put("run.out_dir", c.out_dir.string());
  put("run.checkpoint", c.checkpoint ? c.checkpoint->string() : std::string());
  put("run.allow_train", c.allow_train);
  put("link.snr_db", c.snr_db);
  put("link.min_rate1", c.min_rate1);
  put("link.min_rate2", c.min_rate2);
  put("channel.n_antennas", c.env.steering.n_antennas);
  put("channel.n_paths", c.env.spec.n_paths);
  if (const auto* g = std::get_if<GaussianGains>(&c.env.spec.gains)) {
    put("channel.gains", "gaussian");
    put("channel.gain_dominant_variance", g->dominant_variance);
    put("channel.gain_secondary_variance", g->secondary_variance);
  } else {
    std::vector<std::string> parts;
    for (const auto& z : std::get<FixedGains>(c.env.spec.gains).values)
      parts.push_back(fmt::format("{}:{}", z.real(), z.imag()));
    put("channel.gain_values", fmt::format("{}", fmt::join(parts, ", ")));
  }
  if (const auto* a = std::get_if<UniformAngles>(&c.env.spec.angles)) {
    put("channel.angles", "uniform");
    put("channel.angle_min_deg", a->lo * kDegPerRad);
    put("channel.angle_max_deg", a->hi * kDegPerRad);
  } else {
    std::vector<double> deg;
    for (double r : std::get<FixedAngles>(c.env.spec.angles).radians) deg.push_back(r * kDegPerRad);
    put("channel.angle_values_deg", join(deg));
  }
  put("channel.fixed", c.fixed_channel);
  put("channel.fixed_seed", c.fixed_channel_seed);
  put("env.steps_per_episode", c.env.steps_per_episode);
  put("env.power_logit_scale", c.env.power_logit_scale);
  put("agent.gamma", c.agent.gamma);
  put("agent.actor_lr", c.agent.actor_lr);
  put("agent.critic_lr", c.agent.critic_lr);
  put("agent.tau", c.agent.tau);
  put("agent.batch_size", c.agent.batch_size);
  put("agent.buffer_capacity", c.agent.buffer_capacity);
  put("agent.episodes", c.agent.episodes);
  put("agent.score_window", c.agent.score_window);
  put("agent.updates_per_step", c.agent.updates_per_step);
  put("agent.reward_scale", c.agent.reward_scale);
  put("agent.hidden_width", c.agent.arch.hidden_width);
  put("agent.actor_output", nn::to_string(c.agent.arch.actor_output));
  put("noise.kind", c.agent.noise.kind == ddpg::NoiseKind::gaussian ? "gaussian" : "ou");
  put("noise.sigma_start", c.agent.noise.sigma_start);
  put("noise.sigma_end", c.agent.noise.sigma_end);
  put("noise.ou_theta", c.agent.noise.ou_theta);
  put("eval.draws", c.eval_draws);
  put("eval.oracle", c.eval_oracle);
  put("eval.oracle_grid", c.oracle_grid);
  put("sweep.snr_db", join(c.sweep_snr_db));
  put("sweep.min_rate", join(c.sweep_min_rate));
  return s;
}

std::vector<double> parse_number_list(const std::string& s) { return parse_list("list", s); }

EpisodeConfig make_episode_config(const ExperimentConfig& cfg) {
  EpisodeConfig ec = cfg.env;
  ec.budget = LinkBudget::from_snr_db(cfg.snr_db, cfg.min_rate1, cfg.min_rate2);
  if (cfg.fixed_channel) {
    Rng rng = stream(cfg.fixed_channel_seed, kFixedChannelTag);
    ec.fixed_channels = sample_ordered_pair(ec.spec, ec.steering, rng);
  } else {
    ec.fixed_channels.reset();
  }
  return ec;
}

TrainOutcome run_train(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const EpisodeConfig ec = make_episode_config(cfg);
  const std::string id = cfg.effective_run_id();

  TrainOutcome o;
  o.metrics_csv = cfg.out_dir / "metrics.csv";
  o.episodes_csv = cfg.out_dir / "episodes.csv";
  o.final_checkpoint = cfg.checkpoint.value_or(cfg.out_dir / "final.ckpt");
  o.best_checkpoint = o.final_checkpoint.parent_path() / "best.ckpt";
  ensure_dir(o.final_checkpoint.parent_path());

  {
    std::ofstream cfg_out(cfg.out_dir / "config.txt", std::ios::trunc);
    if (!cfg_out) throw std::runtime_error(fmt::format("cannot write '{}'", (cfg.out_dir / "config.txt").string()));
    cfg_out << dump_config(cfg);
  }

  std::ofstream metrics = open_csv(o.metrics_csv, kMetricsHeader);
  std::ofstream episodes = open_csv(o.episodes_csv, kEpisodeHeader);

  std::size_t steps_seen = 0;
  bool have_best = false;
  o.best_score = 0.0;

  ddpg::TrainingObserver obs;
  obs.on_step = [&](const ddpg::StepRecord& r) {
    metrics << fmt::format("{},{},{},{},{},{},{},{},{}\n", id, r.episode, r.step, r.reward, r.score,
                           r.report.rate1, r.report.rate2, r.report.alpha, utc_timestamp());
    ++steps_seen;
    if (steps_seen == cfg.agent.score_window) o.first_full_score = r.score;
  };
  obs.on_episode = [&](const ddpg::EpisodeSummary& s, const ddpg::Networks& nets) {
    episodes << fmt::format("{},{},{},{},{}\n", id, s.episode, s.mean_reward, s.score,
                            s.feasible_fraction);
    if (!have_best || s.score > o.best_score) {
      have_best = true;
      o.best_score = s.score;
      nn::save_checkpoint(o.best_checkpoint, named(nets));
    }
  };

  ddpg::TrainResult res = ddpg::train(ec, cfg.agent, cfg.seed, obs);
  if (steps_seen < cfg.agent.score_window && !res.scores.empty())
    o.first_full_score = res.scores.back();
  o.final_score = res.scores.empty() ? 0.0 : res.scores.back();
  o.random_mean_reward = ddpg::random_policy_mean_reward(ec, cfg.seed, res.rewards.size());
  nn::save_checkpoint(o.final_checkpoint, named(res.nets));
  metrics.flush();
  episodes.flush();
  if (!metrics || !episodes) throw std::runtime_error("failed while writing training metrics");
  write_summary(o.final_checkpoint.parent_path() / "summary.txt", o);
  o.nets = std::move(res.nets);
  return o;
}

std::vector<ChannelRealization> evaluation_draws(const ExperimentConfig& cfg) {
  const EpisodeConfig ec = make_episode_config(cfg);
  std::vector<ChannelRealization> draws;
  draws.reserve(cfg.eval_draws);
  if (ec.fixed_channels) {
    draws.assign(cfg.eval_draws, *ec.fixed_channels);
    return draws;
  }
  Rng rng = stream(cfg.seed, kEvalDrawTag);
  for (std::size_t i = 0; i < cfg.eval_draws; ++i)
    draws.push_back(sample_ordered_pair(ec.spec, ec.steering, rng));
  return draws;
}

EvalReport evaluate(const ExperimentConfig& cfg, const std::vector<ChannelRealization>& draws,
                    const nn::MlpParams* actor) {
  const LinkBudget budget = LinkBudget::from_snr_db(cfg.snr_db, cfg.min_rate1, cfg.min_rate2);
  const double scale = cfg.env.power_logit_scale;
  const bool with_oracle = oracle_enabled(cfg);
  Rng random_rng = stream(cfg.seed, kEvalRandomTag);
  std::normal_distribution<double> normal(0.0, 1.0);

  Accumulator dd, td, mf, rnd, orc;
  EvalReport rep;
  for (const auto& ch : draws) {
    const auto n = ch.n_antennas();
    if (actor != nullptr) {
      const RVector raw = ddpg::act(*actor, flatten_state(ch, 0.0));
      const RateReport r = evaluate_action(ch, project_action(raw, ch, budget, scale), budget);
      dd.add(r.sum_rate, reward(r));
    }
    const double t = tdma_baseline(ch, budget);
    td.add(t, t);
    const RateReport m = evaluate_action(ch, matched_filter_action(ch, budget), budget);
    mf.add(m.sum_rate, reward(m));
    RVector raw(static_cast<Eigen::Index>(action_width(n)));
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = normal(random_rng);
    const RateReport rr = evaluate_action(ch, project_action(raw, ch, budget, scale), budget);
    rnd.add(rr.sum_rate, reward(rr));
    if (with_oracle) {
      const auto o = oracle_grid_search(ch, budget, cfg.oracle_grid);
      if (o) {
        orc.add(o->sum_rate, o->sum_rate);
      } else {
        orc.add(0.0, 0.0);
        ++rep.oracle_infeasible;
      }
    }
  }
  rep.ddpg = dd.stats();
  rep.tdma = td.stats();
  rep.matched_filter = mf.stats();
  rep.random = rnd.stats();
  if (with_oracle) rep.oracle = orc.stats();
  return rep;
}

nn::MlpParams load_actor(const fs::path& path) {
  for (auto& net : nn::load_checkpoint(path))
    if (net.name == "actor") return std::move(net.params);
  throw std::runtime_error(fmt::format("checkpoint '{}' has no actor network", path.string()));
}

PolicySource obtain_policy(const ExperimentConfig& cfg, const fs::path& default_path) {
  PolicySource src;
  src.checkpoint = cfg.checkpoint.value_or(default_path);
  if (fs::exists(src.checkpoint)) {
    src.actor = load_actor(src.checkpoint);
    src.train_score = read_final_score(src.checkpoint);
  } else {
    if (!cfg.allow_train)
      throw std::runtime_error(fmt::format(
          "checkpoint '{}' not found and training is disabled", src.checkpoint.string()));
    ExperimentConfig tc = cfg;
    tc.mode = Mode::train;
    tc.out_dir = src.checkpoint.parent_path().empty() ? fs::path(".") : src.checkpoint.parent_path();
    tc.checkpoint = src.checkpoint;
    TrainOutcome o = run_train(tc);
    src.actor = std::move(o.nets.actor);
    src.train_score = o.final_score;
  }
  const std::size_t n = cfg.env.steering.n_antennas;
  if (src.actor.in_width() != state_width(n) || src.actor.out_width() != action_width(n))
    throw std::runtime_error(fmt::format("checkpoint '{}' does not match N = {}",
                                         src.checkpoint.string(), n));
  return src;
}

fs::path run_eval(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const PolicySource src = obtain_policy(cfg, cfg.out_dir / "final.ckpt");
  const auto draws = evaluation_draws(cfg);
  const EvalReport rep = evaluate(cfg, draws, &src.actor);
  const fs::path path = cfg.out_dir / "eval.csv";
  std::ofstream out = open_csv(path, kMethodHeader);
  write_method_rows(out, rep, true);
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
  return path;
}

fs::path run_baseline(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const auto draws = evaluation_draws(cfg);
  const EvalReport rep = evaluate(cfg, draws, nullptr);
  const fs::path path = cfg.out_dir / "baseline.csv";
  std::ofstream out = open_csv(path, kMethodHeader);
  write_method_rows(out, rep, false);
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
  return path;
}

namespace {

fs::path run_sweep(const ExperimentConfig& cfg, bool over_snr) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const std::vector<double>& points = over_snr ? cfg.sweep_snr_db : cfg.sweep_min_rate;
  if (points.empty()) throw ConfigError("sweep list is empty");
  const auto draws = evaluation_draws(cfg);
  const fs::path path = cfg.out_dir / (over_snr ? "sweep_snr.csv" : "sweep_minrate.csv");
  std::ofstream out = open_csv(path, kSweepHeader);

  for (double x : points) {
    ExperimentConfig pc = cfg;
    if (over_snr) {
      pc.snr_db = x;
    } else {
      pc.min_rate1 = pc.min_rate2 = x;
    }
    pc.run_id = fmt::format("{}-{}{}", cfg.effective_run_id(), over_snr ? "snr" : "r", format_label(x));
    pc.finalize();
    const fs::path point_dir =
        cfg.out_dir / fmt::format("{}_{}", over_snr ? "snr" : "minrate", format_label(x));
    const PolicySource src = obtain_policy(pc, point_dir / "final.ckpt");
    const EvalReport rep = evaluate(pc, draws, &src.actor);
    const std::optional<double> oracle =
        rep.oracle ? std::optional<double>(rep.oracle->mean_sum_rate) : std::nullopt;
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", pc.snr_db, pc.min_rate1, rep.ddpg.mean_sum_rate,
                       rep.ddpg.mean_reward, rep.ddpg.zero_reward_fraction, rep.tdma.mean_sum_rate,
                       rep.matched_filter.mean_reward, fmt_opt(oracle), fmt_opt(src.train_score));
    out.flush();
  }
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
  return path;
}

}  // namespace

fs::path run_sweep_snr(const ExperimentConfig& cfg) { return run_sweep(cfg, true); }
fs::path run_sweep_minrate(const ExperimentConfig& cfg) { return run_sweep(cfg, false); }

OracleCheck oracle_ratios(const ExperimentConfig& cfg, const std::vector<ChannelRealization>& draws,
                          const nn::MlpParams* actor) {
  const std::size_t n = cfg.env.steering.n_antennas;
  if (n > kOracleMaxAntennas)
    throw std::invalid_argument(fmt::format(
        "oracle check needs N <= {} (grid search is exponential in N); got N = {}",
        kOracleMaxAntennas, n));
  const LinkBudget budget = LinkBudget::from_snr_db(cfg.snr_db, cfg.min_rate1, cfg.min_rate2);
  const double scale = cfg.env.power_logit_scale;
  Rng random_rng = stream(cfg.seed, kEvalRandomTag);
  std::normal_distribution<double> normal(0.0, 1.0);

  OracleCheck out;
  for (const auto& ch : draws) {
    RVector raw(static_cast<Eigen::Index>(action_width(n)));
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = normal(random_rng);
    const auto o = oracle_grid_search(ch, budget, cfg.oracle_grid);
    if (!o || !(o->sum_rate > 0.0)) continue;
    const double ref = o->sum_rate;
    if (actor != nullptr) {
      const RVector a = ddpg::act(*actor, flatten_state(ch, 0.0));
      out.ddpg_ratio += reward(evaluate_action(ch, project_action(a, ch, budget, scale), budget)) / ref;
    }
    out.tdma_ratio += tdma_baseline(ch, budget) / ref;
    out.random_ratio +=
        reward(evaluate_action(ch, project_action(raw, ch, budget, scale), budget)) / ref;
    out.matched_filter_ratio +=
        reward(evaluate_action(ch, matched_filter_action(ch, budget), budget)) / ref;
    out.oracle_ratio += reward(evaluate_action(ch, o->action, budget)) / ref;
    ++out.draws_used;
  }
  if (out.draws_used > 0) {
    const double k = static_cast<double>(out.draws_used);
    out.ddpg_ratio /= k;
    out.tdma_ratio /= k;
    out.random_ratio /= k;
    out.matched_filter_ratio /= k;
    out.oracle_ratio /= k;
  }
  return out;
}

fs::path run_oracle_check(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.env.steering.n_antennas > kOracleMaxAntennas)
    throw std::invalid_argument(fmt::format(
        "oracle-check needs N <= {} (grid search is exponential in N); got N = {}",
        kOracleMaxAntennas, cfg.env.steering.n_antennas));
  ensure_dir(cfg.out_dir);
  const PolicySource src = obtain_policy(cfg, cfg.out_dir / "final.ckpt");
  const auto draws = evaluation_draws(cfg);
  const OracleCheck r = oracle_ratios(cfg, draws, &src.actor);
  const fs::path path = cfg.out_dir / "oracle_check.csv";
  std::ofstream out = open_csv(path, "method,ratio_to_oracle,draws");
  out << fmt::format("ddpg,{},{}\n", r.ddpg_ratio, r.draws_used);
  out << fmt::format("tdma,{},{}\n", r.tdma_ratio, r.draws_used);
  out << fmt::format("matched_filter,{},{}\n", r.matched_filter_ratio, r.draws_used);
  out << fmt::format("random,{},{}\n", r.random_ratio, r.draws_used);
  out << fmt::format("oracle,{},{}\n", r.oracle_ratio, r.draws_used);
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
  return path;
}

fs::path run(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case Mode::train: return run_train(cfg).metrics_csv;
    case Mode::eval: return run_eval(cfg);
    case Mode::sweep_snr: return run_sweep_snr(cfg);
    case Mode::sweep_minrate: return run_sweep_minrate(cfg);
    case Mode::baseline: return run_baseline(cfg);
    case Mode::oracle_check: return run_oracle_check(cfg);
  }
  throw ConfigError("unknown mode");
}

}  // namespace mmwnoma::harness
