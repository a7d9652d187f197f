#include "cpol/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cpol/errors.hpp"
#include "cpol/rng.hpp"

namespace cpol {

namespace {

using nlohmann::json;

constexpr double deg = M_PI / 180.0;

void check_known_keys(const json& obj, const std::set<std::string>& known,
                      const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) {
      throw ConfigError(path + "/" + key, "unknown key");
    }
  }
}

template <typename T>
T get_or(const json& obj, const char* key, const std::string& path, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "/" + key, "wrong type");
  }
}

GeometryMode parse_mode(const std::string& s, const std::string& path) {
  if (s == "ideal") return GeometryMode::ideal;
  if (s == "realistic") return GeometryMode::realistic;
  throw ConfigError(path, "mode must be 'ideal' or 'realistic'");
}

PrescatterArm parse_arm(const std::string& s, const std::string& path) {
  if (s == "none") return PrescatterArm::none;
  if (s == "a") return PrescatterArm::a;
  if (s == "b") return PrescatterArm::b;
  if (s == "random") return PrescatterArm::random;
  throw ConfigError(path, "prescatter_arm must be none|a|b|random");
}

std::string mode_name(GeometryMode m) {
  return m == GeometryMode::ideal ? "ideal" : "realistic";
}

std::string arm_name(PrescatterArm a) {
  switch (a) {
    case PrescatterArm::none: return "none";
    case PrescatterArm::a: return "a";
    case PrescatterArm::b: return "b";
    case PrescatterArm::random: return "random";
  }
  return "none";
}

}  // namespace

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.geometry = tuned_geometry(GeometryMode::ideal);
  cfg.binning = events::default_binning_analytic(cfg.source.photon_energy_kev,
                                                 cfg.binning.noise_threshold_kev);
  return cfg;
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "top-level document must be an object");
  check_known_keys(doc, {"source", "geometry", "binning", "analysis", "output"}, "");

  RunConfig cfg;
  cfg.geometry = tuned_geometry(GeometryMode::ideal);

  if (doc.contains("source")) {
    const auto& src = doc.at("source");
    check_known_keys(src, {"energy_kev", "pairs", "seed"}, "/source");
    cfg.source.photon_energy_kev =
        get_or<double>(src, "energy_kev", "/source", cfg.source.photon_energy_kev);
    cfg.source.pair_count = get_or<std::uint64_t>(src, "pairs", "/source", cfg.source.pair_count);
    cfg.source.seed = get_or<std::uint64_t>(src, "seed", "/source", cfg.source.seed);
    if (cfg.source.photon_energy_kev <= 0.0) {
      throw ConfigError("/source/energy_kev", "must be positive");
    }
  }

  if (doc.contains("geometry")) {
    const auto& geo = doc.at("geometry");
    check_known_keys(geo,
                     {"mode", "prescatter_arm", "prescatter_interaction_prob",
                      "prescatter_theta_window_deg", "counter_count", "counter_azimuth_step_deg",
                      "main_scatter_theta_accept_deg", "gagg_resolution_coeff",
                      "nai_resolution_at_511"},
                     "/geometry");
    auto& g = cfg.geometry;
    g.mode = parse_mode(get_or<std::string>(geo, "mode", "/geometry", "ideal"), "/geometry/mode");
    if (g.mode == GeometryMode::realistic && !geo.contains("prescatter_arm")) {
      g.prescatter_arm = PrescatterArm::random;
    }
    if (geo.contains("prescatter_arm")) {
      g.prescatter_arm = parse_arm(geo.at("prescatter_arm").get<std::string>(),
                                   "/geometry/prescatter_arm");
    }
    g.prescatter_interaction_prob = get_or<double>(geo, "prescatter_interaction_prob", "/geometry",
                                                   g.prescatter_interaction_prob);
    if (geo.contains("prescatter_theta_window_deg") &&
        !geo.at("prescatter_theta_window_deg").is_null()) {
      const auto& w = geo.at("prescatter_theta_window_deg");
      if (!w.is_array() || w.size() != 2) {
        throw ConfigError("/geometry/prescatter_theta_window_deg", "expected [lo_deg, hi_deg]");
      }
      g.prescatter_theta_window = {w.at(0).get<double>() * deg, w.at(1).get<double>() * deg};
    }
    g.counter_count = get_or<int>(geo, "counter_count", "/geometry", g.counter_count);
    g.counter_azimuth_step =
        get_or<double>(geo, "counter_azimuth_step_deg", "/geometry",
                       g.counter_azimuth_step / deg) *
        deg;
    if (geo.contains("main_scatter_theta_accept_deg")) {
      const auto& win = geo.at("main_scatter_theta_accept_deg");
      check_known_keys(win, {"center", "halfwidth"}, "/geometry/main_scatter_theta_accept_deg");
      g.main_accept_center = get_or<double>(win, "center", "/geometry/main_scatter_theta_accept_deg",
                                            g.main_accept_center / deg) *
                             deg;
      g.main_accept_halfwidth =
          get_or<double>(win, "halfwidth", "/geometry/main_scatter_theta_accept_deg",
                         g.main_accept_halfwidth / deg) *
          deg;
    }
    g.gagg_resolution_coeff =
        get_or<double>(geo, "gagg_resolution_coeff", "/geometry", g.gagg_resolution_coeff);
    g.nai_resolution_at_511 =
        get_or<double>(geo, "nai_resolution_at_511", "/geometry", g.nai_resolution_at_511);
    try {
      g.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("/geometry", e.what());
    }
  }

  double noise_threshold = cfg.binning.noise_threshold_kev;
  std::optional<std::array<double, 6>> explicit_edges;
  double backscatter_lo = cfg.binning.backscatter_lo;
  double backscatter_hi = cfg.binning.backscatter_hi;
  if (doc.contains("binning")) {
    const auto& bin = doc.at("binning");
    check_known_keys(bin, {"noise_threshold_kev", "forward_edges_deg", "backscatter_window_deg"},
                     "/binning");
    noise_threshold = get_or<double>(bin, "noise_threshold_kev", "/binning", noise_threshold);
    if (noise_threshold <= 0.0) throw ConfigError("/binning/noise_threshold_kev", "must be > 0");
    if (bin.contains("forward_edges_deg") && !bin.at("forward_edges_deg").is_null()) {
      const auto& edges = bin.at("forward_edges_deg");
      if (!edges.is_array() || edges.size() != 6) {
        throw ConfigError("/binning/forward_edges_deg", "expected 6 ascending angles");
      }
      std::array<double, 6> parsed{};
      for (std::size_t i = 0; i < 6; ++i) parsed[i] = edges.at(i).get<double>() * deg;
      for (std::size_t i = 1; i < 6; ++i) {
        if (parsed[i] <= parsed[i - 1]) {
          throw ConfigError("/binning/forward_edges_deg", "edges must be strictly ascending");
        }
      }
      explicit_edges = parsed;
    }
    if (bin.contains("backscatter_window_deg")) {
      const auto& w = bin.at("backscatter_window_deg");
      if (!w.is_array() || w.size() != 2) {
        throw ConfigError("/binning/backscatter_window_deg", "expected [lo_deg, hi_deg]");
      }
      backscatter_lo = w.at(0).get<double>() * deg;
      backscatter_hi = w.at(1).get<double>() * deg;
    }
  }
  if (explicit_edges) {
    cfg.binning.noise_threshold_kev = noise_threshold;
    cfg.binning.forward_edges = *explicit_edges;
    cfg.binning_auto = false;
  } else {
    try {
      cfg.binning =
          events::default_binning_analytic(cfg.source.photon_energy_kev, noise_threshold);
    } catch (const AnalysisError& e) {
      throw ConfigError("/binning/noise_threshold_kev", e.what());
    }
    cfg.binning_auto = true;
  }
  cfg.binning.backscatter_lo = backscatter_lo;
  cfg.binning.backscatter_hi = backscatter_hi;

  if (doc.contains("analysis")) {
    const auto& ana = doc.at("analysis");
    check_known_keys(ana, {"method"}, "/analysis");
    const auto method = get_or<std::string>(ana, "method", "/analysis", "direct");
    if (method == "direct") {
      cfg.method = analysis::FitMethod::direct;
    } else if (method == "chsh") {
      cfg.method = analysis::FitMethod::chsh;
    } else {
      throw ConfigError("/analysis/method", "must be 'direct' or 'chsh'");
    }
  }

  if (doc.contains("output")) {
    const auto& out = doc.at("output");
    check_known_keys(out, {"path", "format"}, "/output");
    cfg.output_path = get_or<std::string>(out, "path", "/output", cfg.output_path);
    const auto format = get_or<std::string>(out, "format", "/output", "jsonl");
    if (format == "jsonl") {
      cfg.output_format = EventFileFormat::jsonl;
    } else if (format == "csv") {
      cfg.output_format = EventFileFormat::csv;
    } else {
      throw ConfigError("/output/format", "must be 'jsonl' or 'csv'");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
  json doc;
  doc["source"] = {{"energy_kev", cfg.source.photon_energy_kev},
                   {"pairs", cfg.source.pair_count},
                   {"seed", cfg.source.seed}};
  json geo = {{"mode", mode_name(cfg.geometry.mode)},
              {"prescatter_arm", arm_name(cfg.geometry.prescatter_arm)},
              {"prescatter_interaction_prob", cfg.geometry.prescatter_interaction_prob},
              {"counter_count", cfg.geometry.counter_count},
              {"counter_azimuth_step_deg", cfg.geometry.counter_azimuth_step / deg},
              {"main_scatter_theta_accept_deg",
               {{"center", cfg.geometry.main_accept_center / deg},
                {"halfwidth", cfg.geometry.main_accept_halfwidth / deg}}},
              {"gagg_resolution_coeff", cfg.geometry.gagg_resolution_coeff},
              {"nai_resolution_at_511", cfg.geometry.nai_resolution_at_511}};
  if (cfg.geometry.prescatter_theta_window) {
    geo["prescatter_theta_window_deg"] = {cfg.geometry.prescatter_theta_window->first / deg,
                                          cfg.geometry.prescatter_theta_window->second / deg};
  }
  doc["geometry"] = std::move(geo);
  json edges = json::array();
  for (double e : cfg.binning.forward_edges) edges.push_back(e / deg);
  doc["binning"] = {{"noise_threshold_kev", cfg.binning.noise_threshold_kev},
                    {"forward_edges_deg", std::move(edges)},
                    {"backscatter_window_deg",
                     {cfg.binning.backscatter_lo / deg, cfg.binning.backscatter_hi / deg}}};
  doc["analysis"] = {
      {"method", cfg.method == analysis::FitMethod::direct ? "direct" : "chsh"}};
  doc["output"] = {{"path", cfg.output_path},
                   {"format", cfg.output_format == EventFileFormat::jsonl ? "jsonl" : "csv"}};
  return doc.dump();
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::uint64_t config_digest(const RunConfig& cfg) {
  const std::string text = run_config_to_json(cfg);
  std::uint64_t hash = fnv1a64(text.data(), text.size());
  // Fold the seed in explicitly so digest changes are visible even if the
  // textual rendering ever drops it.
  hash ^= splitmix64(cfg.source.seed);
  return hash;
}

}  // namespace cpol
