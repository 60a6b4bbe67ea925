#include "moco/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "moco/error.hpp"

namespace moco {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) return s.substr(1, s.size() - 2);
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw FormatError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.front() == '-') bad_value(key, v, "a non-negative integer");
  errno = 0;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (errno != 0 || *end != '\0') bad_value(key, v, "a non-negative integer");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  const std::uint64_t x = to_u64(key, v);
  if (x > 1'000'000'000ULL) bad_value(key, v, "an integer below 1e9");
  return static_cast<int>(x);
}

double to_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || errno != 0 || *end != '\0' || !std::isfinite(x)) bad_value(key, v, "a finite number");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> to_list(const std::string& v) {
  std::string body = v;
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
  std::vector<std::string> items;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(trim(item));
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

template <typename T, typename Fn>
std::vector<T> map_list(const std::string& key, const std::string& v, Fn fn) {
  std::vector<T> out;
  for (const std::string& item : to_list(v)) out.push_back(fn(key, item));
  if (out.empty()) bad_value(key, v, "a non-empty list");
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

using Setter = std::function<void(Config&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](Config& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"threads", [](Config& c, auto& k, auto& v) { c.threads = static_cast<unsigned>(to_int(k, v)); }},
      {"out", [](Config& c, auto&, auto& v) { c.out = v; }},
      {"model_path", [](Config& c, auto&, auto& v) { c.model_path = v; }},

      {"data.dim", [](Config& c, auto& k, auto& v) { c.data.dim = to_size(k, v); }},
      {"data.classes", [](Config& c, auto& k, auto& v) { c.data.class_count = to_size(k, v); }},
      {"data.per_class", [](Config& c, auto& k, auto& v) { c.data.per_class = to_size(k, v); }},
      {"data.spread", [](Config& c, auto& k, auto& v) { c.data.spread = to_double(k, v); }},
      {"data.informative", [](Config& c, auto& k, auto& v) { c.data.informative = to_size(k, v); }},
      {"data.center_width", [](Config& c, auto& k, auto& v) { c.data.center_width = to_double(k, v); }},

      {"model.hidden", [](Config& c, auto& k, auto& v) { c.hidden = map_list<std::size_t>(k, v, to_size); }},

      {"train.epochs", [](Config& c, auto& k, auto& v) { c.train.epochs = to_size(k, v); }},
      {"train.lr", [](Config& c, auto& k, auto& v) { c.train.lr = to_double(k, v); }},
      {"train.batch", [](Config& c, auto& k, auto& v) { c.train.batch_size = to_size(k, v); }},

      {"budget.linf", [](Config& c, auto& k, auto& v) { c.spec.epsilons.linf = to_double(k, v); }},
      {"budget.l2", [](Config& c, auto& k, auto& v) { c.spec.epsilons.l2 = to_double(k, v); }},
      {"budget.l1", [](Config& c, auto& k, auto& v) { c.spec.epsilons.l1 = to_double(k, v); }},

      {"pgd.restarts", [](Config& c, auto& k, auto& v) { c.spec.pgd_restarts = to_int(k, v); }},

      {"curve.iterations", [](Config& c, auto& k, auto& v) { c.spec.optimize.iterations = to_int(k, v); }},
      {"curve.t_samples", [](Config& c, auto& k, auto& v) { c.spec.optimize.t_samples_per_iter = to_int(k, v); }},
      {"curve.lr", [](Config& c, auto& k, auto& v) { c.spec.optimize.adam.lr = to_double(k, v); }},
      {"curve.w_main", [](Config& c, auto& k, auto& v) { c.spec.w_main = to_double(k, v); }},
      {"curve.w_aux", [](Config& c, auto& k, auto& v) { c.spec.w_aux = to_double(k, v); }},
      {"curve.points", [](Config& c, auto& k, auto& v) { c.spec.points = to_size(k, v); }},

      {"experiment.settings",
       [](Config& c, auto& k, auto& v) {
         c.spec.settings = map_list<Setting>(k, v, [](auto& key, auto& item) {
           try {
             return parse_setting(item);
           } catch (const std::exception&) {
             bad_value(key, item, "A, B or C");
           }
         });
       }},
      {"experiment.norms",
       [](Config& c, auto& k, auto& v) {
         c.spec.norms = map_list<Norm>(k, v, [](auto& key, auto& item) {
           try {
             return parse_norm(item);
           } catch (const std::exception&) {
             bad_value(key, item, "linf, l2 or l1");
           }
         });
         c.norms_given = true;
       }},
      {"experiment.cases", [](Config& c, auto& k, auto& v) { c.spec.cases = to_size(k, v); }},
      {"experiment.cases_per_repetition",
       [](Config& c, auto& k, auto& v) { c.spec.cases_per_repetition = to_size(k, v); }},
      {"experiment.repetitions", [](Config& c, auto& k, auto& v) { c.spec.repetitions = to_size(k, v); }},
      {"experiment.eval_images", [](Config& c, auto& k, auto& v) { c.spec.eval_images = to_size(k, v); }},
      {"experiment.connect_aux", [](Config& c, auto& k, auto& v) { c.spec.connect_aux = to_size(k, v); }},
      {"experiment.transfer_aux", [](Config& c, auto& k, auto& v) { c.spec.transfer_aux = to_size(k, v); }},
      {"experiment.aux_counts",
       [](Config& c, auto& k, auto& v) { c.spec.aux_counts = map_list<std::size_t>(k, v, to_size); }},
      {"experiment.epochs", [](Config& c, auto& k, auto& v) { c.spec.epochs_list = map_list<int>(k, v, to_int); }},
      {"experiment.sample_counts",
       [](Config& c, auto& k, auto& v) { c.spec.sample_counts = map_list<std::size_t>(k, v, to_size); }},
      {"experiment.linear", [](Config& c, auto& k, auto& v) { c.spec.linear = to_bool(k, v); }},

      {"ea.samples", [](Config& c, auto& k, auto& v) { c.spec.ea_samples = to_size(k, v); }},
      {"ea.population", [](Config& c, auto& k, auto& v) { c.spec.population = to_int(k, v); }},
      {"ea.elites", [](Config& c, auto& k, auto& v) { c.spec.elites = to_int(k, v); }},
      {"ea.tournament", [](Config& c, auto& k, auto& v) { c.spec.tournament_size = to_int(k, v); }},
      {"ea.mutation_prob", [](Config& c, auto& k, auto& v) { c.spec.mutation_prob = to_double(k, v); }},
      {"ea.mutation_std", [](Config& c, auto& k, auto& v) { c.spec.mutation_rel_std = to_double(k, v); }},
      {"ea.max_generations", [](Config& c, auto& k, auto& v) { c.spec.max_generations = to_int(k, v); }},
      {"ea.control_step",
       [](Config& c, auto& k, auto& v) {
         if (v == "steepest") c.spec.control_step = ControlStep::Steepest;
         else if (v == "gradient") c.spec.control_step = ControlStep::Gradient;
         else bad_value(k, v, "steepest or gradient");
       }},
      {"ea.quantization_levels", [](Config& c, auto& k, auto& v) { c.spec.quantization_levels = to_int(k, v); }},
      {"ea.timing", [](Config& c, auto& k, auto& v) { c.spec.timing = to_bool(k, v); }},
  };
  return table;
}

}  // namespace

void apply_setting(Config& config, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw FormatError("unknown config key '" + key + "'");
  it->second(config, key, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

Config parse_config(const std::string& text) {
  Config config;
  std::stringstream in(text);
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    const std::string full = section.empty() ? key : section + "." + key;
    try {
      apply_setting(config, full, value);
    } catch (const FormatError& e) {
      throw FormatError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return config;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace moco
