#include "qosgp/config.hpp"

#include <charconv>
#include <limits>
#include <list>
#include <set>
#include <sstream>

#include "qosgp/csv.hpp"
#include "qosgp/errors.hpp"

namespace qosgp {

namespace {

std::string anchor(const std::string& source, int line, const std::string& message) {
  if (line > 0) return source + ":" + std::to_string(line) + ": " + message;
  return source + ": " + message;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct Section {
  std::string name;      // "simulator", "kernel", ...
  std::string argument;  // kernel name for [kernel NAME]
  int line = 0;
  std::map<std::string, Entry> entries;
};

class Reader {
 public:
  Reader(const std::string& source, Section* section) : source_(source), section_(section) {}

  bool has(const std::string& key) const {
    return section_ && section_->entries.count(key) > 0;
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return parse<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) {
      const std::string where = section_ ? "[" + label() + "]" : "section [" + wanted_ + "]";
      throw ConfigError(source_, section_ ? section_->line : 0,
                        "missing required field '" + key + "' in " + where);
    }
    return parse<T>(key);
  }

  void expect_section(const std::string& name) { wanted_ = name; }

 private:
  std::string label() const {
    return section_->argument.empty() ? section_->name : section_->name + " " + section_->argument;
  }

  template <typename T>
  T parse(const std::string& key);

  [[noreturn]] void type_error(const Entry& e, const std::string& key, const char* type) const {
    throw ConfigError(source_, e.line,
                      "field '" + key + "' expects " + type + ", got '" + e.value + "'");
  }

  const std::string& source_;
  Section* section_;
  std::string wanted_;
};

template <>
long long Reader::parse<long long>(const std::string& key) {
  auto& e = section_->entries.at(key);
  e.used = true;
  long long v = 0;
  const auto* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (e.value.empty() || ec != std::errc() || ptr != end) type_error(e, key, "an integer");
  return v;
}

template <>
int Reader::parse<int>(const std::string& key) {
  const long long v = parse<long long>(key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    type_error(section_->entries.at(key), key, "an integer in int range");
  }
  return static_cast<int>(v);
}

template <>
std::uint64_t Reader::parse<std::uint64_t>(const std::string& key) {
  auto& e = section_->entries.at(key);
  e.used = true;
  std::uint64_t v = 0;
  const auto* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (e.value.empty() || ec != std::errc() || ptr != end) {
    type_error(e, key, "an unsigned integer");
  }
  return v;
}

template <>
double Reader::parse<double>(const std::string& key) {
  auto& e = section_->entries.at(key);
  e.used = true;
  double v = 0.0;
  const auto* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (e.value.empty() || ec != std::errc() || ptr != end) type_error(e, key, "a real number");
  return v;
}

template <>
bool Reader::parse<bool>(const std::string& key) {
  auto& e = section_->entries.at(key);
  e.used = true;
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  type_error(e, key, "true or false");
}

template <>
std::string Reader::parse<std::string>(const std::string& key) {
  auto& e = section_->entries.at(key);
  e.used = true;
  if (e.value.empty()) type_error(e, key, "a non-empty word");
  return e.value;
}

template <>
std::vector<double> Reader::parse<std::vector<double>>(const std::string& key) {
  auto& e = section_->entries.at(key);
  e.used = true;
  std::vector<double> out;
  std::istringstream is(e.value);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto t = trim(item);
    double v = 0.0;
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc() || ptr != end) {
      type_error(e, key, "a comma-separated list of real numbers");
    }
    out.push_back(v);
  }
  if (out.empty()) type_error(e, key, "a comma-separated list of real numbers");
  return out;
}

struct Document {
  std::list<Section> sections;  // stable addresses while appending

  Section* find(const std::string& name) {
    for (auto& s : sections) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }
};

const std::set<std::string> kSectionNames = {"simulator", "gp", "kernel", "cart", "experiment"};

Document tokenize(const std::string& text, const std::string& source) {
  Document doc;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  Section* current = nullptr;
  std::set<std::string> seen;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, line_no, "unterminated section header");
      const std::string inner = trim(std::string_view(line).substr(1, line.size() - 2));
      Section s;
      s.line = line_no;
      const auto space = inner.find_first_of(" \t");
      s.name = inner.substr(0, space);
      if (space != std::string::npos) s.argument = trim(std::string_view(inner).substr(space));
      if (!kSectionNames.count(s.name)) {
        throw ConfigError(source, line_no, "unknown section [" + inner + "]");
      }
      if (s.name == "kernel" && s.argument.empty()) {
        throw ConfigError(source, line_no, "kernel section needs a name, e.g. [kernel linear]");
      }
      if (s.name != "kernel" && !s.argument.empty()) {
        throw ConfigError(source, line_no, "section [" + s.name + "] takes no name");
      }
      const std::string key = s.name + " " + s.argument;
      if (!seen.insert(key).second) {
        throw ConfigError(source, line_no, "duplicate section [" + inner + "]");
      }
      doc.sections.push_back(std::move(s));
      current = &doc.sections.back();
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source, line_no, "expected 'key = value' or a [section] header");
    }
    if (!current) throw ConfigError(source, line_no, "key outside of any section");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line_no, "empty key");
    if (current->entries.count(key)) {
      throw ConfigError(source, line_no, "duplicate field '" + key + "'");
    }
    current->entries[key] = Entry{value, line_no, false};
  }
  return doc;
}

void reject_unused(const Document& doc, const std::string& source) {
  for (const auto& s : doc.sections) {
    for (const auto& [key, e] : s.entries) {
      if (!e.used) {
        throw ConfigError(source, e.line, "unknown field '" + key + "' in section [" + s.name + "]");
      }
    }
  }
}

int entry_line(Section* s, const std::string& key) {
  if (!s) return 0;
  const auto it = s->entries.find(key);
  return it == s->entries.end() ? s->line : it->second.line;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : InvalidInput(anchor(source, line, message)), line_(line) {}

void ExperimentConfig::validate() const {
  simulator.validate();
  cart.validate();
  require(replications >= 1, "experiment replications must be >= 1");
  require(alpha > 0.0 && alpha < 1.0, "experiment alpha must lie in (0, 1)");
  require(!kernels.empty(), "experiment needs at least one kernel");
  require(gp.noise_variance > 0.0, "gp noise_variance must be > 0");
  require(gp.optimizer.max_iterations >= 0, "gp max_iterations must be >= 0");
  require(gp.optimizer.restarts >= 0, "gp restarts must be >= 0");
  for (const auto& k : kernels) {
    require(k.kernel.input_dim() == simulator.num_classes,
            "kernel '" + k.name + "' input_dim must equal num_classes");
  }
}

const NamedKernel* ExperimentConfig::find_kernel(const std::string& name) const {
  for (const auto& k : kernels) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source) {
  Document doc = tokenize(text, source);
  ExperimentConfig cfg;

  Section* sim_section = doc.find("simulator");
  {
    Reader r(source, sim_section);
    r.expect_section("simulator");
    auto& s = cfg.simulator;
    s.num_classes = r.require<int>("num_classes");
    if (s.num_classes < 1) {
      throw ConfigError(source, entry_line(sim_section, "num_classes"), "num_classes must be >= 1");
    }
    s.arrival_prob = r.require<double>("arrival_prob");
    const auto mu = r.require<std::vector<double>>("lognormal_mu");
    const auto sigma = r.require<std::vector<double>>("lognormal_sigma");
    s.execution_rates = r.require<std::vector<double>>("execution_rates");
    const auto D = static_cast<std::size_t>(s.num_classes);
    for (const auto* key : {"lognormal_mu", "lognormal_sigma", "execution_rates"}) {
      const std::size_t n = std::string(key) == "lognormal_mu"      ? mu.size()
                            : std::string(key) == "lognormal_sigma" ? sigma.size()
                                                                     : s.execution_rates.size();
      if (n != D) {
        throw ConfigError(source, entry_line(sim_section, key),
                          std::string("field '") + key + "' needs " + std::to_string(D) +
                              " values (one per class), got " + std::to_string(n));
      }
    }
    for (std::size_t d = 0; d < D; ++d) s.size_params.push_back({mu[d], sigma[d]});
    s.window = r.require<int>("window");
    s.num_train = r.require<int>("num_train");
    s.num_test = r.require<int>("num_test");
    s.horizon = r.get<long long>("horizon", 0);

    const auto features = r.get<std::string>("features", "window_mean");
    if (features == "window_mean") {
      s.feature_mode = FeatureMode::WindowMean;
    } else if (features == "instantaneous") {
      s.feature_mode = FeatureMode::Instantaneous;
    } else {
      throw ConfigError(source, entry_line(sim_section, "features"),
                        "field 'features' expects window_mean or instantaneous");
    }
    const auto measure = r.get<std::string>("queue_measure", "remaining_size");
    if (measure == "remaining_size") {
      s.queue_measure = QueueMeasure::RemainingSize;
    } else if (measure == "demand_count") {
      s.queue_measure = QueueMeasure::DemandCount;
    } else {
      throw ConfigError(source, entry_line(sim_section, "queue_measure"),
                        "field 'queue_measure' expects remaining_size or demand_count");
    }
    try {
      s.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(source, sim_section ? sim_section->line : 0, e.what());
    }
  }

  {
    Reader r(source, doc.find("gp"));
    auto& g = cfg.gp;
    g.noise_variance = r.get<double>("noise_variance", g.noise_variance);
    auto& o = g.optimizer;
    o.learn_noise = r.get<bool>("learn_noise", o.learn_noise);
    o.max_iterations = r.get<int>("max_iterations", o.max_iterations);
    o.tolerance = r.get<double>("tolerance", o.tolerance);
    o.gradient_tolerance = r.get<double>("gradient_tolerance", o.gradient_tolerance);
    o.restarts = r.get<int>("restarts", o.restarts);
    o.perturbation = r.get<double>("perturbation", o.perturbation);
  }

  for (auto& s : doc.sections) {
    if (s.name != "kernel") continue;
    Reader r(source, &s);
    KernelVariant variant;
    try {
      variant = parse_kernel_variant(r.require<std::string>("variant"));
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidInput& e) {
      throw ConfigError(source, entry_line(&s, "variant"), e.what());
    }
    const int D = cfg.simulator.num_classes;
    try {
      if (r.has("log_params")) {
        const auto p = r.require<std::vector<double>>("log_params");
        cfg.kernels.push_back(
            {s.argument, KernelConfig(variant, D,
                                      Eigen::Map<const Vector>(p.data(),
                                                               static_cast<Eigen::Index>(p.size())))});
      } else {
        cfg.kernels.push_back({s.argument, KernelConfig::with_defaults(variant, D)});
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidInput& e) {
      throw ConfigError(source, entry_line(&s, "log_params"), e.what());
    }
  }
  if (cfg.kernels.empty()) {
    const int D = cfg.simulator.num_classes;
    cfg.kernels.push_back({"linear", KernelConfig::with_defaults(KernelVariant::Linear, D)});
    cfg.kernels.push_back({"se", KernelConfig::with_defaults(KernelVariant::SquaredExponential, D)});
    cfg.kernels.push_back({"composite", KernelConfig::with_defaults(KernelVariant::Composite, D)});
  }

  {
    Reader r(source, doc.find("cart"));
    cfg.cart.min_leaf = r.get<int>("min_leaf", cfg.cart.min_leaf);
    cfg.cart.max_depth = r.get<int>("max_depth", cfg.cart.max_depth);
    cfg.cart.min_impurity_decrease =
        r.get<double>("min_impurity_decrease", cfg.cart.min_impurity_decrease);
  }

  Section* exp_section = doc.find("experiment");
  {
    Reader r(source, exp_section);
    cfg.replications = r.get<int>("replications", cfg.replications);
    cfg.alpha = r.get<double>("alpha", cfg.alpha);
    cfg.output_dir = r.get<std::string>("output_dir", cfg.output_dir.string());
    cfg.master_seed = r.get<std::uint64_t>("master_seed", cfg.master_seed);
    const auto split = r.get<std::string>("split", "temporal");
    if (split == "temporal") {
      cfg.split = SplitPolicy::Temporal;
    } else if (split == "random") {
      cfg.split = SplitPolicy::Random;
    } else {
      throw ConfigError(source, entry_line(exp_section, "split"),
                        "field 'split' expects temporal or random");
    }
  }

  reject_unused(doc, source);
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(source, 0, e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_file(path), path.string());
}

}  // namespace qosgp
