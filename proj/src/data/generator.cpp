#include "ctra/data/generator.hpp"

#include "ctra/core/decimal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace ctra::data {

namespace {

/// Transforms over raw mt19937_64 output; std distributions differ between libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  /// [0, 1)
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }
  /// [lo, hi]
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(bits() % span);
  }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  double lognormal(double sigma) { return std::exp(sigma * normal()); }
  bool chance(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(bits() % i)]);
    }
  }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(bits() % v.size())];
  }

 private:
  std::mt19937_64 engine_;
};

constexpr std::int64_t kSecond = kMicrosPerSecond;

std::string hex_id(Rng& rng, int groups) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (int g = 0; g < groups; ++g) {
    if (g) out += '-';
    std::uint64_t x = rng.bits();
    for (int i = 0; i < (g == 0 ? 8 : 4); ++i, x >>= 4) out += digits[x & 15];
  }
  return out;
}

std::string workflow_id(std::int64_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "wf-%04x",
                static_cast<unsigned>((static_cast<std::uint64_t>(index + 1) * 2654435761ULL) & 0xffff));
  return buf;
}

std::string lab_id(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "lab-%02lld", static_cast<long long>(index + 1));
  return buf;
}

std::int32_t lab_offset_minutes(std::int64_t index) {
  static const std::int32_t offsets[] = {0, -300, 60, 330, -480, 540};
  return offsets[index % 6];
}

Timestamp at(std::int64_t micros, std::int32_t offset) { return Timestamp{micros, offset}; }

std::string iso(std::int64_t micros, std::int32_t offset) { return at(micros, offset).to_rfc3339(); }

/// Positive draws scaled so their sum is exactly `total`; residual lands on the last draw.
std::vector<std::int64_t> calibrated_delays(Rng& rng, std::size_t n, std::int64_t mean, double sigma) {
  std::vector<double> raw(n);
  double sum = 0;
  for (auto& x : raw) {
    x = rng.lognormal(sigma);
    sum += x;
  }
  std::vector<std::int64_t> out(n);
  if (n == 0) return out;
  const long double total = static_cast<long double>(mean) * static_cast<long double>(n);
  std::int64_t acc = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    out[i] = std::llround(static_cast<long double>(raw[i]) / sum * total);
    acc += out[i];
  }
  out[n - 1] = mean * static_cast<std::int64_t>(n) - acc;
  if (out[n - 1] < 0) {
    // Pathological draw; shift the deficit onto the largest delay.
    auto it = std::max_element(out.begin(), out.end() - 1);
    *it += out[n - 1];
    out[n - 1] = 0;
  }
  return out;
}

/// Per-workflow ERROR log totals: the hot one first, then the rest in workflow order.
std::vector<std::int64_t> workflow_error_totals(Rng& rng, const GenerationProfile& p, std::size_t hot) {
  std::vector<std::int64_t> totals(static_cast<std::size_t>(p.workflow_count), 0);
  totals[hot] = p.hot_workflow_errors;
  const long double budget =
      static_cast<long double>(p.hot_workflow_errors) * (1.0L - p.hot_error_share) / p.hot_error_share;
  long double sum = 0;
  for (std::size_t w = 0; w < totals.size(); ++w) {
    if (w == hot) continue;
    totals[w] = rng.uniform_int(p.other_workflow_errors_min, p.other_workflow_errors_max);
    sum += totals[w];
  }
  if (sum > budget) {
    for (std::size_t w = 0; w < totals.size(); ++w) {
      if (w == hot) continue;
      totals[w] = std::max(p.other_workflow_errors_min,
                           static_cast<std::int64_t>(std::floor(totals[w] * budget / sum)));
    }
  }
  return totals;
}

const std::vector<std::string> kJobNames = {
    "Liquid transfer", "Plate incubation", "Sample prep",   "Plate read",     "Centrifuge spin",
    "Barcode scan",    "Reagent dispense", "Thermal cycle", "Plate seal",     "Colony pick",
    "Cell count",      "Media exchange",   "Wash cycle",    "Sample storage", "QC imaging"};

const std::vector<std::string> kErrorMessages = {
    "Liquid handler aspiration failure",   "Plate not detected at deck position",
    "Barcode read failed",                 "Instrument communication timeout",
    "Tip pickup failed",                   "Incubator door interlock open",
    "Reagent volume below threshold",      "Gripper collision detected"};

const std::vector<std::string> kDurations = {"15m", "30m", "45m", "1h", "2h", "90s", "overnight"};

}  // namespace

std::int64_t GenerationProfile::record_count() const {
  std::int64_t n = 0;
  for (const auto& s : states) n += s.count;
  return n;
}

GenerationProfile GenerationProfile::with_record_count(std::int64_t n) const {
  if (n < 0) throw InvalidProfile("record count must be non-negative");
  GenerationProfile out = *this;
  const std::int64_t total = record_count();
  if (total == 0 || n == total) return out;
  std::vector<std::pair<std::int64_t, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    const std::int64_t scaled = states[i].count * n;
    out.states[i].count = scaled / total;
    assigned += out.states[i].count;
    remainders.emplace_back(scaled % total, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) out.states[remainders[k].second].count += 1;
  return out;
}

void GenerationProfile::validate() const {
  if (period_days <= 0) throw InvalidProfile("period_days must be positive");
  if (lab_count <= 0) throw InvalidProfile("labs must be positive");
  if (workflow_count <= 0) throw InvalidProfile("workflows must be positive");
  if (states.empty()) throw InvalidProfile("at least one state is required");
  for (const auto& s : states) {
    if (s.state.empty()) throw InvalidProfile("state name must not be empty");
    if (s.count < 0) throw InvalidProfile("state " + s.state + ": negative count");
    if (!(s.started_fraction >= 0 && s.started_fraction <= 1)) {
      throw InvalidProfile("state " + s.state + ": started_fraction outside [0, 1]");
    }
    if (s.mean_start_delay_micros < 0) throw InvalidProfile("state " + s.state + ": negative mean delay");
    if (!(s.delay_sigma >= 0)) throw InvalidProfile("state " + s.state + ": negative delay sigma");
  }
  if (hot_workflow_errors < 0) throw InvalidProfile("hot_workflow_errors must be non-negative");
  if (other_workflow_errors_min < 0 || other_workflow_errors_max < other_workflow_errors_min) {
    throw InvalidProfile("other workflow error range is empty or negative");
  }
  if (!(hot_error_share > 0 && hot_error_share < 1)) throw InvalidProfile("hot_error_share outside (0, 1)");
}

GenerationProfile GenerationProfile::from_config(const KeyValueConfig& c) {
  GenerationProfile p = default_profile();
  try {
    if (auto v = c.get("period_start")) p.period_start = Timestamp::parse(*v);
  } catch (const TimestampError& e) {
    throw InvalidProfile(std::string("period_start: ") + e.what());
  }
  auto read_int = [&](const std::string& key, std::int64_t& field) {
    try {
      if (auto v = c.get_int(key)) field = *v;
    } catch (const ConfigError& e) {
      throw InvalidProfile(e.what());
    }
  };
  auto read_double = [&](const std::string& key, double& field) {
    try {
      if (auto v = c.get_double(key)) field = *v;
    } catch (const ConfigError& e) {
      throw InvalidProfile(e.what());
    }
  };
  read_int("period_days", p.period_days);
  read_int("labs", p.lab_count);
  read_int("workflows", p.workflow_count);
  read_int("hot_workflow_errors", p.hot_workflow_errors);
  read_int("other_workflow_errors_min", p.other_workflow_errors_min);
  read_int("other_workflow_errors_max", p.other_workflow_errors_max);
  read_double("hot_error_share", p.hot_error_share);

  if (auto list = c.get("states")) {
    std::vector<StateProfile> states;
    std::size_t pos = 0;
    while (pos <= list->size()) {
      std::size_t comma = list->find(',', pos);
      if (comma == std::string::npos) comma = list->size();
      std::string name = list->substr(pos, comma - pos);
      name.erase(0, name.find_first_not_of(' '));
      name.erase(name.find_last_not_of(' ') + 1);
      if (!name.empty()) {
        StateProfile s;
        s.state = name;
        for (const auto& d : p.states) {
          if (d.state == name) s = d;
        }
        states.push_back(s);
      }
      pos = comma + 1;
    }
    p.states = std::move(states);
  }
  for (auto& s : p.states) {
    const std::string prefix = "state." + s.state + ".";
    read_int(prefix + "count", s.count);
    read_double(prefix + "started_fraction", s.started_fraction);
    read_double(prefix + "delay_sigma", s.delay_sigma);
    if (auto v = c.get(prefix + "mean_start_delay")) {
      auto d = Decimal::parse(*v);
      if (!d) throw InvalidProfile(prefix + "mean_start_delay: not a number: " + *v);
      s.mean_start_delay_micros = std::stoll((*d * Decimal(kSecond)).to_fixed(0));
    }
  }
  if (auto n = c.get_int("records")) p = p.with_record_count(*n);
  p.validate();
  return p;
}

KeyValueConfig GenerationProfile::to_config() const {
  KeyValueConfig c;
  c.set("period_start", period_start.to_rfc3339());
  c.set("period_days", std::to_string(period_days));
  c.set("labs", std::to_string(lab_count));
  c.set("workflows", std::to_string(workflow_count));
  c.set("hot_workflow_errors", std::to_string(hot_workflow_errors));
  c.set("other_workflow_errors_min", std::to_string(other_workflow_errors_min));
  c.set("other_workflow_errors_max", std::to_string(other_workflow_errors_max));
  c.set("hot_error_share", Decimal::parse(std::to_string(hot_error_share))->to_string(6));
  std::string names;
  for (const auto& s : states) {
    if (!names.empty()) names += ",";
    names += s.state;
    const std::string prefix = "state." + s.state + ".";
    c.set(prefix + "count", std::to_string(s.count));
    c.set(prefix + "started_fraction", Decimal::parse(std::to_string(s.started_fraction))->to_string(6));
    c.set(prefix + "delay_sigma", Decimal::parse(std::to_string(s.delay_sigma))->to_string(6));
    c.set(prefix + "mean_start_delay", Decimal::from_micros(s.mean_start_delay_micros).to_string(6));
  }
  c.set("states", names);
  return c;
}

GenerationProfile default_profile() {
  GenerationProfile p;
  p.states = {
      {"COMPLETED", 3512, 1.0, 8'693'340'000, 1.1},
      {"IN_ERROR", 742, 0.95, 41'500'000, 0.8},
      {"CANCELLED", 388, 0.6, 3'398'240'000, 1.2},
      {"RUNNING", 97, 1.0, 3'486'020'000, 0.9},
      {"PAUSED", 54, 1.0, 33'130'000, 0.7},
      {"UNSCHEDULED", 238, 0.1, 5'991'090'000, 1.0},
  };
  return p;
}

std::string hot_workflow_id(const GenerationProfile& profile) {
  return workflow_id(profile.workflow_count > 2 ? 2 : 0);
}

std::vector<JobRecord> generate_synthetic(std::uint64_t seed, const GenerationProfile& profile) {
  profile.validate();
  Rng rng(seed);
  const std::int64_t n = profile.record_count();
  const std::size_t hot = profile.workflow_count > 2 ? 2 : 0;

  // State per record, shuffled.
  std::vector<std::size_t> state_of;
  for (std::size_t s = 0; s < profile.states.size(); ++s) {
    state_of.insert(state_of.end(), static_cast<std::size_t>(profile.states[s].count), s);
  }
  rng.shuffle(state_of);

  // Which records started, and their calibrated creation-to-start delays.
  std::vector<std::optional<std::int64_t>> delay(static_cast<std::size_t>(n));
  for (std::size_t s = 0; s < profile.states.size(); ++s) {
    const auto& sp = profile.states[s];
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < state_of.size(); ++i) {
      if (state_of[i] == s) members.push_back(i);
    }
    auto started = static_cast<std::size_t>(std::llround(sp.started_fraction * static_cast<double>(members.size())));
    rng.shuffle(members);
    members.resize(started);
    std::sort(members.begin(), members.end());
    const auto delays = calibrated_delays(rng, members.size(), sp.mean_start_delay_micros, sp.delay_sigma);
    for (std::size_t k = 0; k < members.size(); ++k) delay[members[k]] = delays[k];
  }

  // Workflows round-robin then shuffled, so every workflow has jobs when n allows.
  std::vector<std::size_t> workflow_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < workflow_of.size(); ++i) {
    workflow_of[i] = i % static_cast<std::size_t>(profile.workflow_count);
  }
  rng.shuffle(workflow_of);

  const std::int64_t period = profile.period_days * kMicrosPerDay;
  std::vector<std::int64_t> created(static_cast<std::size_t>(n));
  for (auto& c : created) {
    c = profile.period_start.micros_since_epoch +
        static_cast<std::int64_t>(rng.uniform() * static_cast<double>(period / kSecond)) * kSecond;
  }

  // ERROR entries per record: each workflow total is scattered over its jobs,
  // IN_ERROR jobs weighted five to one.
  std::vector<std::int64_t> errors(static_cast<std::size_t>(n), 0);
  const auto totals = workflow_error_totals(rng, profile, hot);
  for (std::size_t w = 0; w < totals.size(); ++w) {
    std::vector<std::size_t> weighted;
    for (std::size_t i = 0; i < workflow_of.size(); ++i) {
      if (workflow_of[i] != w) continue;
      const int weight = profile.states[state_of[i]].state == "IN_ERROR" ? 5 : 1;
      weighted.insert(weighted.end(), static_cast<std::size_t>(weight), i);
    }
    if (weighted.empty()) continue;
    for (std::int64_t e = 0; e < totals[w]; ++e) errors[rng.pick(weighted)] += 1;
  }

  std::vector<JobRecord> records(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < records.size(); ++i) {
    JobRecord& r = records[i];
    const std::string& state = profile.states[state_of[i]].state;
    const auto lab = rng.uniform_int(0, profile.lab_count - 1);
    const std::int32_t off = lab_offset_minutes(lab);

    r.id = hex_id(rng, 5);
    r.name = rng.pick(kJobNames);
    r.lab_id = lab_id(lab);
    r.workflow_id = workflow_id(static_cast<std::int64_t>(workflow_of[i]));
    r.state = state;
    r.created_timestamp = at(created[i], off);

    std::int64_t end = created[i];
    if (delay[i]) {
      const std::int64_t started = created[i] + *delay[i];
      r.started_timestamp = at(started, off);
      end = started;
      if (state == "COMPLETED" || state == "IN_ERROR" || state == "CANCELLED") {
        const double scale = state == "COMPLETED" ? 1800.0 : 600.0;
        end = started + std::llround(scale * rng.lognormal(0.8)) * kSecond;
        r.completed_timestamp = at(end, off);
      }
    } else if (state == "CANCELLED") {
      end = created[i] + rng.uniform_int(60, 7200) * kSecond;
      r.completed_timestamp = at(end, off);
    }

    if (rng.chance(0.8)) r.root_action_id = "act-" + hex_id(rng, 1);
    if (rng.chance(0.5)) r.lab_reference = "REF-" + std::to_string(rng.uniform_int(10000, 99999));

    r.associated_ids = JsonValue{{"sample_ids", JsonValue::array()}};
    for (auto k = rng.uniform_int(1, 3); k > 0; --k) {
      r.associated_ids->at("sample_ids").push_back("S-" + std::to_string(rng.uniform_int(100000, 999999)));
    }

    JsonValue params = {{"volume_ul", rng.uniform_int(5, 500)},
                        {"duration", rng.pick(kDurations)},
                        {"temperature_c", std::to_string(rng.uniform_int(4, 95))}};
    if (rng.chance(0.3)) params["retries"] = rng.uniform_int(0, 3);
    r.parameters = std::move(params);

    if (state == "COMPLETED") {
      r.outputs = JsonValue{{"status", "ok"}, {"result_count", rng.uniform_int(1, 96)}};
    }
    if (rng.chance(0.7)) {
      r.barcodes = JsonValue::array();
      for (auto k = rng.uniform_int(1, 2); k > 0; --k) {
        r.barcodes->push_back("BC" + std::to_string(rng.uniform_int(10000000, 99999999)));
      }
    }
    if (rng.chance(0.1)) r.batched_job_ids = JsonValue::array({hex_id(rng, 5)});
    if (rng.chance(0.05)) r.children_job_ids = JsonValue::array({hex_id(rng, 5), hex_id(rng, 5)});

    if (delay[i]) {
      JsonValue recs = JsonValue::array();
      const std::int64_t begin = created[i] + *delay[i];
      const std::int64_t stop = std::max(end, begin + (r.completed_timestamp ? 0 : 300 * kSecond));
      const auto k = rng.uniform_int(1, 4);
      for (std::int64_t e = 0; e < k; ++e) {
        const std::int64_t s = begin + (stop - begin) * e / k;
        const std::int64_t f = begin + (stop - begin) * (e + 1) / k;
        recs.push_back({{"event_type", e == 0 ? "START" : "STEP"},
                        {"name", rng.pick(kJobNames)},
                        {"started_timestamp", iso(s, off)},
                        {"finished_timestamp", iso(f, off)}});
      }
      r.execution_records = std::move(recs);
    }

    JsonValue logs = JsonValue::array();
    logs.push_back({{"level", "INFO"}, {"message", "Job created"}, {"created_timestamp", iso(created[i], off)}});
    if (delay[i]) {
      logs.push_back({{"level", "INFO"},
                      {"message", "Job started"},
                      {"created_timestamp", iso(created[i] + *delay[i], off)}});
    }
    const std::int64_t span = std::max<std::int64_t>(end - created[i], 0);
    for (std::int64_t e = 0; e < errors[i]; ++e) {
      const std::int64_t t = created[i] + (errors[i] > 0 ? span * (e + 1) / (errors[i] + 1) : 0);
      logs.push_back({{"level", "ERROR"}, {"message", rng.pick(kErrorMessages)}, {"created_timestamp", iso(t, off)}});
    }
    if (rng.chance(0.15)) {
      logs.push_back({{"level", "WARNING"}, {"message", "Deck temperature drift"}, {"created_timestamp", iso(end, off)}});
    }
    r.logs = std::move(logs);

    if (errors[i] > 0 || rng.chance(0.6)) {
      JsonValue notes = JsonValue::object();
      if (errors[i] > 0) notes["error_count"] = errors[i];
      if (rng.chance(0.3)) notes["operator"] = "op-" + std::to_string(rng.uniform_int(1, 20));
      r.notes = std::move(notes);
    }
    if (rng.chance(0.4)) r.files = JsonValue::array({"s3://lab-data/" + r.id + "/raw.csv"});
    r.configuration_versions = JsonValue{{"protocol", "v" + std::to_string(rng.uniform_int(1, 5))},
                                         {"firmware", "2." + std::to_string(rng.uniform_int(0, 9))}};
  }

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return created[a] < created[b]; });
  std::vector<JobRecord> sorted;
  sorted.reserve(records.size());
  for (std::size_t i : order) sorted.push_back(std::move(records[i]));
  return sorted;
}

}  // namespace ctra::data
