#pragma once

// File formats.
//
//   prices     CSV, header `date,price`, ISO dates; weekends dropped
//   series     CSV, header `t,x` (deseasonalised path on the weekday grid)
//   samples    JSON Lines: a schema header record, then one record per
//              retained chain state
//   everything else is a single JSON document
//
// Doubles are written in shortest round-trip form, so save/load is exact.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "spotmcmc/diagnostics.hpp"
#include "spotmcmc/mcmc.hpp"
#include "spotmcmc/model.hpp"
#include "spotmcmc/priors.hpp"
#include "spotmcmc/seasonal.hpp"
#include "spotmcmc/selection.hpp"
#include "spotmcmc/simulate.hpp"

namespace spotmcmc {

using json = nlohmann::json;

/// Input rejected while parsing; `line` is 1-based (0 when not line-specific).
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError("not a number: '" + s + "'", line);
  }
  if (used != s.size() || !std::isfinite(v)) throw InputError("not a finite number: '" + s + "'", line);
  return v;
}

/// Non-empty lines with their 1-based line numbers; strips a UTF-8 BOM and CR.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    out.emplace_back(no, line);
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

}  // namespace detail

/// Dated prices from CSV text. Rows are sorted by date; a repeated date is an
/// error. Non-positive prices are kept (the seasonal fit repairs them).
inline CalendarSeries parse_price_csv(std::istream& in) {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw InputError("empty file");
  const auto header = detail::split_csv_line(lines.front().second);
  if (header.size() != 2 || header[0] != "date" || header[1] != "price") {
    throw InputError("expected header 'date,price'", lines.front().first);
  }
  struct Row {
    Date date;
    double price;
    std::size_t line;
  };
  std::vector<Row> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [no, text] = lines[k];
    const auto cells = detail::split_csv_line(text);
    if (cells.size() != 2) throw InputError("expected 2 fields, found " + std::to_string(cells.size()), no);
    Date d;
    try {
      d = parse_iso_date(cells[0]);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what(), no);
    }
    rows.push_back({d, detail::parse_number(cells[1], no), no});
  }
  if (rows.empty()) throw InputError("no data rows");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return std::chrono::sys_days{a.date} < std::chrono::sys_days{b.date}; });
  std::vector<Date> dates;
  std::vector<double> prices;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0 && rows[k].date == rows[k - 1].date) {
      throw InputError("duplicate date " + format_iso_date(rows[k].date) + " (also on line " +
                           std::to_string(rows[k - 1].line) + ")",
                       rows[k].line);
    }
    dates.push_back(rows[k].date);
    prices.push_back(rows[k].price);
  }
  return CalendarSeries(dates, prices);
}

inline CalendarSeries ingest_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_price_csv(in);
}

/// Reads a `t,x` series.
inline PricePath parse_series_csv(std::istream& in) {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw InputError("empty file");
  const auto header = detail::split_csv_line(lines.front().second);
  if (header.size() < 2 || header[0] != "t" || header[1] != "x") throw InputError("expected header 't,x'", lines.front().first);
  std::vector<double> t;
  std::vector<double> x;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [no, text] = lines[k];
    const auto cells = detail::split_csv_line(text);
    if (cells.size() != header.size()) throw InputError("expected " + std::to_string(header.size()) + " fields", no);
    t.push_back(detail::parse_number(cells[0], no));
    x.push_back(detail::parse_number(cells[1], no));
  }
  if (t.empty()) throw InputError("no data rows");
  try {
    return PricePath(TimeGrid(std::move(t)), std::move(x));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

/// Reads a `t,x` series, or a `date,price` file which is then
/// deseasonalised with a fresh seasonal fit.
inline PricePath load_series(const std::string& path) {
  auto in = detail::open_input(path);
  std::string first;
  std::getline(in, first);
  if (first.rfind("\xEF\xBB\xBF", 0) == 0) first.erase(0, 3);
  in.clear();
  in.seekg(0);
  if (detail::trim(first).rfind("date", 0) == 0) {
    const auto series = parse_price_csv(in);
    return deseasonalize(series, fit_seasonal(series).coefficients);
  }
  return parse_series_csv(in);
}

/// Column-named numeric table written as CSV.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write(std::ostream& out) const {
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (c) out << ',';
        if (std::isfinite(r[c])) {
          out << json(r[c]).dump();
        } else {
          out << "nan";
        }
      }
      out << '\n';
    }
  }
  void write(const std::string& path) const {
    auto out = detail::open_output(path);
    write(out);
  }
};

inline Table series_table(const PricePath& p) {
  Table t{{"t", "x"}, {}};
  for (std::size_t j = 0; j < p.size(); ++j) t.rows.push_back({p.grid[j], p.values[j]});
  return t;
}

// ---------------------------------------------------------------------------
// JSON conversions

inline void to_json(json& j, const IntensityKind& k) { j = k == IntensityKind::constant ? "constant" : "periodic"; }
inline void from_json(const json& j, IntensityKind& k) {
  const auto s = j.get<std::string>();
  if (s == "constant") {
    k = IntensityKind::constant;
  } else if (s == "periodic") {
    k = IntensityKind::periodic;
  } else {
    throw std::invalid_argument("unknown intensity kind '" + s + "'");
  }
}

inline void to_json(json& j, const JumpComponentSpec& c) { j = {{"sign", c.sign}, {"kind", c.kind}, {"period", c.period}}; }
inline void from_json(const json& j, JumpComponentSpec& c) {
  c.sign = j.value("sign", 1);
  c.kind = j.value("kind", IntensityKind::constant);
  c.period = j.value("period", 130.0);
}

/// Either {"components": [...]} or the shorthand {"positive": p, "negative": q}.
inline void to_json(json& j, const ModelSpec& s) { j = {{"components", s.components}, {"label", s.label()}}; }
inline void from_json(const json& j, ModelSpec& s) {
  if (j.contains("components")) {
    s.components = j.at("components").get<std::vector<JumpComponentSpec>>();
  } else {
    s = ModelSpec::with_signs(j.value("positive", std::size_t{0}), j.value("negative", std::size_t{0}));
    if (j.contains("periodic")) {
      for (std::size_t i : j.at("periodic").get<std::vector<std::size_t>>()) {
        if (i >= s.n()) throw std::invalid_argument("model: periodic component index out of range");
        s.components[i].kind = IntensityKind::periodic;
        s.components[i].period = j.value("period", 130.0);
      }
    }
  }
  s.validate();
}

inline void to_json(json& j, const JumpParams& p) {
  j = {{"rho", p.rho}, {"lambda", p.lambda()}, {"eta", p.eta}, {"beta", p.beta}, {"theta", p.theta}, {"delta", p.delta}};
}
inline void from_json(const json& j, JumpParams& p) {
  if (j.contains("rho")) {
    p.rho = j.at("rho").get<double>();
  } else {
    p.rho = lambda_to_rho(j.at("lambda").get<double>());
  }
  p.eta = j.at("eta").get<double>();
  p.beta = j.at("beta").get<double>();
  p.theta = j.value("theta", 0.0);
  p.delta = j.value("delta", 1.0);
}

inline void to_json(json& j, const Params& p) {
  j = {{"mu", p.mu}, {"sigma2", p.sigma2}, {"rho0", p.rho0}, {"lambda0", p.lambda0()}, {"jumps", p.jumps}};
}
inline void from_json(const json& j, Params& p) {
  p.mu = j.at("mu").get<double>();
  if (j.contains("sigma2")) {
    p.sigma2 = j.at("sigma2").get<double>();
  } else {
    const double s = j.at("sigma").get<double>();
    p.sigma2 = s * s;
  }
  p.rho0 = j.contains("rho0") ? j.at("rho0").get<double>() : lambda_to_rho(j.at("lambda0").get<double>());
  p.jumps = j.value("jumps", std::vector<JumpParams>{});
}

inline void to_json(json& j, const MarkedPointProcess& phi) {
  std::vector<double> times;
  std::vector<double> sizes;
  for (const auto& x : phi) {
    times.push_back(x.time);
    sizes.push_back(x.size);
  }
  j = {{"times", times}, {"sizes", sizes}};
}

inline MarkedPointProcess phi_from_json(const json& j, double horizon) {
  const auto times = j.at("times").get<std::vector<double>>();
  const auto sizes = j.at("sizes").get<std::vector<double>>();
  if (times.size() != sizes.size()) throw std::invalid_argument("jump list: times/sizes length mismatch");
  std::vector<Jump> jumps;
  for (std::size_t k = 0; k < times.size(); ++k) jumps.push_back({times[k], sizes[k]});
  return MarkedPointProcess(horizon, std::move(jumps));
}

inline void to_json(json& j, const NormalDist& d) {
  j = d.proper() ? json{{"family", "normal"}, {"mean", d.mean}, {"sd", d.sd}} : json{{"family", "flat"}};
}
inline void from_json(const json& j, NormalDist& d) {
  if (j.value("family", std::string("normal")) == "flat") {
    d = {0.0, std::numeric_limits<double>::infinity()};
  } else {
    d = {j.at("mean").get<double>(), j.at("sd").get<double>()};
  }
}

inline void to_json(json& j, const InverseGammaDist& d) { j = {{"family", "inverse_gamma"}, {"shape", d.shape}, {"scale", d.scale}}; }
inline void from_json(const json& j, InverseGammaDist& d) { d = {j.at("shape").get<double>(), j.at("scale").get<double>()}; }
inline void to_json(json& j, const GammaDist& d) { j = {{"family", "gamma"}, {"shape", d.shape}, {"rate", d.rate}}; }
inline void from_json(const json& j, GammaDist& d) { d = {j.at("shape").get<double>(), j.at("rate").get<double>()}; }
inline void to_json(json& j, const UniformDist& d) { j = {{"family", "uniform"}, {"lo", d.lo}, {"hi", d.hi}}; }
inline void from_json(const json& j, UniformDist& d) { d = {j.at("lo").get<double>(), j.at("hi").get<double>()}; }

inline void to_json(json& j, const Sigma2Prior& p) {
  std::visit([&j](const auto& d) { j = d; }, p);
}
inline void from_json(const json& j, Sigma2Prior& p) {
  const auto family = j.at("family").get<std::string>();
  if (family == "inverse_gamma") {
    p = j.get<InverseGammaDist>();
  } else if (family == "uniform") {
    p = j.get<UniformDist>();
  } else {
    throw std::invalid_argument("sigma2 prior: unknown family '" + family + "'");
  }
}

inline void to_json(json& j, const EtaPrior& p) {
  if (const auto* g = std::get_if<GammaDist>(&p)) {
    j = *g;
  } else {
    j = {{"family", "flat"}};
  }
}
inline void from_json(const json& j, EtaPrior& p) {
  const auto family = j.at("family").get<std::string>();
  if (family == "gamma") {
    p = j.get<GammaDist>();
  } else if (family == "flat") {
    p = FlatPositive{};
  } else {
    throw std::invalid_argument("eta prior: unknown family '" + family + "'");
  }
}

inline void to_json(json& j, const ComponentPrior& c) {
  j = {{"beta", c.beta}, {"eta", c.eta}, {"delta", c.delta}, {"theta", c.theta}};
}
inline void from_json(const json& j, ComponentPrior& c) {
  ComponentPrior d;
  c.beta = j.contains("beta") ? j.at("beta").get<InverseGammaDist>() : d.beta;
  c.eta = j.contains("eta") ? j.at("eta").get<EtaPrior>() : d.eta;
  c.delta = j.contains("delta") ? j.at("delta").get<GammaDist>() : d.delta;
  c.theta = j.contains("theta") ? j.at("theta").get<UniformDist>() : d.theta;
}

inline void to_json(json& j, const PriorSpec& p) { j = {{"mu", p.mu}, {"sigma2", p.sigma2}, {"jumps", p.jumps}}; }

/// Missing entries take the defaults for `spec`.
inline PriorSpec priors_from_json(const json& j, const ModelSpec& spec) {
  PriorSpec p = default_priors(spec);
  if (j.is_null()) return p;
  if (j.contains("mu")) p.mu = j.at("mu").get<NormalDist>();
  if (j.contains("sigma2")) p.sigma2 = j.at("sigma2").get<Sigma2Prior>();
  if (j.contains("jumps")) {
    const auto& arr = j.at("jumps");
    if (arr.size() != spec.n()) throw std::invalid_argument("priors: one jump prior per component required");
    for (std::size_t i = 0; i < spec.n(); ++i) {
      json merged = json(p.jumps[i]);
      merged.update(arr[i]);
      p.jumps[i] = merged.get<ComponentPrior>();
    }
  }
  p.validate(spec);
  return p;
}

inline void to_json(json& j, const ComponentScales& s) {
  j = {{"rho", s.rho}, {"eta", s.eta}, {"theta", s.theta}, {"delta", s.delta}};
}
inline void from_json(const json& j, ComponentScales& s) {
  ComponentScales d;
  s.rho = j.value("rho", d.rho);
  s.eta = j.value("eta", d.eta);
  s.theta = j.value("theta", d.theta);
  s.delta = j.value("delta", d.delta);
}
inline void to_json(json& j, const ProposalScales& s) { j = {{"rho0", s.rho0}, {"jumps", s.jumps}}; }
inline void from_json(const json& j, ProposalScales& s) {
  s.rho0 = j.value("rho0", ProposalScales{}.rho0);
  s.jumps = j.value("jumps", std::vector<ComponentScales>{});
}

inline void to_json(json& j, const SamplerConfig& c) {
  j = {{"burn_in", c.burn_in},
       {"iterations", c.iterations},
       {"thin", c.thin},
       {"phi_updates", c.phi_updates},
       {"birth_probability", c.birth_probability},
       {"resize_constant", c.resize_constant},
       {"scales", c.scales},
       {"target_low", c.target_low},
       {"target_high", c.target_high},
       {"adapt_window", c.adapt_window},
       {"adapt", c.adapt},
       {"seed", c.seed}};
}

/// Starts from the named profile ("quick" unless given) and applies overrides.
inline void from_json(const json& j, SamplerConfig& c) {
  const auto profile = j.value("profile", std::string("quick"));
  if (profile == "quick") {
    c = SamplerConfig::quick();
  } else if (profile == "full") {
    c = SamplerConfig::full();
  } else {
    throw std::invalid_argument("sampler: unknown profile '" + profile + "'");
  }
  c.burn_in = j.value("burn_in", c.burn_in);
  c.iterations = j.value("iterations", c.iterations);
  c.thin = j.value("thin", c.thin);
  c.phi_updates = j.value("phi_updates", c.phi_updates);
  c.birth_probability = j.value("birth_probability", c.birth_probability);
  c.resize_constant = j.value("resize_constant", c.resize_constant);
  if (j.contains("scales")) c.scales = j.at("scales").get<ProposalScales>();
  c.target_low = j.value("target_low", c.target_low);
  c.target_high = j.value("target_high", c.target_high);
  c.adapt_window = j.value("adapt_window", c.adapt_window);
  c.adapt = j.value("adapt", c.adapt);
  c.seed = j.value("seed", c.seed);
  c.validate();
}

inline void to_json(json& j, const SeasonalFit& f) {
  json coef = json::array();
  for (std::size_t k = 0; k < 6; ++k) {
    coef.push_back({{"name", "a" + std::to_string(k + 1)}, {"estimate", f.coefficients.a[k]}, {"std_error", f.standard_errors[k]}});
  }
  j = {{"coefficients", coef}, {"residual_norm", f.residual_norm}, {"replaced_rows", f.replaced}};
}

inline SeasonalCoefficients coefficients_from_json(const json& j) {
  SeasonalCoefficients c;
  const auto& arr = j.at("coefficients");
  if (arr.size() != 6) throw std::invalid_argument("seasonal coefficients: expected 6 entries");
  for (std::size_t k = 0; k < 6; ++k) c.a[k] = arr[k].at("estimate").get<double>();
  return c;
}

namespace detail {
inline json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double null_to_nan(const json& j) { return j.is_null() ? kUndefined : j.get<double>(); }
}  // namespace detail

inline void to_json(json& j, const PpcCheck& c) {
  json ps = json::array();
  for (double p : c.p_values) ps.push_back(detail::nan_to_null(p));
  j = {{"mean", detail::nan_to_null(c.mean)}, {"p_values", ps}};
}
inline void from_json(const json& j, PpcCheck& c) {
  c.p_values.clear();
  for (const auto& p : j.at("p_values")) c.p_values.push_back(detail::null_to_nan(p));
  c.mean = detail::null_to_nan(j.at("mean"));
}

inline void to_json(json& j, const PpcReport& r) {
  j = {{"threshold", r.threshold},
       {"passes", r.passes()},
       {"residual", r.residual},
       {"marks", r.marks},
       {"inter_arrival", r.inter_arrival}};
}
inline void from_json(const json& j, PpcReport& r) {
  r.threshold = j.at("threshold").get<double>();
  r.residual = j.at("residual").get<PpcCheck>();
  r.marks = j.at("marks").get<std::vector<PpcCheck>>();
  r.inter_arrival = j.at("inter_arrival").get<std::vector<PpcCheck>>();
}

inline void to_json(json& j, const MoveStats& m) { j = {{"proposed", m.proposed}, {"accepted", m.accepted}, {"rate", m.rate()}}; }

inline void to_json(json& j, const AcceptanceStats& a) {
  json comps = json::array();
  for (const auto& c : a.jumps) {
    comps.push_back({{"rho", c.rho},
                     {"eta", c.eta},
                     {"theta", c.theta},
                     {"delta", c.delta},
                     {"birth", c.birth},
                     {"death", c.death},
                     {"displacement", c.displacement},
                     {"resize", c.resize}});
  }
  j = {{"rho0", a.rho0}, {"jumps", comps}};
}

inline void to_json(json& j, const SelectionAttempt& a) {
  j = {{"spec", a.spec}, {"accepted", a.accepted}};
  if (a.report) j["ppc"] = *a.report;
  if (a.holdout_report) j["holdout_ppc"] = *a.holdout_report;
  if (!a.error.empty()) j["error"] = a.error;
}

inline void to_json(json& j, const SelectionResult& r) {
  j = {{"attempts", r.log}, {"accepted", r.accepted() ? json(*r.accepted()) : json(nullptr)}};
}

// ---------------------------------------------------------------------------
// Posterior samples (JSON Lines)

inline constexpr const char* kSamplesSchema = "spotmcmc.samples";
inline constexpr int kSamplesVersion = 1;

struct SampleSet {
  ModelSpec spec;
  double horizon = 0.0;
  std::vector<PosteriorSample> samples;
};

inline json sample_record(const PosteriorSample& s) {
  json jumps = json::array();
  for (std::size_t i = 0; i < s.params.jumps.size(); ++i) {
    json jp = s.params.jumps[i];
    jp.update(json(s.phis[i]));
    jumps.push_back(std::move(jp));
  }
  return {{"iteration", s.iteration},
          {"log_likelihood", s.log_likelihood},
          {"mu", s.params.mu},
          {"sigma2", s.params.sigma2},
          {"rho0", s.params.rho0},
          {"lambda0", s.params.lambda0()},
          {"jumps", jumps}};
}

inline PosteriorSample sample_from_record(const json& j, double horizon) {
  PosteriorSample s;
  s.iteration = j.at("iteration").get<std::uint64_t>();
  s.log_likelihood = j.at("log_likelihood").get<double>();
  s.params = j.get<Params>();
  for (const auto& jp : j.at("jumps")) s.phis.push_back(phi_from_json(jp, horizon));
  return s;
}

inline void write_samples(std::ostream& out, const SampleSet& set) {
  out << json{{"schema", kSamplesSchema}, {"version", kSamplesVersion}, {"spec", set.spec}, {"horizon", set.horizon},
              {"count", set.samples.size()}}
             .dump()
      << '\n';
  for (const auto& s : set.samples) out << sample_record(s).dump() << '\n';
}

inline SampleSet read_samples(std::istream& in) {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw InputError("empty samples file");
  SampleSet set;
  try {
    const auto header = json::parse(lines.front().second);
    if (header.value("schema", std::string()) != kSamplesSchema) throw InputError("not a samples file", lines.front().first);
    if (header.value("version", 0) != kSamplesVersion) throw InputError("unsupported samples version", lines.front().first);
    set.spec = header.at("spec").get<ModelSpec>();
    set.horizon = header.at("horizon").get<double>();
  } catch (const json::exception& e) {
    throw InputError(e.what(), lines.front().first);
  }
  for (std::size_t k = 1; k < lines.size(); ++k) {
    try {
      set.samples.push_back(sample_from_record(json::parse(lines[k].second), set.horizon));
    } catch (const std::exception& e) {
      throw InputError(e.what(), lines[k].first);
    }
  }
  return set;
}

inline void save_samples(const std::string& path, const SampleSet& set) {
  auto out = detail::open_output(path);
  write_samples(out, set);
}

inline SampleSet load_samples(const std::string& path) {
  auto in = detail::open_input(path);
  return read_samples(in);
}

inline void to_json(json& j, const SimulationTruth& t) {
  j = {{"spec", t.spec}, {"params", t.params}, {"horizon", t.observed.grid.horizon()}, {"phis", t.phis}};
}

inline json read_json_file(const std::string& path) {
  auto in = detail::open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("invalid JSON in '") + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace spotmcmc
