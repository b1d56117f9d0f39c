#include "modalme/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace modalme {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // Trim surrounding spaces; blanks stay empty strings.
    const auto b = cell.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
      cells.emplace_back();
    } else {
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(cell.substr(b, e - b + 1));
    }
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, int line_no,
                  const std::string& column) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw ParseError("line " + std::to_string(line_no) + ", column " + column +
                     ": cannot parse '" + cell + "' as a number");
  if (!std::isfinite(value))
    throw ParseError("line " + std::to_string(line_no) + ", column " + column +
                     ": non-finite value");
  return value;
}

struct Header {
  int n_w = 0;       // surrogate columns w_1..w_K
  int n_x_rest = 0;  // error-free covariate columns x_2..x_p
};

Header parse_header(const std::string& line) {
  const auto cells = split_csv_line(line);
  if (cells.empty() || cells[0] != "y")
    throw SchemaError("header must start with column 'y'");
  Header h;
  std::size_t i = 1;
  for (; i < cells.size() && cells[i] == "w_" + std::to_string(h.n_w + 1); ++i)
    ++h.n_w;
  if (h.n_w == 0)
    throw SchemaError("header needs at least one surrogate column 'w_1'");
  for (; i < cells.size() &&
         cells[i] == "x_" + std::to_string(h.n_x_rest + 2);
       ++i)
    ++h.n_x_rest;
  if (i != cells.size())
    throw SchemaError("unexpected header column '" + cells[i] +
                      "'; expected y, w_1..w_K, x_2..x_p");
  return h;
}

std::string fmt(double v) {
  char buf[32];
  snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json summary_json(const EstimatorSummary& s) {
  return {{"median", vec_json(s.median)},
          {"iqr", vec_json(s.iqr)},
          {"se_mean", vec_json(s.se_mean)},
          {"empirical_sd", vec_json(s.empirical_sd)},
          {"n_used", s.n_used}};
}

}  // namespace

Dataset parse_dataset(std::istream& in, bool boundary_transform) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty dataset file");
  const Header h = parse_header(line);

  Dataset data;
  std::vector<int> bad_y_rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    const std::size_t expect = 1 + h.n_w + h.n_x_rest;
    if (cells.size() != expect)
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(expect) + " cells, found " +
                       std::to_string(cells.size()));
    SurrogateRecord r;
    r.y = parse_cell(cells[0], line_no, "y");
    bool blank_seen = false;
    for (int k = 0; k < h.n_w; ++k) {
      const std::string& cell = cells[1 + k];
      const std::string name = "w_" + std::to_string(k + 1);
      if (cell.empty()) {
        blank_seen = true;
        continue;
      }
      if (blank_seen)
        throw ParseError("line " + std::to_string(line_no) + ", column " +
                         name + ": replicate after a blank cell (blanks must "
                         "be trailing)");
      r.w.push_back(parse_cell(cell, line_no, name));
    }
    if (r.w.empty())
      throw ParseError("line " + std::to_string(line_no) +
                       ": no non-blank surrogate cell");
    r.x_rest.resize(h.n_x_rest);
    for (int c = 0; c < h.n_x_rest; ++c)
      r.x_rest(c) =
          parse_cell(cells[1 + h.n_w + c], line_no, "x_" + std::to_string(c + 2));
    data.push_back(std::move(r));
  }
  if (data.empty()) throw SchemaError("dataset has a header but no rows");

  if (boundary_transform) {
    const double n = static_cast<double>(data.size());
    for (auto& r : data) r.y = (r.y * (n - 1.0) + 0.5) / n;
  }
  for (std::size_t j = 0; j < data.size(); ++j)
    if (!(data[j].y > 0.0 && data[j].y < 1.0))
      bad_y_rows.push_back(static_cast<int>(j + 1));
  if (!bad_y_rows.empty()) {
    std::string rows;
    for (std::size_t i = 0; i < bad_y_rows.size(); ++i)
      rows += (i ? ", " : "") + std::to_string(bad_y_rows[i]);
    throw DomainError("response outside (0,1) in data row(s): " + rows +
                      (boundary_transform ? "" :
                       " (consider --boundary-transform)"));
  }
  return data;
}

Dataset parse_dataset(const std::string& path, bool boundary_transform) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  return parse_dataset(in, boundary_transform);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  validate_dataset(data);
  int n_w = 0;
  for (const auto& r : data) n_w = std::max(n_w, r.n_rep());
  const int n_x = static_cast<int>(data.front().x_rest.size());
  out << "y";
  for (int k = 1; k <= n_w; ++k) out << ",w_" << k;
  for (int c = 2; c <= n_x + 1; ++c) out << ",x_" << c;
  out << "\n";
  for (const auto& r : data) {
    out << fmt(r.y);
    for (int k = 0; k < n_w; ++k) {
      out << ",";
      if (k < r.n_rep()) out << fmt(r.w[k]);
    }
    for (int c = 0; c < n_x; ++c) out << "," << fmt(r.x_rest(c));
    out << "\n";
  }
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  write_dataset(out, data);
}

std::string fit_method_to_string(FitMethod m) {
  switch (m) {
    case FitMethod::naive: return "naive";
    case FitMethod::mccl_loglik: return "mccl-loglik";
    case FitMethod::mccl_score: return "mccl-score";
    case FitMethod::mccl_known_sigma: return "mccl-known-sigma";
    case FitMethod::simex: return "simex";
  }
  throw ConfigError("unknown fit method enum value");
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json j{{"method", fit_method_to_string(fit.method)},
                   {"beta", vec_json(fit.omega_hat.beta)},
                   {"log_m", fit.omega_hat.log_m},
                   {"m", fit.omega_hat.m()},
                   {"objective_value", fit.objective_value},
                   {"converged", fit.converged},
                   {"iterations", fit.iterations},
                   {"seed", fit.seed}};
  if (fit.has_covariance()) {
    j["se"] = vec_json(fit.se());
    j["covariance"] = mat_json(fit.covariance);
  } else {
    j["se"] = nullptr;
    j["covariance"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const DiagnosticReport& report) {
  return {{"q_observed", report.q_observed},
          {"q_bootstrap", report.q_bootstrap},
          {"p_value", report.p_value},
          {"m_bootstrap", report.m_bootstrap},
          {"b_inner", report.b_inner},
          {"failures", report.failures},
          {"seed", report.seed}};
}

nlohmann::json to_json(const StudySummary& summary) {
  nlohmann::json j{{"n_replicates", summary.n_replicates},
                   {"failures", summary.failures}};
  j["naive"] = summary.naive ? summary_json(*summary.naive)
                             : nlohmann::json(nullptr);
  j["mccl"] =
      summary.mccl ? summary_json(*summary.mccl) : nlohmann::json(nullptr);
  if (!summary.nominal_levels.empty() &&
      !summary.rejection_rates.empty()) {
    j["nominal_levels"] = summary.nominal_levels;
    j["rejection_rates"] = summary.rejection_rates;
  } else {
    j["nominal_levels"] = nullptr;
    j["rejection_rates"] = nullptr;
  }
  return j;
}

nlohmann::json make_report(const std::string& command, nlohmann::json config,
                           nlohmann::json result) {
  return {{"schema_version", kReportSchemaVersion},
          {"command", command},
          {"config", std::move(config)},
          {"result", std::move(result)}};
}

void write_report(const std::string& path, const nlohmann::json& report) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open report file: " + path);
  out << report.dump(2) << "\n";
}

}  // namespace modalme
